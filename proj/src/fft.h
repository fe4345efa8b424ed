// meetsep/src/fft.h

// Copyright 2025-2026  Meetsep Authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#ifndef MEETSEP_SRC_FFT_H_
#define MEETSEP_SRC_FFT_H_

#include <complex>
#include <cstddef>

namespace meetsep {

// Real<->half-complex FFT of a fixed size, backed by FFTW (double precision,
// FFTW_ESTIMATE plans for reproducibility). An instance owns its work
// buffers and is not safe for concurrent use; create one per thread.
class RealFft {
 public:
  explicit RealFft(int n);
  ~RealFft();
  RealFft(const RealFft &) = delete;
  RealFft &operator=(const RealFft &) = delete;

  int size() const { return n_; }
  int bins() const { return n_ / 2 + 1; }

  // in: n real samples; out: n/2+1 complex bins.
  void forward(const double *in, std::complex<double> *out);
  // in: n/2+1 complex bins; out: n real samples, scaled by 1/n so that
  // inverse(forward(x)) == x.
  void inverse(const std::complex<double> *in, double *out);

 private:
  int n_;
  void *plan_fwd_;
  void *plan_inv_;
  double *real_buf_;
  void *cplx_buf_;
};

}  // namespace meetsep

#endif  // MEETSEP_SRC_FFT_H_
