// meetsep/src/fft.cc

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

#include "fft.h"

#include <fftw3.h>

#include <cstring>
#include <mutex>

#include "meetsep/common.h"

namespace meetsep {

namespace {
// FFTW planning is not thread-safe; execution on distinct plans is.
std::mutex &planner_mutex() {
  static std::mutex m;
  return m;
}
}  // namespace

RealFft::RealFft(int n) : n_(n) {
  if (n < 2) throw_invalid("FFT size must be >= 2, got ", n);
  real_buf_ = fftw_alloc_real(static_cast<size_t>(n));
  fftw_complex *cbuf = fftw_alloc_complex(static_cast<size_t>(n / 2 + 1));
  cplx_buf_ = cbuf;
  std::lock_guard<std::mutex> lock(planner_mutex());
  plan_fwd_ = fftw_plan_dft_r2c_1d(n, real_buf_, cbuf, FFTW_ESTIMATE);
  plan_inv_ = fftw_plan_dft_c2r_1d(n, cbuf, real_buf_, FFTW_ESTIMATE);
  if (plan_fwd_ == nullptr || plan_inv_ == nullptr)
    throw_error("FFTW failed to plan size ", n);
}

RealFft::~RealFft() {
  std::lock_guard<std::mutex> lock(planner_mutex());
  fftw_destroy_plan(static_cast<fftw_plan>(plan_fwd_));
  fftw_destroy_plan(static_cast<fftw_plan>(plan_inv_));
  fftw_free(real_buf_);
  fftw_free(static_cast<fftw_complex *>(cplx_buf_));
}

void RealFft::forward(const double *in, std::complex<double> *out) {
  std::memcpy(real_buf_, in, sizeof(double) * static_cast<size_t>(n_));
  fftw_execute(static_cast<fftw_plan>(plan_fwd_));
  std::memcpy(out, cplx_buf_,
              sizeof(std::complex<double>) * static_cast<size_t>(bins()));
}

void RealFft::inverse(const std::complex<double> *in, double *out) {
  std::memcpy(cplx_buf_, in,
              sizeof(std::complex<double>) * static_cast<size_t>(bins()));
  fftw_execute(static_cast<fftw_plan>(plan_inv_));
  const double scale = 1.0 / n_;
  for (int i = 0; i < n_; ++i) out[i] = real_buf_[i] * scale;
}

}  // namespace meetsep
