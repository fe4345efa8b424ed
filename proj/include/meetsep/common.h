// meetsep/common.h

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

#ifndef MEETSEP_COMMON_H_
#define MEETSEP_COMMON_H_

#include <sstream>
#include <stdexcept>
#include <string>

namespace meetsep {

inline constexpr const char *kVersion = "0.1.0";

// Runtime failures (numerical breakdown, I/O corruption, ...). CLI exit 1.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid inputs, configs or CLI arguments. CLI exit 2.
class ValidationError : public Error {
 public:
  using Error::Error;
};

namespace detail {
inline void format_into(std::ostringstream &) {}
template <typename T, typename... Rest>
void format_into(std::ostringstream &os, const T &head, const Rest &...rest) {
  os << head;
  format_into(os, rest...);
}
}  // namespace detail

template <typename... Args>
[[noreturn]] void throw_error(const Args &...args) {
  std::ostringstream os;
  detail::format_into(os, args...);
  throw Error(os.str());
}

template <typename... Args>
[[noreturn]] void throw_invalid(const Args &...args) {
  std::ostringstream os;
  detail::format_into(os, args...);
  throw ValidationError(os.str());
}

}  // namespace meetsep

#endif  // MEETSEP_COMMON_H_
