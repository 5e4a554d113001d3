// Copyright 2026 The cfrenew Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef CFRENEW_ERRORS_HPP
#define CFRENEW_ERRORS_HPP

#include <stdexcept>
#include <string>
#include <string_view>

namespace cfrenew {

enum class errc {
  rational_input,
  precision_exhausted,
  digit_overflow,
  insufficient_digits,
  trailing_underflow,
  invalid_digits,
  invalid_argument,
  invalid_bins,
  invalid_sample_count,
  budget_exceeded,
  quadrature_failure,
  incompatible_tables,
  out_of_chart,
};

constexpr std::string_view to_string(errc e) noexcept {
  switch (e) {
    case errc::rational_input: return "rational input";
    case errc::precision_exhausted: return "precision exhausted";
    case errc::digit_overflow: return "digit overflow";
    case errc::insufficient_digits: return "insufficient digits";
    case errc::trailing_underflow: return "trailing underflow";
    case errc::invalid_digits: return "invalid digits";
    case errc::invalid_argument: return "invalid argument";
    case errc::invalid_bins: return "invalid bins";
    case errc::invalid_sample_count: return "invalid sample count";
    case errc::budget_exceeded: return "budget exceeded";
    case errc::quadrature_failure: return "quadrature failure";
    case errc::incompatible_tables: return "incompatible tables";
    case errc::out_of_chart: return "out of chart";
  }
  return "unknown error";
}

/// Every failure raised by the library carries one of the codes above so that
/// callers (the CLI in particular) can map it to an exit status.
class error : public std::runtime_error {
 public:
  error(errc code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}
  explicit error(errc code) : std::runtime_error(std::string(to_string(code))), code_(code) {}

  errc code() const noexcept { return code_; }

 private:
  errc code_;
};

}  // namespace cfrenew

#endif  // CFRENEW_ERRORS_HPP
