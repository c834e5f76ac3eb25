/*************************************************************************************************
 * Error codes, number formatting and parallel helpers
 *
 * Copyright 2026 The otbb Authors
 * Licensed under the Apache License, Version 2.0 (the "License"); you may not use this file
 * except in compliance with the License.  You may obtain a copy of the License at
 *     https://www.apache.org/licenses/LICENSE-2.0
 * Unless required by applicable law or agreed to in writing, software distributed under the
 * License is distributed on an "AS IS" BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND,
 * either express or implied.  See the License for the specific language governing permissions
 * and limitations under the License.
 *************************************************************************************************/

#ifndef OTBB_COMMON_HPP
#define OTBB_COMMON_HPP

#include <Eigen/Core>
#include <functional>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace otbb {

// Points live in R^3; lower-dimensional data keeps trailing coordinates at zero.
using Pt = Eigen::Vector3d;
using Vec = Eigen::VectorXd;

inline constexpr double kInf = std::numeric_limits<double>::infinity();
inline constexpr double kPi = 3.14159265358979323846;

// Tolerances shared by assembly and evaluation.
inline constexpr double kMassTol = 1e-12;
inline constexpr double kPinnedMassTol = 1e-10;
inline constexpr double kNegDensityTol = 1e-9;
inline constexpr double kContinuityTol = 1e-8;

enum class ErrorCode {
  kInvalidArgument = 1,
  kIo = 2,
  kMassMismatch = 3,
  kSingular = 4,
  kNotConverged = 5,
  kVerificationFailed = 6,
  kTypeMismatch = 7,
  kOutOfDomain = 8,
  kInternal = 99,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& msg) : std::runtime_error(msg), code_(code) {}
  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] void fail(ErrorCode code, const std::string& msg);

inline void require(bool cond, const std::string& msg) {
  if (!cond) fail(ErrorCode::kInvalidArgument, msg);
}

// Shortest decimal form that round-trips; used for all CSV output.
std::string fmt_double(double v);

// Least-squares slope of log(y) against log(x); non-positive entries are skipped.
double loglog_slope(const std::vector<double>& x, const std::vector<double>& y);

// Worker cap for parallel loops; defaults to OTBB_JOBS or 1.
void set_jobs(int n);
int jobs();
// Runs fn(0..n-1) over contiguous chunks. fn must only write to slots owned by its index.
void parallel_for(int n, const std::function<void(int)>& fn);

}  // namespace otbb

#endif
