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

#include "otbb/common.hpp"

#include <charconv>
#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <thread>

namespace otbb {

void fail(ErrorCode code, const std::string& msg) { throw Error(code, msg); }

std::string fmt_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int n = 0;
  for (size_t i = 0; i < x.size() && i < y.size(); ++i) {
    if (!(x[i] > 0) || !(y[i] > 0) || !std::isfinite(y[i])) continue;
    double lx = std::log(x[i]), ly = std::log(y[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
    ++n;
  }
  if (n < 2) return std::nan("");
  double den = n * sxx - sx * sx;
  if (std::abs(den) < 1e-300) return std::nan("");
  return (n * sxy - sx * sy) / den;
}

namespace {

int initial_jobs() {
  const char* e = std::getenv("OTBB_JOBS");
  if (!e) return 1;
  int n = std::atoi(e);
  return n >= 1 ? n : 1;
}

std::atomic<int> g_jobs{initial_jobs()};

}  // namespace

void set_jobs(int n) { g_jobs = n >= 1 ? n : 1; }

int jobs() { return g_jobs; }

void parallel_for(int n, const std::function<void(int)>& fn) {
  int w = std::min(jobs(), n);
  if (w <= 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errs(w);
  for (int t = 0; t < w; ++t)
    pool.emplace_back([&, t] {
      try {
        for (int i = n * t / w; i < n * (t + 1) / w; ++i) fn(i);
      } catch (...) {
        errs[t] = std::current_exception();
      }
    });
  for (auto& th : pool) th.join();
  for (auto& e : errs)
    if (e) std::rethrow_exception(e);
}

}  // namespace otbb
