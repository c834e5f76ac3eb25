/*************************************************************************************************
 * Space-time paths and reconstructions
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

#include "otbb/path.hpp"

#include "json.hpp"

namespace otbb {

using json = nlohmann::json;

bool SpaceTimePath::shapes_ok(int n_density, int n_momentum) const {
  if (N < 1 || static_cast<int>(P.size()) != N + 1 || static_cast<int>(M.size()) != N) return false;
  for (const auto& p : P)
    if (p.size() != n_density) return false;
  for (const auto& m : M)
    if (m.size() != n_momentum) return false;
  return true;
}

bool SpaceTimePath::nonnegative(double tol) const {
  for (const auto& p : P)
    if (p.size() > 0 && p.minCoeff() < -tol) return false;
  return true;
}

double chi_profile(double t) { return t <= 0.5 ? 4 * t * t : 4 * (1 - t) * (1 - t); }

SpaceTimePath controllability_from_parts(int N, const Vec& Sx, const Vec& Sy, const Vec& P_hat, const Vec& M_hat1,
                                         const Vec& M_hat2, std::vector<double>* time_factors) {
  require(N >= 1, "N must be positive");
  SpaceTimePath out;
  out.N = N;
  if (N == 1) {
    // Single step: Div(M_hat1 - M_hat2) = S(delta_x) - S(delta_y).
    out.P = {Sx, Sy};
    out.M = {static_cast<double>(N) * (M_hat1 - M_hat2)};
    if (time_factors) time_factors->assign(1, kInf);
    return out;
  }
  const int Ne = N % 2 == 0 ? N : N - 1;
  const int half = Ne / 2;
  const double inv_tau = N;
  std::vector<double> chi(Ne + 1);
  for (int k = 0; k <= Ne; ++k) chi[k] = chi_profile(static_cast<double>(k) / Ne);
  out.P.push_back(Sx);
  if (time_factors) time_factors->clear();
  auto density = [&](int k) -> Vec {
    if (k <= half) return (1 - chi[k]) * Sx + chi[k] * P_hat;
    return (1 - chi[k]) * Sy + chi[k] * P_hat;
  };
  for (int k = 1; k <= Ne; ++k) {
    double dchi = chi[k] - chi[k - 1];
    const Vec& Mh = k <= half ? M_hat1 : M_hat2;
    out.P.push_back(density(k));
    out.M.push_back(dchi * inv_tau * Mh);
    if (time_factors) time_factors->push_back(dchi * dchi * inv_tau / (chi[k] + chi[k - 1]));
    if (k == half && Ne != N) {
      out.P.push_back(density(k));
      out.M.push_back(Vec::Zero(Mh.size()));
      if (time_factors) time_factors->push_back(0);
    }
  }
  out.P.back() = Sy;
  return out;
}

std::string path_to_json(const SpaceTimePath& p) {
  json j;
  j["N"] = p.N;
  j["P"] = json::array();
  for (const auto& v : p.P) j["P"].push_back(std::vector<double>(v.data(), v.data() + v.size()));
  j["M"] = json::array();
  for (const auto& v : p.M) j["M"].push_back(std::vector<double>(v.data(), v.data() + v.size()));
  return j.dump();
}

SpaceTimePath path_from_json(const std::string& text) {
  try {
    json j = json::parse(text);
    SpaceTimePath p;
    p.N = j.at("N").get<int>();
    for (const auto& a : j.at("P")) {
      auto v = a.get<std::vector<double>>();
      p.P.push_back(Eigen::Map<Vec>(v.data(), static_cast<Eigen::Index>(v.size())));
    }
    for (const auto& a : j.at("M")) {
      auto v = a.get<std::vector<double>>();
      p.M.push_back(Eigen::Map<Vec>(v.data(), static_cast<Eigen::Index>(v.size())));
    }
    return p;
  } catch (const std::exception& e) {
    fail(ErrorCode::kInvalidArgument, std::string("path JSON: ") + e.what());
  }
}

}  // namespace otbb
