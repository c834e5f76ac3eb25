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

#ifndef OTBB_PATH_HPP
#define OTBB_PATH_HPP

#include <string>
#include <vector>

#include "otbb/common.hpp"

namespace otbb {

// Staggered space-time path: densities P_0..P_N at time nodes, momenta M_1..M_N on intervals.
struct SpaceTimePath {
  int N = 0;
  std::vector<Vec> P;
  std::vector<Vec> M;

  double tau() const { return 1.0 / N; }
  bool shapes_ok(int n_density, int n_momentum) const;
  bool nonnegative(double tol = kNegDensityTol) const;
};

// Explicit path joining the samples of two Dirac masses.
struct ControllabilityPath {
  SpaceTimePath path;
  double cost = 0;
  // (chi_k - chi_{k-1})^2 / (tau (chi_k + chi_{k-1})) per step, tau = 1/N.
  std::vector<double> time_factors;
  Vec P_hat, M_hat1, M_hat2;
  std::vector<int> chain;  // FV only
};

// Time profile of the construction: 4t^2 on [0,1/2], 4(1-t)^2 on [1/2,1].
double chi_profile(double t);

// Builds the path from P_hat, M_hat and the two endpoint samples; handles odd N
// by repeating the middle density with a zero-momentum step.
SpaceTimePath controllability_from_parts(int N, const Vec& Sx, const Vec& Sy, const Vec& P_hat, const Vec& M_hat1,
                                         const Vec& M_hat2, std::vector<double>* time_factors);

std::string path_to_json(const SpaceTimePath& p);
SpaceTimePath path_from_json(const std::string& text);

}  // namespace otbb

#endif
