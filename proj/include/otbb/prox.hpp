/*************************************************************************************************
 * Proximal maps of the kinetic action
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

#ifndef OTBB_PROX_HPP
#define OTBB_PROX_HPP

#include "otbb/common.hpp"
#include "otbb/fvmodel.hpp"

namespace otbb {

struct KineticProxResult {
  double s = 0;
  Eigen::Vector3d m = Eigen::Vector3d::Zero();
  double kkt = 0;  // stationarity residual, 0 on the (0,0) branch
};

// argmin over s >= 0 of w|m|^2/(2s) + (|s - s0|^2 + |m - m0|^2)/(2 gamma); m has `dim` <= 3 entries.
KineticProxResult prox_kinetic(double s0, const double* m0, int dim, double gamma, double w);
KineticProxResult prox_kinetic(double s0, const Vec& m0, double gamma, double w);

struct MeanProxResult {
  double a = 0, b = 0, m = 0;
  int newton_steps = 0;
  bool fallback = false;
};

// argmin over a, b >= 0 of w m^2/(2 theta(a,b)) + (|a-a0|^2 + |b-b0|^2 + |m-m0|^2)/(2 gamma).
MeanProxResult prox_mean(MeanKind mean, double a0, double b0, double m0, double gamma, double w);

}  // namespace otbb

#endif
