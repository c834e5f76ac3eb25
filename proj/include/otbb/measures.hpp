/*************************************************************************************************
 * Measures, pairings and Wasserstein oracles
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

#ifndef OTBB_MEASURES_HPP
#define OTBB_MEASURES_HPP

#include <Eigen/Core>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "otbb/common.hpp"
#include "otbb/quadrature.hpp"

namespace otbb {

struct Atom {
  Pt x = Pt::Zero();
  double w = 0;            // scalar weight
  Pt vw = Pt::Zero();      // vector weight
};

// Piece with a constant density over a region. When `pullback` is set the
// vector density at x is P_x DPsi(x)^T vdensity, with Psi the radial map onto
// the plane {y : n.y = c}; this is how sphere momenta are reconstructed.
struct PlaneMap {
  Pt n;
  double c;
};

struct Piece {
  Region region;
  double density = 0;
  Pt vdensity = Pt::Zero();
  std::optional<PlaneMap> pullback;
};

// Vector density of a piece at a point of its support (pullback applied).
Pt piece_vector_density(const Piece& p, const Pt& x);

class GenericMeasure {
 public:
  GenericMeasure() = default;
  GenericMeasure(int dim, bool vector) : dim_(dim), vector_(vector) {}

  int dim() const { return dim_; }
  bool is_vector() const { return vector_; }
  const std::vector<Atom>& atoms() const { return atoms_; }
  const std::vector<Piece>& pieces() const { return pieces_; }

  void add_atom(const Pt& x, double w);
  void add_vector_atom(const Pt& x, const Pt& w);
  void add_piece(const Region& r, double density);
  void add_vector_piece(const Region& r, const Pt& density, std::optional<PlaneMap> pullback = {});

  // Scalar: signed total mass. Vector: integral of the pointwise norm.
  double mass(int order = 5) const;
  bool is_nonnegative() const;
  GenericMeasure scaled(double s) const;
  // Concatenation; both operands must agree in dim and kind.
  GenericMeasure plus(const GenericMeasure& other) const;

 private:
  int dim_ = 1;
  bool vector_ = false;
  std::vector<Atom> atoms_;
  std::vector<Piece> pieces_;
};

enum class Regularity { kC1, kC2 };

// Scalar test function (value/gradient) or vector field (vvalue/jacobian).
struct TestFunction {
  bool vector = false;
  std::function<double(const Pt&)> value;
  std::function<Pt(const Pt&)> gradient;
  std::function<Pt(const Pt&)> vvalue;
  std::function<Eigen::Matrix3d(const Pt&)> jacobian;
  Regularity regularity = Regularity::kC2;
  double sup0 = 1, sup1 = 1, sup2 = 1;
  std::string name;
};

TestFunction constant_function(double c);
// f(x) = a.x + b
TestFunction affine_function(const Pt& a, double b);
TestFunction vector_constant(const Pt& v);

struct PairResult {
  double value = 0;
  double error_bound = 0;
};

PairResult pair(const GenericMeasure& mu, const TestFunction& f, int order = 5);

// Integral of the pointwise norm of a vector measure (Open Question choice).
double total_variation(const GenericMeasure& mu, int order = 5);

enum class Metric { kFlat, kSphere };

double w2_dirac(const Pt& x, const Pt& y, Metric metric);

// 1-D quantile oracle; exact for atoms and piecewise-constant densities.
double w2_1d_quantile(const GenericMeasure& mu, const GenericMeasure& nu, int grid = 1);

struct W2Plan {
  int src;
  int dst;
  double mass;
};

struct W2Result {
  double value = 0;
  std::vector<W2Plan> plan;
};

// Exact discrete transport LP via successive shortest paths (min-cost flow).
W2Result w2_lp_bruteforce(const GenericMeasure& mu, const GenericMeasure& nu, Metric metric);

// Resolves mesh-relative region references such as {"kind":"cell","index":3}.
using RegionResolver = std::function<Region(const std::string& kind, int index)>;

// JSON round trip; piece regions are written with explicit geometry.
std::string measure_to_json(const GenericMeasure& mu);
GenericMeasure measure_from_json(const std::string& text, const RegionResolver& resolver = {});

}  // namespace otbb

#endif
