/*************************************************************************************************
 * Regions and quadrature rules
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

#ifndef OTBB_QUADRATURE_HPP
#define OTBB_QUADRATURE_HPP

#include <string>
#include <vector>

#include "otbb/common.hpp"

namespace otbb {

struct QuadNode {
  Pt x;
  double w;
};

// Gauss-Legendre rule with n points on [0,1].
void gauss_legendre01(int n, std::vector<double>& nodes, std::vector<double>& weights);

enum class RegionKind { kPoint, kSegment, kBox, kTriangle, kPolygon, kSphereTriangle };

// Geometric support of a measure piece.
//   kPoint: v[0]. Measure 1 (counting measure, used for 1-D faces).
//   kSegment: v[0], v[1].
//   kBox: lo = v[0], hi = v[1]; axes with zero extent are dropped from the measure.
//   kTriangle: three vertices in R^3.
//   kPolygon: convex planar polygon, vertices in order.
//   kSphereTriangle: radial projection onto the unit sphere of the flat triangle v[0..2].
struct Region {
  RegionKind kind = RegionKind::kPoint;
  std::vector<Pt> v;
  std::string ref;

  double measure() const;
  double diameter() const;
  std::vector<QuadNode> quadrature(int order) const;
  bool contains(const Pt& p, double tol = 1e-12) const;
};

Region make_point(const Pt& p, std::string ref = {});
Region make_segment(const Pt& a, const Pt& b, std::string ref = {});
Region make_box(const Pt& lo, const Pt& hi, std::string ref = {});
Region make_triangle(const Pt& a, const Pt& b, const Pt& c, std::string ref = {});
Region make_sphere_triangle(const Pt& a, const Pt& b, const Pt& c, std::string ref = {});

// Exact area of the spherical triangle spanned by unit vectors a, b, c.
double spherical_triangle_area(const Pt& a, const Pt& b, const Pt& c);

const char* region_kind_name(RegionKind k);
RegionKind region_kind_from_name(const std::string& s);

}  // namespace otbb

#endif
