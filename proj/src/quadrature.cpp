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

#include "otbb/quadrature.hpp"

#include <Eigen/Geometry>
#include <cmath>
#include <map>
#include <mutex>

namespace otbb {

void gauss_legendre01(int n, std::vector<double>& nodes, std::vector<double>& weights) {
  require(n >= 1 && n <= 64, "quadrature order must be in [1,64]");
  static std::mutex mu;
  static std::map<int, std::pair<std::vector<double>, std::vector<double>>> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto it = cache.find(n);
  if (it == cache.end()) {
    std::vector<double> x(n), w(n);
    for (int i = 0; i < n; ++i) {
      // Newton on P_n starting from the Chebyshev-like guess
      double z = std::cos(kPi * (i + 0.75) / (n + 0.5));
      double dp = 1;
      for (int it2 = 0; it2 < 100; ++it2) {
        double p0 = 1, p1 = z;
        for (int k = 2; k <= n; ++k) {
          double p2 = ((2.0 * k - 1) * z * p1 - (k - 1.0) * p0) / k;
          p0 = p1;
          p1 = p2;
        }
        dp = n * (z * p1 - p0) / (z * z - 1);
        double dz = p1 / dp;
        z -= dz;
        if (std::abs(dz) < 1e-16) break;
      }
      double p0 = 1, p1 = z;
      for (int k = 2; k <= n; ++k) {
        double p2 = ((2.0 * k - 1) * z * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (z * p1 - p0) / (z * z - 1);
      x[i] = 0.5 * (1 - z);
      w[i] = 1.0 / ((1 - z * z) * dp * dp);
    }
    it = cache.emplace(n, std::make_pair(x, w)).first;
  }
  nodes = it->second.first;
  weights = it->second.second;
}

Region make_point(const Pt& p, std::string ref) { return Region{RegionKind::kPoint, {p}, std::move(ref)}; }
Region make_segment(const Pt& a, const Pt& b, std::string ref) {
  return Region{RegionKind::kSegment, {a, b}, std::move(ref)};
}
Region make_box(const Pt& lo, const Pt& hi, std::string ref) {
  return Region{RegionKind::kBox, {lo, hi}, std::move(ref)};
}
Region make_triangle(const Pt& a, const Pt& b, const Pt& c, std::string ref) {
  return Region{RegionKind::kTriangle, {a, b, c}, std::move(ref)};
}
Region make_sphere_triangle(const Pt& a, const Pt& b, const Pt& c, std::string ref) {
  return Region{RegionKind::kSphereTriangle, {a, b, c}, std::move(ref)};
}

double spherical_triangle_area(const Pt& a, const Pt& b, const Pt& c) {
  double num = a.dot(b.cross(c));
  double den = 1 + a.dot(b) + b.dot(c) + c.dot(a);
  return std::abs(2 * std::atan2(num, den));
}

namespace {

double tri_area(const Pt& a, const Pt& b, const Pt& c) { return 0.5 * (b - a).cross(c - a).norm(); }

void tri_rule(const Pt& a, const Pt& b, const Pt& c, int order, std::vector<QuadNode>& out) {
  std::vector<double> x, w;
  gauss_legendre01(order, x, w);
  double area2 = 2 * tri_area(a, b, c);
  for (int i = 0; i < order; ++i) {
    for (int j = 0; j < order; ++j) {
      double u = x[i], s = x[j] * (1 - u);
      out.push_back({a + u * (b - a) + s * (c - a), area2 * w[i] * w[j] * (1 - u)});
    }
  }
}

}  // namespace

double Region::measure() const {
  switch (kind) {
    case RegionKind::kPoint:
      return 1.0;
    case RegionKind::kSegment:
      return (v[1] - v[0]).norm();
    case RegionKind::kBox: {
      double m = 1;
      bool any = false;
      for (int i = 0; i < 3; ++i) {
        double e = v[1][i] - v[0][i];
        if (e > 0) {
          m *= e;
          any = true;
        }
      }
      return any ? m : 1.0;
    }
    case RegionKind::kTriangle:
      return tri_area(v[0], v[1], v[2]);
    case RegionKind::kPolygon: {
      double m = 0;
      for (size_t i = 1; i + 1 < v.size(); ++i) m += tri_area(v[0], v[i], v[i + 1]);
      return m;
    }
    case RegionKind::kSphereTriangle:
      return spherical_triangle_area(v[0].normalized(), v[1].normalized(), v[2].normalized());
  }
  return 0;
}

double Region::diameter() const {
  if (kind == RegionKind::kBox) return (v[1] - v[0]).norm();
  double d = 0;
  for (size_t i = 0; i < v.size(); ++i)
    for (size_t j = i + 1; j < v.size(); ++j) {
      Pt a = v[i], b = v[j];
      if (kind == RegionKind::kSphereTriangle) {
        a.normalize();
        b.normalize();
      }
      d = std::max(d, (a - b).norm());
    }
  return d;
}

std::vector<QuadNode> Region::quadrature(int order) const {
  std::vector<QuadNode> out;
  switch (kind) {
    case RegionKind::kPoint:
      out.push_back({v[0], 1.0});
      break;
    case RegionKind::kSegment: {
      std::vector<double> x, w;
      gauss_legendre01(order, x, w);
      double len = (v[1] - v[0]).norm();
      for (int i = 0; i < order; ++i) out.push_back({v[0] + x[i] * (v[1] - v[0]), w[i] * len});
      break;
    }
    case RegionKind::kBox: {
      std::vector<double> x, w;
      gauss_legendre01(order, x, w);
      std::vector<int> axes;
      for (int i = 0; i < 3; ++i)
        if (v[1][i] > v[0][i]) axes.push_back(i);
      out.push_back({v[0], 1.0});
      for (int ax : axes) {
        std::vector<QuadNode> next;
        double e = v[1][ax] - v[0][ax];
        for (const auto& q : out)
          for (int i = 0; i < order; ++i) {
            QuadNode n = q;
            n.x[ax] = v[0][ax] + x[i] * e;
            n.w *= w[i] * e;
            next.push_back(n);
          }
        out.swap(next);
      }
      break;
    }
    case RegionKind::kTriangle:
      tri_rule(v[0], v[1], v[2], order, out);
      break;
    case RegionKind::kPolygon:
      for (size_t i = 1; i + 1 < v.size(); ++i) tri_rule(v[0], v[i], v[i + 1], order, out);
      break;
    case RegionKind::kSphereTriangle: {
      std::vector<QuadNode> flat;
      tri_rule(v[0], v[1], v[2], order, flat);
      Pt n = (v[1] - v[0]).cross(v[2] - v[0]).normalized();
      double c = std::abs(n.dot(v[0]));
      for (const auto& q : flat) {
        double r = q.x.norm();
        out.push_back({q.x / r, q.w * c / (r * r * r)});
      }
      break;
    }
  }
  return out;
}

bool Region::contains(const Pt& p, double tol) const {
  switch (kind) {
    case RegionKind::kPoint:
      return (p - v[0]).norm() <= tol;
    case RegionKind::kSegment: {
      Pt d = v[1] - v[0];
      double t = (p - v[0]).dot(d) / d.squaredNorm();
      return t >= -tol && t <= 1 + tol && (v[0] + t * d - p).norm() <= tol * (1 + d.norm());
    }
    case RegionKind::kBox:
      for (int i = 0; i < 3; ++i)
        if (p[i] < v[0][i] - tol || p[i] > v[1][i] + tol) return false;
      return true;
    case RegionKind::kTriangle:
    case RegionKind::kPolygon: {
      Pt n = (v[1] - v[0]).cross(v[2] - v[0]);
      double area2 = n.norm();
      n /= area2;
      if (std::abs((p - v[0]).dot(n)) > tol * (1 + area2)) return false;
      for (size_t i = 0; i < v.size(); ++i) {
        const Pt& a = v[i];
        const Pt& b = v[(i + 1) % v.size()];
        if ((b - a).cross(p - a).dot(n) < -tol * (b - a).norm()) return false;
      }
      return true;
    }
    case RegionKind::kSphereTriangle: {
      for (int i = 0; i < 3; ++i) {
        Pt e = v[i].cross(v[(i + 1) % 3]);
        if (e.dot(p) < -tol * e.norm()) return false;
      }
      return true;
    }
  }
  return false;
}

const char* region_kind_name(RegionKind k) {
  switch (k) {
    case RegionKind::kPoint: return "point";
    case RegionKind::kSegment: return "segment";
    case RegionKind::kBox: return "box";
    case RegionKind::kTriangle: return "triangle";
    case RegionKind::kPolygon: return "polygon";
    case RegionKind::kSphereTriangle: return "sphere_triangle";
  }
  return "?";
}

RegionKind region_kind_from_name(const std::string& s) {
  if (s == "point") return RegionKind::kPoint;
  if (s == "segment") return RegionKind::kSegment;
  if (s == "box") return RegionKind::kBox;
  if (s == "triangle") return RegionKind::kTriangle;
  if (s == "polygon") return RegionKind::kPolygon;
  if (s == "sphere_triangle") return RegionKind::kSphereTriangle;
  fail(ErrorCode::kInvalidArgument, "unknown region kind '" + s + "'");
}

}  // namespace otbb
