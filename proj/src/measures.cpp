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

#include "otbb/measures.hpp"

#include <Eigen/Geometry>
#include <algorithm>
#include <cmath>
#include <map>
#include "json.hpp"
#include <sstream>

namespace otbb {

using json = nlohmann::json;

void GenericMeasure::add_atom(const Pt& x, double w) {
  if (vector_) fail(ErrorCode::kTypeMismatch, "scalar atom added to a vector measure");
  atoms_.push_back({x, w, Pt::Zero()});
}

void GenericMeasure::add_vector_atom(const Pt& x, const Pt& w) {
  if (!vector_) fail(ErrorCode::kTypeMismatch, "vector atom added to a scalar measure");
  atoms_.push_back({x, 0, w});
}

void GenericMeasure::add_piece(const Region& r, double density) {
  if (vector_) fail(ErrorCode::kTypeMismatch, "scalar piece added to a vector measure");
  pieces_.push_back({r, density, Pt::Zero(), std::nullopt});
}

void GenericMeasure::add_vector_piece(const Region& r, const Pt& density, std::optional<PlaneMap> pullback) {
  if (!vector_) fail(ErrorCode::kTypeMismatch, "vector piece added to a scalar measure");
  pieces_.push_back({r, 0, density, pullback});
}

namespace {

// P_x DPsi(x)^T v for the radial map onto the plane n.y = c.
Pt pullback_density(const PlaneMap& pm, const Pt& x, const Pt& v) {
  double nx = pm.n.dot(x);
  double s = pm.c / nx;
  // DPsi(x) w = s (w - x (n.w)/(n.x)); its transpose applied to v:
  Pt t = s * (v - pm.n * (x.dot(v) / nx));
  return t - x * x.dot(t);
}

}  // namespace

Pt piece_vector_density(const Piece& p, const Pt& x) {
  return p.pullback ? pullback_density(*p.pullback, x, p.vdensity) : p.vdensity;
}

double GenericMeasure::mass(int order) const {
  if (vector_) return total_variation(*this, order);
  double m = 0;
  for (const auto& a : atoms_) m += a.w;
  for (const auto& p : pieces_) m += p.density * p.region.measure();
  return m;
}

bool GenericMeasure::is_nonnegative() const {
  if (vector_) return false;
  for (const auto& a : atoms_)
    if (a.w < 0) return false;
  for (const auto& p : pieces_)
    if (p.density < 0) return false;
  return true;
}

GenericMeasure GenericMeasure::scaled(double s) const {
  GenericMeasure out = *this;
  for (auto& a : out.atoms_) {
    a.w *= s;
    a.vw *= s;
  }
  for (auto& p : out.pieces_) {
    p.density *= s;
    p.vdensity *= s;
  }
  return out;
}

GenericMeasure GenericMeasure::plus(const GenericMeasure& other) const {
  if (other.vector_ != vector_) fail(ErrorCode::kTypeMismatch, "cannot add scalar and vector measures");
  GenericMeasure out = *this;
  out.dim_ = std::max(dim_, other.dim_);
  out.atoms_.insert(out.atoms_.end(), other.atoms_.begin(), other.atoms_.end());
  out.pieces_.insert(out.pieces_.end(), other.pieces_.begin(), other.pieces_.end());
  return out;
}

TestFunction constant_function(double c) {
  TestFunction f;
  f.value = [c](const Pt&) { return c; };
  f.gradient = [](const Pt&) { return Pt::Zero().eval(); };
  f.sup0 = std::abs(c);
  f.sup1 = f.sup2 = 0;
  f.name = "const";
  return f;
}

TestFunction affine_function(const Pt& a, double b) {
  TestFunction f;
  f.value = [a, b](const Pt& x) { return a.dot(x) + b; };
  f.gradient = [a](const Pt&) { return a; };
  f.sup1 = a.norm();
  f.sup2 = 0;
  f.name = "affine";
  return f;
}

TestFunction vector_constant(const Pt& v) {
  TestFunction f;
  f.vector = true;
  f.vvalue = [v](const Pt&) { return v; };
  f.jacobian = [](const Pt&) { return Eigen::Matrix3d::Zero().eval(); };
  f.sup0 = v.norm();
  f.sup1 = f.sup2 = 0;
  f.name = "vconst";
  return f;
}

PairResult pair(const GenericMeasure& mu, const TestFunction& f, int order) {
  if (mu.is_vector() != f.vector) fail(ErrorCode::kTypeMismatch, "pairing a scalar with a vector object");
  PairResult r;
  for (const auto& a : mu.atoms()) r.value += mu.is_vector() ? a.vw.dot(f.vvalue(a.x)) : a.w * f.value(a.x);
  for (const auto& p : mu.pieces()) {
    double acc = 0, scale = 0;
    if (!mu.is_vector()) {
      for (const auto& q : p.region.quadrature(order)) acc += q.w * f.value(q.x);
      acc *= p.density;
      scale = std::abs(p.density);
    } else if (p.pullback) {
      for (const auto& q : p.region.quadrature(order))
        acc += q.w * pullback_density(*p.pullback, q.x, p.vdensity).dot(f.vvalue(q.x));
      scale = 2 * p.vdensity.norm();
    } else {
      for (const auto& q : p.region.quadrature(order)) acc += q.w * p.vdensity.dot(f.vvalue(q.x));
      scale = p.vdensity.norm();
    }
    r.value += acc;
    if (p.region.kind != RegionKind::kPoint) {
      double h = p.region.diameter(), meas = p.region.measure();
      r.error_bound += f.regularity == Regularity::kC2 ? scale * meas * f.sup2 * h * h
                                                       : 2 * scale * meas * f.sup1 * h;
    }
  }
  return r;
}

double total_variation(const GenericMeasure& mu, int order) {
  if (!mu.is_vector()) {
    double m = 0;
    for (const auto& a : mu.atoms()) m += std::abs(a.w);
    for (const auto& p : mu.pieces()) m += std::abs(p.density) * p.region.measure();
    return m;
  }
  double m = 0;
  for (const auto& a : mu.atoms()) m += a.vw.norm();
  for (const auto& p : mu.pieces()) {
    if (!p.pullback) {
      m += p.vdensity.norm() * p.region.measure();
      continue;
    }
    for (const auto& q : p.region.quadrature(order))
      m += q.w * pullback_density(*p.pullback, q.x, p.vdensity).norm();
  }
  return m;
}

double w2_dirac(const Pt& x, const Pt& y, Metric metric) {
  if (metric == Metric::kFlat) return (x - y).squaredNorm();
  if (std::abs(x.norm() - 1) > 1e-12 || std::abs(y.norm() - 1) > 1e-12)
    fail(ErrorCode::kOutOfDomain, "point off the unit sphere");
  double ang = std::atan2(x.cross(y).norm(), x.dot(y));
  return ang * ang;
}

namespace {

// Quantile function as monotone pieces s in [s0,s1] -> x linear from x0 to x1.
struct QPiece {
  double s0, s1, x0, x1;
};

void interval_of(const Region& r, double& a, double& b) {
  switch (r.kind) {
    case RegionKind::kPoint:
      a = b = r.v[0][0];
      return;
    case RegionKind::kSegment:
    case RegionKind::kBox:
      a = std::min(r.v[0][0], r.v[1][0]);
      b = std::max(r.v[0][0], r.v[1][0]);
      return;
    default:
      fail(ErrorCode::kInvalidArgument, "1-D quantile oracle needs interval pieces");
  }
}

std::vector<QPiece> quantile_pieces(const GenericMeasure& mu, double& total) {
  if (mu.is_vector() || !mu.is_nonnegative()) fail(ErrorCode::kInvalidArgument, "quantile oracle needs a nonnegative scalar measure");
  std::map<double, double> atom_at;
  struct Iv {
    double a, b, d;
  };
  std::vector<Iv> ivs;
  std::vector<double> pts;
  for (const auto& a : mu.atoms()) {
    atom_at[a.x[0]] += a.w;
    pts.push_back(a.x[0]);
  }
  for (const auto& p : mu.pieces()) {
    double a, b;
    interval_of(p.region, a, b);
    if (b <= a) {
      atom_at[a] += p.density;
      pts.push_back(a);
    } else {
      ivs.push_back({a, b, p.density});
      pts.push_back(a);
      pts.push_back(b);
    }
  }
  std::sort(pts.begin(), pts.end());
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  std::vector<QPiece> out;
  double s = 0;
  for (size_t i = 0; i < pts.size(); ++i) {
    auto it = atom_at.find(pts[i]);
    if (it != atom_at.end() && it->second > 0) {
      out.push_back({s, s + it->second, pts[i], pts[i]});
      s += it->second;
    }
    if (i + 1 < pts.size()) {
      double lo = pts[i], hi = pts[i + 1], d = 0;
      for (const auto& iv : ivs)
        if (iv.a <= lo && iv.b >= hi) d += iv.d;
      double m = d * (hi - lo);
      if (m > 0) {
        out.push_back({s, s + m, lo, hi});
        s += m;
      }
    }
  }
  total = s;
  return out;
}

double eval_quantile(const std::vector<QPiece>& q, size_t& hint, double s) {
  while (hint + 1 < q.size() && s > q[hint].s1) ++hint;
  const QPiece& p = q[hint];
  double len = p.s1 - p.s0;
  double t = len > 0 ? std::clamp((s - p.s0) / len, 0.0, 1.0) : 0.0;
  return p.x0 + t * (p.x1 - p.x0);
}

}  // namespace

double w2_1d_quantile(const GenericMeasure& mu, const GenericMeasure& nu, int grid) {
  require(grid >= 1, "quantile grid must be positive");
  double mm, mn;
  auto qm = quantile_pieces(mu, mm);
  auto qn = quantile_pieces(nu, mn);
  if (std::abs(mm - mn) > kMassTol * std::max(1.0, std::max(mm, mn))) {
    std::ostringstream os;
    os << "mass mismatch: " << fmt_double(mm) << " vs " << fmt_double(mn);
    fail(ErrorCode::kMassMismatch, os.str());
  }
  if (qm.empty() || qn.empty()) return 0;
  double total = std::min(mm, mn);
  std::vector<double> br;
  for (const auto& p : qm) br.push_back(std::min(p.s1, total));
  for (const auto& p : qn) br.push_back(std::min(p.s1, total));
  for (int i = 0; i <= grid; ++i) br.push_back(total * i / grid);
  std::sort(br.begin(), br.end());
  br.erase(std::unique(br.begin(), br.end()), br.end());
  size_t hm = 0, hn = 0;
  double acc = 0;
  for (size_t i = 0; i + 1 < br.size(); ++i) {
    double a = br[i], b = br[i + 1];
    if (b <= a) continue;
    // Evaluate strictly inside the sub-interval so atoms at the ends do not leak in.
    double e = (b - a) * 1e-9;
    double da = eval_quantile(qm, hm, a + e) - eval_quantile(qn, hn, a + e);
    double dm = eval_quantile(qm, hm, 0.5 * (a + b)) - eval_quantile(qn, hn, 0.5 * (a + b));
    double db = eval_quantile(qm, hm, b - e) - eval_quantile(qn, hn, b - e);
    // Both quantiles are affine on [a,b]; extrapolate the interior samples to the ends.
    double slope = (db - da) / (b - a - 2 * e);
    double fa = da - slope * e, fb = db + slope * e;
    acc += (b - a) / 6 * (fa * fa + 4 * dm * dm + fb * fb);
  }
  return acc;
}

W2Result w2_lp_bruteforce(const GenericMeasure& mu, const GenericMeasure& nu, Metric metric) {
  if (!mu.pieces().empty() || !nu.pieces().empty())
    fail(ErrorCode::kInvalidArgument, "LP oracle needs atomic measures");
  const int n = static_cast<int>(mu.atoms().size()), m = static_cast<int>(nu.atoms().size());
  if (n > 64 || m > 64) fail(ErrorCode::kInvalidArgument, "LP oracle is capped at 64 atoms per measure");
  if (!mu.is_nonnegative() || !nu.is_nonnegative()) fail(ErrorCode::kInvalidArgument, "LP oracle needs nonnegative weights");
  double mm = mu.mass(), mn = nu.mass();
  if (std::abs(mm - mn) > kMassTol * std::max(1.0, std::max(mm, mn))) {
    std::ostringstream os;
    os << "mass mismatch: " << fmt_double(mm) << " vs " << fmt_double(mn);
    fail(ErrorCode::kMassMismatch, os.str());
  }
  W2Result res;
  if (n == 0 || m == 0) return res;

  // Residual network: source 0, left 1..n, right n+1..n+m, sink n+m+1.
  struct Edge {
    int to;
    double cap, cost;
    int rev;
  };
  const int V = n + m + 2, S = 0, T = n + m + 1;
  std::vector<std::vector<Edge>> g(V);
  auto add = [&](int u, int v, double cap, double cost) {
    g[u].push_back({v, cap, cost, static_cast<int>(g[v].size())});
    g[v].push_back({u, 0, -cost, static_cast<int>(g[u].size()) - 1});
  };
  for (int i = 0; i < n; ++i) add(S, 1 + i, mu.atoms()[i].w, 0);
  for (int j = 0; j < m; ++j) add(1 + n + j, T, nu.atoms()[j].w, 0);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < m; ++j) add(1 + i, 1 + n + j, kInf, w2_dirac(mu.atoms()[i].x, nu.atoms()[j].x, metric));

  const double eps = 1e-15 * std::max(1.0, mm);
  double flow = 0;
  for (int iter = 0; iter < 100000 && flow < mm - eps; ++iter) {
    std::vector<double> dist(V, kInf);
    std::vector<int> pv(V, -1), pe(V, -1);
    dist[S] = 0;
    for (int round = 0; round < V; ++round) {
      bool changed = false;
      for (int u = 0; u < V; ++u) {
        if (dist[u] == kInf) continue;
        for (int k = 0; k < static_cast<int>(g[u].size()); ++k) {
          const Edge& e = g[u][k];
          if (e.cap > eps && dist[u] + e.cost < dist[e.to] - 1e-15) {
            dist[e.to] = dist[u] + e.cost;
            pv[e.to] = u;
            pe[e.to] = k;
            changed = true;
          }
        }
      }
      if (!changed) break;
    }
    if (dist[T] == kInf) break;
    double push = kInf;
    for (int v = T; v != S; v = pv[v]) push = std::min(push, g[pv[v]][pe[v]].cap);
    for (int v = T; v != S; v = pv[v]) {
      Edge& e = g[pv[v]][pe[v]];
      e.cap -= push;
      g[v][e.rev].cap += push;
    }
    flow += push;
  }
  for (int i = 0; i < n; ++i)
    for (const auto& e : g[1 + i]) {
      if (e.to <= n || e.to == T) continue;
      double f = g[e.to][e.rev].cap;
      if (f > eps) {
        res.plan.push_back({i, e.to - 1 - n, f});
        res.value += f * e.cost;
      }
    }
  return res;
}

namespace {

json pt_json(const Pt& p, int dim) {
  json a = json::array();
  for (int i = 0; i < dim; ++i) a.push_back(p[i]);
  return a;
}

Pt json_pt(const json& a) {
  Pt p = Pt::Zero();
  if (!a.is_array() || a.size() > 3) fail(ErrorCode::kInvalidArgument, "point must be an array of at most 3 numbers");
  for (size_t i = 0; i < a.size(); ++i) p[i] = a[i].get<double>();
  return p;
}

}  // namespace

std::string measure_to_json(const GenericMeasure& mu) {
  json j;
  const int dim = mu.dim();
  j["dim"] = dim;
  j["vector"] = mu.is_vector();
  j["atoms"] = json::array();
  for (const auto& a : mu.atoms()) {
    json ja;
    ja["x"] = pt_json(a.x, dim);
    if (mu.is_vector())
      ja["w"] = pt_json(a.vw, 3);
    else
      ja["w"] = a.w;
    j["atoms"].push_back(ja);
  }
  j["pieces"] = json::array();
  for (const auto& p : mu.pieces()) {
    json jp, jr;
    jr["kind"] = region_kind_name(p.region.kind);
    jr["v"] = json::array();
    for (const auto& v : p.region.v) jr["v"].push_back(pt_json(v, 3));
    if (!p.region.ref.empty()) jr["ref"] = p.region.ref;
    jp["region"] = jr;
    if (mu.is_vector()) {
      jp["density"] = pt_json(p.vdensity, 3);
      if (p.pullback) jp["pullback"] = {{"n", pt_json(p.pullback->n, 3)}, {"c", p.pullback->c}};
    } else {
      jp["density"] = p.density;
    }
    j["pieces"].push_back(jp);
  }
  return j.dump();
}

GenericMeasure measure_from_json(const std::string& text, const RegionResolver& resolver) {
  json j;
  try {
    j = json::parse(text);
  } catch (const std::exception& e) {
    fail(ErrorCode::kInvalidArgument, std::string("measure JSON: ") + e.what());
  }
  try {
    bool vec = j.value("vector", false);
    int dim = j.value("dim", 0);
    if (dim == 0 && j.contains("atoms") && !j["atoms"].empty()) dim = static_cast<int>(j["atoms"][0]["x"].size());
    if (dim == 0) dim = 1;
    GenericMeasure mu(dim, vec);
    if (j.contains("atoms"))
      for (const auto& a : j["atoms"]) {
        if (vec)
          mu.add_vector_atom(json_pt(a.at("x")), json_pt(a.at("w")));
        else
          mu.add_atom(json_pt(a.at("x")), a.at("w").get<double>());
      }
    if (j.contains("pieces"))
      for (const auto& p : j["pieces"]) {
        const json& jr = p.at("region");
        std::string kind = jr.at("kind").get<std::string>();
        Region r;
        if (jr.contains("v")) {
          r.kind = region_kind_from_name(kind);
          for (const auto& v : jr["v"]) r.v.push_back(json_pt(v));
          r.ref = jr.value("ref", std::string());
        } else {
          if (!resolver) fail(ErrorCode::kInvalidArgument, "region '" + kind + "' needs a mesh to resolve");
          r = resolver(kind, jr.at("index").get<int>());
        }
        if (vec) {
          std::optional<PlaneMap> pb;
          if (p.contains("pullback")) pb = PlaneMap{json_pt(p["pullback"].at("n")), p["pullback"].at("c").get<double>()};
          mu.add_vector_piece(r, json_pt(p.at("density")), pb);
        } else {
          mu.add_piece(r, p.at("density").get<double>());
        }
      }
    return mu;
  } catch (const Error&) {
    throw;
  } catch (const std::exception& e) {
    fail(ErrorCode::kInvalidArgument, std::string("measure JSON: ") + e.what());
  }
}

}  // namespace otbb
