/*************************************************************************************************
 * Finite-volume meshes and operators
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

#include "otbb/fvmodel.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <deque>
#include <sstream>

#include "json.hpp"

namespace otbb {

using json = nlohmann::json;

const char* mean_name(MeanKind k) {
  switch (k) {
    case MeanKind::kArithmetic: return "arithmetic";
    case MeanKind::kGeometric: return "geometric";
    case MeanKind::kHarmonic: return "harmonic";
    case MeanKind::kLogarithmic: return "logarithmic";
  }
  return "?";
}

MeanKind mean_from_name(const std::string& s) {
  if (s == "arithmetic" || s == "arith") return MeanKind::kArithmetic;
  if (s == "geometric" || s == "geo") return MeanKind::kGeometric;
  if (s == "harmonic") return MeanKind::kHarmonic;
  if (s == "logarithmic" || s == "log") return MeanKind::kLogarithmic;
  fail(ErrorCode::kInvalidArgument, "unknown mean '" + s + "'");
}

namespace {

// (r-1)/log r and its derivative, with a series near r = 1.
double logmean_g(double r) {
  double e = r - 1;
  if (std::abs(e) < 1e-3) return 1 + e / 2 - e * e / 12 + e * e * e / 24;
  return e / std::log(r);
}

double logmean_dg(double r) {
  double e = r - 1;
  if (std::abs(e) < 1e-3) return 0.5 - e / 6 + e * e / 8;
  double l = std::log(r);
  return (l - e / r) / (l * l);
}

}  // namespace

double mean_value(MeanKind k, double a, double b) {
  switch (k) {
    case MeanKind::kArithmetic:
      return 0.5 * (a + b);
    case MeanKind::kGeometric:
      return a <= 0 || b <= 0 ? 0.0 : std::sqrt(a * b);
    case MeanKind::kHarmonic:
      return a <= 0 || b <= 0 ? 0.0 : 2 * a * b / (a + b);
    case MeanKind::kLogarithmic:
      if (a <= 0 || b <= 0) return 0.0;
      return a * logmean_g(b / a);
  }
  return 0;
}

void mean_gradient(MeanKind k, double a, double b, double& da, double& db) {
  switch (k) {
    case MeanKind::kArithmetic:
      da = db = 0.5;
      return;
    case MeanKind::kGeometric:
      da = 0.5 * std::sqrt(b / a);
      db = 0.5 * std::sqrt(a / b);
      return;
    case MeanKind::kHarmonic: {
      double s = (a + b) * (a + b);
      da = 2 * b * b / s;
      db = 2 * a * a / s;
      return;
    }
    case MeanKind::kLogarithmic: {
      double r = b / a;
      double g = logmean_g(r), dg = logmean_dg(r);
      da = g - r * dg;
      db = dg;
      return;
    }
  }
}

Vec FVMesh::volumes() const {
  Vec v(cells.size());
  for (size_t i = 0; i < cells.size(); ++i) v[i] = cells[i].volume;
  return v;
}

int FVMesh::locate(const Pt& x) const {
  if (grid) {
    int idx[3] = {0, 0, 0};
    for (int a = 0; a < dim; ++a) {
      double h = (hi[a] - lo[a]) / res[a];
      double u = (x[a] - lo[a]) / h;
      if (u < -1e-10 || u > res[a] + 1e-10) return -1;
      double r = std::round(u);
      int i = std::abs(u - r) < 1e-10 ? static_cast<int>(r) - 1 : static_cast<int>(std::floor(u));
      idx[a] = std::clamp(i, 0, res[a] - 1);
    }
    return idx[0] + res[0] * (idx[1] + res[1] * idx[2]);
  }
  for (int k = 0; k < n_cells(); ++k)
    if (cells[k].geom.contains(x, 1e-12)) return k;
  return -1;
}

void FVMesh::validate() const {
  double total = 0;
  for (const auto& c : cells) {
    if (!(c.volume > 0)) fail(ErrorCode::kInvalidArgument, "cell with non-positive volume");
    total += c.volume;
  }
  if (domain_volume > 0 && std::abs(total - domain_volume) > 1e-10 * std::max(1.0, domain_volume))
    fail(ErrorCode::kInvalidArgument, "cells do not partition the domain");
  for (const auto& f : faces) {
    if (f.K < 0 || f.L < 0 || f.K >= n_cells() || f.L >= n_cells() || f.K == f.L)
      fail(ErrorCode::kInvalidArgument, "face with invalid cells");
    Pt d = cells[f.L].center - cells[f.K].center;
    if (std::abs(d.norm() - f.dist) > 1e-10 * std::max(1.0, f.dist))
      fail(ErrorCode::kInvalidArgument, "face distance does not match cell centers");
    if ((d / f.dist - f.normal).norm() > 1e-10) fail(ErrorCode::kInvalidArgument, "mesh is not admissible");
    if (!(f.area > 0)) fail(ErrorCode::kInvalidArgument, "face with non-positive area");
  }
}

double FVMesh::regularity_witness() const {
  if (sigma <= 0) return 0;
  double c = kInf;
  for (int k = 0; k < n_cells(); ++k) {
    const auto& cell = cells[k];
    double r = kInf;
    if (cell.geom.kind == RegionKind::kBox) {
      for (int a = 0; a < dim; ++a)
        r = std::min({r, cell.center[a] - cell.geom.v[0][a], cell.geom.v[1][a] - cell.center[a]});
    } else if (cell.geom.kind == RegionKind::kPolygon) {
      const auto& v = cell.geom.v;
      for (size_t i = 0; i < v.size(); ++i) {
        Pt e = v[(i + 1) % v.size()] - v[i];
        Pt w = cell.center - v[i];
        r = std::min(r, e.cross(w).norm() / e.norm());
      }
    }
    if (std::isfinite(r)) c = std::min(c, r / sigma);
  }
  for (const auto& f : faces)
    if (dim > 1) c = std::min(c, f.area / std::pow(sigma, dim - 1));
  return std::isfinite(c) ? c : 0.0;
}

FVMesh build_grid_mesh(int dim, const Pt& lo, const Pt& hi, const std::array<int, 3>& res) {
  require(dim >= 1 && dim <= 3, "grid dimension must be 1, 2 or 3");
  FVMesh m;
  m.dim = dim;
  m.grid = true;
  m.lo = Pt::Zero();
  m.hi = Pt::Zero();
  m.res = {1, 1, 1};
  double vol = 1;
  Pt h = Pt::Zero();
  for (int a = 0; a < dim; ++a) {
    require(res[a] >= 1, "grid resolution must be at least 1");
    m.lo[a] = lo[a];
    m.hi[a] = hi[a];
    m.res[a] = res[a];
    if (!(hi[a] > lo[a])) fail(ErrorCode::kInvalidArgument, "zero-volume domain");
    h[a] = (hi[a] - lo[a]) / res[a];
    vol *= hi[a] - lo[a];
  }
  m.domain_volume = vol;
  const int nx = m.res[0], ny = m.res[1], nz = m.res[2];
  auto id = [&](int i, int j, int k) { return i + nx * (j + ny * k); };
  m.cells.resize(static_cast<size_t>(nx) * ny * nz);
  double cell_vol = 1;
  for (int a = 0; a < dim; ++a) cell_vol *= h[a];
  for (int k = 0; k < nz; ++k)
    for (int j = 0; j < ny; ++j)
      for (int i = 0; i < nx; ++i) {
        Pt clo = Pt::Zero(), chi = Pt::Zero();
        int ijk[3] = {i, j, k};
        for (int a = 0; a < dim; ++a) {
          // Ends pinned to the domain so the partition is exact.
          clo[a] = ijk[a] == 0 ? lo[a] : lo[a] + ijk[a] * h[a];
          chi[a] = ijk[a] == m.res[a] - 1 ? hi[a] : lo[a] + (ijk[a] + 1) * h[a];
        }
        FVCell& c = m.cells[id(i, j, k)];
        c.center = 0.5 * (clo + chi);
        c.volume = cell_vol;
        c.geom = make_box(clo, chi, "cell:" + std::to_string(id(i, j, k)));
      }
  m.sigma = 0;
  for (int a = 0; a < dim; ++a) m.sigma += h[a] * h[a];
  m.sigma = std::sqrt(m.sigma);
  m.cell_faces.assign(m.cells.size(), {});
  for (int a = 0; a < dim; ++a) {
    double area = 1;
    for (int b = 0; b < dim; ++b)
      if (b != a) area *= h[b];
    Pt n = Pt::Zero();
    n[a] = 1;
    for (int k = 0; k < nz; ++k)
      for (int j = 0; j < ny; ++j)
        for (int i = 0; i < nx; ++i) {
          int ijk[3] = {i, j, k};
          int K = id(i, j, k);
          const Region& g = m.cells[K].geom;
          auto face_geom = [&](double coord, const std::string& ref) {
            if (dim == 1) {
              Pt p = Pt::Zero();
              p[0] = coord;
              return make_point(p, ref);
            }
            Pt flo = g.v[0], fhi = g.v[1];
            flo[a] = fhi[a] = coord;
            return make_box(flo, fhi, ref);
          };
          if (ijk[a] == 0)
            m.boundary.push_back({K, area, -n, face_geom(g.v[0][a], "bface:" + std::to_string(m.boundary.size()))});
          if (ijk[a] == m.res[a] - 1) {
            m.boundary.push_back({K, area, n, face_geom(g.v[1][a], "bface:" + std::to_string(m.boundary.size()))});
            continue;
          }
          int nb[3] = {i, j, k};
          nb[a] += 1;
          int L = id(nb[0], nb[1], nb[2]);
          FVFace f;
          f.K = K;
          f.L = L;
          f.area = area;
          f.dist = m.cells[L].center[a] - m.cells[K].center[a];
          f.normal = n;
          f.geom = face_geom(g.v[1][a], "face:" + std::to_string(m.faces.size()));
          m.cell_faces[K].push_back(static_cast<int>(m.faces.size()));
          m.cell_faces[L].push_back(static_cast<int>(m.faces.size()));
          m.faces.push_back(f);
        }
  }
  return m;
}

namespace {

Pt to_pt(const json& a) {
  Pt p = Pt::Zero();
  if (!a.is_array() || a.empty() || a.size() > 3) fail(ErrorCode::kInvalidArgument, "mesh JSON: bad point");
  for (size_t i = 0; i < a.size(); ++i) p[i] = a[i].get<double>();
  return p;
}

json from_pt(const Pt& p, int dim) {
  json a = json::array();
  for (int i = 0; i < dim; ++i) a.push_back(p[i]);
  return a;
}

Region cell_region_from_vertices(int dim, const std::vector<Pt>& vs, const std::string& ref) {
  Pt lo = vs[0], hi = vs[0];
  for (const auto& v : vs) {
    lo = lo.cwiseMin(v);
    hi = hi.cwiseMax(v);
  }
  if (dim == 1 || dim == 3) return make_box(lo, hi, ref);
  // 2-D: axis-aligned rectangles become boxes, anything else a convex polygon.
  bool rect = vs.size() == 4;
  for (const auto& v : vs)
    for (int a = 0; a < 2; ++a)
      if (std::abs(v[a] - lo[a]) > 1e-14 && std::abs(v[a] - hi[a]) > 1e-14) rect = false;
  if (rect) return make_box(lo, hi, ref);
  Region r{RegionKind::kPolygon, vs, ref};
  return r;
}

std::vector<Pt> region_corners(const Region& r, int dim) {
  if (r.kind != RegionKind::kBox) return r.v;
  const Pt& lo = r.v[0];
  const Pt& hi = r.v[1];
  if (dim == 1) return {lo, hi};
  if (dim == 2) return {lo, Pt(hi[0], lo[1], 0), hi, Pt(lo[0], hi[1], 0)};
  std::vector<Pt> out;
  for (int c = 0; c < 8; ++c) out.push_back(Pt(c & 1 ? hi[0] : lo[0], c & 2 ? hi[1] : lo[1], c & 4 ? hi[2] : lo[2]));
  return out;
}

Region shared_face_region(int dim, const Region& a, const Region& b, const std::string& ref) {
  if (dim == 3 || (a.kind == RegionKind::kBox && b.kind == RegionKind::kBox)) {
    Pt lo = a.v[0].cwiseMax(b.v[0]), hi = a.v[1].cwiseMin(b.v[1]);
    for (int i = 0; i < 3; ++i)
      if (hi[i] < lo[i]) hi[i] = lo[i];
    if (dim == 1) return make_point(lo, ref);
    return make_box(lo, hi, ref);
  }
  std::vector<Pt> common;
  for (const auto& p : region_corners(a, dim))
    for (const auto& q : region_corners(b, dim))
      if ((p - q).norm() < 1e-12) common.push_back(p);
  if (common.size() < 2) fail(ErrorCode::kInvalidArgument, "mesh JSON: cannot find shared face vertices");
  return make_segment(common[0], common[1], ref);
}

}  // namespace

FVMesh fv_mesh_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const std::exception& e) {
    fail(ErrorCode::kInvalidArgument, std::string("mesh JSON: ") + e.what());
  }
  FVMesh m;
  try {
    m.dim = j.at("dim").get<int>();
    require(m.dim >= 1 && m.dim <= 3, "mesh JSON: dim must be 1, 2 or 3");
    for (const auto& jc : j.at("cells")) {
      FVCell c;
      c.center = to_pt(jc.at("center"));
      c.volume = jc.at("volume").get<double>();
      std::string ref = "cell:" + std::to_string(m.cells.size());
      if (jc.contains("vertices")) {
        std::vector<Pt> vs;
        for (const auto& v : jc["vertices"]) vs.push_back(to_pt(v));
        c.geom = cell_region_from_vertices(m.dim, vs, ref);
      } else {
        c.geom = make_point(c.center, ref);
      }
      m.cells.push_back(c);
    }
    m.cell_faces.assign(m.cells.size(), {});
    for (const auto& jf : j.at("faces")) {
      auto cs = jf.at("cells").get<std::vector<int>>();
      double area = jf.at("area").get<double>();
      Pt n = to_pt(jf.at("normal"));
      if (cs.size() == 1) {
        FVBoundaryFace b{cs[0], area, n, make_point(m.cells.at(cs[0]).center)};
        m.boundary.push_back(b);
        continue;
      }
      require(cs.size() == 2, "mesh JSON: a face lists one or two cells");
      FVFace f;
      f.K = cs[0];
      f.L = cs[1];
      f.area = area;
      f.dist = jf.at("dist").get<double>();
      f.normal = n;
      if (f.K > f.L) {
        std::swap(f.K, f.L);
        f.normal = -f.normal;
      }
      std::string ref = "face:" + std::to_string(m.faces.size());
      if (jf.contains("vertices")) {
        std::vector<Pt> vs;
        for (const auto& v : jf["vertices"]) vs.push_back(to_pt(v));
        if (vs.size() == 1)
          f.geom = make_point(vs[0], ref);
        else if (vs.size() == 2)
          f.geom = make_segment(vs[0], vs[1], ref);
        else
          f.geom = Region{RegionKind::kPolygon, vs, ref};
      } else {
        f.geom = shared_face_region(m.dim, m.cells.at(f.K).geom, m.cells.at(f.L).geom, ref);
      }
      m.cell_faces.at(f.K).push_back(static_cast<int>(m.faces.size()));
      m.cell_faces.at(f.L).push_back(static_cast<int>(m.faces.size()));
      m.faces.push_back(f);
    }
    m.domain_volume = j.value("domain_volume", 0.0);
  } catch (const Error&) {
    throw;
  } catch (const std::exception& e) {
    fail(ErrorCode::kInvalidArgument, std::string("mesh JSON: ") + e.what());
  }
  m.sigma = 0;
  for (const auto& c : m.cells) m.sigma = std::max(m.sigma, c.geom.diameter());
  m.validate();
  return m;
}

std::string fv_mesh_to_json(const FVMesh& m) {
  json j;
  j["dim"] = m.dim;
  j["domain_volume"] = m.domain_volume;
  j["cells"] = json::array();
  for (const auto& c : m.cells) {
    json jc;
    jc["center"] = from_pt(c.center, m.dim);
    jc["volume"] = c.volume;
    jc["vertices"] = json::array();
    for (const auto& v : region_corners(c.geom, m.dim)) jc["vertices"].push_back(from_pt(v, m.dim));
    j["cells"].push_back(jc);
  }
  j["faces"] = json::array();
  for (const auto& f : m.faces)
    j["faces"].push_back({{"cells", {f.K, f.L}}, {"area", f.area}, {"dist", f.dist}, {"normal", from_pt(f.normal, m.dim)}});
  for (const auto& b : m.boundary)
    j["faces"].push_back({{"cells", {b.K}}, {"area", b.area}, {"normal", from_pt(b.normal, m.dim)}});
  return j.dump();
}

IsotropyReport isotropy_report(const FVMesh& mesh) {
  IsotropyReport rep;
  rep.max_eigen = -kInf;
  const int d = mesh.dim;
  for (int k = 0; k < mesh.n_cells(); ++k) {
    Eigen::MatrixXd S = Eigen::MatrixXd::Zero(d, d);
    for (int fi : mesh.cell_faces[k]) {
      const FVFace& f = mesh.faces[fi];
      Eigen::VectorXd n = f.normal.head(d);
      S += f.area * f.dist * n * n.transpose();
    }
    S /= 2 * mesh.cells[k].volume;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(S);
    double lmax = es.eigenvalues().maxCoeff();
    if (lmax > rep.max_eigen) {
      rep.max_eigen = lmax;
      rep.worst_cell = k;
    }
  }
  if (mesh.n_cells() == 0) rep.max_eigen = 0;
  rep.deficit = std::max(0.0, rep.max_eigen - 1);
  return rep;
}

double isotropy_deficit(const FVMesh& mesh) { return isotropy_report(mesh).deficit; }

Vec fv_divergence(const FVMesh& mesh, const Vec& M) {
  if (M.size() != mesh.n_faces()) fail(ErrorCode::kInvalidArgument, "momentum does not match the mesh");
  Vec D = Vec::Zero(mesh.n_cells());
  for (int i = 0; i < mesh.n_faces(); ++i) {
    const FVFace& f = mesh.faces[i];
    D[f.K] += f.area * M[i];
    D[f.L] -= f.area * M[i];
  }
  for (int k = 0; k < mesh.n_cells(); ++k) D[k] /= mesh.cells[k].volume;
  return D;
}

double fv_action(const FVMesh& mesh, MeanKind mean, const Vec& P, const Vec& M) {
  if (P.size() != mesh.n_cells() || M.size() != mesh.n_faces())
    fail(ErrorCode::kInvalidArgument, "action arguments do not match the mesh");
  if (P.size() > 0 && P.minCoeff() < 0) return kInf;
  double acc = 0;
  for (int i = 0; i < mesh.n_faces(); ++i) {
    if (M[i] == 0) continue;
    const FVFace& f = mesh.faces[i];
    double th = mean_value(mean, P[f.K], P[f.L]);
    if (th <= 0) return kInf;
    acc += M[i] * M[i] * f.area * f.dist / (2 * th);
  }
  return acc;
}

double fv_action_conjugate(const FVMesh& mesh, MeanKind mean, const Vec& P, const Vec& B) {
  if (P.size() != mesh.n_cells() || B.size() != mesh.n_faces())
    fail(ErrorCode::kInvalidArgument, "conjugate arguments do not match the mesh");
  if (P.size() > 0 && P.minCoeff() < 0) fail(ErrorCode::kInvalidArgument, "conjugate action needs a nonnegative density");
  double acc = 0;
  for (int i = 0; i < mesh.n_faces(); ++i) {
    const FVFace& f = mesh.faces[i];
    acc += 0.5 * mean_value(mean, P[f.K], P[f.L]) * B[i] * B[i] * f.dist * f.area;
  }
  return acc;
}

double fv_scalar_product(const FVMesh& mesh, const Vec& M, const Vec& B) {
  double acc = 0;
  for (int i = 0; i < mesh.n_faces(); ++i) acc += M[i] * B[i] * mesh.faces[i].dist * mesh.faces[i].area;
  return acc;
}

namespace {

double box_overlap(const Region& a, const Region& b) {
  double m = 1;
  bool any = false;
  for (int i = 0; i < 3; ++i) {
    double ea = a.v[1][i] - a.v[0][i];
    double eb = b.v[1][i] - b.v[0][i];
    if (ea <= 0 && eb <= 0) continue;
    double o = std::min(a.v[1][i], b.v[1][i]) - std::max(a.v[0][i], b.v[0][i]);
    if (o <= 0) return 0;
    if (ea > 0) {
      m *= o;
      any = true;
    }
  }
  return any ? m : 0.0;
}

}  // namespace

Vec fv_sample_density(const FVMesh& mesh, const GenericMeasure& rho, int order) {
  if (rho.is_vector()) fail(ErrorCode::kTypeMismatch, "density sampling needs a scalar measure");
  Vec P = Vec::Zero(mesh.n_cells());
  auto credit = [&](const Pt& x, double w) {
    int k = mesh.locate(x);
    if (k < 0) fail(ErrorCode::kOutOfDomain, "atom outside the domain");
    P[k] += w;
  };
  for (const auto& a : rho.atoms()) credit(a.x, a.w);
  for (const auto& p : rho.pieces()) {
    if (p.region.kind == RegionKind::kPoint) {
      credit(p.region.v[0], p.density);
      continue;
    }
    bool boxes = p.region.kind == RegionKind::kBox;
    for (const auto& c : mesh.cells)
      if (c.geom.kind != RegionKind::kBox) boxes = false;
    if (boxes) {
      for (int k = 0; k < mesh.n_cells(); ++k) P[k] += p.density * box_overlap(p.region, mesh.cells[k].geom);
    } else {
      for (const auto& q : p.region.quadrature(order)) credit(q.x, p.density * q.w);
    }
  }
  for (int k = 0; k < mesh.n_cells(); ++k) P[k] /= mesh.cells[k].volume;
  return P;
}

Vec fv_sample_density_fn(const FVMesh& mesh, const TestFunction& f, int order) {
  Vec P(mesh.n_cells());
  for (int k = 0; k < mesh.n_cells(); ++k) {
    double acc = 0;
    for (const auto& q : mesh.cells[k].geom.quadrature(order)) acc += q.w * f.value(q.x);
    P[k] = acc / mesh.cells[k].volume;
  }
  return P;
}

Vec fv_sample_momentum(const FVMesh& mesh, const TestFunction& m, int order) {
  if (!m.vector) fail(ErrorCode::kTypeMismatch, "momentum sampling needs a vector field");
  Vec M(mesh.n_faces());
  for (int i = 0; i < mesh.n_faces(); ++i) {
    const FVFace& f = mesh.faces[i];
    double acc = 0, w = 0;
    for (const auto& q : f.geom.quadrature(order)) {
      acc += q.w * m.vvalue(q.x).dot(f.normal);
      w += q.w;
    }
    M[i] = acc / w;
  }
  return M;
}

GenericMeasure fv_reconstruct_density(const FVMesh& mesh, Recon which, const Vec& P) {
  require(P.size() == mesh.n_cells(), "density does not match the mesh");
  GenericMeasure mu(mesh.dim, false);
  for (int k = 0; k < mesh.n_cells(); ++k) {
    if (which == Recon::kCE)
      mu.add_atom(mesh.cells[k].center, P[k] * mesh.cells[k].volume);
    else if (which == Recon::kA)
      mu.add_piece(mesh.cells[k].geom, P[k]);
    else
      fail(ErrorCode::kInvalidArgument, "density reconstruction is CE or A");
  }
  return mu;
}

GenericMeasure fv_reconstruct_momentum(const FVMesh& mesh, const Vec& M) {
  require(M.size() == mesh.n_faces(), "momentum does not match the mesh");
  GenericMeasure mu(mesh.dim, true);
  for (int i = 0; i < mesh.n_faces(); ++i) {
    const FVFace& f = mesh.faces[i];
    mu.add_vector_piece(f.geom, M[i] * f.dist * f.normal);
  }
  return mu;
}

std::vector<int> fv_cell_chain(const FVMesh& mesh, int from, int to) {
  require(from >= 0 && from < mesh.n_cells() && to >= 0 && to < mesh.n_cells(), "chain endpoints out of range");
  std::vector<int> chain{from};
  if (mesh.grid) {
    const auto& r = mesh.res;
    int cur[3] = {from % r[0], (from / r[0]) % r[1], from / (r[0] * r[1])};
    int tgt[3] = {to % r[0], (to / r[0]) % r[1], to / (r[0] * r[1])};
    for (int a = 0; a < 3; ++a)
      while (cur[a] != tgt[a]) {
        cur[a] += tgt[a] > cur[a] ? 1 : -1;
        chain.push_back(cur[0] + r[0] * (cur[1] + r[1] * cur[2]));
      }
    return chain;
  }
  std::vector<int> parent(mesh.n_cells(), -2);
  std::deque<int> q{from};
  parent[from] = -1;
  while (!q.empty() && parent[to] == -2) {
    int k = q.front();
    q.pop_front();
    for (int fi : mesh.cell_faces[k]) {
      const FVFace& f = mesh.faces[fi];
      int o = f.K == k ? f.L : f.K;
      if (parent[o] != -2) continue;
      parent[o] = k;
      q.push_back(o);
    }
  }
  if (parent[to] == -2) fail(ErrorCode::kSingular, "mesh is disconnected: no cell chain between the points");
  std::vector<int> rev;
  for (int k = to; k != -1; k = parent[k]) rev.push_back(k);
  return std::vector<int>(rev.rbegin(), rev.rend());
}

ControllabilityPath fv_controllability_path(const FVMesh& mesh, MeanKind mean, const Pt& x, const Pt& y, int N) {
  require(N >= 1, "N must be positive");
  int kx = mesh.locate(x), ky = mesh.locate(y);
  if (kx < 0 || ky < 0) fail(ErrorCode::kOutOfDomain, "controllability endpoint outside the domain");
  ControllabilityPath out;
  out.chain = fv_cell_chain(mesh, kx, ky);
  const int Q = static_cast<int>(out.chain.size());
  Vec Sx = Vec::Zero(mesh.n_cells()), Sy = Vec::Zero(mesh.n_cells());
  Sx[kx] = 1 / mesh.cells[kx].volume;
  Sy[ky] = 1 / mesh.cells[ky].volume;
  out.P_hat = Vec::Zero(mesh.n_cells());
  out.M_hat1 = Vec::Zero(mesh.n_faces());
  out.M_hat2 = Vec::Zero(mesh.n_faces());
  for (int i = 0; i < Q; ++i) out.P_hat[out.chain[i]] = 1.0 / (Q * mesh.cells[out.chain[i]].volume);
  for (int i = 1; i < Q; ++i) {
    int a = out.chain[i - 1], b = out.chain[i];
    int fid = -1;
    for (int fi : mesh.cell_faces[a])
      if (mesh.faces[fi].K == b || mesh.faces[fi].L == b) fid = fi;
    if (fid < 0) fail(ErrorCode::kInternal, "cell chain steps across a non-face");
    const FVFace& f = mesh.faces[fid];
    double sgn = f.K == a ? 1.0 : -1.0;  // +1 when the chain runs along n_KL
    // Cell chain[i] carries mass fraction (Q - i) / Q of the first leg.
    out.M_hat1[fid] = sgn * (Q - i) / (Q * f.area);
    out.M_hat2[fid] = -sgn * i / (Q * f.area);
  }
  if (kx == ky) {
    out.P_hat = Sx;
    out.M_hat1.setZero();
    out.M_hat2.setZero();
  }
  out.path = controllability_from_parts(N, Sx, Sy, out.P_hat, out.M_hat1, out.M_hat2, &out.time_factors);
  double cost = 0;
  const double tau = out.path.tau();
  for (int k = 1; k <= N; ++k)
    cost += tau * fv_action(mesh, mean, 0.5 * (out.path.P[k - 1] + out.path.P[k]), out.path.M[k - 1]);
  out.cost = cost;
  return out;
}

}  // namespace otbb
