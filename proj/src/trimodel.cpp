/*************************************************************************************************
 * Triangulated surface meshes and operators
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

#include "otbb/trimodel.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/Geometry>
#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

namespace otbb {

TriMesh build_tri_mesh(SurfaceKind kind, std::vector<Pt> verts, std::vector<std::array<int, 3>> tris) {
  TriMesh m;
  m.kind = kind;
  m.verts = std::move(verts);
  m.tris = std::move(tris);
  const int nv = m.n_vertices(), nt = m.n_triangles();
  require(nv >= 3 && nt >= 1, "triangulation needs at least one triangle");
  Pt ref_normal = Pt::Zero();
  if (kind == SurfaceKind::kFlat) {
    const auto& t = m.tris[0];
    ref_normal = (m.verts[t[1]] - m.verts[t[0]]).cross(m.verts[t[2]] - m.verts[t[0]]).normalized();
    if (ref_normal.z() < 0 || (ref_normal.z() == 0 && ref_normal.sum() < 0)) ref_normal = -ref_normal;
  }
  m.area.resize(nt);
  m.normal.resize(nt);
  m.offset.resize(nt);
  m.grad.resize(nt);
  m.tbasis.resize(nt);
  m.vertex_area = Vec::Zero(nv);
  m.vert_tris.assign(nv, {});
  m.sigma = 0;
  for (int k = 0; k < nt; ++k) {
    auto& t = m.tris[k];
    for (int i : t) require(i >= 0 && i < nv, "triangle references a missing vertex");
    Pt a = m.verts[t[0]], b = m.verts[t[1]], c = m.verts[t[2]];
    Pt n = (b - a).cross(c - a);
    double n2 = n.norm();
    if (!(n2 > 0)) fail(ErrorCode::kInvalidArgument, "degenerate triangle");
    bool flip = kind == SurfaceKind::kSphere ? n.dot(a + b + c) < 0 : n.dot(ref_normal) < 0;
    if (flip) {
      std::swap(t[1], t[2]);
      std::swap(b, c);
      n = -n;
    }
    if (kind == SurfaceKind::kFlat && std::abs(n.normalized().dot(ref_normal) - 1) > 1e-10)
      fail(ErrorCode::kInvalidArgument, "flat triangulation is not planar");
    m.area[k] = 0.5 * n2;
    m.normal[k] = n / n2;
    m.offset[k] = m.normal[k].dot(a);
    if (kind == SurfaceKind::kSphere && !(m.offset[k] > 0))
      fail(ErrorCode::kInvalidArgument, "sphere triangle plane passes through the origin");
    const Pt* p[3] = {&a, &b, &c};
    for (int i = 0; i < 3; ++i) {
      Pt e = *p[(i + 2) % 3] - *p[(i + 1) % 3];
      m.grad[k][i] = m.normal[k].cross(e) / n2;
    }
    Pt t1 = (b - a).normalized();
    m.tbasis[k] = {t1, m.normal[k].cross(t1)};
    for (int i = 0; i < 3; ++i) {
      m.vertex_area[t[i]] += m.area[k] / 3;
      m.vert_tris[t[i]].push_back(k);
    }
    m.sigma = std::max({m.sigma, (b - a).norm(), (c - b).norm(), (a - c).norm()});
  }
  for (int v = 0; v < nv; ++v)
    if (m.vert_tris[v].empty()) fail(ErrorCode::kInvalidArgument, "vertex not used by any triangle");
  return m;
}

TriMesh build_icosphere(int subdiv) {
  require(subdiv >= 0 && subdiv <= 7, "icosphere subdivision must be in [0,7]");
  const double g = (1 + std::sqrt(5.0)) / 2;
  std::vector<Pt> v = {{-1, g, 0}, {1, g, 0},  {-1, -g, 0}, {1, -g, 0}, {0, -1, g}, {0, 1, g},
                       {0, -1, -g}, {0, 1, -g}, {g, 0, -1},  {g, 0, 1},  {-g, 0, -1}, {-g, 0, 1}};
  for (auto& p : v) p.normalize();
  std::vector<std::array<int, 3>> f = {{0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11},
                                       {1, 5, 9},  {5, 11, 4}, {11, 10, 2}, {10, 7, 6}, {7, 1, 8},
                                       {3, 9, 4},  {3, 4, 2},  {3, 2, 6},   {3, 6, 8},  {3, 8, 9},
                                       {4, 9, 5},  {2, 4, 11}, {6, 2, 10},  {8, 6, 7},  {9, 8, 1}};
  for (int s = 0; s < subdiv; ++s) {
    std::map<std::pair<int, int>, int> mid;
    auto midpoint = [&](int a, int b) {
      auto key = std::minmax(a, b);
      auto it = mid.find(key);
      if (it != mid.end()) return it->second;
      v.push_back((v[a] + v[b]).normalized());
      int id = static_cast<int>(v.size()) - 1;
      mid.emplace(key, id);
      return id;
    };
    std::vector<std::array<int, 3>> nf;
    nf.reserve(f.size() * 4);
    for (const auto& t : f) {
      int ab = midpoint(t[0], t[1]), bc = midpoint(t[1], t[2]), ca = midpoint(t[2], t[0]);
      nf.push_back({t[0], ab, ca});
      nf.push_back({t[1], bc, ab});
      nf.push_back({t[2], ca, bc});
      nf.push_back({ab, bc, ca});
    }
    f.swap(nf);
  }
  return build_tri_mesh(SurfaceKind::kSphere, std::move(v), std::move(f));
}

TriMesh build_flat_grid(int n) {
  require(n >= 1, "flat grid needs n >= 1");
  std::vector<Pt> v;
  for (int j = 0; j <= n; ++j)
    for (int i = 0; i <= n; ++i) v.push_back(Pt(static_cast<double>(i) / n, static_cast<double>(j) / n, 0));
  std::vector<std::array<int, 3>> f;
  auto id = [n](int i, int j) { return i + (n + 1) * j; };
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) {
      f.push_back({id(i, j), id(i + 1, j), id(i + 1, j + 1)});
      f.push_back({id(i, j), id(i + 1, j + 1), id(i, j + 1)});
    }
  return build_tri_mesh(SurfaceKind::kFlat, std::move(v), std::move(f));
}

TriMesh tri_mesh_from_off(const std::string& text) {
  std::istringstream in(text);
  std::string tok;
  auto next = [&]() -> std::string {
    while (in >> tok) {
      if (!tok.empty() && tok[0] == '#') {
        std::string rest;
        std::getline(in, rest);
        continue;
      }
      return tok;
    }
    fail(ErrorCode::kInvalidArgument, "OFF: unexpected end of file");
  };
  if (next() != "OFF") fail(ErrorCode::kInvalidArgument, "OFF: missing header");
  int nv = 0, nf = 0;
  try {
    nv = std::stoi(next());
    nf = std::stoi(next());
    next();
    std::vector<Pt> v(nv);
    for (int i = 0; i < nv; ++i)
      for (int a = 0; a < 3; ++a) v[i][a] = std::stod(next());
    std::vector<std::array<int, 3>> f(nf);
    for (int i = 0; i < nf; ++i) {
      if (std::stoi(next()) != 3) fail(ErrorCode::kInvalidArgument, "OFF: only triangles are supported");
      for (int a = 0; a < 3; ++a) f[i][a] = std::stoi(next());
    }
    bool sphere = true;
    for (const auto& p : v)
      if (std::abs(p.norm() - 1) > 1e-6) sphere = false;
    return build_tri_mesh(sphere ? SurfaceKind::kSphere : SurfaceKind::kFlat, std::move(v), std::move(f));
  } catch (const Error&) {
    throw;
  } catch (const std::exception& e) {
    fail(ErrorCode::kInvalidArgument, std::string("OFF: ") + e.what());
  }
}

Pt TriMesh::surface_point(int v) const { return kind == SurfaceKind::kSphere ? verts[v].normalized() : verts[v]; }

Pt TriMesh::psi(int K, const Pt& x) const {
  if (kind == SurfaceKind::kFlat) return x;
  return x * (offset[K] / normal[K].dot(x));
}

Pt TriMesh::dpsi(int K, const Pt& x, const Pt& w) const {
  if (kind == SurfaceKind::kFlat) return w;
  double nx = normal[K].dot(x);
  return (offset[K] / nx) * (w - x * (normal[K].dot(w) / nx));
}

Region TriMesh::preimage(int K) const {
  const auto& t = tris[K];
  std::string ref = "tri:" + std::to_string(K);
  if (kind == SurfaceKind::kSphere) return make_sphere_triangle(verts[t[0]], verts[t[1]], verts[t[2]], ref);
  return make_triangle(verts[t[0]], verts[t[1]], verts[t[2]], ref);
}

namespace {

Pt barycentric(const TriMesh& m, int K, const Pt& p) {
  const auto& t = m.tris[K];
  Pt b;
  for (int i = 0; i < 3; ++i) b[i] = 1 + m.grad[K][i].dot(p - m.verts[t[i]]);
  return b;
}

}  // namespace

int TriMesh::locate(const Pt& x, Pt* bary) const {
  if (kind == SurfaceKind::kSphere) {
    if (std::abs(x.norm() - 1) > 1e-12) return -1;
  } else {
    if (std::abs(normal[0].dot(x) - offset[0]) > 1e-12) return -1;
  }
  for (int K = 0; K < n_triangles(); ++K) {
    if (kind == SurfaceKind::kSphere && normal[K].dot(x) <= 0) continue;
    Pt b = barycentric(*this, K, psi(K, x));
    if (b.minCoeff() >= -1e-12) {
      if (bary) *bary = b.cwiseMax(0.0) / b.cwiseMax(0.0).sum();
      return K;
    }
  }
  return -1;
}

double TriMesh::regularity_witness() const {
  double c = kInf;
  for (int K = 0; K < n_triangles(); ++K) {
    const auto& t = tris[K];
    double a = (verts[t[1]] - verts[t[2]]).norm(), b = (verts[t[0]] - verts[t[2]]).norm(),
           e = (verts[t[0]] - verts[t[1]]).norm();
    double inr = 2 * area[K] / (a + b + e);
    c = std::min(c, inr / std::max({a, b, e}));
  }
  return c;
}

Vec tri_momentum_from_ambient(const TriMesh& mesh, const std::vector<Pt>& M) {
  require(static_cast<int>(M.size()) == mesh.n_triangles(), "momentum does not match the mesh");
  Vec out(2 * mesh.n_triangles());
  for (int K = 0; K < mesh.n_triangles(); ++K) {
    if (std::abs(M[K].dot(mesh.normal[K])) > 1e-12 * std::max(1.0, M[K].norm()))
      fail(ErrorCode::kInvalidArgument, "triangle momentum is not tangent");
    out[2 * K] = M[K].dot(mesh.tbasis[K][0]);
    out[2 * K + 1] = M[K].dot(mesh.tbasis[K][1]);
  }
  return out;
}

std::vector<Pt> tri_momentum_to_ambient(const TriMesh& mesh, const Vec& M) {
  require(M.size() == 2 * mesh.n_triangles(), "momentum does not match the mesh");
  std::vector<Pt> out(mesh.n_triangles());
  for (int K = 0; K < mesh.n_triangles(); ++K)
    out[K] = M[2 * K] * mesh.tbasis[K][0] + M[2 * K + 1] * mesh.tbasis[K][1];
  return out;
}

Vec tri_divergence(const TriMesh& mesh, const Vec& M) {
  require(M.size() == 2 * mesh.n_triangles(), "momentum does not match the mesh");
  Vec D = Vec::Zero(mesh.n_vertices());
  for (int K = 0; K < mesh.n_triangles(); ++K) {
    Pt mk = M[2 * K] * mesh.tbasis[K][0] + M[2 * K + 1] * mesh.tbasis[K][1];
    for (int i = 0; i < 3; ++i) D[mesh.tris[K][i]] -= mesh.area[K] * mesh.grad[K][i].dot(mk);
  }
  return D.cwiseQuotient(mesh.vertex_area);
}

double tri_action(const TriMesh& mesh, const Vec& P, const Vec& M) {
  require(P.size() == mesh.n_vertices() && M.size() == 2 * mesh.n_triangles(), "action arguments do not match the mesh");
  if (P.size() > 0 && P.minCoeff() < 0) return kInf;
  double acc = 0;
  for (int K = 0; K < mesh.n_triangles(); ++K) {
    double m2 = M[2 * K] * M[2 * K] + M[2 * K + 1] * M[2 * K + 1];
    if (m2 == 0) continue;
    const auto& t = mesh.tris[K];
    double s = (P[t[0]] + P[t[1]] + P[t[2]]) / 3;
    if (s <= 0) return kInf;
    acc += 0.5 * m2 * mesh.area[K] / s;
  }
  return acc;
}

double tri_action_conjugate(const TriMesh& mesh, const Vec& P, const Vec& B) {
  require(P.size() == mesh.n_vertices() && B.size() == 2 * mesh.n_triangles(), "conjugate arguments do not match the mesh");
  if (P.size() > 0 && P.minCoeff() < 0) fail(ErrorCode::kInvalidArgument, "conjugate action needs a nonnegative density");
  double acc = 0;
  for (int K = 0; K < mesh.n_triangles(); ++K) {
    const auto& t = mesh.tris[K];
    double s = (P[t[0]] + P[t[1]] + P[t[2]]) / 3;
    acc += 0.5 * s * (B[2 * K] * B[2 * K] + B[2 * K + 1] * B[2 * K + 1]) * mesh.area[K];
  }
  return acc;
}

double tri_scalar_product(const TriMesh& mesh, const Vec& M, const Vec& B) {
  double acc = 0;
  for (int K = 0; K < mesh.n_triangles(); ++K) acc += mesh.area[K] * (M[2 * K] * B[2 * K] + M[2 * K + 1] * B[2 * K + 1]);
  return acc;
}

Vec tri_sample_density(const TriMesh& mesh, const GenericMeasure& rho, int order) {
  if (rho.is_vector()) fail(ErrorCode::kTypeMismatch, "density sampling needs a scalar measure");
  Vec P = Vec::Zero(mesh.n_vertices());
  auto credit = [&](const Pt& x, double w) {
    Pt b;
    int K = mesh.locate(x, &b);
    if (K < 0) fail(ErrorCode::kOutOfDomain, "atom not on the surface");
    for (int i = 0; i < 3; ++i) P[mesh.tris[K][i]] += w * b[i];
  };
  for (const auto& a : rho.atoms()) credit(a.x, a.w);
  for (const auto& p : rho.pieces()) {
    if (p.region.kind == RegionKind::kPoint) {
      credit(p.region.v[0], p.density);
      continue;
    }
    for (const auto& q : p.region.quadrature(order)) credit(q.x, p.density * q.w);
  }
  return P.cwiseQuotient(mesh.vertex_area);
}

Vec tri_sample_density_fn(const TriMesh& mesh, const TestFunction& f, int order) {
  Vec P = Vec::Zero(mesh.n_vertices());
  for (int K = 0; K < mesh.n_triangles(); ++K)
    for (const auto& q : mesh.preimage(K).quadrature(order)) {
      Pt b = barycentric(mesh, K, mesh.psi(K, q.x));
      double fv = f.value(q.x) * q.w;
      for (int i = 0; i < 3; ++i) P[mesh.tris[K][i]] += fv * b[i];
    }
  return P.cwiseQuotient(mesh.vertex_area);
}

Vec tri_sample_momentum(const TriMesh& mesh, const TestFunction& m, int order) {
  if (!m.vector) fail(ErrorCode::kTypeMismatch, "momentum sampling needs a vector field");
  Vec M(2 * mesh.n_triangles());
  for (int K = 0; K < mesh.n_triangles(); ++K) {
    Pt acc = Pt::Zero();
    for (const auto& q : mesh.preimage(K).quadrature(order)) acc += q.w * mesh.dpsi(K, q.x, m.vvalue(q.x));
    acc /= mesh.area[K];
    M[2 * K] = acc.dot(mesh.tbasis[K][0]);
    M[2 * K + 1] = acc.dot(mesh.tbasis[K][1]);
  }
  return M;
}

GenericMeasure tri_reconstruct_density(const TriMesh& mesh, Recon which, const Vec& P) {
  require(P.size() == mesh.n_vertices(), "density does not match the mesh");
  GenericMeasure mu(3, false);
  if (which == Recon::kCE) {
    for (int v = 0; v < mesh.n_vertices(); ++v) mu.add_atom(mesh.surface_point(v), P[v] * mesh.vertex_area[v]);
  } else if (which == Recon::kA) {
    for (int K = 0; K < mesh.n_triangles(); ++K) {
      const auto& t = mesh.tris[K];
      mu.add_piece(mesh.preimage(K), (P[t[0]] + P[t[1]] + P[t[2]]) / 3);
    }
  } else {
    fail(ErrorCode::kInvalidArgument, "density reconstruction is CE or A");
  }
  return mu;
}

GenericMeasure tri_reconstruct_momentum(const TriMesh& mesh, const Vec& M) {
  require(M.size() == 2 * mesh.n_triangles(), "momentum does not match the mesh");
  GenericMeasure mu(3, true);
  for (int K = 0; K < mesh.n_triangles(); ++K) {
    Pt mk = M[2 * K] * mesh.tbasis[K][0] + M[2 * K + 1] * mesh.tbasis[K][1];
    if (mesh.kind == SurfaceKind::kSphere)
      mu.add_vector_piece(mesh.preimage(K), mk, PlaneMap{mesh.normal[K], mesh.offset[K]});
    else
      mu.add_vector_piece(mesh.preimage(K), mk);
  }
  return mu;
}

DistortionReport tri_distortion(const TriMesh& mesh, int order) {
  DistortionReport r;
  const int nv = mesh.n_vertices(), nt = mesh.n_triangles();
  r.alpha = Vec::Zero(nv);
  r.beta = Vec::Zero(nt);
  r.theta = Vec::Zero(nt);
  if (mesh.kind == SurfaceKind::kFlat) return r;
  Vec hat_int = Vec::Zero(nv);
  for (int K = 0; K < nt; ++K) {
    Region pre = mesh.preimage(K);
    r.beta[K] = pre.measure() / mesh.area[K] - 1;
    auto nodes = pre.quadrature(order);
    for (int i = 0; i < 3; ++i) nodes.push_back({mesh.verts[mesh.tris[K][i]].normalized(), 0.0});
    for (const auto& q : nodes) {
      Pt b = barycentric(mesh, K, mesh.psi(K, q.x));
      for (int i = 0; i < 3; ++i) hat_int[mesh.tris[K][i]] += q.w * b[i];
      r.normal_deviation = std::max(r.normal_deviation, (mesh.normal[K] - q.x).norm());
      // singular values of DPsi on the tangent plane at x
      Pt t1 = q.x.unitOrthogonal(), t2 = q.x.cross(t1);
      Pt a1 = mesh.dpsi(K, q.x, t1), a2 = mesh.dpsi(K, q.x, t2);
      Eigen::Matrix2d G;
      G << a1.dot(a1), a1.dot(a2), a1.dot(a2), a2.dot(a2);
      Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(G);
      for (int i = 0; i < 2; ++i)
        r.theta[K] = std::max(r.theta[K], std::abs(std::sqrt(std::max(0.0, es.eigenvalues()[i])) - 1));
    }
  }
  r.alpha = hat_int.cwiseQuotient(mesh.vertex_area) - Vec::Ones(nv);
  r.alpha_max = r.alpha.cwiseAbs().maxCoeff();
  r.beta_max = r.beta.cwiseAbs().maxCoeff();
  r.theta_max = r.theta.maxCoeff();
  return r;
}

namespace {

// Constant-speed geodesic gamma(t), t in [0,1].
struct Geodesic {
  bool sphere;
  Pt x, u;       // sphere: gamma = cos(t th) x + sin(t th) u
  double th = 0;
  Pt y;          // flat: gamma = x + t (y - x)
  Pt at(double t) const {
    if (sphere) return std::cos(t * th) * x + std::sin(t * th) * u;
    return x + t * (y - x);
  }
};

// Subset of [0,1] where a cos(th t) + b sin(th t) >= 0 (sphere) or a + b t >= 0 (flat),
// as a single interval; empty when lo > hi.
void positive_interval(bool sphere, double th, double a, double b, double& lo, double& hi) {
  lo = 0;
  hi = 1;
  if (!sphere) {
    if (b == 0) {
      if (a < 0) lo = 2;
      return;
    }
    double r = -a / b;
    if (b > 0)
      lo = std::max(lo, r);
    else
      hi = std::min(hi, r);
    return;
  }
  if (th <= 0) {
    if (a < 0) lo = 2;
    return;
  }
  // Roots of R cos(phi - phi0), phi = th t in [0, th], th <= pi.
  double phi0 = std::atan2(b, a);
  std::vector<double> br{0.0, 1.0};
  for (int k = -3; k <= 3; ++k)
    for (double s : {-0.5, 0.5}) {
      double t = (phi0 + s * kPi + 2 * kPi * k) / th;
      if (t > 0 && t < 1) br.push_back(t);
    }
  std::sort(br.begin(), br.end());
  double best_lo = 2, best_hi = -1;
  for (size_t i = 0; i + 1 < br.size(); ++i) {
    double m = 0.5 * (br[i] + br[i + 1]);
    if (a * std::cos(th * m) + b * std::sin(th * m) >= 0) {
      if (best_lo > 1) best_lo = br[i];
      best_hi = br[i + 1];
    }
  }
  lo = best_lo;
  hi = best_hi;
}

}  // namespace

ControllabilityPath tri_controllability_path(const TriMesh& mesh, const Pt& x, const Pt& y, int N) {
  require(N >= 1, "N must be positive");
  const bool sphere = mesh.kind == SurfaceKind::kSphere;
  Pt bx, by;
  int Kx = mesh.locate(x, &bx), Ky = mesh.locate(y, &by);
  if (Kx < 0 || Ky < 0) fail(ErrorCode::kOutOfDomain, "controllability endpoint not on the surface");
  const int nv = mesh.n_vertices(), nt = mesh.n_triangles();
  Vec Sx = Vec::Zero(nv), Sy = Vec::Zero(nv);
  for (int i = 0; i < 3; ++i) {
    Sx[mesh.tris[Kx][i]] += bx[i];
    Sy[mesh.tris[Ky][i]] += by[i];
  }
  Sx = Sx.cwiseQuotient(mesh.vertex_area);
  Sy = Sy.cwiseQuotient(mesh.vertex_area);

  Geodesic g;
  g.sphere = sphere;
  g.x = x;
  g.y = y;
  if (sphere) {
    g.th = std::atan2(x.cross(y).norm(), x.dot(y));
    Pt w = y - x.dot(y) * x;
    if (w.norm() < 1e-9) {
      // (near-)antipodal or equal: fix the plane through a reference axis
      Pt e = std::abs(x.z()) < 0.9 ? Pt(0, 0, 1) : Pt(1, 0, 0);
      w = e - e.dot(x) * x;
    }
    g.u = w.normalized();
  }

  ControllabilityPath out;
  out.P_hat = Vec::Zero(nv);
  out.M_hat1 = Vec::Zero(2 * nt);
  out.M_hat2 = Vec::Zero(2 * nt);
  const bool trivial = sphere ? g.th < 1e-14 : (y - x).norm() < 1e-14;
  if (trivial) {
    out.P_hat = Sx;
    out.path = controllability_from_parts(N, Sx, Sy, out.P_hat, out.M_hat1, out.M_hat2, &out.time_factors);
    return out;
  }

  // Parameter interval of each triangle along the curve.
  std::vector<std::pair<double, double>> iv(nt, {2.0, -1.0});
  std::vector<double> br{0.0, 1.0};
  for (int K = 0; K < nt; ++K) {
    const auto& t = mesh.tris[K];
    double lo = 0, hi = 1;
    for (int i = 0; i < 3 && lo < hi; ++i) {
      const Pt& p = mesh.verts[t[i]];
      const Pt& q = mesh.verts[t[(i + 1) % 3]];
      double a, b;
      if (sphere) {
        Pt e = p.cross(q);
        a = e.dot(g.x);
        b = e.dot(g.u);
      } else {
        Pt e = (q - p).cross(mesh.normal[K]);  // outward edge normal
        a = -e.dot(g.x - p);
        b = -e.dot(g.y - g.x);
      }
      double l, h;
      positive_interval(sphere, g.th, a, b, l, h);
      lo = std::max(lo, l);
      hi = std::min(hi, h);
    }
    if (sphere) {
      // the cone test also admits the antipodal cone; keep the half facing the triangle
      double tm = 0.5 * (lo + hi);
      if (lo < hi && mesh.normal[K].dot(g.at(tm)) <= 0) lo = 2;
    }
    if (hi - lo > 1e-14) {
      iv[K] = {lo, hi};
      br.push_back(lo);
      br.push_back(hi);
    }
  }
  std::sort(br.begin(), br.end());
  br.erase(std::unique(br.begin(), br.end()), br.end());

  std::vector<double> gx, gw;
  gauss_legendre01(3, gx, gw);
  Vec hat = Vec::Zero(nv);                          // int phi_v(Psi gamma) dt
  std::vector<Pt> m1(nt, Pt::Zero()), dg(nt, Pt::Zero());
  for (size_t s = 0; s + 1 < br.size(); ++s) {
    double t0 = br[s], t1 = br[s + 1];
    if (t1 - t0 <= 1e-15) continue;
    double tm = 0.5 * (t0 + t1);
    int owner = -1;
    for (int K = 0; K < nt && owner < 0; ++K)
      if (iv[K].first <= tm && tm <= iv[K].second) owner = K;
    if (owner < 0) fail(ErrorCode::kInternal, "geodesic leaves the triangulation");
    const int K = owner;
    Pt p0 = mesh.psi(K, g.at(t0)), p1 = mesh.psi(K, g.at(t1));
    Pt I = Pt::Zero();
    for (int q = 0; q < 3; ++q) I += gw[q] * (t1 - t0) * mesh.psi(K, g.at(t0 + gx[q] * (t1 - t0)));
    const auto& t = mesh.tris[K];
    for (int i = 0; i < 3; ++i)
      hat[t[i]] += (t1 - t0) + mesh.grad[K][i].dot(I - (t1 - t0) * mesh.verts[t[i]]);
    m1[K] += (1 - t1) * p1 - (1 - t0) * p0 + I;
    dg[K] += p1 - p0;
  }
  out.P_hat = hat.cwiseQuotient(mesh.vertex_area);
  for (int K = 0; K < nt; ++K) {
    Pt a = m1[K] / mesh.area[K];
    Pt b = (m1[K] - dg[K]) / mesh.area[K];
    out.M_hat1[2 * K] = a.dot(mesh.tbasis[K][0]);
    out.M_hat1[2 * K + 1] = a.dot(mesh.tbasis[K][1]);
    out.M_hat2[2 * K] = b.dot(mesh.tbasis[K][0]);
    out.M_hat2[2 * K + 1] = b.dot(mesh.tbasis[K][1]);
  }
  out.path = controllability_from_parts(N, Sx, Sy, out.P_hat, out.M_hat1, out.M_hat2, &out.time_factors);
  double cost = 0;
  const double tau = out.path.tau();
  for (int k = 1; k <= N; ++k)
    cost += tau * tri_action(mesh, 0.5 * (out.path.P[k - 1] + out.path.P[k]), out.path.M[k - 1]);
  out.cost = cost;
  return out;
}

}  // namespace otbb
