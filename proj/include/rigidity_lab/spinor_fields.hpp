#pragma once
// m-tuples of spinors on boxes in the half-space model, imaginary Killing
// transport and the identities satisfied by Killing bases.
//
// A tuple s = (s_1, ..., s_m) is stored as the m x m matrix S whose column
// alpha is s_alpha. Left multiplication acts on each spinor; right
// multiplication by W^T applies the matrix W in the conjugate factor.

#include "clifford.hpp"
#include "parallel.hpp"
#include "warped_geometry.hpp"

#include <cmath>
#include <fstream>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

namespace rigidity_lab {

// ---------------------------------------------------------------------------
// grids

struct GridDomain {
  int n = 3;
  RVec lo;
  double h = 0.1;
  std::vector<int> count;
  std::vector<std::string> face_tags;  // 2n entries: lo/hi per axis

  void validate() const {
    if (n < 2) throw std::invalid_argument("grid: n >= 2");
    if (lo.size() != n || static_cast<int>(count.size()) != n)
      throw std::invalid_argument("grid: lo and count need n entries");
    if (!(h > 0)) throw std::invalid_argument("grid: step must be positive");
    if (!(lo(0) > 0)) throw std::domain_error("grid: x1 must stay positive");
    for (int c : count)
      if (c < 3) throw std::invalid_argument("grid: need at least 3 points per axis");
  }
  std::size_t size() const {
    std::size_t s = 1;
    for (int c : count) s *= static_cast<std::size_t>(c);
    return s;
  }
  std::size_t stride(int axis) const {
    std::size_t s = 1;
    for (int a = n - 1; a > axis; --a) s *= static_cast<std::size_t>(count[a]);
    return s;
  }
  std::vector<int> multi(std::size_t idx) const {
    std::vector<int> ix(n);
    for (int a = n - 1; a >= 0; --a) {
      ix[a] = static_cast<int>(idx % count[a]);
      idx /= count[a];
    }
    return ix;
  }
  std::size_t index(const std::vector<int>& ix) const {
    std::size_t idx = 0;
    for (int a = 0; a < n; ++a) idx = idx * count[a] + ix[a];
    return idx;
  }
  RVec point(const std::vector<int>& ix) const {
    RVec x(n);
    for (int a = 0; a < n; ++a) x(a) = lo(a) + h * ix[a];
    return x;
  }
  RVec point(std::size_t idx) const { return point(multi(idx)); }
  bool interior(const std::vector<int>& ix, int margin = 1) const {
    for (int a = 0; a < n; ++a)
      if (ix[a] < margin || ix[a] >= count[a] - margin) return false;
    return true;
  }
};

// Box [lo, lo + extent] resolved with `cells` intervals per axis.
inline GridDomain make_box(int n, const RVec& lo, double extent, int cells) {
  GridDomain d;
  d.n = n;
  d.lo = lo;
  d.h = extent / cells;
  d.count.assign(n, cells + 1);
  d.face_tags.assign(2 * n, "free");
  d.validate();
  return d;
}

// ---------------------------------------------------------------------------
// connection of b = e^{2u} delta in the frame e_i = e^{-u} d_i

inline CMat conformal_spin_connection(const CliffordRep& rep, const ConformalFactor& cf, const RVec& x,
                                      int i) {
  RVec du = cf.grad(x);
  CMat cu = rep.clifford(du);
  return 0.25 * std::exp(-cf.u(x)) * (cu * rep.gamma[i] - rep.gamma[i] * cu);
}

inline CMat hyperbolic_spin_connection(const CliffordRep& rep, const RVec& x, int i) {
  if (!(x(0) > 0)) throw std::domain_error("spin connection: x1 must be positive");
  if (i == 0) return CMat::Zero(rep.m, rep.m);
  return 0.5 * rep.gamma[i] * rep.gamma[0];
}

// Hermitian matrices K_i in the Killing equation nabla_i s = (lambda/2) K_i s.
inline std::vector<CMat> killing_matrices(const CliffordRep& rep) {
  std::vector<CMat> K;
  for (int i = 0; i < rep.n; ++i)
    K.push_back(rep.even() ? CMat(rep.grading * rep.gamma[i]) : CMat(-kI * rep.gamma[i]));
  return K;
}

inline CMat killing_combination(const std::vector<CMat>& K, const RVec& v) {
  CMat out = CMat::Zero(K[0].rows(), K[0].cols());
  for (int i = 0; i < v.size(); ++i) out += v(i) * K[i];
  return out;
}

// Coordinate derivatives of a tuple obeying nabla_i S = (1/2) K_i S W^T on the
// hyperbolic half-space.
struct KillingSystem {
  CliffordRep rep;
  std::vector<CMat> K, A;
  CMat WT;  // right factor; diag(lambda) in the omega-diagonal basis

  KillingSystem(const CliffordRep& r, const CMat& wt) : rep(r), K(killing_matrices(r)), WT(wt) {
    RVec x = RVec::Ones(r.n);
    for (int i = 0; i < r.n; ++i) A.push_back(hyperbolic_spin_connection(r, x, i));
  }
  CMat partial(int i, const RVec& x, const CMat& S) const {
    return (-A[i] * S + 0.5 * K[i] * S * WT) / x(0);
  }
  CMat directional(const RVec& v, const RVec& x, const CMat& S) const {
    CMat out = CMat::Zero(S.rows(), S.cols());
    for (int i = 0; i < rep.n; ++i)
      if (v(i) != 0.0) out += v(i) * partial(i, x, S);
    return out;
  }
  // classical 4-stage step along the straight segment x -> x + v
  CMat rk4_step(const RVec& x, const RVec& v, const CMat& S) const {
    CMat k1 = directional(v, x, S);
    CMat k2 = directional(v, x + 0.5 * v, S + 0.5 * k1);
    CMat k3 = directional(v, x + 0.5 * v, S + 0.5 * k2);
    CMat k4 = directional(v, x + v, S + k3);
    return S + (k1 + 2.0 * k2 + 2.0 * k3 + k4) / 6.0;
  }
};

inline CMat lambda_matrix(int m) {
  CMat L = CMat::Identity(m, m);
  for (int a = m / 2; a < m; ++a) L(a, a) = -1.0;
  return L;
}

// Transport a tuple along a polyline, `steps` RK4 steps per segment.
inline CMat killing_transport(const KillingSystem& sys, const CMat& S0, const std::vector<RVec>& path,
                              int steps) {
  if (steps < 1) throw std::invalid_argument("killing_transport: steps >= 1");
  CMat S = S0;
  for (std::size_t p = 0; p + 1 < path.size(); ++p) {
    RVec v = (path[p + 1] - path[p]) / steps;
    for (int k = 0; k <= steps; ++k) {
      RVec y = path[p] + v * k;
      if (!(y(0) > 0)) throw std::domain_error("killing_transport: path leaves the half-space");
    }
    for (int k = 0; k < steps; ++k) S = sys.rk4_step(path[p] + v * k, v, S);
  }
  return S;
}

// Single spinor with Killing sign +1 or -1.
inline CVec killing_transport(const CliffordRep& rep, int sign, const CVec& s0, const std::vector<RVec>& path,
                              int steps) {
  if (sign != 1 && sign != -1) throw std::invalid_argument("killing_transport: sign is +1 or -1");
  KillingSystem sys(rep, CMat::Constant(1, 1, cplx(sign)));
  CMat S = killing_transport(sys, CMat(s0), path, steps);
  return S.col(0);
}

// ---------------------------------------------------------------------------
// fields

struct SpinorMTuple {
  CliffordRep rep;
  GridDomain domain;
  CMat basis;  // U with U* omega_{N0} U = diag(lambda)
  CMat WT;
  std::vector<int> killing_sign;
  std::vector<cplx> data;

  int m() const { return rep.m; }
  Eigen::Map<CMat> at(std::size_t idx) {
    return Eigen::Map<CMat>(data.data() + idx * rep.m * rep.m, rep.m, rep.m);
  }
  Eigen::Map<const CMat> at(std::size_t idx) const {
    return Eigen::Map<const CMat>(data.data() + idx * rep.m * rep.m, rep.m, rep.m);
  }
  // omega_N expressed in the field's conjugate-factor basis
  CMat omega(const RVec& N) const { return basis.adjoint() * omega_matrix(rep, N) * basis; }
};

// Exact solution that is adapted to every face: eps (even) or the identity
// (odd), scaled by (x1)^{-1/2}, written in the omega-diagonal basis.
inline CMat adapted_initial_data(const CliffordRep& rep, const CMat& U, double x1) {
  CMat S = rep.even() ? rep.grading : rep.identity();
  return S * U.conjugate() / std::sqrt(x1);
}

// Sweeps: first along axis 0 through the base point, then along axes 1..n-1.
inline SpinorMTuple build_killing_basis(const CliffordRep& rep, const GridDomain& dom,
                                        const std::vector<int>& base, const CMat& S0, int jobs = 1) {
  dom.validate();
  if (static_cast<int>(base.size()) != dom.n || rep.n != dom.n)
    throw std::invalid_argument("build_killing_basis: dimension mismatch");
  for (int a = 0; a < dom.n; ++a)
    if (base[a] < 0 || base[a] >= dom.count[a]) throw std::invalid_argument("build_killing_basis: base outside grid");
  SpinorMTuple f;
  f.rep = rep;
  f.domain = dom;
  f.basis = diagonalize_omega(rep, axis(rep.n, 0));
  f.WT = lambda_matrix(rep.m);
  for (int a = 0; a < rep.m; ++a) f.killing_sign.push_back(a < rep.m / 2 ? 1 : -1);
  f.data.assign(dom.size() * rep.m * rep.m, cplx(0));
  KillingSystem sys(rep, f.WT);

  f.at(dom.index(base)) = S0;
  for (int ax = 0; ax < dom.n; ++ax) {
    // lines along ax whose coordinates beyond ax match the base
    std::vector<std::vector<int>> starts;
    std::vector<int> ix(dom.n, 0);
    for (int a = ax + 1; a < dom.n; ++a) ix[a] = base[a];
    std::function<void(int)> rec = [&](int a) {
      if (a == ax) {
        ix[ax] = base[ax];
        starts.push_back(ix);
        return;
      }
      for (int k = 0; k < dom.count[a]; ++k) {
        ix[a] = k;
        rec(a + 1);
      }
    };
    rec(0);
    RVec v = axis(dom.n, ax) * dom.h;
    parallel_for(starts.size(), jobs, [&](std::size_t li) {
      std::vector<int> p = starts[li];
      const std::size_t st = dom.stride(ax);
      std::size_t i0 = dom.index(p);
      for (int k = base[ax]; k + 1 < dom.count[ax]; ++k) {
        p[ax] = k;
        std::size_t idx = i0 + (k - base[ax]) * st;
        f.at(idx + st) = sys.rk4_step(dom.point(p), v, f.at(idx));
      }
      for (int k = base[ax]; k > 0; --k) {
        p[ax] = k;
        std::size_t idx = i0 - (base[ax] - k) * st;
        f.at(idx - st) = sys.rk4_step(dom.point(p), -v, f.at(idx));
      }
    });
  }
  return f;
}

inline SpinorMTuple build_killing_basis(const CliffordRep& rep, const GridDomain& dom,
                                        const std::vector<int>& base, int jobs = 1) {
  return build_killing_basis(rep, dom, base, rep.identity(), jobs);
}

// ---------------------------------------------------------------------------
// discrete derivatives

namespace detail {

// second-order first derivative along ax at a grid point (one-sided at faces)
template <class Get>
auto diff1(const GridDomain& d, const std::vector<int>& ix, int ax, const Get& get)
    -> std::decay_t<decltype(get(std::size_t{}))> {
  std::vector<int> a = ix, b = ix, c = ix;
  const double h = d.h;
  if (ix[ax] == 0) {
    b[ax] = 1;
    c[ax] = 2;
    return ((-3.0) * get(d.index(a)) + 4.0 * get(d.index(b)) - get(d.index(c))) / (2 * h);
  }
  if (ix[ax] == d.count[ax] - 1) {
    b[ax] = ix[ax] - 1;
    c[ax] = ix[ax] - 2;
    return (3.0 * get(d.index(a)) - 4.0 * get(d.index(b)) + get(d.index(c))) / (2 * h);
  }
  a[ax] = ix[ax] + 1;
  b[ax] = ix[ax] - 1;
  return (get(d.index(a)) - get(d.index(b))) / (2 * h);
}

}  // namespace detail

// Frame covariant derivative nabla_i S = x1 d_i S + A_i S by finite differences.
inline CMat covariant_derivative_fd(const SpinorMTuple& f, const std::vector<int>& ix, int i) {
  const auto& d = f.domain;
  RVec x = d.point(ix);
  CMat dS = detail::diff1(d, ix, i, [&](std::size_t k) { return CMat(f.at(k)); });
  return x(0) * dS + hyperbolic_spin_connection(f.rep, x, i) * f.at(d.index(ix));
}

struct KillingResidual {
  double max = 0;
  double rms = 0;
};

inline KillingResidual killing_residual(const SpinorMTuple& f, int jobs = 1) {
  const auto& d = f.domain;
  auto K = killing_matrices(f.rep);
  std::vector<double> per(d.size(), -1.0);
  parallel_for(d.size(), jobs, [&](std::size_t idx) {
    auto ix = d.multi(idx);
    if (!d.interior(ix)) return;
    CMat S = f.at(idx);
    double acc = 0;
    for (int i = 0; i < d.n; ++i) {
      CMat r = covariant_derivative_fd(f, ix, i) - 0.5 * K[i] * S * f.WT;
      acc += r.squaredNorm();
    }
    per[idx] = std::sqrt(acc);
  });
  KillingResidual out;
  double sum = 0;
  std::size_t cnt = 0;
  for (double v : per)
    if (v >= 0) {
      out.max = std::max(out.max, v);
      sum += v * v;
      ++cnt;
    }
  out.rms = cnt ? std::sqrt(sum / cnt) : 0.0;
  return out;
}

// ---------------------------------------------------------------------------
// V = |s_alpha|^2

struct VProfile {
  std::vector<double> V;              // every grid point
  std::vector<RVec> grad_field;       // frame gradient lambda Re<K_i s, s>
  std::vector<RVec> grad_fd;          // frame gradient x1 d_i V, interior only
  double c_mean = 0, c_std = 0, c_min = 0;           // from the field identity
  double c_fd_mean = 0, c_fd_std = 0, c_fd_min = 0;  // from the discrete gradient
};

namespace detail {

inline void mean_std_min(const std::vector<double>& v, double& mean, double& sd, double& mn) {
  mean = 0;
  mn = std::numeric_limits<double>::infinity();
  for (double x : v) {
    mean += x;
    mn = std::min(mn, x);
  }
  mean /= static_cast<double>(v.size());
  double ss = 0;
  for (double x : v) ss += (x - mean) * (x - mean);
  sd = std::sqrt(ss / static_cast<double>(v.size()));
}

}  // namespace detail

inline VProfile v_profile(const SpinorMTuple& f, int alpha, int jobs = 1) {
  const auto& d = f.domain;
  if (alpha < 0 || alpha >= f.m()) throw std::invalid_argument("v_profile: index out of range");
  auto K = killing_matrices(f.rep);
  const double lam = f.killing_sign[alpha];
  VProfile p;
  p.V.resize(d.size());
  p.grad_field.resize(d.size());
  p.grad_fd.assign(d.size(), RVec());
  for (std::size_t idx = 0; idx < d.size(); ++idx) {
    CVec s = f.at(idx).col(alpha);
    p.V[idx] = s.squaredNorm();
    RVec g(d.n);
    for (int i = 0; i < d.n; ++i) g(i) = lam * std::real(s.dot(K[i] * s));
    p.grad_field[idx] = g;
  }
  parallel_for(d.size(), jobs, [&](std::size_t idx) {
    auto ix = d.multi(idx);
    if (!d.interior(ix)) return;
    RVec g(d.n);
    double x1 = d.point(ix)(0);
    for (int i = 0; i < d.n; ++i) g(i) = x1 * detail::diff1(d, ix, i, [&](std::size_t k) { return p.V[k]; });
    p.grad_fd[idx] = g;
  });
  std::vector<double> c, cfd;
  for (std::size_t idx = 0; idx < d.size(); ++idx) {
    if (!d.interior(d.multi(idx))) continue;
    c.push_back(p.V[idx] * p.V[idx] - p.grad_field[idx].squaredNorm());
    cfd.push_back(p.V[idx] * p.V[idx] - p.grad_fd[idx].squaredNorm());
  }
  detail::mean_std_min(c, p.c_mean, p.c_std, p.c_min);
  detail::mean_std_min(cfd, p.c_fd_mean, p.c_fd_std, p.c_fd_min);
  return p;
}

// ---------------------------------------------------------------------------
// type classification

enum class SpinorType { I, II, Indeterminate };

inline const char* type_name(SpinorType t) {
  switch (t) {
    case SpinorType::I: return "I";
    case SpinorType::II: return "II";
    default: return "indeterminate";
  }
}

struct TypeReport {
  SpinorType type = SpinorType::Indeterminate;
  double constant = 0;
  double tolerance = 0;
  RVec witness;                 // frame components at the base point
  double witness_residual = 0;  // max over points of |K(nu0) s - s| / |s|
};

inline double type_tolerance(double killing_res) { return std::max(1e-6, 10.0 * killing_res); }

// Type I below tol, type II above 2 tol, indeterminate in between.
inline TypeReport classify_type(const SpinorMTuple& f, int alpha, const std::vector<int>& base,
                                double killing_res, int jobs = 1) {
  auto p = v_profile(f, alpha, jobs);
  double vmax = *std::max_element(p.V.begin(), p.V.end());
  if (!(vmax > 0)) throw std::invalid_argument("classify_type: field vanishes identically");
  TypeReport t;
  t.tolerance = type_tolerance(killing_res);
  t.constant = p.c_mean;
  if (t.constant <= t.tolerance) t.type = SpinorType::I;
  else if (t.constant > 2 * t.tolerance) t.type = SpinorType::II;
  if (t.type != SpinorType::I) return t;
  auto K = killing_matrices(f.rep);
  const auto& d = f.domain;
  std::size_t b = d.index(base);
  // grad V = lambda V nu0
  const double lam = f.killing_sign[alpha];
  t.witness = lam * p.grad_field[b] / p.V[b];
  for (std::size_t idx = 0; idx < d.size(); ++idx) {
    RVec nu = lam * p.grad_field[idx] / p.V[idx];
    nu /= nu.norm();
    CVec s = f.at(idx).col(alpha);
    t.witness_residual = std::max(t.witness_residual, (killing_combination(K, nu) * s - s).norm() / s.norm());
  }
  return t;
}

// Tangential derivative of a type I component along its V level sets:
// nabla_X s + (lambda/2) c(X) c(nu0) s for X orthogonal to nu0.
inline double level_set_parallel_residual(const SpinorMTuple& f, int alpha) {
  const auto& d = f.domain;
  auto K = killing_matrices(f.rep);
  const double lam = f.killing_sign[alpha];
  double worst = 0;
  for (std::size_t idx = 0; idx < d.size(); ++idx) {
    auto ix = d.multi(idx);
    if (!d.interior(ix)) continue;
    CVec s = f.at(idx).col(alpha);
    RVec nu(d.n);
    for (int i = 0; i < d.n; ++i) nu(i) = std::real(s.dot(K[i] * s));
    nu /= nu.norm();
    RMat P = RMat::Identity(d.n, d.n) - nu * nu.transpose();
    std::vector<CVec> grad(d.n);
    for (int i = 0; i < d.n; ++i) grad[i] = covariant_derivative_fd(f, ix, i).col(alpha);
    for (int j = 0; j < d.n; ++j) {
      RVec X = P.col(j);
      CVec r = CVec::Zero(f.m());
      for (int i = 0; i < d.n; ++i) r += X(i) * grad[i];
      r += 0.5 * lam * f.rep.clifford(X) * f.rep.clifford(nu) * s;
      worst = std::max(worst, r.norm());
    }
  }
  return worst;
}

// ---------------------------------------------------------------------------
// Gram matrices

struct GramReport {
  double max_offdiag = 0;          // per point |G_ab|, a != b
  double max_spread = 0;           // per point |G - tr(G)/m I|
  double opposite_gradient = 0;    // max frame gradient of <s_a, s_b>, opposite signs
  double hermitian = 0;
  double min_eigenvalue = 0;
};

inline CMat gram(const CMat& S) { return S.adjoint() * S; }  // G_ab = <s_b, s_a> with <u,v> = v* u

inline GramReport gram_identity_check(const SpinorMTuple& f) {
  const auto& d = f.domain;
  const int m = f.m();
  GramReport r;
  r.min_eigenvalue = std::numeric_limits<double>::infinity();
  std::vector<CMat> G(d.size());
  for (std::size_t idx = 0; idx < d.size(); ++idx) {
    G[idx] = gram(f.at(idx));
    const CMat& g = G[idx];
    for (int a = 0; a < m; ++a)
      for (int b = 0; b < m; ++b)
        if (a != b) r.max_offdiag = std::max(r.max_offdiag, std::abs(g(a, b)));
    r.max_spread = std::max(r.max_spread, (g - g.trace() / double(m) * CMat::Identity(m, m)).norm());
    r.hermitian = std::max(r.hermitian, (g - g.adjoint()).norm());
    Eigen::SelfAdjointEigenSolver<CMat> es(g);
    r.min_eigenvalue = std::min(r.min_eigenvalue, es.eigenvalues()(0));
  }
  for (std::size_t idx = 0; idx < d.size(); ++idx) {
    auto ix = d.multi(idx);
    if (!d.interior(ix)) continue;
    double x1 = d.point(ix)(0);
    for (int a = 0; a < m; ++a)
      for (int b = 0; b < m; ++b) {
        if (f.killing_sign[a] == f.killing_sign[b]) continue;
        double g2 = 0;
        for (int i = 0; i < d.n; ++i) {
          cplx gi = x1 * detail::diff1(d, ix, i, [&](std::size_t k) { return G[k](a, b); });
          g2 += std::norm(gi);
        }
        r.opposite_gradient = std::max(r.opposite_gradient, std::sqrt(g2));
      }
  }
  return r;
}

inline double min_singular_value(const SpinorMTuple& f) {
  double mn = std::numeric_limits<double>::infinity();
  for (std::size_t idx = 0; idx < f.domain.size(); ++idx) {
    Eigen::JacobiSVD<CMat> svd(f.at(idx));
    mn = std::min(mn, svd.singularValues()(f.m() - 1));
  }
  return mn;
}

// ---------------------------------------------------------------------------
// boundary condition on a face

struct Face {
  RVec nu;  // unit normal in frame components
  RVec N;   // Euclidean unit normal
  int axis = 0;
  int side = 0;  // 0: lo face, 1: hi face
};

inline Face axis_face(int n, int ax, int side) {
  Face f;
  f.axis = ax;
  f.side = side;
  f.N = (side == 0 ? -1.0 : 1.0) * axis(n, ax);
  f.nu = f.N;  // the conformal frame keeps Euclidean components
  return f;
}

// even: eps c(nu) S omega_N^T; odd: sqrt(-1) c(nu) S omega_N^T
inline CMat boundary_left_factor(const CliffordRep& rep, const RVec& nu) {
  return rep.even() ? CMat(rep.grading * rep.clifford(nu)) : CMat(kI * rep.clifford(nu));
}

inline CMat apply_boundary(const SpinorMTuple& f, const RVec& nu, const RVec& N, const CMat& S) {
  return boundary_left_factor(f.rep, nu) * S * f.omega(N).transpose();
}

// Expected eigenvalue: -1 for even n, +1 for odd n.
inline double boundary_target(const CliffordRep& rep) { return rep.even() ? -1.0 : 1.0; }

inline double boundary_condition_residual(const SpinorMTuple& f, const Face& face) {
  if (face.nu.size() != f.rep.n || face.N.size() != f.rep.n)
    throw std::invalid_argument("boundary_condition_residual: dimension mismatch");
  const auto& d = f.domain;
  const double target = boundary_target(f.rep);
  double worst = 0;
  for (std::size_t idx = 0; idx < d.size(); ++idx) {
    auto ix = d.multi(idx);
    if (ix[face.axis] != (face.side == 0 ? 0 : d.count[face.axis] - 1)) continue;
    CMat S = f.at(idx);
    double ns = S.norm();
    if (ns == 0) continue;
    worst = std::max(worst, (apply_boundary(f, face.nu, face.N, S) - target * S).norm() / ns);
  }
  return worst;
}

// Project onto the face condition at a single point.
inline CMat project_to_boundary_condition(const SpinorMTuple& f, const Face& face, const CMat& S) {
  return 0.5 * (S + boundary_target(f.rep) * apply_boundary(f, face.nu, face.N, S));
}

// ---------------------------------------------------------------------------
// Hessian identity for f = <<c1, s>, <c2, s>>

inline CVec formal_pairing(const CMat& S, const CVec& c) { return S * c.conjugate(); }

inline cplx hessian_scalar(const CMat& S, const CVec& c1, const CVec& c2) {
  return formal_pairing(S, c2).dot(formal_pairing(S, c1));
}

struct HessianReport {
  double interior = 0;        // max |Hess f - f g|
  double boundary_minus = 0;  // max |nu(f) + <N0, N> f| on the face
  double boundary_plus = 0;   // max |nu(f) - <N0, N> f|
  double f_scale = 0;         // max |f|
};

inline HessianReport hessian_identity_residual(const SpinorMTuple& f, const CVec& c1, const CVec& c2,
                                               const Face& face) {
  const auto& d = f.domain;
  const int n = d.n;
  std::vector<cplx> F(d.size());
  HessianReport r;
  for (std::size_t idx = 0; idx < d.size(); ++idx) {
    F[idx] = hessian_scalar(f.at(idx), c1, c2);
    r.f_scale = std::max(r.f_scale, std::abs(F[idx]));
  }
  auto get = [&](std::vector<int> ix) { return F[d.index(ix)]; };
  const double h = d.h;
  for (std::size_t idx = 0; idx < d.size(); ++idx) {
    auto ix = d.multi(idx);
    if (!d.interior(ix)) continue;
    double x1 = d.point(ix)(0);
    // u = -log x1, du = -e_0 / x1
    RVec du = RVec::Zero(n);
    du(0) = -1.0 / x1;
    Eigen::VectorXcd g(n);
    for (int k = 0; k < n; ++k) {
      auto p = ix, q = ix;
      ++p[k];
      --q[k];
      g(k) = (get(p) - get(q)) / (2 * h);
    }
    Eigen::MatrixXcd H(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        cplx dd;
        if (i == j) {
          auto p = ix, q = ix;
          ++p[i];
          --q[i];
          dd = (get(p) - 2.0 * F[idx] + get(q)) / (h * h);
        } else {
          auto pp = ix, pm = ix, mp = ix, mm = ix;
          ++pp[i], ++pp[j], ++pm[i], --pm[j], --mp[i], ++mp[j], --mm[i], --mm[j];
          dd = (get(pp) - get(pm) - get(mp) + get(mm)) / (4 * h * h);
        }
        cplx chr = 0;
        for (int k = 0; k < n; ++k) {
          double G = (i == k ? du(j) : 0.0) + (j == k ? du(i) : 0.0) - (i == j ? du(k) : 0.0);
          chr += G * g(k);
        }
        H(i, j) = x1 * x1 * (dd - chr) - (i == j ? F[idx] : cplx(0));
      }
    r.interior = std::max(r.interior, H.norm());
  }
  // normal derivative nu(f) = x1 <N, grad f> on the chosen face
  for (std::size_t idx = 0; idx < d.size(); ++idx) {
    auto ix = d.multi(idx);
    if (ix[face.axis] != (face.side == 0 ? 0 : d.count[face.axis] - 1)) continue;
    double x1 = d.point(ix)(0);
    cplx dn = x1 * face.N(face.axis) * detail::diff1(d, ix, face.axis, [&](std::size_t k) { return F[k]; });
    double ndot = face.N(0);
    r.boundary_minus = std::max(r.boundary_minus, std::abs(dn + ndot * F[idx]));
    r.boundary_plus = std::max(r.boundary_plus, std::abs(dn - ndot * F[idx]));
  }
  return r;
}

// ---------------------------------------------------------------------------
// curvature reconstruction

inline double curvature_reconstruction_residual(const SpinorMTuple& f, const ConformalFactor& cf,
                                                std::size_t sample_stride = 1) {
  const auto& d = f.domain;
  const int n = d.n;
  const auto& g = f.rep.gamma;
  CMat proj = f.rep.even() ? f.rep.identity() : CMat(f.rep.identity() + f.rep.volume);
  double worst = 0;
  for (std::size_t idx = 0; idx < d.size(); idx += sample_stride) {
    RVec x = d.point(idx);
    auto R = riemann_conformal(cf, x);
    CMat S = f.at(idx);
    for (int k = 0; k < n; ++k)
      for (int l = 0; l < n; ++l) {
        CMat T = CMat::Zero(f.m(), f.m());
        for (int i = 0; i < n; ++i)
          for (int j = 0; j < n; ++j) {
            double c = R[((i * n + j) * n + k) * n + l] + (i == k && j == l ? 1.0 : 0.0) -
                       (i == l && j == k ? 1.0 : 0.0);
            if (c != 0.0) T += c * g[i] * g[j];
          }
        CMat V = proj * T * S;
        for (int mu = 0; mu < f.m(); ++mu) worst = std::max(worst, V.col(mu).norm());
      }
  }
  return worst;
}

// ---------------------------------------------------------------------------
// binary dump: one JSON header line, then point-major interleaved doubles

inline void dump_field(const SpinorMTuple& f, const std::string& path) {
  nlohmann::json hdr;
  hdr["shape"] = {f.domain.size(), f.m(), f.m()};
  hdr["layout"] = "point-major, column-major tuple, complex interleaved";
  hdr["h"] = f.domain.h;
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open " + path);
  os << hdr.dump() << '\n';
  os.write(reinterpret_cast<const char*>(f.data.data()),
           static_cast<std::streamsize>(f.data.size() * sizeof(cplx)));
}

}  // namespace rigidity_lab
