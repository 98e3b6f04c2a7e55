#pragma once
// Twisted Dirac operators on m-tuples: sections of S_N (x) S_M are m x m
// matrices S; operators on the first factor act from the left and an
// operator B on the second factor acts as S -> S B^*.

#include "clifford.hpp"
#include "parallel.hpp"
#include "spinor_fields.hpp"
#include "warped_geometry.hpp"

#include <Eigen/Eigenvalues>
#include <unsupported/Eigen/KroneckerProduct>

#include <cmath>
#include <functional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace rigidity_lab {

enum class ParityMode { EvenGrading, OddVolume };

inline const char* parity_name(ParityMode m) { return m == ParityMode::EvenGrading ? "even" : "odd"; }

inline ParityMode parity_of(const CliffordRep& rep) {
  return rep.even() ? ParityMode::EvenGrading : ParityMode::OddVolume;
}

// Metric e^{2u} delta on N, flat target M, and the twisting function kappa
// (the pullback of psi'/psi^2) along the fixed unit direction `twist_dir`.
struct Background {
  std::string name;
  ConformalFactor cf;
  std::function<double(const RVec&)> kappa;
  std::function<RVec(const RVec&)> dkappa;  // coordinate gradient
  RVec twist_dir;
};

inline Background flat_background(int n) {
  Background b;
  b.name = "flat";
  b.cf = flat_factor(n);
  b.kappa = [](const RVec&) { return 0.0; };
  b.dkappa = [n](const RVec&) { return RVec::Zero(n); };
  b.twist_dir = axis(n, 0);
  return b;
}

// kappa = e^{-u} d_1 u, which is -1 for the hyperbolic metric.
inline Background conformal_background(const ConformalFactor& cf, int n) {
  Background b;
  b.name = cf.name;
  b.cf = cf;
  b.kappa = [cf](const RVec& x) { return std::exp(-cf.u(x)) * cf.grad(x)(0); };
  b.dkappa = [cf](const RVec& x) {
    RVec du = cf.grad(x);
    RMat H = cf.hess(x);
    return RVec(std::exp(-cf.u(x)) * (H.col(0) - du(0) * du));
  };
  b.twist_dir = axis(n, 0);
  return b;
}

inline Background hyperbolic_background(int n) { return conformal_background(hyperbolic_factor(n), n); }

struct OperatorAssembly {
  CliffordRep rep;
  ParityMode mode = ParityMode::EvenGrading;
  Background bg;

  int n() const { return rep.n; }
  int m() const { return rep.m; }
  bool even() const { return mode == ParityMode::EvenGrading; }

  static CMat right(const CMat& S, const CMat& B) { return S * B.adjoint(); }

  // Clifford factor used by chi and the twist: eps c(v) or sqrt(-1) c(v)
  CMat beta(const RVec& v) const {
    return even() ? CMat(rep.grading * rep.clifford(v)) : CMat(kI * rep.clifford(v));
  }

  // Xi with twist_i = (kappa / 2) c(e_i) Xi and Psi = -(n/2) kappa Xi
  CMat xi(const CMat& S) const {
    CMat B = beta(bg.twist_dir);
    if (even()) return -(rep.grading * right(S, B));
    return -kI * right(S, B);
  }

  CMat twist(int i, const RVec& x, const CMat& S) const { return 0.5 * bg.kappa(x) * rep.gamma[i] * xi(S); }

  CMat psi(const RVec& x, const CMat& S) const { return -0.5 * n() * bg.kappa(x) * xi(S); }

  CMat spin_connection(const RVec& x, int i) const { return conformal_spin_connection(rep, bg.cf, x, i); }

  // nabla_{e_i} S from the coordinate derivative d_i S
  CMat nabla(int i, const RVec& x, const CMat& S, const CMat& dS) const {
    return std::exp(-bg.cf.u(x)) * dS + spin_connection(x, i) * S;
  }

  CMat nabla_hat(int i, const RVec& x, const CMat& S, const CMat& dS) const {
    return nabla(i, x, S, dS) + twist(i, x, S);
  }

  CMat dirac(const RVec& x, const CMat& S, const std::vector<CMat>& dS) const {
    CMat out = CMat::Zero(m(), m());
    for (int i = 0; i < n(); ++i) out += rep.gamma[i] * nabla(i, x, S, dS[i]);
    return out;
  }

  CMat dirac_hat(const RVec& x, const CMat& S, const std::vector<CMat>& dS) const {
    return dirac(x, S, dS) + psi(x, S);
  }

  // e_n and N are unit inner normals (frame and Euclidean components)
  CMat chi(const RVec& e_n, const RVec& N, const CMat& S) const { return right(beta(e_n) * S, beta(N)); }

  // chi as an m^2 x m^2 matrix on column-major vec(S)
  CMat chi_matrix(const RVec& e_n, const RVec& N) const {
    return Eigen::kroneckerProduct(CMat(beta(N).conjugate()), beta(e_n)).eval();
  }

  // frame components of nabla_{e_j} e_k for the metric e^{2u} delta
  RVec frame_derivative(const RVec& x, int j, const RVec& v) const {
    RVec du = bg.cf.grad(x);
    double s = std::exp(-bg.cf.u(x));
    // <nabla_{e_j} e_a, e_k> = s (delta_jk du_a - delta_ja du_k)
    RVec out = s * (du.dot(v) * axis(n(), j) - v(j) * du);
    return out;
  }

  double scalar_curvature(const RVec& x) const {
    auto R = riemann_conformal(bg.cf, x);
    const int d = n();
    double s = 0;
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) s += R[((i * d + j) * d + i) * d + j];
    return s;
  }
};

inline OperatorAssembly assemble_operators(const CliffordRep& rep, const Background& bg, ParityMode mode) {
  if (parity_of(rep) != mode)
    throw std::invalid_argument(std::string("assemble_operators: representation parity does not match mode ") +
                                parity_name(mode));
  if (bg.twist_dir.size() != rep.n || std::abs(bg.twist_dir.norm() - 1) > kAlgebraTol)
    throw std::invalid_argument("assemble_operators: twist direction must be a unit vector of length n");
  OperatorAssembly a;
  a.rep = rep;
  a.mode = mode;
  a.bg = bg;
  return a;
}

// ---------------------------------------------------------------------------
// faces of a coordinate box

struct BoxFace {
  int axis = 0;
  int side = 0;  // 0: lo face, 1: hi face
  RVec inner;    // inner unit normal, same components in the frame and in M
};

inline BoxFace box_face(int n, int ax, int side) {
  BoxFace f;
  f.axis = ax;
  f.side = side;
  f.inner = (side == 0 ? 1.0 : -1.0) * axis(n, ax);
  return f;
}

inline std::vector<BoxFace> box_faces(int n) {
  std::vector<BoxFace> out;
  for (int ax = 0; ax < n; ++ax)
    for (int side : {0, 1}) out.push_back(box_face(n, ax, side));
  return out;
}

// H = -sum_j <nabla_{e_j} e_n, e_j>, the divergence of the outward normal.
inline double face_mean_curvature(const OperatorAssembly& a, const BoxFace& f, const RVec& x) {
  double H = 0;
  for (int j = 0; j < a.n(); ++j) {
    if (j == f.axis) continue;
    H -= a.frame_derivative(x, j, f.inner)(j);
  }
  return H;
}

// D^boundary from tangential coordinate derivatives (entries at f.axis unused).
inline CMat boundary_dirac(const OperatorAssembly& a, const BoxFace& f, const RVec& x, const CMat& S,
                           const std::vector<CMat>& dS) {
  const CMat cn = a.rep.clifford(f.inner);
  CMat out = CMat::Zero(a.m(), a.m());
  for (int j = 0; j < a.n(); ++j) {
    if (j == f.axis) continue;
    RVec w = a.frame_derivative(x, j, f.inner);
    CMat conn = a.nabla(j, x, S, dS[j]) + 0.5 * a.rep.clifford(w) * cn * S;
    out += cn * a.rep.gamma[j] * conn;
  }
  return out;
}

inline double pairing(const CMat& A, const CMat& B) { return std::real((B.adjoint() * A).trace()); }

// ---------------------------------------------------------------------------
// anticommutation of D^boundary and chi

struct AnticommutationReport {
  double symbol_max = 0;       // principal symbol over random frames
  double zeroth_order_max = 0; // full operator on polynomial sections over box faces
  double chi_square_max = 0;
  double chi_adjoint_max = 0;
  int trials = 0;
};

namespace detail {

inline RMat random_frame(int n, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  RMat Z(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) Z(i, j) = g(rng);
  Eigen::HouseholderQR<RMat> qr(Z);
  return qr.householderQ();
}

inline CMat random_cmat(int m, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  CMat S(m, m);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j) S(i, j) = cplx(g(rng), g(rng));
  return S;
}

// Random quadratic tuple field around x0 with exact derivatives.
struct QuadraticField {
  RVec x0;
  CMat c0;
  std::vector<CMat> c1;
  std::vector<std::vector<CMat>> c2;  // symmetric use: sum_{a<=b}

  CMat value(const RVec& x) const {
    RVec d = x - x0;
    CMat S = c0;
    for (std::size_t a = 0; a < c1.size(); ++a) S += d(a) * c1[a];
    for (std::size_t a = 0; a < c1.size(); ++a)
      for (std::size_t b = a; b < c1.size(); ++b) S += d(a) * d(b) * c2[a][b];
    return S;
  }
  CMat partial(const RVec& x, int k) const {
    RVec d = x - x0;
    CMat S = c1[k];
    for (std::size_t a = 0; a < c1.size(); ++a)
      for (std::size_t b = a; b < c1.size(); ++b) {
        if (static_cast<int>(a) == k) S += d(b) * c2[a][b];
        if (static_cast<int>(b) == k) S += d(a) * c2[a][b];
      }
    return S;
  }
};

inline QuadraticField random_quadratic(int n, int m, const RVec& x0, std::mt19937_64& rng) {
  QuadraticField q;
  q.x0 = x0;
  q.c0 = random_cmat(m, rng);
  for (int a = 0; a < n; ++a) q.c1.push_back(random_cmat(m, rng));
  q.c2.assign(n, std::vector<CMat>(n, CMat::Zero(m, m)));
  for (int a = 0; a < n; ++a)
    for (int b = a; b < n; ++b) q.c2[a][b] = random_cmat(m, rng);
  return q;
}

}  // namespace detail

// Symbol sweep over random frames, then the full operator on random quadratic
// sections at random points of the faces of [lo, lo + extent].
inline AnticommutationReport boundary_anticommutation_check(const OperatorAssembly& a, int trials,
                                                            std::uint64_t seed, const RVec& lo,
                                                            double extent) {
  if (trials < 1) throw std::invalid_argument("anticommutation check: trials must be positive");
  AnticommutationReport r;
  r.trials = trials;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  const int n = a.n(), m = a.m();
  const CMat Im = CMat::Identity(m, m);
  for (int t = 0; t < trials; ++t) {
    RMat Q = detail::random_frame(n, rng);
    RVec e_n = Q.col(n - 1);
    RVec N = detail::random_frame(n, rng).col(0);
    RVec tau = RVec::Zero(n);
    for (int j = 0; j < n - 1; ++j) tau += g(rng) * Q.col(j);
    tau.normalize();
    CMat sym = a.rep.clifford(e_n) * a.rep.clifford(tau);
    CMat P = Eigen::kroneckerProduct(Im, sym).eval();
    CMat X = a.chi_matrix(e_n, N);
    r.symbol_max = std::max(r.symbol_max, opnorm(P * X + X * P));
    CMat I2 = CMat::Identity(m * m, m * m);
    r.chi_square_max = std::max(r.chi_square_max, opnorm(X * X - I2));
    r.chi_adjoint_max = std::max(r.chi_adjoint_max, opnorm(X.adjoint() - X));
  }
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  const int patches = std::max(1, trials / 100);
  for (const auto& f : box_faces(n)) {
    for (int t = 0; t < patches; ++t) {
      RVec x = lo;
      for (int k = 0; k < n; ++k) x(k) += extent * u01(rng);
      x(f.axis) = lo(f.axis) + (f.side ? extent : 0.0);
      auto q = detail::random_quadratic(n, m, x + 0.1 * extent * RVec::Ones(n), rng);
      CMat S = q.value(x);
      std::vector<CMat> dS, dChi;
      for (int k = 0; k < n; ++k) {
        dS.push_back(q.partial(x, k));
        dChi.push_back(a.chi(f.inner, f.inner, dS.back()));
      }
      CMat lhs = boundary_dirac(a, f, x, a.chi(f.inner, f.inner, S), dChi) +
                 a.chi(f.inner, f.inner, boundary_dirac(a, f, x, S, dS));
      double scale = S.norm();
      for (const auto& d : dS) scale += d.norm();
      r.zeroth_order_max = std::max(r.zeroth_order_max, lhs.norm() / scale);
    }
  }
  return r;
}

// ---------------------------------------------------------------------------
// integrated Schroedinger-Lichnerowicz identity on a box

struct TupleField {
  GridDomain domain;
  int m = 0;
  std::vector<CMat> values;
};

inline void validate_field(const TupleField& f, const OperatorAssembly& a) {
  f.domain.validate();
  if (f.domain.n != a.n() || f.m != a.m()) throw std::invalid_argument("field: dimension mismatch with assembly");
  if (f.values.size() != f.domain.size()) throw std::invalid_argument("field: value count does not match grid");
  for (const auto& S : f.values) {
    if (S.rows() != f.m || S.cols() != f.m) throw std::invalid_argument("field: tuple has wrong size");
    if (!S.allFinite()) throw std::invalid_argument("field: non-finite value on the grid");
  }
}

inline TupleField sample_field(const GridDomain& d, int m, const std::function<CMat(const RVec&)>& fn) {
  TupleField f;
  f.domain = d;
  f.m = m;
  f.values.resize(d.size());
  for (std::size_t k = 0; k < d.size(); ++k) f.values[k] = fn(d.point(k));
  return f;
}

// Matrix-valued polynomial of total degree <= `degree` times a Gaussian
// envelope centred in the box.
struct ManufacturedField {
  int n = 0, m = 0;
  std::vector<std::vector<int>> exponents;
  std::vector<CMat> coeffs;
  RVec center;
  double width = 1.0;

  CMat operator()(const RVec& x) const {
    CMat S = CMat::Zero(m, m);
    RVec d = x - center;
    for (std::size_t k = 0; k < exponents.size(); ++k) {
      double mono = 1;
      for (int a = 0; a < n; ++a) mono *= std::pow(d(a), exponents[k][a]);
      S += mono * coeffs[k];
    }
    return S * std::exp(-d.squaredNorm() / (2 * width * width));
  }
};

inline ManufacturedField manufactured_field(int n, int m, const RVec& center, double width, int degree,
                                            std::uint64_t seed) {
  if (degree < 0 || !(width > 0)) throw std::invalid_argument("manufactured field: bad degree or width");
  ManufacturedField f;
  f.n = n;
  f.m = m;
  f.center = center;
  f.width = width;
  std::mt19937_64 rng(seed);
  std::vector<int> e(n, 0);
  std::function<void(int, int)> rec = [&](int a, int left) {
    if (a == n) {
      f.exponents.push_back(e);
      f.coeffs.push_back(detail::random_cmat(m, rng));
      return;
    }
    for (int k = 0; k <= left; ++k) {
      e[a] = k;
      rec(a + 1, left - k);
    }
    e[a] = 0;
  };
  rec(0, degree);
  return f;
}

// Killing field in the standard conjugate-factor basis.
inline TupleField field_from_killing(const SpinorMTuple& k) {
  TupleField f;
  f.domain = k.domain;
  f.m = k.m();
  f.values.resize(k.domain.size());
  CMat back = k.basis.transpose();
  for (std::size_t i = 0; i < k.domain.size(); ++i) f.values[i] = k.at(i) * back;
  return f;
}

struct SLReport {
  double h = 0;
  double lhs = 0;               // int |D-hat sigma|^2
  double grad = 0;              // int |nabla-hat sigma|^2
  double curvature = 0;         // int <R sigma, sigma> = int R_g/4 |sigma|^2 for flat M
  double psi_gradient = 0;      // int (n-1)/2 <c(grad kappa)(eps x eps) c(d_s) sigma, sigma>
  double psi_square = 0;        // int n(n-1)/4 kappa^2 |sigma|^2
  double boundary_dirac = 0;    // int 1/4 <D(s + chi s), s - chi s> + 1/4 <D(s - chi s), s + chi s>
  double boundary_mean = 0;     // int <A sigma, sigma> = int H/2 |sigma|^2
  double boundary_psi = 0;      // int (n-1)/n <c(e_n) Psi sigma, sigma>
  double residual = 0;          // lhs - sum of the others

  bool finite() const {
    for (double v : {lhs, grad, curvature, psi_gradient, psi_square, boundary_dirac, boundary_mean, boundary_psi,
                     residual})
      if (!std::isfinite(v)) return false;
    return true;
  }
};

inline SLReport sl_identity_terms(const OperatorAssembly& a, const TupleField& f, int jobs = 1) {
  validate_field(f, a);
  const auto& d = f.domain;
  const int n = a.n();
  SLReport r;
  r.h = d.h;
  auto get = [&](std::size_t k) { return f.values[k]; };

  auto trap_weight = [&](const std::vector<int>& ix, int skip) {
    double w = 1;
    for (int ax = 0; ax < n; ++ax) {
      if (ax == skip) continue;
      w *= d.h;
      if (ix[ax] == 0 || ix[ax] == d.count[ax] - 1) w *= 0.5;
    }
    return w;
  };

  // interior integrands, stored per point and summed in index order
  std::vector<std::array<double, 5>> vol(d.size());
  parallel_for(d.size(), jobs, [&](std::size_t idx) {
    auto ix = d.multi(idx);
    RVec x = d.point(ix);
    const CMat& S = f.values[idx];
    std::vector<CMat> dS;
    for (int i = 0; i < n; ++i) dS.push_back(detail::diff1(d, ix, i, get));
    double jac = std::exp(n * a.bg.cf.u(x)) * trap_weight(ix, -1);
    double s2 = S.squaredNorm();
    double gsum = 0;
    for (int i = 0; i < n; ++i) gsum += a.nabla_hat(i, x, S, dS[i]).squaredNorm();
    double kap = a.bg.kappa(x);
    RVec dk = std::exp(-a.bg.cf.u(x)) * a.bg.dkappa(x);
    double pg = -0.5 * (n - 1) * pairing(a.rep.clifford(dk) * a.xi(S), S);
    vol[idx] = {jac * a.dirac_hat(x, S, dS).squaredNorm(), jac * gsum, jac * 0.25 * a.scalar_curvature(x) * s2,
                jac * pg, jac * 0.25 * n * (n - 1) * kap * kap * s2};
  });
  for (const auto& v : vol) {
    r.lhs += v[0];
    r.grad += v[1];
    r.curvature += v[2];
    r.psi_gradient += v[3];
    r.psi_square += v[4];
  }

  for (const auto& face : box_faces(n)) {
    std::vector<std::size_t> pts;
    for (std::size_t idx = 0; idx < d.size(); ++idx) {
      auto ix = d.multi(idx);
      if (ix[face.axis] == (face.side == 0 ? 0 : d.count[face.axis] - 1)) pts.push_back(idx);
    }
    std::vector<std::array<double, 3>> acc(pts.size());
    parallel_for(pts.size(), jobs, [&](std::size_t k) {
      std::size_t idx = pts[k];
      auto ix = d.multi(idx);
      RVec x = d.point(ix);
      const CMat& S = f.values[idx];
      std::vector<CMat> dS(n, CMat::Zero(a.m(), a.m()));
      for (int i = 0; i < n; ++i)
        if (i != face.axis) dS[i] = detail::diff1(d, ix, i, get);
      double w = std::exp((n - 1) * a.bg.cf.u(x)) * trap_weight(ix, face.axis);
      CMat chiS = a.chi(face.inner, face.inner, S);
      std::vector<CMat> dPlus, dMinus;
      for (int i = 0; i < n; ++i) {
        CMat c = a.chi(face.inner, face.inner, dS[i]);
        dPlus.push_back(dS[i] + c);
        dMinus.push_back(dS[i] - c);
      }
      double bd = 0.25 * pairing(boundary_dirac(a, face, x, S + chiS, dPlus), S - chiS) +
                  0.25 * pairing(boundary_dirac(a, face, x, S - chiS, dMinus), S + chiS);
      double bm = 0.5 * face_mean_curvature(a, face, x) * S.squaredNorm();
      double bp = (n - 1.0) / n * pairing(a.rep.clifford(face.inner) * a.psi(x, S), S);
      acc[k] = {w * bd, w * bm, w * bp};
    });
    for (const auto& v : acc) {
      r.boundary_dirac += v[0];
      r.boundary_mean += v[1];
      r.boundary_psi += v[2];
    }
  }
  r.residual = r.lhs - (r.grad + r.curvature + r.psi_gradient + r.psi_square + r.boundary_dirac + r.boundary_mean +
                        r.boundary_psi);
  return r;
}

// Same field sampled on [lo, lo + extent] with each number of cells.
inline std::vector<SLReport> sl_identity_residual(const OperatorAssembly& a,
                                                  const std::function<CMat(const RVec&)>& sigma,
                                                  const RVec& lo, double extent, const std::vector<int>& cells,
                                                  int jobs = 1) {
  std::vector<SLReport> out;
  for (int c : cells) {
    GridDomain d = make_box(a.n(), lo, extent, c);
    out.push_back(sl_identity_terms(a, sample_field(d, a.m(), sigma), jobs));
  }
  return out;
}

// log2 of successive residual ratios
inline std::vector<double> observed_orders(const std::vector<SLReport>& rows) {
  std::vector<double> out;
  for (std::size_t k = 1; k < rows.size(); ++k)
    out.push_back(std::log2(std::abs(rows[k - 1].residual) / std::abs(rows[k].residual)) /
                  std::log2(rows[k - 1].h / rows[k].h));
  return out;
}

// ---------------------------------------------------------------------------
// curvature endomorphism bounds

struct EndomorphismBound {
  double min_eigenvalue = 0;
  double bound = 0;
  double margin = 0;  // min_eigenvalue - bound
};

namespace detail {

// vec(L S R^*) = (conj(R) kron L) vec(S)
inline CMat two_sided(const CMat& L, const CMat& R) { return Eigen::kroneckerProduct(CMat(R.conjugate()), L).eval(); }

inline double min_eig(const CMat& H) {
  Eigen::SelfAdjointEigenSolver<CMat> es(0.5 * (H + H.adjoint()));
  return es.eigenvalues().minCoeff();
}

}  // namespace detail

// -1/2 sum <R f_* w_j, w_i> c(w_j) (x) c(w_i) for a round leaf of scalar
// curvature R_h (zero for a flat leaf) and stretch factors mu on the leaf
// directions 1..n-1; direction 0 is the interval.
inline CMat leaf_curvature_endomorphism(const CliffordRep& rep, double R_h, const RVec& mu) {
  const int n = rep.n;
  if (mu.size() != n - 1) throw std::invalid_argument("curvature endomorphism: need n-1 stretch factors");
  if (n < 3) throw std::invalid_argument("curvature endomorphism: needs n >= 3");
  const double k = R_h / ((n - 1.0) * (n - 2.0));
  const int m = rep.m;
  CMat E = CMat::Zero(m * m, m * m);
  for (int a = 1; a < n; ++a)
    for (int b = a + 1; b < n; ++b) {
      CMat w = rep.gamma[a] * rep.gamma[b];
      E += -0.5 * k * mu(a - 1) * mu(b - 1) * detail::two_sided(w, w);
    }
  return E;
}

inline void check_stretch(const RVec& mu, double psi) {
  if (!(psi > 0)) throw std::invalid_argument("stretch factors: psi must be positive");
  for (int i = 0; i < mu.size(); ++i)
    if (mu(i) < 0 || mu(i) * psi > 1 + 1e-12)
      throw std::invalid_argument("stretch factors: need 0 <= mu_i and mu_i psi <= 1");
}

inline EndomorphismBound curvature_endomorphism_bound(const CliffordRep& rep, double R_h, double psi,
                                                      const RVec& mu) {
  check_stretch(mu, psi);
  if (R_h < 0) throw std::invalid_argument("curvature endomorphism: leaf curvature operator must be non-negative");
  EndomorphismBound b;
  b.min_eigenvalue = detail::min_eig(leaf_curvature_endomorphism(rep, R_h, mu));
  b.bound = -R_h / (4 * psi * psi);
  b.margin = b.min_eigenvalue - b.bound;
  return b;
}

// -1/2 sum_i c(e_n) c(e_i) (x) c(nabla_{f_* e_i} N) c(N) with the second
// fundamental form `second_form` of the target boundary in the leaf frame;
// e_n = N = direction 0.
inline CMat boundary_endomorphism(const CliffordRep& rep, const RMat& second_form, const RVec& mu) {
  const int n = rep.n;
  if (second_form.rows() != n - 1 || second_form.cols() != n - 1 || mu.size() != n - 1)
    throw std::invalid_argument("boundary endomorphism: size mismatch");
  const int m = rep.m;
  CMat E = CMat::Zero(m * m, m * m);
  const CMat& cn = rep.gamma[0];
  for (int i = 1; i < n; ++i)
    for (int k = 1; k < n; ++k) {
      double c = mu(i - 1) * second_form(i - 1, k - 1);
      if (c == 0) continue;
      E += -0.5 * c * detail::two_sided(CMat(cn * rep.gamma[i]), CMat(rep.gamma[k] * cn));
    }
  return E;
}

inline EndomorphismBound boundary_endomorphism_bound(const CliffordRep& rep, const RMat& second_form, double psi,
                                                     const RVec& mu) {
  check_stretch(mu, psi);
  Eigen::SelfAdjointEigenSolver<RMat> es(second_form);
  if ((second_form - second_form.transpose()).norm() > 1e-12 || es.eigenvalues().minCoeff() < -1e-12)
    throw std::invalid_argument("boundary endomorphism: second fundamental form must be symmetric PSD");
  EndomorphismBound b;
  b.min_eigenvalue = detail::min_eig(boundary_endomorphism(rep, second_form, mu));
  b.bound = -second_form.trace() / (2 * psi);
  b.margin = b.min_eigenvalue - b.bound;
  return b;
}

// ---------------------------------------------------------------------------
// chi for a normal map homotopic to the Gauss map

struct ChiLambdaReport {
  double chi_square_max = 0;
  double chi_adjoint_max = 0;
  double orthogonal_pairing_max = 0;  // |<(eps x eps)(c(e_n) x c(Y)) s, s>| over Y perpendicular to N
  double psi_reduction_max = 0;       // |<c(e_n) Psi s, s> - (n/2) kappa <d, N> |s|^2|
  int samples = 0;
};

// samples: points x with unit maps N(x); e_n is taken equal to N.
inline ChiLambdaReport chi_lambda_pairing_check(const OperatorAssembly& a, const std::vector<RVec>& points,
                                                const std::vector<RVec>& normals, std::uint64_t seed) {
  if (points.size() != normals.size()) throw std::invalid_argument("chi check: points and normals differ in size");
  ChiLambdaReport r;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  const int n = a.n(), m = a.m();
  const double target = a.even() ? -1.0 : 1.0;
  const CMat I2 = CMat::Identity(m * m, m * m);
  for (std::size_t k = 0; k < points.size(); ++k) {
    const RVec& x = points[k];
    const RVec& N = normals[k];
    if (std::abs(N.norm() - 1) > 1e-12) throw std::invalid_argument("chi check: normal map must be unit");
    CMat X = a.chi_matrix(N, N);
    r.chi_square_max = std::max(r.chi_square_max, opnorm(X * X - I2));
    r.chi_adjoint_max = std::max(r.chi_adjoint_max, opnorm(X.adjoint() - X));
    CMat S = detail::random_cmat(m, rng);
    S = 0.5 * (S + target * a.chi(N, N, S));
    const double s2 = S.squaredNorm();
    RVec Y(n);
    for (int i = 0; i < n; ++i) Y(i) = g(rng);
    Y -= Y.dot(N) * N;
    if (Y.norm() > 1e-8) {
      Y.normalize();
      CMat P = OperatorAssembly::right(a.beta(N) * S, a.beta(Y));
      r.orthogonal_pairing_max = std::max(r.orthogonal_pairing_max, std::abs(pairing(P, S)) / s2);
    }
    double lhs = pairing(a.rep.clifford(N) * a.psi(x, S), S);
    double rhs = 0.5 * n * a.bg.kappa(x) * a.bg.twist_dir.dot(N) * s2;
    r.psi_reduction_max = std::max(r.psi_reduction_max, std::abs(lhs - rhs) / s2);
    ++r.samples;
  }
  return r;
}

}  // namespace rigidity_lab
