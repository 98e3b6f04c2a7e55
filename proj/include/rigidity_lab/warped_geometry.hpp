#pragma once
// Warped products dr^2 + phi(r)^2 h, their conformal product models, and
// finite-difference curvature oracles for metrics given pointwise.

#include "clifford.hpp"

#include <boost/math/interpolators/cardinal_cubic_b_spline.hpp>
#include <boost/math/tools/roots.hpp>

#include <cmath>
#include <functional>
#include <limits>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

namespace rigidity_lab {

using ScalarFn = std::function<double(double)>;

struct WarpProfile {
  std::string name;
  ScalarFn phi, dphi, ddphi;
  double r_minus = 0, r_plus = 1;
};

inline void validate_profile(const WarpProfile& p, int samples = 257) {
  if (!(p.r_minus < p.r_plus)) throw std::invalid_argument("profile: need r- < r+");
  for (int k = 0; k < samples; ++k) {
    double r = p.r_minus + (p.r_plus - p.r_minus) * k / (samples - 1);
    if (!(p.phi(r) > 0)) throw std::invalid_argument("profile: phi must be positive on [r-, r+]");
  }
}

// Named closed-form profiles; params are scale factors where relevant.
inline WarpProfile analytic_profile(const std::string& kind, double r_minus, double r_plus,
                                    std::vector<double> params = {}) {
  WarpProfile p;
  p.name = kind;
  p.r_minus = r_minus;
  p.r_plus = r_plus;
  auto par = [&](size_t i, double dflt) { return i < params.size() ? params[i] : dflt; };
  if (kind == "constant") {
    double c = par(0, 1.0);
    p.phi = [c](double) { return c; };
    p.dphi = [](double) { return 0.0; };
    p.ddphi = [](double) { return 0.0; };
  } else if (kind == "exp") {
    double k = par(0, 1.0);
    p.phi = [k](double r) { return std::exp(k * r); };
    p.dphi = [k](double r) { return k * std::exp(k * r); };
    p.ddphi = [k](double r) { return k * k * std::exp(k * r); };
  } else if (kind == "linear") {
    double a = par(0, 1.0), b = par(1, 0.0);
    p.phi = [a, b](double r) { return a * r + b; };
    p.dphi = [a](double) { return a; };
    p.ddphi = [](double) { return 0.0; };
  } else if (kind == "sin") {
    p.phi = [](double r) { return std::sin(r); };
    p.dphi = [](double r) { return std::cos(r); };
    p.ddphi = [](double r) { return -std::sin(r); };
  } else if (kind == "sinh") {
    p.phi = [](double r) { return std::sinh(r); };
    p.dphi = [](double r) { return std::cosh(r); };
    p.ddphi = [](double r) { return std::sinh(r); };
  } else if (kind == "cosh") {
    p.phi = [](double r) { return std::cosh(r); };
    p.dphi = [](double r) { return std::sinh(r); };
    p.ddphi = [](double r) { return std::cosh(r); };
  } else if (kind == "sech") {
    p.phi = [](double r) { return 1.0 / std::cosh(r); };
    p.dphi = [](double r) { return -std::tanh(r) / std::cosh(r); };
    p.ddphi = [](double r) {
      double t = std::tanh(r), s = 1.0 / std::cosh(r);
      return s * (t * t - s * s);
    };
  } else {
    throw std::invalid_argument("unknown profile kind: " + kind);
  }
  validate_profile(p);
  return p;
}

// Uniform samples on [r-, r+]; derivatives come from the spline itself.
inline WarpProfile spline_profile(const std::vector<double>& samples, double r_minus, double r_plus) {
  if (samples.size() < 4) throw std::invalid_argument("spline profile needs >= 4 samples");
  double step = (r_plus - r_minus) / static_cast<double>(samples.size() - 1);
  auto sp = std::make_shared<boost::math::interpolators::cardinal_cubic_b_spline<double>>(
      samples.begin(), samples.end(), r_minus, step);
  WarpProfile p;
  p.name = "spline";
  p.r_minus = r_minus;
  p.r_plus = r_plus;
  p.phi = [sp](double r) { return (*sp)(r); };
  p.dphi = [sp](double r) { return sp->prime(r); };
  p.ddphi = [sp](double r) { return sp->double_prime(r); };
  validate_profile(p);
  return p;
}

struct WarpedMetricSpec {
  int n = 3;
  WarpProfile profile;
  ScalarFn fiber_scalar_curvature = [](double) { return 0.0; };
  bool fiber_ricci_positive = false;
  bool fiber_curvature_operator_nonneg = true;
};

inline void validate_spec(const WarpedMetricSpec& s) {
  if (s.n <= 2) throw std::invalid_argument("warped metric: n must exceed 2");
  validate_profile(s.profile);
}

// ---------------------------------------------------------------------------
// closed forms

inline double scalar_curvature_warped(const WarpedMetricSpec& spec, double r) {
  const auto& p = spec.profile;
  if (r < p.r_minus - 1e-14 || r > p.r_plus + 1e-14)
    throw std::domain_error("scalar_curvature_warped: r outside [r-, r+]");
  const double f = p.phi(r), f1 = p.dphi(r), f2 = p.ddphi(r);
  const double q = f1 / f;
  const double dq = f2 / f - q * q;
  const int n = spec.n;
  return spec.fiber_scalar_curvature(r) / (f * f) - n * (n - 1) * q * q - 2.0 * (n - 1) * dq;
}

enum class Side { Plus, Minus };

inline double boundary_mean_curvature(const WarpedMetricSpec& spec, Side side) {
  const auto& p = spec.profile;
  const double r = side == Side::Plus ? p.r_plus : p.r_minus;
  const double sgn = side == Side::Plus ? 1.0 : -1.0;
  return sgn * (spec.n - 1) * p.dphi(r) / p.phi(r);
}

struct LogConcavity {
  double min_value;  // min of -(log phi)'' over the grid
  bool strict;
};

inline LogConcavity log_concavity_report(const WarpProfile& p, int samples) {
  if (samples < 2) throw std::invalid_argument("log_concavity_report: samples >= 2");
  double mn = std::numeric_limits<double>::infinity();
  for (int k = 0; k < samples; ++k) {
    double r = p.r_minus + (p.r_plus - p.r_minus) * k / (samples - 1);
    double q = p.dphi(r) / p.phi(r);
    double v = -(p.ddphi(r) / p.phi(r) - q * q);
    mn = std::min(mn, v);
  }
  return {mn, mn > 0};
}

inline double conformal_mean_curvature(double H_bar, double psi, double dpsi_dn, int n) {
  if (!(psi > 0)) throw std::domain_error("conformal_mean_curvature: psi must be positive");
  return H_bar / psi - (n - 1) * dpsi_dn / (psi * psi);
}

struct AngleSample {
  double gamma;
  double dgamma_dr;
};

inline double rotational_angle_value(double phi, double tau_prime) {
  double t = tau_prime * phi;
  return std::acos(-t / std::sqrt(t * t + 1.0));
}

// tau_prime plays the role of the radial slope of the rotational graph.
inline AngleSample rotational_domain_angle(const WarpProfile& p, const ScalarFn& tau_prime, double r,
                                           double fd_step = 1e-5) {
  auto g = [&](double x) { return rotational_angle_value(p.phi(x), tau_prime(x)); };
  double lo = std::max(p.r_minus, r - fd_step), hi = std::min(p.r_plus, r + fd_step);
  return {g(r), (g(hi) - g(lo)) / (hi - lo)};
}

struct AngleProfile {
  std::vector<double> r, gamma, dgamma;
  bool decreasing;
};

inline AngleProfile rotational_angle_profile(const WarpProfile& p, const ScalarFn& tau_prime, int samples) {
  AngleProfile out;
  out.decreasing = true;
  for (int k = 0; k < samples; ++k) {
    double r = p.r_minus + (p.r_plus - p.r_minus) * k / (samples - 1);
    auto a = rotational_domain_angle(p, tau_prime, r);
    out.r.push_back(r);
    out.gamma.push_back(a.gamma);
    out.dgamma.push_back(a.dgamma_dr);
    if (k > 0 && out.gamma[k] > out.gamma[k - 1] + 1e-15) out.decreasing = false;
  }
  return out;
}

// ---------------------------------------------------------------------------
// conformal reparametrization s(r) = int_{r-}^{r} 1/phi

namespace detail {

template <class F>
double simpson_step(const F& f, double a, double b, double fa, double fm, double fb, double whole,
                    double tol, int depth) {
  double m = 0.5 * (a + b);
  double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  double flm = f(lm), frm = f(rm);
  double left = (m - a) / 6.0 * (fa + 4 * flm + fm);
  double right = (b - m) / 6.0 * (fm + 4 * frm + fb);
  double delta = left + right - whole;
  if (depth <= 0 || std::abs(delta) <= 15.0 * tol) return left + right + delta / 15.0;
  return simpson_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
         simpson_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

}  // namespace detail

template <class F>
double adaptive_simpson(const F& f, double a, double b, double tol, int max_depth = 40) {
  if (a == b) return 0.0;
  double fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
  double whole = (b - a) / 6.0 * (fa + 4 * fm + fb);
  return detail::simpson_step(f, a, b, fa, fm, fb, whole, tol, max_depth);
}

struct ConformalModel {
  WarpProfile profile;
  double quad_tol = 1e-10;
  double s_max = 0;

  double s_of_r(double r) const {
    const auto& phi = profile.phi;
    return adaptive_simpson([&](double t) { return 1.0 / phi(t); }, profile.r_minus, r, quad_tol);
  }
  double r_of_s(double s) const {
    if (s <= 0) return profile.r_minus;
    if (s >= s_max) return profile.r_plus;
    auto f = [&](double r) { return s_of_r(r) - s; };
    auto tol = [](double a, double b) { return std::abs(b - a) <= 1e-12; };
    auto pr = boost::math::tools::bisect(f, profile.r_minus, profile.r_plus, tol);
    return 0.5 * (pr.first + pr.second);
  }
  double psi(double s) const { return profile.phi(r_of_s(s)); }
  // d psi / ds = phi'(r) phi(r)
  double psi_prime(double s) const {
    double r = r_of_s(s);
    return profile.dphi(r) * profile.phi(r);
  }
};

struct ReparamReport {
  double psi_residual = 0;       // max |psi(s(r)) - phi(r)|
  double pullback_residual = 0;  // max |psi(s(r)) s'(r) - 1|
  bool monotone = true;
};

inline ConformalModel reparametrize(const WarpedMetricSpec& spec, double quad_tol = 1e-10) {
  validate_spec(spec);
  ConformalModel cm;
  cm.profile = spec.profile;
  cm.quad_tol = quad_tol;
  cm.s_max = cm.s_of_r(spec.profile.r_plus);
  if (!(cm.s_max > 0)) throw std::logic_error("reparametrize: s is not increasing");
  return cm;
}

inline ReparamReport reparam_report(const ConformalModel& cm, int samples = 65) {
  ReparamReport rep;
  const auto& p = cm.profile;
  double prev = -1;
  for (int k = 0; k < samples; ++k) {
    double r = p.r_minus + (p.r_plus - p.r_minus) * k / (samples - 1);
    double s = cm.s_of_r(r);
    if (k > 0 && !(s > prev)) rep.monotone = false;
    prev = s;
    rep.psi_residual = std::max(rep.psi_residual, std::abs(cm.psi(s) - p.phi(r)));
    double d = 1e-4;
    double c = std::clamp(r, p.r_minus + d, p.r_plus - d);
    double ds = (cm.s_of_r(c + d) - cm.s_of_r(c - d)) / (2 * d);
    ds += (r - c) * (-p.dphi(c) / (p.phi(c) * p.phi(c)));
    rep.pullback_residual = std::max(rep.pullback_residual, std::abs(p.phi(r) * ds - 1.0));
  }
  return rep;
}

// ---------------------------------------------------------------------------
// finite-difference curvature of a metric field x -> g(x)

using MetricFn = std::function<RMat(const RVec&)>;

namespace detail {

// Christoffel symbols Gamma^k_ij stored as G[k](i,j), central differences.
inline std::vector<RMat> christoffel_fd(const MetricFn& g, const RVec& x, double h) {
  const int n = static_cast<int>(x.size());
  std::vector<RMat> dg(n);
  for (int l = 0; l < n; ++l) {
    RVec xp = x, xm = x;
    xp(l) += h;
    xm(l) -= h;
    dg[l] = (g(xp) - g(xm)) / (2 * h);
  }
  RMat ginv = g(x).inverse();
  std::vector<RMat> G(n, RMat::Zero(n, n));
  for (int k = 0; k < n; ++k)
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        double acc = 0;
        for (int l = 0; l < n; ++l) acc += ginv(k, l) * (dg[i](j, l) + dg[j](i, l) - dg[l](i, j));
        G[k](i, j) = 0.5 * acc;
      }
  return G;
}

}  // namespace detail

// Coordinate Riemann tensor R^l_{ijk} = dGamma terms, R(d_i, d_j) d_k = R^l_ijk d_l.
inline std::vector<double> riemann_fd(const MetricFn& g, const RVec& x, double h) {
  const int n = static_cast<int>(x.size());
  auto G = detail::christoffel_fd(g, x, h);
  std::vector<std::vector<RMat>> dG(n);
  for (int a = 0; a < n; ++a) {
    RVec xp = x, xm = x;
    xp(a) += h;
    xm(a) -= h;
    auto Gp = detail::christoffel_fd(g, xp, h);
    auto Gm = detail::christoffel_fd(g, xm, h);
    dG[a].resize(n);
    for (int k = 0; k < n; ++k) dG[a][k] = (Gp[k] - Gm[k]) / (2 * h);
  }
  std::vector<double> R(static_cast<size_t>(n * n * n * n), 0.0);
  auto idx = [n](int l, int i, int j, int k) { return ((l * n + i) * n + j) * n + k; };
  for (int l = 0; l < n; ++l)
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        for (int k = 0; k < n; ++k) {
          double v = dG[i][l](j, k) - dG[j][l](i, k);
          for (int p = 0; p < n; ++p) v += G[l](i, p) * G[p](j, k) - G[l](j, p) * G[p](i, k);
          R[idx(l, i, j, k)] = v;
        }
  return R;
}

inline double scalar_curvature_fd(const MetricFn& g, const RVec& x, double h) {
  const int n = static_cast<int>(x.size());
  auto R = riemann_fd(g, x, h);
  auto idx = [n](int l, int i, int j, int k) { return ((l * n + i) * n + j) * n + k; };
  RMat ginv = g(x).inverse();
  double s = 0;
  // Ric_jk = R^i_{ijk}
  for (int j = 0; j < n; ++j)
    for (int k = 0; k < n; ++k) {
      double ric = 0;
      for (int i = 0; i < n; ++i) ric += R[idx(i, i, j, k)];
      s += ginv(j, k) * ric;
    }
  return s;
}

// Warped metric over a flat torus fiber in coordinates (r, theta_1, ...).
inline MetricFn warped_torus_metric(const WarpProfile& p, int n) {
  return [p, n](const RVec& x) {
    RMat g = RMat::Identity(n, n);
    double f = p.phi(x(0));
    for (int i = 1; i < n; ++i) g(i, i) = f * f;
    return g;
  };
}

// Warped metric over the unit 2-sphere, coordinates (r, theta, phi).
inline MetricFn warped_sphere3_metric(const WarpProfile& p) {
  return [p](const RVec& x) {
    RMat g = RMat::Zero(3, 3);
    double f = p.phi(x(0));
    g(0, 0) = 1;
    g(1, 1) = f * f;
    g(2, 2) = f * f * std::sin(x(1)) * std::sin(x(1));
    return g;
  };
}

// ---------------------------------------------------------------------------
// conformally flat metrics e^{2u} delta on the half-space

struct ConformalFactor {
  std::string name;
  std::function<double(const RVec&)> u;
  std::function<RVec(const RVec&)> grad;
  std::function<RMat(const RVec&)> hess;
};

inline ConformalFactor hyperbolic_factor(int n) {
  ConformalFactor cf;
  cf.name = "hyperbolic";
  cf.u = [](const RVec& x) {
    if (!(x(0) > 0)) throw std::domain_error("half-space: x1 must be positive");
    return -std::log(x(0));
  };
  cf.grad = [n](const RVec& x) {
    RVec g = RVec::Zero(n);
    g(0) = -1.0 / x(0);
    return g;
  };
  cf.hess = [n](const RVec& x) {
    RMat H = RMat::Zero(n, n);
    H(0, 0) = 1.0 / (x(0) * x(0));
    return H;
  };
  return cf;
}

// (x1)^-1 (1 + amp sin x2)
inline ConformalFactor perturbed_hyperbolic_factor(int n, double amp = 0.01) {
  ConformalFactor cf;
  cf.name = "perturbed";
  cf.u = [amp](const RVec& x) {
    if (!(x(0) > 0)) throw std::domain_error("half-space: x1 must be positive");
    return -std::log(x(0)) + std::log1p(amp * std::sin(x(1)));
  };
  cf.grad = [n, amp](const RVec& x) {
    RVec g = RVec::Zero(n);
    g(0) = -1.0 / x(0);
    g(1) = amp * std::cos(x(1)) / (1 + amp * std::sin(x(1)));
    return g;
  };
  cf.hess = [n, amp](const RVec& x) {
    RMat H = RMat::Zero(n, n);
    H(0, 0) = 1.0 / (x(0) * x(0));
    double q = 1 + amp * std::sin(x(1));
    H(1, 1) = (-amp * std::sin(x(1)) * q - amp * amp * std::cos(x(1)) * std::cos(x(1))) / (q * q);
    return H;
  };
  return cf;
}

inline ConformalFactor flat_factor(int n) {
  ConformalFactor cf;
  cf.name = "flat";
  cf.u = [](const RVec&) { return 0.0; };
  cf.grad = [n](const RVec&) { return RVec::Zero(n); };
  cf.hess = [n](const RVec&) { return RMat::Zero(n, n); };
  return cf;
}

inline MetricFn conformal_metric(const ConformalFactor& cf, int n) {
  return [cf, n](const RVec& x) { return RMat(std::exp(2 * cf.u(x)) * RMat::Identity(n, n)); };
}

// Frame components R_ijkl in the frame e_i = e^{-u} d_i, normalized so that
// the hyperbolic metric gives -(d_ik d_jl - d_il d_jk).
inline std::vector<double> riemann_conformal(const ConformalFactor& cf, const RVec& x) {
  const int n = static_cast<int>(x.size());
  RVec du = cf.grad(x);
  RMat A = cf.hess(x) - du * du.transpose() + 0.5 * du.squaredNorm() * RMat::Identity(n, n);
  double scale = std::exp(-2 * cf.u(x));
  std::vector<double> R(static_cast<size_t>(n * n * n * n));
  auto d = [](int a, int b) { return a == b ? 1.0 : 0.0; };
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k)
        for (int l = 0; l < n; ++l) {
          double kn = A(i, k) * d(j, l) + A(j, l) * d(i, k) - A(i, l) * d(j, k) - A(j, k) * d(i, l);
          R[((i * n + j) * n + k) * n + l] = -scale * kn;
        }
  return R;
}

// Same normalization computed from Christoffel symbols of the pointwise metric.
inline std::vector<double> riemann_conformal_fd(const ConformalFactor& cf, const RVec& x, double h) {
  const int n = static_cast<int>(x.size());
  MetricFn g = conformal_metric(cf, n);
  auto Rc = riemann_fd(g, x, h);
  RMat gx = g(x);
  double e = std::exp(-cf.u(x));  // frame vectors are e * d_i
  std::vector<double> R(static_cast<size_t>(n * n * n * n));
  auto idx = [n](int l, int i, int j, int k) { return ((l * n + i) * n + j) * n + k; };
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k)
        for (int l = 0; l < n; ++l) {
          // g(R(e_i, e_j) e_l, e_k)
          double v = 0;
          for (int p = 0; p < n; ++p) v += gx(k, p) * Rc[idx(p, i, j, l)];
          R[((i * n + j) * n + k) * n + l] = v * e * e * e * e;
        }
  return R;
}

// R = -e^{-2u} (2(n-1) lap u + (n-2)(n-1) |du|^2) with central differences of u.
inline double conformal_scalar_curvature_fd(const ConformalFactor& cf, const RVec& x, double h) {
  const int n = static_cast<int>(x.size());
  double u0 = cf.u(x), lap = 0, grad2 = 0;
  for (int i = 0; i < n; ++i) {
    RVec xp = x, xm = x;
    xp(i) += h;
    xm(i) -= h;
    double up = cf.u(xp), um = cf.u(xm);
    lap += (up - 2 * u0 + um) / (h * h);
    double g = (up - um) / (2 * h);
    grad2 += g * g;
  }
  return -std::exp(-2 * u0) * (2.0 * (n - 1) * lap + (n - 2.0) * (n - 1) * grad2);
}

// ---------------------------------------------------------------------------
// hyperplanes in the half-space model

struct UmbilicityReport {
  std::vector<RVec> principal;  // per sample
  double max_deviation = 0;
};

// Hyperplane {<N, x> = offset} with N the unit normal pointing into the region
// of interest. Principal curvatures use the conformal second fundamental form
// e^{-u}(II_delta + d_{N_out} u) with II_delta = 0.
inline UmbilicityReport hyperbolic_face_umbilicity(const RVec& N, double offset,
                                                  const std::vector<RVec>& points) {
  const int n = static_cast<int>(N.size());
  if (std::abs(N.norm() - 1.0) > 1e-12) throw std::invalid_argument("umbilicity: N must be unit");
  ConformalFactor cf = hyperbolic_factor(n);
  // tangent basis of the hyperplane
  RMat P = RMat::Identity(n, n) - N * N.transpose();
  Eigen::JacobiSVD<RMat> svd(P, Eigen::ComputeFullU);
  RMat T = svd.matrixU().leftCols(n - 1);
  UmbilicityReport rep;
  for (const auto& x : points) {
    if (std::abs(N.dot(x) - offset) > 1e-9) throw std::invalid_argument("umbilicity: point off the hyperplane");
    if (!(x(0) > 0)) throw std::domain_error("umbilicity: point outside the half-space");
    double e = std::exp(-cf.u(x));
    RVec Nout = -N;
    double dn = cf.grad(x).dot(Nout);
    RMat II = dn * (T.transpose() * T);  // II_delta vanishes for a hyperplane
    RMat shape = e * II;
    Eigen::SelfAdjointEigenSolver<RMat> es(shape);
    RVec k = es.eigenvalues();
    rep.principal.push_back(k);
    for (int i = 0; i < k.size(); ++i)
      rep.max_deviation = std::max(rep.max_deviation, std::abs(k(i) - N(0)));
  }
  return rep;
}

}  // namespace rigidity_lab
