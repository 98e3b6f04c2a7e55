#pragma once
// Complex Clifford representations with c(v)^2 = -|v|^2.

#include <Eigen/Dense>
#include <unsupported/Eigen/KroneckerProduct>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <complex>
#include <stdexcept>
#include <vector>

namespace rigidity_lab {

using cplx = std::complex<double>;
using CMat = Eigen::MatrixXcd;
using CVec = Eigen::VectorXcd;
using RMat = Eigen::MatrixXd;
using RVec = Eigen::VectorXd;

inline constexpr double kAlgebraTol = 1e-12;
inline const cplx kI{0.0, 1.0};

struct CliffordRep {
  int n = 0;
  int m = 0;
  std::vector<CMat> gamma;
  CMat grading;  // empty when n is odd
  CMat volume;   // empty when n is even

  bool even() const { return n % 2 == 0; }

  CMat identity() const { return CMat::Identity(m, m); }

  // c(X) = sum_i X_i gamma_i
  CMat clifford(const RVec& X) const {
    CMat out = CMat::Zero(m, m);
    for (int i = 0; i < n; ++i) out += X(i) * gamma[i];
    return out;
  }
};

namespace detail {

inline CMat pauli(int k) {
  CMat p(2, 2);
  switch (k) {
    case 1: p << 0, 1, 1, 0; break;
    case 2: p << 0, -kI, kI, 0; break;
    default: p << 1, 0, 0, -1; break;
  }
  return p;
}

inline CMat kron_chain(const std::vector<CMat>& factors) {
  CMat out = CMat::Identity(1, 1);
  for (const auto& f : factors) {
    CMat next = Eigen::kroneckerProduct(out, f).eval();
    out = next;
  }
  return out;
}

}  // namespace detail

// Iterated 2x2 tensor blocks: slot j carries sigma_3 on the left of the
// active Pauli factor and the identity on the right.
inline CliffordRep build_clifford_rep(int n) {
  if (n < 2) throw std::invalid_argument("invalid dimension: n must be >= 2");
  const int k = n / 2;
  CliffordRep rep;
  rep.n = n;
  rep.m = 1 << k;
  const CMat I2 = CMat::Identity(2, 2);
  std::vector<CMat> herm;
  for (int j = 0; j < k; ++j) {
    for (int which : {1, 2}) {
      std::vector<CMat> f;
      for (int a = 0; a < k; ++a) {
        if (a < j) f.push_back(detail::pauli(3));
        else if (a == j) f.push_back(detail::pauli(which));
        else f.push_back(I2);
      }
      herm.push_back(detail::kron_chain(f));
    }
  }
  std::vector<CMat> chir(static_cast<size_t>(k), detail::pauli(3));
  const CMat top = detail::kron_chain(chir);
  if (n % 2 == 1) herm.push_back(top);
  for (auto& e : herm) rep.gamma.push_back(kI * e);

  if (rep.even()) {
    rep.grading = top;
  } else {
    CMat prod = rep.identity();
    for (const auto& g : rep.gamma) prod = prod * g;
    cplx phase = std::pow(kI, (n + 1) / 2);
    CMat vol = phase * prod;
    // pick the sign of the last generator so that the volume form is +1
    if (std::real(vol(0, 0)) < 0) {
      rep.gamma.back() = -rep.gamma.back();
      vol = -vol;
    }
    rep.volume = vol;
  }
  return rep;
}

// Apply a unitary change of spinor basis to every structure map.
inline CliffordRep transform_rep(const CliffordRep& rep, const CMat& U) {
  CliffordRep out = rep;
  for (auto& g : out.gamma) g = U.adjoint() * g * U;
  if (rep.grading.size()) out.grading = U.adjoint() * rep.grading * U;
  if (rep.volume.size()) out.volume = U.adjoint() * rep.volume * U;
  return out;
}

// Matrix of eps-bar c-bar(X) (even n) or sqrt(-1) c-bar(X) (odd n) acting on
// the conjugate factor; linear in X, no normalization.
inline CMat omega_unnormalized(const CliffordRep& rep, const RVec& X) {
  CMat base = rep.even() ? CMat(rep.grading * rep.clifford(X)) : CMat(kI * rep.clifford(X));
  return base.conjugate();
}

inline CMat omega_matrix(const CliffordRep& rep, const RVec& X) {
  if (X.size() != rep.n) throw std::invalid_argument("omega_matrix: dimension mismatch");
  if (std::abs(X.norm() - 1.0) > kAlgebraTol)
    throw std::domain_error("omega_matrix: X must be normalized by the caller");
  return omega_unnormalized(rep, X);
}

inline RVec axis(int n, int i) {
  RVec e = RVec::Zero(n);
  e(i) = 1.0;
  return e;
}

// Unitary U with U* w U = diag(+1 (m/2 times), -1 (m/2 times)).
inline CMat diagonalize_omega(const CMat& w) {
  const int m = static_cast<int>(w.rows());
  const int half = m / 2;
  bool diag = true;
  for (int i = 0; i < m && diag; ++i)
    for (int j = 0; j < m; ++j) {
      double target = (i == j) ? (i < half ? 1.0 : -1.0) : 0.0;
      if (std::abs(w(i, j) - target) > 1e-14) { diag = false; break; }
    }
  if (diag) return CMat::Identity(m, m);

  Eigen::SelfAdjointEigenSolver<CMat> es(w);
  // eigenvalues come ascending: -1 block first
  CMat U(m, m);
  for (int c = 0; c < m; ++c) {
    int src = c < half ? half + c : c - half;
    U.col(c) = es.eigenvectors().col(src);
  }
  // deterministic phase: largest-modulus entry real and positive
  for (int c = 0; c < m; ++c) {
    Eigen::Index r = 0;
    U.col(c).cwiseAbs().maxCoeff(&r);
    cplx ph = U(r, c) / std::abs(U(r, c));
    U.col(c) /= ph;
  }
  return U;
}

inline CMat diagonalize_omega(const CliffordRep& rep, const RVec& N0) {
  return diagonalize_omega(omega_matrix(rep, N0));
}

struct CliffordResiduals {
  double anticommutation = 0;  // gamma_i gamma_j + gamma_j gamma_i + 2 delta_ij
  double skew = 0;             // gamma_i^* + gamma_i
  double grading = 0;          // eps hermitian, eps^2 = 1, eps anticommutes
  double volume = 0;           // Gamma^2 = 1, Gamma commutes
  double max() const { return std::max({anticommutation, skew, grading, volume}); }
};

inline double opnorm(const CMat& A) {
  if (A.size() == 0) return 0.0;
  Eigen::JacobiSVD<CMat> svd(A);
  return svd.singularValues()(0);
}

inline CliffordResiduals clifford_residuals(const CliffordRep& rep) {
  CliffordResiduals r;
  const CMat I = rep.identity();
  for (int i = 0; i < rep.n; ++i) {
    r.skew = std::max(r.skew, opnorm(rep.gamma[i].adjoint() + rep.gamma[i]));
    for (int j = 0; j < rep.n; ++j) {
      CMat ac = rep.gamma[i] * rep.gamma[j] + rep.gamma[j] * rep.gamma[i];
      if (i == j) ac += 2.0 * I;
      r.anticommutation = std::max(r.anticommutation, opnorm(ac));
    }
  }
  if (rep.even()) {
    const CMat& e = rep.grading;
    r.grading = std::max(opnorm(e - e.adjoint()), opnorm(e * e - I));
    for (const auto& g : rep.gamma) r.grading = std::max(r.grading, opnorm(e * g + g * e));
  } else {
    const CMat& v = rep.volume;
    r.volume = opnorm(v * v - I);
    for (const auto& g : rep.gamma) r.volume = std::max(r.volume, opnorm(v * g - g * v));
  }
  return r;
}

// Residuals of the omega algebra for unit X, Y.
struct OmegaResiduals {
  double hermitian = 0;
  double involution = 0;
  double anticommutation = 0;  // w_X w_Y + w_Y w_X - 2<X,Y>
};

inline OmegaResiduals omega_residuals(const CliffordRep& rep, const RVec& X, const RVec& Y) {
  const CMat wx = omega_matrix(rep, X);
  const CMat wy = omega_matrix(rep, Y);
  const CMat I = rep.identity();
  OmegaResiduals o;
  o.hermitian = std::max(opnorm(wx - wx.adjoint()), opnorm(wy - wy.adjoint()));
  o.involution = std::max(opnorm(wx * wx - I), opnorm(wy * wy - I));
  o.anticommutation = opnorm(wx * wy + wy * wx - 2.0 * X.dot(Y) * I);
  return o;
}

inline nlohmann::json generators_json(const CliffordRep& rep) {
  auto dump = [](const CMat& A) {
    nlohmann::json rows = nlohmann::json::array();
    for (int i = 0; i < A.rows(); ++i)
      for (int j = 0; j < A.cols(); ++j) rows.push_back({A(i, j).real(), A(i, j).imag()});
    return rows;
  };
  nlohmann::json j;
  j["n"] = rep.n;
  j["m"] = rep.m;
  j["generators"] = nlohmann::json::array();
  for (const auto& g : rep.gamma) j["generators"].push_back(dump(g));
  if (rep.even()) j["grading"] = dump(rep.grading);
  else j["volume"] = dump(rep.volume);
  return j;
}

}  // namespace rigidity_lab
