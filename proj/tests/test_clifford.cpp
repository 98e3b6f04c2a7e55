#include <catch_amalgamated.hpp>

#include <rigidity_lab/clifford.hpp>

#include <random>

using namespace rigidity_lab;

namespace {

RVec random_unit(std::mt19937_64& rng, int n) {
  std::normal_distribution<double> g;
  RVec v(n);
  for (int i = 0; i < n; ++i) v(i) = g(rng);
  return v / v.norm();
}

}  // namespace

TEST_CASE("defining relations for every small dimension", "[clifford]") {
  for (int n = 2; n <= 7; ++n) {
    auto rep = build_clifford_rep(n);
    REQUIRE(rep.m == (1 << (n / 2)));
    REQUIRE(static_cast<int>(rep.gamma.size()) == n);
    auto r = clifford_residuals(rep);
    CHECK(r.max() < 1e-12);
  }
}

TEST_CASE("n = 2 generators square to minus one and anticommute", "[clifford]") {
  auto rep = build_clifford_rep(2);
  CMat I = CMat::Identity(2, 2);
  CHECK(opnorm(rep.gamma[0] * rep.gamma[0] + I) < 1e-15);
  CHECK(opnorm(rep.gamma[0] * rep.gamma[1] + rep.gamma[1] * rep.gamma[0]) < 1e-15);
}

TEST_CASE("odd volume element", "[clifford]") {
  for (int n : {3, 5, 7}) {
    auto rep = build_clifford_rep(n);
    // recompute the volume product from the generators directly
    CMat prod = rep.identity();
    for (const auto& g : rep.gamma) prod *= g;
    cplx phase = std::pow(cplx(0, 1), (n + 1) / 2);
    CMat vol = phase * prod;
    CHECK(opnorm(vol - rep.volume) < 1e-12);
    CHECK(opnorm(vol * vol - rep.identity()) < 1e-12);
    CHECK(opnorm(vol * rep.gamma[0] - rep.gamma[0] * vol) < 1e-12);
    CHECK(opnorm(vol - rep.identity()) < 1e-12);
  }
}

TEST_CASE("grading spectrum for n = 4", "[clifford]") {
  auto rep = build_clifford_rep(4);
  Eigen::SelfAdjointEigenSolver<CMat> es(rep.grading);
  RVec ev = es.eigenvalues();
  std::vector<double> expect{-1, -1, 1, 1};
  for (int i = 0; i < 4; ++i) CHECK(std::abs(ev(i) - expect[i]) < 1e-14);
}

TEST_CASE("invalid dimensions are rejected", "[clifford]") {
  CHECK_THROWS_AS(build_clifford_rep(1), std::invalid_argument);
  CHECK_THROWS_AS(build_clifford_rep(0), std::invalid_argument);
}

TEST_CASE("construction is deterministic", "[clifford]") {
  for (int n = 2; n <= 6; ++n) {
    auto a = build_clifford_rep(n), b = build_clifford_rep(n);
    for (int i = 0; i < n; ++i) CHECK((a.gamma[i].array() == b.gamma[i].array()).all());
  }
}

TEST_CASE("omega algebra", "[clifford][omega]") {
  std::mt19937_64 rng(7);
  for (int n = 2; n <= 6; ++n) {
    auto rep = build_clifford_rep(n);
    for (int t = 0; t < 200; ++t) {
      RVec X = random_unit(rng, n), Y = random_unit(rng, n);
      auto o = omega_residuals(rep, X, Y);
      CHECK(o.hermitian < 1e-12);
      CHECK(o.involution < 1e-12);
      CHECK(o.anticommutation < 1e-12);
    }
    RVec N0 = axis(n, 0);
    RVec X = axis(n, n - 1);
    CMat w0 = omega_matrix(rep, N0), wx = omega_matrix(rep, X);
    CHECK(opnorm(w0 * wx + wx * w0) < 1e-14);
  }
}

TEST_CASE("omega is linear in the unnormalized argument", "[clifford][omega]") {
  auto rep = build_clifford_rep(5);
  std::mt19937_64 rng(11);
  RVec X = random_unit(rng, 5), Y = random_unit(rng, 5);
  double a = 0.3, b = -1.7;
  CMat lhs = omega_unnormalized(rep, a * X + b * Y);
  CMat rhs = a * omega_unnormalized(rep, X) + b * omega_unnormalized(rep, Y);
  CHECK(opnorm(lhs - rhs) < 1e-14);
}

TEST_CASE("omega rejects non-unit vectors", "[clifford][omega]") {
  auto rep = build_clifford_rep(4);
  CHECK_THROWS_AS(omega_matrix(rep, 2.0 * axis(4, 0)), std::domain_error);
}

TEST_CASE("omega at the first axis has the +1 block first for n = 4", "[clifford][omega]") {
  auto rep = build_clifford_rep(4);
  CMat w = omega_matrix(rep, axis(4, 0));
  Eigen::SelfAdjointEigenSolver<CMat> es(w);
  CHECK(std::abs(es.eigenvalues()(0) + 1) < 1e-14);
  CHECK(std::abs(es.eigenvalues()(3) - 1) < 1e-14);
  CMat U = diagonalize_omega(rep, axis(4, 0));
  CMat D = U.adjoint() * w * U;
  for (int i = 0; i < 4; ++i) CHECK(std::abs(D(i, i) - (i < 2 ? 1.0 : -1.0)) < 1e-12);
}

TEST_CASE("diagonalization", "[clifford][omega]") {
  SECTION("already diagonal gives the identity") {
    CMat w = CMat::Zero(4, 4);
    w.diagonal() << 1, 1, -1, -1;
    CHECK(diagonalize_omega(w) == CMat::Identity(4, 4));
  }
  SECTION("second axis in n = 4") {
    auto rep = build_clifford_rep(4);
    RVec N0 = axis(4, 1);
    CMat w = omega_matrix(rep, N0);
    CMat U = diagonalize_omega(rep, N0);
    CHECK(opnorm(U.adjoint() * U - CMat::Identity(4, 4)) < 1e-12);
    CMat D = U.adjoint() * w * U;
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 4; ++j) {
        double target = i == j ? (i < 2 ? 1.0 : -1.0) : 0.0;
        CHECK(std::abs(D(i, j) - target) < 1e-12);
      }
    CHECK(std::abs(w.trace()) < 1e-14);
    CHECK(std::abs(D.trace()) < 1e-12);
    auto moved = transform_rep(rep, U);
    CHECK(clifford_residuals(moved).max() < 1e-12);
  }
  SECTION("odd dimensions and random directions") {
    std::mt19937_64 rng(3);
    for (int n : {3, 5}) {
      auto rep = build_clifford_rep(n);
      RVec N0 = random_unit(rng, n);
      CMat U = diagonalize_omega(rep, N0);
      CMat D = U.adjoint() * omega_matrix(rep, N0) * U;
      CMat target = CMat::Identity(rep.m, rep.m);
      target.bottomRightCorner(rep.m / 2, rep.m / 2) *= -1.0;
      CHECK(opnorm(D - target) < 1e-12);
    }
  }
}

TEST_CASE("generator dump is row-major complex pairs", "[clifford]") {
  auto rep = build_clifford_rep(3);
  auto j = generators_json(rep);
  CHECK(j["m"] == 2);
  CHECK(j["generators"].size() == 3);
  CHECK(j["generators"][0].size() == 4);
  CHECK(j.contains("volume"));
}
