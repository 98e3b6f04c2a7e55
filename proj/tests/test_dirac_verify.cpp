#include <catch_amalgamated.hpp>

#include <rigidity_lab/dirac_verify.hpp>
#include <rigidity_lab/polytope_smoothing.hpp>

#include <cmath>
#include <random>

using namespace rigidity_lab;

namespace {

OperatorAssembly assembly(int n, const Background& bg) {
  auto rep = build_clifford_rep(n);
  return assemble_operators(rep, bg, parity_of(rep));
}

double trapezoid_mass(const TupleField& f, const ConformalFactor& cf) {
  const auto& d = f.domain;
  double s = 0;
  for (std::size_t k = 0; k < d.size(); ++k) {
    auto ix = d.multi(k);
    double w = 1;
    for (int a = 0; a < d.n; ++a) w *= (ix[a] == 0 || ix[a] == d.count[a] - 1) ? 0.5 * d.h : d.h;
    s += w * std::exp(d.n * cf.u(d.point(ix))) * f.values[k].squaredNorm();
  }
  return s;
}

}  // namespace

TEST_CASE("assembly rejects a parity mismatch", "[dirac]") {
  auto rep3 = build_clifford_rep(3);
  CHECK_THROWS_AS(assemble_operators(rep3, flat_background(3), ParityMode::EvenGrading), std::invalid_argument);
  auto rep4 = build_clifford_rep(4);
  CHECK_THROWS_AS(assemble_operators(rep4, flat_background(4), ParityMode::OddVolume), std::invalid_argument);
  Background bg = flat_background(4);
  bg.twist_dir = RVec::Ones(4);
  CHECK_THROWS_AS(assemble_operators(rep4, bg, ParityMode::EvenGrading), std::invalid_argument);
  CHECK_NOTHROW(assemble_operators(rep4, flat_background(4), ParityMode::EvenGrading));
}

TEST_CASE("chi is a self-adjoint involution and anticommutes with the boundary operator", "[dirac]") {
  for (int n = 2; n <= 6; ++n) {
    for (const auto& bg : {flat_background(n), hyperbolic_background(n)}) {
      auto a = assembly(n, bg);
      auto r = boundary_anticommutation_check(a, 400, 17 + n, RVec::Constant(n, 0.5), 1.0);
      INFO("n = " << n << " background " << bg.name);
      CHECK(r.symbol_max < 1e-12);
      CHECK(r.zeroth_order_max < 1e-12);
      CHECK(r.chi_square_max < 1e-12);
      CHECK(r.chi_adjoint_max < 1e-12);
    }
  }
}

TEST_CASE("odd chi is a Kronecker product of sqrt(-1) c blocks", "[dirac]") {
  auto a = assembly(3, hyperbolic_background(3));
  RVec N(3);
  N << 0.3, -0.4, std::sqrt(1 - 0.25);
  CMat b = kI * a.rep.clifford(N);
  CMat expect = Eigen::kroneckerProduct(CMat(b.conjugate()), b).eval();
  CHECK((a.chi_matrix(N, N) - expect).norm() < 1e-14);
  CHECK((expect - expect.adjoint()).norm() < 1e-14);
  // direct action agrees with the matrix on vec(S)
  std::mt19937_64 rng(5);
  CMat S = detail::random_cmat(a.m(), rng);
  CMat chiS = a.chi(N, N, S);
  CVec v = Eigen::Map<CVec>(S.data(), S.size());
  CVec w = a.chi_matrix(N, N) * v;
  CHECK((Eigen::Map<CVec>(chiS.data(), chiS.size()) - w).norm() < 1e-14);
}

TEST_CASE("twisted connection annihilates Killing tuples", "[dirac]") {
  for (int n : {2, 3}) {
    auto a = assembly(n, hyperbolic_background(n));
    double prev = 0;
    for (int cells : {8, 16, 32}) {
      GridDomain d = make_box(n, RVec::Constant(n, 1.0), 1.0, cells);
      auto k = build_killing_basis(a.rep, d, std::vector<int>(n, 0));
      auto f = field_from_killing(k);
      auto r = sl_identity_terms(a, f);
      double mass = trapezoid_mass(f, a.bg.cf);
      double rel = r.grad / mass;
      INFO("n = " << n << " cells " << cells);
      CHECK(rel < 1e-3);
      CHECK(r.lhs / mass < 1e-3);
      if (prev > 0) CHECK(rel < 0.3 * prev);
      prev = rel;
    }
  }
}

TEST_CASE("linear sections on a flat box are integrated exactly", "[dirac]") {
  for (int n : {2, 3}) {
    auto a = assembly(n, flat_background(n));
    std::mt19937_64 rng(11);
    CMat C = detail::random_cmat(a.m(), rng);
    GridDomain d = make_box(n, RVec::Constant(n, 0.5), 1.0, 8);
    auto f = sample_field(d, a.m(), [&](const RVec& x) { return CMat(x(0) * C); });
    auto r = sl_identity_terms(a, f);
    // D sigma = c(e_1) C, |nabla sigma|^2 = |C|^2 on a unit box
    CHECK(r.lhs == Catch::Approx(C.squaredNorm()).epsilon(1e-12));
    CHECK(r.grad == Catch::Approx(C.squaredNorm()).epsilon(1e-12));
    CHECK(std::abs(r.boundary_dirac) < 1e-12);
    CHECK(r.curvature == 0.0);
    CHECK(std::abs(r.residual) < 1e-12);
  }
}

TEST_CASE("zero section gives zero terms", "[dirac]") {
  auto a = assembly(3, hyperbolic_background(3));
  GridDomain d = make_box(3, RVec::Constant(3, 0.5), 1.0, 6);
  auto f = sample_field(d, a.m(), [&](const RVec&) { return CMat(CMat::Zero(a.m(), a.m())); });
  auto r = sl_identity_terms(a, f);
  CHECK(r.finite());
  CHECK(r.lhs == 0.0);
  CHECK(r.boundary_dirac == 0.0);
  CHECK(r.residual == 0.0);
}

TEST_CASE("field validation", "[dirac]") {
  auto a = assembly(2, flat_background(2));
  GridDomain d = make_box(2, RVec::Constant(2, 0.5), 1.0, 4);
  auto f = sample_field(d, a.m(), [&](const RVec&) { return CMat(CMat::Identity(a.m(), a.m())); });
  f.values[3](0, 0) = std::nan("");
  CHECK_THROWS_AS(sl_identity_terms(a, f), std::invalid_argument);
  f.values.pop_back();
  CHECK_THROWS_AS(sl_identity_terms(a, f), std::invalid_argument);
  auto a3 = assembly(3, flat_background(3));
  auto g = sample_field(d, a.m(), [&](const RVec&) { return CMat(CMat::Identity(a.m(), a.m())); });
  CHECK_THROWS_AS(sl_identity_terms(a3, g), std::invalid_argument);
}

TEST_CASE("hyperbolic curvature and twist square cancel", "[dirac]") {
  for (int n : {2, 3}) {
    auto a = assembly(n, hyperbolic_background(n));
    GridDomain d = make_box(n, RVec::Constant(n, 0.5), 1.0, 10);
    auto mf = manufactured_field(n, a.m(), RVec::Constant(n, 1.0), 0.35, 2, 3);
    auto f = sample_field(d, a.m(), mf);
    auto r = sl_identity_terms(a, f);
    double mass = trapezoid_mass(f, a.bg.cf);
    CHECK(r.curvature == Catch::Approx(-0.25 * n * (n - 1) * mass).epsilon(1e-12));
    CHECK(r.psi_square == Catch::Approx(0.25 * n * (n - 1) * mass).epsilon(1e-12));
    CHECK(std::abs(r.psi_gradient) < 1e-12 * mass);
  }
}

TEST_CASE("flat identity residual converges at second order", "[dirac][slow]") {
  for (int n : {2, 3}) {
    auto a = assembly(n, flat_background(n));
    RVec lo = RVec::Constant(n, 0.5);
    auto mf = manufactured_field(n, a.m(), lo.array() + 0.5, 0.35, 3, 7);
    auto rows = sl_identity_residual(a, mf, lo, 1.0, {16, 32, 64});
    for (const auto& r : rows) CHECK(r.finite());
    for (std::size_t k = 1; k < rows.size(); ++k) {
      double ratio = std::abs(rows[k].residual / rows[k - 1].residual);
      INFO("n = " << n << " ratio " << ratio);
      CHECK(ratio >= 0.2);
      CHECK(ratio <= 0.35);
    }
    for (double o : observed_orders(rows)) {
      CHECK(o >= 1.8);
      CHECK(o <= 2.2);
    }
    CHECK(std::abs(rows.back().residual) < 1e-3 * rows.back().lhs);
  }
}

TEST_CASE("curved identity residual converges with all terms active", "[dirac][slow]") {
  const int n = 2;
  auto a = assembly(n, conformal_background(perturbed_hyperbolic_factor(n, 0.05), n));
  RVec lo = RVec::Constant(n, 0.5);
  auto mf = manufactured_field(n, a.m(), lo.array() + 0.5, 0.35, 3, 7);
  auto rows = sl_identity_residual(a, mf, lo, 1.0, {16, 32, 64, 128});
  const auto& last = rows.back();
  CHECK(std::abs(last.psi_gradient) > 1e-3);
  CHECK(std::abs(last.boundary_mean) > 1e-2);
  CHECK(std::abs(last.boundary_psi) > 1e-2);
  for (double o : observed_orders(rows)) {
    CHECK(o >= 1.8);
    CHECK(o <= 2.2);
  }
}

TEST_CASE("leaf curvature endomorphism bound", "[dirac]") {
  auto rep = build_clifford_rep(4);
  const double R_h = 6.0;  // unit round 3-sphere
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> u(0.1, 3.0), v(0.0, 1.0);
  int violations = 0;
  for (int t = 0; t < 200; ++t) {
    double psi = u(rng);
    RVec mu(3);
    for (int i = 0; i < 3; ++i) mu(i) = v(rng) / psi;
    auto b = curvature_endomorphism_bound(rep, R_h, psi, mu);
    if (b.margin < -1e-10) ++violations;
  }
  CHECK(violations == 0);

  // equality at mu = 1/psi with the identity tuple as an eigenvector
  double psi = 1.7;
  RVec mu = RVec::Constant(3, 1 / psi);
  auto b = curvature_endomorphism_bound(rep, R_h, psi, mu);
  CHECK(std::abs(b.margin) < 1e-8);
  CMat E = leaf_curvature_endomorphism(rep, R_h, mu);
  CMat I = CMat::Identity(rep.m, rep.m);
  CVec v0 = Eigen::Map<CVec>(I.data(), I.size());
  CHECK((E * v0 - b.bound * v0).norm() < 1e-12);

  CHECK(leaf_curvature_endomorphism(rep, 0.0, mu).norm() == 0.0);
  CHECK_THROWS_AS(curvature_endomorphism_bound(rep, R_h, psi, RVec::Constant(3, 1.1 / psi)), std::invalid_argument);
  CHECK_THROWS_AS(curvature_endomorphism_bound(rep, R_h, -1.0, mu), std::invalid_argument);
  CHECK_THROWS_AS(curvature_endomorphism_bound(rep, R_h, psi, RVec::Constant(2, 0.1)), std::invalid_argument);
}

TEST_CASE("boundary endomorphism bound", "[dirac]") {
  for (int n : {3, 4, 5}) {
    auto rep = build_clifford_rep(n);
    std::mt19937_64 rng(31 + n);
    std::normal_distribution<double> g;
    std::uniform_real_distribution<double> v(0.0, 1.0);
    for (int t = 0; t < 50; ++t) {
      RMat Z(n - 1, n - 1);
      for (int i = 0; i < n - 1; ++i)
        for (int j = 0; j < n - 1; ++j) Z(i, j) = g(rng);
      RMat h = Z * Z.transpose();
      double psi = 0.5 + v(rng);
      RVec mu(n - 1);
      for (int i = 0; i < n - 1; ++i) mu(i) = v(rng) / psi;
      auto b = boundary_endomorphism_bound(rep, h, psi, mu);
      CHECK(b.margin > -1e-10);
    }
    RMat h = RMat::Identity(n - 1, n - 1);
    auto b = boundary_endomorphism_bound(rep, h, 1.0, RVec::Constant(n - 1, 1.0));
    CHECK(std::abs(b.margin) < 1e-10);
    RMat bad = -RMat::Identity(n - 1, n - 1);
    CHECK_THROWS_AS(boundary_endomorphism_bound(rep, bad, 1.0, RVec::Constant(n - 1, 0.5)), std::invalid_argument);
  }
}

TEST_CASE("chi pairing along a smoothed polytope boundary", "[dirac]") {
  for (int n : {3, 4}) {
    auto a = assembly(n, hyperbolic_background(n));
    auto P = make_box_polytope(RVec::Constant(n, 1.0), RVec::Constant(n, 2.0));
    auto B = boundary_sample(P, 20.0, random_directions(n, 200, 9));
    std::vector<RVec> xs, Ns;
    for (const auto& s : B.samples) {
      xs.push_back(s.x);
      Ns.push_back(s.N);
    }
    auto r = chi_lambda_pairing_check(a, xs, Ns, 4);
    CHECK(r.samples == 200);
    CHECK(r.chi_square_max < 1e-12);
    CHECK(r.chi_adjoint_max < 1e-12);
    CHECK(r.orthogonal_pairing_max < 1e-12);
    CHECK(r.psi_reduction_max < 1e-12);
  }
}
