#include <catch_amalgamated.hpp>

#include <rigidity_lab/polytope_smoothing.hpp>

#include <cmath>
#include <numbers>

using namespace rigidity_lab;
using Catch::Approx;

namespace {

ConvexPolytope cube(int n, double lo = -1, double hi = 1) {
  return make_box_polytope(RVec::Constant(n, lo), RVec::Constant(n, hi));
}

// Simplex in the half-space with apex (apex_height, 0, ..., 0) at the top.
ConvexPolytope apex_simplex(int n) {
  std::vector<Facet> f;
  f.push_back({RVec(-axis(n, 0)), -1.0});
  for (int k = 1; k < n; ++k) {
    RVec a = RVec::Zero(n);
    a(0) = 1;
    a(k) = 1;
    f.push_back({RVec(a.normalized()), 3.0 / std::sqrt(2.0)});
  }
  RVec a = RVec::Zero(n);
  a(0) = 1;
  for (int k = 1; k < n; ++k) a(k) = -1;
  f.push_back({RVec(a.normalized()), 3.0 / a.norm()});
  RVec c = RVec::Zero(n);
  c(0) = 1.5;
  return make_bounded_polytope(f, c);
}

// Oracle for the cube crossing along an axis: the other facets contribute
// exp(-lambda) each at the crossing when the interior point is the centre.
double axis_crossing_oracle(int n, double lambda) {
  // e^{lambda(t-1)} + e^{-lambda(t+1)} + 2(n-1) e^{-lambda} = 1
  double lo = 0, hi = 1;
  for (int k = 0; k < 200; ++k) {
    double t = 0.5 * (lo + hi);
    double F = std::exp(lambda * (t - 1)) + std::exp(-lambda * (t + 1)) + 2 * (n - 1) * std::exp(-lambda);
    (F > 1 ? hi : lo) = t;
  }
  return 0.5 * (lo + hi);
}

}  // namespace

TEST_CASE("polytope construction diagnostics", "[polytope]") {
  RVec c = RVec::Zero(2);
  CHECK_THROWS_AS(make_polytope({{RVec::Constant(2, 1.0), 1.0}}, c), std::invalid_argument);
  CHECK_THROWS_AS(make_polytope({{axis(2, 0), 1.0}, {axis(2, 0), 2.0}}, c), std::invalid_argument);
  CHECK_THROWS_AS(make_polytope({{axis(2, 0), -1.0}}, c), std::invalid_argument);
  CHECK_THROWS_AS(make_bounded_polytope({{axis(2, 0), 1.0}, {RVec(-axis(2, 0)), 1.0}, {axis(2, 1), 1.0}}, c),
                  std::invalid_argument);
  // redundant facet
  std::vector<Facet> f{{axis(2, 0), 1}, {RVec(-axis(2, 0)), 1}, {axis(2, 1), 1}, {RVec(-axis(2, 1)), 1},
                       {RVec(RVec::Constant(2, 1.0).normalized()), 5.0}};
  CHECK_THROWS_AS(make_bounded_polytope(f, c), std::invalid_argument);
  auto P = cube(3);
  CHECK(P.vertices.size() == 8);
  CHECK(check_bounded(P).bounded);
}

TEST_CASE("boundary samples lie on the level set", "[polytope]") {
  for (int n : {2, 3, 4}) {
    auto P = cube(n);
    auto dirs = random_directions(n, 200, 11);
    for (double lam : {5.0, 20.0, 80.0}) {
      auto sb = boundary_sample(P, lam, dirs);
      const double bound = std::log(static_cast<double>(P.facets.size())) / lam;
      for (const auto& s : sb.samples) {
        CHECK(s.F_residual < 1e-10);
        CHECK(std::abs(s.N.norm() - 1) < 1e-14);
        CHECK(s.grad_norm > 0);
        CHECK(s.max_u <= 1e-12);
        CHECK(s.max_u >= -bound - 1e-12);
        Eigen::SelfAdjointEigenSolver<RMat> es(s.dN);
        CHECK(es.eigenvalues().minCoeff() >= -1e-10);
        CHECK((homotopic_gauss_map(P, lam, s.x) - s.N).norm() < 1e-12);
      }
    }
  }
}

TEST_CASE("cube crossing along an axis", "[polytope]") {
  for (int n : {2, 3}) {
    auto P = cube(n);
    std::vector<RVec> dirs{RVec(-axis(n, 0))};
    double prev = 0;
    for (double lam : {2.0, 5.0, 10.0, 20.0}) {
      auto sb = boundary_sample(P, lam, dirs);
      double x = sb.samples[0].x(0);
      CHECK(x == Approx(-axis_crossing_oracle(n, lam)).margin(1e-12));
      CHECK(x < prev);
      prev = x;
    }
    CHECK(prev == Approx(-1.0).margin(1e-3));
    CHECK(boundary_sample(P, 200.0, dirs).samples[0].x(0) == Approx(-1.0).margin(1e-15));
  }
  CHECK_THROWS_AS(boundary_sample(cube(3), 0.5, random_directions(3, 4, 1)), std::domain_error);
  CHECK_THROWS_AS(boundary_sample(cube(3), -1.0, random_directions(3, 4, 1)), std::invalid_argument);
}

TEST_CASE("single half-space is reproduced exactly", "[polytope]") {
  const int n = 3;
  RVec c = RVec::Zero(n);
  c(0) = 1.0;
  auto P = half_space(axis(n, 0), 2.0, c);
  auto dirs = random_directions(n, 50, 3);
  std::vector<RVec> up;
  for (auto d : dirs)
    if (d(0) > 0.1) up.push_back(d);
  for (double lam : {1.0, 10.0, 100.0}) {
    auto sb = boundary_sample(P, lam, up);
    for (const auto& s : sb.samples) {
      CHECK(std::abs(P.u(0, s.x)) < 1e-12);
      CHECK((s.N - axis(n, 0)).norm() == 0.0);
      CHECK(s.dN.norm() == 0.0);
      CHECK(s.H == 0.0);
    }
    for (const auto& t : trace_norm_dN(sb, BoundaryMetric::Hyperbolic)) CHECK(t.trace_norm == 0.0);
    for (const auto& d : boundary_defect_hyperbolic(sb)) CHECK(d.defect == 0.0);
  }
  auto rows = smoothing_convergence(P, {1.0, 10.0}, 30, 5);
  for (const auto& r : rows) {
    CHECK(r.hausdorff < 1e-12);
    CHECK(r.normal_deviation == 0.0);
  }
}

TEST_CASE("sphere oracle", "[polytope]") {
  for (int n : {3, 4, 5}) {
    RVec c = RVec::Zero(n);
    c(0) = 3.0;
    auto sb = sphere_boundary(c, 1.0, random_directions(n, 100, 17));
    auto tn = trace_norm_dN(sb, BoundaryMetric::Euclidean);
    auto th = trace_norm_dN(sb, BoundaryMetric::Hyperbolic);
    auto H = smoothed_mean_curvature(sb);
    auto def = boundary_defect_hyperbolic(sb);
    for (std::size_t k = 0; k < sb.samples.size(); ++k) {
      CHECK(std::abs(tn[k].trace_norm - (n - 1)) < 1e-10);
      CHECK(std::abs(H[k] - (n - 1)) < 1e-10);
      CHECK(std::abs(th[k].trace_norm - sb.samples[k].x(0) * tn[k].trace_norm) < 1e-10);
      CHECK(std::abs(def[k].defect) < 1e-8);
    }
    auto r2 = sphere_boundary(c, 2.0, random_directions(n, 10, 1));
    for (double h : smoothed_mean_curvature(r2)) CHECK(h == Approx((n - 1) / 2.0).margin(1e-14));
  }
}

TEST_CASE("custom Gram metric for the trace norm", "[polytope]") {
  BoundarySample s;
  s.dN = RMat::Identity(2, 2);
  RMat G(2, 2);
  G << 4, 0, 0, 1;
  CHECK(trace_norm_dN(s, G).trace_norm == Approx(1.5));
  RMat bad(2, 2);
  bad << 1, 0, 0, -1;
  CHECK_THROWS_AS(trace_norm_dN(s, bad), std::invalid_argument);
  RMat asym(2, 2);
  asym << 1, 0.5, 0, 1;
  CHECK_THROWS_AS(trace_norm_dN(s, asym), std::invalid_argument);
}

TEST_CASE("smoothed cube mean curvature and defect", "[polytope]") {
  const int n = 3;
  auto P = make_box_polytope(RVec::Constant(n, 1.0), RVec::Constant(n, 3.0));
  auto sb = boundary_sample(P, 50.0, random_directions(n, 400, 23));
  for (double h : smoothed_mean_curvature(sb)) CHECK(h >= -1e-10);
  for (const auto& d : boundary_defect_hyperbolic(sb)) CHECK(std::abs(d.defect) < 1e-6);
  // facet interiors are flat in the limit
  auto w = boundary_sample(P, 50.0, facet_witness_directions(P));
  for (const auto& t : trace_norm_dN(w, BoundaryMetric::Euclidean)) CHECK(t.trace_norm < 1e-6);
}

TEST_CASE("dihedral and matching angles", "[polytope]") {
  auto P = make_box_polytope(RVec::Constant(3, 1.0), RVec::Constant(3, 3.0));
  auto pairs = adjacent_pairs(P);
  CHECK(pairs.size() == 12);
  for (auto [i, j] : pairs) {
    auto e = dihedral_and_matching(P, i, j, hyperbolic_metric_field(3));
    CHECK(e.dihedral == Approx(std::numbers::pi / 2).margin(1e-14));
    CHECK(e.matching_residual < 1e-14);
  }
  CHECK_THROWS_AS(dihedral_and_matching(P, 0, 1), std::invalid_argument);  // opposite facets

  auto S = apex_simplex(3);
  MetricField perturbed = [](const RVec& x) {
    RMat g = RMat::Identity(3, 3) / (x(0) * x(0));
    g(1, 1) += 0.1;
    return g;
  };
  double worst = 0;
  for (auto [i, j] : adjacent_pairs(S)) {
    CHECK(dihedral_and_matching(S, i, j, hyperbolic_metric_field(3)).matching_residual < 1e-12);
    worst = std::max(worst, dihedral_and_matching(S, i, j, perturbed).matching_residual);
  }
  CHECK(worst > 1e-3);
}

TEST_CASE("highest point cone", "[polytope]") {
  auto box = make_box_polytope(RVec::Constant(3, 1.0), RVec::Constant(3, 2.0));
  auto h = highest_point_cone(box);
  CHECK(h.p0(0) == Approx(2.0));
  REQUIRE(h.active.size() == 1);
  CHECK(box.facets[h.active[0]].a == axis(3, 0));
  CHECK(h.coefficients(0) == Approx(1.0));
  CHECK(std::abs(h.nu0_norm - 1) < 1e-8);

  for (int n : {2, 3, 4}) {
    auto S = apex_simplex(n);
    auto hs = highest_point_cone(S);
    CHECK(hs.p0(0) == Approx(3.0));
    CHECK(static_cast<int>(hs.active.size()) == n);
    CHECK(hs.residual < 1e-10);
    CHECK(hs.unique_coefficients);
    CHECK(std::abs(hs.nu0_norm - 1) < 1e-8);
    for (int k = 0; k < hs.coefficients.size(); ++k) CHECK(hs.coefficients(k) > 0);
  }
}

TEST_CASE("trace norm comparison", "[polytope]") {
  std::mt19937_64 rng(2024);
  SECTION("identity") {
    for (int n : {2, 3, 5}) {
      auto t = trace_norm_comparison(RMat::Identity(n, n), RVec::Ones(n), 10, rng);
      CHECK(t.tn1 == Approx(n));
      CHECK(t.tn2 == Approx(n));
    }
  }
  SECTION("diagonal example") {
    RMat L = RMat::Zero(2, 2);
    L.diagonal() << 1, 2;
    RVec mu(2);
    mu << 4, 1;
    auto t = trace_norm_comparison(L, mu, 1000, rng);
    CHECK(t.tn1 == Approx(3.0).margin(1e-14));
    CHECK(t.tn2 == Approx(2.5).margin(1e-14));
    CHECK(t.tn2_left == Approx(2.5).margin(1e-14));
    CHECK(t.ordered);
  }
  SECTION("random sweep") {
    std::normal_distribution<double> g;
    std::uniform_real_distribution<double> u(1.0, 5.0);
    std::uniform_int_distribution<int> dim(2, 6);
    int violations = 0, strict = 0;
    for (int k = 0; k < 1000; ++k) {
      const int n = dim(rng);
      RMat L(n, n);
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) L(i, j) = g(rng);
      RVec mu(n);
      for (int i = 0; i < n; ++i) mu(i) = u(rng);
      auto t = trace_norm_comparison(L, mu, 20, rng);
      if (!t.ordered || t.tn2 > t.tn1 + 1e-9 || t.tn2_left > t.tn1 + 1e-9) ++violations;
      if (t.tn2 < t.tn1) ++strict;
    }
    CHECK(violations == 0);
    CHECK(strict == 1000);
  }
  SECTION("sampled sup matches the singular values") {
    std::normal_distribution<double> g;
    std::uniform_real_distribution<double> u(1.0, 4.0);
    for (int n : {2, 3, 4}) {
      for (int rep = 0; rep < 2; ++rep) {
        RMat L(n, n);
        for (int i = 0; i < n; ++i)
          for (int j = 0; j < n; ++j) L(i, j) = g(rng);
        RVec mu(n);
        for (int i = 0; i < n; ++i) mu(i) = u(rng);
        auto t = trace_norm_comparison(L, mu, 100000, rng);
        CHECK(t.mc_max <= t.tn2 + 1e-9);
        CHECK(t.mc_max >= 0.99 * t.tn2);
      }
    }
  }
  SECTION("preconditions") {
    CHECK_THROWS_AS(trace_norm_comparison(RMat::Zero(2, 2), RVec::Ones(2), 1, rng), std::invalid_argument);
    CHECK_THROWS_AS(trace_norm_comparison(RMat::Identity(2, 2), RVec::Constant(2, 0.5), 1, rng),
                    std::invalid_argument);
  }
  SECTION("random orthogonal matrices") {
    for (int k = 0; k < 20; ++k) {
      RMat Q = random_orthogonal(4, rng);
      CHECK((Q.transpose() * Q - RMat::Identity(4, 4)).norm() < 1e-13);
    }
  }
}

TEST_CASE("smoothing convergence on a cube", "[polytope]") {
  auto P = make_box_polytope(RVec::Constant(3, 1.0), RVec::Constant(3, 3.0));
  auto rows = smoothing_convergence(P, {10.0, 20.0, 40.0}, 600, 9);
  REQUIRE(rows.size() == 3);
  for (std::size_t k = 1; k < rows.size(); ++k) {
    CHECK(rows[k].hausdorff < rows[k - 1].hausdorff);
    CHECK(rows[k].normal_deviation <= rows[k - 1].normal_deviation + 1e-9);
    CHECK(rows[k].max_defect <= rows[k - 1].max_defect + 1e-9);
  }
  CHECK(rows[2].normal_deviation < rows[0].normal_deviation);
  for (const auto& r : rows) CHECK(r.max_F_residual < 1e-10);
  CHECK_THROWS_AS(smoothing_convergence(P, {20.0, 10.0}, 10, 1), std::invalid_argument);
}
