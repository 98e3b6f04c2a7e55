#pragma once
// Named verification suites driven by a strict JSON configuration.

#include "clifford.hpp"
#include "dirac_verify.hpp"
#include "polytope_smoothing.hpp"
#include "report.hpp"
#include "spinor_fields.hpp"
#include "warped_geometry.hpp"

#include <json.hpp>

#include <chrono>
#include <cmath>
#include <fstream>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace rigidity_lab {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline const std::vector<std::string>& suite_names() {
  static const std::vector<std::string> names = {"clifford-check", "warped",       "killing",
                                                 "smooth-polytope", "sl-residual", "tracenorm"};
  return names;
}

inline bool known_suite(const std::string& s) {
  for (const auto& n : suite_names())
    if (n == s) return true;
  return false;
}

inline bool suite_needs_seed(const std::string& s) {
  return s == "killing" || s == "smooth-polytope" || s == "sl-residual" || s == "tracenorm";
}

// Tolerance override: a bound, or [lo, hi] for range checks.
struct ToleranceOverride {
  double lo = 0, hi = 0;
  bool range = false;
};

struct SuiteConfig {
  std::string suite;
  std::optional<std::uint64_t> seed;
  std::string out;
  nlohmann::json params = nlohmann::json::object();
  std::map<std::string, ToleranceOverride> tolerances;
};

// Reads one table of parameters and rejects keys nobody asked for.
class ParamTable {
 public:
  ParamTable(const nlohmann::json& j, std::string where) : j_(j), where_(std::move(where)) {
    if (!j_.is_object()) throw ConfigError(where_ + ": expected a table");
  }

  template <class T>
  T get(const std::string& key, T fallback) {
    used_.insert(key);
    if (!j_.contains(key)) return fallback;
    return convert<T>(key);
  }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (!used_.count(it.key())) throw ConfigError(where_ + ": unknown key '" + it.key() + "'");
  }

 private:
  template <class T>
  T convert(const std::string& key) const {
    const auto& v = j_.at(key);
    try {
      if constexpr (std::is_same_v<T, int>) {
        if (!v.is_number_integer()) throw ConfigError("");
        return v.get<int>();
      } else if constexpr (std::is_same_v<T, double>) {
        if (!v.is_number()) throw ConfigError("");
        return v.get<double>();
      } else if constexpr (std::is_same_v<T, std::string>) {
        if (!v.is_string()) throw ConfigError("");
        return v.get<std::string>();
      } else if constexpr (std::is_same_v<T, std::vector<int>>) {
        if (!v.is_array()) throw ConfigError("");
        std::vector<int> out;
        for (const auto& e : v) {
          if (!e.is_number_integer()) throw ConfigError("");
          out.push_back(e.get<int>());
        }
        return out;
      } else if constexpr (std::is_same_v<T, std::vector<double>>) {
        if (!v.is_array()) throw ConfigError("");
        std::vector<double> out;
        for (const auto& e : v) {
          if (!e.is_number()) throw ConfigError("");
          out.push_back(e.get<double>());
        }
        return out;
      } else if constexpr (std::is_same_v<T, std::vector<std::string>>) {
        if (!v.is_array()) throw ConfigError("");
        std::vector<std::string> out;
        for (const auto& e : v) {
          if (!e.is_string()) throw ConfigError("");
          out.push_back(e.get<std::string>());
        }
        return out;
      } else {
        static_assert(sizeof(T) == 0, "unsupported parameter type");
      }
    } catch (const ConfigError&) {
      throw ConfigError(where_ + ": key '" + key + "' has the wrong type");
    }
  }

  const nlohmann::json& j_;
  std::string where_;
  std::set<std::string> used_;
};

inline SuiteConfig parse_config(const std::string& text, const std::string& source = "config") {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(source + ": " + e.what());
  }
  if (!j.is_object()) throw ConfigError(source + ": top level must be a table");
  SuiteConfig c;
  for (auto it = j.begin(); it != j.end(); ++it) {
    const std::string& k = it.key();
    const auto& v = it.value();
    if (k == "suite") {
      if (!v.is_string()) throw ConfigError(source + ": 'suite' must be a string");
      c.suite = v.get<std::string>();
    } else if (k == "seed") {
      if (!v.is_number_unsigned()) throw ConfigError(source + ": 'seed' must be a non-negative integer");
      c.seed = v.get<std::uint64_t>();
    } else if (k == "out") {
      if (!v.is_string()) throw ConfigError(source + ": 'out' must be a string");
      c.out = v.get<std::string>();
    } else if (k == "params") {
      if (!v.is_object()) throw ConfigError(source + ": 'params' must be a table");
      c.params = v;
    } else if (k == "tolerances") {
      if (!v.is_object()) throw ConfigError(source + ": 'tolerances' must be a table");
      for (auto t = v.begin(); t != v.end(); ++t) {
        ToleranceOverride o;
        if (t.value().is_number()) {
          o.lo = o.hi = t.value().get<double>();
        } else if (t.value().is_array() && t.value().size() == 2 && t.value()[0].is_number() &&
                   t.value()[1].is_number()) {
          o.range = true;
          o.lo = t.value()[0].get<double>();
          o.hi = t.value()[1].get<double>();
        } else {
          throw ConfigError(source + ": tolerance '" + t.key() + "' must be a number or [lo, hi]");
        }
        c.tolerances[t.key()] = o;
      }
    } else {
      throw ConfigError(source + ": unknown key '" + k + "'");
    }
  }
  return c;
}

inline SuiteConfig load_config(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot read config " + path);
  std::stringstream ss;
  ss << is.rdbuf();
  return parse_config(ss.str(), path);
}

namespace detail {

class Stage {
 public:
  explicit Stage(SuiteResult& r) : r_(r), first_(r.checks.size()), t0_(std::chrono::steady_clock::now()) {}
  ~Stage() {
    double dt = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0_).count();
    for (std::size_t k = first_; k < r_.checks.size(); ++k) r_.checks[k].runtime = dt;
  }

 private:
  SuiteResult& r_;
  std::size_t first_;
  std::chrono::steady_clock::time_point t0_;
};

inline std::string tag(const std::string& s, int n) { return s + ".n" + std::to_string(n); }

inline void require_dims(const std::vector<int>& dims, int lo, int hi, const std::string& what) {
  if (dims.empty()) throw ConfigError(what + ": empty dimension list");
  for (int n : dims)
    if (n < lo || n > hi)
      throw ConfigError(what + ": dimension " + std::to_string(n) + " outside [" + std::to_string(lo) + ", " +
                        std::to_string(hi) + "]");
}

inline RVec random_unit(int n, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  RVec v(n);
  for (int i = 0; i < n; ++i) v(i) = g(rng);
  return v.normalized();
}

inline CMat random_tuple(int m, std::mt19937_64& rng) { return random_cmat(m, rng); }

}  // namespace detail

// ---------------------------------------------------------------------------

inline void suite_clifford(SuiteResult& r, ParamTable& p, std::uint64_t seed) {
  auto dims = p.get<std::vector<int>>("dims", {2, 3, 4, 5, 6});
  int pairs = p.get<int>("omega_pairs", 50);
  p.finish();
  detail::require_dims(dims, 2, 12, "clifford-check");
  if (pairs < 1) throw ConfigError("clifford-check: omega_pairs must be positive");
  std::mt19937_64 rng(seed);
  Table t{"clifford_residuals",
          {"n", "m", "anticommutation", "skew", "grading", "volume", "omega_hermitian", "omega_involution",
           "omega_anticommutation"},
          {}};
  Series s{"clifford.max_residual", "clifford.relations", "n", "max residual", false, false, {}, {}};
  for (int n : dims) {
    detail::Stage st(r);
    auto rep = build_clifford_rep(n);
    auto c = clifford_residuals(rep);
    OmegaResiduals worst;
    for (int k = 0; k < pairs; ++k) {
      RVec X = detail::random_unit(n, rng);
      RVec Y = detail::random_unit(n, rng);
      if (k % 2 == 0) Y = (Y - Y.dot(X) * X).normalized();
      auto o = omega_residuals(rep, X, Y);
      worst.hermitian = std::max(worst.hermitian, o.hermitian);
      worst.involution = std::max(worst.involution, o.involution);
      worst.anticommutation = std::max(worst.anticommutation, o.anticommutation);
    }
    Check a = at_most(detail::tag("clifford.relations", n), "clifford.relations", c.max(), 1e-12);
    a.details = {{"anticommutation", c.anticommutation}, {"skew", c.skew}, {"grading", c.grading},
                 {"volume", c.volume}};
    r.checks.push_back(a);
    double om = std::max({worst.hermitian, worst.involution, worst.anticommutation});
    Check b = at_most(detail::tag("clifford.omega", n), "clifford.omega", om, 1e-12);
    b.details = {{"hermitian", worst.hermitian}, {"involution", worst.involution},
                 {"anticommutation", worst.anticommutation}, {"pairs", pairs}};
    r.checks.push_back(b);
    t.rows.push_back({double(n), double(rep.m), c.anticommutation, c.skew, c.grading, c.volume, worst.hermitian,
                      worst.involution, worst.anticommutation});
    s.x.push_back(n);
    s.y.push_back(std::max(c.max(), om));
  }
  r.tables.push_back(t);
  r.series.push_back(s);
}

inline void suite_warped(SuiteResult& r, ParamTable& p) {
  auto dims = p.get<std::vector<int>>("dims", {3, 4});
  double fd_step = p.get<double>("fd_step", 1e-3);
  double x1 = p.get<double>("x1", 5.0);
  auto kinds = p.get<std::vector<std::string>>("profiles", {"cosh", "sech", "exp"});
  auto steps = p.get<std::vector<double>>("oracle_steps", {0.04, 0.02});
  int angle_samples = p.get<int>("angle_samples", 41);
  p.finish();
  detail::require_dims(dims, 3, 8, "warped");
  if (steps.size() < 2) throw ConfigError("warped: oracle_steps needs at least two entries");
  if (!(fd_step > 0) || !(x1 > 0)) throw ConfigError("warped: fd_step and x1 must be positive");
  if (angle_samples < 2) throw ConfigError("warped: angle_samples must be at least 2");

  Table ht{"hyperbolic_scalar_curvature", {"n", "x1", "fd_value", "exact", "abs_error"}, {}};
  for (int n : dims) {
    detail::Stage st(r);
    auto cf = hyperbolic_factor(n);
    RVec x = RVec::Constant(n, 0.3);
    x(0) = x1;
    double fd = conformal_scalar_curvature_fd(cf, x, fd_step);
    double exact = -n * (n - 1.0);
    Check c = at_most(detail::tag("warped.hyperbolic_scalar", n), "warped.hyperbolic_scalar", std::abs(fd - exact),
                      1e-6);
    c.details = {{"fd_value", fd}, {"exact", exact}, {"step", fd_step}};
    r.checks.push_back(c);
    ht.rows.push_back({double(n), x1, fd, exact, std::abs(fd - exact)});
  }
  r.tables.push_back(ht);

  Table ot{"torus_oracle", {"n", "profile_index", "step", "abs_error"}, {}};
  for (std::size_t ki = 0; ki < kinds.size(); ++ki) {
    for (int n : dims) {
      detail::Stage st(r);
      WarpedMetricSpec spec;
      spec.n = n;
      spec.profile = analytic_profile(kinds[ki], -0.5, 1.0);
      auto g = warped_torus_metric(spec.profile, n);
      RVec x = RVec::Constant(n, 0.2);
      x(0) = 0.35;
      double exact = scalar_curvature_warped(spec, x(0));
      std::vector<double> err;
      Series s{"warped.torus_oracle_error." + kinds[ki] + ".n" + std::to_string(n), "warped.scalar_curvature",
               "step", "abs error", true, true, {}, {}};
      for (double h : steps) {
        err.push_back(std::abs(scalar_curvature_fd(g, x, h) - exact));
        ot.rows.push_back({double(n), double(ki), h, err.back()});
        s.x.push_back(h);
        s.y.push_back(err.back());
      }
      for (std::size_t k = 1; k < steps.size(); ++k) {
        double order = std::log(err[k - 1] / err[k]) / std::log(steps[k - 1] / steps[k]);
        r.checks.push_back(in_range("warped.torus_oracle_order." + kinds[ki] + ".n" + std::to_string(n) + ".s" +
                                        std::to_string(k),
                                    "warped.scalar_curvature", order, 1.8, 2.2));
      }
      r.series.push_back(s);
    }
  }
  r.tables.push_back(ot);

  {
    detail::Stage st(r);
    auto prof = analytic_profile("exp", 0, 1);
    auto slope = [&](double rr) { return (1.0 - rr) / prof.phi(rr); };
    auto a = rotational_angle_profile(prof, slope, angle_samples);
    r.checks.push_back(holds("warped.rotational_angle.decreasing", "warped.rotational_angle", a.decreasing));
    Series s{"warped.rotational_angle", "warped.rotational_angle", "r", "angle", false, false, a.r, a.gamma};
    r.series.push_back(s);
    Table t{"rotational_angle", {"r", "angle", "dangle_dr"}, {}};
    for (std::size_t k = 0; k < a.r.size(); ++k) t.rows.push_back({a.r[k], a.gamma[k], a.dgamma[k]});
    r.tables.push_back(t);
  }
}

inline void suite_killing(SuiteResult& r, ParamTable& p, std::uint64_t seed, int jobs) {
  int n = p.get<int>("n", 3);
  auto cells = p.get<std::vector<int>>("cells", {8, 16, 32, 64});
  auto recon_dims = p.get<std::vector<int>>("reconstruction_dims", {3, 4, 5});
  int recon_cells = p.get<int>("reconstruction_cells", 8);
  double perturbation = p.get<double>("perturbation", 0.01);
  int type_n = p.get<int>("type_n", 4);
  int type_cells = p.get<int>("type_cells", 16);
  int gram_cells = p.get<int>("gram_cells", 32);
  p.finish();
  detail::require_dims({n, type_n}, 2, 6, "killing");
  detail::require_dims(recon_dims, 2, 6, "killing");
  if (cells.size() < 2) throw ConfigError("killing: need at least two grid sizes");
  for (int c : cells)
    if (c < 4 || c % 2) throw ConfigError("killing: grid sizes must be even and at least 4");
  if (recon_cells < 4 || type_cells < 4 || gram_cells < 4) throw ConfigError("killing: grids need 4 cells");

  std::mt19937_64 rng(seed);
  auto slab = [](int d, int c) {
    RVec lo = RVec::Zero(d);
    lo(0) = 1.0;
    return make_box(d, lo, 1.0, c);
  };
  auto base = [](int d, int c) {
    std::vector<int> b(d, c / 2);
    b[0] = 0;
    return b;
  };

  auto rep = build_clifford_rep(n);
  CMat S0 = detail::random_tuple(rep.m, rng);
  {
    detail::Stage st(r);
    Table t{"killing_convergence", {"cells", "h", "residual_max", "residual_rms"}, {}};
    Series s{"killing.residual", "killing.convergence", "h", "rms residual", true, true, {}, {}};
    std::vector<double> res, rms;
    SpinorMTuple finest;
    for (int c : cells) {
      auto f = build_killing_basis(rep, slab(n, c), base(n, c), S0, jobs);
      auto kr = killing_residual(f, jobs);
      res.push_back(kr.max);
      rms.push_back(kr.rms);
      t.rows.push_back({double(c), f.domain.h, kr.max, kr.rms});
      s.x.push_back(f.domain.h);
      s.y.push_back(kr.rms);
      if (c == cells.back()) finest = std::move(f);
    }
    for (std::size_t k = 1; k < cells.size(); ++k) {
      double refine = std::log(double(cells[k]) / cells[k - 1]);
      Check c = in_range("killing.order." + std::to_string(cells[k - 1]) + "-" + std::to_string(cells[k]),
                         "killing.convergence", std::log(rms[k - 1] / rms[k]) / refine, 1.8, 2.2);
      c.details = {{"norm", "rms"}, {"max_norm_order", std::log(res[k - 1] / res[k]) / refine}};
      r.checks.push_back(c);
    }
    r.tables.push_back(t);
    r.series.push_back(s);

    const double kr = res.back();
    double worst_field = 0, worst_fd = 0;
    for (int a = 0; a < rep.m; ++a) {
      auto vp = v_profile(finest, a, jobs);
      worst_field = std::max(worst_field, vp.c_std);
      worst_fd = std::max(worst_fd, vp.c_fd_std);
    }
    Check c1 = at_most("killing.v_identity.field_gradient", "killing.v_identity", worst_field, 10 * kr);
    Check c2 = at_most("killing.v_identity.grid_gradient", "killing.v_identity", worst_fd, 10 * kr);
    c1.details = c2.details = {{"killing_residual", kr}, {"cells", cells.back()}};
    r.checks.push_back(c1);
    r.checks.push_back(c2);
  }
  {
    detail::Stage st(r);
    auto d = slab(n, gram_cells);
    auto b = base(n, gram_cells);
    CMat U = diagonalize_omega(rep, axis(n, 0));
    auto f = build_killing_basis(rep, d, b, adapted_initial_data(rep, U, d.point(b)(0)), jobs);
    auto g = gram_identity_check(f);
    r.checks.push_back(at_most("killing.gram.adapted_offdiag", "killing.gram", g.max_offdiag, 1e-6));
    r.checks.push_back(at_most("killing.gram.adapted_spread", "killing.gram", g.max_spread, 1e-6));
    auto fr = build_killing_basis(rep, d, b, detail::random_tuple(rep.m, rng), jobs);
    auto gr = gram_identity_check(fr);
    r.checks.push_back(at_most("killing.gram.opposite_sign_constant", "killing.gram", gr.opposite_gradient, 1e-8));
    r.checks.push_back(at_least("killing.gram.psd", "killing.gram", gr.min_eigenvalue, -1e-12));
  }
  {
    detail::Stage st(r);
    auto trep = build_clifford_rep(type_n);
    auto d = slab(type_n, type_cells);
    auto b = base(type_n, type_cells);
    RVec nu0 = detail::random_unit(type_n, rng);
    auto K = killing_matrices(trep);
    Eigen::SelfAdjointEigenSolver<CMat> es(killing_combination(K, nu0));
    CMat T0 = detail::random_tuple(trep.m, rng);
    T0.col(0) = es.eigenvectors().col(trep.m - 1);
    T0.col(trep.m - 1) = es.eigenvectors().col(trep.m - 2);
    auto f = build_killing_basis(trep, d, b, T0, jobs);
    double kr = killing_residual(f, jobs).max;
    double wit = 0, wres = 0;
    bool typeI = true;
    for (int a : {0, trep.m - 1}) {
      auto t = classify_type(f, a, b, kr, jobs);
      typeI = typeI && t.type == SpinorType::I;
      wit = std::max(wit, t.type == SpinorType::I ? (t.witness - nu0).norm() : INFINITY);
      wres = std::max(wres, t.witness_residual);
    }
    r.checks.push_back(holds("killing.type_I.classified", "killing.type", typeI));
    r.checks.push_back(at_most("killing.type_I.witness_error", "killing.type", wit, 1e-6));
    r.checks.push_back(at_most("killing.type_I.witness_residual", "killing.type", wres, 1e-6));
    auto fg = build_killing_basis(trep, d, b, detail::random_tuple(trep.m, rng), jobs);
    double krg = killing_residual(fg, jobs).max;
    bool typeII = true;
    for (int a = 0; a < trep.m; ++a) typeII = typeII && classify_type(fg, a, b, krg, jobs).type == SpinorType::II;
    r.checks.push_back(holds("killing.type_II.generic", "killing.type", typeII));
  }
  {
    detail::Stage st(r);
    Table t{"curvature_reconstruction", {"n", "hyperbolic_residual", "perturbed_residual"}, {}};
    for (int d : recon_dims) {
      auto rp = build_clifford_rep(d);
      auto f = build_killing_basis(rp, slab(d, recon_cells), base(d, recon_cells), jobs);
      double h = curvature_reconstruction_residual(f, hyperbolic_factor(d));
      double q = curvature_reconstruction_residual(f, perturbed_hyperbolic_factor(d, perturbation));
      r.checks.push_back(at_most(detail::tag("killing.reconstruction.hyperbolic", d), "killing.reconstruction", h, 1e-6));
      r.checks.push_back(
          at_least(detail::tag("killing.reconstruction.perturbed", d), "killing.reconstruction", q, 1e-3));
      t.rows.push_back({double(d), h, q});
    }
    r.tables.push_back(t);
  }
}

inline void suite_polytope(SuiteResult& r, ParamTable& p, std::uint64_t seed, int jobs) {
  int n = p.get<int>("n", 3);
  double lo = p.get<double>("lo", 1.0);
  double hi = p.get<double>("hi", 3.0);
  auto lambdas = p.get<std::vector<double>>("lambdas", {10.0, 20.0, 40.0});
  int samples = p.get<int>("samples", 400);
  auto sphere_dims = p.get<std::vector<int>>("sphere_dims", {3, 4, 5});
  auto hs_lambdas = p.get<std::vector<double>>("half_space_lambdas", {1.0, 10.0, 100.0});
  p.finish();
  detail::require_dims({n}, 2, 6, "smooth-polytope");
  detail::require_dims(sphere_dims, 2, 8, "smooth-polytope");
  if (!(lo > 0) || !(hi > lo)) throw ConfigError("smooth-polytope: need 0 < lo < hi");
  if (lambdas.size() < 2) throw ConfigError("smooth-polytope: need at least two lambdas");
  for (std::size_t k = 0; k < lambdas.size(); ++k)
    if (!(lambdas[k] > 0) || (k && lambdas[k] <= lambdas[k - 1]))
      throw ConfigError("smooth-polytope: lambdas must be positive and increasing");
  if (samples < 1) throw ConfigError("smooth-polytope: samples must be positive");

  auto P = make_box_polytope(RVec::Constant(n, lo), RVec::Constant(n, hi));
  const double facets = static_cast<double>(P.facets.size());
  {
    detail::Stage st(r);
    auto dirs = random_directions(n, samples, seed);
    for (double lam : lambdas) {
      auto sb = boundary_sample(P, lam, dirs, jobs);
      double Fres = 0, uviol = 0, Hmin = INFINITY;
      for (const auto& s : sb.samples) {
        Fres = std::max(Fres, s.F_residual);
        uviol = std::max({uviol, s.max_u, -std::log(facets) / lam - s.max_u});
        Hmin = std::min(Hmin, s.H);
      }
      std::string sfx = ".lambda" + format_double(lam);
      r.checks.push_back(at_most("polytope.level_set" + sfx, "polytope.level_set", Fres, 1e-10));
      Check c = at_most("polytope.max_u_range" + sfx, "polytope.level_set", uviol, 1e-12);
      c.details = {{"lower_bound", -std::log(facets) / lam}};
      r.checks.push_back(c);
      r.checks.push_back(at_least("polytope.mean_curvature_nonneg" + sfx, "polytope.convexity", Hmin, -1e-10));
    }
  }
  {
    detail::Stage st(r);
    auto rows = smoothing_convergence(P, lambdas, samples, seed, jobs);
    Table t{"cube_convergence",
            {"lambda", "hausdorff", "hausdorff_inner", "normal_deviation", "max_defect", "max_F_residual"},
            {}};
    Series sd{"polytope.cube.defect", "polytope.convergence", "lambda", "max |defect|", true, true, {}, {}};
    Series sn{"polytope.cube.normal_deviation", "polytope.convergence", "lambda", "normal deviation", true, true, {}, {}};
    Series sh{"polytope.cube.hausdorff", "polytope.convergence", "lambda", "Hausdorff estimate", true, true, {}, {}};
    bool defect_mono = true, normal_mono = true, haus_mono = true;
    double Fres = 0;
    for (std::size_t k = 0; k < rows.size(); ++k) {
      const auto& q = rows[k];
      t.rows.push_back({q.lambda, q.hausdorff, q.hausdorff_inner, q.normal_deviation, q.max_defect, q.max_F_residual});
      sd.x.push_back(q.lambda);
      sd.y.push_back(q.max_defect);
      sn.x.push_back(q.lambda);
      sn.y.push_back(q.normal_deviation);
      sh.x.push_back(q.lambda);
      sh.y.push_back(q.hausdorff);
      Fres = std::max(Fres, q.max_F_residual);
      if (k) {
        defect_mono = defect_mono && q.max_defect <= rows[k - 1].max_defect + 1e-9;
        normal_mono = normal_mono && q.normal_deviation <= rows[k - 1].normal_deviation + 1e-9;
        haus_mono = haus_mono && q.hausdorff < rows[k - 1].hausdorff;
      }
    }
    r.checks.push_back(holds("polytope.cube.defect_nonincreasing", "polytope.convergence", defect_mono));
    r.checks.push_back(holds("polytope.cube.normal_deviation_nonincreasing", "polytope.convergence", normal_mono));
    r.checks.push_back(holds("polytope.cube.hausdorff_decreasing", "polytope.convergence", haus_mono));
    r.checks.push_back(at_most("polytope.cube.level_set", "polytope.level_set", Fres, 1e-10));
    r.tables.push_back(t);
    r.series.push_back(sd);
    r.series.push_back(sn);
    r.series.push_back(sh);
  }
  {
    detail::Stage st(r);
    auto g = hyperbolic_metric_field(n);
    double worst = 0;
    int edges = 0;
    for (auto [i, j] : adjacent_pairs(P)) {
      worst = std::max(worst, dihedral_and_matching(P, i, j, g).matching_residual);
      ++edges;
    }
    Check c = at_most("polytope.cube.matching", "polytope.matching", worst, 1e-12);
    c.details = {{"edges", edges}};
    r.checks.push_back(c);
  }
  {
    detail::Stage st(r);
    Table t{"sphere_oracle", {"n", "trace_norm_error", "mean_curvature_error", "max_defect"}, {}};
    for (int d : sphere_dims) {
      RVec c = RVec::Zero(d);
      c(0) = 3.0;
      auto sb = sphere_boundary(c, 1.0, random_directions(d, 100, seed + d));
      auto tn = trace_norm_dN(sb, BoundaryMetric::Euclidean);
      auto H = smoothed_mean_curvature(sb);
      auto def = boundary_defect_hyperbolic(sb);
      double et = 0, eh = 0, ed = 0;
      for (std::size_t k = 0; k < sb.samples.size(); ++k) {
        et = std::max(et, std::abs(tn[k].trace_norm - (d - 1)));
        eh = std::max(eh, std::abs(H[k] - (d - 1)));
        ed = std::max(ed, std::abs(def[k].defect));
      }
      r.checks.push_back(at_most(detail::tag("polytope.sphere.trace_norm", d), "polytope.trace_norm", et, 1e-10));
      r.checks.push_back(at_most(detail::tag("polytope.sphere.mean_curvature", d), "polytope.trace_norm", eh, 1e-10));
      r.checks.push_back(at_most(detail::tag("polytope.sphere.defect", d), "polytope.defect", ed, 1e-8));
      t.rows.push_back({double(d), et, eh, ed});
    }
    r.tables.push_back(t);
  }
  {
    detail::Stage st(r);
    RVec c = RVec::Zero(n);
    c(0) = 1.0;
    auto H = half_space(axis(n, 0), 2.0, c);
    std::vector<RVec> up;
    for (const auto& d : random_directions(n, 60, seed + 101))
      if (d(0) > 0.1) up.push_back(d);
    double uerr = 0;
    bool exact = true;
    for (double lam : hs_lambdas) {
      auto sb = boundary_sample(H, lam, up, jobs);
      for (const auto& s : sb.samples) {
        uerr = std::max(uerr, std::abs(H.u(0, s.x)));
        exact = exact && (s.N - axis(n, 0)).norm() == 0.0 && s.dN.norm() == 0.0 && s.H == 0.0;
      }
      for (const auto& tt : trace_norm_dN(sb, BoundaryMetric::Hyperbolic)) exact = exact && tt.trace_norm == 0.0;
      for (const auto& d : boundary_defect_hyperbolic(sb)) exact = exact && d.defect == 0.0;
    }
    r.checks.push_back(at_most("polytope.half_space.on_plane", "polytope.half_space", uerr, 1e-12));
    r.checks.push_back(holds("polytope.half_space.exact_values", "polytope.half_space", exact));
  }
}

inline void suite_sl(SuiteResult& r, ParamTable& p, std::uint64_t seed, int jobs) {
  auto dims = p.get<std::vector<int>>("dims", {2, 3});
  auto h_list = p.get<std::vector<double>>("h_list", {1.0 / 16, 1.0 / 32, 1.0 / 64});
  int degree = p.get<int>("degree", 3);
  double width = p.get<double>("width", 0.5);
  auto anti_dims = p.get<std::vector<int>>("anticommutation_dims", {2, 3, 4, 5});
  int trials = p.get<int>("anticommutation_trials", 10000);
  int bound_n = p.get<int>("bound_n", 4);
  int draws = p.get<int>("bound_draws", 500);
  double leaf_R = p.get<double>("leaf_scalar_curvature", -1.0);
  int pairing_samples = p.get<int>("pairing_samples", 200);
  p.finish();
  detail::require_dims(dims, 2, 4, "sl-residual");
  detail::require_dims(anti_dims, 2, 8, "sl-residual");
  detail::require_dims({bound_n}, 3, 8, "sl-residual");
  if (h_list.size() < 2) throw ConfigError("sl-residual: h_list needs at least two steps");
  std::vector<int> cells;
  for (double h : h_list) {
    double c = 1.0 / h;
    if (!(h > 0) || std::abs(c - std::round(c)) > 1e-9 || std::round(c) < 4)
      throw ConfigError("sl-residual: each h must be 1/k for an integer k >= 4");
    cells.push_back(static_cast<int>(std::round(c)));
  }
  if (trials < 1 || draws < 1 || pairing_samples < 1) throw ConfigError("sl-residual: counts must be positive");
  if (leaf_R < 0) leaf_R = (bound_n - 1.0) * (bound_n - 2.0);

  for (int n : dims) {
    detail::Stage st(r);
    auto rep = build_clifford_rep(n);
    auto a = assemble_operators(rep, flat_background(n), parity_of(rep));
    RVec lo = RVec::Constant(n, 0.5);
    auto mf = manufactured_field(n, rep.m, lo.array() + 0.5, width, degree, seed + n);
    auto rows = sl_identity_residual(a, mf, lo, 1.0, cells, jobs);
    Table t{detail::tag("sl_terms", n),
            {"h", "lhs", "grad", "curvature", "psi_gradient", "psi_square", "boundary_dirac", "boundary_mean",
             "boundary_psi", "residual"},
            {}};
    Series s{detail::tag("sl.residual", n), "sl.identity", "h", "|residual|", true, true, {}, {}};
    bool finite = true;
    for (const auto& q : rows) {
      t.rows.push_back({q.h, q.lhs, q.grad, q.curvature, q.psi_gradient, q.psi_square, q.boundary_dirac,
                        q.boundary_mean, q.boundary_psi, q.residual});
      s.x.push_back(q.h);
      s.y.push_back(std::abs(q.residual));
      finite = finite && q.finite();
    }
    Check fin = holds(detail::tag("sl.terms_finite", n), "sl.identity", finite);
    fin.details = {{"relative_residual", std::abs(rows.back().residual) / rows.back().lhs}};
    r.checks.push_back(fin);
    auto orders = observed_orders(rows);
    for (std::size_t k = 0; k < orders.size(); ++k) {
      Check c = in_range(detail::tag("sl.order", n) + ".s" + std::to_string(k + 1), "sl.identity", orders[k], 1.8, 2.2);
      c.details = {{"h_coarse", rows[k].h}, {"h_fine", rows[k + 1].h}, {"residual_coarse", rows[k].residual},
                   {"residual_fine", rows[k + 1].residual}};
      r.checks.push_back(c);
    }
    r.tables.push_back(t);
    r.series.push_back(s);
  }

  Table at{"boundary_anticommutation", {"n", "symbol", "zeroth_order", "chi_square", "chi_adjoint"}, {}};
  for (int n : anti_dims) {
    detail::Stage st(r);
    auto rep = build_clifford_rep(n);
    auto a = assemble_operators(rep, hyperbolic_background(n), parity_of(rep));
    auto q = boundary_anticommutation_check(a, trials, seed + 17 * n, RVec::Constant(n, 0.5), 1.0);
    std::string mode = parity_name(a.mode);
    Check c = at_most(detail::tag("sl.anticommutation.symbol", n), "boundary.anticommutation", q.symbol_max, 1e-12);
    c.details = {{"mode", mode}, {"trials", q.trials}};
    r.checks.push_back(c);
    r.checks.push_back(at_most(detail::tag("sl.anticommutation.full", n), "boundary.anticommutation",
                               q.zeroth_order_max, 1e-12));
    r.checks.push_back(at_most(detail::tag("sl.chi.square", n), "boundary.chi", q.chi_square_max, 1e-12));
    r.checks.push_back(at_most(detail::tag("sl.chi.adjoint", n), "boundary.chi", q.chi_adjoint_max, 1e-12));
    at.rows.push_back({double(n), q.symbol_max, q.zeroth_order_max, q.chi_square_max, q.chi_adjoint_max});
  }
  r.tables.push_back(at);

  {
    detail::Stage st(r);
    auto rep = build_clifford_rep(bound_n);
    std::mt19937_64 rng(seed + 1000);
    std::uniform_real_distribution<double> up(0.1, 3.0), uu(0.0, 1.0);
    int violations = 0;
    double worst = INFINITY;
    for (int k = 0; k < draws; ++k) {
      double psi = up(rng);
      RVec mu(bound_n - 1);
      for (int i = 0; i < bound_n - 1; ++i) mu(i) = uu(rng) / psi;
      auto b = curvature_endomorphism_bound(rep, leaf_R, psi, mu);
      worst = std::min(worst, b.margin);
      if (b.margin < -1e-10) ++violations;
    }
    Check c = at_most("sl.leaf_bound.violations", "curvature.leaf_bound", violations, 0);
    c.details = {{"draws", draws}, {"worst_margin", worst}, {"leaf_scalar_curvature", leaf_R}};
    r.checks.push_back(c);
    double psi = 1.7;
    auto b = curvature_endomorphism_bound(rep, leaf_R, psi, RVec::Constant(bound_n - 1, 1 / psi));
    r.checks.push_back(at_most("sl.leaf_bound.equality", "curvature.leaf_bound", std::abs(b.margin), 1e-8));

    int bviol = 0;
    std::normal_distribution<double> g;
    for (int k = 0; k < draws; ++k) {
      RMat Z(bound_n - 1, bound_n - 1);
      for (int i = 0; i < bound_n - 1; ++i)
        for (int j = 0; j < bound_n - 1; ++j) Z(i, j) = g(rng);
      double ps = up(rng);
      RVec mu(bound_n - 1);
      for (int i = 0; i < bound_n - 1; ++i) mu(i) = uu(rng) / ps;
      if (boundary_endomorphism_bound(rep, Z * Z.transpose(), ps, mu).margin < -1e-10) ++bviol;
    }
    r.checks.push_back(at_most("sl.boundary_bound.violations", "curvature.boundary_bound", bviol, 0));
  }
  {
    detail::Stage st(r);
    for (int n : {3, 4}) {
      auto rep = build_clifford_rep(n);
      auto a = assemble_operators(rep, hyperbolic_background(n), parity_of(rep));
      auto P = make_box_polytope(RVec::Constant(n, 1.0), RVec::Constant(n, 2.0));
      auto B = boundary_sample(P, 20.0, random_directions(n, pairing_samples, seed + 7 * n), jobs);
      std::vector<RVec> xs, Ns;
      for (const auto& s : B.samples) {
        xs.push_back(s.x);
        Ns.push_back(s.N);
      }
      auto q = chi_lambda_pairing_check(a, xs, Ns, seed + n);
      r.checks.push_back(at_most(detail::tag("sl.chi_lambda.involution", n), "boundary.chi",
                                 std::max(q.chi_square_max, q.chi_adjoint_max), 1e-12));
      r.checks.push_back(at_most(detail::tag("sl.chi_lambda.orthogonal_pairing", n), "boundary.chi",
                                 q.orthogonal_pairing_max, 1e-12));
      r.checks.push_back(at_most(detail::tag("sl.chi_lambda.psi_reduction", n), "boundary.chi",
                                 q.psi_reduction_max, 1e-12));
    }
  }
}

inline void suite_tracenorm(SuiteResult& r, ParamTable& p, std::uint64_t seed) {
  int draws = p.get<int>("draws", 1000);
  int max_n = p.get<int>("max_n", 6);
  int mc_samples = p.get<int>("mc_samples", 100000);
  auto mc_dims = p.get<std::vector<int>>("mc_dims", {2, 3, 4});
  int mc_repeats = p.get<int>("mc_repeats", 2);
  double mu_max = p.get<double>("mu_max", 5.0);
  p.finish();
  if (draws < 1 || mc_samples < 1 || mc_repeats < 1) throw ConfigError("tracenorm: counts must be positive");
  if (max_n < 2 || max_n > 12) throw ConfigError("tracenorm: max_n must lie in [2, 12]");
  detail::require_dims(mc_dims, 1, 8, "tracenorm");
  if (!(mu_max >= 1)) throw ConfigError("tracenorm: mu_max must be at least 1");

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  std::uniform_real_distribution<double> um(1.0, mu_max);
  auto random_L = [&](int n) {
    RMat L(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) L(i, j) = g(rng);
    return L;
  };
  auto random_mu = [&](int n) {
    RVec mu(n);
    for (int i = 0; i < n; ++i) mu(i) = um(rng);
    return mu;
  };
  {
    detail::Stage st(r);
    std::uniform_int_distribution<int> dim(2, max_n);
    int violations = 0;
    double worst_gap = INFINITY;
    for (int k = 0; k < draws; ++k) {
      int n = dim(rng);
      auto t = trace_norm_comparison(random_L(n), random_mu(n), 20, rng);
      if (!t.ordered || t.tn2 > t.tn1 + 1e-9 || t.tn2_left > t.tn1 + 1e-9) ++violations;
      worst_gap = std::min(worst_gap, t.tn1 - t.tn2);
    }
    Check c = at_most("tracenorm.ordering.violations", "tracenorm.ordering", violations, 0);
    c.details = {{"draws", draws}, {"min_gap", worst_gap}};
    r.checks.push_back(c);
  }
  {
    detail::Stage st(r);
    RMat L = RMat::Zero(2, 2);
    L.diagonal() << 1, 2;
    RVec mu(2);
    mu << 4, 1;
    std::mt19937_64 local(seed);
    auto t = trace_norm_comparison(L, mu, 1000, local);
    r.checks.push_back(at_most("tracenorm.example.tn1", "tracenorm.example", std::abs(t.tn1 - 3.0), 1e-14));
    r.checks.push_back(at_most("tracenorm.example.tn2", "tracenorm.example", std::abs(t.tn2 - 2.5), 1e-14));
  }
  {
    detail::Stage st(r);
    Table t{"tracenorm_monte_carlo", {"n", "repeat", "tn1", "tn2", "tn2_left", "mc_max", "relative_gap"}, {}};
    for (int n : mc_dims) {
      for (int k = 0; k < mc_repeats; ++k) {
        auto q = trace_norm_comparison(random_L(n), random_mu(n), mc_samples, rng);
        double gap = (q.tn2 - q.mc_max) / q.tn2;
        std::string id = detail::tag("tracenorm.monte_carlo", n) + ".r" + std::to_string(k);
        Check c = at_most(id + ".gap", "tracenorm.sup", gap, 0.01);
        c.details = {{"samples", mc_samples}, {"tn2", q.tn2}, {"mc_max", q.mc_max}};
        r.checks.push_back(c);
        r.checks.push_back(at_most(id + ".excess", "tracenorm.sup", q.mc_max - q.tn2, 1e-9));
        t.rows.push_back({double(n), double(k), q.tn1, q.tn2, q.tn2_left, q.mc_max, gap});
      }
    }
    r.tables.push_back(t);
  }
}

inline void apply_tolerances(SuiteResult& r, const std::map<std::string, ToleranceOverride>& tol) {
  for (const auto& [id, o] : tol) {
    bool found = false;
    for (auto& c : r.checks) {
      if (c.id != id) continue;
      found = true;
      if (c.cmp == Comparison::InRange) {
        if (!o.range) throw ConfigError("tolerance for range check '" + id + "' must be [lo, hi]");
        c.tolerance = o.lo;
        c.upper = o.hi;
      } else {
        if (o.range) throw ConfigError("tolerance for '" + id + "' must be a single number");
        if (c.cmp == Comparison::Equal) throw ConfigError("check '" + id + "' has no adjustable tolerance");
        c.tolerance = o.lo;
      }
    }
    if (!found) throw ConfigError("tolerance override for unknown check '" + id + "'");
  }
}

inline std::string inputs_digest(const SuiteConfig& c) {
  nlohmann::json j;
  j["suite"] = c.suite;
  j["params"] = c.params;
  j["seed"] = c.seed ? nlohmann::json(*c.seed) : nlohmann::json(nullptr);
  nlohmann::json t = nlohmann::json::object();
  for (const auto& [k, o] : c.tolerances) t[k] = o.range ? nlohmann::json{o.lo, o.hi} : nlohmann::json(o.lo);
  j["tolerances"] = t;
  return hex64(fnv1a(j.dump()));
}

// Throws ConfigError on invalid configuration, before any output is written.
inline SuiteResult run_suite(const SuiteConfig& c, int jobs = 1) {
  if (!known_suite(c.suite)) throw ConfigError("unknown suite '" + c.suite + "'");
  if (suite_needs_seed(c.suite) && !c.seed) throw ConfigError("suite '" + c.suite + "' needs a seed");
  SuiteResult r;
  r.suite = c.suite;
  r.seeded = c.seed.has_value();
  r.seed = c.seed.value_or(0);
  r.digest = inputs_digest(c);
  ParamTable p(c.params, c.suite + " params");
  const std::uint64_t seed = r.seed;
  try {
    if (c.suite == "clifford-check") suite_clifford(r, p, seed);
    else if (c.suite == "warped") suite_warped(r, p);
    else if (c.suite == "killing") suite_killing(r, p, seed, jobs);
    else if (c.suite == "smooth-polytope") suite_polytope(r, p, seed, jobs);
    else if (c.suite == "sl-residual") suite_sl(r, p, seed, jobs);
    else suite_tracenorm(r, p, seed);
  } catch (const ConfigError&) {
    throw;
  } catch (const std::invalid_argument& e) {
    throw ConfigError(c.suite + ": " + e.what());
  }
  apply_tolerances(r, c.tolerances);
  sort_checks(r);
  return r;
}

}  // namespace rigidity_lab
