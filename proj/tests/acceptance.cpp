// One line per acceptance criterion; exit status 0 iff all pass.

#include <rigidity_lab/rigidity_lab.hpp>

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>
#include <sys/wait.h>

using namespace rigidity_lab;
namespace fs = std::filesystem;

namespace {

struct Run {
  SuiteResult result;
  double seconds = 0;
  std::string error;
};

std::map<std::string, Run> runs;

const Run& suite(const std::string& name) {
  auto it = runs.find(name);
  if (it != runs.end()) return it->second;
  Run r;
  auto t0 = std::chrono::steady_clock::now();
  try {
    r.result = run_suite(load_config(std::string(RIGIDITY_LAB_CONFIGS) + "/" + name + ".json"), hardware_jobs());
  } catch (const std::exception& e) {
    r.error = e.what();
  }
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return runs.emplace(name, std::move(r)).first->second;
}

// Collects failures into `why`.
struct Verdict {
  bool ok = true;
  std::vector<std::string> why;
  void fail(const std::string& s) {
    ok = false;
    why.push_back(s);
  }
};

std::vector<const Check*> with_prefix(const SuiteResult& r, const std::string& prefix) {
  std::vector<const Check*> out;
  for (const auto& c : r.checks)
    if (c.id.rfind(prefix, 0) == 0) out.push_back(&c);
  return out;
}

// Every matching check passes and its tolerance is no looser than stated.
double expect_at_most(Verdict& v, const SuiteResult& r, const std::string& prefix, double tol,
                      std::size_t min_count = 1) {
  auto cs = with_prefix(r, prefix);
  if (cs.size() < min_count) v.fail(prefix + ": expected " + std::to_string(min_count) + " checks");
  double worst = 0;
  for (auto* c : cs) {
    worst = std::max(worst, c->measured);
    if (c->cmp != Comparison::AtMost || c->tolerance > tol) v.fail(c->id + ": tolerance looser than " + format_double(tol));
    if (!c->pass()) v.fail(c->id + " measured " + format_double(c->measured));
  }
  return worst;
}

double expect_at_least(Verdict& v, const SuiteResult& r, const std::string& prefix, double tol,
                       std::size_t min_count = 1) {
  auto cs = with_prefix(r, prefix);
  if (cs.size() < min_count) v.fail(prefix + ": expected " + std::to_string(min_count) + " checks");
  double worst = INFINITY;
  for (auto* c : cs) {
    worst = std::min(worst, c->measured);
    if (c->cmp != Comparison::AtLeast || c->tolerance < tol) v.fail(c->id + ": tolerance looser than " + format_double(tol));
    if (!c->pass()) v.fail(c->id + " measured " + format_double(c->measured));
  }
  return worst;
}

std::pair<double, double> expect_range(Verdict& v, const SuiteResult& r, const std::string& prefix, double lo,
                                       double hi, std::size_t min_count = 1) {
  auto cs = with_prefix(r, prefix);
  if (cs.size() < min_count) v.fail(prefix + ": expected " + std::to_string(min_count) + " checks");
  double mn = INFINITY, mx = -INFINITY;
  for (auto* c : cs) {
    mn = std::min(mn, c->measured);
    mx = std::max(mx, c->measured);
    if (c->cmp != Comparison::InRange || c->tolerance < lo || c->upper > hi)
      v.fail(c->id + ": range looser than stated");
    if (!c->pass()) v.fail(c->id + " measured " + format_double(c->measured));
  }
  return {mn, mx};
}

void expect_holds(Verdict& v, const SuiteResult& r, const std::string& prefix, std::size_t min_count = 1) {
  auto cs = with_prefix(r, prefix);
  if (cs.size() < min_count) v.fail(prefix + ": expected " + std::to_string(min_count) + " checks");
  for (auto* c : cs)
    if (!c->pass()) v.fail(c->id + " does not hold");
}

void expect_runtime(Verdict& v, const Run& run, double limit) {
  if (run.seconds >= limit) v.fail("runtime " + format_double(run.seconds) + " s exceeds " + format_double(limit) + " s");
}

const SuiteResult* usable(Verdict& v, const std::string& name) {
  const Run& r = suite(name);
  if (!r.error.empty()) {
    v.fail(name + ": " + r.error);
    return nullptr;
  }
  return &r.result;
}

std::string sci(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2e", x);
  return buf;
}

int failures = 0;

void report(int id, const std::string& title, const Verdict& v, const std::string& summary) {
  std::cout << "AC" << id << (id < 10 ? "  " : " ") << (v.ok ? "PASS" : "FAIL") << "  " << title << ": " << summary
            << "\n";
  for (const auto& w : v.why) std::cout << "        - " << w << "\n";
  if (!v.ok) ++failures;
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

// Relative path -> bytes for everything except meta.json.
std::map<std::string, std::string> snapshot(const fs::path& dir) {
  std::map<std::string, std::string> out;
  if (!fs::exists(dir)) return out;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (!e.is_regular_file() || e.path().filename() == "meta.json") continue;
    out[fs::relative(e.path(), dir).string()] = slurp(e.path());
  }
  return out;
}

int run_cli(const std::string& suite_name, const fs::path& out) {
  std::string cmd = std::string(RIGIDITY_LAB_CLI) + " " + suite_name + " --config " + RIGIDITY_LAB_CONFIGS + "/" +
                    suite_name + ".json --out " + out.string() + " >/dev/null 2>&1";
  int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

int main() {
  {
    Verdict v;
    std::string s = "suite error";
    if (auto* r = usable(v, "clifford-check")) {
      double worst = 0;
      for (int n = 2; n <= 6; ++n) {
        std::string k = std::to_string(n);
        worst = std::max(worst, expect_at_most(v, *r, "clifford.relations.n" + k, 1e-12));
        worst = std::max(worst, expect_at_most(v, *r, "clifford.omega.n" + k, 1e-12));
      }
      expect_runtime(v, suite("clifford-check"), 5.0);
      s = "n = 2..6, max residual " + sci(worst) + " (< 1e-12), " + sci(suite("clifford-check").seconds) + " s";
    }
    report(1, "Clifford relations", v, s);
  }
  {
    Verdict v;
    std::string s = "suite error";
    if (auto* r = usable(v, "warped")) {
      double worst = std::max(expect_at_most(v, *r, "warped.hyperbolic_scalar.n3", 1e-6),
                              expect_at_most(v, *r, "warped.hyperbolic_scalar.n4", 1e-6));
      auto [lo, hi] = expect_range(v, *r, "warped.torus_oracle_order.", 1.8, 2.2, 2);
      expect_runtime(v, suite("warped"), 60.0);
      s = "hyperbolic R error " + sci(worst) + " (< 1e-6); oracle order in [" + fixed(lo, 3) + ", " + fixed(hi, 3) +
          "]";
    }
    report(2, "Curvature closed forms", v, s);
  }
  {
    Verdict v;
    std::string s = "suite error";
    if (auto* r = usable(v, "killing")) {
      auto [lo, hi] = expect_range(v, *r, "killing.order.", 1.8, 2.2, 3);
      if (!r->find("killing.order.32-64")) v.fail("finest refinement must reach a 64^3 grid");
      auto vi = r->find("killing.v_identity.grid_gradient");
      auto vf = r->find("killing.v_identity.field_gradient");
      if (!vi || !vf || !vi->pass() || !vf->pass()) v.fail("V identity spread exceeds 10x Killing residual");
      double off = expect_at_most(v, *r, "killing.gram.adapted_offdiag", 1e-6);
      double wit = expect_at_most(v, *r, "killing.type_I.witness_error", 1e-6);
      expect_holds(v, *r, "killing.type_I.classified");
      expect_runtime(v, suite("killing"), 120.0);
      s = "order in [" + fixed(lo, 3) + ", " + fixed(hi, 3) + "]; V spread " + sci(vi ? vi->measured : NAN) +
          " <= " + sci(vi ? vi->tolerance : NAN) + "; Gram offdiag " + sci(off) + "; witness error " + sci(wit) +
          "; " + fixed(suite("killing").seconds, 1) + " s";
    }
    report(3, "Killing machinery", v, s);
  }
  {
    Verdict v;
    std::string s = "suite error";
    if (auto* r = usable(v, "killing")) {
      double h = expect_at_most(v, *r, "killing.reconstruction.hyperbolic", 1e-6, 2);
      double p = expect_at_least(v, *r, "killing.reconstruction.perturbed", 1e-3, 2);
      bool odd = r->find("killing.reconstruction.hyperbolic.n3") || r->find("killing.reconstruction.hyperbolic.n5");
      bool even = r->find("killing.reconstruction.hyperbolic.n4") != nullptr;
      if (!odd || !even) v.fail("need both an odd and an even dimension");
      s = "hyperbolic " + sci(h) + " (< 1e-6), perturbed >= " + sci(p) + " (> 1e-3), odd and even n";
    }
    report(4, "Curvature reconstruction", v, s);
  }
  {
    Verdict v;
    std::string s = "suite error";
    if (auto* r = usable(v, "sl-residual")) {
      double sym = expect_at_most(v, *r, "sl.anticommutation.symbol", 1e-12, 2);
      double full = expect_at_most(v, *r, "sl.anticommutation.full", 1e-12, 2);
      double chi = std::max(expect_at_most(v, *r, "sl.chi.square", 1e-12, 2),
                            expect_at_most(v, *r, "sl.chi.adjoint", 1e-12, 2));
      bool even = false, odd = false;
      for (auto* c : with_prefix(*r, "sl.anticommutation.symbol")) {
        if (c->details.value("trials", 0) < 10000) v.fail(c->id + ": fewer than 10^4 frames");
        std::string mode = c->details.value("mode", "");
        even = even || mode == "even";
        odd = odd || mode == "odd";
      }
      if (!even || !odd) v.fail("need both even and odd modes");
      s = "symbol " + sci(sym) + ", full operator " + sci(full) + ", chi " + sci(chi) + " (< 1e-12), even and odd";
    }
    report(5, "Boundary operator algebra", v, s);
  }
  {
    Verdict v;
    std::string s = "suite error";
    if (auto* r = usable(v, "sl-residual")) {
      auto [lo, hi] = expect_range(v, *r, "sl.order.", 1.8, 2.2, 2);
      expect_holds(v, *r, "sl.terms_finite.");
      for (auto* c : with_prefix(*r, "sl.order."))
        if (c->id.find(".s1") != std::string::npos && c->details.value("h_coarse", 0.0) != 1.0 / 16)
          v.fail(c->id + ": coarsest step is not 1/16");
      expect_runtime(v, suite("sl-residual"), 120.0);
      s = "flat order in [" + fixed(lo, 3) + ", " + fixed(hi, 3) + "] over h = 1/16, 1/32, 1/64; all terms finite; " +
          fixed(suite("sl-residual").seconds, 1) + " s";
    }
    report(6, "Integrated identity", v, s);
  }
  {
    Verdict v;
    std::string s = "suite error";
    if (auto* r = usable(v, "sl-residual")) {
      auto c = r->find("sl.leaf_bound.violations");
      if (!c || !c->pass() || c->tolerance != 0) v.fail("violations present");
      if (c && c->details.value("draws", 0) < 500) v.fail("fewer than 500 draws");
      double eq = expect_at_most(v, *r, "sl.leaf_bound.equality", 1e-8);
      s = std::to_string(c ? c->details.value("draws", 0) : 0) + " draws, n = 4, violations " +
          std::to_string(c ? static_cast<int>(c->measured) : -1) + "; equality gap " + sci(eq) + " (< 1e-8)";
    }
    report(7, "Curvature endomorphism bound", v, s);
  }
  {
    Verdict v;
    std::string s = "suite error";
    if (auto* r = usable(v, "smooth-polytope")) {
      double F = expect_at_most(v, *r, "polytope.level_set", 1e-10);
      double tn = expect_at_most(v, *r, "polytope.sphere.trace_norm", 1e-10);
      double df = expect_at_most(v, *r, "polytope.sphere.defect", 1e-8);
      expect_at_most(v, *r, "polytope.half_space.on_plane", 1e-12);
      expect_holds(v, *r, "polytope.half_space.exact_values");
      expect_holds(v, *r, "polytope.cube.defect_nonincreasing");
      expect_holds(v, *r, "polytope.cube.normal_deviation_nonincreasing");
      double u = expect_at_most(v, *r, "polytope.max_u_range", 1e-12);
      s = "F residual " + sci(F) + ", sphere trace norm " + sci(tn) + ", defect " + sci(df) +
          ", half-space exact, cube monotone, max_u range violation " + sci(u);
    }
    report(8, "Polytope smoothing", v, s);
  }
  {
    Verdict v;
    std::string s = "suite error";
    if (auto* r = usable(v, "tracenorm")) {
      auto c = r->find("tracenorm.ordering.violations");
      if (!c || !c->pass() || c->tolerance != 0) v.fail("ordering violations present");
      if (c && c->details.value("draws", 0) < 1000) v.fail("fewer than 1000 draws");
      double ex = std::max(expect_at_most(v, *r, "tracenorm.example.tn1", 1e-12),
                           expect_at_most(v, *r, "tracenorm.example.tn2", 1e-12));
      double gap = 0;
      for (int n = 2; n <= 4; ++n) {
        std::string p = "tracenorm.monte_carlo.n" + std::to_string(n);
        for (auto* g : with_prefix(*r, p))
          if (g->id.find(".gap") != std::string::npos) {
            gap = std::max(gap, g->measured);
            if (g->details.value("samples", 0) < 100000) v.fail(g->id + ": fewer than 10^5 samples");
          }
        bool any = false;
        for (auto* g : with_prefix(*r, p)) any = any || g->id.find(".gap") != std::string::npos;
        if (!any) v.fail("no Monte Carlo check for n = " + std::to_string(n));
      }
      expect_at_most(v, *r, "tracenorm.monte_carlo", 0.01);
      s = "1000 draws without violations; example error " + sci(ex) + "; Monte Carlo gap <= " + sci(gap) +
          " (< 1e-2)";
    }
    report(9, "Trace norm comparison", v, s);
  }
  {
    Verdict v;
    fs::path base = fs::temp_directory_path() / "rigidity_lab_acceptance";
    fs::remove_all(base);
    std::size_t files = 0;
    for (const auto& name : suite_names()) {
      int a = run_cli(name, base / "first" / name);
      int b = run_cli(name, base / "second" / name);
      if (a != 0 || b != 0) v.fail(name + ": exit codes " + std::to_string(a) + ", " + std::to_string(b));
      auto s1 = snapshot(base / "first" / name), s2 = snapshot(base / "second" / name);
      if (s1.empty() || s1 != s2) v.fail(name + ": outputs differ between runs");
      if (!s1.count("report.json")) v.fail(name + ": report.json missing");
      files += s1.size();
    }
    report(10, "Determinism", v,
           std::to_string(suite_names().size()) + " suites run twice through the CLI, " + std::to_string(files) +
               " files byte-identical");
  }
  std::cout << (failures ? "ACCEPTANCE FAILED (" + std::to_string(failures) + " criteria)" : "ACCEPTANCE PASSED")
            << "\n";
  return failures ? 1 : 0;
}
