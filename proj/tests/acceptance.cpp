// Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>

#include "diracvar/cli.hpp"
#include "diracvar/scenarios.hpp"
#include "diracvar/sampling.hpp"

using namespace diracvar;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

int failures = 0;

void report(int id, bool pass, const std::string& title, const std::string& detail) {
  std::printf("%s %d %s: %s\n", pass ? "PASS" : "FAIL", id, title.c_str(), detail.c_str());
  std::fflush(stdout);
  if (!pass) ++failures;
}

void info(const std::string& text) {
  std::printf("     info: %s\n", text.c_str());
  std::fflush(stdout);
}

std::string sci(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.3g", v);
  return buf;
}

Scenario with_overrides(const std::string& name, const std::vector<std::pair<std::string, json>>& overrides) {
  json doc = builtin_document(name);
  for (const auto& [k, v] : overrides) apply_override(doc, k, v);
  return load_scenario(doc);
}

double max_of(const std::vector<double>& v) { return *std::max_element(v.begin(), v.end()); }

void criterion_structure_axioms() {
  double iso = 0.0, inv = 0.0, almost = 0.0;
  bool rank_ok = true;
  std::size_t samples = 100;
  for (const auto& name : builtin_names()) {
    const Scenario sc = builtin(name);
    samples = std::min(samples, sc.samples.size());
    const StructureReport r = verify_structure(sc.dirac(), sc.samples, 1e-8, 1e-6);
    rank_ok = rank_ok && r.rank_ok;
    iso = std::max(iso, r.isotropy_max);
    if (sc.expect_involutivity_failure) {
      almost = std::max(almost, r.involutivity_max);
    } else {
      inv = std::max(inv, r.involutivity_max);
    }
  }
  const bool pass = rank_ok && iso < 1e-8 && inv < 1e-6 && almost >= 0.1 && samples == 100;
  report(1, pass, "structure axioms",
         "isotropy max " + sci(iso) + " (< 1e-8), involutivity max " + sci(inv) +
             " (< 1e-6) over all builtins at 100 samples; almost_dirac_rolling involutivity " + sci(almost) +
             " (>= 0.1)");
}

void criterion_omega_d() {
  double hor = 0.0, closed = 0.0, foliation = -1.0;
  std::string skipped;
  for (const auto& name : builtin_names()) {
    const ScenarioCheck c = check_scenario(builtin(name));
    if (!c.report.contains("omega_D")) {
      skipped += name;
      continue;
    }
    const json& o = c.report["omega_D"];
    hor = std::max({hor, o["horizontality_max"].get<double>(), o["d_horizontality_max"].get<double>()});
    closed = std::max(closed, o["closedness_max"].get<double>());
    if (name == "regular_foliation") foliation = o["max_abs"].get<double>();
  }
  const bool pass = hor < 1e-8 && closed < 1e-5 && foliation >= 0.0 && foliation < 1e-12;
  report(2, pass, "omega_D horizontal and closed",
         "horizontality max " + sci(hor) + " (< 1e-8), |d_D omega_D| max " + sci(closed) +
             " (< 1e-5); regular_foliation max |omega_D| " + sci(foliation));
  if (!skipped.empty()) info(skipped + " is almost-Dirac (no Lie algebroid); omega_D checks do not apply");
}

void criterion_primitives() {
  const Scenario x2 = builtin("x2_poisson");
  const auto px2 = check_poisson_primitive(*x2.dirac().poisson(), *x2.poisson_primitive, x2.primitive_samples, 1e-6);
  const auto tx2 = check_primitive(x2.dirac(), *x2.primitive, x2.primitive_samples, 1e-6);

  const Scenario mixed = builtin("mixed_r4");
  const Chart& c = mixed.chart;
  const auto field = [&](const std::vector<std::string>& comps) {
    std::vector<Expression> e;
    for (const auto& s : comps) e.push_back(Expression::parse(s, c.coordinate_names()));
    return e;
  };
  const std::vector<Expression> zero = field({"0", "0", "0", "0"});
  // E = w d_w as stated, and its tau-representation (2E, 0).
  const VectorField E_lit = vector_field_from(c, field({"0", "0", "0", "w"}));
  const CourantSection tau_lit(vector_field_from(c, field({"0", "0", "0", "2*w"})), one_form_from(c, zero));
  const auto pm = check_poisson_primitive(*mixed.dirac().poisson(), E_lit, mixed.primitive_samples, 1e-6);
  const auto tm = check_primitive(mixed.dirac(), tau_lit, mixed.primitive_samples, 1e-6);

  const bool x2_ok = px2.lie_condition && px2.tangency && tx2.horizontal && tx2.d_theta_equals_omega;
  const bool mixed_ok = pm.lie_condition && pm.tangency && tm.horizontal && tm.d_theta_equals_omega;
  report(3, x2_ok && mixed_ok, "primitives",
         "x^2 d_x^d_y with E = x d_x: Lie residual " + sci(px2.max_lie_residual) + ", d_D theta - omega_D " +
             sci(tx2.max_d_theta_residual) + " on " + std::to_string(x2.primitive_samples.size()) +
             " samples incl. x = 0; mixed_r4 with E = w d_w on x = y = 0: Lie residual " +
             sci(pm.max_lie_residual) + ", d_D theta - omega_D " + sci(tm.max_d_theta_residual) + " (tol 1e-6)");

  const auto pneg = check_poisson_primitive(*mixed.dirac().poisson(), *mixed.poisson_primitive,
                                            mixed.primitive_samples, 1e-6);
  const auto tneg = check_primitive(mixed.dirac(), *mixed.primitive, mixed.primitive_samples, 1e-6);
  info("L_{w d_w} pi = -pi on the singular leaf; E = -w d_w gives Lie residual " + sci(pneg.max_lie_residual) +
       ", tangency " + sci(pneg.max_tangency_residual) + ", d_D theta - omega_D " + sci(tneg.max_d_theta_residual));
}

void criterion_theorem1_loop() {
  const Scenario sc = builtin("canonical_oscillator");
  const Theorem1Functional f{sc.dirac(), *sc.primitive, *sc.H, Quadrature::left};
  std::vector<double> residuals;
  for (int N : {100, 200, 400}) {
    IntegratorConfig cfg = sc.integrator;
    cfg.h = sc.T / N;
    const Trajectory tr = integrate_dirac_hamiltonian(sc.dirac(), *sc.H, sc.x0, sc.T, cfg);
    residuals.push_back(stationarity_residual(DiscretePath{tr.times, tr.states, {}, f}));
  }
  const double o1 = std::log2(residuals[0] / residuals[1]);
  const double o2 = std::log2(residuals[1] / residuals[2]);

  const DvpSpec& spec = *sc.dvp;
  const DiscretePath path = dvp_solve(
      make_path(Theorem1Functional{sc.dirac(), *sc.primitive, *sc.H, spec.quadrature}, spec.start, spec.end, spec.T,
                spec.N),
      sc.integrator);
  double err = 0.0;
  for (int k = 0; k < path.node_count(); ++k)
    err = std::max(err, (path.nodes[k] - *sc.analytic_state(path.times[k])).norm());
  const bool pass = std::min(o1, o2) >= 0.8 && err < 1e-3 && spec.N == 200;
  report(4, pass, "theorem-1 loop",
         "stationarity of the rk4 trajectory " + sci(residuals[0]) + " -> " + sci(residuals[1]) + " -> " +
             sci(residuals[2]) + " (orders " + sci(o1) + ", " + sci(o2) + "; >= 0.8); dvp arc (1,0) -> (0,-1), N = " +
             std::to_string(spec.N) + " " + to_string(spec.quadrature) + " rule: max error " + sci(err) +
             " (< 1e-3), stationarity " + sci(path.stationarity));
}

void criterion_ils_loop() {
  const Scenario base = builtin("magnetic_larmor");
  std::vector<double> residuals;
  for (double h : {0.02, 0.01, 0.005}) {
    const Scenario sc = with_overrides("magnetic_larmor", {{"h", h}});
    const VariationalRun run = integrate_variational(*sc.L, sc.theta, std::nullopt, sc.x0, sc.qdot0, sc.T, sc.integrator);
    residuals.push_back(max_of(ils_residual(*base.lifted, *base.L, run.trajectory.times, run.positions)));
  }
  const double o1 = std::log2(residuals[0] / residuals[1]);
  const double o2 = std::log2(residuals[1] / residuals[2]);

  // Negative control: the orbit for field strength 2 tested against B = 1.
  const Scenario wrong = with_overrides("magnetic_larmor", {{"parameters.B", 2.0}, {"h", 0.01}});
  const VariationalRun run =
      integrate_variational(*wrong.L, wrong.theta, std::nullopt, wrong.x0, wrong.qdot0, wrong.T, wrong.integrator);
  const double control = max_of(ils_residual(*base.lifted, *base.L, run.trajectory.times, run.positions));
  const bool pass = std::abs(o1 - 2.0) <= 0.3 && std::abs(o2 - 2.0) <= 0.3 && control > 1e-2;
  report(5, pass, "implicit-Lagrangian loop",
         "Larmor stepper ils residual " + sci(residuals[0]) + " -> " + sci(residuals[1]) + " -> " + sci(residuals[2]) +
             " (orders " + sci(o1) + ", " + sci(o2) + "; 2.0 +- 0.3); B = 2 orbit against B = 1: " + sci(control) +
             " (> 1e-2)");
}

Vec legendre_gradient(const Lagrangian& L, const Vec& q, const Vec& p) {
  const int n = L.dim();
  Vec z(2 * n);
  z << q, p;
  Vec out(2 * n);
  const double eps = 1e-5;
  for (int i = 0; i < 2 * n; ++i) {
    Vec zp = z, zm = z;
    zp(i) += eps;
    zm(i) -= eps;
    out(i) = (legendre_transform(L, zp.head(n), zp.tail(n)).H_value -
              legendre_transform(L, zm.head(n), zm.tail(n)).H_value) /
             (2 * eps);
  }
  return out;
}

void criterion_beta_legendre() {
  const Chart Q(2, {"x", "y"});
  const Chart TQ = tangent_chart(Q);
  std::mt19937 rng(6);
  std::uniform_real_distribution<double> u(-1.5, 1.5);
  std::string detail;
  bool pass = true;
  for (const auto& [label, text] : std::vector<std::pair<std::string, std::string>>{
           {"quadratic", "0.5*(v_x^2 + v_y^2)"}, {"oscillator", "0.5*(v_x^2 + v_y^2) - 0.5*(x^2 + y^2)"}}) {
    const Lagrangian L(Q, scalar_field_from(TQ, Expression::parse(text, TQ.coordinate_names())));
    double worst = 0.0;
    for (int i = 0; i < 100; ++i) {
      const Vec q = (Vec(2) << u(rng), u(rng)).finished();
      const Vec v = (Vec(2) << u(rng), u(rng)).finished();
      const CotangentCovector b = tulczyjew_beta(L, q, v);
      worst = std::max(worst, (b.components() - legendre_gradient(L, b.q, b.p)).norm());
    }
    pass = pass && worst < 1e-5;
    detail += (detail.empty() ? "" : ", ") + label + " " + sci(worst);
  }
  report(6, pass, "beta(dL) = dH o FL", "max |beta(dL) - dH o FL| over 100 random samples: " + detail + " (< 1e-5)");
}

void criterion_conservation() {
  const auto drift = [](double h) {
    const Scenario sc = with_overrides("lie_poisson_so3", {{"h", h}});
    const Trajectory tr =
        integrate_dirac_hamiltonian(sc.dirac(), *sc.H, sc.x0, sc.T, sc.integrator, sc.casimir_fields);
    double d = 0.0;
    for (const auto& g : tr.diagnostics)
      d = std::max(d, std::abs(g.casimir_values[0] - tr.diagnostics[0].casimir_values[0]));
    return d;
  };
  const double d1 = drift(0.025), d2 = drift(0.0125);
  const double ratio = d1 / d2;

  const Scenario mixed = builtin("mixed_r4");
  const Trajectory tr = integrate_dirac_hamiltonian(mixed.dirac(), *mixed.H, mixed.x0, mixed.T, mixed.integrator);
  double leaf = 0.0;
  for (const Vec& x : tr.states) leaf = std::max({leaf, std::abs(x(0)), std::abs(x(1))});

  const Scenario pend = builtin("holonomic_pendulum");
  const VariationalRun run =
      integrate_variational(*pend.L, pend.theta, pend.constraint, pend.x0, pend.qdot0, pend.T, pend.integrator);

  const bool pass = ratio >= 12.0 && ratio <= 20.0 && leaf < 1e-10 && run.max_constraint_drift <= 1e-9;
  report(7, pass, "conservation and leaf preservation",
         "so3 Casimir drift " + sci(d1) + " (h = 0.025) / " + sci(d2) + " (h = 0.0125) = " + sci(ratio) +
             " (in [12, 20]); mixed_r4 max(|x|,|y|) " + sci(leaf) + " (< 1e-10); pendulum max |g(q_n) - g(q_0)| " +
             sci(run.max_constraint_drift) + " (<= 1e-9)");
}

void criterion_analytic_endpoints() {
  const Scenario x2 = builtin("x2_poisson");
  const Trajectory tr = integrate_dirac_hamiltonian(x2.dirac(), *x2.H, x2.x0, x2.T, x2.integrator);
  const double endpoint = std::abs(tr.states.back()(0) - 1.0 / (1.0 - tr.times.back()));

  const Scenario larmor = builtin("magnetic_larmor");
  const VariationalRun run = integrate_variational(*larmor.L, larmor.theta, std::nullopt, larmor.x0, larmor.qdot0,
                                                   larmor.T, larmor.integrator);
  double orbit = 0.0;
  for (std::size_t k = 0; k < run.positions.size(); ++k) {
    const double t = run.trajectory.times[k];
    orbit = std::max(orbit, (run.positions[k] - (Vec(2) << std::cos(t), -std::sin(t)).finished()).norm());
  }
  const bool pass = endpoint < 1e-5 && orbit < 1e-3 && larmor.integrator.h == 1e-3;
  report(8, pass, "analytic endpoints",
         "x2_poisson |x(0.5) - 1/(1 - 0.5)| " + sci(endpoint) + " (< 1e-5); Larmor max distance to the circle over " +
             "one period at h = 1e-3: " + sci(orbit) + " (< 1e-3)");
}

void criterion_oracles() {
  // Gauge transform of a graph is the graph of the sum.
  double gauge = 0.0;
  {
    const Chart plane(2, {"x", "y"});
    const Chart space(3, {"x", "y", "z"});
    struct Case {
      const Chart* chart;
      std::vector<std::tuple<int, int, std::string>> w1, w2, sum;
    };
    const std::vector<Case> cases{
        {&plane, {{0, 1, "1 + x^2 + y^2"}}, {{0, 1, "0.7*sin(x*y)"}}, {{0, 1, "1 + x^2 + y^2 + 0.7*sin(x*y)"}}},
        {&space,
         {{0, 1, "1"}, {0, 2, "z"}},
         {{0, 1, "x"}, {1, 2, "cos(y*z)"}},
         {{0, 1, "1 + x"}, {0, 2, "z"}, {1, 2, "cos(y*z)"}}}};
    for (const Case& cs : cases) {
      const auto skew = [&](const std::vector<std::tuple<int, int, std::string>>& entries) {
        std::vector<SkewEntry> out;
        for (const auto& [i, j, s] : entries)
          out.push_back({i, j, Expression::parse(s, cs.chart->coordinate_names())});
        return skew_field_from(*cs.chart, Variance::covariant, out);
      };
      const DiracStructure G = gauge_transform(build_dirac_form(skew(cs.w1)), skew(cs.w2));
      const DiracStructure S = build_dirac_form(skew(cs.sum));
      for (const Vec& x : halton_samples(Box::cube(cs.chart->dim(), 1.5), 100))
        gauge = std::max(gauge, subspace_distance(point_frame(G, x), point_frame(S, x)));
    }
  }
  // Cotangent lift of the trivial structure is the graph of the canonical form.
  double lift = 0.0;
  for (int n : {1, 2, 3}) {
    const Chart Q(n);
    const Chart TQ = cotangent_chart(Q);
    std::vector<SkewEntry> zero, omega;
    for (int i = 0; i < n; ++i) omega.push_back({i, n + i, Expression::constant(1.0, 2 * n)});
    const DiracStructure L = cotangent_lift(build_dirac_form(skew_field_from(Q, Variance::covariant, zero)), true);
    const DiracStructure G = build_dirac_form(skew_field_from(TQ, Variance::covariant, omega));
    for (const Vec& x : halton_samples(Box::cube(2 * n, 1.5), 100))
      lift = std::max(lift, subspace_distance(point_frame(L, x), point_frame(G, x)));
  }
  // Central differences against forward-mode duals on every builtin.
  double backend = 0.0;
  const DiffBackend dual = DiffBackend::forward_dual(), central = DiffBackend::central();
  for (const auto& name : builtin_names()) {
    const Scenario sc = builtin(name);
    const DiracStructure& D = sc.dirac();
    const int n = D.dim();
    for (const Vec& x : sc.samples) {
      for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) {
          const CourantValue a = courant_bracket(D.section(i), D.section(j), x, dual);
          const CourantValue b = courant_bracket(D.section(i), D.section(j), x, central);
          backend = std::max({backend, (a.v - b.v).cwiseAbs().maxCoeff(), (a.a - b.a).cwiseAbs().maxCoeff()});
        }
      if (sc.H) backend = std::max(backend, (gradient(*sc.H, x, dual) - gradient(*sc.H, x, central)).cwiseAbs().maxCoeff());
    }
  }
  const bool pass = gauge < 1e-8 && lift < 1e-8 && backend < 1e-6;
  report(9, pass, "oracle cross-checks",
         "gauge-of-graph subspace distance " + sci(gauge) + ", lift of trivial vs canonical graph " + sci(lift) +
             " (< 1e-8); central vs forward-dual Courant brackets and dH " + sci(backend) + " (< 1e-6), 100 samples");
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

void criterion_determinism() {
  const fs::path root = fs::temp_directory_path() / "diracvar_acceptance";
  fs::remove_all(root);
  bool pass = true;
  std::string detail;
  for (const std::string name : {"canonical_oscillator", "lie_poisson_so3", "magnetic_larmor"}) {
    std::ostringstream out, err;
    const fs::path a = root / (name + "_a"), b = root / (name + "_b");
    const int ca = cli_main({"run", name, "--seed", "11", "--no-order", "--out", a.string()}, out, err);
    const int cb = cli_main({"run", name, "--seed", "11", "--no-order", "--out", b.string()}, out, err);
    const std::string sa = slurp(a / "trajectory.csv"), sb = slurp(b / "trajectory.csv");
    const bool same = ca == 0 && cb == 0 && !sa.empty() && sa == sb;
    pass = pass && same;
    detail += (detail.empty() ? "" : ", ") + name + (same ? " identical (" + std::to_string(sa.size()) + " bytes)"
                                                          : " differs");
  }
  fs::remove_all(root);
  report(10, pass, "determinism", "repeated CLI runs with --seed 11: " + detail);
}

}  // namespace

int main() {
  const std::vector<void (*)()> criteria{criterion_structure_axioms, criterion_omega_d,        criterion_primitives,
                                         criterion_theorem1_loop,    criterion_ils_loop,       criterion_beta_legendre,
                                         criterion_conservation,     criterion_analytic_endpoints, criterion_oracles,
                                         criterion_determinism};
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    try {
      criteria[i]();
    } catch (const std::exception& e) {
      report(static_cast<int>(i + 1), false, "error", e.what());
    }
  }
  std::printf("%d of %zu criteria failed\n", failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
