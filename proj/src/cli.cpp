#include "diracvar/cli.hpp"

#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <future>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"

#include "diracvar/scenarios.hpp"

namespace diracvar {

using nlohmann::json;
namespace fs = std::filesystem;

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

json resolve_document(const std::string& source) {
  if (!fs::is_regular_file(source)) return builtin_document(source);
  std::ifstream in(source);
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError(source + ": " + e.what());
  }
  if (!doc.is_object()) throw ConfigError(source + ": expected a JSON object");
  if (doc.contains("scenario") && !doc.contains("coordinates")) {
    json base = builtin_document(doc.at("scenario").get<std::string>());
    if (doc.contains("overrides"))
      for (const auto& [k, v] : doc.at("overrides").items()) apply_override(base, k, v);
    return base;
  }
  return doc;
}

std::pair<std::string, json> parse_override(const std::string& text) {
  const auto eq = text.find('=');
  if (eq == std::string::npos || eq == 0) throw ConfigError("override '" + text + "' is not of the form key=value");
  const std::string key = text.substr(0, eq);
  const std::string raw = text.substr(eq + 1);
  json value = json::parse(raw, nullptr, false);
  if (value.is_discarded()) value = raw;
  return {key, value};
}

namespace {

json convention_fingerprint() {
  return {{"pairing", "<(X,a),(Y,b)> = a(Y) + b(X)"},
          {"bracket", "skew Courant: ([X,Y], L_X b - L_Y a - 1/2 d(b(X) - a(Y)))"},
          {"omega_D", "omega_D((X,a),(Y,b)) = a(Y) - b(X)"},
          {"two_form", "iota_v omega = omega^T v"},
          {"bivector", "pi_sharp(a) = pi a"},
          {"canonical_form", "[[0, I], [-I, 0]]"},
          {"tulczyjew", "beta(dL) = (-dL/dq, v)"}};
}

struct Options {
  std::string source;
  std::string out_dir = "diracvar_out";
  unsigned seed = 0;
  std::vector<std::string> overrides;
  bool order = true;
};

json load_document(const Options& o) {
  json doc = resolve_document(o.source);
  for (const auto& text : o.overrides) {
    const auto [k, v] = parse_override(text);
    apply_override(doc, k, v);
  }
  return doc;
}

LoadOptions load_options(const Options& o, bool verify = true) {
  LoadOptions lo;
  lo.seed = o.seed;
  lo.verify = verify;
  return lo;
}

void write_file(const fs::path& path, const std::string& content) {
  fs::create_directories(path.parent_path());
  std::ofstream f(path, std::ios::binary);
  if (!f) throw ConfigError("cannot write " + path.string());
  f << content;
}

std::string csv_row(const std::vector<std::string>& cells) {
  std::string line;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i) line += ',';
    line += cells[i];
  }
  return line + '\n';
}

int legendre_kernel_dim(const Lagrangian& L, const Vec& q, const Vec& v) {
  const int n = L.dim();
  Mat J(n, n);
  const double eps = 1e-6;
  for (int j = 0; j < n; ++j) {
    Vec vp = v, vm = v;
    vp(j) += eps;
    vm(j) -= eps;
    J.col(j) = (fiber_derivative(L, q, vp) - fiber_derivative(L, q, vm)) / (2 * eps);
  }
  Eigen::JacobiSVD<Mat> svd(J);
  const double smax = svd.singularValues().size() ? svd.singularValues()(0) : 0.0;
  int rank = 0;
  for (int i = 0; i < svd.singularValues().size(); ++i)
    if (svd.singularValues()(i) > 1e-6 * std::max(1.0, smax)) ++rank;
  return n - rank;
}

/// Final state of a run (positions only for Lagrangian scenarios).
struct RunOutcome {
  Trajectory trajectory;
  std::vector<Vec> positions;
  std::optional<VariationalRun> variational;
};

RunOutcome simulate(const Scenario& sc) {
  RunOutcome o;
  if (sc.dynamics == DynamicsKind::hamiltonian) {
    o.trajectory = integrate_dirac_hamiltonian(sc.dirac(), *sc.H, sc.x0, sc.T, sc.integrator, sc.casimir_fields);
    o.positions = o.trajectory.states;
  } else {
    VariationalRun run = integrate_variational(*sc.L, sc.theta, sc.constraint, sc.x0, sc.qdot0, sc.T, sc.integrator);
    o.trajectory = run.trajectory;
    o.positions = run.positions;
    o.variational = std::move(run);
  }
  return o;
}

double analytic_error(const Scenario& sc, const std::vector<double>& times, const std::vector<Vec>& positions) {
  double worst = 0.0;
  for (std::size_t k = 0; k < times.size(); ++k)
    worst = std::max(worst, (positions[k] - *sc.analytic_state(times[k])).norm());
  return worst;
}

/// Observed order from runs at h/2 (and h/4 without an analytic solution).
json order_estimate(const json& doc, const Options& o, const Scenario& sc, const RunOutcome& base) {
  if (!sc.integrator.steps.empty()) return {{"skipped", "explicit step list"}};
  const auto rerun = [&](double factor) {
    json d = doc;
    apply_override(d, "h", sc.integrator.h * factor);
    const Scenario s = load_scenario(d, load_options(o));
    return simulate(s).positions.back();
  };
  const bool analytic = !sc.analytic.empty();
  auto half = std::async(std::launch::async, rerun, 0.5);
  std::future<Vec> quarter;
  if (!analytic) quarter = std::async(std::launch::async, rerun, 0.25);
  const Vec x1 = base.positions.back();
  const Vec x2 = half.get();
  if (analytic) {
    const Vec exact = *sc.analytic_state(sc.T);
    const double e1 = (x1 - exact).norm(), e2 = (x2 - exact).norm();
    return {{"method", "analytic"}, {"error_h", e1}, {"error_h_over_2", e2}, {"order", std::log2(e1 / e2)},
            {"resolved", e2 > 1e-12}};
  }
  const Vec x4 = quarter.get();
  const double d1 = (x1 - x2).norm(), d2 = (x2 - x4).norm();
  return {{"method", "richardson"}, {"difference_h", d1}, {"difference_h_over_2", d2}, {"order", std::log2(d1 / d2)},
          {"resolved", d2 > 1e-12}};
}

int cmd_list(std::ostream& out) {
  for (const auto& name : builtin_names())
    out << name << "  " << builtin_document(name).value("description", std::string()) << '\n';
  return exit_code::ok;
}

int cmd_show(const Options& o, std::ostream& out) {
  out << load_document(o).dump(2) << '\n';
  return exit_code::ok;
}

int cmd_check(const Options& o, std::ostream& out) {
  const json doc = load_document(o);
  const Scenario sc = load_scenario(doc, load_options(o, false));
  ScenarioCheck check = check_scenario(sc);
  check.report["seed"] = o.seed;
  check.report["conventions"] = convention_fingerprint();
  write_file(fs::path(o.out_dir) / "structure_report.json", check.report.dump(2) + "\n");
  const json& r = check.report;
  const auto line = [&](const std::string& label, const json& section, const char* key) {
    out << (section.at("pass").get<bool>() ? "PASS " : "FAIL ") << label << ' ' << key << '='
        << format_double(section.at(key).get<double>()) << '\n';
  };
  line("structure", r.at("structure"), "isotropy_max");
  line("structure", r.at("structure"), "involutivity_max");
  if (r.contains("jacobi")) line("jacobi", r.at("jacobi"), "max_residual");
  if (r.contains("closedness")) line("closedness", r.at("closedness"), "max_residual");
  if (r.contains("omega_D")) {
    line("omega_D", r.at("omega_D"), "horizontality_max");
    line("omega_D", r.at("omega_D"), "closedness_max");
  }
  if (r.contains("primitive")) line("primitive", r.at("primitive"), "d_theta_residual_max");
  if (r.contains("poisson_primitive")) line("poisson_primitive", r.at("poisson_primitive"), "lie_residual_max");
  for (const auto& c : r.at("casimirs")) line("casimir " + c.at("casimir").get<std::string>(), c, "max_hamiltonian_vector");
  out << (check.passed ? "PASS " : "FAIL ") << sc.name << '\n';
  return check.passed ? exit_code::ok : exit_code::check_failed;
}

int cmd_run(const Options& o, std::ostream& out) {
  const json doc = load_document(o);
  const Scenario sc = load_scenario(doc, load_options(o));
  const RunOutcome run = simulate(sc);
  const Trajectory& tr = run.trajectory;
  const auto& names = sc.chart.coordinate_names();
  const bool lagrangian = sc.dynamics == DynamicsKind::lagrangian;

  std::vector<std::string> header{"t"};
  for (const auto& n : names) header.push_back(n);
  if (lagrangian)
    for (const auto& n : names) header.push_back("p_" + n);
  header.push_back("H");
  for (std::size_t i = 0; i < sc.casimir_fields.size(); ++i) header.push_back("C" + std::to_string(i));
  header.push_back("membership_residual");
  header.push_back("kernel_dim");

  std::vector<Vec> velocities;
  if (lagrangian) velocities = time_derivative(tr.times, run.positions);

  std::string csv = csv_row(header);
  double H_drift = 0.0, membership = 0.0;
  std::vector<double> casimir_drift(sc.casimir_fields.size(), 0.0);
  int max_kernel = 0;
  for (std::size_t k = 0; k < tr.states.size(); ++k) {
    const StepDiagnostics& d = tr.diagnostics[k];
    std::vector<std::string> row{format_double(tr.times[k])};
    for (int i = 0; i < tr.states[k].size(); ++i) row.push_back(format_double(tr.states[k](i)));
    row.push_back(format_double(d.H_value));
    for (std::size_t i = 0; i < d.casimir_values.size(); ++i) {
      row.push_back(format_double(d.casimir_values[i]));
      casimir_drift[i] = std::max(casimir_drift[i], std::abs(d.casimir_values[i] - tr.diagnostics[0].casimir_values[i]));
    }
    const int kernel = lagrangian ? legendre_kernel_dim(*sc.L, run.positions[k], velocities[k]) : d.kernel_dim;
    row.push_back(format_double(d.membership_residual));
    row.push_back(std::to_string(kernel));
    csv += csv_row(row);
    H_drift = std::max(H_drift, std::abs(d.H_value - tr.diagnostics[0].H_value));
    membership = std::max(membership, d.membership_residual);
    max_kernel = std::max(max_kernel, kernel);
  }

  json diag;
  diag["scenario"] = sc.name;
  diag["dynamics"] = lagrangian ? "lagrangian" : "hamiltonian";
  diag["method"] = lagrangian ? std::string("variational_") + to_string(sc.integrator.quadrature)
                              : std::string(to_string(sc.integrator.method));
  diag["h"] = sc.integrator.h;
  diag["T"] = sc.T;
  diag["steps"] = tr.times.size() - 1;
  diag["seed"] = o.seed;
  diag["newton_iterations"] = tr.newton_iterations;
  diag["energy_drift"] = H_drift;
  diag["membership_residual_max"] = membership;
  diag["max_kernel_dim"] = max_kernel;
  json cas = json::array();
  for (std::size_t i = 0; i < casimir_drift.size(); ++i)
    cas.push_back({{"name", "C" + std::to_string(i)}, {"expression", sc.casimir_names[i]}, {"drift", casimir_drift[i]}});
  diag["casimirs"] = cas;
  if (!sc.analytic.empty()) diag["analytic_error"] = analytic_error(sc, tr.times, run.positions);
  if (run.variational) {
    diag["del_residual_max"] = membership;
    if (sc.constraint) diag["constraint_drift"] = run.variational->max_constraint_drift;
    if (sc.lifted) {
      const auto ils = ils_residual(*sc.lifted, *sc.L, tr.times, run.positions);
      diag["ils_residual_max"] = *std::max_element(ils.begin(), ils.end());
    }
  }
  if (o.order) diag["order"] = order_estimate(doc, o, sc, run);
  diag["conventions"] = convention_fingerprint();

  write_file(fs::path(o.out_dir) / "trajectory.csv", csv);
  write_file(fs::path(o.out_dir) / "diagnostics.json", diag.dump(2) + "\n");
  out << sc.name << ": " << (tr.times.size() - 1) << " steps to T=" << format_double(sc.T)
      << ", energy drift " << format_double(H_drift);
  for (std::size_t i = 0; i < casimir_drift.size(); ++i)
    out << ", C" << i << " drift " << format_double(casimir_drift[i]);
  if (diag.contains("analytic_error")) out << ", analytic error " << format_double(diag["analytic_error"].get<double>());
  out << '\n';
  return exit_code::ok;
}

int cmd_dvp(const Options& o, std::ostream& out) {
  const json doc = load_document(o);
  const Scenario sc = load_scenario(doc, load_options(o));
  if (!sc.dvp) throw ConfigError(sc.name + ": no 'dvp' section");
  const DvpSpec& spec = *sc.dvp;
  const auto functional = [&]() -> DiscreteFunctional {
    if (spec.functional == "ils") return IlsFunctional{*sc.L, sc.theta, sc.constraint, spec.quadrature};
    const int n = sc.chart.dim();
    std::vector<Expression> zero(n, Expression::constant(0.0, n));
    const CourantSection tau =
        sc.primitive ? *sc.primitive
                     : CourantSection(vector_field_from(sc.chart, zero), one_form_from(sc.chart, zero));
    return Theorem1Functional{sc.dirac(), tau, spec.H ? *spec.H : *sc.H, spec.quadrature};
  }();
  const DiscretePath path = dvp_solve(make_path(functional, spec.start, spec.end, spec.T, spec.N), sc.integrator);

  const auto& names = sc.chart.coordinate_names();
  std::vector<std::string> header{"t"};
  for (const auto& n : names) header.push_back(n);
  const std::size_t m = path.multipliers.empty() ? 0 : static_cast<std::size_t>(path.multipliers.front().size());
  for (std::size_t i = 0; i < m; ++i) header.push_back("lambda" + std::to_string(i));
  std::string csv = csv_row(header);
  for (int k = 0; k < path.node_count(); ++k) {
    std::vector<std::string> row{format_double(path.times[k])};
    for (int i = 0; i < path.nodes[k].size(); ++i) row.push_back(format_double(path.nodes[k](i)));
    for (std::size_t i = 0; i < m; ++i) {
      const bool has = static_cast<std::size_t>(k) < path.multipliers.size();
      row.push_back(has ? format_double(path.multipliers[k](static_cast<int>(i))) : "");
    }
    csv += csv_row(row);
  }

  json diag;
  diag["scenario"] = sc.name;
  diag["functional"] = spec.functional;
  diag["quadrature"] = to_string(spec.quadrature);
  diag["N"] = spec.N;
  diag["T"] = spec.T;
  diag["seed"] = o.seed;
  diag["newton_iterations"] = path.newton_iterations;
  diag["continuation_levels"] = path.continuation_levels;
  diag["stationarity"] = path.stationarity;
  if (!sc.analytic.empty()) {
    const Vec a0 = *sc.analytic_state(0.0), a1 = *sc.analytic_state(spec.T);
    if ((a0 - spec.start).norm() < 1e-9 && (a1 - spec.end).norm() < 1e-9)
      diag["analytic_error"] = analytic_error(sc, path.times, path.nodes);
  }
  if (spec.functional == "ils" && sc.lifted) {
    const auto ils = ils_residual(*sc.lifted, *sc.L, path.times, path.nodes);
    diag["ils_residual_max"] = *std::max_element(ils.begin(), ils.end());
  }
  diag["conventions"] = convention_fingerprint();
  write_file(fs::path(o.out_dir) / "path.csv", csv);
  write_file(fs::path(o.out_dir) / "diagnostics.json", diag.dump(2) + "\n");
  out << sc.name << ": " << spec.functional << " path with " << spec.N << " steps, stationarity "
      << format_double(path.stationarity);
  if (diag.contains("analytic_error")) out << ", analytic error " << format_double(diag["analytic_error"].get<double>());
  out << '\n';
  return exit_code::ok;
}

}  // namespace

int cli_main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Dirac structures, Hamiltonian and Lagrangian dynamics, discrete variational paths"};
  app.name("diracvar");
  app.require_subcommand(1);
  Options o;

  const auto add_common = [&o](CLI::App* sub, bool outputs) {
    sub->add_option("scenario", o.source, "Builtin name or scenario JSON file")->required();
    sub->add_option("--override", o.overrides, "key=value (value parsed as JSON, else a string)");
    sub->add_option("--seed", o.seed, "Offset of the structural sample sequence");
    if (outputs) sub->add_option("--out", o.out_dir, "Output directory");
  };
  CLI::App* list = app.add_subcommand("list", "List builtin scenarios");
  CLI::App* show = app.add_subcommand("show", "Print a scenario document after overrides");
  add_common(show, false);
  CLI::App* check = app.add_subcommand("check", "Verify structure identities, omega_D, primitives and Casimirs");
  add_common(check, true);
  CLI::App* run = app.add_subcommand("run", "Integrate the scenario dynamics");
  add_common(run, true);
  run->add_flag("!--no-order", o.order, "Skip the h/2 order estimate");
  CLI::App* dvp = app.add_subcommand("dvp", "Solve the discrete variational boundary problem");
  add_common(dvp, true);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? exit_code::ok : exit_code::config;
  }

  try {
    if (list->parsed()) return cmd_list(out);
    if (show->parsed()) return cmd_show(o, out);
    if (check->parsed()) return cmd_check(o, out);
    if (run->parsed()) return cmd_run(o, out);
    if (dvp->parsed()) return cmd_dvp(o, out);
  } catch (const ConfigError& e) {
    err << "configuration error: " << e.what() << '\n';
    return exit_code::config;
  } catch (const ConstructionError& e) {
    err << "structure check failed: " << e.what() << '\n';
    return exit_code::check_failed;
  } catch (const DomainError& e) {
    err << "domain error: " << e.what() << '\n';
    return exit_code::domain;
  } catch (const ChartMismatch& e) {
    err << "chart mismatch: " << e.what() << '\n';
    return exit_code::domain;
  } catch (const AttainabilityError& e) {
    err << "not attainable: " << e.what() << '\n';
    return exit_code::domain;
  } catch (const LeafMismatchError& e) {
    err << "leaf mismatch: " << e.what() << '\n';
    return exit_code::domain;
  } catch (const ConvergenceError& e) {
    err << "diverged: " << e.what() << '\n';
    return exit_code::divergence;
  } catch (const NumericalError& e) {
    err << "diverged: " << e.what() << '\n';
    return exit_code::divergence;
  } catch (const std::invalid_argument& e) {
    err << "configuration error: " << e.what() << '\n';
    return exit_code::config;
  } catch (const fs::filesystem_error& e) {
    err << "io error: " << e.what() << '\n';
    return exit_code::config;
  }
  return exit_code::config;
}

int cli_main(int argc, char** argv) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return cli_main(args, std::cout, std::cerr);
}

}  // namespace diracvar
