#include "diracvar/scenarios.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "diracvar/algebroid.hpp"
#include "diracvar/sampling.hpp"

namespace diracvar {

using nlohmann::json;

namespace {

const char* const kCatalog = R"json([
{
  "name": "canonical_oscillator",
  "description": "Graph of the symplectic form dx^dy on the plane with the harmonic oscillator Hamiltonian.",
  "coordinates": ["x", "y"],
  "structure": {"kind": "form", "entries": [["x", "y", "1"]]},
  "dynamics": {"type": "hamiltonian", "H": "0.5*(x^2 + y^2)"},
  "initial": {"x0": [1, 0], "T": "2*pi"},
  "integrator": {"h": 1e-3, "method": "explicit_rk4"},
  "primitive": {"tau": {"X": ["0", "0"], "alpha": ["0", "2*x"]}},
  "analytic": {"state": ["x0_x*cos(t) + x0_y*sin(t)", "-x0_x*sin(t) + x0_y*cos(t)"]},
  "dvp": {"functional": "theorem1", "start": [1, 0], "end": [0, -1], "T": "pi/2", "N": 200, "quadrature": "midpoint"}
},
{
  "name": "x2_poisson",
  "description": "Poisson structure x^2 d_x^d_y, singular along x = 0, with primitive E = x d_x.",
  "coordinates": ["x", "y"],
  "structure": {"kind": "poisson", "entries": [["x", "y", "x^2"]]},
  "dynamics": {"type": "hamiltonian", "H": "y"},
  "initial": {"x0": [1, 0], "T": 0.5},
  "integrator": {"h": 1e-3, "method": "explicit_rk4"},
  "primitive": {"E": ["x", "0"], "tau": {"X": ["2*x", "0"], "alpha": ["0", "0"]},
                "extra_samples": [[0, 0.5], [0, -1.2], [0, 0], [0, 1.4]]},
  "analytic": {"state": ["x0_x/(1 - x0_x*t)", "x0_y"]},
  "dvp": {"functional": "theorem1", "start": [1, 0], "end": [2, 0], "T": 0.5, "N": 100, "quadrature": "midpoint"}
},
{
  "name": "mixed_r4",
  "description": "Poisson structure (x^2+y^2) d_x^d_y + d_z^d_w on R^4; the plane x = y = 0 is a singular leaf.",
  "coordinates": ["x", "y", "z", "w"],
  "structure": {"kind": "poisson", "entries": [["x", "y", "x^2 + y^2"], ["z", "w", "1"]]},
  "dynamics": {"type": "hamiltonian", "H": "0.5*(x^2 + y^2 + z^2 + w^2)"},
  "initial": {"x0": [0, 0, 1, 0], "T": "2*pi"},
  "integrator": {"h": 1e-3, "method": "explicit_rk4"},
  "primitive": {"E": ["0", "0", "0", "-w"], "tau": {"X": ["0", "0", "0", "-2*w"], "alpha": ["0", "0", "0", "0"]},
                "on": {"x": 0, "y": 0}},
  "analytic": {"state": ["0", "0", "x0_z*cos(t) + x0_w*sin(t)", "-x0_z*sin(t) + x0_w*cos(t)"]},
  "dvp": {"functional": "theorem1", "start": [0, 0, 1, 0], "end": [0, 0, 0, -1], "T": "pi/2", "N": 100,
          "quadrature": "midpoint"}
},
{
  "name": "lie_poisson_so3",
  "description": "Lie-Poisson structure on so(3)* (rigid body) with pi^ij = -eps_ijk m_k, so that m' = m x grad H.",
  "coordinates": ["m1", "m2", "m3"],
  "parameters": {"I1": 1, "I2": 2, "I3": 3},
  "structure": {"kind": "poisson", "entries": [["m1", "m2", "-m3"], ["m2", "m3", "-m1"], ["m3", "m1", "-m2"]]},
  "dynamics": {"type": "hamiltonian", "H": "0.5*(m1^2/I1 + m2^2/I2 + m3^2/I3)"},
  "initial": {"x0": [1, 0.5, 0.3], "T": 10},
  "integrator": {"h": 0.025, "method": "explicit_rk4"},
  "casimirs": ["m1^2 + m2^2 + m3^2"]
},
{
  "name": "magnetic_larmor",
  "description": "Charged particle in a uniform magnetic field B on the plane, theta = B/2 (x dy - y dx).",
  "coordinates": ["x", "y"],
  "parameters": {"B": 1},
  "structure": {"kind": "lift", "base": {"kind": "form", "entries": [["x", "y", "-B"]]}, "gauge": true},
  "dynamics": {"type": "lagrangian", "L": "0.5*(v_x^2 + v_y^2)", "theta": ["-0.5*B*y", "0.5*B*x"]},
  "initial": {"q0": [1, 0], "qdot0": [0, -1], "T": "2*pi"},
  "integrator": {"h": 1e-3, "quadrature": "left"},
  "analytic": {"state": ["q0_x + (qdot0_x*sin(B*t) + qdot0_y*(1 - cos(B*t)))/B",
                         "q0_y + (qdot0_x*(cos(B*t) - 1) + qdot0_y*sin(B*t))/B"]},
  "dvp": {"functional": "ils", "start": [1, 0], "end": [0, -1], "T": "pi/2", "N": 200, "quadrature": "left"}
},
{
  "name": "holonomic_pendulum",
  "description": "Planar pendulum as a particle constrained to the unit circle, the leaves of g = (|q|^2 - 1)/2.",
  "coordinates": ["x", "y"],
  "domain_positive": ["x^2 + y^2"],
  "parameters": {"g": 9.81, "theta0": 0.05},
  "structure": {"kind": "foliation", "submersion": ["0.5*(x^2 + y^2 - 1)"], "fields": [["-y", "x"]]},
  "dynamics": {"type": "lagrangian", "L": "0.5*(v_x^2 + v_y^2) - g*y", "constraint": ["0.5*(x^2 + y^2 - 1)"]},
  "initial": {"q0": ["sin(theta0)", "-cos(theta0)"], "qdot0": [0, 0], "T": 5},
  "integrator": {"h": 1e-3, "quadrature": "left"},
  "dvp": {"functional": "ils", "start": ["sin(theta0)", "-cos(theta0)"], "end": [0, -1], "T": 0.5, "N": 100,
          "quadrature": "midpoint"}
},
{
  "name": "regular_foliation",
  "description": "F + F° for the foliation of R^3 by the planes z = const; omega_D vanishes.",
  "coordinates": ["x", "y", "z"],
  "structure": {"kind": "foliation", "submersion": ["z"], "fields": [["1", "0", "0"], ["0", "1", "0"]]},
  "dynamics": {"type": "hamiltonian", "H": "0.5*z^2"},
  "initial": {"x0": [0.3, 0.2, 0.5], "T": 1},
  "integrator": {"h": 1e-2, "method": "explicit_rk4"},
  "casimirs": ["z"],
  "primitive": {"tau": {"X": ["0", "0", "0"], "alpha": ["0", "0", "0"]}},
  "dvp": {"functional": "theorem1", "H": "0.5*(x^2 + y^2 + z^2)", "start": [1, 1, 0.3], "end": [-1, 2, 0.3],
          "T": 1, "N": 20, "quadrature": "left"},
  "expect": {"omega_zero": true}
},
{
  "name": "almost_dirac_rolling",
  "description": "Non-involutive distribution span{d_x, d_y + x d_z} with its annihilator: an almost-Dirac structure.",
  "coordinates": ["x", "y", "z"],
  "structure": {"kind": "distribution", "fields": [["1", "0", "0"], ["0", "1", "x"]],
                "annihilator": [["0", "-x", "1"]], "almost_dirac": true},
  "dynamics": {"type": "hamiltonian", "H": "z"},
  "initial": {"x0": [0, 0.5, 0], "T": 1},
  "integrator": {"h": 1e-2, "method": "explicit_rk4"},
  "expect": {"involutivity_fails": true}
}
])json";

const json& catalog() {
  static const json docs = json::parse(kCatalog);
  return docs;
}

[[noreturn]] void config_fail(const std::string& where, const std::string& msg) {
  throw ConfigError(where + ": " + msg);
}

using Params = std::map<std::string, double>;

double scalar(const json& j, const Params& params, const std::string& where) {
  if (j.is_number()) return j.get<double>();
  if (j.is_string()) return Expression::parse(j.get<std::string>(), {}, params)(Vec());
  config_fail(where, "expected a number or a constant expression");
}

Vec vector_of(const json& j, const Params& params, const std::string& where, int expected = -1) {
  if (!j.is_array()) config_fail(where, "expected an array");
  if (expected >= 0 && static_cast<int>(j.size()) != expected)
    config_fail(where, "expected " + std::to_string(expected) + " entries, got " + std::to_string(j.size()));
  Vec out(static_cast<int>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) out(static_cast<int>(i)) = scalar(j[i], params, where);
  return out;
}

Expression expression(const json& j, const std::vector<std::string>& vars, const Params& params,
                      const std::string& where) {
  if (j.is_number()) return Expression::parse(std::to_string(j.get<double>()), vars, params);
  if (!j.is_string()) config_fail(where, "expected an expression string");
  return Expression::parse(j.get<std::string>(), vars, params);
}

std::vector<Expression> expressions(const json& j, const std::vector<std::string>& vars, const Params& params,
                                    const std::string& where, int expected = -1) {
  if (!j.is_array()) config_fail(where, "expected an array of expressions");
  if (expected >= 0 && static_cast<int>(j.size()) != expected)
    config_fail(where, "expected " + std::to_string(expected) + " components, got " + std::to_string(j.size()));
  std::vector<Expression> out;
  for (const auto& e : j) out.push_back(expression(e, vars, params, where));
  return out;
}

int coordinate_index(const json& j, const std::vector<std::string>& vars, const std::string& where) {
  if (j.is_number_integer()) {
    const int i = j.get<int>();
    if (i < 0 || i >= static_cast<int>(vars.size())) config_fail(where, "coordinate index out of range");
    return i;
  }
  if (j.is_string()) {
    const auto it = std::find(vars.begin(), vars.end(), j.get<std::string>());
    if (it == vars.end()) config_fail(where, "unknown coordinate '" + j.get<std::string>() + "'");
    return static_cast<int>(it - vars.begin());
  }
  config_fail(where, "expected a coordinate name or index");
}

std::vector<SkewEntry> skew_entries(const json& j, const std::vector<std::string>& vars, const Params& params,
                                    const std::string& where) {
  if (!j.is_array()) config_fail(where, "entries must be an array of [i, j, expr]");
  std::vector<SkewEntry> out;
  for (const auto& e : j) {
    if (!e.is_array() || e.size() != 3) config_fail(where, "each entry must be [i, j, expr]");
    out.push_back({coordinate_index(e[0], vars, where), coordinate_index(e[1], vars, where),
                   expression(e[2], vars, params, where)});
  }
  return out;
}

std::vector<Vec> sample_points(const Chart& chart, const LoadOptions& opts, double half_width) {
  return halton_samples(Box::cube(chart.dim(), half_width), opts.sample_count, static_cast<int>(opts.seed), &chart);
}

struct StructureContext {
  const Params& params;
  const LoadOptions& opts;
  const ScenarioTolerances& tol;
  double half_width;
};

DiracStructure build_structure(const json& node, const Chart& chart, const StructureContext& ctx,
                               std::string* kind_out) {
  const std::string where = "structure";
  if (!node.is_object() || !node.contains("kind")) config_fail(where, "missing 'kind'");
  const std::string kind = node.at("kind").get<std::string>();
  if (kind_out) *kind_out = kind;
  const std::vector<std::string>& vars = chart.coordinate_names();
  BuildOptions bo;
  bo.isotropy_tol = ctx.tol.isotropy;
  bo.involutivity_tol = ctx.tol.involutivity;
  bo.verify = true;
  bo.almost_dirac = node.value("almost_dirac", false);
  bo.samples = sample_points(chart, ctx.opts, ctx.half_width);
  bo.verify = ctx.opts.verify;

  std::optional<DiracStructure> D;
  if (kind == "form") {
    D = build_dirac_form(skew_field_from(chart, Variance::covariant, skew_entries(node.at("entries"), vars, ctx.params, where)), bo);
  } else if (kind == "poisson") {
    D = build_dirac_poisson(
        skew_field_from(chart, Variance::contravariant, skew_entries(node.at("entries"), vars, ctx.params, where)), bo);
  } else if (kind == "foliation") {
    const auto g = expressions(node.at("submersion"), vars, ctx.params, where + ".submersion");
    std::vector<VectorField> fields;
    for (const auto& f : node.at("fields"))
      fields.push_back(vector_field_from(chart, expressions(f, vars, ctx.params, where + ".fields", chart.dim())));
    const auto dg = differentials_from(chart, g);
    D = build_dirac_foliation(vecfn_from(chart.dim(), g), fields, bo, &dg);
  } else if (kind == "distribution") {
    std::vector<VectorField> fields;
    for (const auto& f : node.at("fields"))
      fields.push_back(vector_field_from(chart, expressions(f, vars, ctx.params, where + ".fields", chart.dim())));
    std::vector<OneFormField> ann;
    for (const auto& a : node.at("annihilator"))
      ann.push_back(one_form_from(chart, expressions(a, vars, ctx.params, where + ".annihilator", chart.dim())));
    D = build_dirac_distribution(fields, ann, bo);
  } else if (kind == "lift") {
    const DiracStructure base = build_structure(node.at("base"), chart, ctx, nullptr);
    BuildOptions lo = bo;
    lo.samples = sample_points(cotangent_chart(chart), ctx.opts, ctx.half_width);
    D = cotangent_lift(base, node.value("gauge", true), lo);
  } else {
    config_fail(where, "unknown kind '" + kind + "'");
  }
  if (node.contains("gauge_form")) {
    const auto& dchart = D->chart();
    BuildOptions go = bo;
    go.samples = sample_points(dchart, ctx.opts, ctx.half_width);
    D = gauge_transform(
        *D,
        skew_field_from(dchart, Variance::covariant,
                        skew_entries(node.at("gauge_form"), dchart.coordinate_names(), ctx.params, where + ".gauge_form")),
        go);
  }
  return *D;
}

Quadrature parse_quadrature(const std::string& s) {
  if (s == "left") return Quadrature::left;
  if (s == "midpoint") return Quadrature::midpoint;
  throw ConfigError("quadrature must be 'left' or 'midpoint', got '" + s + "'");
}

Method parse_method(const std::string& s) {
  if (s == "explicit_rk4") return Method::explicit_rk4;
  if (s == "implicit_midpoint") return Method::implicit_midpoint;
  throw ConfigError("method must be 'explicit_rk4' or 'implicit_midpoint', got '" + s + "'");
}

Scenario load_impl(const json& doc, const LoadOptions& opts) {
  Scenario sc;
  sc.document = doc;
  sc.name = doc.value("name", std::string("inline"));
  sc.description = doc.value("description", std::string());
  if (!doc.contains("coordinates")) config_fail(sc.name, "missing 'coordinates'");
  const auto vars = doc.at("coordinates").get<std::vector<std::string>>();
  const int n = static_cast<int>(vars.size());
  if (n == 0) config_fail(sc.name, "'coordinates' is empty");

  if (doc.contains("parameters")) {
    for (const auto& [k, v] : doc.at("parameters").items()) sc.parameters[k] = scalar(v, sc.parameters, "parameters." + k);
  }
  const Params& params = sc.parameters;

  if (doc.contains("tolerances")) {
    const auto& t = doc.at("tolerances");
    sc.tol.isotropy = t.value("isotropy", sc.tol.isotropy);
    sc.tol.involutivity = t.value("involutivity", sc.tol.involutivity);
    sc.tol.horizontality = t.value("horizontality", sc.tol.horizontality);
    sc.tol.d_omega = t.value("d_omega", sc.tol.d_omega);
    sc.tol.primitive = t.value("primitive", sc.tol.primitive);
    sc.tol.membership = t.value("membership", sc.tol.membership);
    sc.tol.casimir = t.value("casimir", sc.tol.casimir);
  }
  if (doc.contains("expect")) {
    sc.expect_involutivity_failure = doc.at("expect").value("involutivity_fails", false);
    sc.expect_omega_zero = doc.at("expect").value("omega_zero", false);
  }

  Chart::DomainPredicate domain;
  if (doc.contains("domain_positive")) {
    const auto conds = expressions(doc.at("domain_positive"), vars, params, "domain_positive");
    domain = [conds](const Vec& x) {
      for (const auto& c : conds)
        if (!(c(x) > 0.0)) return false;
      return true;
    };
  }
  sc.chart = Chart(n, vars, domain);
  const double half_width = doc.value("sample_half_width", 1.5);
  const StructureContext ctx{params, opts, sc.tol, half_width};

  // Dynamics.
  if (!doc.contains("dynamics")) config_fail(sc.name, "missing 'dynamics'");
  const auto& dyn = doc.at("dynamics");
  const std::string type = dyn.value("type", std::string("hamiltonian"));
  if (type == "hamiltonian") {
    sc.dynamics = DynamicsKind::hamiltonian;
    sc.H = scalar_field_from(sc.chart, expression(dyn.at("H"), vars, params, "dynamics.H"));
  } else if (type == "lagrangian") {
    sc.dynamics = DynamicsKind::lagrangian;
    const Chart tq = tangent_chart(sc.chart);
    sc.L = Lagrangian(sc.chart, scalar_field_from(tq, expression(dyn.at("L"), tq.coordinate_names(), params, "dynamics.L")));
    std::vector<Expression> theta;
    if (dyn.contains("theta")) {
      theta = expressions(dyn.at("theta"), vars, params, "dynamics.theta", n);
      sc.theta = one_form_from(sc.chart, theta);
    }
    if (dyn.contains("constraint")) {
      sc.constraint_expressions = expressions(dyn.at("constraint"), vars, params, "dynamics.constraint");
      sc.constraint = vecfn_from(n, sc.constraint_expressions);
    }
    if (!sc.constraint) {
      // Base graph of -d theta, lifted with the canonical gauge.
      std::vector<SkewEntry> entries;
      for (int i = 0; i < n && !theta.empty(); ++i)
        for (int j = i + 1; j < n; ++j) {
          const Expression dij = Expression::parse(
              "(" + theta[i].derivative(j).to_string() + ") - (" + theta[j].derivative(i).to_string() + ")", vars);
          if (!dij.is_zero()) entries.push_back({i, j, dij});
        }
      BuildOptions bo;
      bo.verify = opts.verify;
      bo.samples = sample_points(sc.chart, opts, half_width);
      const DiracStructure base = build_dirac_form(skew_field_from(sc.chart, Variance::covariant, entries), bo);
      bo.samples = sample_points(cotangent_chart(sc.chart), opts, half_width);
      sc.lifted = cotangent_lift(base, true, bo);
    }
  } else {
    config_fail("dynamics.type", "must be 'hamiltonian' or 'lagrangian'");
  }

  // Structure.
  if (doc.contains("structure")) {
    sc.structure = build_structure(doc.at("structure"), sc.chart, ctx, &sc.structure_kind);
  } else if (sc.lifted) {
    sc.structure = sc.lifted;
    sc.structure_kind = "lift";
  } else {
    config_fail(sc.name, "missing 'structure'");
  }
  if (sc.dynamics == DynamicsKind::hamiltonian && sc.structure->dim() != n)
    config_fail("structure", "Hamiltonian dynamics needs a structure on the coordinate chart");
  if (sc.dynamics == DynamicsKind::lagrangian && sc.structure_kind == "lift" && !sc.constraint)
    sc.lifted = sc.structure;
  sc.samples = sample_points(sc.structure->chart(), opts, half_width);

  // Initial data and integrator.
  Params init_params = params;
  const auto& init = doc.contains("initial") ? doc.at("initial") : json::object();
  if (sc.dynamics == DynamicsKind::hamiltonian) {
    sc.x0 = init.contains("x0") ? vector_of(init.at("x0"), params, "initial.x0", n) : Vec::Zero(n);
    for (int i = 0; i < n; ++i) init_params["x0_" + vars[i]] = sc.x0(i);
  } else {
    sc.x0 = init.contains("q0") ? vector_of(init.at("q0"), params, "initial.q0", n) : Vec::Zero(n);
    sc.qdot0 = init.contains("qdot0") ? vector_of(init.at("qdot0"), params, "initial.qdot0", n) : Vec::Zero(n);
    for (int i = 0; i < n; ++i) {
      init_params["q0_" + vars[i]] = sc.x0(i);
      init_params["qdot0_" + vars[i]] = sc.qdot0(i);
    }
  }
  sc.T = init.contains("T") ? scalar(init.at("T"), params, "initial.T") : 1.0;
  if (!(sc.T > 0.0)) config_fail("initial.T", "must be > 0");
  if (doc.contains("integrator")) {
    const auto& ig = doc.at("integrator");
    if (ig.contains("h")) sc.integrator.h = scalar(ig.at("h"), params, "integrator.h");
    if (ig.contains("steps")) sc.integrator.steps = ig.at("steps").get<std::vector<double>>();
    if (ig.contains("method")) sc.integrator.method = parse_method(ig.at("method").get<std::string>());
    if (ig.contains("quadrature")) sc.integrator.quadrature = parse_quadrature(ig.at("quadrature").get<std::string>());
    sc.integrator.newton_tol = ig.value("newton_tol", sc.integrator.newton_tol);
    sc.integrator.newton_max_iter = ig.value("newton_max_iter", sc.integrator.newton_max_iter);
  }
  sc.integrator.membership_tol = sc.tol.membership;
  try {
    sc.integrator.validate();
  } catch (const std::invalid_argument& e) {
    config_fail("integrator", e.what());
  }

  if (doc.contains("casimirs")) {
    for (const auto& c : doc.at("casimirs")) {
      sc.casimir_fields.push_back(scalar_field_from(sc.chart, expression(c, vars, params, "casimirs")));
      sc.casimir_names.push_back(c.is_string() ? c.get<std::string>() : c.dump());
    }
  }

  if (doc.contains("primitive")) {
    const auto& p = doc.at("primitive");
    const Chart& dc = sc.structure->chart();
    const auto& dvars = dc.coordinate_names();
    if (p.contains("tau")) {
      sc.primitive = CourantSection(
          vector_field_from(dc, expressions(p.at("tau").at("X"), dvars, params, "primitive.tau.X", dc.dim())),
          one_form_from(dc, expressions(p.at("tau").at("alpha"), dvars, params, "primitive.tau.alpha", dc.dim())));
    }
    if (p.contains("E")) {
      if (!sc.structure->poisson()) config_fail("primitive.E", "a Poisson primitive needs a Poisson structure");
      sc.poisson_primitive = vector_field_from(dc, expressions(p.at("E"), dvars, params, "primitive.E", dc.dim()));
    }
    sc.primitive_samples = sc.samples;
    if (p.contains("on")) {
      for (const auto& [k, v] : p.at("on").items()) {
        const int idx = coordinate_index(json(k), dvars, "primitive.on");
        const double val = scalar(v, params, "primitive.on");
        for (Vec& x : sc.primitive_samples) x(idx) = val;
      }
    }
    if (p.contains("extra_samples"))
      for (const auto& e : p.at("extra_samples"))
        sc.primitive_samples.push_back(vector_of(e, params, "primitive.extra_samples", dc.dim()));
  }

  if (doc.contains("analytic")) {
    const auto& a = doc.at("analytic");
    sc.analytic = expressions(a.at("state"), {"t"}, init_params, "analytic.state", n);
  }

  if (doc.contains("dvp")) {
    const auto& d = doc.at("dvp");
    DvpSpec spec;
    spec.functional = d.value("functional", std::string(sc.dynamics == DynamicsKind::hamiltonian ? "theorem1" : "ils"));
    if (spec.functional == "theorem1" && sc.dynamics != DynamicsKind::hamiltonian)
      config_fail("dvp.functional", "theorem1 needs Hamiltonian dynamics");
    if (spec.functional == "ils" && sc.dynamics != DynamicsKind::lagrangian)
      config_fail("dvp.functional", "ils needs Lagrangian dynamics");
    if (spec.functional != "theorem1" && spec.functional != "ils")
      config_fail("dvp.functional", "must be 'theorem1' or 'ils'");
    spec.start = vector_of(d.at("start"), params, "dvp.start", n);
    spec.end = vector_of(d.at("end"), params, "dvp.end", n);
    spec.T = d.contains("T") ? scalar(d.at("T"), params, "dvp.T") : sc.T;
    spec.N = d.value("N", 100);
    if (spec.N < 2) config_fail("dvp.N", "must be >= 2");
    if (!(spec.T > 0.0)) config_fail("dvp.T", "must be > 0");
    spec.quadrature = parse_quadrature(d.value("quadrature", std::string("left")));
    if (d.contains("H")) {
      if (spec.functional != "theorem1") config_fail("dvp.H", "only the theorem1 functional takes a Hamiltonian");
      spec.H = scalar_field_from(sc.chart, expression(d.at("H"), vars, params, "dvp.H"));
    }
    sc.dvp = spec;
  }
  return sc;
}

const std::map<std::string, std::string>& override_aliases() {
  static const std::map<std::string, std::string> aliases{
      {"h", "integrator.h"},         {"T", "initial.T"},
      {"x0", "initial.x0"},          {"q0", "initial.q0"},
      {"qdot0", "initial.qdot0"},    {"method", "integrator.method"},
      {"quadrature", "integrator.quadrature"}, {"newton_tol", "integrator.newton_tol"},
      {"membership_tol", "tolerances.membership"}, {"N", "dvp.N"},
      {"start", "dvp.start"},        {"end", "dvp.end"},
      {"dvp_T", "dvp.T"},            {"dvp_quadrature", "dvp.quadrature"}};
  return aliases;
}

bool compatible(const json& old_value, const json& value) {
  if (old_value.is_number()) return value.is_number() || value.is_string();
  if (old_value.is_array()) return value.is_array() && value.size() == old_value.size();
  if (old_value.is_string()) return value.is_string() || (value.is_number() && !old_value.get<std::string>().empty());
  if (old_value.is_boolean()) return value.is_boolean();
  return old_value.type() == value.type();
}

}  // namespace

std::optional<Vec> Scenario::analytic_state(double t) const {
  if (analytic.empty()) return std::nullopt;
  Vec out(static_cast<int>(analytic.size()));
  const Vec tv = Vec::Constant(1, t);
  for (std::size_t i = 0; i < analytic.size(); ++i) out(static_cast<int>(i)) = analytic[i](tv);
  return out;
}

Scenario load_scenario(const json& document, const LoadOptions& opts) {
  try {
    return load_impl(document, opts);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("scenario document: ") + e.what());
  }
}

const std::vector<std::string>& builtin_names() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> out;
    for (const auto& d : catalog()) out.push_back(d.at("name").get<std::string>());
    return out;
  }();
  return names;
}

const json& builtin_document(const std::string& name) {
  for (const auto& d : catalog())
    if (d.at("name") == name) return d;
  std::string known;
  for (const auto& n : builtin_names()) known += (known.empty() ? "" : ", ") + n;
  throw ConfigError("unknown scenario '" + name + "' (known: " + known + ")");
}

Scenario builtin(const std::string& name, const LoadOptions& opts) {
  return load_scenario(builtin_document(name), opts);
}

std::vector<ScalarField> casimirs(const Scenario& scenario) { return scenario.casimir_fields; }

void apply_override(json& document, const std::string& key, const json& value) {
  const auto alias = override_aliases().find(key);
  const bool is_alias = alias != override_aliases().end();
  const std::string path = is_alias ? alias->second : key;
  json* node = &document;
  std::stringstream ss(path);
  std::string part;
  std::vector<std::string> parts;
  while (std::getline(ss, part, '.')) parts.push_back(part);
  for (std::size_t i = 0; i + 1 < parts.size(); ++i) {
    if (!node->contains(parts[i])) {
      if (!is_alias) throw ConfigError("override '" + key + "': no such key in the scenario");
      (*node)[parts[i]] = json::object();
    }
    node = &(*node)[parts[i]];
    if (!node->is_object()) throw ConfigError("override '" + key + "': '" + parts[i] + "' is not an object");
  }
  const std::string& leaf = parts.back();
  if (node->contains(leaf)) {
    if (!compatible((*node)[leaf], value))
      throw ConfigError("override '" + key + "': value " + value.dump() + " does not match the type of " +
                        (*node)[leaf].dump());
  } else if (!is_alias) {
    throw ConfigError("override '" + key + "': no such key in the scenario");
  }
  (*node)[leaf] = value;
}

ScenarioCheck check_scenario(const Scenario& sc) {
  ScenarioCheck out;
  json& r = out.report;
  const DiracStructure& D = sc.dirac();
  r["scenario"] = sc.name;
  r["structure_kind"] = sc.structure_kind;
  r["almost_dirac"] = D.almost_dirac();
  r["samples"] = sc.samples.size();

  const StructureReport sr = verify_structure(D, sc.samples, sc.tol.isotropy, sc.tol.involutivity);
  bool structure_ok = sr.rank_ok && sr.isotropy_ok;
  if (sc.expect_involutivity_failure) {
    structure_ok = structure_ok && sr.involutivity_max >= 0.1;
  } else {
    structure_ok = structure_ok && sr.involutivity_ok;
  }
  r["structure"] = {{"isotropy_max", sr.isotropy_max},
                    {"involutivity_max", sr.involutivity_max},
                    {"rank_ok", sr.rank_ok},
                    {"isotropy_ok", sr.isotropy_ok},
                    {"involutivity_ok", sr.involutivity_ok},
                    {"involutivity_failure_expected", sc.expect_involutivity_failure},
                    {"pass", structure_ok}};
  out.passed = structure_ok;

  if (D.poisson()) {
    double worst = 0.0;
    for (const Vec& x : sc.samples) worst = std::max(worst, jacobi_residual(*D.poisson(), x));
    const bool ok = worst <= 1e-6;
    r["jacobi"] = {{"max_residual", worst}, {"pass", ok}};
    out.passed = out.passed && ok;
  }
  if (D.form()) {
    double worst = 0.0;
    for (const Vec& x : sc.samples) worst = std::max(worst, closedness_residual(*D.form(), x));
    const bool ok = worst <= 1e-6;
    r["closedness"] = {{"max_residual", worst}, {"pass", ok}};
    out.passed = out.passed && ok;
  }

  // omega_D: horizontal and d_D-closed; only meaningful for involutive structures.
  if (!D.almost_dirac()) {
    const FrameAlgebroid alg = dirac_algebroid(D);
    const AlgebroidForm omega = omega_D_form(D);
    const HorizontalityReport hr = horizontality_report(alg, omega, sc.samples, sc.tol.horizontality);
    double closed = 0.0, magnitude = 0.0;
    for (const Vec& x : sc.samples) {
      if (alg.rank() > 2) closed = std::max(closed, lichnerowicz_d(alg, omega, x).max_abs());
      magnitude = std::max(magnitude, omega_D_matrix(point_frame(D, x)).cwiseAbs().maxCoeff());
    }
    bool ok = hr.max_eta_residual < sc.tol.horizontality && hr.max_d_eta_residual < sc.tol.d_omega &&
              closed < sc.tol.d_omega;
    if (sc.expect_omega_zero) ok = ok && magnitude < sc.tol.horizontality;
    r["omega_D"] = {{"horizontality_max", hr.max_eta_residual},
                    {"d_horizontality_max", hr.max_d_eta_residual},
                    {"closedness_max", closed},
                    {"max_abs", magnitude},
                    {"zero_expected", sc.expect_omega_zero},
                    {"max_kernel_dim", hr.max_kernel_dim},
                    {"pass", ok}};
    out.passed = out.passed && ok;
  }

  if (sc.primitive) {
    const PrimitiveReport pr = check_primitive(D, *sc.primitive, sc.primitive_samples, sc.tol.primitive);
    const bool ok = pr.horizontal && pr.d_theta_equals_omega;
    r["primitive"] = {{"horizontality_max", pr.max_horizontality_residual},
                      {"d_theta_residual_max", pr.max_d_theta_residual},
                      {"samples", sc.primitive_samples.size()},
                      {"pass", ok}};
    out.passed = out.passed && ok;
  }
  if (sc.poisson_primitive) {
    const PoissonPrimitiveReport pr =
        check_poisson_primitive(*D.poisson(), *sc.poisson_primitive, sc.primitive_samples, sc.tol.primitive);
    const bool ok = pr.lie_condition && pr.tangency && pr.jacobi_ok;
    r["poisson_primitive"] = {{"lie_residual_max", pr.max_lie_residual},
                              {"tangency_max", pr.max_tangency_residual},
                              {"jacobi_max", pr.max_jacobi_residual},
                              {"pass", ok}};
    out.passed = out.passed && ok;
  }

  json cas = json::array();
  for (std::size_t i = 0; i < sc.casimir_fields.size(); ++i) {
    double worst = 0.0;
    bool attainable = true;
    for (const Vec& x : sc.samples) {
      const HamiltonianSolve s = hamiltonian_solve(point_frame(D, x), gradient(sc.casimir_fields[i], x, DiffBackend::forward_dual()));
      attainable = attainable && s.attainable;
      worst = std::max(worst, s.v.norm());
    }
    const bool ok = attainable && worst < sc.tol.casimir;
    cas.push_back({{"casimir", sc.casimir_names[i]}, {"max_hamiltonian_vector", worst}, {"pass", ok}});
    out.passed = out.passed && ok;
  }
  r["casimirs"] = cas;
  r["passed"] = out.passed;
  return out;
}

}  // namespace diracvar
