#pragma once

// Scenario documents (JSON with expression strings) and the builtin catalog.
//
// A document has the keys
//   name, description, coordinates, parameters, domain_positive,
//   structure   {kind: form|poisson|foliation|distribution|lift, ...}
//   dynamics    {type: hamiltonian, H} or {type: lagrangian, L, theta, constraint}
//   initial     {x0, T} or {q0, qdot0, T}
//   integrator  {h, method, quadrature, newton_tol, newton_max_iter}
//   casimirs, primitive {tau, E, on, extra_samples}, analytic {state},
//   dvp {functional, start, end, T, N, quadrature, H}, tolerances, expect.
// Scalars may be numbers or constant expressions ("pi/2").

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "diracvar/dirac.hpp"
#include "diracvar/expression.hpp"
#include "diracvar/integrate.hpp"
#include "diracvar/mechanics.hpp"

namespace diracvar {

struct ScenarioTolerances {
  double isotropy = 1e-8;
  double involutivity = 1e-6;
  double horizontality = 1e-8;
  double d_omega = 1e-5;
  double primitive = 1e-6;
  double membership = 1e-8;
  double casimir = 1e-8;
};

enum class DynamicsKind { hamiltonian, lagrangian };

struct DvpSpec {
  std::string functional;
  Vec start;
  Vec end;
  double T = 1.0;
  int N = 100;
  Quadrature quadrature = Quadrature::left;
  /// Replaces the scenario Hamiltonian in the theorem-1 functional.
  std::optional<ScalarField> H;
};

struct Scenario {
  std::string name;
  std::string description;
  nlohmann::json document;
  std::map<std::string, double> parameters;

  /// Configuration chart: M for Hamiltonian scenarios, Q for Lagrangian ones.
  Chart chart{1};
  std::optional<DiracStructure> structure;
  std::string structure_kind;

  DynamicsKind dynamics = DynamicsKind::hamiltonian;
  std::optional<ScalarField> H;
  std::optional<Lagrangian> L;
  std::optional<OneFormField> theta;
  std::optional<VecFn> constraint;
  std::vector<Expression> constraint_expressions;
  /// Lifted structure on T*Q for implicit-Lagrangian residuals (unconstrained Lagrangian scenarios).
  std::optional<DiracStructure> lifted;

  std::vector<ScalarField> casimir_fields;
  std::vector<std::string> casimir_names;

  std::optional<CourantSection> primitive;
  std::optional<VectorField> poisson_primitive;
  std::vector<Vec> primitive_samples;
  std::vector<Vec> samples;

  Vec x0;
  Vec qdot0;
  double T = 1.0;
  IntegratorConfig integrator;

  /// State (x, or q for Lagrangian scenarios) as expressions in t.
  std::vector<Expression> analytic;
  std::optional<DvpSpec> dvp;

  ScenarioTolerances tol;
  bool expect_involutivity_failure = false;
  bool expect_omega_zero = false;

  const DiracStructure& dirac() const { return *structure; }
  std::optional<Vec> analytic_state(double t) const;
};

struct LoadOptions {
  /// Offset into the Halton sequence used for structural samples.
  unsigned seed = 0;
  int sample_count = 100;
  /// Verify structure identities on construction (off for diagnostic checks).
  bool verify = true;
};

/// Throws ConfigError for malformed documents and ConstructionError when the
/// structure fails its defining identities.
Scenario load_scenario(const nlohmann::json& document, const LoadOptions& opts = {});

const std::vector<std::string>& builtin_names();
/// The catalog document; throws ConfigError for an unknown name.
const nlohmann::json& builtin_document(const std::string& name);
Scenario builtin(const std::string& name, const LoadOptions& opts = {});

std::vector<ScalarField> casimirs(const Scenario& scenario);

/// Sets a value addressed by an alias (h, T, x0, q0, qdot0, method, quadrature,
/// newton_tol, membership_tol, N, start, end, dvp_T) or a dotted path that
/// already exists in the document. Types and vector lengths must match.
void apply_override(nlohmann::json& document, const std::string& key, const nlohmann::json& value);

/// Structural verification of a scenario: structure axioms, horizontality and
/// closedness of omega_D, declared primitives and Casimirs.
struct ScenarioCheck {
  nlohmann::json report;
  bool passed = true;
};

ScenarioCheck check_scenario(const Scenario& scenario);

}  // namespace diracvar
