#pragma once

// Initial-value Dirac-Hamiltonian stepping, discrete Euler-Lagrange stepping
// (magnetic and holonomically constrained), and the discrete variational
// principle as a boundary-value solver.

#include <optional>
#include <variant>
#include <vector>

#include "diracvar/dirac.hpp"
#include "diracvar/mechanics.hpp"

namespace diracvar {

enum class Method { explicit_rk4, implicit_midpoint };
/// Point at which a one-step discrete Lagrangian evaluates L, theta and H.
enum class Quadrature { left, midpoint };

const char* to_string(Method m);
const char* to_string(Quadrature q);

struct IntegratorConfig {
  double h = 1e-3;
  /// Optional explicit steps; when nonempty they override h.
  std::vector<double> steps;
  Method method = Method::explicit_rk4;
  Quadrature quadrature = Quadrature::left;
  double newton_tol = 1e-10;
  int newton_max_iter = 50;
  double membership_tol = 1e-8;
  DiffBackend backend = DiffBackend::forward_dual();

  void validate() const;
  /// Steps covering [0, T]: the explicit list, or ceil(T/h) equal steps.
  std::vector<double> step_sequence(double T) const;
};

struct StepDiagnostics {
  double H_value = 0.0;
  std::vector<double> casimir_values;
  double membership_residual = 0.0;
  int kernel_dim = 0;
};

struct Trajectory {
  std::vector<double> times;
  std::vector<Vec> states;
  std::vector<StepDiagnostics> diagnostics;
  int newton_iterations = 0;
};

/// v(x) from hamiltonian_solve; throws AttainabilityError naming the point.
Vec dirac_hamiltonian_vector(const DiracStructure& D, const ScalarField& H, const Vec& x,
                             const IntegratorConfig& cfg, StepDiagnostics* diag = nullptr);

/// One step of size h (negative h steps backwards).
Vec dirac_hamiltonian_step(const DiracStructure& D, const ScalarField& H, const Vec& x, double h,
                           const IntegratorConfig& cfg, int* newton_iterations = nullptr);

Trajectory integrate_dirac_hamiltonian(const DiracStructure& D, const ScalarField& H, const Vec& x0, double T,
                                       const IntegratorConfig& cfg,
                                       const std::vector<ScalarField>& casimirs = {});

/// One-step discrete Lagrangian
///   L_d(a, b; h) = h [L(pt, (b-a)/h) + theta_pt((b-a)/h)]
/// with pt = a (left) or (a+b)/2 (midpoint).
class DiscreteLagrangian {
 public:
  DiscreteLagrangian(Lagrangian L, std::optional<OneFormField> theta, Quadrature quadrature);

  const Lagrangian& lagrangian() const { return L_; }
  const std::optional<OneFormField>& theta() const { return theta_; }
  Quadrature quadrature() const { return quad_; }
  int dim() const { return L_.dim(); }

  double value(const Vec& a, const Vec& b, double h) const;
  /// (D1 L_d, D2 L_d) stacked.
  Vec gradient(const Vec& a, const Vec& b, double h) const;
  Vec D1(const Vec& a, const Vec& b, double h) const { return gradient(a, b, h).head(dim()); }
  Vec D2(const Vec& a, const Vec& b, double h) const { return gradient(a, b, h).tail(dim()); }

 private:
  Lagrangian L_;
  std::optional<OneFormField> theta_;
  Quadrature quad_;
};

struct ElStepResult {
  Vec q_next;
  Vec lambda;
  int iterations = 0;
  double residual = 0.0;
};

/// Solves D2 L_d(q_prev, q_cur) + D1 L_d(q_cur, q_next) = 0 for q_next.
Vec magnetic_el_step(const Lagrangian& L, const std::optional<OneFormField>& theta, const Vec& q_prev,
                     const Vec& q_cur, double h_prev, double h_cur, const IntegratorConfig& cfg,
                     ElStepResult* info = nullptr);

/// Adds dg(q_cur)^T lambda to the discrete Euler-Lagrange equation and
/// enforces g(q_next) = level.
ElStepResult constrained_el_step(const Lagrangian& L, const VecFn& g, const Vec& level, const Vec& q_prev,
                                 const Vec& q_cur, double h_prev, double h_cur, const IntegratorConfig& cfg,
                                 const std::optional<OneFormField>& theta = std::nullopt);

/// Discrete solution of the Euler-Lagrange equations of L + theta(v),
/// optionally on the level set g = g(q0). The first step matches the
/// continuous momentum FL(q0, qdot0) + theta(q0). States are (q_k, p_k) with
/// the discrete momentum p_k = D2 L_d(q_{k-1}, q_k); diagnostics carry the
/// energy and the per-node discrete Euler-Lagrange residual.
struct VariationalRun {
  Trajectory trajectory;
  std::vector<Vec> positions;
  std::vector<Vec> multipliers;
  double max_constraint_drift = 0.0;
};

VariationalRun integrate_variational(const Lagrangian& L, const std::optional<OneFormField>& theta,
                                     const std::optional<VecFn>& constraint, const Vec& q0, const Vec& qdot0,
                                     double T, const IntegratorConfig& cfg);

/// Theorem-1 functional: sum_n h_n [1/2 theta(zeta_n) + H(pt_n)] with
/// rho(pt_n) zeta_n = (gamma_{n+1} - gamma_n) / h_n solved by min-norm least squares.
struct Theorem1Functional {
  DiracStructure D;
  CourantSection tau;
  ScalarField H;
  Quadrature quadrature = Quadrature::left;
};

/// Implicit-Lagrangian functional sum_n L_d(q_n, q_{n+1}) with optional constraint g = g(q_0).
struct IlsFunctional {
  Lagrangian L;
  std::optional<OneFormField> theta;
  std::optional<VecFn> constraint;
  Quadrature quadrature = Quadrature::left;
};

using DiscreteFunctional = std::variant<Theorem1Functional, IlsFunctional>;

struct DiscretePath {
  std::vector<double> times;
  std::vector<Vec> nodes;
  std::vector<Vec> multipliers;
  DiscreteFunctional functional;
  int newton_iterations = 0;
  int continuation_levels = 0;
  double stationarity = 0.0;

  int node_count() const { return static_cast<int>(nodes.size()); }
};

/// Uniform grid on [0, T] with N steps and linear interpolation between endpoints.
DiscretePath make_path(DiscreteFunctional functional, const Vec& q_start, const Vec& q_end, double T, int N);

/// Local one-step value and gradient for either functional.
double discrete_summand(const DiscreteFunctional& f, const Vec& a, const Vec& b, double h);
Vec discrete_summand_gradient(const DiscreteFunctional& f, const Vec& a, const Vec& b, double h,
                              const DiffBackend& backend = {});

/// Newton (sparse KKT) on the interior nodes with fixed endpoints. Throws
/// LeafMismatchError when a discrete velocity of the guess is not in the
/// anchor image (theorem1) and ConvergenceError on divergence.
DiscretePath dvp_solve(const DiscretePath& problem, const IntegratorConfig& cfg);

/// max over interior nodes of the inf-norm action gradient, restricted to
/// anchor directions (theorem1) or with the constraint normals projected out.
double stationarity_residual(const DiscretePath& path, const DiffBackend& backend = DiffBackend::forward_dual());

}  // namespace diracvar
