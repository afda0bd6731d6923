#include "diracvar/integrate.hpp"

#include <Eigen/Sparse>
#include <Eigen/SparseLU>
#include <cmath>
#include <limits>
#include <sstream>

#include "diracvar/linalg.hpp"

namespace diracvar {

const char* to_string(Method m) {
  return m == Method::explicit_rk4 ? "explicit_rk4" : "implicit_midpoint";
}

const char* to_string(Quadrature q) { return q == Quadrature::left ? "left" : "midpoint"; }

void IntegratorConfig::validate() const {
  if (steps.empty() && !(h > 0.0)) throw std::invalid_argument("IntegratorConfig: h must be > 0");
  for (double s : steps)
    if (!(s > 0.0)) throw std::invalid_argument("IntegratorConfig: every step must be > 0");
  if (!(newton_tol > 0.0)) throw std::invalid_argument("IntegratorConfig: newton_tol must be > 0");
  if (newton_max_iter < 1) throw std::invalid_argument("IntegratorConfig: newton_max_iter must be >= 1");
}

std::vector<double> IntegratorConfig::step_sequence(double T) const {
  validate();
  if (!steps.empty()) return steps;
  if (!(T > 0.0)) throw std::invalid_argument("IntegratorConfig: T must be > 0");
  const long N = std::max(1L, static_cast<long>(std::ceil(T / h - 1e-9)));
  return std::vector<double>(N, T / static_cast<double>(N));
}

Vec dirac_hamiltonian_vector(const DiracStructure& D, const ScalarField& H, const Vec& x, const IntegratorConfig& cfg,
                             StepDiagnostics* diag) {
  const PointFrame F = point_frame(D, x);
  const Vec dH = gradient(H, x, cfg.backend);
  const HamiltonianSolve s = hamiltonian_solve(F, dH, cfg.membership_tol);
  if (!s.attainable) {
    std::ostringstream os;
    os << "integrate_dirac_hamiltonian: dH is not attainable at " << format_point(x) << " (residual " << s.residual
       << ")";
    throw AttainabilityError(os.str());
  }
  if (diag) {
    diag->H_value = H(x);
    diag->membership_residual = membership_residual(F, s.v, dH);
    diag->kernel_dim = s.kernel_dim;
  }
  return s.v;
}

Vec dirac_hamiltonian_step(const DiracStructure& D, const ScalarField& H, const Vec& x, double h,
                           const IntegratorConfig& cfg, int* newton_iterations) {
  auto f = [&](const Vec& y) { return dirac_hamiltonian_vector(D, H, y, cfg); };
  if (cfg.method == Method::explicit_rk4) {
    const Vec k1 = f(x);
    const Vec k2 = f(x + 0.5 * h * k1);
    const Vec k3 = f(x + 0.5 * h * k2);
    const Vec k4 = f(x + h * k3);
    return x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }
  const int n = static_cast<int>(x.size());
  const VecFn field(n, n, f);
  Vec y = x + h * f(x);
  const double scale = 1.0 + x.cwiseAbs().maxCoeff();
  for (int it = 0; it < cfg.newton_max_iter; ++it) {
    const Vec mid = 0.5 * (x + y);
    const Vec G = y - x - h * f(mid);
    if (G.cwiseAbs().maxCoeff() <= cfg.newton_tol * scale) {
      if (newton_iterations) *newton_iterations += it;
      return y;
    }
    const Mat J = Mat::Identity(n, n) - 0.5 * h * jacobian(field, mid, DiffBackend::central());
    y -= J.partialPivLu().solve(G);
    if (!y.allFinite()) break;
  }
  throw ConvergenceError("implicit_midpoint: Newton did not converge from " + format_point(x));
}

Trajectory integrate_dirac_hamiltonian(const DiracStructure& D, const ScalarField& H, const Vec& x0, double T,
                                       const IntegratorConfig& cfg, const std::vector<ScalarField>& casimirs) {
  require_same_chart(D.chart(), H.chart(), "integrate_dirac_hamiltonian");
  const std::vector<double> steps = cfg.step_sequence(T);
  D.chart().require(x0);
  Trajectory traj;
  traj.times.reserve(steps.size() + 1);
  traj.states.reserve(steps.size() + 1);
  auto record = [&](double t, const Vec& x) {
    StepDiagnostics diag;
    dirac_hamiltonian_vector(D, H, x, cfg, &diag);
    for (const auto& C : casimirs) diag.casimir_values.push_back(C(x));
    traj.times.push_back(t);
    traj.states.push_back(x);
    traj.diagnostics.push_back(std::move(diag));
  };
  double t = 0.0;
  Vec x = x0;
  record(t, x);
  for (double h : steps) {
    x = dirac_hamiltonian_step(D, H, x, h, cfg, &traj.newton_iterations);
    t += h;
    record(t, x);
  }
  return traj;
}

DiscreteLagrangian::DiscreteLagrangian(Lagrangian L, std::optional<OneFormField> theta, Quadrature quadrature)
    : L_(std::move(L)), theta_(std::move(theta)), quad_(quadrature) {
  if (theta_) require_same_chart(L_.base(), theta_->chart(), "DiscreteLagrangian");
}

double DiscreteLagrangian::value(const Vec& a, const Vec& b, double h) const {
  const Vec pt = quad_ == Quadrature::left ? a : Vec(0.5 * (a + b));
  const Vec v = (b - a) / h;
  double out = h * L_(pt, v);
  if (theta_) out += (*theta_)(pt).dot(b - a);
  return out;
}

Vec DiscreteLagrangian::gradient(const Vec& a, const Vec& b, double h) const {
  const int n = dim();
  const bool left = quad_ == Quadrature::left;
  const Vec pt = left ? a : Vec(0.5 * (a + b));
  const double wa = left ? 1.0 : 0.5;
  const double wb = left ? 0.0 : 0.5;
  const Vec g = L_.gradient(pt, (b - a) / h);
  Vec shared = h * g.head(n);
  Vec momentum = g.tail(n);
  if (theta_) {
    shared += jacobian(*theta_, pt, L_.backend()).transpose() * (b - a);
    momentum += (*theta_)(pt);
  }
  Vec out(2 * n);
  out << wa * shared - momentum, wb * shared + momentum;
  return out;
}

namespace {

struct DelSystem {
  const DiscreteLagrangian& DL;
  const VecFn* g;
  Vec level;
};

// Solves incoming + D1 L_d(q_cur, q_next) + dg(q_cur)^T lambda = 0, g(q_next) = level.
ElStepResult solve_del(const DelSystem& sys, const Vec& incoming, const Vec& q_cur, double h, const Vec& guess,
                       const IntegratorConfig& cfg) {
  const int n = sys.DL.dim();
  const int k = sys.g ? sys.g->out_dim() : 0;
  const Mat dg_cur = k > 0 ? jacobian(*sys.g, q_cur, cfg.backend) : Mat(0, n);
  const VecFn d1(n, n, [&](const Vec& q) { return sys.DL.D1(q_cur, q, h); });
  const double scale = 1.0 + incoming.cwiseAbs().maxCoeff();
  Vec z(n + k);
  z << guess, Vec::Zero(k);
  ElStepResult out;
  for (int it = 0; it <= cfg.newton_max_iter; ++it) {
    const Vec q = z.head(n);
    Vec R(n + k);
    R.head(n) = incoming + d1(q);
    if (k > 0) {
      R.head(n) += dg_cur.transpose() * z.tail(k);
      R.tail(k) = (*sys.g)(q) - sys.level;
    }
    out.residual = R.cwiseAbs().maxCoeff();
    if (out.residual <= cfg.newton_tol * scale) {
      out.q_next = q;
      out.lambda = z.tail(k);
      out.iterations = it;
      return out;
    }
    if (it == cfg.newton_max_iter) break;
    Mat J = Mat::Zero(n + k, n + k);
    J.topLeftCorner(n, n) = jacobian(d1, q, DiffBackend::central(1e-6));
    if (k > 0) {
      J.topRightCorner(n, k) = dg_cur.transpose();
      J.bottomLeftCorner(k, n) = jacobian(*sys.g, q, cfg.backend);
    }
    z -= J.fullPivLu().solve(R);
    if (!z.allFinite()) break;
  }
  throw ConvergenceError("discrete Euler-Lagrange step: Newton did not converge at " + format_point(q_cur) +
                         " (residual " + std::to_string(out.residual) + ")");
}

Vec extrapolate(const Vec& q_prev, const Vec& q_cur, double h_prev, double h_cur) {
  return q_cur + (h_cur / h_prev) * (q_cur - q_prev);
}

}  // namespace

Vec magnetic_el_step(const Lagrangian& L, const std::optional<OneFormField>& theta, const Vec& q_prev,
                     const Vec& q_cur, double h_prev, double h_cur, const IntegratorConfig& cfg, ElStepResult* info) {
  const DiscreteLagrangian DL(L, theta, cfg.quadrature);
  const DelSystem sys{DL, nullptr, Vec()};
  ElStepResult r = solve_del(sys, DL.D2(q_prev, q_cur, h_prev), q_cur, h_cur,
                             extrapolate(q_prev, q_cur, h_prev, h_cur), cfg);
  if (info) *info = r;
  return r.q_next;
}

ElStepResult constrained_el_step(const Lagrangian& L, const VecFn& g, const Vec& level, const Vec& q_prev,
                                 const Vec& q_cur, double h_prev, double h_cur, const IntegratorConfig& cfg,
                                 const std::optional<OneFormField>& theta) {
  const int k = g.out_dim();
  if (k > 0) {
    const Vec drift = g(q_cur) - level;
    if (drift.cwiseAbs().maxCoeff() > 1e-8)
      throw DomainError("constrained_el_step: current point " + format_point(q_cur) + " is off the constraint level");
    if (linalg::numerical_rank(jacobian(g, q_cur, cfg.backend), 1e-10) < k)
      throw ConstructionError("constrained_el_step: dg is rank deficient at " + format_point(q_cur));
  }
  const DiscreteLagrangian DL(L, theta, cfg.quadrature);
  const DelSystem sys{DL, k > 0 ? &g : nullptr, level};
  return solve_del(sys, DL.D2(q_prev, q_cur, h_prev), q_cur, h_cur, extrapolate(q_prev, q_cur, h_prev, h_cur), cfg);
}

VariationalRun integrate_variational(const Lagrangian& L, const std::optional<OneFormField>& theta,
                                     const std::optional<VecFn>& constraint, const Vec& q0, const Vec& qdot0,
                                     double T, const IntegratorConfig& cfg) {
  const int n = L.dim();
  L.base().require(q0);
  const std::vector<double> steps = cfg.step_sequence(T);
  if (steps.size() < 2) throw std::invalid_argument("integrate_variational: need at least 2 steps");
  const DiscreteLagrangian DL(L, theta, cfg.quadrature);
  const bool constrained = constraint && constraint->out_dim() > 0;
  const Vec level = constrained ? (*constraint)(q0) : Vec();
  const DelSystem sys{DL, constrained ? &*constraint : nullptr, level};

  Vec p0 = fiber_derivative(L, q0, qdot0);
  if (theta) p0 += (*theta)(q0);

  VariationalRun run;
  std::vector<double> residuals;
  std::vector<Vec> momenta;
  run.positions.push_back(q0);
  momenta.push_back(p0);
  ElStepResult first = solve_del(sys, p0, q0, steps[0], q0 + steps[0] * qdot0, cfg);
  run.positions.push_back(first.q_next);
  run.multipliers.push_back(first.lambda);
  residuals.push_back(first.residual);
  run.trajectory.newton_iterations += first.iterations;
  for (std::size_t s = 1; s < steps.size(); ++s) {
    const Vec& q_prev = run.positions[s - 1];
    const Vec& q_cur = run.positions[s];
    const Vec incoming = DL.D2(q_prev, q_cur, steps[s - 1]);
    momenta.push_back(incoming);
    ElStepResult r = solve_del(sys, incoming, q_cur, steps[s], extrapolate(q_prev, q_cur, steps[s - 1], steps[s]), cfg);
    run.trajectory.newton_iterations += r.iterations;
    residuals.push_back(r.residual);
    run.multipliers.push_back(r.lambda);
    run.positions.push_back(std::move(r.q_next));
  }
  const std::size_t N = steps.size();
  momenta.push_back(DL.D2(run.positions[N - 1], run.positions[N], steps[N - 1]));
  residuals.push_back(0.0);

  std::vector<double> times(1, 0.0);
  for (double h : steps) times.push_back(times.back() + h);
  const std::vector<Vec> vel = time_derivative(times, run.positions);
  for (std::size_t k = 0; k <= N; ++k) {
    StepDiagnostics diag;
    const Vec lv = fiber_derivative(L, run.positions[k], vel[k]);
    diag.H_value = lv.dot(vel[k]) - L(run.positions[k], vel[k]);
    diag.membership_residual = residuals[k];
    Vec state(2 * n);
    state << run.positions[k], momenta[k];
    run.trajectory.times.push_back(times[k]);
    run.trajectory.states.push_back(std::move(state));
    run.trajectory.diagnostics.push_back(std::move(diag));
    if (constrained) {
      run.max_constraint_drift =
          std::max(run.max_constraint_drift, ((*constraint)(run.positions[k]) - level).cwiseAbs().maxCoeff());
    }
  }
  return run;
}

DiscretePath make_path(DiscreteFunctional functional, const Vec& q_start, const Vec& q_end, double T, int N) {
  if (N < 2) throw std::invalid_argument("make_path: need N >= 2 steps (3 nodes)");
  if (!(T > 0.0)) throw std::invalid_argument("make_path: T must be > 0");
  DiscretePath path{{}, {}, {}, std::move(functional)};
  for (int k = 0; k <= N; ++k) {
    const double s = static_cast<double>(k) / N;
    path.times.push_back(T * s);
    path.nodes.push_back((1.0 - s) * q_start + s * q_end);
  }
  return path;
}

namespace {

int functional_dim(const DiscreteFunctional& f) {
  return std::visit([](const auto& fn) {
    if constexpr (std::is_same_v<std::decay_t<decltype(fn)>, Theorem1Functional>) {
      return fn.D.dim();
    } else {
      return fn.L.dim();
    }
  }, f);
}

const VecFn* functional_constraint(const DiscreteFunctional& f) {
  if (const auto* ils = std::get_if<IlsFunctional>(&f)) {
    if (ils->constraint && ils->constraint->out_dim() > 0) return &*ils->constraint;
  }
  return nullptr;
}

struct Theorem1Pieces {
  Vec point;
  Mat rho;
  Vec velocity;
  Vec zeta;
};

Theorem1Pieces theorem1_pieces(const Theorem1Functional& f, const Vec& a, const Vec& b, double h) {
  Theorem1Pieces p;
  p.point = f.quadrature == Quadrature::left ? a : Vec(0.5 * (a + b));
  p.rho = point_frame(f.D, p.point).Bv();
  p.velocity = (b - a) / h;
  p.zeta = linalg::min_norm_solve(p.rho, p.velocity);
  return p;
}

double theorem1_value(const Theorem1Functional& f, const Vec& a, const Vec& b, double h) {
  const Theorem1Pieces p = theorem1_pieces(f, a, b, h);
  const PointFrame F{p.point, f.D.frame_matrix(p.point)};
  const Vec theta = F.Bv().transpose() * f.tau.alpha(p.point) + F.Ba().transpose() * f.tau.X(p.point);
  return h * (0.5 * theta.dot(p.zeta) + f.H(p.point));
}

// Orthonormal basis of the anchor image at q (identity when the anchor is onto).
Mat anchor_directions(const DiscretePath& path, const Vec& q) {
  const auto* t1 = std::get_if<Theorem1Functional>(&path.functional);
  const int n = static_cast<int>(q.size());
  if (!t1) return Mat::Identity(n, n);
  const Mat rho = point_frame(t1->D, q).Bv();
  if (linalg::numerical_rank(rho) == n) return Mat::Identity(n, n);
  return linalg::range_basis(rho);
}

void check_leaf_solvability(const DiscretePath& path) {
  const auto* t1 = std::get_if<Theorem1Functional>(&path.functional);
  if (!t1) return;
  for (std::size_t k = 0; k + 1 < path.nodes.size(); ++k) {
    const double h = path.times[k + 1] - path.times[k];
    const Theorem1Pieces p = theorem1_pieces(*t1, path.nodes[k], path.nodes[k + 1], h);
    const double res = (p.rho * p.zeta - p.velocity).norm();
    if (res > 1e-8 * (1.0 + p.velocity.norm())) {
      std::ostringstream os;
      os << "dvp_solve: discrete velocity between " << format_point(path.nodes[k]) << " and "
         << format_point(path.nodes[k + 1]) << " is not in the anchor image (residual " << res
         << "); endpoints lie on different leaves";
      throw LeafMismatchError(os.str());
    }
  }
}

Mat summand_hessian(const DiscreteFunctional& f, const Vec& a, const Vec& b, double h, const DiffBackend& backend) {
  const int n = static_cast<int>(a.size());
  Vec z(2 * n);
  z << a, b;
  const VecFn grad(2 * n, 2 * n, [&](const Vec& w) {
    return discrete_summand_gradient(f, w.head(n), w.tail(n), h, backend);
  });
  const bool fd_gradient = std::holds_alternative<Theorem1Functional>(f);
  Mat H = jacobian(grad, z, DiffBackend::central(fd_gradient ? 1e-5 : 1e-6));
  return 0.5 * (H + H.transpose());
}

Vec interior_gradient(const DiscretePath& path, int k, const DiffBackend& backend) {
  const int n = static_cast<int>(path.nodes[k].size());
  const double h_prev = path.times[k] - path.times[k - 1];
  const double h_next = path.times[k + 1] - path.times[k];
  return discrete_summand_gradient(path.functional, path.nodes[k - 1], path.nodes[k], h_prev, backend).tail(n) +
         discrete_summand_gradient(path.functional, path.nodes[k], path.nodes[k + 1], h_next, backend).head(n);
}

// Newton on the interior nodes; returns the iteration count.
int newton_solve(DiscretePath& path, const IntegratorConfig& cfg) {
  const int N = static_cast<int>(path.nodes.size()) - 1;
  const int n = static_cast<int>(path.nodes[0].size());
  const VecFn* g = functional_constraint(path.functional);
  const int kc = g ? g->out_dim() : 0;
  const Vec level = g ? (*g)(path.nodes[0]) : Vec();

  std::vector<Mat> U(N + 1);
  std::vector<int> offset(N + 1, 0);
  int total = 0;
  for (int k = 1; k < N; ++k) {
    U[k] = anchor_directions(path, path.nodes[k]);
    offset[k] = total;
    total += static_cast<int>(U[k].cols()) + kc;
  }
  std::vector<Vec> lambda(N + 1, Vec::Zero(kc));
  std::vector<Vec> base = path.nodes;

  auto residual = [&](const std::vector<Vec>& nodes, const std::vector<Vec>& lam) {
    DiscretePath trial = path;
    trial.nodes = nodes;
    Vec R(total);
    for (int k = 1; k < N; ++k) {
      Vec grad = interior_gradient(trial, k, cfg.backend);
      const int d = static_cast<int>(U[k].cols());
      if (kc > 0) grad += jacobian(*g, nodes[k], cfg.backend).transpose() * lam[k];
      R.segment(offset[k], d) = U[k].transpose() * grad;
      if (kc > 0) R.segment(offset[k] + d, kc) = (*g)(nodes[k]) - level;
    }
    return R;
  };

  std::vector<Vec> nodes = path.nodes;
  Vec R = residual(nodes, lambda);
  for (int it = 0; it <= cfg.newton_max_iter; ++it) {
    if (!R.allFinite()) break;
    if (R.size() == 0 || R.cwiseAbs().maxCoeff() <= cfg.newton_tol) {
      path.nodes = nodes;
      path.multipliers.assign(lambda.begin(), lambda.end());
      return it;
    }
    if (it == cfg.newton_max_iter) break;

    std::vector<Eigen::Triplet<double>> trip;
    auto add_block = [&](int row, int col, const Mat& M) {
      for (int i = 0; i < M.rows(); ++i)
        for (int j = 0; j < M.cols(); ++j)
          if (M(i, j) != 0.0) trip.emplace_back(row + i, col + j, M(i, j));
    };
    for (int s = 0; s < N; ++s) {
      const Mat H = summand_hessian(path.functional, nodes[s], nodes[s + 1], path.times[s + 1] - path.times[s],
                                    cfg.backend);
      // Summand s couples nodes s (a) and s + 1 (b).
      const int ka = s, kb = s + 1;
      const bool a_free = ka >= 1, b_free = kb <= N - 1;
      if (a_free) add_block(offset[ka], offset[ka], U[ka].transpose() * H.topLeftCorner(n, n) * U[ka]);
      if (b_free) add_block(offset[kb], offset[kb], U[kb].transpose() * H.bottomRightCorner(n, n) * U[kb]);
      if (a_free && b_free) {
        add_block(offset[ka], offset[kb], U[ka].transpose() * H.topRightCorner(n, n) * U[kb]);
        add_block(offset[kb], offset[ka], U[kb].transpose() * H.bottomLeftCorner(n, n) * U[ka]);
      }
    }
    if (kc > 0) {
      for (int k = 1; k < N; ++k) {
        const int d = static_cast<int>(U[k].cols());
        const Mat dg = jacobian(*g, nodes[k], cfg.backend);
        const VecFn weighted(n, n, [&, k](const Vec& q) {
          return Vec(jacobian(*g, q, cfg.backend).transpose() * lambda[k]);
        });
        add_block(offset[k], offset[k], U[k].transpose() * jacobian(weighted, nodes[k], DiffBackend::central()) * U[k]);
        add_block(offset[k], offset[k] + d, U[k].transpose() * dg.transpose());
        add_block(offset[k] + d, offset[k], dg * U[k]);
      }
    }
    Eigen::SparseMatrix<double> J(total, total);
    J.setFromTriplets(trip.begin(), trip.end());
    J.makeCompressed();
    Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
    lu.compute(J);
    if (lu.info() != Eigen::Success) break;
    const Vec step = lu.solve(-R);
    if (lu.info() != Eigen::Success || !step.allFinite()) break;

    // Backtracking on the residual norm.
    double alpha = 1.0;
    const double r0 = R.norm();
    bool accepted = false;
    for (int ls = 0; ls < 12; ++ls, alpha *= 0.5) {
      std::vector<Vec> trial_nodes = nodes;
      std::vector<Vec> trial_lambda = lambda;
      for (int k = 1; k < N; ++k) {
        const int d = static_cast<int>(U[k].cols());
        trial_nodes[k] = nodes[k] + alpha * U[k] * step.segment(offset[k], d);
        if (kc > 0) trial_lambda[k] = lambda[k] + alpha * step.segment(offset[k] + d, kc);
      }
      Vec trial_R;
      try {
        trial_R = residual(trial_nodes, trial_lambda);
      } catch (const DomainError&) {
        continue;
      }
      if (trial_R.allFinite() && (trial_R.norm() < r0 || ls == 11)) {
        nodes = std::move(trial_nodes);
        lambda = std::move(trial_lambda);
        R = std::move(trial_R);
        accepted = true;
        break;
      }
    }
    if (!accepted) break;
  }
  throw ConvergenceError("dvp_solve: Newton/KKT iteration did not converge (residual " +
                         std::to_string(R.size() ? R.cwiseAbs().maxCoeff() : 0.0) + ")");
}

DiscretePath coarsen(const DiscretePath& path) {
  const int N = path.node_count() - 1;
  DiscretePath coarse = path;
  coarse.nodes.clear();
  coarse.times.clear();
  for (int k = 0; k <= N; k += 2) {
    coarse.nodes.push_back(path.nodes[k]);
    coarse.times.push_back(path.times[k]);
  }
  if (N % 2 == 1) {
    coarse.nodes.back() = path.nodes.back();
    coarse.times.back() = path.times.back();
  }
  return coarse;
}

void prolong(const DiscretePath& coarse, DiscretePath& fine) {
  std::size_t j = 0;
  for (std::size_t k = 1; k + 1 < fine.nodes.size(); ++k) {
    const double t = fine.times[k];
    while (j + 2 < coarse.times.size() && coarse.times[j + 1] < t) ++j;
    const double s = (t - coarse.times[j]) / (coarse.times[j + 1] - coarse.times[j]);
    fine.nodes[k] = (1.0 - s) * coarse.nodes[j] + s * coarse.nodes[j + 1];
  }
}

DiscretePath solve_with_continuation(const DiscretePath& problem, const IntegratorConfig& cfg, int depth) {
  DiscretePath path = problem;
  try {
    path.newton_iterations += newton_solve(path, cfg);
    path.continuation_levels = depth;
    return path;
  } catch (const ConvergenceError&) {
    if (problem.node_count() - 1 < 8 || depth >= 10) throw;
  } catch (const NumericalError&) {
    if (problem.node_count() - 1 < 8 || depth >= 10) throw;
  }
  const DiscretePath coarse = solve_with_continuation(coarsen(problem), cfg, depth + 1);
  path = problem;
  prolong(coarse, path);
  path.newton_iterations = coarse.newton_iterations;
  path.newton_iterations += newton_solve(path, cfg);
  path.continuation_levels = coarse.continuation_levels;
  return path;
}

}  // namespace

double discrete_summand(const DiscreteFunctional& f, const Vec& a, const Vec& b, double h) {
  if (const auto* t1 = std::get_if<Theorem1Functional>(&f)) return theorem1_value(*t1, a, b, h);
  const auto& ils = std::get<IlsFunctional>(f);
  return DiscreteLagrangian(ils.L, ils.theta, ils.quadrature).value(a, b, h);
}

Vec discrete_summand_gradient(const DiscreteFunctional& f, const Vec& a, const Vec& b, double h,
                              const DiffBackend& backend) {
  if (const auto* ils = std::get_if<IlsFunctional>(&f)) {
    return DiscreteLagrangian(ils->L, ils->theta, ils->quadrature).gradient(a, b, h);
  }
  const auto& t1 = std::get<Theorem1Functional>(f);
  const int n = static_cast<int>(a.size());
  Vec z(2 * n);
  z << a, b;
  const VecFn value(2 * n, 1, [&](const Vec& w) {
    return Vec::Constant(1, theorem1_value(t1, w.head(n), w.tail(n), h));
  });
  (void)backend;
  return jacobian(value, z, DiffBackend::central()).row(0).transpose();
}

DiscretePath dvp_solve(const DiscretePath& problem, const IntegratorConfig& cfg) {
  cfg.validate();
  if (problem.node_count() < 3) throw std::invalid_argument("dvp_solve: need at least 3 nodes");
  if (problem.times.size() != problem.nodes.size())
    throw std::invalid_argument("dvp_solve: times and nodes are not aligned");
  const int n = functional_dim(problem.functional);
  for (const Vec& q : problem.nodes)
    if (q.size() != n) throw std::invalid_argument("dvp_solve: node dimension mismatch");
  check_leaf_solvability(problem);
  DiscretePath out = solve_with_continuation(problem, cfg, 0);
  out.stationarity = stationarity_residual(out, cfg.backend);
  return out;
}

double stationarity_residual(const DiscretePath& path, const DiffBackend& backend) {
  if (path.node_count() < 3) throw std::invalid_argument("stationarity_residual: need at least 3 nodes");
  const VecFn* g = functional_constraint(path.functional);
  double worst = 0.0;
  for (int k = 1; k + 1 < path.node_count(); ++k) {
    Vec grad = interior_gradient(path, k, backend);
    if (std::holds_alternative<Theorem1Functional>(path.functional)) {
      const Mat U = anchor_directions(path, path.nodes[k]);
      if (U.cols() < grad.size()) grad = U * (U.transpose() * grad);
    }
    if (g) {
      const Mat dgT = jacobian(*g, path.nodes[k], backend).transpose();
      grad -= dgT * linalg::min_norm_solve(dgT, grad);
    }
    worst = std::max(worst, grad.cwiseAbs().maxCoeff());
  }
  return worst;
}

}  // namespace diracvar
