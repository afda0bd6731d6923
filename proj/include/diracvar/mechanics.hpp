#pragma once

// Fiber derivative, Tulczyjew's differential, the Legendre transform and
// implicit-Lagrangian residuals in (q, v) / (q, p) coordinates.

#include <vector>

#include "diracvar/dirac.hpp"
#include "diracvar/smoothfield.hpp"

namespace diracvar {

enum class Convexity { strict, degenerate };

/// The chart (q_1..q_n, v_q_1..v_q_n) on TQ.
Chart tangent_chart(const Chart& base);

class Lagrangian {
 public:
  /// `L` lives on the 2n-dimensional (q, v) chart.
  Lagrangian(Chart base, ScalarField L, Convexity hint = Convexity::strict,
             DiffBackend backend = DiffBackend::forward_dual());

  const Chart& base() const { return base_; }
  int dim() const { return base_.dim(); }
  const ScalarField& field() const { return L_; }
  Convexity convexity() const { return hint_; }
  const DiffBackend& backend() const { return backend_; }

  double operator()(const Vec& q, const Vec& v) const;
  /// (dL/dq, dL/dv) stacked.
  Vec gradient(const Vec& q, const Vec& v) const;

 private:
  Chart base_;
  ScalarField L_;
  Convexity hint_;
  DiffBackend backend_;
};

/// p = dL/dv (q, v).
Vec fiber_derivative(const Lagrangian& L, const Vec& q, const Vec& v);

/// An element of T*(T*Q) at (q, p) with components (a_q, a_p).
struct CotangentCovector {
  Vec q;
  Vec p;
  Vec a_q;
  Vec a_p;

  Vec components() const;
};

/// beta(dL) at (q, FL(v)): (a_q, a_p) = (-dL/dq, v).
CotangentCovector tulczyjew_beta(const Lagrangian& L, const Vec& q, const Vec& v);

struct NewtonOptions {
  double tol = 1e-12;
  int max_iter = 50;
};

struct LegendreResult {
  double H_value = 0.0;
  Vec v;
  bool converged = false;
  int iterations = 0;
  double residual = 0.0;
};

/// Newton on FL(q, v) = p starting from v = p. Degenerate Lagrangians or
/// momenta outside the image of FL report converged = false.
LegendreResult legendre_transform(const Lagrangian& L, const Vec& q, const Vec& p, const NewtonOptions& opts = {});

/// d/dt of sampled values on a nonuniform grid: three-point central stencils
/// inside, one-sided second-order stencils at both ends.
std::vector<Vec> time_derivative(const std::vector<double>& times, const std::vector<Vec>& values);

/// Membership residual of (d/dt (q, FL(v)), beta(dL)) in the lifted structure
/// at every sample. Needs at least 3 samples.
std::vector<double> ils_residual(const DiracStructure& Dlift, const Lagrangian& L, const std::vector<double>& times,
                                 const std::vector<Vec>& q, const std::vector<Vec>& v);

/// Same, with velocity and acceleration from local five-point polynomial
/// stencils of the positions and dp/dt by the chain rule through FL.
std::vector<double> ils_residual(const DiracStructure& Dlift, const Lagrangian& L, const std::vector<double>& times,
                                 const std::vector<Vec>& q);

}  // namespace diracvar
