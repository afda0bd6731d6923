#include "diracvar/mechanics.hpp"

#include <algorithm>
#include <stdexcept>

#include "diracvar/linalg.hpp"

namespace diracvar {

Chart tangent_chart(const Chart& base) {
  const int n = base.dim();
  std::vector<std::string> names = base.coordinate_names();
  for (int i = 0; i < n; ++i) names.push_back("v_" + base.coordinate_names()[i]);
  Chart::DomainPredicate domain;
  if (base.has_domain_check()) domain = [base, n](const Vec& x) { return base.contains(x.head(n)); };
  return Chart(2 * n, std::move(names), std::move(domain));
}

Lagrangian::Lagrangian(Chart base, ScalarField L, Convexity hint, DiffBackend backend)
    : base_(std::move(base)), L_(std::move(L)), hint_(hint), backend_(backend) {
  if (L_.chart().dim() != 2 * base_.dim())
    throw std::invalid_argument("Lagrangian: L must live on the 2n-dimensional (q, v) chart");
}

double Lagrangian::operator()(const Vec& q, const Vec& v) const {
  Vec x(2 * dim());
  x << q, v;
  return L_(x);
}

Vec Lagrangian::gradient(const Vec& q, const Vec& v) const {
  Vec x(2 * dim());
  x << q, v;
  return diracvar::gradient(L_, x, backend_);
}

Vec fiber_derivative(const Lagrangian& L, const Vec& q, const Vec& v) {
  return L.gradient(q, v).tail(L.dim());
}

Vec CotangentCovector::components() const {
  Vec out(a_q.size() + a_p.size());
  out << a_q, a_p;
  return out;
}

CotangentCovector tulczyjew_beta(const Lagrangian& L, const Vec& q, const Vec& v) {
  const int n = L.dim();
  const Vec g = L.gradient(q, v);
  return {q, g.tail(n), -g.head(n), v};
}

LegendreResult legendre_transform(const Lagrangian& L, const Vec& q, const Vec& p, const NewtonOptions& opts) {
  const int n = L.dim();
  const VecFn momentum(n, n, [&L, q](const Vec& v) { return fiber_derivative(L, q, v); });
  LegendreResult out;
  Vec v = p;
  for (out.iterations = 0; out.iterations <= opts.max_iter; ++out.iterations) {
    const Vec r = momentum(v) - p;
    out.residual = r.cwiseAbs().maxCoeff();
    if (out.residual <= opts.tol * (1.0 + p.cwiseAbs().maxCoeff())) {
      out.converged = true;
      break;
    }
    if (out.iterations == opts.max_iter) break;
    const Mat Hvv = jacobian(momentum, v, DiffBackend::central());
    if (linalg::numerical_rank(Hvv, 1e-10) < n) break;
    v -= Hvv.partialPivLu().solve(r);
    if (!v.allFinite()) break;
  }
  out.v = v;
  out.H_value = p.dot(v) - L(q, v);
  return out;
}

std::vector<Vec> time_derivative(const std::vector<double>& t, const std::vector<Vec>& f) {
  const std::size_t N = t.size();
  if (N < 3 || f.size() != N) throw std::invalid_argument("time_derivative: need at least 3 aligned samples");
  std::vector<Vec> out(N);
  for (std::size_t k = 1; k + 1 < N; ++k) {
    const double h1 = t[k] - t[k - 1];
    const double h2 = t[k + 1] - t[k];
    out[k] = -h2 / (h1 * (h1 + h2)) * f[k - 1] + (h2 - h1) / (h1 * h2) * f[k] + h1 / (h2 * (h1 + h2)) * f[k + 1];
  }
  {
    const double h1 = t[1] - t[0];
    const double h2 = t[2] - t[1];
    out[0] = -(2 * h1 + h2) / (h1 * (h1 + h2)) * f[0] + (h1 + h2) / (h1 * h2) * f[1] - h1 / (h2 * (h1 + h2)) * f[2];
  }
  {
    const double h1 = t[N - 2] - t[N - 3];
    const double h2 = t[N - 1] - t[N - 2];
    out[N - 1] = (2 * h2 + h1) / (h2 * (h1 + h2)) * f[N - 1] - (h1 + h2) / (h1 * h2) * f[N - 2] +
                 h2 / (h1 * (h1 + h2)) * f[N - 3];
  }
  return out;
}

std::vector<double> ils_residual(const DiracStructure& Dlift, const Lagrangian& L, const std::vector<double>& times,
                                 const std::vector<Vec>& q, const std::vector<Vec>& v) {
  const int n = L.dim();
  if (Dlift.dim() != 2 * n) throw std::invalid_argument("ils_residual: lifted structure has wrong dimension");
  if (times.size() < 3 || q.size() != times.size() || v.size() != times.size())
    throw std::invalid_argument("ils_residual: need at least 3 aligned samples");
  std::vector<Vec> z(times.size());
  std::vector<CotangentCovector> betas;
  betas.reserve(times.size());
  for (std::size_t k = 0; k < times.size(); ++k) {
    betas.push_back(tulczyjew_beta(L, q[k], v[k]));
    z[k].resize(2 * n);
    z[k] << betas.back().q, betas.back().p;
  }
  const std::vector<Vec> X = time_derivative(times, z);
  std::vector<double> out;
  out.reserve(times.size());
  for (std::size_t k = 0; k < times.size(); ++k) {
    out.push_back(membership_residual(point_frame(Dlift, z[k]), X[k], betas[k].components()));
  }
  return out;
}

namespace {

// Fornberg weights for derivatives 0..2 at z from the nodes x.
Mat fornberg_weights(double z, const std::vector<double>& x) {
  const int n = static_cast<int>(x.size());
  Mat c = Mat::Zero(n, 3);
  double c1 = 1.0;
  double c4 = x[0] - z;
  c(0, 0) = 1.0;
  for (int i = 1; i < n; ++i) {
    const int mn = std::min(i, 2);
    double c2 = 1.0;
    const double c5 = c4;
    c4 = x[i] - z;
    for (int j = 0; j < i; ++j) {
      const double c3 = x[i] - x[j];
      c2 *= c3;
      if (j == i - 1) {
        for (int k = mn; k >= 1; --k) c(i, k) = c1 * (k * c(i - 1, k - 1) - c5 * c(i - 1, k)) / c2;
        c(i, 0) = -c1 * c5 * c(i - 1, 0) / c2;
      }
      for (int k = mn; k >= 1; --k) c(j, k) = (c4 * c(j, k) - k * c(j, k - 1)) / c3;
      c(j, 0) = c4 * c(j, 0) / c3;
    }
    c1 = c2;
  }
  return c;
}

}  // namespace

std::vector<double> ils_residual(const DiracStructure& Dlift, const Lagrangian& L, const std::vector<double>& times,
                                 const std::vector<Vec>& q) {
  const int n = L.dim();
  const int N = static_cast<int>(times.size());
  if (Dlift.dim() != 2 * n) throw std::invalid_argument("ils_residual: lifted structure has wrong dimension");
  if (N < 3 || static_cast<int>(q.size()) != N) throw std::invalid_argument("ils_residual: need at least 3 aligned samples");
  const int width = std::min(N, 5);
  const VecFn momentum(2 * n, n, [&L, n](const Vec& z) { return fiber_derivative(L, z.head(n), z.tail(n)); });
  std::vector<double> out;
  out.reserve(N);
  for (int k = 0; k < N; ++k) {
    // Local polynomial through the `width` nearest samples.
    const int first = std::clamp(k - width / 2, 0, N - width);
    std::vector<double> local(times.begin() + first, times.begin() + first + width);
    const Mat w = fornberg_weights(times[k], local);
    Vec v = Vec::Zero(n), a = Vec::Zero(n);
    for (int j = 0; j < width; ++j) {
      v += w(j, 1) * q[first + j];
      a += w(j, 2) * q[first + j];
    }
    Vec state(2 * n);
    state << q[k], v;
    const Mat J = jacobian(momentum, state, L.backend());
    const CotangentCovector beta = tulczyjew_beta(L, q[k], v);
    Vec z(2 * n), X(2 * n);
    z << beta.q, beta.p;
    X << v, J.leftCols(n) * v + J.rightCols(n) * a;
    out.push_back(membership_residual(point_frame(Dlift, z), X, beta.components()));
  }
  return out;
}

}  // namespace diracvar
