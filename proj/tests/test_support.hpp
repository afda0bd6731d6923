#pragma once

#include <random>
#include <vector>

#include "diracvar/dirac.hpp"
#include "diracvar/sampling.hpp"
#include "diracvar/smoothfield.hpp"

namespace testing_support {

using namespace diracvar;

template <class X>
using S = typename std::decay_t<X>::Scalar;

inline Chart plane() { return Chart(2, {"x", "y"}); }
inline Chart space3() { return Chart(3, {"x", "y", "z"}); }
inline Chart space4() { return Chart(4, {"x", "y", "z", "w"}); }

inline std::vector<Vec> random_points(int dim, int count, unsigned seed, double half_width = 1.5) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> u(-half_width, half_width);
  std::vector<Vec> out;
  for (int i = 0; i < count; ++i) {
    Vec x(dim);
    for (int k = 0; k < dim; ++k) x(k) = u(rng);
    out.push_back(x);
  }
  return out;
}

inline Vec random_vec(int dim, std::mt19937& rng, double half_width = 1.0) {
  std::uniform_real_distribution<double> u(-half_width, half_width);
  Vec x(dim);
  for (int k = 0; k < dim; ++k) x(k) = u(rng);
  return x;
}

inline Vec vec(std::initializer_list<double> v) {
  Vec out(static_cast<int>(v.size()));
  int i = 0;
  for (double d : v) out(i++) = d;
  return out;
}

/// Constant 2-form c * dx^dy on the plane.
inline SkewMatrixField dxdy(double c = 1.0) {
  return make_skew_field(plane(), Variance::covariant, [c](const auto& x) {
    using T = S<decltype(x)>;
    MatT<T> m = MatT<T>::Zero(2, 2);
    m(0, 1) = T(c);
    m(1, 0) = T(-c);
    return m;
  });
}

/// pi^{12} = x^2.
inline SkewMatrixField x2_bivector() {
  return make_skew_field(plane(), Variance::contravariant, [](const auto& x) {
    using T = S<decltype(x)>;
    MatT<T> m = MatT<T>::Zero(2, 2);
    m(0, 1) = x(0) * x(0);
    m(1, 0) = -x(0) * x(0);
    return m;
  });
}

/// pi^{12} = x^2 + y^2, pi^{34} = 1.
inline SkewMatrixField mixed_bivector() {
  return make_skew_field(space4(), Variance::contravariant, [](const auto& x) {
    using T = S<decltype(x)>;
    MatT<T> m = MatT<T>::Zero(4, 4);
    m(0, 1) = x(0) * x(0) + x(1) * x(1);
    m(1, 0) = -m(0, 1);
    m(2, 3) = T(1.0);
    m(3, 2) = T(-1.0);
    return m;
  });
}

/// pi^{ij} = -eps_{ijk} mu_k.
inline SkewMatrixField so3_bivector() {
  return make_skew_field(space3(), Variance::contravariant, [](const auto& x) {
    using T = S<decltype(x)>;
    MatT<T> m = MatT<T>::Zero(3, 3);
    m(0, 1) = -x(2);
    m(1, 0) = x(2);
    m(1, 2) = -x(0);
    m(2, 1) = x(0);
    m(2, 0) = -x(1);
    m(0, 2) = x(1);
    return m;
  });
}

inline VectorField field2(double a, double b) {
  return make_vector_field(plane(), [a, b](const auto& x) {
    using T = S<decltype(x)>;
    VecT<T> v(2);
    v << T(a), T(b);
    return v;
  });
}

inline OneFormField zero_form(const Chart& c) { return OneFormField::zero(c); }

}  // namespace testing_support
