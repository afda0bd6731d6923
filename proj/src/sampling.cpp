#include "diracvar/sampling.hpp"

#include <array>
#include <random>
#include <stdexcept>

namespace diracvar {

namespace {

constexpr std::array<int, 12> kPrimes{2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37};

double radical_inverse(long index, int base) {
  double result = 0.0;
  double f = 1.0 / base;
  while (index > 0) {
    result += f * static_cast<double>(index % base);
    index /= base;
    f /= base;
  }
  return result;
}

}  // namespace

std::vector<Vec> halton_samples(const Box& box, int count, int skip, const Chart* chart) {
  const int n = box.dim();
  if (n > static_cast<int>(kPrimes.size())) throw std::invalid_argument("halton_samples: dimension too large");
  std::vector<Vec> out;
  out.reserve(count);
  // Index 0 is the box corner; start at 1.
  long index = 1 + skip;
  const long limit = index + 1000L * (count + 1);
  while (static_cast<int>(out.size()) < count && index < limit) {
    Vec x(n);
    for (int k = 0; k < n; ++k) {
      x(k) = box.lower(k) + (box.upper(k) - box.lower(k)) * radical_inverse(index, kPrimes[k]);
    }
    ++index;
    if (chart && !chart->contains(x)) continue;
    out.push_back(std::move(x));
  }
  if (static_cast<int>(out.size()) < count) throw std::runtime_error("halton_samples: domain rejects the box");
  return out;
}

std::vector<Vec> random_samples(const Box& box, int count, unsigned seed, const Chart* chart) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<Vec> out;
  int attempts = 0;
  while (static_cast<int>(out.size()) < count && attempts < 1000 * (count + 1)) {
    ++attempts;
    Vec x(box.dim());
    for (int k = 0; k < box.dim(); ++k) x(k) = box.lower(k) + (box.upper(k) - box.lower(k)) * unit(rng);
    if (chart && !chart->contains(x)) continue;
    out.push_back(std::move(x));
  }
  if (static_cast<int>(out.size()) < count) throw std::runtime_error("random_samples: domain rejects the box");
  return out;
}

}  // namespace diracvar
