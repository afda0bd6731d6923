#pragma once

#include <vector>

#include "diracvar/smoothfield.hpp"

namespace diracvar {

/// Axis-aligned sampling box.
struct Box {
  Vec lower;
  Vec upper;

  static Box cube(int dim, double half_width) {
    return {Vec::Constant(dim, -half_width), Vec::Constant(dim, half_width)};
  }
  int dim() const { return static_cast<int>(lower.size()); }
};

/// Low-discrepancy (Halton) points in `box`, skipping the first `skip`
/// sequence elements. Points rejected by the chart's domain check are
/// dropped and replaced by later sequence elements.
std::vector<Vec> halton_samples(const Box& box, int count, int skip = 0,
                                const Chart* chart = nullptr);

/// Uniform pseudo-random points in `box` from a seeded generator.
std::vector<Vec> random_samples(const Box& box, int count, unsigned seed,
                                const Chart* chart = nullptr);

}  // namespace diracvar
