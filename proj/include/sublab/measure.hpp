#pragma once

#include <cmath>
#include <span>
#include <vector>

#include "sublab/common.hpp"

namespace sublab {

// Weighted point cloud; coordinates are stored row-major, `dim` per point.
struct DiscreteMeasure {
  int dim = 1;
  std::vector<double> coords;
  std::vector<double> weights;

  std::size_t size() const { return weights.size(); }
  std::span<const double> point(std::size_t i) const {
    return {coords.data() + i * static_cast<std::size_t>(dim), static_cast<std::size_t>(dim)};
  }

  static DiscreteMeasure uniform(int dim, std::vector<double> coords) {
    DiscreteMeasure m;
    m.dim = dim;
    m.coords = std::move(coords);
    const std::size_t n = m.coords.size() / static_cast<std::size_t>(dim);
    m.weights.assign(n, 1.0 / static_cast<double>(n));
    return m;
  }

  static DiscreteMeasure dirac(std::span<const double> x) {
    DiscreteMeasure m;
    m.dim = static_cast<int>(x.size());
    m.coords.assign(x.begin(), x.end());
    m.weights = {1.0};
    return m;
  }

  // Throws unless weights are nonnegative, sum to 1 within 1e-12 and coordinates are finite.
  void validate() const {
    if (dim < 1 || coords.size() != weights.size() * static_cast<std::size_t>(dim))
      throw DomainError("DiscreteMeasure: coordinate array does not match weights");
    if (weights.empty()) throw DomainError("DiscreteMeasure: empty measure");
    double s = 0.0;
    for (double w : weights) {
      if (!(w >= 0.0)) throw DomainError("DiscreteMeasure: negative or NaN weight");
      s += w;
    }
    if (std::abs(s - 1.0) > 1e-12) throw DomainError("DiscreteMeasure: weights do not sum to 1");
    for (double c : coords)
      if (!std::isfinite(c)) throw DomainError("DiscreteMeasure: non-finite coordinate");
  }
};

}  // namespace sublab
