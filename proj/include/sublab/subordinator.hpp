#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "sublab/bernstein.hpp"
#include "sublab/rng.hpp"

namespace sublab {

// Sampled trajectory t ↦ S_t on an increasing process-time grid.
// Values are stored (not increments) and are nondecreasing.
struct SubordinatorPath {
  std::vector<double> grid;
  std::vector<double> values;
  std::string family;
  std::uint64_t seed = 0;
};

// One-sided α-stable variate with E exp(−λS) = exp(−λ^α), by the
// exponential/uniform (Kanter) transformation. α ∈ (0, 1).
double positive_stable(double alpha, Stream& rng);

// S_{t+dt} − S_t for the subordinator with Laplace exponent `b`.
double sample_increment(const BernsteinFunction& b, double dt, Stream& rng);

SubordinatorPath sample_increments(const BernsteinFunction& b, std::span<const double> grid, Stream& rng);

struct LaplaceCheck {
  double mean = 0.0;
  double target = 0.0;
  double stderr_of_mean = 0.0;
  double z = 0.0;
  std::size_t n = 0;
};

// Monte Carlo audit of E exp(−λ S_t) = exp(−t B(λ)).
LaplaceCheck validate_laplace(const BernsteinFunction& b, double lambda, double t, std::size_t n, Stream& rng);

// E[(S_r)^p] = p/Γ(1−p) ∫₀^∞ (1 − e^{−r B(u)}) u^{−p−1} du, for r ∈ [0, 1], p ∈ (0, 1).
double fractional_moment(const BernsteinFunction& b, double r, double p);

}  // namespace sublab
