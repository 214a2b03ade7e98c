#include "sublab/subordinator.hpp"

#include <algorithm>
#include <cmath>

#include "sublab/quadrature.hpp"
#include "sublab/stats.hpp"

namespace sublab {

double positive_stable(double alpha, Stream& rng) {
  const double u = kPi * rng.uniform();
  const double e = rng.exponential();
  const double a = std::sin(alpha * u) / std::pow(std::sin(u), 1.0 / alpha);
  const double b = std::pow(std::sin((1.0 - alpha) * u) / e, (1.0 - alpha) / alpha);
  return a * b;
}

double sample_increment(const BernsteinFunction& b, double dt, Stream& rng) {
  if (!(dt >= 0.0)) throw DomainError("subordinator increment over a negative interval");
  if (dt == 0.0) return 0.0;
  switch (b.family()) {
    case Family::linear: return dt;
    case Family::stable: {
      const double alpha = b.parameter();
      if (alpha == 1.0) return dt;
      return std::pow(dt, 1.0 / alpha) * positive_stable(alpha, rng);
    }
    case Family::gamma: return rng.gamma(dt);
    case Family::b2: {
      // Compound Poisson, rate 1, Exp(1) jumps: the sum of k jumps is Gamma(k, 1).
      const auto k = rng.poisson(dt);
      return k == 0 ? 0.0 : rng.gamma(static_cast<double>(k));
    }
    case Family::b1: {
      // Compound Poisson, rate 1, Gamma(1 − α, 1) jumps.
      const auto k = rng.poisson(dt);
      return k == 0 ? 0.0 : rng.gamma(static_cast<double>(k) * (1.0 - b.parameter()));
    }
    default: {
      const JumpTable* jumps = b.jump_table();
      if (jumps == nullptr)
        throw Error("cannot sample custom family '" + b.tag() + "' without a Lévy triplet");
      double s = (jumps->drift() + jumps->small_jump_mean()) * dt;
      const auto k = rng.poisson(jumps->rate() * dt);
      for (std::uint64_t i = 0; i < k; ++i) s += jumps->quantile(rng.uniform());
      return s;
    }
  }
}

SubordinatorPath sample_increments(const BernsteinFunction& b, std::span<const double> grid, Stream& rng) {
  if (grid.empty()) throw DomainError("subordinator grid is empty");
  if (grid.front() < 0.0) throw DomainError("subordinator grid must start at a nonnegative time");
  for (std::size_t i = 1; i < grid.size(); ++i)
    if (!(grid[i] > grid[i - 1])) throw DomainError("subordinator grid must be strictly increasing");

  SubordinatorPath path;
  path.family = b.tag();
  path.seed = rng.seed();
  path.grid.assign(grid.begin(), grid.end());
  path.values.resize(grid.size());
  double s = sample_increment(b, grid.front(), rng);
  path.values[0] = s;
  for (std::size_t i = 1; i < grid.size(); ++i) {
    s += sample_increment(b, grid[i] - grid[i - 1], rng);
    path.values[i] = s;
  }
  return path;
}

LaplaceCheck validate_laplace(const BernsteinFunction& b, double lambda, double t, std::size_t n, Stream& rng) {
  if (n < 1000) throw DomainError("validate_laplace needs at least 1000 samples");
  if (!(lambda >= 0.0) || !(t > 0.0)) throw DomainError("validate_laplace needs lambda >= 0 and t > 0");
  RunningStats stats;
  for (std::size_t i = 0; i < n; ++i) stats.add(std::exp(-lambda * sample_increment(b, t, rng)));
  LaplaceCheck c;
  c.n = n;
  c.mean = stats.mean();
  c.target = std::exp(-t * b(lambda));
  c.stderr_of_mean = stats.stderr_of_mean();
  const double diff = c.mean - c.target;
  if (c.stderr_of_mean > 0.0) c.z = diff / c.stderr_of_mean;
  else c.z = std::abs(diff) <= 1e-15 ? 0.0 : std::copysign(HUGE_VAL, diff);
  return c;
}

double fractional_moment(const BernsteinFunction& b, double r, double p) {
  if (!(p > 0.0 && p < 1.0)) throw DomainError("fractional_moment: p must lie in (0, 1)");
  if (!(r >= 0.0 && r <= 1.0)) throw DomainError("fractional_moment: r must lie in [0, 1]");
  if (r == 0.0) return 0.0;
  auto integrand = [&](double u) {
    const double g = -std::expm1(-r * b(u));
    if (!(u > 0.0) || !(g > 0.0)) return 0.0;
    // Combined in log space: near 0 the factors underflow and overflow separately.
    return std::exp(std::log(g) - (p + 1.0) * std::log(u));
  };
  // Split at 1: the origin carries the integrable u^{-p} singularity.
  const quad::Integral head = quad::singular(integrand, 0.0, 1.0, 1e-11);
  const quad::Integral tail = quad::to_infinity(integrand, 1.0, 1e-11);
  const double total = head.value + tail.value;
  const double err = head.error + tail.error;
  if (!std::isfinite(total) || err > 1e-6 * std::max(1.0, std::abs(total)))
    throw ConvergenceError("fractional_moment: quadrature did not converge", err);
  return p / std::tgamma(1.0 - p) * total;
}

}  // namespace sublab
