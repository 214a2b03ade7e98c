#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "sublab/diffusion.hpp"
#include "sublab/measure.hpp"
#include "sublab/pathlab.hpp"
#include "sublab/rng.hpp"

namespace sublab {

enum class CostShape { power, truncated_power, capped_square };
const char* to_string(CostShape s);

// Ground cost c(x, y) = shape(ρ(x, y)). The base distance ρ is Euclidean, or
// geodesic on a flat torus of side `period` in every coordinate when period > 0.
struct CostSpec {
  CostShape shape = CostShape::power;
  double p = 2.0;
  double cap = 1.0;      // n in n ∧ ρ²
  double period = 0.0;   // 0: Euclidean base

  static CostSpec power(double p, double period = 0.0);
  static CostSpec truncated(double p, double period = 0.0);
  static CostSpec capped_square(double n, double period = 0.0);
  // Same shape with the base distance of `m` (geodesic for circle and torus).
  CostSpec on(const ModelSpace& m) const;

  double rho(std::span<const double> x, std::span<const double> y) const;
  double ground(double rho) const;
  double operator()(std::span<const double> x, std::span<const double> y) const { return ground(rho(x, y)); }
  double outer_exponent() const;
  std::string tag() const;
};

enum class MethodKind { exact_lp, quantile_1d, entropic, brute_force };
const char* to_string(MethodKind k);

struct Method {
  MethodKind kind = MethodKind::exact_lp;
  // Entropic only: > 0 is absolute, < 0 is a multiple −eps_reg of the mean
  // cost under the product coupling, 0 picks 1e-3 × that mean cost.
  double eps_reg = 0.0;

  static Method exact_lp() { return {MethodKind::exact_lp, 0.0}; }
  static Method quantile_1d() { return {MethodKind::quantile_1d, 0.0}; }
  static Method entropic(double eps = 0.0) { return {MethodKind::entropic, eps}; }
  static Method brute_force() { return {MethodKind::brute_force, 0.0}; }
};

inline constexpr std::size_t kMaxLpPoints = 4096;

// Optimal transport cost inf_π ∫c dπ (for entropic: ∫c dπ_ε of the regularized plan).
double transport_cost(const DiscreteMeasure& a, const DiscreteMeasure& b, const CostSpec& cost, const Method& method);

// transport_cost raised to the outer exponent.
double distance(const DiscreteMeasure& a, const DiscreteMeasure& b, const CostSpec& cost,
                const Method& method = Method::exact_lp());

struct InvariantDistance {
  double value = 0.0;
  std::string route;
  std::string bias_note;
};

// Distance from `nu` to the invariant law of `m`. Semi-exact quantile routes
// are used for power costs on one-dimensional models and for the truncated
// p = 1 cost on the circle (a gridded μ with reference_n cells); everything
// else goes through a finite reference measure of size reference_n.
InvariantDistance distance_to_invariant(const DiscreteMeasure& nu, const ModelSpace& m, const CostSpec& cost,
                                        std::size_t reference_n, Stream& rng);

// 𝕎₂² between a piecewise-constant density on `cells.size()` equal cells of
// a circle of circumference C and the uniform law. Cell values are densities
// with respect to the uniform law (mean 1).
double circle_cells_w2sq(std::span<const double> cells, double circumference);

// Periodic wheel problem: circle nodes at cell midpoints with supplies m_i
// (Σm = 0), neighbour arcs of length h and a hub reachable at cost ½ from
// every node. Its optimum is the (1 ∧ ρ) transport cost between the two
// gridded measures.
double wheel_transport(std::span<const double> supply, double h);

// Test functions for dual_lower. A gradient is optional; without it the
// Lipschitz check uses finite differences.
struct TestFunction {
  std::function<double(std::span<const double>)> value;
  std::function<void(std::span<const double>, std::span<double>)> gradient;
};

struct DualLower {
  double value = 0.0;
  double mean_under_mu = 0.0;
  double sup_norm = 0.0;
  double lipschitz = 0.0;
  double oscillation = 0.0;
  // value² ≤ 𝕎̃₁(μ_t, μ)² is certified when the oscillation is at most 1.
  bool certified = false;
};

// |(1/t)∫₀^t f(X_s) ds| after checking μ(f) = 0 (to 1e-6), ‖f‖∞ ≤ 1 and ‖∇f‖∞ ≤ 1.
DualLower dual_lower(const TestFunction& f, const ModelSpace& m, const SubordinatedPath& path, double t);

}  // namespace sublab
