#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "sublab/common.hpp"

namespace sublab {

enum class Family { linear, stable, b1, b2, gamma, custom };

const char* to_string(Family f);

// Drift and Lévy density of a subordinator. Jumps above `cutoff` are
// sampled as a compound Poisson process; jumps below it are replaced by
// their mean, which costs O(∫₀^cutoff x² ν(dx)) in distribution.
struct LevyTriplet {
  double drift = 0.0;
  std::function<double(double)> density;
  double cutoff = 1e-4;
};

// Inverse-CDF table of the normalized jump law restricted to (cutoff, ∞).
class JumpTable {
 public:
  JumpTable(const LevyTriplet& triplet);
  double rate() const { return rate_; }
  double small_jump_mean() const { return small_jump_mean_; }
  double drift() const { return drift_; }
  double quantile(double u) const;

 private:
  double rate_ = 0.0;
  double small_jump_mean_ = 0.0;
  double drift_ = 0.0;
  std::vector<double> x_;
  std::vector<double> cdf_;
};

// Laplace exponent of a subordinator. Immutable; copies share state.
class BernsteinFunction {
 public:
  // Leading behaviour B(λ) ~ c λ^exponent (log λ)^log_power as λ → ∞.
  struct Asymptotics {
    double exponent = 0.0;
    int log_power = 0;
  };

  static BernsteinFunction linear();
  static BernsteinFunction stable(double alpha);
  static BernsteinFunction b1(double alpha);
  static BernsteinFunction b2();
  static BernsteinFunction gamma();
  // `eval` is trusted to be a Bernstein function; no validity proof is attempted.
  static BernsteinFunction custom(std::string name, std::function<double(double)> eval,
                                  std::optional<LevyTriplet> triplet = std::nullopt,
                                  std::optional<double> derivative_at_zero = std::nullopt);
  // B(λ) = bλ + ∫(1 − e^{−λx}) ν(dx), evaluated by quadrature.
  static BernsteinFunction from_levy(std::string name, LevyTriplet triplet);

  double operator()(double lambda) const;
  double derivative(double lambda) const;

  Family family() const { return family_; }
  // Family parameter (α for stable and b1); NaN otherwise.
  double parameter() const { return param_; }
  std::string tag() const;
  std::optional<double> derivative_at_zero() const;
  const std::optional<LevyTriplet>& levy_triplet() const { return triplet_; }
  const JumpTable* jump_table() const { return jumps_.get(); }
  std::optional<Asymptotics> asymptotics() const;

 private:
  BernsteinFunction() = default;

  Family family_ = Family::linear;
  double param_ = 0.0;
  std::string name_;
  std::shared_ptr<const std::function<double(double)>> eval_;
  std::optional<LevyTriplet> triplet_;
  std::shared_ptr<const JumpTable> jumps_;
  std::optional<double> derivative_at_zero_;
};

// Parses "linear", "stable", "b1", "b2", "gamma", optionally with an inline
// parameter such as "stable(0.5)"; `alpha` is used when none is inline.
BernsteinFunction make_family(std::string_view tag, double alpha = 0.5);

struct RatioWitness {
  std::vector<double> lambdas;
  std::vector<double> ratios;
  double tail_slope = 0.0;
};

struct Membership {
  Verdict verdict = Verdict::inconclusive;
  RatioWitness witness;
  // "grid" when decided by the tail window, "asymptotics" when a built-in
  // family's closed form settled an ambiguous window.
  std::string basis;
};

enum class Integrability { finite, infinite, inconclusive };
const char* to_string(Integrability i);

struct ConditionCheck {
  Integrability verdict = Integrability::inconclusive;
  int d = 1;
  double t = 1.0;
  double estimate = 0.0;       // ∫₁^∞ r^{d/2−1} e^{−tB(r)} dr when finite
  double tail_exponent = 0.0;  // d log(integrand)/d log r at the end of the probe range
  std::string basis;
};

struct ClassReport {
  std::string family;
  double alpha = 0.0;
  bool in_bold_B = false;
  Membership in_B_upper_alpha;  // liminf B(λ)/λ^α > 0
  Membership in_B_lower_alpha;  // limsup B(λ)/λ^α < ∞
  std::vector<ConditionCheck> satisfies_1_2;
  std::optional<double> kappa_lower;
  std::optional<double> kappa_upper;
};

// 1e-2 … 1e10, 25 points per decade.
std::vector<double> default_probe_grid();

ClassReport classify(const BernsteinFunction& b, double alpha, std::span<const double> probe_grid,
                     std::span<const std::pair<int, double>> condition_pairs = {});

ConditionCheck check_condition_1_2(const BernsteinFunction& b, int d, double t);

struct BoundConstants {
  std::optional<double> kappa_lower;  // min_grid B(t)/(t ∧ t^α)
  std::optional<double> kappa_upper;  // max_grid B(t)/t^α
};

// Throws when neither membership needed for a constant holds.
BoundConstants bound_constants(const BernsteinFunction& b, double alpha, std::span<const double> grid);

}  // namespace sublab
