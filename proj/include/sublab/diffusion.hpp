#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sublab/common.hpp"
#include "sublab/rng.hpp"

namespace sublab {

// Normalized 1D density e^{V}/Z on [lo, hi], stored as piecewise-uniform
// cells. Quantiles and the partial moments ∫₀^u Q(v)^k dv are exact for the
// cell model, which makes quantile transport against μ closed-form.
class InvariantTable {
 public:
  InvariantTable(const std::function<double(double)>& log_density, double lo, double hi, std::size_t cells);

  double lo() const { return lo_; }
  double hi() const { return hi_; }
  std::size_t cells() const { return mass_.size(); }
  double log_normalizer() const { return log_z_; }
  double density(double x) const;
  double cdf(double x) const;
  double quantile(double u) const;
  // ∫₀^u Q(v) dv and ∫₀^u Q(v)² dv.
  double partial_first(double u) const;
  double partial_second(double u) const;
  double mean() const { return m1_.back(); }
  double second_moment() const { return m2_.back(); }

 private:
  std::size_t cell_of_u(double u) const;

  double lo_, hi_, h_;
  double log_z_ = 0.0;
  std::vector<double> mass_;
  std::vector<double> cum_;  // cum_[k] = P(X < lo + k h), size cells + 1
  std::vector<double> m1_;
  std::vector<double> m2_;
};

enum class ModelKind { circle, torus, interval, euclidean, ou };
const char* to_string(ModelKind k);

struct DiffusionState {
  Point position;
  double clock = 0.0;
};

struct InvariantSample {
  std::vector<double> coords;  // n × dim, row-major
  int dim = 1;
  bool exact = true;
  std::string method;
};

struct PotentialMoments {
  double grad_sq = 0.0;   // μ(|∇V|²)
  double grad_abs = 0.0;  // μ(|∇V|)
  bool grad_sq_finite = true;
  bool grad_abs_finite = true;
  std::string method;
};

// State space with generator Δ + ∇V·∇ and invariant law μ ∝ e^{V}.
// Immutable; copies share the tabulated invariant law.
class ModelSpace {
 public:
  static ModelSpace circle(double circumference = kTwoPi);
  static ModelSpace torus(int d, double side = kTwoPi);
  // Reflected Brownian motion on [0, length] (V ≡ 0).
  static ModelSpace interval(double length = 1.0);
  // V(x) = −κ|x|^q + U(x); U (with derivative dU) only in d = 1.
  static ModelSpace euclidean(int d, double kappa, double q, std::function<double(double)> U = {},
                              std::function<double(double)> dU = {});
  // V(x) = −κ|x|², so dX = −2κX dt + √2 dW and μ = N(0, I/(2κ)).
  static ModelSpace ou(int d, double kappa);

  ModelKind kind() const { return kind_; }
  int dim() const { return dim_; }
  double circumference() const { return period_; }
  double side() const { return period_; }
  double length() const { return length_; }
  double kappa() const { return kappa_; }
  double q() const { return q_; }
  bool has_perturbation() const { return static_cast<bool>(U_); }
  bool compact() const { return kind_ == ModelKind::circle || kind_ == ModelKind::torus || kind_ == ModelKind::interval; }
  // Periodic coordinates (circle, torus) use geodesic distance.
  bool periodic() const { return kind_ == ModelKind::circle || kind_ == ModelKind::torus; }
  std::string tag() const;

  double distance(std::span<const double> x, std::span<const double> y) const;
  double potential(std::span<const double> x) const;
  void gradient(std::span<const double> x, std::span<double> out) const;
  // Maps a point back into the state space (wrap or fold).
  void project(std::span<double> x) const;
  bool contains(std::span<const double> x) const;
  double max_step() const;
  // Unnormalized invariant density e^{V(x)}.
  double invariant_density(std::span<const double> x) const;
  double log_normalizer() const;
  // Present for one-dimensional non-periodic models.
  const InvariantTable* table() const { return table_.get(); }

 private:
  ModelSpace() = default;

  ModelKind kind_ = ModelKind::circle;
  int dim_ = 1;
  double period_ = kTwoPi;
  double length_ = 1.0;
  double kappa_ = 0.0;
  double q_ = 2.0;
  std::function<double(double)> U_, dU_;
  std::shared_ptr<const InvariantTable> table_;
};

// One Euler–Maruyama step x + ∇V dt + √(2dt) ξ followed by projection.
DiffusionState step(const ModelSpace& m, const DiffusionState& s, double dt, Stream& rng);

// True when advance() draws from the exact transition kernel.
bool has_exact_transition(const ModelSpace& m);

// Moves x from diffusion time `clock` to `clock + h`. Exact kernels are used
// where available; otherwise Euler–Maruyama on the union of the absolute
// fine grid {k·fine_dt} and the endpoint.
void advance(const ModelSpace& m, std::span<double> x, double clock, double h, double fine_dt, Stream& rng);

InvariantSample sample_invariant(const ModelSpace& m, std::size_t n, Stream& rng);

PotentialMoments potential_moments(const ModelSpace& m);

}  // namespace sublab
