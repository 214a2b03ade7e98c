#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sublab/bernstein.hpp"
#include "sublab/diffusion.hpp"
#include "sublab/measure.hpp"

namespace sublab {

enum class SpectralSource { circle, torus, interval_neumann, ou_hermite };
const char* to_string(SpectralSource s);

// One eigenpair of −L. For periodic sources `k` is a lattice vector and the
// eigenfunction is √2 cos(ω k·x) or √2 sin(ω k·x); for the interval and OU
// sources k[0] is the cosine / Hermite index.
struct Mode {
  double lambda = 0.0;
  std::vector<int> k;
  bool sine = false;
};

// A truncated result together with its certified truncation error.
struct SeriesValue {
  double value = 0.0;
  std::size_t truncation_index = 0;
  double tail_bound = 0.0;
};

// Analytic eigen-data {λ_i, φ_i}, i ≥ 0, sorted by eigenvalue, λ_0 = 0, φ_0 ≡ 1.
class SpectralData {
 public:
  // Materializes at least `modes` eigenpairs (whole eigenspaces are kept together).
  static SpectralData from_model(const ModelSpace& m, std::size_t modes = 256);
  static bool available(const ModelSpace& m);

  SpectralSource source() const { return source_; }
  int dim() const { return dim_; }
  std::size_t size() const { return modes_.size(); }
  const Mode& mode(std::size_t i) const { return modes_.at(i); }
  double eigenvalue(std::size_t i) const { return modes_.at(i).lambda; }
  double phi(std::size_t i, std::span<const double> x) const;
  // Derivatives of φ_i in one-dimensional sources (order 0, 1 or 2).
  double phi_derivative(std::size_t i, double x, int order) const;
  double period() const { return period_; }
  double length() const { return length_; }
  double kappa() const { return kappa_; }

  // p_t(x, y) w.r.t. μ; with `b`, the subordinated kernel with weights e^{−B(λ_i)t}.
  SeriesValue heat_kernel(double t, std::span<const double> x, std::span<const double> y,
                          const BernsteinFunction* b = nullptr, double tol = 1e-10) const;
  // γ(t) = 1 + Σ_{i≥1} e^{−λ_i t}.
  SeriesValue trace_gamma(double t, double tol = 1e-10) const;
  // η^α(ε) = 1 + ∫_ε^1 γ(u) u^α du.
  double eta_alpha(double alpha, double eps) const;

 private:
  SpectralSource source_ = SpectralSource::circle;
  int dim_ = 1;
  double period_ = kTwoPi;
  double length_ = 1.0;
  double kappa_ = 1.0;
  double omega_ = 1.0;  // frequency unit: 2π/period or π/length
  std::vector<Mode> modes_;

  double weight_sum_tail(double t, const BernsteinFunction* b, std::size_t k) const;
};

enum class SumVerdict { convergent, divergent, inconclusive };
const char* to_string(SumVerdict v);

struct LimitSum {
  SumVerdict verdict = SumVerdict::inconclusive;
  double value = 0.0;
  std::size_t truncation_index = 0;
  double tail_bound = 0.0;
  std::string basis;
};

// Σ_{i≥1} c / (λ_i B(λ_i)) with a certified truncation error ≤ tol.
LimitSum limit_sum(const SpectralData& spec, const BernsteinFunction& b, double c, double tol = 1e-8);

struct Estimate {
  double value = 0.0;
  double se = 0.0;  // zero for deterministic routes
  bool finite = true;
  std::string route;
};

enum class DeltaRoute { automatic, spectral, monte_carlo };

struct DeltaOptions {
  DeltaRoute route = DeltaRoute::automatic;
  std::size_t pairs = 100000;
  double fine_dt = 1e-3;
  std::uint64_t seed = 20240601;
};

// δ(ε) = E^μ[ρ(X_0, X_ε)²].
Estimate delta_eps(const ModelSpace& m, double eps, const DeltaOptions& opt = {});

// γ̃(t) = ∫ μ(dx) / μ(B(x, √t)).
Estimate gamma_tilde(const ModelSpace& m, double t);

struct BallFunctionals {
  Estimate gamma_tilde;
  Estimate eta_tilde;
};

// (γ̃(t), η̃^α(ε)) with η̃^α(ε) = 1 + ∫_ε^1 γ̃(u) u^α du.
BallFunctionals ball_functionals(const ModelSpace& m, double t, double alpha, double eps);

// 4 Σ_{i=1}^{I} ξ_i² / (λ_i e^{2λ_i ε}); ξ[0] is ξ_1.
double regularized_bound(std::span<const double> xi, const SpectralData& spec, double eps);

// 4 Σ a_i² / λ_i for the density 1 + Σ a_i φ_i; a[0] is a_1.
double ledoux_bound(std::span<const double> a, const SpectralData& spec);

// Density of ν P_ε w.r.t. the uniform law, at the midpoints of `cells`
// equal cells of a circle. ν must live on the same circle.
std::vector<double> regularized_density_circle(const DiscreteMeasure& nu, double circumference, double eps,
                                               std::size_t cells, double tol = 1e-14);

}  // namespace sublab
