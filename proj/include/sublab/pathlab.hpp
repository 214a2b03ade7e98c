#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "sublab/bernstein.hpp"
#include "sublab/diffusion.hpp"
#include "sublab/measure.hpp"
#include "sublab/spectral.hpp"
#include "sublab/subordinator.hpp"

namespace sublab {

// Initial laws: a point, μ itself, or a density h·μ with h ≤ k.
//   restricted_uniform: h = k on the set where the first coordinate lies in
//     its lowest 1/k quantile window (an arc of length C/k on periodic models);
//   tilted: h(x) = 1 + a cos(2π F(x₁)), a = min(k − 1, 1), F the CDF of the
//     first coordinate under μ.
// Densities need a product-form μ (everything but euclidean with d ≥ 2).
struct InitialLaw {
  enum class Kind { point, invariant, restricted_uniform, tilted };
  Kind kind = Kind::invariant;
  Point x0;
  double k = 2.0;

  static InitialLaw point(Point x) { return {Kind::point, std::move(x), 1.0}; }
  static InitialLaw invariant() { return {Kind::invariant, {}, 1.0}; }
  static InitialLaw restricted_uniform(double k) { return {Kind::restricted_uniform, {}, k}; }
  static InitialLaw tilted(double k) { return {Kind::tilted, {}, k}; }
};

const char* to_string(InitialLaw::Kind k);
InitialLaw parse_initial_law(const std::string& text);

Point sample_initial(const ModelSpace& m, const InitialLaw& law, Stream& rng);

// X_{S_t} read on the observation grid t_j = j·obs_dt.
struct SubordinatedPath {
  std::vector<double> obs_times;
  SubordinatorPath sub_path;
  int dim = 1;
  std::vector<double> coords;  // (number of obs times) × dim, row-major
  std::string model;

  std::size_t size() const { return obs_times.size(); }
  std::span<const double> position(std::size_t j) const {
    return {coords.data() + j * static_cast<std::size_t>(dim), static_cast<std::size_t>(dim)};
  }
  double horizon() const { return obs_times.back(); }
};

// The subordinator, the diffusion and the initial draw use independent child
// streams of `rng`.
SubordinatedPath subordinated_path(const ModelSpace& m, const BernsteinFunction& b, double horizon, double obs_dt,
                                   double fine_dt, const InitialLaw& initial, const Stream& rng);

// μ_t = (1/t)∫₀^t δ_{X_s} ds with left-endpoint weights Δt_j/t.
DiscreteMeasure empirical_measure(const SubordinatedPath& path, double t);

// Equal weights 1/N at X_{t_i}, t_i = (i − 1)t/N; the t_i must be grid points.
DiscreteMeasure discretized_empirical(const SubordinatedPath& path, double t, std::size_t N);

// ξ_i(t) = (1/t)∫₀^t φ_i(X_s) ds for i = 1..I, with empirical_measure weights.
std::vector<double> eigen_coefficients(const SubordinatedPath& path, const SpectralData& spec, double t,
                                       std::size_t I);

// Text persistence: header line, then one row per observation "t,S_t,x_1,...,x_d".
void write_path_csv(const SubordinatedPath& path, std::ostream& os);
SubordinatedPath read_path_csv(std::istream& is);

// Binary persistence (little-endian): magic "SLPATH01", u32 dim, u64 rows,
// u64 seed, u32 tag length + model tag bytes, u32 family length + family
// bytes, then rows × (t, S_t, x_1..x_d) as f64.
void write_path_binary(const SubordinatedPath& path, std::ostream& os);
SubordinatedPath read_path_binary(std::istream& is);

}  // namespace sublab
