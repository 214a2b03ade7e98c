#pragma once

#include <cstdint>
#include <iosfwd>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "sublab/bernstein.hpp"
#include "sublab/diffusion.hpp"
#include "sublab/pathlab.hpp"
#include "sublab/transport.hpp"

namespace sublab {

struct ModelConfig {
  std::string kind = "circle";  // circle | torus | interval | euclidean | ou
  int d = 1;
  double side = kTwoPi;  // circumference / torus side
  double length = 1.0;
  double kappa = 1.0;
  double q = 2.0;
};

ModelSpace build_model(const ModelConfig& c);
// "circle", "circle(C)", "torus(d[,side])", "interval(L)", "euclidean(d,kappa,q)", "ou(d,kappa)".
ModelConfig parse_model_config(const std::string& text);

struct ExperimentConfig {
  std::string name = "experiment";
  ModelConfig model;
  std::string family = "stable(0.5)";
  // Class exponent α with B ∈ B^α; NaN derives it from the family's growth.
  double alpha = std::numeric_limits<double>::quiet_NaN();
  std::string initial = "invariant";
  std::vector<double> t_grid{16, 32, 64, 128, 256, 512};
  std::size_t replicas = 200;
  std::string cost = "power(2)";
  std::size_t reference_n = 8192;
  double obs_dt = 0.0;  // ≤ 0: 1e-2·t
  double fine_dt = 1e-3;
  std::uint64_t seed = 1;
  std::string output;  // default output directory for the CLI
  // Bracket and slack settings recorded with every verdict.
  double lower_slack = 0.8;
  double upper_slack = 1.2;
  double se_multiplier = 2.0;
  std::optional<std::pair<double, double>> slope_bracket;

  double obs_dt_for(double t) const { return obs_dt > 0.0 ? obs_dt : 1e-2 * t; }
  // Throws DomainError on inconsistent settings; `for_fit` adds the
  // requirements of a fitted exponent (≥ 30 replicas, ≥ 1.5 decades of t).
  void validate(bool for_fit = false) const;
};

ExperimentConfig parse_config(const std::string& json_text);
std::string to_json(const ExperimentConfig& c);
// Hex digest of the canonical JSON form.
std::string fingerprint(const ExperimentConfig& c);
CostSpec parse_cost(const std::string& text);
double class_exponent(const ExperimentConfig& c, const BernsteinFunction& b);

struct RateRow {
  double t = 0.0;
  double mean = 0.0;  // mean of distance²
  double se = 0.0;
  std::size_t n = 0;
  double mean_plain = 0.0;  // mean of distance
  double se_plain = 0.0;
  bool failed = false;
  std::string error;
};

struct RateTable {
  std::vector<RateRow> rows;
  std::string fingerprint;
  std::uint64_t seed = 0;
  std::string route;
  std::string bias_note;
};

// Replica r of row j uses Stream(seed, j·2^20 + r); rows are independent.
RateTable run_experiment(const ExperimentConfig& c);

// Stream used for replica `r` of row `row`.
Stream replica_stream(const ExperimentConfig& c, std::size_t row, std::size_t r);

enum class Quantity { squared, plain };

struct ExponentFit {
  double slope = 0.0;
  double stderr_slope = 0.0;
  double intercept = 0.0;
  std::size_t rows = 0;
  std::vector<double> residuals;
  double chi2 = 0.0;
  // log(mean) = a + b log t + log log(1 + t) fitted as the alternative.
  double slope_log_model = 0.0;
  double aic_power = 0.0;
  double aic_log = 0.0;
  std::string preferred;  // "power" or "log"
};

ExponentFit fit_exponent(const RateTable& table, double t_lo, double t_hi, Quantity q = Quantity::squared);

struct TheoreticalExponent {
  double exponent = 0.0;
  std::string regime;  // subcritical | critical | supercritical
  bool log_factor = false;
};

TheoreticalExponent theoretical_exponent(int d, double q, double alpha);

struct VerdictLine {
  std::string name;
  std::string verdict;  // pass | fail | skipped
  std::string detail;
  bool failed() const { return verdict == "fail"; }
};

struct RatesReport {
  RateTable table;
  ExponentFit fit;
  TheoreticalExponent theory;
  std::pair<double, double> bracket;
  std::vector<VerdictLine> verdicts;
};

// Fitted slope of log mean(distance²) against the theoretical exponent; the
// default bracket is [1.5θ, 0.675θ].
RatesReport rates_report(const ExperimentConfig& c);
RatesReport rates_from_table(const ExperimentConfig& c, RateTable table);

struct SandwichReport {
  double lower = 0.0;
  double upper = 0.0;
  std::string sum_verdict;
  double t = 0.0;
  double estimate = 0.0;  // t·mean(𝕎₂²) at the largest t
  double se = 0.0;
  std::string verdict;  // inside | outside | divergent | failed
  RateTable table;
};

SandwichReport sandwich_check(const ExperimentConfig& c);
SandwichReport sandwich_from_table(const ExperimentConfig& c, RateTable table);

struct LowerBoundReport {
  RateTable table;  // 𝕎̃₁ rows
  ExponentFit slope_fit;
  double floor_slope = 0.0;
  double floor_slope_se = 0.0;
  std::vector<double> quantizer_n;
  std::vector<double> quantizer_value;
  double quantizer_slope = 0.0;
  double quantizer_target = 0.0;
  std::size_t dual_checked = 0;
  std::size_t dual_violations = 0;
  std::vector<VerdictLine> verdicts;
};

// (a) slope of E𝕎̃₁ in [−0.65, −0.35]; (b) slope of t·mean(𝕎̃₁²) over the
// last decade within ±0.25; (c) N-point quantizer slope near −p/d;
// (d) dual certificates never exceed the measured 𝕎̃₁.
LowerBoundReport lower_bound_suite(const ExperimentConfig& c, std::size_t dual_paths = 8);

// Scales replicas and t grids down for quick runs.
ExperimentConfig fast_variant(ExperimentConfig c);

void write_rate_csv(const RateTable& table, std::ostream& os);
std::string summary_json(const ExperimentConfig& c, const RateTable& table, const std::optional<ExponentFit>& fit,
                         const std::vector<VerdictLine>& verdicts);

}  // namespace sublab
