#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "sublab/harness.hpp"
#include "sublab/spectral.hpp"
#include "sublab/subordinator.hpp"

using nlohmann::json;
namespace fs = std::filesystem;
using namespace sublab;

namespace {

json membership_json(const Membership& m) { return {{"verdict", to_string(m.verdict)}, {"basis", m.basis}}; }

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DomainError("cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct RunOptions {
  std::string config_path;
  std::string out_dir;
  bool fast = false;
  long long seed = -1;
};

ExperimentConfig load(const RunOptions& o) {
  ExperimentConfig c = o.config_path.empty() ? ExperimentConfig{} : parse_config(read_file(o.config_path));
  if (o.seed >= 0) c.seed = static_cast<std::uint64_t>(o.seed);
  if (o.fast) c = fast_variant(c);
  return c;
}

void add_run_options(CLI::App* sub, RunOptions& o) {
  sub->add_option("--config", o.config_path, "JSON experiment config")->check(CLI::ExistingFile);
  sub->add_option("--out-dir", o.out_dir, "directory for CSV and JSON outputs (default: config \"output\", else .)");
  sub->add_option("--seed", o.seed, "override the config seed");
  sub->add_flag("--fast", o.fast, "reduced replicas and t grid");
}

int emit(const RunOptions& o, const ExperimentConfig& c, const std::string& suffix, const RateTable& table,
         const std::optional<ExponentFit>& fit, const std::vector<VerdictLine>& verdicts, json extra = {}) {
  const fs::path dir = !o.out_dir.empty() ? o.out_dir : !c.output.empty() ? c.output : ".";
  fs::create_directories(dir);
  const fs::path base = dir / (c.name + suffix);
  {
    std::ofstream csv(base.string() + ".csv");
    write_rate_csv(table, csv);
  }
  json summary = json::parse(summary_json(c, table, fit, verdicts));
  if (!extra.is_null()) summary["report"] = extra;
  std::ofstream(base.string() + ".json") << summary.dump(2) << '\n';
  std::cout << summary.dump(2) << '\n';
  for (const VerdictLine& v : verdicts)
    if (v.failed()) return 1;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Subordinated diffusion convergence lab"};
  app.require_subcommand(1);

  std::string family = "stable(0.5)";
  double alpha = 0.5;
  int d = 1;
  double t = 1.0;
  auto* classify_cmd = app.add_subcommand("classify", "class memberships and heat-kernel integrability of a Bernstein function");
  classify_cmd->add_option("--family", family);
  classify_cmd->add_option("--alpha", alpha);
  classify_cmd->add_option("--d", d);
  classify_cmd->add_option("--t", t);

  auto* validate_cmd = app.add_subcommand("validate", "Monte Carlo conformance checks");
  auto* validate_sub = validate_cmd->add_subcommand("subordinator", "E exp(-lambda S_t) against exp(-t B(lambda))");
  validate_cmd->require_subcommand(1);
  double lambda = 1.0;
  std::size_t n = 100000;
  std::uint64_t seed = 1;
  validate_sub->add_option("--family", family);
  validate_sub->add_option("--alpha", alpha);
  validate_sub->add_option("--lambda", lambda);
  validate_sub->add_option("--t", t);
  validate_sub->add_option("-n", n);
  validate_sub->add_option("--seed", seed);

  std::string model_text = "circle";
  double coef = 2.0, tol = 1e-8;
  auto* spectral_cmd = app.add_subcommand("spectral", "limit sum of c/(lambda_i B(lambda_i))");
  spectral_cmd->add_option("--model", model_text);
  spectral_cmd->add_option("--B", family);
  spectral_cmd->add_option("--coef", coef)->check(CLI::IsMember({2.0, 8.0}));
  spectral_cmd->add_option("--tol", tol);

  double horizon = 10.0, obs_dt = 0.01, fine_dt = 1e-3;
  std::string initial = "invariant", format = "csv", out_path;
  auto* simulate_cmd = app.add_subcommand("simulate", "simulate one subordinated path");
  simulate_cmd->add_option("--model", model_text);
  simulate_cmd->add_option("--family", family);
  simulate_cmd->add_option("--t", horizon);
  simulate_cmd->add_option("--obs-dt", obs_dt);
  simulate_cmd->add_option("--fine-dt", fine_dt);
  simulate_cmd->add_option("--initial", initial);
  simulate_cmd->add_option("--seed", seed);
  simulate_cmd->add_option("--format", format)->check(CLI::IsMember({"csv", "binary"}));
  simulate_cmd->add_option("--out", out_path, "output file (stdout for csv when omitted)");

  RunOptions rates_opt, sandwich_opt, lower_opt;
  auto* rates_cmd = app.add_subcommand("rates", "replicated distances and fitted decay exponent");
  add_run_options(rates_cmd, rates_opt);
  auto* sandwich_cmd = app.add_subcommand("sandwich", "t E W2^2 against the spectral limit sums");
  add_run_options(sandwich_cmd, sandwich_opt);
  auto* lower_cmd = app.add_subcommand("lower-bounds", "truncated W1 floor, quantizers and dual certificates");
  add_run_options(lower_cmd, lower_opt);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*classify_cmd) {
      const BernsteinFunction b = make_family(family, alpha);
      const std::vector<double> grid = default_probe_grid();
      const std::pair<int, double> pair{d, t};
      const ClassReport r = classify(b, alpha, grid, std::span(&pair, 1));
      json cond = json::array();
      for (const ConditionCheck& c : r.satisfies_1_2)
        cond.push_back({{"d", c.d}, {"t", c.t}, {"verdict", to_string(c.verdict)}, {"estimate", c.estimate},
                        {"tail_exponent", c.tail_exponent}, {"basis", c.basis}});
      json out{{"family", r.family},
               {"alpha", r.alpha},
               {"in_bold_B", r.in_bold_B},
               {"in_B_upper_alpha", membership_json(r.in_B_upper_alpha)},
               {"in_B_lower_alpha", membership_json(r.in_B_lower_alpha)},
               {"satisfies_1_2", cond},
               {"kappa_lower", r.kappa_lower ? json(*r.kappa_lower) : json(nullptr)},
               {"kappa_upper", r.kappa_upper ? json(*r.kappa_upper) : json(nullptr)}};
      std::cout << out.dump(2) << '\n';
      return 0;
    }
    if (*validate_sub) {
      const BernsteinFunction b = make_family(family, alpha);
      Stream rng(seed);
      const LaplaceCheck r = validate_laplace(b, lambda, t, n, rng);
      const bool ok = std::abs(r.z) <= 4.0;
      std::cout << json{{"mean", r.mean}, {"target", r.target}, {"z", r.z}, {"se", r.stderr_of_mean},
                        {"n", r.n},       {"verdict", ok ? "pass" : "fail"}}
                       .dump(2)
                << '\n';
      return ok ? 0 : 1;
    }
    if (*spectral_cmd) {
      const ModelSpace m = build_model(parse_model_config(model_text));
      const LimitSum s = limit_sum(SpectralData::from_model(m), make_family(family), coef, tol);
      json out{{"sum", s.verdict == SumVerdict::convergent ? json(s.value) : json(nullptr)},
               {"verdict", to_string(s.verdict)},
               {"truncation_index", s.truncation_index},
               {"tail_bound", s.tail_bound}};
      std::cout << out.dump(2) << '\n';
      return 0;
    }
    if (*simulate_cmd) {
      const ModelSpace m = build_model(parse_model_config(model_text));
      const SubordinatedPath p =
          subordinated_path(m, make_family(family), horizon, obs_dt, fine_dt, parse_initial_law(initial), Stream(seed));
      if (format == "csv") {
        if (out_path.empty()) {
          write_path_csv(p, std::cout);
        } else {
          std::ofstream os(out_path);
          write_path_csv(p, os);
        }
      } else {
        if (out_path.empty()) throw DomainError("--out is required for binary output");
        std::ofstream os(out_path, std::ios::binary);
        write_path_binary(p, os);
      }
      return 0;
    }
    if (*rates_cmd) {
      const ExperimentConfig c = load(rates_opt);
      const RatesReport r = rates_report(c);
      const bool fitted = std::none_of(r.verdicts.begin(), r.verdicts.end(), [](const VerdictLine& v) {
        return v.name == "slope" && v.verdict == "skipped";
      });
      json extra{{"theoretical_exponent", r.theory.exponent},
                 {"regime", r.theory.regime},
                 {"log_factor", r.theory.log_factor},
                 {"bracket", {r.bracket.first, r.bracket.second}}};
      return emit(rates_opt, c, "_rates", r.table, fitted ? std::optional(r.fit) : std::nullopt, r.verdicts, extra);
    }
    if (*sandwich_cmd) {
      const ExperimentConfig c = load(sandwich_opt);
      const SandwichReport r = sandwich_check(c);
      std::vector<VerdictLine> v;
      if (r.verdict == "divergent")
        v.push_back({"sandwich", "skipped", "limit sum " + r.sum_verdict});
      else
        v.push_back({"sandwich", r.verdict == "inside" ? "pass" : "fail", r.verdict});
      json extra{{"lower", r.lower}, {"upper", r.upper}, {"t", r.t},
                 {"estimate", r.estimate}, {"se", r.se}, {"verdict", r.verdict}};
      return emit(sandwich_opt, c, "_sandwich", r.table, std::nullopt, v, extra);
    }
    if (*lower_cmd) {
      const ExperimentConfig c = load(lower_opt);
      const LowerBoundReport r = lower_bound_suite(c);
      json extra{{"floor_slope", r.floor_slope},
                 {"quantizer_n", r.quantizer_n},
                 {"quantizer_value", r.quantizer_value},
                 {"quantizer_slope", r.quantizer_slope},
                 {"dual_checked", r.dual_checked},
                 {"dual_violations", r.dual_violations}};
      return emit(lower_opt, c, "_lower_bounds", r.table, r.slope_fit, r.verdicts, extra);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
