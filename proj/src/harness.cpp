#include "sublab/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <sstream>

#include "json.hpp"
#include "sublab/parallel.hpp"
#include "sublab/spectral.hpp"
#include "sublab/stats.hpp"

namespace sublab {

using nlohmann::json;

ModelSpace build_model(const ModelConfig& c) {
  if (c.kind == "circle") return ModelSpace::circle(c.side);
  if (c.kind == "torus") return ModelSpace::torus(c.d, c.side);
  if (c.kind == "interval") return ModelSpace::interval(c.length);
  if (c.kind == "euclidean") return ModelSpace::euclidean(c.d, c.kappa, c.q);
  if (c.kind == "ou") return ModelSpace::ou(c.d, c.kappa);
  throw DomainError("unknown model kind: " + c.kind);
}

ModelConfig parse_model_config(const std::string& text) {
  ModelConfig c;
  const auto open = text.find('(');
  c.kind = text.substr(0, open);
  std::vector<double> args;
  if (open != std::string::npos) {
    if (text.back() != ')') throw DomainError("malformed model: " + text);
    std::stringstream ss(text.substr(open + 1, text.size() - open - 2));
    for (std::string item; std::getline(ss, item, ',');) args.push_back(std::stod(item));
  }
  const auto need = [&](std::size_t lo, std::size_t hi) {
    if (args.size() < lo || args.size() > hi) throw DomainError("wrong number of model arguments: " + text);
  };
  if (c.kind == "circle") {
    need(0, 1);
    if (!args.empty()) c.side = args[0];
  } else if (c.kind == "torus") {
    need(1, 2);
    c.d = static_cast<int>(args[0]);
    if (args.size() > 1) c.side = args[1];
  } else if (c.kind == "interval") {
    need(0, 1);
    if (!args.empty()) c.length = args[0];
  } else if (c.kind == "euclidean") {
    need(3, 3);
    c.d = static_cast<int>(args[0]);
    c.kappa = args[1];
    c.q = args[2];
  } else if (c.kind == "ou") {
    need(1, 2);
    c.d = static_cast<int>(args[0]);
    if (args.size() > 1) c.kappa = args[1];
  } else {
    throw DomainError("unknown model kind: " + c.kind);
  }
  return c;
}

CostSpec parse_cost(const std::string& text) {
  const auto open = text.find('('), close = text.rfind(')');
  if (open == std::string::npos || close != text.size() - 1) throw DomainError("malformed cost: " + text);
  const std::string name = text.substr(0, open);
  const double v = std::stod(text.substr(open + 1, close - open - 1));
  if (name == "power") return CostSpec::power(v);
  if (name == "truncated") return CostSpec::truncated(v);
  if (name == "capped_square") return CostSpec::capped_square(v);
  throw DomainError("unknown cost: " + text);
}

double class_exponent(const ExperimentConfig& c, const BernsteinFunction& b) {
  if (!std::isnan(c.alpha)) return c.alpha;
  const auto a = b.asymptotics();
  if (!a) throw DomainError("class exponent of '" + b.tag() + "' is unknown; set alpha in the config");
  return std::clamp(a->exponent, 0.0, 1.0);
}

void ExperimentConfig::validate(bool for_fit) const {
  if (t_grid.empty()) throw DomainError("config: empty t grid");
  for (std::size_t i = 0; i < t_grid.size(); ++i) {
    if (!(t_grid[i] > 0.0)) throw DomainError("config: t values must be positive");
    if (i > 0 && !(t_grid[i] > t_grid[i - 1])) throw DomainError("config: t grid must be increasing");
  }
  if (replicas < 1) throw DomainError("config: replicas must be positive");
  if (!(fine_dt > 0.0)) throw DomainError("config: fine_dt must be positive");
  if (reference_n < 1) throw DomainError("config: reference_n must be positive");
  if (!(lower_slack > 0.0 && upper_slack > 0.0 && se_multiplier >= 0.0)) throw DomainError("config: bad slack settings");
  for (double t : t_grid)
    if (obs_dt_for(t) < fine_dt) throw DomainError("config: obs_dt must be at least fine_dt");
  parse_cost(cost);
  parse_initial_law(initial);
  make_family(family);
  if (for_fit) {
    if (replicas < 30) throw DomainError("config: fitted exponents need at least 30 replicas per t");
    if (std::log10(t_grid.back() / t_grid.front()) < 1.5 - 1e-12)
      throw DomainError("config: fitted exponents need a t grid spanning at least 1.5 decades");
  }
}

namespace {

json model_json(const ModelConfig& m) {
  return {{"kind", m.kind}, {"d", m.d}, {"side", m.side}, {"length", m.length}, {"kappa", m.kappa}, {"q", m.q}};
}

template <class T>
void take(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

}  // namespace

ExperimentConfig parse_config(const std::string& text) {
  const json j = json::parse(text);
  if (!j.is_object()) throw DomainError("config: expected a JSON object");
  static const std::vector<std::string> known{"name",         "model",      "family",      "alpha",  "initial",
                                              "t_grid",       "t_range",    "replicas",    "cost",   "reference_n",
                                              "obs_dt",       "fine_dt",    "seed",        "output", "lower_slack",
                                              "upper_slack",  "se_multiplier", "slope_bracket"};
  for (const auto& [key, _] : j.items())
    if (std::find(known.begin(), known.end(), key) == known.end()) throw DomainError("config: unknown key '" + key + "'");

  ExperimentConfig c;
  take(j, "name", c.name);
  if (j.contains("model")) {
    const json& m = j.at("model");
    if (m.is_string()) {
      c.model = parse_model_config(m.get<std::string>());
    } else {
      take(m, "kind", c.model.kind);
      take(m, "d", c.model.d);
      static const std::vector<std::string> model_keys{"kind", "d", "side", "circumference", "length", "kappa", "q"};
      for (const auto& [key, _] : m.items())
        if (std::find(model_keys.begin(), model_keys.end(), key) == model_keys.end())
          throw DomainError("config: unknown model key '" + key + "'");
      take(m, "side", c.model.side);
      take(m, "circumference", c.model.side);
      take(m, "length", c.model.length);
      take(m, "kappa", c.model.kappa);
      take(m, "q", c.model.q);
    }
  }
  take(j, "family", c.family);
  if (j.contains("alpha") && !j.at("alpha").is_null()) c.alpha = j.at("alpha").get<double>();
  take(j, "initial", c.initial);
  if (j.contains("t_grid")) c.t_grid = j.at("t_grid").get<std::vector<double>>();
  if (j.contains("t_range")) {
    const json& r = j.at("t_range");
    const double lo = r.at("min").get<double>(), hi = r.at("max").get<double>();
    const int points = r.at("points").get<int>();
    if (points < 1 || !(lo > 0.0) || !(hi >= lo)) throw DomainError("config: bad t_range");
    c.t_grid.clear();
    for (int i = 0; i < points; ++i)
      c.t_grid.push_back(points == 1 ? lo : lo * std::pow(hi / lo, static_cast<double>(i) / (points - 1)));
  }
  take(j, "replicas", c.replicas);
  take(j, "cost", c.cost);
  take(j, "reference_n", c.reference_n);
  take(j, "obs_dt", c.obs_dt);
  take(j, "fine_dt", c.fine_dt);
  take(j, "seed", c.seed);
  take(j, "output", c.output);
  take(j, "lower_slack", c.lower_slack);
  take(j, "upper_slack", c.upper_slack);
  take(j, "se_multiplier", c.se_multiplier);
  if (j.contains("slope_bracket") && !j.at("slope_bracket").is_null()) {
    const auto b = j.at("slope_bracket").get<std::vector<double>>();
    if (b.size() != 2 || !(b[0] < b[1])) throw DomainError("config: slope_bracket must be [lo, hi]");
    c.slope_bracket = std::make_pair(b[0], b[1]);
  }
  c.validate();
  return c;
}

std::string to_json(const ExperimentConfig& c) {
  json j{{"name", c.name},
         {"model", model_json(c.model)},
         {"family", c.family},
         {"alpha", std::isnan(c.alpha) ? json(nullptr) : json(c.alpha)},
         {"initial", c.initial},
         {"t_grid", c.t_grid},
         {"replicas", c.replicas},
         {"cost", c.cost},
         {"reference_n", c.reference_n},
         {"obs_dt", c.obs_dt},
         {"fine_dt", c.fine_dt},
         {"seed", c.seed},
         {"output", c.output},
         {"lower_slack", c.lower_slack},
         {"upper_slack", c.upper_slack},
         {"se_multiplier", c.se_multiplier},
         {"slope_bracket", c.slope_bracket ? json{c.slope_bracket->first, c.slope_bracket->second} : json(nullptr)}};
  return j.dump();
}

std::string fingerprint(const ExperimentConfig& c) {
  // FNV-1a over the canonical dump; output and name do not change results.
  ExperimentConfig k = c;
  k.output.clear();
  k.name.clear();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : to_json(k)) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

Stream replica_stream(const ExperimentConfig& c, std::size_t row, std::size_t r) {
  return Stream(c.seed, (static_cast<std::uint64_t>(row) << 20) + r);
}

RateTable run_experiment(const ExperimentConfig& c) {
  c.validate();
  const ModelSpace model = build_model(c.model);
  const BernsteinFunction b = make_family(c.family);
  const InitialLaw initial = parse_initial_law(c.initial);
  const CostSpec cost = parse_cost(c.cost);

  RateTable table;
  table.fingerprint = fingerprint(c);
  table.seed = c.seed;
  const std::size_t rows = c.t_grid.size();
  const std::size_t reps = c.replicas;
  std::vector<double> values(rows * reps, 0.0);
  std::vector<std::string> errors(rows * reps);
  std::vector<std::string> routes(rows), notes(rows);

  parallel_for(rows * reps, [&](std::size_t k) {
    const std::size_t row = k / reps, r = k % reps;
    const double t = c.t_grid[row];
    try {
      const Stream rng = replica_stream(c, row, r);
      const SubordinatedPath path = subordinated_path(model, b, t, c.obs_dt_for(t), c.fine_dt, initial, rng);
      const DiscreteMeasure mu = empirical_measure(path, t);
      Stream ref_rng = rng.split(4);
      const InvariantDistance d = distance_to_invariant(mu, model, cost, c.reference_n, ref_rng);
      values[k] = d.value;
      if (r == 0) {
        routes[row] = d.route;
        notes[row] = d.bias_note;
      }
    } catch (const std::exception& e) {
      errors[k] = e.what();
    }
  });

  for (std::size_t row = 0; row < rows; ++row) {
    RateRow out;
    out.t = c.t_grid[row];
    RunningStats sq, plain;
    for (std::size_t r = 0; r < reps; ++r) {
      const std::size_t k = row * reps + r;
      if (!errors[k].empty()) {
        out.failed = true;
        out.error = errors[k];
        break;
      }
      sq.add(values[k] * values[k]);
      plain.add(values[k]);
    }
    if (!out.failed) {
      out.n = sq.count();
      out.mean = sq.mean();
      out.se = sq.stderr_of_mean();
      out.mean_plain = plain.mean();
      out.se_plain = plain.stderr_of_mean();
      if (table.route.empty()) {
        table.route = routes[row];
        table.bias_note = notes[row];
      }
    }
    table.rows.push_back(out);
  }
  return table;
}

ExponentFit fit_exponent(const RateTable& table, double t_lo, double t_hi, Quantity quantity) {
  std::vector<double> x, y, var;
  for (const RateRow& r : table.rows) {
    if (r.failed || r.t < t_lo || r.t > t_hi) continue;
    const double m = quantity == Quantity::squared ? r.mean : r.mean_plain;
    const double se = quantity == Quantity::squared ? r.se : r.se_plain;
    if (!(m > 0.0)) continue;
    x.push_back(std::log(r.t));
    y.push_back(std::log(m));
    var.push_back((se / m) * (se / m));  // delta method: Var log m ≈ (se/m)²
  }
  if (x.size() < 4) throw DomainError("fit_exponent: need at least 4 usable rows in the window");
  std::vector<double> w(x.size(), 1.0);
  if (std::all_of(var.begin(), var.end(), [](double v) { return v > 0.0; }))
    for (std::size_t i = 0; i < x.size(); ++i) w[i] = 1.0 / var[i];

  const LineFit power = weighted_line_fit(x, y, w);
  ExponentFit fit;
  fit.rows = x.size();
  fit.slope = power.slope;
  fit.intercept = power.intercept;
  fit.chi2 = power.chi2;
  for (std::size_t i = 0; i < x.size(); ++i) fit.residuals.push_back(y[i] - power.intercept - power.slope * x[i]);
  // With fitted (not known) weights the slope SE is rescaled by the residual variance when it exceeds 1.
  const double dof = static_cast<double>(x.size()) - 2.0;
  const double scale = std::all_of(w.begin(), w.end(), [](double v) { return v == 1.0; })
                           ? power.chi2 / dof
                           : std::max(1.0, power.chi2 / dof);
  fit.stderr_slope = power.slope_se * std::sqrt(scale);

  std::vector<double> y_log(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) y_log[i] = y[i] - std::log(std::log1p(std::exp(x[i])));
  const LineFit alt = weighted_line_fit(x, y_log, w);
  fit.slope_log_model = alt.slope;
  fit.aic_power = power.chi2 + 4.0;
  fit.aic_log = alt.chi2 + 4.0;
  fit.preferred = fit.aic_log < fit.aic_power ? "log" : "power";
  return fit;
}

TheoreticalExponent theoretical_exponent(int d, double q, double alpha) {
  if (!(q > 1.0)) throw DomainError("theoretical_exponent: q must exceed 1");
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw DomainError("theoretical_exponent: alpha must lie in [0, 1]");
  const double dd = static_cast<double>(d);
  const double s = 2.0 * (1.0 + alpha) * (q - 1.0) - dd * q;
  if (std::abs(s) <= 1e-12 * std::max(1.0, dd * q)) return {-1.0, "critical", true};
  if (s < 0.0) return {-2.0 * (q - 1.0) / ((dd - 2.0 * alpha) * q + 2.0 * alpha), "subcritical", false};
  return {-1.0, "supercritical", false};
}

namespace {

std::string num(double v) {
  std::ostringstream os;
  os.precision(4);
  os << v;
  return os.str();
}

double t_max_ok(const RateTable& t) {
  double best = 0.0;
  for (const RateRow& r : t.rows)
    if (!r.failed) best = std::max(best, r.t);
  return best;
}

}  // namespace

RatesReport rates_report(const ExperimentConfig& c) { return rates_from_table(c, run_experiment(c)); }

RatesReport rates_from_table(const ExperimentConfig& c, RateTable table) {
  RatesReport rep;
  rep.table = std::move(table);
  const ModelSpace model = build_model(c.model);
  const BernsteinFunction b = make_family(c.family);
  bool have_theory = true;
  if (model.kind() == ModelKind::euclidean || model.kind() == ModelKind::ou) {
    rep.theory = theoretical_exponent(model.dim(), model.kind() == ModelKind::ou ? 2.0 : model.q(), class_exponent(c, b));
  } else if (SpectralData::available(model) &&
             limit_sum(SpectralData::from_model(model), b, 2.0, 1e-6).verdict == SumVerdict::convergent) {
    rep.theory = {-1.0, "compact", false};
  } else {
    have_theory = false;
  }
  for (const RateRow& r : rep.table.rows)
    if (r.failed) rep.verdicts.push_back({"row t=" + num(r.t), "fail", r.error});

  try {
    rep.fit = fit_exponent(rep.table, 0.0, HUGE_VAL);
  } catch (const std::exception& e) {
    rep.verdicts.push_back({"slope", "skipped", e.what()});
    return rep;
  }
  if (c.slope_bracket) {
    rep.bracket = *c.slope_bracket;
  } else if (have_theory) {
    rep.bracket = {1.5 * rep.theory.exponent, 0.675 * rep.theory.exponent};
  } else {
    rep.verdicts.push_back({"slope", "skipped", "no theoretical exponent for this model; set slope_bracket"});
    return rep;
  }
  const bool inside = rep.fit.slope >= rep.bracket.first && rep.fit.slope <= rep.bracket.second;
  rep.verdicts.push_back({"slope", inside ? "pass" : "fail",
                          "slope " + num(rep.fit.slope) + " +- " + num(rep.fit.stderr_slope) + " in [" +
                              num(rep.bracket.first) + ", " + num(rep.bracket.second) + "]"});
  if (rep.theory.log_factor)
    rep.verdicts.push_back({"log model", "pass",
                            "AIC power " + num(rep.fit.aic_power) + ", log " + num(rep.fit.aic_log) + ", preferred " +
                                rep.fit.preferred});
  return rep;
}

SandwichReport sandwich_check(const ExperimentConfig& c) {
  const ModelSpace model = build_model(c.model);
  if (!SpectralData::available(model)) throw DomainError("sandwich_check: model has no explicit spectrum");
  const BernsteinFunction b = make_family(c.family);
  const LimitSum lower = limit_sum(SpectralData::from_model(model), b, 2.0, 1e-6);
  if (lower.verdict != SumVerdict::convergent) {
    SandwichReport rep;
    rep.sum_verdict = to_string(lower.verdict);
    rep.verdict = "divergent";
    return rep;
  }
  return sandwich_from_table(c, run_experiment(c));
}

SandwichReport sandwich_from_table(const ExperimentConfig& c, RateTable table) {
  const ModelSpace model = build_model(c.model);
  const BernsteinFunction b = make_family(c.family);
  const SpectralData spec = SpectralData::from_model(model);
  SandwichReport rep;
  const LimitSum lower = limit_sum(spec, b, 2.0, 1e-6);
  const LimitSum upper = limit_sum(spec, b, 8.0, 1e-6);
  rep.sum_verdict = to_string(lower.verdict);
  rep.table = std::move(table);
  if (lower.verdict != SumVerdict::convergent || upper.verdict != SumVerdict::convergent) {
    rep.verdict = "divergent";
    return rep;
  }
  rep.lower = lower.value;
  rep.upper = upper.value;
  const RateRow* last = nullptr;
  for (const RateRow& r : rep.table.rows)
    if (!r.failed && (!last || r.t > last->t)) last = &r;
  if (!last) {
    rep.verdict = "failed";
    return rep;
  }
  rep.t = last->t;
  rep.estimate = last->t * last->mean;
  rep.se = last->t * last->se;
  const double k = c.se_multiplier;
  const bool inside = rep.estimate - k * rep.se >= c.lower_slack * rep.lower &&
                      rep.estimate + k * rep.se <= c.upper_slack * rep.upper;
  rep.verdict = inside ? "inside" : "outside";
  return rep;
}

LowerBoundReport lower_bound_suite(const ExperimentConfig& c_in, std::size_t dual_paths) {
  ExperimentConfig c = c_in;
  c.cost = "truncated(1)";
  const ModelSpace model = build_model(c.model);
  LowerBoundReport rep;
  rep.table = run_experiment(c);
  for (const RateRow& r : rep.table.rows)
    if (r.failed) rep.verdicts.push_back({"row t=" + num(r.t), "fail", r.error});

  // (a) E𝕎̃₁ decays no faster than t^{-1/2}.
  try {
    rep.slope_fit = fit_exponent(rep.table, 0.0, HUGE_VAL, Quantity::plain);
    const bool ok = rep.slope_fit.slope >= -0.65 && rep.slope_fit.slope <= -0.35;
    rep.verdicts.push_back({"W1~ slope", ok ? "pass" : "fail",
                            "slope " + num(rep.slope_fit.slope) + " +- " + num(rep.slope_fit.stderr_slope) +
                                " in [-0.65, -0.35]"});
  } catch (const std::exception& e) {
    rep.verdicts.push_back({"W1~ slope", "skipped", e.what()});
  }

  // (b) t·mean(𝕎̃₁²) over the last decade: no downward trend.
  {
    const double tmax = t_max_ok(rep.table);
    std::vector<double> x, y, w;
    for (const RateRow& r : rep.table.rows) {
      if (r.failed || r.t < tmax / 10.0 * (1.0 - 1e-12) || !(r.mean > 0.0)) continue;
      x.push_back(std::log(r.t));
      y.push_back(std::log(r.t * r.mean));
      w.push_back(r.se > 0.0 ? (r.mean / r.se) * (r.mean / r.se) : 1.0);
    }
    if (x.size() >= 2) {
      const LineFit f = weighted_line_fit(x, y, w);
      rep.floor_slope = f.slope;
      rep.floor_slope_se = f.slope_se;
      const bool ok = std::abs(f.slope) <= 0.25;
      rep.verdicts.push_back({"t*W1~^2 floor", ok ? "pass" : "fail",
                              "slope " + num(f.slope) + " over t in [" + num(tmax / 10) + ", " + num(tmax) +
                                  "], |slope| <= 0.25"});
    } else {
      rep.verdicts.push_back({"t*W1~^2 floor", "skipped", "fewer than two rows in the last decade"});
    }
  }

  // (c) N-point quantizers of μ.
  if (model.dim() == 1) {
    Stream rng(c.seed, 0xC0FFEE);
    for (double n = 8; n <= 512; n *= 2) {
      const auto N = static_cast<std::size_t>(n);
      DiscreteMeasure q;
      q.dim = 1;
      std::size_t ref = std::min<std::size_t>(4096, 64 * N);
      if (model.kind() == ModelKind::circle) {
        // Quantizer atoms sit on cell midpoints of the wheel grid, so binning is exact.
        ref = 128 * N;
        for (std::size_t k = 0; k < N; ++k)
          q.coords.push_back(model.circumference() * (128.0 * static_cast<double>(k) + 64.5) / static_cast<double>(ref));
      } else {
        for (std::size_t k = 0; k < N; ++k) {
          const double u = (static_cast<double>(k) + 0.5) / n;
          q.coords.push_back(model.kind() == ModelKind::interval ? model.length() * u : model.table()->quantile(u));
        }
      }
      q.weights.assign(N, 1.0 / n);
      rep.quantizer_n.push_back(n);
      rep.quantizer_value.push_back(distance_to_invariant(q, model, CostSpec::truncated(1.0), ref, rng).value);
    }
    std::vector<double> x, y, w(rep.quantizer_n.size(), 1.0);
    for (std::size_t i = 0; i < rep.quantizer_n.size(); ++i) {
      x.push_back(std::log(rep.quantizer_n[i]));
      y.push_back(std::log(rep.quantizer_value[i]));
    }
    rep.quantizer_slope = weighted_line_fit(x, y, w).slope;
    rep.quantizer_target = -1.0;
    const bool ok = std::abs(rep.quantizer_slope - rep.quantizer_target) <= 0.15;
    rep.verdicts.push_back({"quantizer slope", ok ? "pass" : "fail",
                            "slope " + num(rep.quantizer_slope) + " vs -p/d = -1 (+-0.15)"});
  } else {
    rep.verdicts.push_back({"quantizer slope", "skipped", "implemented for one-dimensional models"});
  }

  // (d) Dual certificates on the largest-t paths.
  if (model.kind() == ModelKind::circle && dual_paths > 0) {
    const double cc = model.circumference();
    const double w = 2.0 * kPi / cc;
    TestFunction f{[w](std::span<const double> x) { return 0.5 * std::sin(w * x[0]); },
                   [w](std::span<const double> x, std::span<double> g) { g[0] = 0.5 * w * std::cos(w * x[0]); }};
    const BernsteinFunction b = make_family(c.family);
    const InitialLaw initial = parse_initial_law(c.initial);
    const std::size_t row = c.t_grid.size() - 1;
    const double t = c.t_grid[row];
    const double bias = 0.75 * cc / static_cast<double>(c.reference_n);
    const std::size_t n = std::min(dual_paths, c.replicas);
    std::vector<int> bad(n, 0);
    std::string failure;
    try {
      parallel_for(n, [&](std::size_t r) {
        const Stream rng = replica_stream(c, row, r);
        const SubordinatedPath path = subordinated_path(model, b, t, c.obs_dt_for(t), c.fine_dt, initial, rng);
        Stream ref_rng = rng.split(4);
        const double wt = distance_to_invariant(empirical_measure(path, t), model, CostSpec::truncated(1.0),
                                                c.reference_n, ref_rng)
                              .value;
        const DualLower dl = dual_lower(f, model, path, t);
        if (dl.certified && dl.value > wt + bias + 1e-12) bad[r] = 1;
      });
      rep.dual_checked = n;
      for (int v : bad) rep.dual_violations += static_cast<std::size_t>(v);
      rep.verdicts.push_back({"dual certificate", rep.dual_violations == 0 ? "pass" : "fail",
                              std::to_string(rep.dual_violations) + " of " + std::to_string(n) +
                                  " paths with dual value above the measured W1~"});
    } catch (const std::exception& e) {
      rep.verdicts.push_back({"dual certificate", "fail", e.what()});
    }
  } else {
    rep.verdicts.push_back({"dual certificate", "skipped", "test function provided for the circle only"});
  }
  return rep;
}

ExperimentConfig fast_variant(ExperimentConfig c) {
  c.replicas = std::max<std::size_t>(8, c.replicas / 8);
  if (c.t_grid.size() > 4) c.t_grid.resize(4);
  return c;
}

void write_rate_csv(const RateTable& table, std::ostream& os) {
  os << "t,mean,se,n\n";
  os.precision(10);
  for (const RateRow& r : table.rows) {
    if (r.failed) continue;
    os << r.t << ',' << r.mean << ',' << r.se << ',' << r.n << '\n';
  }
}

std::string summary_json(const ExperimentConfig& c, const RateTable& table, const std::optional<ExponentFit>& fit,
                         const std::vector<VerdictLine>& verdicts) {
  json j;
  j["config_fingerprint"] = table.fingerprint.empty() ? fingerprint(c) : table.fingerprint;
  j["config"] = json::parse(to_json(c));
  j["seed"] = c.seed;
  j["route"] = table.route;
  j["bias_note"] = table.bias_note;
  if (fit) {
    j["fitted_slope"] = fit->slope;
    j["slope_se"] = fit->stderr_slope;
    j["fit_rows"] = fit->rows;
    j["residuals"] = fit->residuals;
    j["aic_power"] = fit->aic_power;
    j["aic_log"] = fit->aic_log;
    j["preferred_model"] = fit->preferred;
  } else {
    j["fitted_slope"] = nullptr;
  }
  json failures = json::array();
  for (const RateRow& r : table.rows)
    if (r.failed) failures.push_back({{"t", r.t}, {"error", r.error}});
  j["failed_rows"] = failures;
  json v = json::array();
  bool ok = true;
  for (const VerdictLine& l : verdicts) {
    v.push_back({{"name", l.name}, {"verdict", l.verdict}, {"detail", l.detail}});
    ok = ok && !l.failed();
  }
  j["verdicts"] = v;
  j["all_pass"] = ok;
  return j.dump(2);
}

}  // namespace sublab
