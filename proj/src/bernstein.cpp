#include "sublab/bernstein.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>

#include "sublab/quadrature.hpp"
#include "sublab/stats.hpp"

namespace sublab {

const char* to_string(Family f) {
  switch (f) {
    case Family::linear: return "linear";
    case Family::stable: return "stable";
    case Family::b1: return "b1";
    case Family::b2: return "b2";
    case Family::gamma: return "gamma";
    default: return "custom";
  }
}

const char* to_string(Integrability i) {
  switch (i) {
    case Integrability::finite: return "finite";
    case Integrability::infinite: return "infinite";
    default: return "inconclusive";
  }
}

JumpTable::JumpTable(const LevyTriplet& triplet) : drift_(triplet.drift) {
  if (!triplet.density) throw DomainError("LevyTriplet: missing Lévy density");
  if (!(triplet.cutoff > 0.0)) throw DomainError("LevyTriplet: cutoff must be positive");
  const auto& nu = triplet.density;
  small_jump_mean_ = quad::singular([&](double x) { return x * nu(x); }, 0.0, triplet.cutoff, 1e-10).value;

  constexpr int kPerDecade = 64;
  const double step = std::pow(10.0, 1.0 / kPerDecade);
  x_.push_back(triplet.cutoff);
  cdf_.push_back(0.0);
  double total = 0.0;
  double decade_mass = 0.0;
  int cell = 0;
  while (x_.back() < 1e8) {
    const double lo = x_.back();
    const double hi = lo * step;
    const double m = quad::finite(nu, lo, hi, 1e-10).value;
    total += m;
    decade_mass += m;
    x_.push_back(hi);
    cdf_.push_back(total);
    if (++cell % kPerDecade == 0) {
      if (hi > 1e3 * triplet.cutoff && decade_mass <= 1e-16 * total) break;
      decade_mass = 0.0;
    }
  }
  if (!(total > 0.0)) throw DomainError("LevyTriplet: no jump mass above the cutoff");
  rate_ = total;
  for (double& c : cdf_) c /= total;
}

double JumpTable::quantile(double u) const {
  const auto it = std::upper_bound(cdf_.begin(), cdf_.end(), u);
  if (it == cdf_.begin()) return x_.front();
  if (it == cdf_.end()) return x_.back();
  const std::size_t k = static_cast<std::size_t>(it - cdf_.begin());
  const double span = cdf_[k] - cdf_[k - 1];
  const double w = span > 0.0 ? (u - cdf_[k - 1]) / span : 0.0;
  return x_[k - 1] + w * (x_[k] - x_[k - 1]);
}

BernsteinFunction BernsteinFunction::linear() {
  BernsteinFunction b;
  b.family_ = Family::linear;
  b.param_ = std::numeric_limits<double>::quiet_NaN();
  return b;
}

BernsteinFunction BernsteinFunction::stable(double alpha) {
  if (!(alpha > 0.0 && alpha <= 1.0)) throw DomainError("stable: alpha must lie in (0, 1]");
  BernsteinFunction b;
  b.family_ = Family::stable;
  b.param_ = alpha;
  return b;
}

BernsteinFunction BernsteinFunction::b1(double alpha) {
  if (!(alpha >= 0.0 && alpha < 1.0)) throw DomainError("b1: alpha must lie in [0, 1)");
  BernsteinFunction b;
  b.family_ = Family::b1;
  b.param_ = alpha;
  return b;
}

BernsteinFunction BernsteinFunction::b2() {
  BernsteinFunction b;
  b.family_ = Family::b2;
  b.param_ = std::numeric_limits<double>::quiet_NaN();
  return b;
}

BernsteinFunction BernsteinFunction::gamma() {
  BernsteinFunction b;
  b.family_ = Family::gamma;
  b.param_ = std::numeric_limits<double>::quiet_NaN();
  return b;
}

BernsteinFunction BernsteinFunction::custom(std::string name, std::function<double(double)> eval,
                                            std::optional<LevyTriplet> triplet,
                                            std::optional<double> derivative_at_zero) {
  if (!eval) throw DomainError("custom Bernstein function needs an evaluation map");
  BernsteinFunction b;
  b.family_ = Family::custom;
  b.param_ = std::numeric_limits<double>::quiet_NaN();
  b.name_ = std::move(name);
  b.eval_ = std::make_shared<const std::function<double(double)>>(std::move(eval));
  if (triplet) b.jumps_ = std::make_shared<const JumpTable>(*triplet);
  b.triplet_ = std::move(triplet);
  b.derivative_at_zero_ = derivative_at_zero;
  return b;
}

BernsteinFunction BernsteinFunction::from_levy(std::string name, LevyTriplet triplet) {
  auto nu = triplet.density;
  const double drift = triplet.drift;
  auto eval = [nu, drift](double lambda) {
    if (lambda == 0.0) return 0.0;
    auto integrand = [&](double x) { return -std::expm1(-lambda * x) * nu(x); };
    const double head = quad::singular(integrand, 0.0, 1.0, 1e-11).value;
    const double tail = quad::to_infinity(integrand, 1.0, 1e-11).value;
    return drift * lambda + head + tail;
  };
  return custom(std::move(name), eval, std::move(triplet));
}

double BernsteinFunction::operator()(double lambda) const {
  if (!(lambda >= 0.0)) throw DomainError("Bernstein function evaluated at a negative argument");
  switch (family_) {
    case Family::linear: return lambda;
    case Family::stable: return std::pow(lambda, param_);
    case Family::b1: return -std::expm1((param_ - 1.0) * std::log1p(lambda));
    case Family::b2: return lambda / (1.0 + lambda);
    case Family::gamma: return std::log1p(lambda);
    default: return (*eval_)(lambda);
  }
}

double BernsteinFunction::derivative(double lambda) const {
  if (!(lambda >= 0.0)) throw DomainError("Bernstein derivative at a negative argument");
  switch (family_) {
    case Family::linear: return 1.0;
    case Family::stable:
      if (param_ == 1.0) return 1.0;
      return lambda == 0.0 ? std::numeric_limits<double>::infinity() : param_ * std::pow(lambda, param_ - 1.0);
    case Family::b1: return (1.0 - param_) * std::pow(1.0 + lambda, param_ - 2.0);
    case Family::b2: return 1.0 / ((1.0 + lambda) * (1.0 + lambda));
    case Family::gamma: return 1.0 / (1.0 + lambda);
    default: {
      if (lambda == 0.0 && derivative_at_zero_) return *derivative_at_zero_;
      const double h = lambda > 0.0 ? 1e-4 * lambda : 1e-8;
      const double lo = std::max(0.0, lambda - h);
      return ((*this)(lambda + h) - (*this)(lo)) / (lambda + h - lo);
    }
  }
}

std::string BernsteinFunction::tag() const {
  auto num = [](double v) {
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
  };
  switch (family_) {
    case Family::stable: return "stable(" + num(param_) + ")";
    case Family::b1: return "b1(" + num(param_) + ")";
    case Family::custom: return name_.empty() ? "custom" : name_;
    default: return to_string(family_);
  }
}

std::optional<double> BernsteinFunction::derivative_at_zero() const {
  switch (family_) {
    case Family::custom: return derivative_at_zero_;
    default: return derivative(0.0);
  }
}

std::optional<BernsteinFunction::Asymptotics> BernsteinFunction::asymptotics() const {
  switch (family_) {
    case Family::linear: return Asymptotics{1.0, 0};
    case Family::stable: return Asymptotics{param_, 0};
    case Family::b1:
    case Family::b2: return Asymptotics{0.0, 0};
    case Family::gamma: return Asymptotics{0.0, 1};
    default: return std::nullopt;
  }
}

BernsteinFunction make_family(std::string_view tag, double alpha) {
  std::string_view name = tag;
  if (const auto open = tag.find('('); open != std::string_view::npos) {
    const auto close = tag.find(')', open);
    if (close == std::string_view::npos) throw DomainError("malformed family tag: " + std::string(tag));
    const std::string inner(tag.substr(open + 1, close - open - 1));
    try {
      alpha = std::stod(inner);
    } catch (const std::exception&) {
      throw DomainError("malformed family parameter: " + std::string(tag));
    }
    name = tag.substr(0, open);
  }
  if (name == "linear") return BernsteinFunction::linear();
  if (name == "stable") return BernsteinFunction::stable(alpha);
  if (name == "b1") return BernsteinFunction::b1(alpha);
  if (name == "b2") return BernsteinFunction::b2();
  if (name == "gamma") return BernsteinFunction::gamma();
  throw DomainError("unknown Bernstein family: " + std::string(tag));
}

std::vector<double> default_probe_grid() { return log_grid(1e-2, 1e10, 25); }

namespace {

enum class TailTrend { decays, flat, grows, ambiguous };

struct TailWindow {
  RatioWitness witness;
  TailTrend trend = TailTrend::ambiguous;
};

// The last two decades of the probe grid decide the limit verdicts.
TailWindow tail_window(const BernsteinFunction& b, double alpha, std::span<const double> grid) {
  TailWindow w;
  const double start = grid.back() / 100.0;
  std::vector<double> lx, ly, wt;
  bool vanished = false;
  for (double lam : grid) {
    if (lam < start) continue;
    const double r = b(lam) / std::pow(lam, alpha);
    w.witness.lambdas.push_back(lam);
    w.witness.ratios.push_back(r);
    if (!(r > 0.0) || !std::isfinite(r)) {
      vanished = vanished || r == 0.0;
      continue;
    }
    lx.push_back(std::log(lam));
    ly.push_back(std::log(r));
    wt.push_back(1.0);
  }
  if (vanished) {
    w.witness.tail_slope = -std::numeric_limits<double>::infinity();
    w.trend = TailTrend::decays;
    return w;
  }
  if (lx.size() < 2) return w;
  const double s = weighted_line_fit(lx, ly, wt).slope;
  w.witness.tail_slope = s;
  if (std::abs(s) <= 0.02) w.trend = TailTrend::flat;
  else if (s < -0.1) w.trend = TailTrend::decays;
  else if (s > 0.1) w.trend = TailTrend::grows;
  return w;
}

struct Memberships {
  Verdict upper = Verdict::inconclusive;
  Verdict lower = Verdict::inconclusive;
  bool from_asymptotics = false;
};

Memberships decide(const BernsteinFunction& b, double alpha, TailTrend trend) {
  Memberships m;
  switch (trend) {
    case TailTrend::flat: m.upper = m.lower = Verdict::yes; break;
    case TailTrend::decays: m.upper = Verdict::no; m.lower = Verdict::yes; break;
    case TailTrend::grows: m.upper = Verdict::yes; m.lower = Verdict::no; break;
    case TailTrend::ambiguous:
      if (const auto a = b.asymptotics()) {
        const bool above = a->exponent > alpha || (a->exponent == alpha && a->log_power >= 0);
        const bool below = a->exponent < alpha || (a->exponent == alpha && a->log_power <= 0);
        m.upper = above ? Verdict::yes : Verdict::no;
        m.lower = below ? Verdict::yes : Verdict::no;
        m.from_asymptotics = true;
      }
      break;
  }
  return m;
}

}  // namespace

ClassReport classify(const BernsteinFunction& b, double alpha, std::span<const double> probe_grid,
                     std::span<const std::pair<int, double>> condition_pairs) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw DomainError("classify: alpha must lie in [0, 1]");
  if (probe_grid.size() < 2 || probe_grid.front() <= 0.0 || probe_grid.back() < 1e8 ||
      probe_grid.back() / probe_grid.front() < 1e6 || !std::is_sorted(probe_grid.begin(), probe_grid.end()))
    throw DomainError("classify: probe grid must be increasing, span six decades and reach 1e8");

  ClassReport rep;
  rep.family = b.tag();
  rep.alpha = alpha;
  const double h = 1e-9;
  const double d0 = b.derivative_at_zero().value_or(b(h) / h);
  rep.in_bold_B = std::abs(b(0.0)) <= 1e-15 && d0 > 0.0;

  const TailWindow w = tail_window(b, alpha, probe_grid);
  rep.in_B_upper_alpha.witness = w.witness;
  rep.in_B_lower_alpha.witness = w.witness;
  const Memberships m = decide(b, alpha, w.trend);
  rep.in_B_upper_alpha.verdict = m.upper;
  rep.in_B_lower_alpha.verdict = m.lower;
  rep.in_B_upper_alpha.basis = rep.in_B_lower_alpha.basis = m.from_asymptotics ? "asymptotics" : "grid";

  static const std::pair<int, double> kDefaultPairs[] = {{1, 1.0}, {2, 1.0}, {3, 1.0}};
  if (condition_pairs.empty()) condition_pairs = kDefaultPairs;
  for (const auto& [d, t] : condition_pairs) rep.satisfies_1_2.push_back(check_condition_1_2(b, d, t));

  if (rep.in_B_upper_alpha.verdict == Verdict::yes || rep.in_B_lower_alpha.verdict == Verdict::yes) {
    const BoundConstants k = bound_constants(b, alpha, probe_grid);
    rep.kappa_lower = k.kappa_lower;
    rep.kappa_upper = k.kappa_upper;
  }
  return rep;
}

ConditionCheck check_condition_1_2(const BernsteinFunction& b, int d, double t) {
  if (d < 1 || !(t > 0.0)) throw DomainError("integrability check needs d >= 1 and t > 0");
  ConditionCheck c;
  c.d = d;
  c.t = t;
  auto exponent_at = [&](double r) { return 0.5 * d - 1.0 - t * r * b.derivative(r); };
  const double e_mid = exponent_at(1e8);
  const double e_end = exponent_at(1e10);
  c.tail_exponent = e_end;

  if (const auto a = b.asymptotics()) {
    c.basis = "asymptotics";
    if (a->exponent > 0.0) c.verdict = Integrability::finite;
    else if (a->log_power == 0) c.verdict = Integrability::infinite;
    else c.verdict = t > 0.5 * d ? Integrability::finite : Integrability::infinite;
  } else {
    c.basis = "tail exponent";
    if (e_mid <= -1.05 && e_end <= -1.05) c.verdict = Integrability::finite;
    else if (e_mid >= -0.95 && e_end >= -0.95) c.verdict = Integrability::infinite;
    else c.verdict = Integrability::inconclusive;
  }

  if (c.verdict == Integrability::finite) {
    auto integrand = [&](double r) { return std::pow(r, 0.5 * d - 1.0) * std::exp(-t * b(r)); };
    try {
      const quad::Integral q = quad::to_infinity(integrand, 1.0, 1e-10);
      if (!std::isfinite(q.value) || q.error > 1e-6 * std::max(1.0, std::abs(q.value)))
        c.verdict = Integrability::inconclusive;
      else
        c.estimate = q.value;
    } catch (const std::exception&) {
      c.verdict = Integrability::inconclusive;
    }
  }
  return c;
}

BoundConstants bound_constants(const BernsteinFunction& b, double alpha, std::span<const double> grid) {
  const std::vector<double> probe = default_probe_grid();
  const Memberships m = decide(b, alpha, tail_window(b, alpha, probe).trend);
  const Verdict upper = m.upper, lower = m.lower;
  if (upper != Verdict::yes && lower != Verdict::yes)
    throw DomainError("bound_constants: " + b.tag() + " is in neither class for alpha = " + std::to_string(alpha));

  BoundConstants k;
  for (double t : grid) {
    if (!(t > 0.0)) continue;
    const double bt = b(t);
    const double tpa = std::pow(t, alpha);
    if (upper == Verdict::yes) {
      const double r = bt / std::min(t, tpa);
      k.kappa_lower = k.kappa_lower ? std::min(*k.kappa_lower, r) : r;
    }
    if (lower == Verdict::yes) {
      const double r = bt / tpa;
      k.kappa_upper = k.kappa_upper ? std::max(*k.kappa_upper, r) : r;
    }
  }
  return k;
}

}  // namespace sublab
