// Acceptance suite: one PASS/FAIL line per criterion. Pass criterion numbers
// as arguments to run a subset.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numeric>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "sublab/harness.hpp"
#include "sublab/parallel.hpp"
#include "sublab/quadrature.hpp"
#include "sublab/spectral.hpp"
#include "sublab/stats.hpp"
#include "sublab/subordinator.hpp"
#include "sublab/transport.hpp"

using namespace sublab;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

const ModelSpace kCircle = ModelSpace::circle();

// Laplace transform of the increments for seven families on a 3 × 2 grid.
Outcome laplace_conformance() {
  const std::vector<BernsteinFunction> fams{BernsteinFunction::linear(), BernsteinFunction::stable(0.3),
                                            BernsteinFunction::stable(0.5), BernsteinFunction::stable(0.8),
                                            BernsteinFunction::gamma(),     BernsteinFunction::b1(0.5),
                                            BernsteinFunction::b2()};
  int cells = 0, bad = 0;
  double worst = 0.0;
  std::uint64_t id = 0;
  for (const BernsteinFunction& b : fams)
    for (double lambda : {0.5, 1.0, 2.0})
      for (double t : {0.5, 1.0}) {
        Stream rng(101, id++);
        const LaplaceCheck c = validate_laplace(b, lambda, t, 100000, rng);
        ++cells;
        worst = std::max(worst, std::abs(c.z));
        if (!(std::abs(c.z) <= 4.0)) {
          ++bad;
          std::printf("    %s lambda=%g t=%g z=%.3f\n", b.tag().c_str(), lambda, t, c.z);
        }
      }
  return {cells == 42 && bad == 0, fmt("%d cells, max |z| = %.3f", cells, worst)};
}

// Every membership stated for B1 and B2, on the default probe grid.
Outcome classification() {
  const auto grid = default_probe_grid();
  const std::vector<std::pair<int, double>> pairs{{1, 0.5}, {1, 1.0}, {2, 1.0}, {3, 2.0}};
  int checks = 0, bad = 0;
  auto expect = [&](bool ok, const std::string& what) {
    ++checks;
    if (!ok) {
      ++bad;
      std::printf("    mismatch: %s\n", what.c_str());
    }
  };
  auto not_in_bb = [&](const BernsteinFunction& b, const ClassReport& r) {
    for (std::size_t k = 0; k < pairs.size(); ++k) {
      const auto [d, t] = pairs[k];
      expect(r.satisfies_1_2.at(k).verdict == Integrability::infinite, b.tag() + " integral infinite d=" +
                                                                           std::to_string(d));
      expect(check_condition_1_2(b, d, t).verdict == Integrability::infinite, b.tag() + " check_condition_1_2");
    }
    expect(r.in_bold_B, b.tag() + " is a Bernstein function");
  };
  for (double a1 : {0.25, 0.5, 0.75}) {
    const BernsteinFunction b = BernsteinFunction::b1(a1);
    for (double a : {0.0, 0.25, 0.5, 0.75, 0.99}) {
      const ClassReport r = classify(b, a, grid, pairs);
      expect(r.in_B_lower_alpha.verdict == Verdict::yes, b.tag() + " in B_alpha, alpha=" + std::to_string(a));
      if (a == 0.0) {
        expect(r.in_B_upper_alpha.verdict == Verdict::yes, b.tag() + " in B^0");
        not_in_bb(b, r);
      }
    }
  }
  const BernsteinFunction b2 = BernsteinFunction::b2();
  for (double a : {0.0, 0.25, 0.5, 0.75, 1.0}) {
    const ClassReport r = classify(b2, a, grid, pairs);
    expect(r.in_B_lower_alpha.verdict == Verdict::yes, "b2 in B_alpha, alpha=" + std::to_string(a));
    expect(r.in_B_upper_alpha.verdict == (a == 0.0 ? Verdict::yes : Verdict::no),
           "b2 in B^alpha, alpha=" + std::to_string(a));
    if (a == 0.0) not_in_bb(b2, r);
  }
  return {bad == 0, fmt("%d memberships checked, %d mismatches", checks, bad)};
}

ExperimentConfig sandwich_config() {
  return parse_config(R"js({
    "name": "circle_sandwich", "model": "circle", "family": "stable(0.5)", "initial": "invariant",
    "t_grid": [200], "replicas": 200, "cost": "power(2)", "obs_dt": 0.05, "fine_dt": 0.001,
    "seed": 20240531})js");
}

Outcome sandwich() {
  const SandwichReport r = sandwich_check(sandwich_config());
  const double lo = 0.8 * 4.0 * 1.2020569031595942, hi = 1.2 * 16.0 * 1.2020569031595942;
  // "inside" means the whole interval est ± 2se lies in [0.8·lower, 1.2·upper].
  const bool ok = r.verdict == "inside" && r.estimate - 2.0 * r.se >= lo && r.estimate + 2.0 * r.se <= hi;
  return {ok, fmt("t*mean(W2^2) = %.4f +- %.4f at t = %g, bracket [%.3f, %.3f], %s", r.estimate, r.se, r.t, lo, hi,
                  r.verdict.c_str())};
}

// (2/t)∫₀^t∫_{s₁}^t e^{−B(1)(s₂−s₁)} ds₂ ds₁ by nested quadrature.
double xi_variance_quadrature(double b1, double t) {
  auto inner = [&](double s1) {
    return quad::gauss_legendre([&](double s2) { return std::exp(-b1 * (s2 - s1)); }, s1, t, 16);
  };
  return 2.0 / t * quad::gauss_legendre(inner, 0.0, t, 32);
}

Outcome xi_variance() {
  const BernsteinFunction b = BernsteinFunction::stable(0.5);
  const SpectralData spec = SpectralData::from_model(kCircle);
  const double b1 = b(spec.eigenvalue(1));
  bool ok = true;
  std::string detail;
  std::uint64_t stream = 0;
  for (double t : {1.0, 10.0}) {
    const std::size_t reps = 2000;
    std::vector<double> v(reps);
    parallel_for(reps, [&](std::size_t r) {
      const SubordinatedPath p =
          subordinated_path(kCircle, b, t, 0.01, 1e-3, InitialLaw::invariant(), Stream(202, stream * reps + r));
      const double xi = eigen_coefficients(p, spec, t, 1)[0];
      v[r] = t * xi * xi;
    });
    ++stream;
    RunningStats s;
    for (double x : v) s.add(x);
    const double target = xi_variance_quadrature(b1, t);
    const bool cell = std::abs(s.mean() - target) <= 4.0 * s.stderr_of_mean();
    ok = ok && cell;
    detail += fmt("t=%g: %.4f +- %.4f vs %.4f; ", t, s.mean(), s.stderr_of_mean(), target);
  }
  // Closed form at t = 1 when B(1) = 1.
  ok = ok && std::abs(xi_variance_quadrature(1.0, 1.0) - 2.0 * std::exp(-1.0)) < 1e-10;
  return {ok, detail};
}

Outcome green_identity() {
  const BernsteinFunction b = BernsteinFunction::stable(0.5);
  const SpectralData spec = SpectralData::from_model(kCircle);
  const double b1 = b(spec.eigenvalue(1)), t = 4.0, h = 0.01;
  const std::size_t reps = 4000;
  std::vector<double> v(reps);
  parallel_for(reps, [&](std::size_t r) {
    const SubordinatedPath p = subordinated_path(kCircle, b, t, h, 1e-3, InitialLaw::invariant(), Stream(303, r));
    // Left-endpoint rule for ∫₀^t φ₁(X_s) ds.
    double integral = 0.0;
    for (std::size_t j = 0; j + 1 < p.size(); ++j) integral += spec.phi(1, p.position(j)) * h;
    v[r] = integral * integral / t;
  });
  RunningStats s;
  for (double x : v) s.add(x);
  const double target =
      4.0 * quad::gauss_legendre([&](double u) { return (1.0 - 2.0 * u / t) * std::exp(-2.0 * b1 * u); }, 0.0,
                                 t / 2.0, 32);
  const bool ok = std::abs(s.mean() - target) <= 4.0 * s.stderr_of_mean();
  return {ok, fmt("MC %.4f +- %.4f vs %.4f", s.mean(), s.stderr_of_mean(), target)};
}

double permutation_minimum(const DiscreteMeasure& a, const DiscreteMeasure& b, const CostSpec& c) {
  std::vector<std::size_t> perm(a.size());
  std::iota(perm.begin(), perm.end(), 0);
  double best = HUGE_VAL;
  do {
    double s = 0.0;
    for (std::size_t i = 0; i < perm.size(); ++i) s += c(a.point(i), b.point(perm[i]));
    best = std::min(best, s / static_cast<double>(perm.size()));
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

Outcome ot_oracle() {
  Stream rng(404);
  const std::vector<CostSpec> costs{CostSpec::power(2), CostSpec::truncated(0.5), CostSpec::capped_square(5)};
  double worst_lp = 0.0, worst_q = 0.0;
  for (int rep = 0; rep < 200; ++rep) {
    const std::size_t n = 1 + static_cast<std::size_t>(rng.uniform() * 8);
    const int d = 1 + static_cast<int>(static_cast<std::size_t>(rng.uniform() * 2));
    std::vector<double> xa(n * d), xb(n * d);
    for (double& v : xa) v = 4.0 * rng.uniform();
    for (double& v : xb) v = 4.0 * rng.uniform();
    const DiscreteMeasure a = DiscreteMeasure::uniform(d, xa), b = DiscreteMeasure::uniform(d, xb);
    for (const CostSpec& c : costs) {
      const double lp = transport_cost(a, b, c, Method::exact_lp());
      worst_lp = std::max(worst_lp, std::abs(lp - permutation_minimum(a, b, c)));
      if (d == 1 && c.shape == CostShape::power)
        worst_q = std::max(worst_q, std::abs(transport_cost(a, b, c, Method::quantile_1d()) - lp));
    }
  }
  return {worst_lp <= 1e-9 && worst_q <= 1e-9,
          fmt("200 instances, max |LP - enumeration| = %.2e, max |quantile - LP| = %.2e", worst_lp, worst_q)};
}

ExperimentConfig rates_config() {
  return parse_config(R"js({
    "name": "euclidean_q15_b2", "model": {"kind": "euclidean", "d": 1, "kappa": 1.0, "q": 1.5},
    "family": "b2", "alpha": 0.0, "initial": "invariant", "t_grid": [16, 32, 64, 128, 256, 512],
    "replicas": 64, "cost": "power(2)", "obs_dt": 0.05, "fine_dt": 0.001, "seed": 7,
    "slope_bracket": [-1.0, -0.45]})js");
}

Outcome rate_regime() {
  const ExperimentConfig c = rates_config();
  const RatesReport r = rates_report(c);
  for (const RateRow& row : r.table.rows)
    if (row.failed) return {false, "row t=" + std::to_string(row.t) + " failed: " + row.error};
  const bool ok = r.fit.slope >= -1.0 && r.fit.slope <= -0.45;
  return {ok, fmt("slope %.4f +- %.4f (theory %.4f, %s), route %s", r.fit.slope, r.fit.stderr_slope,
                  r.theory.exponent, r.theory.regime.c_str(), r.table.route.c_str())};
}

ExperimentConfig lower_config() {
  return parse_config(R"js({
    "name": "circle_lower_bounds", "model": "circle", "family": "stable(0.5)", "initial": "invariant",
    "t_range": {"min": 16, "max": 512, "points": 6}, "replicas": 200, "reference_n": 8192,
    "obs_dt": 0.05, "fine_dt": 0.001, "seed": 11})js");
}

Outcome lower_bound_floor() {
  const LowerBoundReport r = lower_bound_suite(lower_config());
  bool slope = false, floor = false;
  std::string detail;
  for (const VerdictLine& v : r.verdicts) {
    if (v.name == "W1~ slope") slope = v.verdict == "pass";
    if (v.name == "t*W1~^2 floor") floor = v.verdict == "pass";
    detail += v.name + ": " + v.verdict + " (" + v.detail + "); ";
  }
  return {slope && floor, detail};
}

Outcome delta_linear_law() {
  const ModelSpace ou = ModelSpace::ou(1, 1.0);
  double lo = HUGE_VAL, hi = 0.0;
  std::string route;
  for (double eps : {1e-3, 3e-3, 1e-2, 3e-2, 1e-1}) {
    const Estimate e = delta_eps(ou, eps);
    if (!e.finite) return {false, "delta(eps) not finite"};
    lo = std::min(lo, e.value / eps);
    hi = std::max(hi, e.value / eps);
    route = e.route;
  }
  return {hi / lo <= 3.0, fmt("delta(eps)/eps in [%.4f, %.4f], ratio %.4f, route %s", lo, hi, hi / lo, route.c_str())};
}

Outcome ledoux_and_regularized() {
  const SpectralData spec = SpectralData::from_model(kCircle);
  const std::size_t M = 256;
  const CostSpec w2 = CostSpec::power(2, kTwoPi);
  Stream rng(505);
  int ledoux_bad = 0;
  double ledoux_worst = 0.0;
  std::vector<double> mid(M);
  for (std::size_t k = 0; k < M; ++k) mid[k] = kTwoPi * (k + 0.5) / M;
  const DiscreteMeasure uniform = DiscreteMeasure::uniform(1, mid);
  for (int rep = 0; rep < 50; ++rep) {
    const std::size_t modes = 1 + static_cast<std::size_t>(rng.uniform() * 8);
    std::vector<double> a(modes);
    double l1 = 0.0;
    for (double& v : a) l1 += std::abs(v = rng.uniform() - 0.5);
    // Keeps 1 + Σ a_i φ_i ≥ 0.1 since |φ_i| ≤ √2.
    const double scale = (0.9 * rng.uniform() + 0.05) * 0.9 / (std::sqrt(2.0) * l1);
    for (double& v : a) v *= scale;
    // Exact cell masses of f μ, placed at the cell midpoints.
    DiscreteMeasure fmu = uniform;
    double total = 0.0;
    for (std::size_t k = 0; k < M; ++k) {
      const double x0 = kTwoPi * k / M, x1 = kTwoPi * (k + 1) / M;
      fmu.weights[k] = quad::gauss_legendre(
                           [&](double x) {
                             double f = 1.0;
                             for (std::size_t i = 0; i < modes; ++i) f += a[i] * spec.phi(i + 1, std::span(&x, 1));
                             return f;
                           },
                           x0, x1, 2) /
                       kTwoPi;
      total += fmu.weights[k];
    }
    for (double& w : fmu.weights) w /= total;
    const double lp = transport_cost(fmu, uniform, w2, Method::exact_lp());
    const double bound = ledoux_bound(a, spec);
    ledoux_worst = std::max(ledoux_worst, lp / bound);
    if (!(lp <= bound * (1.0 + 1e-3))) ++ledoux_bad;
  }

  // Regularized measure of simulated paths: W2²(μ_t P_ε, μ) ≤ 4Σ ξ_i² / (λ_i e^{2λ_i ε}).
  const double t = 10.0, eps = 0.05;
  const std::size_t I = 200;
  int path_bad = 0;
  double path_worst = 0.0;
  for (int r = 0; r < 50; ++r) {
    const SubordinatedPath p = subordinated_path(kCircle, BernsteinFunction::stable(0.5), t, 0.05, 1e-3,
                                                 InitialLaw::invariant(), Stream(506, static_cast<std::uint64_t>(r)));
    const auto xi = eigen_coefficients(p, spec, t, I);
    const auto g = regularized_density_circle(empirical_measure(p, t), kTwoPi, eps, 1024);
    const double w = circle_cells_w2sq(g, kTwoPi), bound = regularized_bound(xi, spec, eps);
    path_worst = std::max(path_worst, w / bound);
    if (!(w <= bound * (1.0 + 1e-3))) ++path_bad;
  }
  return {ledoux_bad == 0 && path_bad == 0,
          fmt("Ledoux: 50 densities, max LP/bound = %.4f; regularized: 50 paths, max W2^2/bound = %.4f",
              ledoux_worst, path_worst)};
}

Outcome invariance() {
  const std::size_t n = 100000;
  bool ok = true;
  std::string detail;
  std::uint64_t stream = 0;
  for (const char* tag : {"b2", "stable(0.5)"}) {
    const BernsteinFunction b = make_family(tag);
    for (double t : {0.5, 1.0, 5.0}) {
      std::vector<double> x(n);
      parallel_for(n, [&](std::size_t i) {
        const SubordinatedPath p =
            subordinated_path(kCircle, b, t, t, 1e-3, InitialLaw::invariant(), Stream(606 + stream, i));
        x[i] = p.position(p.size() - 1)[0];
      });
      ++stream;
      const double ks = ks_statistic(x, [](double y) { return y / kTwoPi; });
      ok = ok && ks < ks_critical_1pct(n);
      detail += fmt("%s t=%g KS=%.5f; ", tag, t, ks);
    }
  }
  return {ok, detail + fmt("critical %.5f", ks_critical_1pct(n))};
}

struct Criterion {
  int id;
  const char* name;
  std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> all{
      {1, "Laplace conformance", laplace_conformance},
      {2, "class memberships of B1 and B2", classification},
      {3, "sandwich on the circle", sandwich},
      {4, "xi-variance closed form", xi_variance},
      {5, "Green identity", green_identity},
      {6, "OT oracle equivalence", ot_oracle},
      {7, "rate regime, euclidean q = 1.5", rate_regime},
      {8, "lower-bound floor", lower_bound_floor},
      {9, "delta(eps) linear law", delta_linear_law},
      {10, "Ledoux and regularized bounds", ledoux_and_regularized},
      {11, "invariance", invariance},
  };
  std::set<int> only;
  for (int i = 1; i < argc; ++i) only.insert(std::stoi(argv[i]));

  int failures = 0;
  for (const Criterion& c : all) {
    if (!only.empty() && !only.count(c.id)) continue;
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::printf("%s  %2d  %s  [%.1fs]  %s\n", o.pass ? "PASS" : "FAIL", c.id, c.name, secs, o.detail.c_str());
    std::fflush(stdout);
    if (!o.pass) ++failures;
  }
  return failures == 0 ? 0 : 1;
}
