#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "doctest.h"
#include "sublab/pathlab.hpp"
#include "sublab/quadrature.hpp"
#include "sublab/stats.hpp"
#include "sublab/transport.hpp"

using namespace sublab;

namespace {

DiscreteMeasure random_cloud(Stream& rng, std::size_t n, int d, double scale) {
  std::vector<double> c(n * static_cast<std::size_t>(d));
  for (double& v : c) v = scale * rng.uniform();
  return DiscreteMeasure::uniform(d, c);
}

DiscreteMeasure random_weighted(Stream& rng, std::size_t n, int d, double scale) {
  DiscreteMeasure m = random_cloud(rng, n, d, scale);
  double s = 0.0;
  for (double& w : m.weights) s += (w = 0.1 + rng.uniform());
  for (double& w : m.weights) w /= s;
  return m;
}

// Independent oracle: minimum over all permutations of the pairing cost.
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

}  // namespace

TEST_CASE("cost shapes") {
  const double x = 0.0, y = 3.0;
  const auto px = std::span(&x, 1), py = std::span(&y, 1);
  CHECK(CostSpec::power(2)(px, py) == 9.0);
  CHECK(CostSpec::truncated(0.5)(px, py) == 1.0);
  CHECK(CostSpec::capped_square(5)(px, py) == 5.0);
  CHECK(CostSpec::power(2, 4.0)(px, py) == 1.0);  // geodesic on a circle of length 4
  CHECK(CostSpec::truncated(2).outer_exponent() == 0.5);
  CHECK(CostSpec::truncated(0.5).outer_exponent() == 1.0);
  CHECK(CostSpec::power(3).outer_exponent() == doctest::Approx(1.0 / 3.0));
  CHECK(CostSpec::capped_square(3).outer_exponent() == 0.5);
  CHECK_THROWS_AS(CostSpec::power(0.5), DomainError);
  Stream rng(1);
  for (int i = 0; i < 1000; ++i) {
    const double a = 10 * rng.uniform(), b = 10 * rng.uniform();
    CHECK(CostSpec::truncated(0.7)(std::span(&a, 1), std::span(&b, 1)) <= 1.0);
    CHECK(CostSpec::capped_square(2.5)(std::span(&a, 1), std::span(&b, 1)) <= 2.5);
  }
}

TEST_CASE("trivial instances") {
  Stream rng(2);
  const DiscreteMeasure a = random_weighted(rng, 7, 2, 3.0);
  for (const CostSpec& c : {CostSpec::power(2), CostSpec::truncated(0.5), CostSpec::capped_square(5)}) {
    CHECK(distance(a, a, c) <= 1e-12);
  }
  const double zero = 0.0, one = 1.0;
  const auto d0 = DiscreteMeasure::dirac(std::span(&zero, 1)), d1 = DiscreteMeasure::dirac(std::span(&one, 1));
  CHECK(distance(d0, d1, CostSpec::power(2)) == 1.0);
  CHECK(distance(d0, d1, CostSpec::truncated(0.5)) == 1.0);
  CHECK(distance(d0, d1, CostSpec::power(2), Method::quantile_1d()) == 1.0);
}

TEST_CASE("exact LP against permutation enumeration") {
  Stream rng(3);
  const std::vector<CostSpec> costs{CostSpec::power(2), CostSpec::truncated(0.5), CostSpec::capped_square(5),
                                    CostSpec::power(1), CostSpec::power(2, 2.5)};
  for (int rep = 0; rep < 200; ++rep) {
    const std::size_t n = 2 + rep % 7;
    const int d = 1 + rep % 2;
    const DiscreteMeasure a = random_cloud(rng, n, d, 3.0), b = random_cloud(rng, n, d, 3.0);
    for (const CostSpec& c : costs) {
      const double oracle = permutation_minimum(a, b, c);
      CHECK(std::abs(transport_cost(a, b, c, Method::exact_lp()) - oracle) <= 1e-9);
      CHECK(std::abs(transport_cost(a, b, c, Method::brute_force()) - oracle) <= 1e-9);
      if (d == 1 && c.shape == CostShape::power)
        CHECK(std::abs(transport_cost(a, b, c, Method::quantile_1d()) - oracle) <= 1e-9);
    }
  }
}

TEST_CASE("quantile and LP agree on weighted measures") {
  Stream rng(4);
  for (int rep = 0; rep < 100; ++rep) {
    const DiscreteMeasure a = random_weighted(rng, 5 + rep % 20, 1, 2.0), b = random_weighted(rng, 3 + rep % 30, 1, 2.0);
    for (const CostSpec& c : {CostSpec::power(2), CostSpec::power(1), CostSpec::power(1.5), CostSpec::power(2, 2.0)})
      CHECK(std::abs(transport_cost(a, b, c, Method::quantile_1d()) - transport_cost(a, b, c, Method::exact_lp())) <=
            1e-9);
  }
}

TEST_CASE("method and cost compatibility") {
  Stream rng(5);
  const DiscreteMeasure a = random_cloud(rng, 4, 1, 1.0), b = random_cloud(rng, 4, 1, 1.0);
  CHECK_THROWS_AS(transport_cost(a, b, CostSpec::truncated(0.5), Method::quantile_1d()), DomainError);
  CHECK_THROWS_AS(transport_cost(a, b, CostSpec::capped_square(2), Method::quantile_1d()), DomainError);
  const DiscreteMeasure big = random_cloud(rng, 9, 1, 1.0);
  CHECK_THROWS_AS(transport_cost(big, big, CostSpec::power(2), Method::brute_force()), DomainError);
  CHECK_THROWS_AS(transport_cost(random_weighted(rng, 4, 1, 1.0), b, CostSpec::power(2), Method::brute_force()),
                  DomainError);
  const DiscreteMeasure two = random_cloud(rng, 4, 2, 1.0);
  CHECK_THROWS_AS(transport_cost(two, two, CostSpec::power(2), Method::quantile_1d()), DomainError);
}

TEST_CASE("ordering of the truncated and plain distances") {
  Stream rng(6);
  for (int rep = 0; rep < 100; ++rep) {
    const DiscreteMeasure a = random_weighted(rng, 12, 1 + rep % 2, 2.5), b = random_weighted(rng, 9, 1 + rep % 2, 2.5);
    const double wt = distance(a, b, CostSpec::truncated(1)), w1 = distance(a, b, CostSpec::power(1)),
                 w2 = distance(a, b, CostSpec::power(2));
    CHECK(wt <= w1 + 1e-12);
    CHECK(w1 <= w2 + 1e-12);
  }
}

TEST_CASE("capped squares increase to the plain W2") {
  Stream rng(7);
  for (int rep = 0; rep < 30; ++rep) {
    const DiscreteMeasure a = random_weighted(rng, 10, 2, 3.0), b = random_weighted(rng, 8, 2, 3.0);
    double prev = 0.0;
    for (double n = 0.25; n <= 18.0; n *= 2) {
      const double v = distance(a, b, CostSpec::capped_square(n));
      CHECK(v >= prev - 1e-12);
      prev = v;
    }
    // 18 exceeds the squared diameter of [0, 3]².
    CHECK(distance(a, b, CostSpec::capped_square(18.0)) == doctest::Approx(distance(a, b, CostSpec::power(2))).epsilon(1e-12));
  }
}

TEST_CASE("metric sanity") {
  Stream rng(8);
  for (int rep = 0; rep < 50; ++rep) {
    const DiscreteMeasure a = random_weighted(rng, 6, 2, 1.0), b = random_weighted(rng, 7, 2, 1.0),
                          c = random_weighted(rng, 5, 2, 1.0);
    for (const CostSpec& cost : {CostSpec::power(1), CostSpec::power(2), CostSpec::power(3)}) {
      const double ab = distance(a, b, cost), bc = distance(b, c, cost), ac = distance(a, c, cost);
      CHECK(ab == doctest::Approx(distance(b, a, cost)).epsilon(1e-9));
      CHECK(ac <= ab + bc + 1e-9);
    }
  }
}

TEST_CASE("entropic regularization approaches the LP value") {
  Stream rng(9);
  for (int rep = 0; rep < 5; ++rep) {
    const DiscreteMeasure a = random_weighted(rng, 30, 2, 1.0), b = random_weighted(rng, 25, 2, 1.0);
    const double lp = transport_cost(a, b, CostSpec::power(2), Method::exact_lp());
    double prev = HUGE_VAL;
    for (double f : {-1e-1, -3e-2, -1e-2, -3e-3, -1e-3}) {
      const double e = transport_cost(a, b, CostSpec::power(2), Method::entropic(f));
      CHECK(e >= lp - 1e-9);
      CHECK(e <= prev + 1e-6);
      prev = e;
    }
    CHECK(prev - lp <= 5e-3 * lp + 1e-6);
  }
}

TEST_CASE("distance to the invariant law") {
  Stream rng(10);
  const ModelSpace circle = ModelSpace::circle();
  SUBCASE("Dirac on the circle") {
    const double x = 1.0;
    const InvariantDistance d = distance_to_invariant(DiscreteMeasure::dirac(std::span(&x, 1)), circle,
                                                      CostSpec::power(2), 1000, rng);
    // ∫ρ(x, y)² μ(dy) for the geodesic distance, by quadrature.
    const double second = quad::finite([](double y) { return std::pow(std::min(y, kTwoPi - y), 2.0); }, 0.0, kTwoPi).value / kTwoPi;
    CHECK(d.value == doctest::Approx(std::sqrt(second)).epsilon(1e-10));
    CHECK(d.value == doctest::Approx(std::sqrt(kPi * kPi / 3.0)).epsilon(1e-10));
  }
  SUBCASE("uniform grid on the circle") {
    std::vector<double> g(1000);
    for (std::size_t i = 0; i < g.size(); ++i) g[i] = kTwoPi * static_cast<double>(i) / 1000.0;
    const double v = distance_to_invariant(DiscreteMeasure::uniform(1, g), circle, CostSpec::power(2), 1000, rng).value;
    CHECK(v <= kPi / 1000.0);
  }
  SUBCASE("quantile routes agree with a fine LP") {
    const ModelSpace ou = ModelSpace::ou(1, 1.0);
    const InvariantSample s = sample_invariant(ou, 40, rng);
    const DiscreteMeasure nu = DiscreteMeasure::uniform(1, s.coords);
    const InvariantDistance q = distance_to_invariant(nu, ou, CostSpec::power(2), 4000, rng);
    CHECK(q.route.find("quantile") != std::string::npos);
    // Stratified reference: μ quantiles at cell midpoints.
    std::vector<double> ref(4000);
    for (std::size_t i = 0; i < ref.size(); ++i) ref[i] = ou.table()->quantile((i + 0.5) / 4000.0);
    const double lp = distance(nu, DiscreteMeasure::uniform(1, ref), CostSpec::power(2));
    CHECK(q.value == doctest::Approx(lp).epsilon(1e-2));
  }
  SUBCASE("OU self-distance decays like n^{-1/2}") {
    const ModelSpace ou = ModelSpace::ou(1, 1.0);
    std::vector<double> x, y, w;
    for (std::size_t n : {100u, 316u, 1000u, 3162u, 10000u}) {
      RunningStats m;
      for (int r = 0; r < 30; ++r) {
        const InvariantSample s = sample_invariant(ou, n, rng);
        m.add(distance_to_invariant(DiscreteMeasure::uniform(1, s.coords), ou, CostSpec::power(2), 1, rng).value);
      }
      x.push_back(std::log(static_cast<double>(n)));
      y.push_back(std::log(m.mean()));
      w.push_back(1.0);
    }
    const double slope = weighted_line_fit(x, y, w).slope;
    CHECK(slope <= -0.35);
    CHECK(slope >= -0.65);
  }
  SUBCASE("truncated cost on the circle via the wheel") {
    const std::size_t M = 64;
    const double h = kTwoPi / M;
    DiscreteMeasure nu;
    for (int i = 0; i < 20; ++i) {
      nu.coords.push_back((std::floor(rng.uniform() * M) + 0.5) * h);
      nu.weights.push_back(1.0 / 20);
    }
    std::vector<double> grid(M);
    for (std::size_t k = 0; k < M; ++k) grid[k] = (k + 0.5) * h;
    const double lp = distance(nu, DiscreteMeasure::uniform(1, grid), CostSpec::truncated(1, kTwoPi));
    const InvariantDistance d = distance_to_invariant(nu, circle, CostSpec::truncated(1), M, rng);
    CHECK(d.value == doctest::Approx(lp).epsilon(1e-12));
    CHECK(!d.bias_note.empty());
  }
  SUBCASE("reference samples in two dimensions") {
    const ModelSpace torus = ModelSpace::torus(2);
    const InvariantSample s = sample_invariant(torus, 50, rng);
    const InvariantDistance d = distance_to_invariant(DiscreteMeasure::uniform(2, s.coords), torus, CostSpec::power(2), 500, rng);
    CHECK(d.value > 0.0);
    CHECK(!d.bias_note.empty());
  }
}

TEST_CASE("wheel solver equals the LP on gridded measures") {
  Stream rng(11);
  for (std::size_t M : {8u, 16u, 50u, 128u}) {
    const double C = 3.0, h = C / M;
    std::vector<double> supply(M, 0.0), grid(M);
    DiscreteMeasure a;
    for (std::size_t k = 0; k < M; ++k) grid[k] = (k + 0.5) * h;
    for (int i = 0; i < 15; ++i) {
      const std::size_t k = static_cast<std::size_t>(rng.uniform() * M);
      a.coords.push_back(grid[k]);
      a.weights.push_back(1.0 / 15);
      supply[k] += 1.0 / 15;
    }
    for (double& s : supply) s -= 1.0 / M;
    const double lp = transport_cost(a, DiscreteMeasure::uniform(1, grid), CostSpec::truncated(1, C), Method::exact_lp());
    CHECK(wheel_transport(supply, h) == doctest::Approx(lp).epsilon(1e-12));
  }
}

TEST_CASE("circle cell densities") {
  const std::size_t M = 128;
  std::vector<double> cells(M, 1.0);
  CHECK(circle_cells_w2sq(cells, kTwoPi) == doctest::Approx(0.0).scale(1e-15));
  Stream rng(12);
  for (std::size_t k = 0; k < M; ++k) cells[k] = 1.0 + 0.5 * std::sin(kTwoPi * (k + 0.5) / M);
  // Compare with the LP between the weighted cell midpoints and a 4× finer uniform grid.
  DiscreteMeasure a, b;
  double s = 0.0;
  for (double c : cells) s += c;
  for (std::size_t k = 0; k < M; ++k) {
    a.coords.push_back(kTwoPi * (k + 0.5) / M);
    a.weights.push_back(cells[k] / s);
  }
  for (std::size_t k = 0; k < 4 * M; ++k) b.coords.push_back(kTwoPi * (k + 0.5) / (4 * M));
  b.weights.assign(4 * M, 1.0 / (4 * M));
  const double lp = transport_cost(a, b, CostSpec::power(2, kTwoPi), Method::exact_lp());
  const double exact = circle_cells_w2sq(cells, kTwoPi);
  // Atoms sit at cell midpoints, so the two values differ by at most about one cell width squared.
  CHECK(std::abs(exact - lp) <= std::pow(kTwoPi / M, 2));
}

TEST_CASE("dual lower bound") {
  const ModelSpace circle = ModelSpace::circle();
  const SubordinatedPath p = subordinated_path(circle, BernsteinFunction::stable(0.5), 4.0, 0.01, 1e-3,
                                               InitialLaw::invariant(), Stream(13));
  const TestFunction zero{[](std::span<const double>) { return 0.0; }, {}};
  CHECK(dual_lower(zero, circle, p, 4.0).value == 0.0);
  const TestFunction f{[](std::span<const double> x) { return std::sin(x[0]) / std::sqrt(2.0); },
                       [](std::span<const double> x, std::span<double> g) { g[0] = std::cos(x[0]) / std::sqrt(2.0); }};
  // sin/√2 has oscillation √2, so only the half-amplitude version certifies against (1 ∧ ρ).
  CHECK(!dual_lower(f, circle, p, 4.0).certified);
  const TestFunction half{[](std::span<const double> x) { return 0.5 * std::sin(x[0]); }, {}};
  const DualLower d = dual_lower(half, circle, p, 4.0);
  CHECK(d.certified);
  CHECK(d.oscillation == doctest::Approx(1.0).epsilon(1e-6));
  Stream rng(14);
  CHECK(d.value * d.value <= std::pow(distance_to_invariant(empirical_measure(p, 4.0), circle, CostSpec::truncated(1), 8192, rng).value + 0.75 * kTwoPi / 8192, 2) + 1e-12);
  const TestFunction biased{[](std::span<const double> x) { return 0.5 + 0.1 * std::sin(x[0]); }, {}};
  CHECK_THROWS_AS(dual_lower(biased, circle, p, 4.0), DomainError);
  const TestFunction steep{[](std::span<const double> x) { return 0.9 * std::sin(3.0 * x[0]); }, {}};
  CHECK_THROWS_AS(dual_lower(steep, circle, p, 4.0), DomainError);

  // t·E[dual²] = μ(f²)·4∫₀^{t/2}(1 − 2s/t)e^{-2B(1)s} ds with μ(f²) = 1/4.
  const double t = 4.0;
  const double green = 4.0 * quad::finite([&](double s) { return (1.0 - 2.0 * s / t) * std::exp(-2.0 * s); }, 0.0, t / 2).value;
  RunningStats m;
  for (std::size_t r = 0; r < 3000; ++r) {
    const SubordinatedPath q = subordinated_path(circle, BernsteinFunction::stable(0.5), t, 0.01, 1e-3,
                                                 InitialLaw::invariant(), Stream(15, r));
    const double v = dual_lower(f, circle, q, t).value;
    m.add(t * v * v);
  }
  CHECK(std::abs(m.mean() - 0.25 * green) <= 4.0 * m.stderr_of_mean());
}
