#include <cmath>
#include <sstream>
#include <vector>

#include "doctest.h"
#include "sublab/pathlab.hpp"
#include "sublab/quadrature.hpp"
#include "sublab/stats.hpp"
#include "sublab/transport.hpp"

using namespace sublab;

namespace {

const ModelSpace kCircle = ModelSpace::circle();

double weight_sum(const DiscreteMeasure& m) {
  double s = 0.0;
  for (double w : m.weights) s += w;
  return s;
}

}  // namespace

TEST_CASE("linear B reads the plain diffusion on the observation grid") {
  const ModelSpace m = ModelSpace::euclidean(1, 1.0, 1.5);
  const Stream root(1, 9);
  const SubordinatedPath p = subordinated_path(m, BernsteinFunction::linear(), 2.0, 0.1, 1e-3,
                                               InitialLaw::point({0.3}), root);
  CHECK(p.sub_path.values == p.obs_times);
  Stream drng = root.split(2);
  Point x{0.3};
  double clock = 0.0;
  for (std::size_t j = 0; j < p.size(); ++j) {
    advance(m, x, clock, p.obs_times[j] - clock, 1e-3, drng);
    clock = p.obs_times[j];
    CHECK(p.position(j)[0] == x[0]);
  }
}

TEST_CASE("b2 without jumps keeps the initial point") {
  int found = 0;
  for (std::uint64_t seed = 0; seed < 50 && found < 5; ++seed) {
    const SubordinatedPath p = subordinated_path(kCircle, BernsteinFunction::b2(), 0.2, 0.01, 1e-3,
                                                 InitialLaw::point({1.0}), Stream(seed));
    if (p.sub_path.values.back() != 0.0) continue;
    ++found;
    for (std::size_t j = 0; j < p.size(); ++j) CHECK(p.position(j)[0] == 1.0);
    const DiscreteMeasure mu = empirical_measure(p, 0.2);
    for (std::size_t i = 0; i < mu.size(); ++i) CHECK(mu.point(i)[0] == 1.0);
    for (double t : {0.05, 0.2}) CHECK(dual_lower({[](std::span<const double> y) { return 0.5 * std::sin(y[0]); }, {}},
                                                  kCircle, p, t)
                                           .value == doctest::Approx(0.5 * std::sin(1.0)));
  }
  CHECK(found == 5);
}

TEST_CASE("stationary start stays stationary") {
  const std::size_t n = 5000;
  for (double t : {0.5, 1.0, 5.0}) {
    std::vector<double> x(n);
    for (std::size_t i = 0; i < n; ++i) {
      const SubordinatedPath p = subordinated_path(kCircle, BernsteinFunction::stable(0.5), t, t, 1e-3,
                                                   InitialLaw::invariant(), Stream(3, i));
      x[i] = p.position(p.size() - 1)[0];
    }
    CAPTURE(t);
    CHECK(ks_statistic(x, [](double y) { return y / kTwoPi; }) < ks_critical_1pct(n));
  }
}

TEST_CASE("empirical measures") {
  const SubordinatedPath p = subordinated_path(kCircle, BernsteinFunction::stable(0.5), 3.0, 0.1, 1e-3,
                                               InitialLaw::invariant(), Stream(3));
  SUBCASE("one observation interval gives the initial Dirac") {
    const DiscreteMeasure mu = empirical_measure(p, 0.1);
    REQUIRE(mu.size() == 1);
    CHECK(mu.weights[0] == 1.0);
    CHECK(mu.point(0)[0] == p.position(0)[0]);
  }
  SUBCASE("weights sum to one") {
    Stream rng(4);
    for (int i = 0; i < 50; ++i) {
      const DiscreteMeasure mu = empirical_measure(p, 0.01 + 2.99 * rng.uniform());
      CHECK(std::abs(weight_sum(mu) - 1.0) <= 1e-12);
      mu.validate();
    }
    CHECK_THROWS_AS(empirical_measure(p, 3.5), DomainError);
  }
  SUBCASE("discretized empirical measure") {
    const DiscreteMeasure one = discretized_empirical(p, 3.0, 1);
    CHECK(one.point(0)[0] == p.position(0)[0]);
    CHECK_THROWS_AS(discretized_empirical(p, 3.0, 7), DomainError);
    const SubordinatedPath lin = subordinated_path(kCircle, BernsteinFunction::linear(), 3.0, 0.1, 1e-3,
                                                   InitialLaw::invariant(), Stream(5));
    const DiscreteMeasure a = discretized_empirical(lin, 3.0, 30), b = empirical_measure(lin, 3.0);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
      CHECK(a.coords[i] == b.coords[i]);
      CHECK(a.weights[i] == doctest::Approx(b.weights[i]).epsilon(1e-12));
    }
  }
  SUBCASE("coupling bound for the discretized measure") {
    // Pair the atom at t_j with the block start t_i ≤ t_j of its block.
    const std::size_t N = 10;
    const double t = 3.0;
    const DiscreteMeasure mu = empirical_measure(p, t), nu = discretized_empirical(p, t, N);
    const CostSpec c = CostSpec::truncated(1.0).on(kCircle);
    double coupling = 0.0;
    for (std::size_t j = 0; j + 1 < p.size(); ++j) {
      const std::size_t block = static_cast<std::size_t>(std::floor(p.obs_times[j] / (t / N) + 1e-9));
      const std::size_t i = block * (p.size() - 1) / N;
      coupling += mu.weights[j] * c(p.position(j), p.position(i));
    }
    CHECK(distance(mu, nu, c) <= coupling + 1e-12);
  }
}

TEST_CASE("eigen coefficients") {
  const SpectralData spec = SpectralData::from_model(kCircle);
  SUBCASE("constant path") {
    SubordinatedPath p;
    p.obs_times = {0.0, 0.5, 1.0};
    p.coords = {2.0, 2.0, 2.0};
    p.sub_path.values = {0.0, 0.0, 0.0};
    const double x = 2.0;
    const auto xi = eigen_coefficients(p, spec, 1.0, 6);
    for (std::size_t i = 0; i < 6; ++i) CHECK(xi[i] == doctest::Approx(spec.phi(i + 1, std::span(&x, 1))));
  }
  SUBCASE("mean zero and the variance closed form") {
    const double t = 1.0;
    RunningStats m1, m2, v1;
    for (std::size_t r = 0; r < 3000; ++r) {
      const SubordinatedPath p = subordinated_path(kCircle, BernsteinFunction::stable(0.5), t, 0.01, 1e-3,
                                                   InitialLaw::invariant(), Stream(6, r));
      const auto xi = eigen_coefficients(p, spec, t, 2);
      m1.add(xi[0]);
      m2.add(xi[1]);
      v1.add(t * xi[0] * xi[0]);
    }
    CHECK(std::abs(m1.mean()) <= 4.0 * m1.stderr_of_mean());
    CHECK(std::abs(m2.mean()) <= 4.0 * m2.stderr_of_mean());
    // (2/t)∫₀^t∫_{s₁}^t e^{-B(1)(s₂-s₁)} ds₂ ds₁ for the left-endpoint sum on a 0.01 grid, by quadrature.
    auto inner = [&](double s1) { return 1.0 - std::exp(-(t - s1)); };
    const double exact = 2.0 / t * quad::finite(inner, 0.0, t).value;
    CHECK(exact == doctest::Approx(2.0 * std::exp(-1.0)).epsilon(1e-10));
    CHECK(std::abs(v1.mean() - exact) <= 4.0 * v1.stderr_of_mean() + 0.01);
    CHECK(v1.mean() <= 2.0 / BernsteinFunction::stable(0.5)(1.0) + 4.0 * v1.stderr_of_mean());
  }
  SUBCASE("eigen decay along the subordinated path") {
    for (std::size_t i : {1u, 2u}) {
      for (double s : {0.5, 1.0}) {
        RunningStats c;
        for (std::size_t r = 0; r < 20000; ++r) {
          const SubordinatedPath p = subordinated_path(kCircle, BernsteinFunction::stable(0.5), s, s, 1e-3,
                                                       InitialLaw::invariant(), Stream(7, r));
          c.add(spec.phi(i, p.position(0)) * spec.phi(i, p.position(1)));
        }
        const double target = std::exp(-std::sqrt(spec.eigenvalue(i)) * s);
        CAPTURE(i);
        CAPTURE(s);
        CHECK(std::abs(c.mean() - target) <= 4.0 * c.stderr_of_mean());
      }
    }
  }
}

TEST_CASE("initial laws") {
  const std::size_t n = 20000;
  SUBCASE("restricted uniform lives on an arc of length C/k") {
    Stream rng(8);
    for (std::size_t i = 0; i < 1000; ++i) {
      const Point x = sample_initial(kCircle, InitialLaw::restricted_uniform(4.0), rng);
      CHECK(x[0] >= 0.0);
      CHECK(x[0] <= kTwoPi / 4.0);
    }
  }
  SUBCASE("tilted density 1 + a cos(2πu)") {
    Stream rng(9);
    RunningStats c;
    for (std::size_t i = 0; i < n; ++i) c.add(std::cos(sample_initial(ModelSpace::interval(1.0), InitialLaw::tilted(1.5), rng)[0] * kTwoPi));
    CHECK(std::abs(c.mean() - 0.25) <= 4.0 * c.stderr_of_mean());
  }
  SUBCASE("parsing") {
    CHECK(parse_initial_law("invariant").kind == InitialLaw::Kind::invariant);
    CHECK(parse_initial_law("point(1,2)").x0 == Point{1.0, 2.0});
    CHECK(parse_initial_law("tilted(3)").k == 3.0);
    CHECK_THROWS_AS(parse_initial_law("gaussian"), DomainError);
  }
}

TEST_CASE("path persistence round trips") {
  const SubordinatedPath p = subordinated_path(ModelSpace::torus(2), BernsteinFunction::gamma(), 1.0, 0.1, 1e-3,
                                               InitialLaw::invariant(), Stream(10));
  std::stringstream csv;
  write_path_csv(p, csv);
  const SubordinatedPath q = read_path_csv(csv);
  CHECK(q.obs_times == p.obs_times);
  CHECK(q.coords == p.coords);
  CHECK(q.sub_path.values == p.sub_path.values);
  CHECK(q.dim == 2);

  std::stringstream bin(std::ios::in | std::ios::out | std::ios::binary);
  write_path_binary(p, bin);
  const SubordinatedPath r = read_path_binary(bin);
  CHECK(r.coords == p.coords);
  CHECK(r.sub_path.values == p.sub_path.values);
  CHECK(r.model == p.model);
  CHECK(r.sub_path.family == p.sub_path.family);
}

TEST_CASE("paths are reproducible") {
  const auto a = subordinated_path(kCircle, BernsteinFunction::b1(0.5), 2.0, 0.05, 1e-3, InitialLaw::invariant(), Stream(11, 4));
  const auto b = subordinated_path(kCircle, BernsteinFunction::b1(0.5), 2.0, 0.05, 1e-3, InitialLaw::invariant(), Stream(11, 4));
  CHECK(a.coords == b.coords);
  CHECK_THROWS_AS(subordinated_path(kCircle, BernsteinFunction::linear(), 1.0, 1e-4, 1e-3, InitialLaw::invariant(), Stream(1)),
                  DomainError);
}
