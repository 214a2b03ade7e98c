#include <cmath>
#include <vector>

#include "doctest.h"
#include "sublab/bernstein.hpp"

using namespace sublab;

namespace {

std::vector<BernsteinFunction> builtins() {
  return {BernsteinFunction::linear(), BernsteinFunction::stable(0.3), BernsteinFunction::stable(0.5),
          BernsteinFunction::stable(0.8), BernsteinFunction::gamma(),   BernsteinFunction::b1(0.25),
          BernsteinFunction::b1(0.5),      BernsteinFunction::b1(0.75), BernsteinFunction::b2()};
}

}  // namespace

TEST_CASE("closed forms") {
  CHECK(BernsteinFunction::b2()(1.0) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(BernsteinFunction::stable(0.5)(4.0) == doctest::Approx(2.0).epsilon(1e-15));
  CHECK(BernsteinFunction::b1(0.0)(1.0) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(BernsteinFunction::gamma()(std::exp(1.0) - 1.0) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(BernsteinFunction::linear()(3.5) == 3.5);
  CHECK_THROWS_AS(BernsteinFunction::b2()(-1.0), DomainError);
}

TEST_CASE("make_family parses tags") {
  CHECK(make_family("stable(0.3)")(8.0) == doctest::Approx(std::pow(8.0, 0.3)));
  CHECK(make_family("stable", 0.7)(2.0) == doctest::Approx(std::pow(2.0, 0.7)));
  CHECK(make_family("b1(0.5)").parameter() == 0.5);
  CHECK(make_family("b2").family() == Family::b2);
  CHECK_THROWS_AS(make_family("nonsense"), DomainError);
}

TEST_CASE("B(0) = 0, nonnegative and nondecreasing") {
  const auto grid = log_grid(1e-6, 1e8, 20);
  for (const auto& b : builtins()) {
    CAPTURE(b.tag());
    CHECK(b(0.0) == 0.0);
    double prev = 0.0;
    for (double l : grid) {
      const double v = b(l);
      CHECK(v >= 0.0);
      CHECK(v >= prev);
      prev = v;
    }
  }
}

TEST_CASE("derivative is completely monotone up to order 3") {
  // (-1)^k Δ_h^k B' ≥ 0 for k = 0..3 with h = 1e-3·λ, on the finite-difference level.
  for (const auto& b : builtins()) {
    CAPTURE(b.tag());
    for (double l : log_grid(1e-2, 1e3, 4)) {
      const double h = 1e-3 * l;
      const double d0 = b.derivative(l), d1 = b.derivative(l + h), d2 = b.derivative(l + 2 * h),
                   d3 = b.derivative(l + 3 * h);
      const double tol = 1e-9 * std::abs(d0) + 1e-300;
      CHECK(d0 >= 0.0);
      CHECK(-(d1 - d0) >= -tol);
      CHECK(d2 - 2 * d1 + d0 >= -tol);
      CHECK(-(d3 - 3 * d2 + 3 * d1 - d0) >= -tol);
    }
  }
}

TEST_CASE("b1 at alpha 0 coincides with b2") {
  const auto b1 = BernsteinFunction::b1(0.0), b2 = BernsteinFunction::b2();
  for (double l : log_grid(1e-4, 1e10, 10)) CHECK(std::abs(b1(l) - b2(l)) <= 1e-14);
}

TEST_CASE("classify: stated memberships") {
  const auto grid = default_probe_grid();
  SUBCASE("b1(0.5), alpha 0.5") {
    const ClassReport r = classify(BernsteinFunction::b1(0.5), 0.5, grid);
    CHECK(r.in_B_lower_alpha.verdict == Verdict::yes);
    CHECK(r.in_B_upper_alpha.verdict == Verdict::no);
  }
  SUBCASE("b2, alpha 0.3") {
    const ClassReport r = classify(BernsteinFunction::b2(), 0.3, grid);
    CHECK(r.in_B_lower_alpha.verdict == Verdict::yes);
    CHECK(r.in_B_upper_alpha.verdict == Verdict::no);
  }
  SUBCASE("stable(0.7), alpha 0.7") {
    const ClassReport r = classify(BernsteinFunction::stable(0.7), 0.7, grid);
    CHECK(r.in_B_lower_alpha.verdict == Verdict::yes);
    CHECK(r.in_B_upper_alpha.verdict == Verdict::yes);
    REQUIRE(!r.in_B_upper_alpha.witness.ratios.empty());
    for (double q : r.in_B_upper_alpha.witness.ratios) CHECK(q == doctest::Approx(1.0).epsilon(1e-12));
  }
  SUBCASE("b1 and b2 across alpha") {
    for (double a : {0.0, 0.25, 0.5, 0.75}) {
      CAPTURE(a);
      const ClassReport r = classify(BernsteinFunction::b1(a), a, grid, std::vector<std::pair<int, double>>{{1, 1.0}});
      CHECK(r.in_B_lower_alpha.verdict == Verdict::yes);
      CHECK(r.satisfies_1_2.at(0).verdict == Integrability::infinite);
      const ClassReport r0 = classify(BernsteinFunction::b1(a), 0.0, grid);
      CHECK(r0.in_B_upper_alpha.verdict == Verdict::yes);
    }
    for (double a : {0.0, 0.25, 0.5, 1.0}) {
      CAPTURE(a);
      const ClassReport r = classify(BernsteinFunction::b2(), a, grid);
      CHECK(r.in_B_lower_alpha.verdict == Verdict::yes);
      CHECK(r.in_B_upper_alpha.verdict == (a == 0.0 ? Verdict::yes : Verdict::no));
    }
  }
  SUBCASE("a yes verdict carries its witnesses") {
    const ClassReport r = classify(BernsteinFunction::gamma(), 0.0, grid);
    CHECK(r.in_B_upper_alpha.verdict == Verdict::yes);
    CHECK(r.in_B_upper_alpha.witness.lambdas.size() == r.in_B_upper_alpha.witness.ratios.size());
    CHECK(!r.in_B_upper_alpha.witness.lambdas.empty());
    REQUIRE(r.kappa_lower.has_value());
    CHECK(*r.kappa_lower > 0.0);
  }
}

TEST_CASE("integrability of exp(-t B(r)) r^{d/2-1}") {
  CHECK(check_condition_1_2(BernsteinFunction::b2(), 2, 1.0).verdict == Integrability::infinite);
  CHECK(check_condition_1_2(BernsteinFunction::b1(0.5), 1, 1.0).verdict == Integrability::infinite);
  const ConditionCheck s = check_condition_1_2(BernsteinFunction::stable(0.5), 2, 1.0);
  REQUIRE(s.verdict == Integrability::finite);
  // ∫₁^∞ e^{-√r} dr = 4/e.
  CHECK(s.estimate == doctest::Approx(4.0 / std::exp(1.0)).epsilon(1e-8));
  CHECK(check_condition_1_2(BernsteinFunction::linear(), 3, 0.5).verdict == Integrability::finite);
  // log(1+r) growth: ∫ r^{d/2-1}(1+r)^{-t} dr converges iff t > d/2.
  CHECK(check_condition_1_2(BernsteinFunction::gamma(), 1, 1.0).verdict == Integrability::finite);
  CHECK(check_condition_1_2(BernsteinFunction::gamma(), 2, 0.5).verdict == Integrability::infinite);
}

TEST_CASE("bound constants") {
  const auto grid = default_probe_grid();
  const BoundConstants s = bound_constants(BernsteinFunction::stable(0.5), 0.5, grid);
  CHECK(*s.kappa_lower == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(*s.kappa_upper == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(*bound_constants(BernsteinFunction::linear(), 1.0, grid).kappa_lower == doctest::Approx(1.0));

  // Oracle: maximize (1 − (1+t)^{-1/2})/√t over the same grid directly.
  const BoundConstants b1 = bound_constants(BernsteinFunction::b1(0.5), 0.5, grid);
  double best = 0.0;
  for (double t : grid) best = std::max(best, (1.0 - 1.0 / std::sqrt(1.0 + t)) / std::sqrt(t));
  CHECK(*b1.kappa_upper == doctest::Approx(best).epsilon(1e-14));
  CHECK(*b1.kappa_upper == doctest::Approx(0.30026936714539).epsilon(1e-12));
  CHECK(!bound_constants(BernsteinFunction::b2(), 0.5, grid).kappa_lower);

  for (const auto& b : builtins()) {
    const double a = b.family() == Family::stable ? b.parameter() : (b.family() == Family::linear ? 1.0 : 0.0);
    const BoundConstants k = bound_constants(b, a, grid);
    CAPTURE(b.tag());
    for (double t : grid) {
      if (k.kappa_lower) CHECK(*k.kappa_lower * std::min(t, std::pow(t, a)) <= b(t) * (1 + 1e-12));
      if (k.kappa_upper) CHECK(b(t) <= *k.kappa_upper * std::pow(t, a) * (1 + 1e-12));
    }
  }
}
