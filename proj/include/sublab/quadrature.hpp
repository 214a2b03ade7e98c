#pragma once

#include <functional>

namespace sublab::quad {

struct Integral {
  double value = 0.0;
  double error = 0.0;
};

using Integrand = std::function<double(double)>;

// Adaptive Gauss–Kronrod on a finite interval.
Integral finite(const Integrand& f, double a, double b, double rel_tol = 1e-10, unsigned max_depth = 18);

// Double-exponential rule on [a, b] for integrable endpoint singularities.
Integral singular(const Integrand& f, double a, double b, double rel_tol = 1e-10);

// Double-exponential rule on [a, ∞).
Integral to_infinity(const Integrand& f, double a, double rel_tol = 1e-10);

// Composite fixed-order Gauss–Legendre with `panels` equal panels; deterministic cost.
double gauss_legendre(const Integrand& f, double a, double b, int panels);

}  // namespace sublab::quad
