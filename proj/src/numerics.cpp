#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>
#include <cmath>

#include "sublab/common.hpp"
#include "sublab/quadrature.hpp"
#include "sublab/stats.hpp"

namespace sublab {

std::vector<double> log_grid(double lo, double hi, int per_decade) {
  if (!(lo > 0.0) || !(hi > lo) || per_decade < 1) throw DomainError("log_grid: need 0 < lo < hi");
  const double decades = std::log10(hi / lo);
  const int n = static_cast<int>(std::ceil(decades * per_decade));
  std::vector<double> g(n + 1);
  for (int i = 0; i <= n; ++i) g[i] = lo * std::pow(hi / lo, static_cast<double>(i) / n);
  g.back() = hi;
  return g;
}

LineFit weighted_line_fit(std::span<const double> x, std::span<const double> y,
                          std::span<const double> w) {
  if (x.size() != y.size() || x.size() != w.size() || x.size() < 2)
    throw DomainError("weighted_line_fit: need at least two points of equal-length inputs");
  double sw = 0, sx = 0, sy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sw += w[i];
    sx += w[i] * x[i];
    sy += w[i] * y[i];
  }
  const double mx = sx / sw, my = sy / sw;
  double sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += w[i] * (x[i] - mx) * (x[i] - mx);
    sxy += w[i] * (x[i] - mx) * (y[i] - my);
  }
  if (!(sxx > 1e-300)) throw DomainError("weighted_line_fit: singular design (constant abscissa)");
  LineFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double r = y[i] - fit.intercept - fit.slope * x[i];
    fit.chi2 += w[i] * r * r;
  }
  // Weights are inverse variances; with absolute weights the slope variance is 1/sxx.
  fit.slope_se = std::sqrt(1.0 / sxx);
  return fit;
}

namespace quad {

Integral finite(const Integrand& f, double a, double b, double rel_tol, unsigned max_depth) {
  if (a == b) return {};
  Integral r;
  r.value = boost::math::quadrature::gauss_kronrod<double, 31>::integrate(f, a, b, max_depth, rel_tol,
                                                                          &r.error);
  return r;
}

Integral singular(const Integrand& f, double a, double b, double rel_tol) {
  if (a == b) return {};
  boost::math::quadrature::tanh_sinh<double> integrator;
  Integral r;
  r.value = integrator.integrate(f, a, b, rel_tol, &r.error);
  return r;
}

Integral to_infinity(const Integrand& f, double a, double rel_tol) {
  boost::math::quadrature::exp_sinh<double> integrator;
  Integral r;
  auto shifted = [&](double u) { return f(a + u); };
  r.value = integrator.integrate(shifted, rel_tol, &r.error);
  return r;
}

double gauss_legendre(const Integrand& f, double a, double b, int panels) {
  const double h = (b - a) / panels;
  double sum = 0.0;
  for (int k = 0; k < panels; ++k) {
    const double lo = a + k * h;
    sum += boost::math::quadrature::gauss<double, 20>::integrate(f, lo, lo + h);
  }
  return sum;
}

}  // namespace quad
}  // namespace sublab
