#include "sublab/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "sublab/quadrature.hpp"
#include "sublab/stats.hpp"

namespace sublab {

namespace {

constexpr double kSqrt2 = 1.4142135623730951;
// Cramér's bound |He_n(z)| ≤ K √(n!) e^{z²/4}.
constexpr double kCramer = 1.0865;

double weight(double lambda, double t, const BernsteinFunction* b) {
  return std::exp(-t * (b ? (*b)(lambda) : lambda));
}

// Normalized Hermite h_0..h_n at z: h_n = He_n(z)/√(n!).
void hermite(int n, double z, std::vector<double>& h) {
  h.assign(static_cast<std::size_t>(n) + 1, 0.0);
  h[0] = 1.0;
  if (n >= 1) h[1] = z;
  for (int j = 1; j < n; ++j) h[j + 1] = (z * h[j] - std::sqrt(static_cast<double>(j)) * h[j - 1]) / std::sqrt(j + 1.0);
}

// Calls fn(k, |k|²) for every lattice vector of Z^d with |k|² ≤ r2 (including 0).
template <class Fn>
void for_each_lattice_point(int d, long r2, Fn&& fn) {
  const int r = static_cast<int>(std::floor(std::sqrt(static_cast<double>(r2))));
  std::vector<int> k(d, 0);
  auto rec = [&](auto&& self, int j, long used) -> void {
    if (j == d) {
      fn(k, used);
      return;
    }
    const int lim = std::min(r, static_cast<int>(std::floor(std::sqrt(static_cast<double>(r2 - used)))));
    for (int v = -lim; v <= lim; ++v) {
      k[j] = v;
      self(self, j + 1, used + static_cast<long>(v) * v);
    }
  };
  rec(rec, 0, 0);
}

std::vector<std::vector<int>> lattice_ball(int d, long r2) {
  std::vector<std::vector<int>> out;
  for_each_lattice_point(d, r2, [&](const std::vector<int>& k, long) { out.push_back(k); });
  return out;
}

// Lattice representative: first nonzero coordinate positive.
bool canonical(const std::vector<int>& k) {
  for (int v : k)
    if (v != 0) return v > 0;
  return false;
}

double surface_area(int d) { return 2.0 * std::pow(kPi, 0.5 * d) / std::tgamma(0.5 * d); }

}  // namespace

const char* to_string(SpectralSource s) {
  switch (s) {
    case SpectralSource::circle: return "circle";
    case SpectralSource::torus: return "torus";
    case SpectralSource::interval_neumann: return "interval_neumann";
    default: return "ou_hermite";
  }
}

const char* to_string(SumVerdict v) {
  switch (v) {
    case SumVerdict::convergent: return "convergent";
    case SumVerdict::divergent: return "divergent";
    default: return "inconclusive";
  }
}

bool SpectralData::available(const ModelSpace& m) {
  switch (m.kind()) {
    case ModelKind::ou: return m.dim() == 1;
    case ModelKind::euclidean: return m.dim() == 1 && m.q() == 2.0 && !m.has_perturbation();
    default: return true;
  }
}

SpectralData SpectralData::from_model(const ModelSpace& m, std::size_t modes) {
  if (!available(m)) throw DomainError("no closed-form spectrum for model " + m.tag());
  if (modes < 2) modes = 2;
  SpectralData s;
  s.dim_ = m.dim();
  switch (m.kind()) {
    case ModelKind::circle:
    case ModelKind::torus: {
      s.source_ = m.kind() == ModelKind::circle ? SpectralSource::circle : SpectralSource::torus;
      s.period_ = m.side();
      s.omega_ = kTwoPi / s.period_;
      const int d = m.dim();
      // Grow the lattice ball until it holds enough modes.
      long r2 = 1;
      std::vector<std::vector<int>> ks;
      for (;;) {
        ks = lattice_ball(d, r2);
        if (ks.size() >= modes + 1) break;
        r2 *= 2;
      }
      std::vector<std::pair<long, std::vector<int>>> reps;
      for (auto& k : ks) {
        if (!canonical(k)) continue;
        long n2 = 0;
        for (int v : k) n2 += static_cast<long>(v) * v;
        reps.emplace_back(n2, k);
      }
      std::stable_sort(reps.begin(), reps.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
      s.modes_.push_back(Mode{0.0, std::vector<int>(d, 0), false});
      for (const auto& [n2, k] : reps) {
        const double lam = s.omega_ * s.omega_ * static_cast<double>(n2);
        s.modes_.push_back(Mode{lam, k, false});
        s.modes_.push_back(Mode{lam, k, true});
      }
      break;
    }
    case ModelKind::interval: {
      s.source_ = SpectralSource::interval_neumann;
      s.length_ = m.length();
      s.omega_ = kPi / s.length_;
      for (std::size_t k = 0; k <= modes; ++k)
        s.modes_.push_back(Mode{std::pow(s.omega_ * static_cast<double>(k), 2), {static_cast<int>(k)}, false});
      break;
    }
    default: {
      s.source_ = SpectralSource::ou_hermite;
      s.kappa_ = m.kappa();
      for (std::size_t n = 0; n <= modes; ++n)
        s.modes_.push_back(Mode{2.0 * s.kappa_ * static_cast<double>(n), {static_cast<int>(n)}, false});
    }
  }
  return s;
}

double SpectralData::phi(std::size_t i, std::span<const double> x) const {
  const Mode& md = modes_.at(i);
  switch (source_) {
    case SpectralSource::circle:
    case SpectralSource::torus: {
      if (i == 0) return 1.0;
      double arg = 0.0;
      for (int j = 0; j < dim_; ++j) arg += md.k[j] * x[j];
      arg *= omega_;
      return kSqrt2 * (md.sine ? std::sin(arg) : std::cos(arg));
    }
    case SpectralSource::interval_neumann:
      return md.k[0] == 0 ? 1.0 : kSqrt2 * std::cos(omega_ * md.k[0] * x[0]);
    default: return phi_derivative(i, x[0], 0);
  }
}

double SpectralData::phi_derivative(std::size_t i, double x, int order) const {
  if (dim_ != 1) throw DomainError("phi_derivative: one-dimensional sources only");
  if (order < 0 || order > 2) throw DomainError("phi_derivative: order must be 0, 1 or 2");
  const Mode& md = modes_.at(i);
  switch (source_) {
    case SpectralSource::circle:
    case SpectralSource::interval_neumann: {
      if (md.k[0] == 0) return order == 0 ? 1.0 : 0.0;
      const double w = omega_ * md.k[0];
      const double a = w * x;
      const double c = kSqrt2 * std::cos(a), s = kSqrt2 * std::sin(a);
      if (!md.sine) return order == 0 ? c : order == 1 ? -w * s : -w * w * c;
      return order == 0 ? s : order == 1 ? w * c : -w * w * s;
    }
    case SpectralSource::ou_hermite: {
      const int n = md.k[0];
      const double g = std::sqrt(2.0 * kappa_);
      std::vector<double> h;
      hermite(n, g * x, h);
      if (order == 0) return h[n];
      if (order == 1) return n >= 1 ? g * std::sqrt(static_cast<double>(n)) * h[n - 1] : 0.0;
      return n >= 2 ? g * g * std::sqrt(static_cast<double>(n) * (n - 1)) * h[n - 2] : 0.0;
    }
    default: throw DomainError("phi_derivative: unsupported source");
  }
}

// Upper bound on Σ over all modes beyond index k of e^{−w(λ)t}, taken as an
// integral of the (decreasing) weight over the remaining "radius".
double SpectralData::weight_sum_tail(double t, const BernsteinFunction* b, std::size_t k) const {
  auto integral = [&](auto&& f, double from) {
    try {
      const quad::Integral q = quad::to_infinity(f, from, 1e-8);
      return std::isfinite(q.value) ? q.value + q.error : std::numeric_limits<double>::infinity();
    } catch (const std::exception&) {
      return std::numeric_limits<double>::infinity();
    }
  };
  const double K = static_cast<double>(k);
  switch (source_) {
    case SpectralSource::circle:
      return 2.0 * integral([&](double x) { return weight(std::pow(omega_ * x, 2), t, b); }, K);
    case SpectralSource::interval_neumann:
      return integral([&](double x) { return weight(std::pow(omega_ * x, 2), t, b); }, K);
    case SpectralSource::ou_hermite:
      return integral([&](double x) { return weight(2.0 * kappa_ * x, t, b); }, K);
    default: {
      // Lattice points with |k| > R: each unit cube around them lies beyond R − √d/2.
      const double shift = 0.5 * std::sqrt(static_cast<double>(dim_));
      const double from = std::max(0.0, K - shift);
      const double sa = surface_area(dim_);
      return integral([&](double r) {
        const double rr = std::max(0.0, r - shift);
        return sa * std::pow(r, dim_ - 1) * weight(std::pow(omega_ * rr, 2), t, b);
      }, from);
    }
  }
}

SeriesValue SpectralData::heat_kernel(double t, std::span<const double> x, std::span<const double> y,
                                      const BernsteinFunction* b, double tol) const {
  if (!(t > 0.0)) throw DomainError("heat_kernel: t must be positive");
  SeriesValue r;
  if (source_ == SpectralSource::torus && b == nullptr) {
    // Product of circle kernels, each with its own share of the tolerance.
    SpectralData circ = *this;
    circ.source_ = SpectralSource::circle;
    circ.dim_ = 1;
    r.value = 1.0;
    double bound = 0.0;
    for (int j = 0; j < dim_; ++j) {
      const SeriesValue c = circ.heat_kernel(t, x.subspan(j, 1), y.subspan(j, 1), nullptr, tol / (2.0 * dim_));
      bound = bound * c.value + r.value * c.tail_bound + bound * c.tail_bound;
      r.value *= c.value;
      r.truncation_index = std::max(r.truncation_index, c.truncation_index);
    }
    r.tail_bound = bound;
    return r;
  }
  if (source_ == SpectralSource::ou_hermite && b == nullptr) {
    // Mehler's formula.
    const double g = std::sqrt(2.0 * kappa_);
    const double u = g * x[0], v = g * y[0];
    const double rho = std::exp(-2.0 * kappa_ * t);
    const double one = -std::expm1(-4.0 * kappa_ * t);
    r.value = std::exp((2.0 * rho * u * v - rho * rho * (u * u + v * v)) / (2.0 * one)) / std::sqrt(one);
    return r;
  }

  // Multiplier of the per-mode weight bounding |Σ_{mode in index} φ(x)φ(y)|.
  double amp = 1.0;
  if (source_ == SpectralSource::interval_neumann) amp = 2.0;
  if (source_ == SpectralSource::ou_hermite) {
    const double g2 = 2.0 * kappa_;
    amp = kCramer * kCramer * std::exp(0.25 * g2 * (x[0] * x[0] + y[0] * y[0]));
  }
  // Truncation level K: radius in frequency units (k for 1D sources, |k| for the torus).
  std::size_t K = 8;
  double tail = amp * weight_sum_tail(t, b, K);
  if (!std::isfinite(tail))
    throw ConvergenceError("heat_kernel: eigen-weights do not decay; the kernel has no density", tail);
  while (!(tail <= tol)) {
    if (K > (std::size_t{1} << 22)) throw ConvergenceError("heat_kernel: tail bound unattainable", tail);
    K *= 2;
    tail = amp * weight_sum_tail(t, b, K);
  }
  double sum = 1.0;
  switch (source_) {
    case SpectralSource::circle: {
      const double dx = x[0] - y[0];
      for (std::size_t k = 1; k <= K; ++k)
        sum += 2.0 * weight(std::pow(omega_ * k, 2), t, b) * std::cos(omega_ * k * dx);
      break;
    }
    case SpectralSource::interval_neumann:
      for (std::size_t k = 1; k <= K; ++k)
        sum += 2.0 * weight(std::pow(omega_ * k, 2), t, b) * std::cos(omega_ * k * x[0]) * std::cos(omega_ * k * y[0]);
      break;
    case SpectralSource::ou_hermite: {
      const double g = std::sqrt(2.0 * kappa_);
      std::vector<double> hx, hy;
      hermite(static_cast<int>(K), g * x[0], hx);
      hermite(static_cast<int>(K), g * y[0], hy);
      for (std::size_t n = 1; n <= K; ++n) sum += weight(2.0 * kappa_ * n, t, b) * hx[n] * hy[n];
      break;
    }
    default: {
      const long r2 = static_cast<long>(K) * static_cast<long>(K);
      for_each_lattice_point(dim_, r2, [&](const std::vector<int>& k, long n2) {
        if (n2 == 0) return;
        double arg = 0.0;
        for (int j = 0; j < dim_; ++j) arg += k[j] * (x[j] - y[j]);
        sum += weight(omega_ * omega_ * static_cast<double>(n2), t, b) * std::cos(omega_ * arg);
      });
    }
  }
  r.value = sum;
  r.truncation_index = K;
  r.tail_bound = tail;
  return r;
}

SeriesValue SpectralData::trace_gamma(double t, double tol) const {
  if (!(t > 0.0)) throw DomainError("trace_gamma: t must be positive");
  SeriesValue r;
  switch (source_) {
    case SpectralSource::ou_hermite:
      r.value = 1.0 / -std::expm1(-2.0 * kappa_ * t);
      return r;
    case SpectralSource::torus: {
      SpectralData circ = *this;
      circ.source_ = SpectralSource::circle;
      circ.dim_ = 1;
      const SeriesValue c = circ.trace_gamma(t, tol / (2.0 * dim_));
      r.value = std::pow(c.value, dim_);
      r.tail_bound = std::pow(c.value + c.tail_bound, dim_) - r.value;
      r.truncation_index = c.truncation_index;
      return r;
    }
    default: {
      const double zero = 0.0;
      return heat_kernel(t, std::span<const double>(&zero, 1), std::span<const double>(&zero, 1), nullptr, tol);
    }
  }
}

double SpectralData::eta_alpha(double alpha, double eps) const {
  if (!(eps > 0.0 && eps <= 1.0)) throw DomainError("eta_alpha: eps must lie in (0, 1]");
  if (eps == 1.0) return 1.0;
  // u = e^s turns the u^{−d/2} growth near 0 into a smooth exponential.
  auto f = [&](double s) {
    const double u = std::exp(s);
    return trace_gamma(u, 1e-12).value * std::pow(u, alpha + 1.0);
  };
  return 1.0 + quad::finite(f, std::log(eps), 0.0, 1e-10).value;
}

namespace {

// Divergence test for Σ g(λ_i): λ grows like x^growth along the index x, and
// the count of modes up to radius x grows like x^{dim}.
SumVerdict sum_verdict(const BernsteinFunction& b, double growth, int dim, std::string& basis) {
  if (const auto a = b.asymptotics()) {
    basis = "asymptotics";
    // Summand over radius ~ x^{dim−1} · x^{−growth(1+e)} (log x)^{−lp}.
    const double p = growth * (1.0 + a->exponent) - (dim - 1);
    if (p > 1.0 || (p == 1.0 && a->log_power > 1)) return SumVerdict::convergent;
    return SumVerdict::divergent;
  }
  basis = "tail exponent";
  auto slope = [&](double x) {
    const double lam = std::pow(x, growth);
    const double h = 1e-3;
    const double l2 = std::pow(x * (1 + h), growth);
    const double g1 = std::log(lam * b(lam)), g2 = std::log(l2 * b(l2));
    return (dim - 1) - (g2 - g1) / std::log1p(h);
  };
  const double s1 = slope(1e4), s2 = slope(1e5);
  if (s1 <= -1.05 && s2 <= -1.05) return SumVerdict::convergent;
  if (s1 >= -0.95 && s2 >= -0.95) return SumVerdict::divergent;
  return SumVerdict::inconclusive;
}

}  // namespace

LimitSum limit_sum(const SpectralData& spec, const BernsteinFunction& b, double c, double tol) {
  if (!(c > 0.0) || !(tol > 0.0)) throw DomainError("limit_sum: need c > 0 and tol > 0");
  LimitSum out;
  const bool lattice = spec.source() == SpectralSource::torus;
  const double growth = spec.source() == SpectralSource::ou_hermite ? 1.0 : 2.0;
  out.verdict = sum_verdict(b, growth, lattice ? spec.dim() : 1, out.basis);
  if (out.verdict != SumVerdict::convergent) return out;

  double unit = 0.0, mult = 1.0;
  switch (spec.source()) {
    case SpectralSource::circle:
    case SpectralSource::torus: unit = kTwoPi / spec.period(); mult = 2.0; break;
    case SpectralSource::interval_neumann: unit = kPi / spec.length(); break;
    default: unit = 2.0 * spec.kappa();
  }
  auto lam_of = [&](double x) { return growth == 2.0 ? std::pow(unit * x, 2) : unit * x; };
  auto term = [&](double x) {
    const double lam = lam_of(x);
    return c / (lam * b(lam));
  };

  if (!lattice) {
    // Decreasing summand f(k): the tail lies in [∫_{K+1}^∞ f, ∫_K^∞ f]; report the midpoint.
    double partial = 0.0;
    std::size_t done = 0;
    for (std::size_t K = 64;; K *= 2) {
      for (std::size_t k = done + 1; k <= K; ++k) partial += mult * term(static_cast<double>(k));
      done = K;
      const quad::Integral hi = quad::to_infinity([&](double x) { return mult * term(x); }, static_cast<double>(K), 1e-12);
      const quad::Integral lo = quad::to_infinity([&](double x) { return mult * term(x); }, static_cast<double>(K + 1), 1e-12);
      const double half = 0.5 * (hi.value - lo.value) + hi.error + lo.error;
      if (half <= tol || K >= (std::size_t{1} << 26)) {
        out.value = partial + 0.5 * (hi.value + lo.value);
        out.truncation_index = K;
        out.tail_bound = half;
        if (half > tol) throw ConvergenceError("limit_sum: tolerance unattainable", half);
        return out;
      }
    }
  }

  // Torus: every nonzero lattice vector carries one eigenpair's worth of
  // c/(λB(λ)) (the ±k pair holds a cosine and a sine). Inside |k| ≤ R the sum
  // is exact; outside, unit cubes around lattice points give a certified bound.
  const int d = spec.dim();
  const double sa = surface_area(d);
  const double shift = 0.5 * std::sqrt(static_cast<double>(d));
  auto g = [&](double r) {
    const double lam = std::pow(unit * r, 2);
    return c / (lam * b(lam));
  };
  for (std::size_t R = 8;; R *= 2) {
    const double Rd = static_cast<double>(R);
    const double upper =
        quad::to_infinity([&](double s) { return sa * std::pow(s + shift, d - 1) * g(s); }, Rd - 2.0 * shift, 1e-10).value;
    if (upper <= tol || R >= 2048) {
      const double estimate = quad::to_infinity([&](double r) { return sa * std::pow(r, d - 1) * g(r); }, Rd, 1e-10).value;
      double partial = 0.0;
      for_each_lattice_point(d, static_cast<long>(R) * static_cast<long>(R), [&](const std::vector<int>&, long n2) {
        if (n2 > 0) partial += g(std::sqrt(static_cast<double>(n2)));
      });
      out.value = partial + estimate;
      out.truncation_index = R;
      out.tail_bound = upper;
      out.basis += "; lattice";
      if (upper > tol) throw ConvergenceError("limit_sum: tolerance unattainable on the torus", upper);
      return out;
    }
  }
}

Estimate delta_eps(const ModelSpace& m, double eps, const DeltaOptions& opt) {
  if (!(eps > 0.0)) throw DomainError("delta_eps: eps must be positive");
  Estimate e;
  DeltaRoute route = opt.route;
  const bool spectral_ok =
      m.kind() == ModelKind::circle || m.kind() == ModelKind::torus || m.kind() == ModelKind::interval;
  if (route == DeltaRoute::automatic) route = spectral_ok ? DeltaRoute::spectral : DeltaRoute::monte_carlo;
  if (route == DeltaRoute::spectral && !spectral_ok)
    throw DomainError("delta_eps: spectral route needs a circle, torus or interval model");

  if (route == DeltaRoute::spectral) {
    e.route = "spectral";
    if (m.kind() == ModelKind::interval) {
      // δ = 2 Var μ − 2 Σ e^{−λ_k ε} μ(x φ_k)², with μ(x φ_k)² = 8L²/(π⁴k⁴) for odd k.
      const double L = m.length();
      double s = 0.0;
      for (int k = 1; k < 200000; k += 2) {
        const double term = std::exp(-std::pow(kPi * k / L, 2) * eps) * 8.0 * L * L / std::pow(kPi * k, 4);
        s += term;
        if (term < 1e-18) break;
      }
      e.value = L * L / 6.0 - 2.0 * s;
      return e;
    }
    // Homogeneous: δ = ∫ y² q_ε(y) dy over a fundamental domain, q_ε the
    // wrapped Gaussian of variance 2ε; the torus adds coordinates.
    const double C = m.side();
    const double sd = std::sqrt(2.0 * eps);
    const int images = static_cast<int>(std::ceil(12.0 * sd / C)) + 1;
    auto density = [&](double y) {
      double s = 0.0;
      for (int j = -images; j <= images; ++j) {
        const double z = (y + j * C) / sd;
        s += std::exp(-0.5 * z * z);
      }
      return s / (sd * std::sqrt(kTwoPi));
    };
    auto f = [&](double y) { return y * y * density(y); };
    // The peak at 0 is resolved by splitting at a few standard deviations.
    const double cut = std::min(0.5 * C, 10.0 * sd);
    double v = 2.0 * quad::finite(f, 0.0, cut, 1e-12).value;
    if (cut < 0.5 * C) v += 2.0 * quad::finite(f, cut, 0.5 * C, 1e-12).value;
    e.value = m.dim() * v;
    return e;
  }

  e.route = "monte carlo";
  Stream root(opt.seed, 0x6465);
  RunningStats st;
  std::vector<double> x(m.dim()), y(m.dim());
  for (std::size_t i = 0; i < opt.pairs; ++i) {
    Stream rng = root.split(i);
    const InvariantSample s = sample_invariant(m, 1, rng);
    std::copy(s.coords.begin(), s.coords.end(), x.begin());
    y = x;
    advance(m, y, 0.0, eps, std::min(opt.fine_dt, eps), rng);
    const double r = m.distance(x, y);
    st.add(r * r);
  }
  e.value = st.mean();
  e.se = st.stderr_of_mean();
  return e;
}

Estimate gamma_tilde(const ModelSpace& m, double t) {
  if (!(t > 0.0)) throw DomainError("gamma_tilde: t must be positive");
  const double r = std::sqrt(t);
  Estimate e;
  e.route = "quadrature";
  switch (m.kind()) {
    case ModelKind::circle:
      e.route = "closed form";
      e.value = std::max(m.circumference() / (2.0 * r), 1.0);
      return e;
    case ModelKind::torus: {
      const double s = m.side();
      double mass = 0.0;
      if (m.dim() == 1) {
        mass = std::min(2.0 * r / s, 1.0);
      } else if (m.dim() == 2) {
        auto chord = [&](double x) { return 2.0 * std::min(0.5 * s, std::sqrt(std::max(0.0, r * r - x * x))); };
        const double lim = std::min(0.5 * s, r);
        mass = 2.0 * quad::finite(chord, 0.0, lim, 1e-12).value / (s * s);
      } else {
        throw DomainError("gamma_tilde: torus dimension above 2 is not supported");
      }
      e.value = 1.0 / mass;
      return e;
    }
    case ModelKind::interval: {
      const double L = m.length();
      auto f = [&](double x) { return (1.0 / L) / ((std::min(L, x + r) - std::max(0.0, x - r)) / L); };
      const double mid = std::min(r, 0.5 * L);
      e.value = quad::finite(f, 0.0, mid, 1e-12).value + quad::finite(f, mid, L - mid, 1e-12).value +
                quad::finite(f, L - mid, L, 1e-12).value;
      return e;
    }
    default: break;
  }
  if (m.dim() != 1) throw DomainError("gamma_tilde: quadrature route needs a one-dimensional model");
  // ∫ μ(dx)/μ(B(x, r)) = ∫ dx / ∫_{−r}^{r} e^{V(x+y) − V(x)} dy, where Z cancels.
  auto V = [&](double x) { return m.potential(std::span<const double>(&x, 1)); };
  auto g = [&](double x) {
    const double vx = V(x);
    const double inner = quad::finite([&](double y) { return std::exp(V(x + y) - vx); }, -r, r, 1e-9, 12).value;
    return inner > 0.0 && std::isfinite(inner) ? 1.0 / inner : 0.0;
  };
  // Beyond |x| where |∇V| r ≈ 60 the integrand is below e^{−60}|∇V|: cut there.
  // The break at |∇V| r ≈ 1 separates the plateau 1/(2r) from the decay.
  const double kq = m.kappa() * m.q();
  const double edge = std::pow(1.0 / (kq * r), 1.0 / (m.q() - 1.0));
  const double stop = std::pow(60.0 / (kq * r), 1.0 / (m.q() - 1.0)) + r;
  const double knots[] = {-stop, -edge, 0.0, edge, stop};
  e.value = 0.0;
  for (int i = 0; i < 4; ++i) e.value += quad::finite(g, knots[i], knots[i + 1], 1e-9, 15).value;
  e.finite = std::isfinite(e.value);
  return e;
}

BallFunctionals ball_functionals(const ModelSpace& m, double t, double alpha, double eps) {
  if (!(eps > 0.0 && eps <= 1.0)) throw DomainError("ball_functionals: eps must lie in (0, 1]");
  BallFunctionals out;
  out.gamma_tilde = gamma_tilde(m, t);
  out.eta_tilde.route = out.gamma_tilde.route;
  if (eps == 1.0) {
    out.eta_tilde.value = 1.0;
    return out;
  }
  auto f = [&](double s) {
    const double u = std::exp(s);
    return gamma_tilde(m, u).value * std::pow(u, alpha + 1.0);
  };
  out.eta_tilde.value = 1.0 + quad::finite(f, std::log(eps), 0.0, 1e-8, 10).value;
  out.eta_tilde.finite = std::isfinite(out.eta_tilde.value);
  return out;
}

double regularized_bound(std::span<const double> xi, const SpectralData& spec, double eps) {
  if (!(eps > 0.0)) throw DomainError("regularized_bound: eps must be positive");
  if (xi.size() + 1 > spec.size()) throw DomainError("regularized_bound: more coefficients than eigenpairs");
  double s = 0.0;
  for (std::size_t i = 0; i < xi.size(); ++i) {
    const double lam = spec.eigenvalue(i + 1);
    s += xi[i] * xi[i] / (lam * std::exp(2.0 * lam * eps));
  }
  return 4.0 * s;
}

double ledoux_bound(std::span<const double> a, const SpectralData& spec) {
  if (a.size() + 1 > spec.size()) throw DomainError("ledoux_bound: more coefficients than eigenpairs");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * a[i] / spec.eigenvalue(i + 1);
  return 4.0 * s;
}

std::vector<double> regularized_density_circle(const DiscreteMeasure& nu, double circumference, double eps,
                                               std::size_t cells, double tol) {
  if (nu.dim != 1) throw DomainError("regularized_density_circle: measure must be one-dimensional");
  if (!(eps > 0.0) || cells == 0) throw DomainError("regularized_density_circle: need eps > 0 and cells > 0");
  const double w = kTwoPi / circumference;
  std::vector<double> f(cells, 1.0);
  for (std::size_t k = 1;; ++k) {
    const double damp = std::exp(-std::pow(w * static_cast<double>(k), 2) * eps);
    if (2.0 * damp < tol * std::max(1.0, 1.0 / (std::pow(w * k, 2) * eps))) break;
    double a = 0.0, b = 0.0;
    for (std::size_t j = 0; j < nu.size(); ++j) {
      const double arg = w * static_cast<double>(k) * nu.coords[j];
      a += nu.weights[j] * std::cos(arg);
      b += nu.weights[j] * std::sin(arg);
    }
    for (std::size_t c = 0; c < cells; ++c) {
      const double y = (static_cast<double>(c) + 0.5) * circumference / static_cast<double>(cells);
      const double arg = w * static_cast<double>(k) * y;
      f[c] += 2.0 * damp * (a * std::cos(arg) + b * std::sin(arg));
    }
  }
  return f;
}

}  // namespace sublab
