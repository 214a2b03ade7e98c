#include "sublab/diffusion.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "sublab/quadrature.hpp"

namespace sublab {

namespace {

constexpr double kGradientClamp = 1e-8;
constexpr std::size_t kTableCells = std::size_t{1} << 16;

// 4-point Gauss–Legendre nodes and weights on [0, 1].
constexpr double kGlNodes[4] = {0.0694318442029737, 0.3300094782075719, 0.6699905217924281, 0.9305681557970263};
constexpr double kGlWeights[4] = {0.1739274225687269, 0.3260725774312731, 0.3260725774312731, 0.1739274225687269};

double wrap(double x, double period) {
  double y = std::fmod(x, period);
  if (y < 0.0) y += period;
  if (y >= period) y = 0.0;
  return y;
}

double fold(double x, double length) {
  double y = std::fmod(x, 2.0 * length);
  if (y < 0.0) y += 2.0 * length;
  if (y > length) y = 2.0 * length - y;
  return y;
}

double periodic_gap(double a, double b, double period) {
  const double d = std::fmod(std::abs(a - b), period);
  return std::min(d, period - d);
}

std::string fmt(double v) {
  std::ostringstream os;
  os << v;
  return os.str();
}

std::string describe(std::span<const double> x) {
  std::ostringstream os;
  os << '(';
  for (std::size_t i = 0; i < x.size(); ++i) os << (i ? ", " : "") << x[i];
  os << ')';
  return os.str();
}

}  // namespace

InvariantTable::InvariantTable(const std::function<double(double)>& log_density, double lo, double hi,
                               std::size_t cells)
    : lo_(lo), hi_(hi), h_((hi - lo) / static_cast<double>(cells)) {
  if (!(hi > lo) || cells == 0) throw DomainError("InvariantTable: empty range");
  std::vector<double> logs(cells * 4);
  double shift = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < cells; ++k)
    for (int j = 0; j < 4; ++j) {
      const double v = log_density(lo + (static_cast<double>(k) + kGlNodes[j]) * h_);
      logs[k * 4 + j] = v;
      shift = std::max(shift, v);
    }
  if (!std::isfinite(shift)) throw DomainError("InvariantTable: density is not normalizable");
  mass_.resize(cells);
  double total = 0.0;
  for (std::size_t k = 0; k < cells; ++k) {
    double m = 0.0;
    for (int j = 0; j < 4; ++j) m += kGlWeights[j] * std::exp(logs[k * 4 + j] - shift);
    mass_[k] = m * h_;
    total += mass_[k];
  }
  if (!(total > 0.0) || !std::isfinite(total)) throw DomainError("InvariantTable: density is not normalizable");
  log_z_ = shift + std::log(total);
  cum_.assign(cells + 1, 0.0);
  m1_.assign(cells + 1, 0.0);
  m2_.assign(cells + 1, 0.0);
  for (std::size_t k = 0; k < cells; ++k) {
    mass_[k] /= total;
    const double x = lo + static_cast<double>(k) * h_;
    cum_[k + 1] = cum_[k] + mass_[k];
    m1_[k + 1] = m1_[k] + mass_[k] * (x + 0.5 * h_);
    m2_[k + 1] = m2_[k] + mass_[k] * (x * x + x * h_ + h_ * h_ / 3.0);
  }
}

std::size_t InvariantTable::cell_of_u(double u) const {
  const auto it = std::upper_bound(cum_.begin(), cum_.end(), u);
  std::size_t k = it == cum_.begin() ? 0 : static_cast<std::size_t>(it - cum_.begin()) - 1;
  if (k >= mass_.size()) {
    k = mass_.size() - 1;
    while (k > 0 && mass_[k] == 0.0) --k;
  }
  return k;
}

double InvariantTable::density(double x) const {
  if (x < lo_ || x >= hi_) return 0.0;
  const auto k = std::min(mass_.size() - 1, static_cast<std::size_t>((x - lo_) / h_));
  return mass_[k] / h_;
}

double InvariantTable::cdf(double x) const {
  if (x <= lo_) return 0.0;
  if (x >= hi_) return 1.0;
  const double pos = (x - lo_) / h_;
  const auto k = std::min(mass_.size() - 1, static_cast<std::size_t>(pos));
  return cum_[k] + mass_[k] * (pos - static_cast<double>(k));
}

double InvariantTable::quantile(double u) const {
  const std::size_t k = cell_of_u(u);
  const double s = mass_[k] > 0.0 ? std::clamp((u - cum_[k]) / mass_[k], 0.0, 1.0) : 0.0;
  return lo_ + (static_cast<double>(k) + s) * h_;
}

double InvariantTable::partial_first(double u) const {
  if (u <= 0.0) return 0.0;
  if (u >= 1.0) return m1_.back();
  const std::size_t k = cell_of_u(u);
  const double s = mass_[k] > 0.0 ? std::clamp((u - cum_[k]) / mass_[k], 0.0, 1.0) : 0.0;
  const double x = lo_ + static_cast<double>(k) * h_;
  return m1_[k] + mass_[k] * (x * s + 0.5 * h_ * s * s);
}

double InvariantTable::partial_second(double u) const {
  if (u <= 0.0) return 0.0;
  if (u >= 1.0) return m2_.back();
  const std::size_t k = cell_of_u(u);
  const double s = mass_[k] > 0.0 ? std::clamp((u - cum_[k]) / mass_[k], 0.0, 1.0) : 0.0;
  const double x = lo_ + static_cast<double>(k) * h_;
  return m2_[k] + mass_[k] * (x * x * s + x * h_ * s * s + h_ * h_ * s * s * s / 3.0);
}

const char* to_string(ModelKind k) {
  switch (k) {
    case ModelKind::circle: return "circle";
    case ModelKind::torus: return "torus";
    case ModelKind::interval: return "interval";
    case ModelKind::euclidean: return "euclidean";
    default: return "ou";
  }
}

ModelSpace ModelSpace::circle(double circumference) {
  if (!(circumference > 0.0)) throw DomainError("circle: circumference must be positive");
  ModelSpace m;
  m.kind_ = ModelKind::circle;
  m.period_ = circumference;
  return m;
}

ModelSpace ModelSpace::torus(int d, double side) {
  if (d < 1 || !(side > 0.0)) throw DomainError("torus: need d >= 1 and a positive side");
  ModelSpace m;
  m.kind_ = ModelKind::torus;
  m.dim_ = d;
  m.period_ = side;
  return m;
}

ModelSpace ModelSpace::interval(double length) {
  if (!(length > 0.0)) throw DomainError("interval: length must be positive");
  ModelSpace m;
  m.kind_ = ModelKind::interval;
  m.length_ = length;
  m.table_ = std::make_shared<const InvariantTable>([](double) { return 0.0; }, 0.0, length, 1);
  return m;
}

ModelSpace ModelSpace::euclidean(int d, double kappa, double q, std::function<double(double)> U,
                                 std::function<double(double)> dU) {
  if (d < 1 || !(kappa > 0.0) || !(q > 1.0)) throw DomainError("euclidean: need d >= 1, kappa > 0, q > 1");
  if (static_cast<bool>(U) != static_cast<bool>(dU)) throw DomainError("euclidean: U and its derivative go together");
  if (U && d != 1) throw DomainError("euclidean: the perturbation U is supported in d = 1 only");
  ModelSpace m;
  m.kind_ = ModelKind::euclidean;
  m.dim_ = d;
  m.kappa_ = kappa;
  m.q_ = q;
  m.U_ = std::move(U);
  m.dU_ = std::move(dU);
  if (d == 1) {
    const double r = std::pow(60.0 / kappa, 1.0 / q);
    auto logd = [kappa, q, U = m.U_](double x) { return -kappa * std::pow(std::abs(x), q) + (U ? U(x) : 0.0); };
    m.table_ = std::make_shared<const InvariantTable>(logd, -r, r, kTableCells);
  }
  return m;
}

ModelSpace ModelSpace::ou(int d, double kappa) {
  if (d < 1 || !(kappa > 0.0)) throw DomainError("ou: need d >= 1 and kappa > 0");
  ModelSpace m;
  m.kind_ = ModelKind::ou;
  m.dim_ = d;
  m.kappa_ = kappa;
  m.q_ = 2.0;
  if (d == 1) {
    const double r = std::sqrt(60.0 / kappa);
    m.table_ = std::make_shared<const InvariantTable>([kappa](double x) { return -kappa * x * x; }, -r, r,
                                                      kTableCells);
  }
  return m;
}

std::string ModelSpace::tag() const {
  switch (kind_) {
    case ModelKind::circle: return "circle(" + fmt(period_) + ")";
    case ModelKind::torus: return "torus(" + std::to_string(dim_) + "," + fmt(period_) + ")";
    case ModelKind::interval: return "interval(" + fmt(length_) + ")";
    case ModelKind::euclidean:
      return "euclidean(" + std::to_string(dim_) + "," + fmt(kappa_) + "," + fmt(q_) + (U_ ? ",U" : "") + ")";
    default: return "ou(" + std::to_string(dim_) + "," + fmt(kappa_) + ")";
  }
}

double ModelSpace::distance(std::span<const double> x, std::span<const double> y) const {
  switch (kind_) {
    case ModelKind::circle: return periodic_gap(x[0], y[0], period_);
    case ModelKind::torus: {
      double s = 0.0;
      for (int i = 0; i < dim_; ++i) {
        const double g = periodic_gap(x[i], y[i], period_);
        s += g * g;
      }
      return std::sqrt(s);
    }
    default: {
      if (dim_ == 1) return std::abs(x[0] - y[0]);
      double s = 0.0;
      for (int i = 0; i < dim_; ++i) s += (x[i] - y[i]) * (x[i] - y[i]);
      return std::sqrt(s);
    }
  }
}

double ModelSpace::potential(std::span<const double> x) const {
  switch (kind_) {
    case ModelKind::euclidean: {
      double r2 = 0.0;
      for (int i = 0; i < dim_; ++i) r2 += x[i] * x[i];
      return -kappa_ * std::pow(r2, 0.5 * q_) + (U_ ? U_(x[0]) : 0.0);
    }
    case ModelKind::ou: {
      double r2 = 0.0;
      for (int i = 0; i < dim_; ++i) r2 += x[i] * x[i];
      return -kappa_ * r2;
    }
    default: return 0.0;
  }
}

void ModelSpace::gradient(std::span<const double> x, std::span<double> out) const {
  switch (kind_) {
    case ModelKind::euclidean: {
      double r2 = 0.0;
      for (int i = 0; i < dim_; ++i) r2 += x[i] * x[i];
      const double r = std::max(std::sqrt(r2), kGradientClamp);
      const double coef = -kappa_ * q_ * std::pow(r, q_ - 2.0);
      for (int i = 0; i < dim_; ++i) out[i] = coef * x[i];
      if (dU_) out[0] += dU_(x[0]);
      return;
    }
    case ModelKind::ou:
      for (int i = 0; i < dim_; ++i) out[i] = -2.0 * kappa_ * x[i];
      return;
    default:
      for (int i = 0; i < dim_; ++i) out[i] = 0.0;
  }
}

void ModelSpace::project(std::span<double> x) const {
  switch (kind_) {
    case ModelKind::circle:
    case ModelKind::torus:
      for (int i = 0; i < dim_; ++i) x[i] = wrap(x[i], period_);
      return;
    case ModelKind::interval: x[0] = fold(x[0], length_); return;
    default: return;
  }
}

bool ModelSpace::contains(std::span<const double> x) const {
  if (static_cast<int>(x.size()) != dim_) return false;
  for (double v : x)
    if (!std::isfinite(v)) return false;
  switch (kind_) {
    case ModelKind::circle:
    case ModelKind::torus:
      return std::all_of(x.begin(), x.end(), [&](double v) { return v >= 0.0 && v < period_; });
    case ModelKind::interval: return x[0] >= 0.0 && x[0] <= length_;
    default: return true;
  }
}

double ModelSpace::max_step() const {
  switch (kind_) {
    case ModelKind::ou: return 0.5 / kappa_;
    case ModelKind::euclidean: return (q_ <= 2.0 ? 0.25 : 0.01) / kappa_;
    default: return std::numeric_limits<double>::infinity();
  }
}

double ModelSpace::invariant_density(std::span<const double> x) const { return std::exp(potential(x)); }

double ModelSpace::log_normalizer() const {
  switch (kind_) {
    case ModelKind::circle: return std::log(period_);
    case ModelKind::torus: return dim_ * std::log(period_);
    case ModelKind::interval: return std::log(length_);
    case ModelKind::ou: return 0.5 * dim_ * std::log(kPi / kappa_);
    default: {
      if (U_) return table_->log_normalizer();
      const double d = dim_;
      const double log_surface = std::log(2.0) + 0.5 * d * std::log(kPi) - std::lgamma(0.5 * d);
      return log_surface + std::lgamma(d / q_) - std::log(q_) - (d / q_) * std::log(kappa_);
    }
  }
}

DiffusionState step(const ModelSpace& m, const DiffusionState& s, double dt, Stream& rng) {
  if (!(dt >= 0.0)) throw DomainError("step: dt must be nonnegative");
  if (dt > m.max_step()) throw DomainError("step: dt exceeds the model's maximum stable step " + fmt(m.max_step()));
  DiffusionState out = s;
  if (dt == 0.0) return out;
  std::vector<double> g(m.dim());
  m.gradient(s.position, g);
  const double sd = std::sqrt(2.0 * dt);
  for (int i = 0; i < m.dim(); ++i) out.position[i] += g[i] * dt + sd * rng.normal();
  m.project(out.position);
  for (double v : out.position)
    if (!std::isfinite(v)) throw Error("step: non-finite position from state " + describe(s.position));
  out.clock += dt;
  return out;
}

bool has_exact_transition(const ModelSpace& m) {
  switch (m.kind()) {
    case ModelKind::euclidean: return m.q() == 2.0 && !m.has_perturbation();
    default: return true;
  }
}

void advance(const ModelSpace& m, std::span<double> x, double clock, double h, double fine_dt, Stream& rng) {
  if (!(h >= 0.0)) throw DomainError("advance: negative time increment");
  if (h == 0.0) return;
  const int d = m.dim();
  if (has_exact_transition(m)) {
    if (m.kind() == ModelKind::ou || m.kind() == ModelKind::euclidean) {
      const double k = m.kappa();
      const double a = std::exp(-2.0 * k * h);
      const double sd = std::sqrt(-std::expm1(-4.0 * k * h) / (2.0 * k));
      for (int i = 0; i < d; ++i) x[i] = a * x[i] + sd * rng.normal();
    } else {
      // Brownian motion: wrapping (circle, torus) and folding (reflection)
      // of the free Gaussian increment give the exact kernels.
      const double sd = std::sqrt(2.0 * h);
      for (int i = 0; i < d; ++i) x[i] += sd * rng.normal();
      m.project(x);
    }
    return;
  }

  if (!(fine_dt > 0.0) || fine_dt > m.max_step())
    throw DomainError("advance: fine_dt must be positive and at most " + fmt(m.max_step()));
  std::vector<double> g(d);
  const double end = clock + h;
  double t = clock;
  while (t < end) {
    const double next = (std::floor(t / fine_dt + 1e-9) + 1.0) * fine_dt;
    const double dt = std::min(next, end) - t;
    if (dt > 1e-15) {
      m.gradient(x, g);
      const double sd = std::sqrt(2.0 * dt);
      for (int i = 0; i < d; ++i) x[i] += g[i] * dt + sd * rng.normal();
    }
    t = std::min(next, end);
  }
  m.project(x);
  for (int i = 0; i < d; ++i)
    if (!std::isfinite(x[i])) throw Error("advance: non-finite position " + describe(x));
}

InvariantSample sample_invariant(const ModelSpace& m, std::size_t n, Stream& rng) {
  if (n < 1) throw DomainError("sample_invariant: n must be positive");
  InvariantSample s;
  const int d = m.dim();
  s.dim = d;
  s.coords.resize(n * static_cast<std::size_t>(d));
  switch (m.kind()) {
    case ModelKind::circle:
    case ModelKind::torus:
      s.method = "uniform";
      for (double& v : s.coords) v = m.side() * rng.uniform();
      break;
    case ModelKind::interval:
      s.method = "uniform";
      for (double& v : s.coords) v = m.length() * rng.uniform();
      break;
    case ModelKind::ou: {
      s.method = "exact Gaussian";
      const double sd = 1.0 / std::sqrt(2.0 * m.kappa());
      for (double& v : s.coords) v = sd * rng.normal();
      break;
    }
    default:
      if (d == 1) {
        s.method = "inverse CDF";
        for (double& v : s.coords) v = m.table()->quantile(rng.uniform());
      } else {
        // κ r^q ~ Gamma(d/q) with a uniform direction: exact for the radial density r^{d−1} e^{−κ r^q}.
        s.method = "exact radial gamma";
        for (std::size_t i = 0; i < n; ++i) {
          double* p = s.coords.data() + i * static_cast<std::size_t>(d);
          double norm = 0.0;
          for (int j = 0; j < d; ++j) {
            p[j] = rng.normal();
            norm += p[j] * p[j];
          }
          norm = std::sqrt(norm);
          const double r = std::pow(rng.gamma(d / m.q()) / m.kappa(), 1.0 / m.q());
          for (int j = 0; j < d; ++j) p[j] *= r / norm;
        }
      }
  }
  return s;
}

PotentialMoments potential_moments(const ModelSpace& m) {
  PotentialMoments pm;
  const double d = m.dim();
  switch (m.kind()) {
    case ModelKind::circle:
    case ModelKind::torus:
    case ModelKind::interval:
      pm.method = "constant potential";
      return pm;
    case ModelKind::ou: {
      const double k = m.kappa();
      pm.method = "closed form";
      pm.grad_sq = 2.0 * k * d;
      const double sigma = 1.0 / std::sqrt(2.0 * k);
      pm.grad_abs = 2.0 * k * sigma * std::sqrt(2.0) * std::exp(std::lgamma(0.5 * (d + 1)) - std::lgamma(0.5 * d));
      return pm;
    }
    default: break;
  }
  const double k = m.kappa(), q = m.q();
  if (!m.has_perturbation()) {
    // E r^s = κ^{−s/q} Γ((d+s)/q) / Γ(d/q) under μ.
    auto radial = [&](double s) { return std::exp(-(s / q) * std::log(k) + std::lgamma((d + s) / q) - std::lgamma(d / q)); };
    pm.method = "closed form";
    pm.grad_sq = k * k * q * q * radial(2.0 * q - 2.0);
    pm.grad_abs = k * q * radial(q - 1.0);
    return pm;
  }
  pm.method = "quadrature";
  const InvariantTable& tab = *m.table();
  const double log_z = tab.log_normalizer();
  auto weight = [&](double x) { return std::exp(m.potential(std::span<const double>(&x, 1)) - log_z); };
  auto grad = [&](double x) {
    double g = 0.0;
    m.gradient(std::span<const double>(&x, 1), std::span<double>(&g, 1));
    return g;
  };
  auto sq = [&](double x) { const double g = grad(x); return g * g * weight(x); };
  auto ab = [&](double x) { return std::abs(grad(x)) * weight(x); };
  pm.grad_sq = quad::finite(sq, tab.lo(), 0.0).value + quad::finite(sq, 0.0, tab.hi()).value;
  pm.grad_abs = quad::finite(ab, tab.lo(), 0.0).value + quad::finite(ab, 0.0, tab.hi()).value;
  // Mass left at the truncation edges signals a non-integrable tail.
  const double edge = std::max(sq(tab.lo()), sq(tab.hi())) * (tab.hi() - tab.lo());
  if (!std::isfinite(pm.grad_sq) || edge > 1e-8) {
    pm.grad_sq = std::numeric_limits<double>::infinity();
    pm.grad_sq_finite = false;
  }
  if (!std::isfinite(pm.grad_abs)) pm.grad_abs_finite = false;
  return pm;
}

}  // namespace sublab
