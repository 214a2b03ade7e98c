#include "sublab/pathlab.hpp"

#include <algorithm>
#include <boost/math/special_functions/erf.hpp>
#include <cmath>
#include <cstring>
#include <istream>
#include <ostream>
#include <sstream>

namespace sublab {

const char* to_string(InitialLaw::Kind k) {
  switch (k) {
    case InitialLaw::Kind::point: return "point";
    case InitialLaw::Kind::invariant: return "invariant";
    case InitialLaw::Kind::restricted_uniform: return "restricted_uniform";
    default: return "tilted";
  }
}

InitialLaw parse_initial_law(const std::string& text) {
  auto arg = [&](const std::string& prefix) -> std::string {
    if (text.rfind(prefix + "(", 0) != 0 || text.back() != ')') throw DomainError("malformed initial law: " + text);
    return text.substr(prefix.size() + 1, text.size() - prefix.size() - 2);
  };
  if (text == "invariant") return InitialLaw::invariant();
  if (text.rfind("point", 0) == 0) {
    Point x;
    std::stringstream ss(arg("point"));
    for (std::string item; std::getline(ss, item, ',');) x.push_back(std::stod(item));
    return InitialLaw::point(std::move(x));
  }
  if (text.rfind("restricted_uniform", 0) == 0) return InitialLaw::restricted_uniform(std::stod(arg("restricted_uniform")));
  if (text.rfind("tilted", 0) == 0) return InitialLaw::tilted(std::stod(arg("tilted")));
  throw DomainError("unknown initial law: " + text);
}

namespace {

// Quantile of the first coordinate under μ; μ must be of product form.
double first_coordinate_quantile(const ModelSpace& m, double u) {
  switch (m.kind()) {
    case ModelKind::circle:
    case ModelKind::torus: return m.side() * u;
    case ModelKind::interval: return m.length() * u;
    case ModelKind::ou: return std::sqrt(2.0) * boost::math::erf_inv(2.0 * u - 1.0) / std::sqrt(2.0 * m.kappa());
    default:
      if (m.dim() != 1) throw DomainError("density initial laws need a product-form invariant law");
      return m.table()->quantile(u);
  }
}

}  // namespace

Point sample_initial(const ModelSpace& m, const InitialLaw& law, Stream& rng) {
  switch (law.kind) {
    case InitialLaw::Kind::point: {
      if (static_cast<int>(law.x0.size()) != m.dim()) throw DomainError("initial point has the wrong dimension");
      Point x = law.x0;
      m.project(x);
      return x;
    }
    case InitialLaw::Kind::invariant: {
      const InvariantSample s = sample_invariant(m, 1, rng);
      return s.coords;
    }
    default: break;
  }
  if (!(law.k >= 1.0)) throw DomainError("density initial laws need a bound k >= 1");
  Point x = sample_invariant(m, 1, rng).coords;
  double u = 0.0;
  if (law.kind == InitialLaw::Kind::restricted_uniform) {
    u = rng.uniform() / law.k;
  } else {
    const double a = std::min(law.k - 1.0, 1.0);
    do u = rng.uniform();
    while (rng.uniform() * (1.0 + a) > 1.0 + a * std::cos(kTwoPi * u));
  }
  x[0] = first_coordinate_quantile(m, u);
  return x;
}

SubordinatedPath subordinated_path(const ModelSpace& m, const BernsteinFunction& b, double horizon, double obs_dt,
                                   double fine_dt, const InitialLaw& initial, const Stream& rng) {
  if (!(horizon > 0.0)) throw DomainError("subordinated_path: horizon must be positive");
  if (!(fine_dt > 0.0) || !(obs_dt >= fine_dt)) throw DomainError("subordinated_path: need obs_dt >= fine_dt > 0");

  SubordinatedPath path;
  const auto n = static_cast<std::size_t>(std::llround(horizon / obs_dt));
  for (std::size_t j = 0; j <= n; ++j) path.obs_times.push_back(static_cast<double>(j) * obs_dt);
  if (std::abs(path.obs_times.back() - horizon) > 1e-9 * horizon) {
    while (!path.obs_times.empty() && path.obs_times.back() >= horizon) path.obs_times.pop_back();
    path.obs_times.push_back(horizon);
  } else {
    path.obs_times.back() = horizon;
  }
  if (path.obs_times.size() < 2) throw DomainError("subordinated_path: horizon shorter than one observation step");

  Stream sub_rng = rng.split(1);
  Stream diff_rng = rng.split(2);
  Stream init_rng = rng.split(3);
  path.sub_path = sample_increments(b, path.obs_times, sub_rng);
  path.sub_path.seed = rng.seed();
  path.dim = m.dim();
  path.model = m.tag();

  Point x = sample_initial(m, initial, init_rng);
  path.coords.resize(path.obs_times.size() * static_cast<std::size_t>(path.dim));
  double clock = 0.0;
  for (std::size_t j = 0; j < path.obs_times.size(); ++j) {
    const double s = path.sub_path.values[j];
    advance(m, x, clock, s - clock, fine_dt, diff_rng);
    clock = s;
    std::copy(x.begin(), x.end(), path.coords.begin() + static_cast<std::ptrdiff_t>(j * path.dim));
  }
  return path;
}

DiscreteMeasure empirical_measure(const SubordinatedPath& path, double t) {
  if (!(t > 0.0)) throw DomainError("empirical_measure: t must be positive");
  if (t > path.horizon() * (1.0 + 1e-12)) throw DomainError("empirical_measure: t exceeds the path horizon");
  t = std::min(t, path.horizon());
  DiscreteMeasure mu;
  mu.dim = path.dim;
  for (std::size_t j = 0; j + 1 < path.size() && path.obs_times[j] < t; ++j) {
    const double w = (std::min(path.obs_times[j + 1], t) - path.obs_times[j]) / t;
    if (w <= 0.0) continue;
    mu.weights.push_back(w);
    const auto p = path.position(j);
    mu.coords.insert(mu.coords.end(), p.begin(), p.end());
  }
  double s = 0.0;
  for (double w : mu.weights) s += w;
  for (double& w : mu.weights) w /= s;
  return mu;
}

DiscreteMeasure discretized_empirical(const SubordinatedPath& path, double t, std::size_t N) {
  if (N < 1) throw DomainError("discretized_empirical: N must be positive");
  if (!(t > 0.0) || t > path.horizon() * (1.0 + 1e-12)) throw DomainError("discretized_empirical: t out of range");
  DiscreteMeasure mu;
  mu.dim = path.dim;
  mu.weights.assign(N, 1.0 / static_cast<double>(N));
  const double tol = 1e-9 * std::max(1.0, t);
  for (std::size_t i = 0; i < N; ++i) {
    const double ti = static_cast<double>(i) * t / static_cast<double>(N);
    auto it = std::lower_bound(path.obs_times.begin(), path.obs_times.end(), ti - tol);
    if (it == path.obs_times.end() || std::abs(*it - ti) > tol)
      throw DomainError("discretized_empirical: t_i = " + std::to_string(ti) + " is not on the observation grid");
    const auto p = path.position(static_cast<std::size_t>(it - path.obs_times.begin()));
    mu.coords.insert(mu.coords.end(), p.begin(), p.end());
  }
  return mu;
}

std::vector<double> eigen_coefficients(const SubordinatedPath& path, const SpectralData& spec, double t,
                                       std::size_t I) {
  if (I + 1 > spec.size()) throw DomainError("eigen_coefficients: I exceeds the spectral table");
  if (spec.dim() != path.dim) throw DomainError("eigen_coefficients: spectrum and path dimensions differ");
  const DiscreteMeasure mu = empirical_measure(path, t);
  std::vector<double> xi(I, 0.0);
  for (std::size_t j = 0; j < mu.size(); ++j)
    for (std::size_t i = 0; i < I; ++i) xi[i] += mu.weights[j] * spec.phi(i + 1, mu.point(j));
  return xi;
}

void write_path_csv(const SubordinatedPath& path, std::ostream& os) {
  os << "# model=" << path.model << " family=" << path.sub_path.family << " seed=" << path.sub_path.seed << '\n';
  os << "t,S_t";
  for (int i = 1; i <= path.dim; ++i) os << ",x" << i;
  os << '\n';
  os.precision(17);
  for (std::size_t j = 0; j < path.size(); ++j) {
    os << path.obs_times[j] << ',' << path.sub_path.values[j];
    for (double v : path.position(j)) os << ',' << v;
    os << '\n';
  }
}

SubordinatedPath read_path_csv(std::istream& is) {
  SubordinatedPath path;
  std::string line;
  while (std::getline(is, line) && !line.empty() && line[0] == '#') {
    std::istringstream meta(line.substr(1));
    for (std::string kv; meta >> kv;) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos) continue;
      const std::string key = kv.substr(0, eq), val = kv.substr(eq + 1);
      if (key == "model") path.model = val;
      else if (key == "family") path.sub_path.family = val;
      else if (key == "seed") path.sub_path.seed = std::stoull(val);
    }
  }
  if (line.rfind("t,S_t", 0) != 0) throw Error("read_path_csv: missing header");
  path.dim = static_cast<int>(std::count(line.begin(), line.end(), ',')) - 1;
  if (path.dim < 1) throw Error("read_path_csv: no coordinate columns");
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::vector<double> row;
    for (std::string cell; std::getline(ss, cell, ',');) row.push_back(std::stod(cell));
    if (static_cast<int>(row.size()) != path.dim + 2) throw Error("read_path_csv: ragged row");
    path.obs_times.push_back(row[0]);
    path.sub_path.values.push_back(row[1]);
    path.coords.insert(path.coords.end(), row.begin() + 2, row.end());
  }
  path.sub_path.grid = path.obs_times;
  return path;
}

namespace {

template <class T>
void put(std::ostream& os, T v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof v);
}

template <class T>
T get(std::istream& is) {
  T v{};
  if (!is.read(reinterpret_cast<char*>(&v), sizeof v)) throw Error("read_path_binary: truncated input");
  return v;
}

void put_string(std::ostream& os, const std::string& s) {
  put<std::uint32_t>(os, static_cast<std::uint32_t>(s.size()));
  os.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::string get_string(std::istream& is) {
  const auto n = get<std::uint32_t>(is);
  std::string s(n, '\0');
  if (!is.read(s.data(), n)) throw Error("read_path_binary: truncated input");
  return s;
}

constexpr char kMagic[8] = {'S', 'L', 'P', 'A', 'T', 'H', '0', '1'};

}  // namespace

void write_path_binary(const SubordinatedPath& path, std::ostream& os) {
  os.write(kMagic, sizeof kMagic);
  put<std::uint32_t>(os, static_cast<std::uint32_t>(path.dim));
  put<std::uint64_t>(os, path.size());
  put<std::uint64_t>(os, path.sub_path.seed);
  put_string(os, path.model);
  put_string(os, path.sub_path.family);
  for (std::size_t j = 0; j < path.size(); ++j) {
    put(os, path.obs_times[j]);
    put(os, path.sub_path.values[j]);
    for (double v : path.position(j)) put(os, v);
  }
}

SubordinatedPath read_path_binary(std::istream& is) {
  char magic[8];
  if (!is.read(magic, sizeof magic) || std::memcmp(magic, kMagic, sizeof magic) != 0)
    throw Error("read_path_binary: bad magic");
  SubordinatedPath path;
  path.dim = static_cast<int>(get<std::uint32_t>(is));
  const auto rows = get<std::uint64_t>(is);
  path.sub_path.seed = get<std::uint64_t>(is);
  path.model = get_string(is);
  path.sub_path.family = get_string(is);
  for (std::uint64_t j = 0; j < rows; ++j) {
    path.obs_times.push_back(get<double>(is));
    path.sub_path.values.push_back(get<double>(is));
    for (int i = 0; i < path.dim; ++i) path.coords.push_back(get<double>(is));
  }
  path.sub_path.grid = path.obs_times;
  return path;
}

}  // namespace sublab
