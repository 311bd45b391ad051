#include "symplectic/tableau.hpp"

#include <cmath>
#include <cstdio>
#include <istream>
#include <mutex>
#include <ostream>
#include <sstream>
#include <string>

#include <boost/math/constants/constants.hpp>

#include "symplectic/numeric.hpp"

namespace symplectic {

namespace {

std::recursive_mutex& precision_mutex() {
  static std::recursive_mutex m;
  return m;
}

// Extra digits carried internally beyond the requested precision.
constexpr unsigned kGuardDigits = 10;

// P_s(x) and P_{s-1}(x) by the three-term recurrence.
std::pair<HighFloat, HighFloat> legendre(int s, const HighFloat& x) {
  HighFloat p0 = 1;
  HighFloat p1 = x;
  if (s == 0) return {p0, HighFloat(0)};
  for (int k = 2; k <= s; ++k) {
    HighFloat p2 = ((2 * k - 1) * x * p1 - (k - 1) * p0) / k;
    p0 = std::move(p1);
    p1 = std::move(p2);
  }
  return {p1, p0};
}

double to_double(const HighFloat& x) { return x.convert_to<double>(); }

}  // namespace

PrecisionScope::PrecisionScope(unsigned digits10) {
  precision_mutex().lock();
  previous_ = HighFloat::default_precision();
  HighFloat::default_precision(digits10);
}

PrecisionScope::~PrecisionScope() {
  HighFloat::default_precision(previous_);
  precision_mutex().unlock();
}

std::vector<HighFloat> gauss_nodes(int stages, unsigned digits10) {
  if (stages < 1 || stages > 16) throw InputError("gauss_nodes: stage count must be in [1, 16]");
  if (digits10 < 30) throw InputError("gauss_nodes: precision must be at least 30 digits");
  PrecisionScope scope(digits10 + kGuardDigits);
  const HighFloat tolerance = pow(HighFloat(10), -static_cast<int>(digits10) + 2);
  const HighFloat step_tolerance = pow(HighFloat(10), -static_cast<int>(digits10 + kGuardDigits) + 2);
  const HighFloat pi = boost::math::constants::pi<HighFloat>();
  std::vector<HighFloat> nodes(static_cast<std::size_t>(stages));
  for (int i = 1; i <= stages; ++i) {
    // Largest root first; x_i ~ cos(pi (i - 1/4)/(s + 1/2)).
    HighFloat x = cos(pi * (HighFloat(i) - HighFloat(0.25)) / (HighFloat(stages) + HighFloat(0.5)));
    bool converged = false;
    for (int it = 0; it < 100; ++it) {
      auto [p, pm1] = legendre(stages, x);
      const HighFloat dp = stages * (x * p - pm1) / (x * x - 1);
      const HighFloat dx = p / dp;
      x -= dx;
      if (abs(legendre(stages, x).first) < tolerance && abs(dx) < step_tolerance) {
        converged = true;
        break;
      }
    }
    if (!converged) throw ComputationError("gauss_nodes: Newton iteration did not converge");
    nodes[static_cast<std::size_t>(stages - i)] = (1 + x) / 2;
  }
  for (auto& c : nodes) c.precision(digits10 + kGuardDigits);
  return nodes;
}

std::vector<HighFloat> vandermonde_solve(const std::vector<HighFloat>& x, std::vector<HighFloat> f) {
  const std::size_t n = x.size();
  if (f.size() != n) throw InputError("vandermonde_solve: size mismatch");
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if (x[i] == x[j]) throw InputError("vandermonde_solve: coincident abscissae");
    }
  }
  if (n == 0) return f;
  for (std::size_t k = 0; k + 1 < n; ++k) {
    for (std::size_t i = n - 1; i > k; --i) f[i] -= x[k] * f[i - 1];
  }
  for (std::size_t k = n - 1; k-- > 0;) {
    for (std::size_t i = k + 1; i < n; ++i) f[i] /= x[i] - x[i - k - 1];
    for (std::size_t i = k; i + 1 < n; ++i) f[i] -= f[i + 1];
  }
  return f;
}

CollocationCoefficients collocation_coeffs(const std::vector<HighFloat>& nodes) {
  const std::size_t s = nodes.size();
  if (s == 0) throw InputError("collocation_coeffs: empty node list");
  for (const auto& c : nodes) {
    if (!(c > 0 && c < 1)) throw InputError("collocation_coeffs: nodes must lie in (0, 1)");
  }
  PrecisionScope scope(nodes.front().precision());
  CollocationCoefficients out;
  std::vector<HighFloat> rhs(s);
  for (std::size_t k = 0; k < s; ++k) rhs[k] = HighFloat(1) / (k + 1);
  out.b = vandermonde_solve(nodes, rhs);
  out.a.resize(s);
  for (std::size_t i = 0; i < s; ++i) {
    HighFloat power = nodes[i];
    for (std::size_t k = 0; k < s; ++k) {
      rhs[k] = power / (k + 1);
      power *= nodes[i];
    }
    out.a[i] = vandermonde_solve(nodes, rhs);
  }
  return out;
}

Matrix mu_from(const HighMatrix& a, const std::vector<HighFloat>& b) {
  const std::size_t s = b.size();
  Matrix mu(s, std::vector<double>(s));
  for (std::size_t j = 0; j < s; ++j) {
    if (b[j] == 0) throw InputError("mu_from: zero weight");
  }
  PrecisionScope scope(b.front().precision());
  for (std::size_t i = 0; i < s; ++i) {
    mu[i][i] = 0.5;
    for (std::size_t j = 0; j < i; ++j) {
      mu[i][j] = to_double(a[i][j] / b[j]);
      mu[j][i] = 1.0 - mu[i][j];
    }
  }
  return mu;
}

Matrix nu_from(const std::vector<HighFloat>& nodes) {
  const std::size_t s = nodes.size();
  const auto coeffs = collocation_coeffs(nodes);
  PrecisionScope scope(nodes.front().precision());
  std::vector<HighFloat> shifted(s);
  for (std::size_t j = 0; j < s; ++j) shifted[j] = nodes[j] - 1;
  Matrix nu(s, std::vector<double>(s));
  std::vector<HighFloat> rhs(s);
  for (std::size_t i = 0; i < s; ++i) {
    HighFloat power = nodes[i];
    for (std::size_t k = 0; k < s; ++k) {
      rhs[k] = power / (k + 1);
      power *= nodes[i];
    }
    const auto w = vandermonde_solve(shifted, rhs);
    for (std::size_t j = 0; j < s; ++j) nu[i][j] = to_double(w[j] / coeffs.b[j]);
  }
  return nu;
}

ScalarTableau build_scalar_tableau(int stages, unsigned digits10) {
  const auto nodes = gauss_nodes(stages, digits10);
  const auto coeffs = collocation_coeffs(nodes);
  ScalarTableau t;
  t.stages = stages;
  t.order = 2 * stages;
  for (int i = 0; i < stages; ++i) {
    t.c.push_back(to_double(nodes[static_cast<std::size_t>(i)]));
    t.b.push_back(to_double(coeffs.b[static_cast<std::size_t>(i)]));
  }
  t.mu = mu_from(coeffs.a, coeffs.b);
  t.nu = nu_from(nodes);
  validate_tableau(t);
  return t;
}

void validate_tableau(const ScalarTableau& t) {
  const auto s = static_cast<std::size_t>(t.stages);
  auto fail = [](const std::string& what) { throw ComputationError("tableau invariant violated: " + what); };
  if (s == 0 || t.c.size() != s || t.b.size() != s || t.mu.size() != s || t.nu.size() != s) fail("shape");
  if (t.order != 2 * t.stages) fail("order");
  for (std::size_t i = 0; i < s; ++i) {
    if (t.mu[i].size() != s || t.nu[i].size() != s) fail("shape");
    if (!(t.c[i] > 0.0 && t.c[i] < 1.0)) fail("node outside (0,1)");
    if (i > 0 && !(t.c[i] > t.c[i - 1])) fail("nodes not increasing");
    if (ulp_distance(t.c[i] + t.c[s - 1 - i], 1.0) > 2) fail("node symmetry");
    if (ulp_distance(t.b[i], t.b[s - 1 - i]) > 2) fail("weight symmetry");
    if (t.mu[i][i] != 0.5) fail("mu diagonal");
    for (std::size_t j = i + 1; j < s; ++j) {
      if (t.mu[i][j] + t.mu[j][i] != 1.0) fail("mu_ij + mu_ji == 1");
    }
  }
  double sum = t.b[0];
  for (std::size_t i = 1; i < s; ++i) sum += t.b[i];
  if (ulp_distance(sum, 1.0) > 4) fail("weights sum to 1");
}

void write_coefficients(std::ostream& out, const ScalarTableau& t) {
  auto line = [&out](double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.24e", v);
    out << buf << '\n';
  };
  out << "# gauss-legendre stages " << t.stages << " order " << t.order << '\n';
  out << "#c\n";
  for (double v : t.c) line(v);
  out << "#b\n";
  for (double v : t.b) line(v);
  out << "#mu\n";
  for (const auto& row : t.mu)
    for (double v : row) line(v);
  out << "#nu\n";
  for (const auto& row : t.nu)
    for (double v : row) line(v);
}

ScalarTableau read_coefficients(std::istream& in) {
  std::vector<double> c, b, mu, nu;
  std::vector<double>* current = nullptr;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line.rfind("# ", 0) == 0) continue;
    if (line == "#c") current = &c;
    else if (line == "#b") current = &b;
    else if (line == "#mu") current = &mu;
    else if (line == "#nu") current = &nu;
    else if (line[0] == '#') throw InputError("read_coefficients: unknown section " + line);
    else {
      if (current == nullptr) throw InputError("read_coefficients: value before section header");
      std::size_t used = 0;
      double v = 0;
      try {
        v = std::stod(line, &used);
      } catch (const std::exception&) {
        throw InputError("read_coefficients: malformed value " + line);
      }
      if (line.find_first_not_of(" \t\r", used) != std::string::npos) {
        throw InputError("read_coefficients: malformed value " + line);
      }
      current->push_back(v);
    }
  }
  const std::size_t s = c.size();
  if (b.size() != s || mu.size() != s * s || nu.size() != s * s) {
    throw InputError("read_coefficients: inconsistent section sizes");
  }
  ScalarTableau t;
  t.stages = static_cast<int>(s);
  t.order = 2 * t.stages;
  t.c = c;
  t.b = b;
  t.mu.assign(s, std::vector<double>(s));
  t.nu.assign(s, std::vector<double>(s));
  for (std::size_t i = 0; i < s; ++i) {
    for (std::size_t j = 0; j < s; ++j) {
      t.mu[i][j] = mu[i * s + j];
      t.nu[i][j] = nu[i * s + j];
    }
  }
  validate_tableau(t);
  return t;
}

}  // namespace symplectic
