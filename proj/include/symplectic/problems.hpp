#pragma once

#include <array>
#include <cmath>
#include <concepts>
#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "symplectic/errors.hpp"
#include "symplectic/lanes.hpp"

namespace symplectic {

// Problem contract used by the integrators:
//   dimension()                 state size D
//   rhs(dy, y, t)               generic over the scalar type T (double,
//                               LaneVector<N>, multiprecision floats)
//   second_order_dimension()    d > 0 if y = (q, v) with q' = v, v' = g(q, t)
//   accel(g, q, t)              g(q, t), d components, when d > 0
// All right-hand sides are branch-free in the state, so a lane-vector call
// is bitwise equal to N scalar calls.
template <class P>
concept OdeProblem = requires(const P& p, std::span<double> dy, std::span<const double> y, double t) {
  { p.dimension() } -> std::convertible_to<std::size_t>;
  { p.second_order_dimension() } -> std::convertible_to<std::size_t>;
  p.rhs(dy, y, t);
};

template <class P>
concept SecondOrderProblem = OdeProblem<P> && requires(const P& p, std::span<double> g, std::span<const double> q,
                                                       double t) { p.accel(g, q, t); };

// Smallest x in [lo, hi] where an increasing f crosses `target`, refined
// until the bracket cannot shrink; returns the endpoint with smaller residual.
template <class F>
double bisect_increasing(F f, double target, double lo, double hi) {
  double flo = f(lo) - target;
  double fhi = f(hi) - target;
  if (!(flo <= 0.0 && fhi >= 0.0)) throw ConfigurationError("bisection: target not bracketed");
  for (int it = 0; it < 2000; ++it) {
    const double mid = lo + 0.5 * (hi - lo);
    if (mid <= lo || mid >= hi) break;
    const double fm = f(mid) - target;
    if (fm == 0.0) return mid;
    if (fm < 0.0) {
      lo = mid;
      flo = fm;
    } else {
      hi = mid;
      fhi = fm;
    }
  }
  return std::fabs(flo) <= std::fabs(fhi) ? lo : hi;
}

// ---------------------------------------------------------------------------
// Henon-Heiles, optionally with a periodically modulated cubic term:
//   H = (p1^2 + p2^2)/2 + (q1^2 + q2^2)/2 + (lambda + xi sin t)(q1^2 q2 - q2^3/3)
// State (q1, q2, p1, p2).
class HenonHeiles {
 public:
  explicit HenonHeiles(double xi = 0.0, double lambda = 1.0) : xi_(xi), lambda_(lambda) {}

  std::size_t dimension() const { return 4; }
  std::size_t second_order_dimension() const { return 2; }
  std::vector<std::size_t> shape() const { return {4}; }
  std::string label() const { return "henon-heiles"; }
  double xi() const { return xi_; }
  double lambda() const { return lambda_; }

  template <class T>
  T coupling(const T& t) const {
    using std::sin;
    if (xi_ == 0.0) return T(lambda_);
    return lambda_ + xi_ * sin(t);
  }

  template <class T>
  void rhs(std::span<T> dy, std::span<const T> y, const T& t) const {
    const T aux = coupling(t);
    dy[0] = y[2];
    dy[1] = y[3];
    dy[2] = -y[0] - 2.0 * aux * y[0] * y[1];
    dy[3] = -y[1] - aux * (y[0] * y[0] - y[1] * y[1]);
  }

  template <class T>
  void accel(std::span<T> g, std::span<const T> q, const T& t) const {
    const T aux = coupling(t);
    g[0] = -q[0] - 2.0 * aux * q[0] * q[1];
    g[1] = -q[1] - aux * (q[0] * q[0] - q[1] * q[1]);
  }

  template <class T>
  T hamiltonian(std::span<const T> y, const T& t) const {
    const T kinetic = (y[2] * y[2] + y[3] * y[3]) / 2.0;
    const T harmonic = (y[0] * y[0] + y[1] * y[1]) / 2.0;
    const T cubic = y[0] * y[0] * y[1] - y[1] * y[1] * y[1] / 3.0;
    return kinetic + harmonic + coupling(t) * cubic;
  }
  template <class T>
  T hamiltonian(std::span<const T> y) const {
    return hamiltonian(y, T(0.0));
  }
  double energy(std::span<const double> y) const { return hamiltonian<double>(y); }

  // q1 = 0, q2 = 0.3, p2 = 0.2 and p1 > 0 with H = 1/12.
  std::vector<double> initial_state() const;

 private:
  double xi_;
  double lambda_;
};

// ---------------------------------------------------------------------------
// Newtonian N-body problem in velocity form, y = (q, v), q and v each of
// size 3N laid out body by body, so the state has shape (3, N, 2).
struct Body {
  std::string name;
  double mass = 0.0;
  std::array<double, 3> position{};
  std::array<double, 3> velocity{};
};

class NBody {
 public:
  NBody(double gravitational_constant, std::vector<Body> bodies, bool barycentric = true);

  std::size_t dimension() const { return 6 * n_; }
  std::size_t second_order_dimension() const { return 3 * n_; }
  std::vector<std::size_t> shape() const { return {3, n_, 2}; }
  std::string label() const { return label_; }
  void set_label(std::string label) { label_ = std::move(label); }
  std::size_t bodies() const { return n_; }
  double gravitational_constant() const { return g_; }
  const std::vector<double>& masses() const { return masses_; }
  const std::vector<Body>& body_data() const { return body_data_; }

  template <class T>
  void accel(std::span<T> g, std::span<const T> q, const T&) const {
    using std::sqrt;
    for (std::size_t k = 0; k < 3 * n_; ++k) g[k] = T(0.0);
    for (std::size_t i = 0; i < n_; ++i) {
      for (std::size_t j = i + 1; j < n_; ++j) {
        const T dx = q[3 * j] - q[3 * i];
        const T dy = q[3 * j + 1] - q[3 * i + 1];
        const T dz = q[3 * j + 2] - q[3 * i + 2];
        const T r2 = dx * dx + dy * dy + dz * dz;
        const T scale = g_ / (r2 * sqrt(r2));
        const T si = masses_[j] * scale;
        const T sj = masses_[i] * scale;
        g[3 * i] += si * dx;
        g[3 * i + 1] += si * dy;
        g[3 * i + 2] += si * dz;
        g[3 * j] -= sj * dx;
        g[3 * j + 1] -= sj * dy;
        g[3 * j + 2] -= sj * dz;
      }
    }
  }

  template <class T>
  void rhs(std::span<T> dy, std::span<const T> y, const T& t) const {
    const std::size_t d = 3 * n_;
    for (std::size_t k = 0; k < d; ++k) dy[k] = y[d + k];
    accel(dy.subspan(d, d), y.subspan(0, d), t);
  }

  // H = sum m_i |v_i|^2 / 2 - G sum_{i<j} m_i m_j / |q_i - q_j|.
  template <class T>
  T hamiltonian(std::span<const T> y) const {
    using std::sqrt;
    const std::size_t d = 3 * n_;
    T kinetic(0.0);
    for (std::size_t i = 0; i < n_; ++i) {
      const T v2 = y[d + 3 * i] * y[d + 3 * i] + y[d + 3 * i + 1] * y[d + 3 * i + 1] +
                   y[d + 3 * i + 2] * y[d + 3 * i + 2];
      kinetic += masses_[i] * v2 / 2.0;
    }
    T potential(0.0);
    for (std::size_t i = 0; i < n_; ++i) {
      for (std::size_t j = i + 1; j < n_; ++j) {
        const T dx = y[3 * j] - y[3 * i];
        const T dy = y[3 * j + 1] - y[3 * i + 1];
        const T dz = y[3 * j + 2] - y[3 * i + 2];
        potential += masses_[i] * masses_[j] / sqrt(dx * dx + dy * dy + dz * dz);
      }
    }
    return kinetic - g_ * potential;
  }
  double energy(std::span<const double> y) const { return hamiltonian<double>(y); }

  std::array<double, 3> momentum(std::span<const double> y) const;
  std::array<double, 3> angular_momentum(std::span<const double> y) const;
  std::vector<double> initial_state() const { return y0_; }

 private:
  double g_;
  std::size_t n_;
  std::vector<double> masses_;
  std::vector<Body> body_data_;
  std::vector<double> y0_;
  std::string label_ = "n-body";
};

// Directory holding bundled data files (scheme coefficients, ephemerides).
// The SYMPLECTIC_DATA_DIR environment variable overrides the built-in path.
std::filesystem::path data_directory();

std::vector<Body> read_bodies(const std::filesystem::path& file, double* gravitational_constant);

// Sun, Jupiter, Saturn, Uranus, Neptune, Pluto from the bundled file,
// shifted to the barycentric frame.
NBody outer_solar_system(const std::filesystem::path& file = {});

// ---------------------------------------------------------------------------
// Charged particle near a Schwarzschild black hole in a uniform magnetic
// field, polar state (r, theta, p_r, p_theta):
//   H = (1 - 2/r) p_r^2 / 2 - E^2 / (2 (1 - 2/r)) + p_theta^2 / (2 r^2)
//       + (L - beta r^2 sin^2 theta / 2)^2 / (2 r^2 sin^2 theta)
class Schwarzschild {
 public:
  explicit Schwarzschild(double energy = 0.995, double angular = 4.6, double beta = 8.9e-4)
      : e_(energy), l_(angular), beta_(beta) {}

  std::size_t dimension() const { return 4; }
  std::size_t second_order_dimension() const { return 0; }
  std::vector<std::size_t> shape() const { return {4}; }
  std::string label() const { return "schwarzschild"; }
  double E() const { return e_; }
  double L() const { return l_; }
  double beta() const { return beta_; }

  template <class T>
  void rhs(std::span<T> dy, std::span<const T> y, const T&) const {
    using std::cos;
    using std::sin;
    const T& r = y[0];
    const T& pr = y[2];
    const T& pth = y[3];
    const T sn = sin(y[1]);
    const T cs = cos(y[1]);
    const T S = sn * sn;
    const T r2 = r * r;
    const T u = 1.0 - 2.0 / r;
    const T w = l_ - (beta_ / 2.0) * r2 * S;
    dy[0] = u * pr;
    dy[1] = pth / r2;
    dy[2] = -(pr * pr) / r2 - (e_ * e_) / (r2 * u * u) + (pth * pth) / (r2 * r) + beta_ * w / r +
            (w * w) / (r2 * r * S);
    dy[3] = 2.0 * sn * cs * (beta_ * w / (2.0 * S) + (w * w) / (2.0 * r2 * S * S));
  }

  template <class T>
  T hamiltonian(std::span<const T> y) const {
    using std::sin;
    const T& r = y[0];
    const T sn = sin(y[1]);
    const T S = sn * sn;
    const T r2 = r * r;
    const T u = 1.0 - 2.0 / r;
    const T w = l_ - (beta_ / 2.0) * r2 * S;
    return u * y[2] * y[2] / 2.0 - (e_ * e_) / (2.0 * u) + y[3] * y[3] / (2.0 * r2) + w * w / (2.0 * r2 * S);
  }
  double energy(std::span<const double> y) const { return hamiltonian<double>(y); }

  // Sub-Hamiltonians in the Cartesian-like variables (x, y, p_x, p_y).
  double h_a_bar(std::span<const double> z) const;
  double h_b_bar(std::span<const double> z) const;
  double h_c(std::span<const double> z) const;
  double cartesian_energy(std::span<const double> z) const { return h_a_bar(z) + h_b_bar(z) + h_c(z); }

  // (dH_A/dx, dH_A/dy).
  std::array<double, 2> grad_h_a_bar(double x, double y) const;

  // theta = pi/2, p_r = 0, r = 11 and p_theta > 0 with H = -1/2.
  std::vector<double> initial_state() const;

 private:
  double e_;
  double l_;
  double beta_;
};

// x = r cos(theta), y = r sin(theta),
// p_x = cos(theta) p_r - sin(theta) p_theta / r, p_y = sin(theta) p_r + cos(theta) p_theta / r.
std::array<double, 4> polar_to_cart(std::span<const double> polar);
std::array<double, 4> cart_to_polar(std::span<const double> cart);

// Exact sub-flows of the three-part split in Cartesian-like variables.
// Part 0: kick by H_A, part 1: drift by H_B, part 2: H_C through (nu, mu).
class SchwarzschildFlows {
 public:
  explicit SchwarzschildFlows(const Schwarzschild& problem) : problem_(problem) {}
  static constexpr std::size_t size() { return 3; }
  static std::vector<std::string> labels() { return {"A", "B", "C"}; }

  void flow_a(std::span<double> z, double t) const {
    const auto g = problem_.grad_h_a_bar(z[0], z[1]);
    z[2] -= t * g[0];
    z[3] -= t * g[1];
  }
  static void flow_b(std::span<double> z, double t) {
    z[0] += t * z[2];
    z[1] += t * z[3];
  }
  // H_C = -p_r^2 / r keeps mu = p_r^2 / r fixed while nu = r p_r moves
  // linearly, nu(t) = nu - 3 mu t; then p_r = cbrt(mu nu), r = p_r^2 / mu.
  static std::array<double, 2> flow_c_radial(double r, double pr, double t);
  static void flow_c(std::span<double> z, double t);

  void apply(std::size_t part, std::span<double> z, double t) const {
    switch (part) {
      case 0: flow_a(z, t); break;
      case 1: flow_b(z, t); break;
      default: flow_c(z, t); break;
    }
  }

 private:
  Schwarzschild problem_;
};

// Drift (part 0) and kick (part 1) flows of any second-order problem whose
// acceleration does not depend on time.
template <class P>
class DriftKickFlows {
 public:
  explicit DriftKickFlows(const P& problem)
      : problem_(problem), d_(problem.second_order_dimension()), g_(d_) {
    if (d_ == 0) throw ConfigurationError(problem.label() + ": no second-order structure for drift/kick flows");
  }
  static constexpr std::size_t size() { return 2; }
  static std::vector<std::string> labels() { return {"drift", "kick"}; }

  void drift(std::span<double> y, double t) const {
    for (std::size_t k = 0; k < d_; ++k) y[k] += t * y[d_ + k];
  }
  void kick(std::span<double> y, double t) const {
    problem_.accel(std::span<double>(g_), std::span<const double>(y.data(), d_), 0.0);
    for (std::size_t k = 0; k < d_; ++k) y[d_ + k] += t * g_[k];
  }
  void apply(std::size_t part, std::span<double> y, double t) const {
    if (part == 0) drift(y, t);
    else kick(y, t);
  }

 private:
  P problem_;
  std::size_t d_;
  mutable std::vector<double> g_;  // scratch; one stepper per thread
};

inline DriftKickFlows<HenonHeiles> henon_heiles_flows(const HenonHeiles& p) {
  if (p.xi() != 0.0) throw ConfigurationError("henon-heiles: exact flows need xi = 0");
  return DriftKickFlows<HenonHeiles>(p);
}
inline DriftKickFlows<NBody> n_body_flows(const NBody& p) { return DriftKickFlows<NBody>(p); }
inline SchwarzschildFlows schwarzschild_flowset(const Schwarzschild& p) { return SchwarzschildFlows(p); }

}  // namespace symplectic
