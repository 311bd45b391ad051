#include "symplectic/problems.hpp"

#include <cstdlib>
#include <fstream>
#include <numbers>
#include <sstream>

namespace symplectic {

std::vector<double> HenonHeiles::initial_state() const {
  const double q1 = 0.0, q2 = 0.3, p2 = 0.2;
  auto energy_at = [&](double p1) {
    const std::array<double, 4> y{q1, q2, p1, p2};
    return hamiltonian<double>(std::span<const double>(y));
  };
  const double target = 1.0 / 12.0;
  double hi = 1.0;
  while (energy_at(hi) < target) {
    hi *= 2.0;
    if (hi > 1e6) throw ConfigurationError("henon-heiles: no p1 root for H = 1/12");
  }
  if (energy_at(0.0) > target) throw ConfigurationError("henon-heiles: no p1 root for H = 1/12");
  const double p1 = bisect_increasing(energy_at, target, 0.0, hi);
  return {q1, q2, p1, p2};
}

NBody::NBody(double gravitational_constant, std::vector<Body> bodies, bool barycentric)
    : g_(gravitational_constant), n_(bodies.size()), body_data_(std::move(bodies)) {
  if (n_ < 2) throw ConfigurationError("n-body: need at least two bodies");
  double total = 0.0;
  std::array<double, 3> cq{}, cv{};
  for (const auto& b : body_data_) {
    masses_.push_back(b.mass);
    total += b.mass;
    for (int k = 0; k < 3; ++k) {
      cq[k] += b.mass * b.position[k];
      cv[k] += b.mass * b.velocity[k];
    }
  }
  if (!(total > 0.0)) throw ConfigurationError("n-body: total mass must be positive");
  if (barycentric) {
    for (int k = 0; k < 3; ++k) {
      cq[k] /= total;
      cv[k] /= total;
    }
    for (auto& b : body_data_) {
      for (int k = 0; k < 3; ++k) {
        b.position[k] -= cq[k];
        b.velocity[k] -= cv[k];
      }
    }
  }
  y0_.assign(6 * n_, 0.0);
  for (std::size_t i = 0; i < n_; ++i) {
    for (int k = 0; k < 3; ++k) {
      y0_[3 * i + k] = body_data_[i].position[k];
      y0_[3 * n_ + 3 * i + k] = body_data_[i].velocity[k];
    }
  }
}

std::array<double, 3> NBody::momentum(std::span<const double> y) const {
  std::array<double, 3> p{};
  for (std::size_t i = 0; i < n_; ++i)
    for (int k = 0; k < 3; ++k) p[k] += masses_[i] * y[3 * n_ + 3 * i + k];
  return p;
}

std::array<double, 3> NBody::angular_momentum(std::span<const double> y) const {
  std::array<double, 3> l{};
  const std::size_t d = 3 * n_;
  for (std::size_t i = 0; i < n_; ++i) {
    const double* q = &y[3 * i];
    const double* v = &y[d + 3 * i];
    l[0] += masses_[i] * (q[1] * v[2] - q[2] * v[1]);
    l[1] += masses_[i] * (q[2] * v[0] - q[0] * v[2]);
    l[2] += masses_[i] * (q[0] * v[1] - q[1] * v[0]);
  }
  return l;
}

std::filesystem::path data_directory() {
  if (const char* env = std::getenv("SYMPLECTIC_DATA_DIR"); env != nullptr && *env != '\0') return env;
#ifdef SYMPLECTIC_DATA_DIR
  return SYMPLECTIC_DATA_DIR;
#else
  return "data";
#endif
}

std::vector<Body> read_bodies(const std::filesystem::path& file, double* gravitational_constant) {
  std::ifstream in(file);
  if (!in) throw ConfigurationError("cannot open body data file " + file.string());
  std::vector<Body> bodies;
  bool have_g = false;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      std::istringstream hs(line.substr(1));
      std::string key;
      hs >> key;
      if (key == "G") {
        double g = 0;
        if (!(hs >> g)) throw ConfigurationError("malformed G header in " + file.string());
        if (gravitational_constant != nullptr) *gravitational_constant = g;
        have_g = true;
      }
      continue;
    }
    std::istringstream ls(line);
    Body b;
    if (!(ls >> b.name >> b.mass >> b.position[0] >> b.position[1] >> b.position[2] >> b.velocity[0] >>
          b.velocity[1] >> b.velocity[2])) {
      throw ConfigurationError("malformed body line in " + file.string() + ": " + line);
    }
    bodies.push_back(b);
  }
  if (!have_g) throw ConfigurationError("missing G header in " + file.string());
  return bodies;
}

NBody outer_solar_system(const std::filesystem::path& file) {
  const auto path = file.empty() ? data_directory() / "outer_solar_system.txt" : file;
  double g = 0.0;
  auto bodies = read_bodies(path, &g);
  if (bodies.size() != 6) throw ConfigurationError("outer solar system: expected 6 bodies in " + path.string());
  NBody problem(g, std::move(bodies), true);
  problem.set_label("outer-solar-system");
  return problem;
}

double Schwarzschild::h_a_bar(std::span<const double> z) const {
  const double y2 = z[1] * z[1];
  const double r = std::sqrt(z[0] * z[0] + y2);
  const double w = l_ - beta_ / 2.0 * y2;
  return w * w / (2.0 * y2) - e_ * e_ / (2.0 * (1.0 - 2.0 / r));
}

double Schwarzschild::h_b_bar(std::span<const double> z) const { return (z[2] * z[2] + z[3] * z[3]) / 2.0; }

double Schwarzschild::h_c(std::span<const double> z) const {
  const double r = std::sqrt(z[0] * z[0] + z[1] * z[1]);
  const double pr = (z[0] * z[2] + z[1] * z[3]) / r;
  return -pr * pr / r;
}

std::array<double, 2> Schwarzschild::grad_h_a_bar(double x, double y) const {
  const double z = y * y;
  const double r = std::sqrt(x * x + z);
  const double w = l_ - beta_ / 2.0 * z;
  const double u = 1.0 - 2.0 / r;
  const double W = -w / z;
  const double U = -(e_ * e_) / (2.0 * u * u);
  const double R = U / (r * r * r);
  const double Z = R + (W - beta_) * W / 2.0;
  return {-2.0 * x * R, -2.0 * y * Z};
}

std::vector<double> Schwarzschild::initial_state() const {
  const double r = 11.0, theta = std::numbers::pi / 2.0, pr = 0.0;
  auto energy_at = [&](double pth) {
    const std::array<double, 4> y{r, theta, pr, pth};
    return hamiltonian<double>(std::span<const double>(y));
  };
  const double target = -0.5;
  if (energy_at(0.0) > target) throw ConfigurationError("schwarzschild: no p_theta root for H = -1/2");
  double hi = 1.0;
  while (energy_at(hi) < target) {
    hi *= 2.0;
    if (hi > 1e6) throw ConfigurationError("schwarzschild: no p_theta root for H = -1/2");
  }
  return {r, theta, pr, bisect_increasing(energy_at, target, 0.0, hi)};
}

std::array<double, 4> polar_to_cart(std::span<const double> p) {
  const double r = p[0];
  if (!(r > 0.0)) throw InputError("polar_to_cart: radius must be positive");
  const double c = std::cos(p[1]);
  const double s = std::sin(p[1]);
  return {r * c, r * s, c * p[2] - s * p[3] / r, s * p[2] + c * p[3] / r};
}

std::array<double, 4> cart_to_polar(std::span<const double> z) {
  const double r = std::hypot(z[0], z[1]);
  if (!(r > 0.0)) throw InputError("cart_to_polar: degenerate radius");
  const double c = z[0] / r;
  const double s = z[1] / r;
  return {r, std::atan2(z[1], z[0]), c * z[2] + s * z[3], z[0] * z[3] - z[1] * z[2]};
}

std::array<double, 2> SchwarzschildFlows::flow_c_radial(double r, double pr, double t) {
  const double nu = r * pr;
  const double mu = pr * pr / r;
  const double nu_new = nu - 3.0 * t * mu;
  const double pr_new = std::cbrt(mu * nu_new);
  // r from the invariant rather than nu / p_r keeps p_r^2 / r at mu.
  return {pr_new * pr_new / mu, pr_new};
}

void SchwarzschildFlows::flow_c(std::span<double> z, double t) {
  const double x = z[0], y = z[1], px = z[2], py = z[3];
  const double r = std::sqrt(x * x + y * y);
  const double c = x / r;
  const double s = y / r;
  const double pr = c * px + s * py;
  // At p_r = 0 the exact flow is stationary.
  if (std::fabs(pr) < 1e-30 * (1.0 + r)) return;
  const double pth = x * py - y * px;
  const auto [r_new, pr_new] = flow_c_radial(r, pr, t);
  z[0] = r_new * c;
  z[1] = r_new * s;
  z[2] = c * pr_new - s * pth / r_new;
  z[3] = s * pr_new + c * pth / r_new;
}

}  // namespace symplectic
