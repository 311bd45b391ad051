#include <gtest/gtest.h>

#include <bit>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <random>

#include "oracles.hpp"
#include "symplectic/numeric.hpp"
#include "symplectic/problems.hpp"

namespace sy = symplectic;
using sy::LaneVector;

namespace {

bool same_bits(double a, double b) { return std::bit_cast<std::uint64_t>(a) == std::bit_cast<std::uint64_t>(b); }

// Central differences of a scalar function of the state.
template <class H>
std::vector<double> gradient(H&& h, std::vector<double> y, double eps = 1e-6) {
  std::vector<double> g(y.size());
  for (std::size_t k = 0; k < y.size(); ++k) {
    const double keep = y[k];
    y[k] = keep + eps;
    const double hp = h(y);
    y[k] = keep - eps;
    const double hm = h(y);
    y[k] = keep;
    g[k] = (hp - hm) / (2 * eps);
  }
  return g;
}

// Canonical equations for y = (q, p) with d degrees of freedom.
template <class H>
std::vector<double> hamilton_rhs(H&& h, const std::vector<double>& y) {
  const auto g = gradient(h, y);
  const std::size_t d = y.size() / 2;
  std::vector<double> out(y.size());
  for (std::size_t k = 0; k < d; ++k) {
    out[k] = g[d + k];
    out[d + k] = -g[k];
  }
  return out;
}

template <std::size_t N, class P>
void expect_lane_rhs_matches_scalar(const P& problem, const std::vector<std::vector<double>>& states,
                                    const std::vector<double>& times) {
  const std::size_t dim = problem.dimension();
  std::vector<LaneVector<N>> y(dim), dy(dim);
  LaneVector<N> t;
  for (std::size_t i = 0; i < N; ++i) {
    for (std::size_t l = 0; l < dim; ++l) y[l].set(i, states[i][l]);
    t.set(i, times[i]);
  }
  problem.rhs(std::span<LaneVector<N>>(dy), std::span<const LaneVector<N>>(y), t);
  for (std::size_t i = 0; i < N; ++i) {
    std::vector<double> ref(dim);
    problem.rhs(std::span<double>(ref), std::span<const double>(states[i]), times[i]);
    for (std::size_t l = 0; l < dim; ++l) EXPECT_TRUE(same_bits(dy[l][i], ref[l])) << "lane " << i << " comp " << l;
  }
}

std::vector<double> random_schwarzschild_state(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> r(5.0, 30.0), th(0.5, 2.6), pr(-0.5, 0.5), pth(-5.0, 5.0);
  return {r(rng), th(rng), pr(rng), pth(rng)};
}

}  // namespace

// ---------------------------------------------------------------------------
// Henon-Heiles

TEST(HenonHeiles, InitialStateHasEnergyOneTwelfth) {
  const sy::HenonHeiles hh;
  const auto y0 = hh.initial_state();
  EXPECT_EQ(y0[0], 0.0);
  EXPECT_EQ(y0[1], 0.3);
  EXPECT_EQ(y0[3], 0.2);
  EXPECT_NEAR(hh.energy(y0), 1.0 / 12.0, 1e-15);
  // p1^2 = 2 (1/12 - V) - p2^2 with V = q2^2/2 - q2^3/3 at q1 = 0.
  using oracle::Big;
  const Big q2("0.3"), p2("0.2");
  const Big p1 = sqrt(2 * (Big(1) / 12 - q2 * q2 / 2 + q2 * q2 * q2 / 3) - p2 * p2);
  EXPECT_NEAR(y0[2], static_cast<double>(p1), 1e-15);
}

TEST(HenonHeiles, RhsAreHamiltonsEquations) {
  const sy::HenonHeiles hh;
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-0.5, 0.5);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> y{u(rng), u(rng), u(rng), u(rng)};
    const auto ref = hamilton_rhs([&](const std::vector<double>& z) { return hh.energy(z); }, y);
    std::vector<double> dy(4);
    hh.rhs(std::span<double>(dy), std::span<const double>(y), 0.0);
    for (int k = 0; k < 4; ++k) EXPECT_NEAR(dy[k], ref[k], 1e-9);
  }
}

TEST(HenonHeiles, ModulatedCouplingFollowsTime) {
  const sy::HenonHeiles hh(0.3, 1.0);
  EXPECT_DOUBLE_EQ(hh.coupling(0.7), 1.0 + 0.3 * std::sin(0.7));
  const std::vector<double> y{0.1, -0.2, 0.3, 0.05};
  const double t = 1.3;
  const auto ref = hamilton_rhs(
      [&](const std::vector<double>& z) { return hh.hamiltonian<double>(std::span<const double>(z), t); }, y);
  std::vector<double> dy(4);
  hh.rhs(std::span<double>(dy), std::span<const double>(y), t);
  for (int k = 0; k < 4; ++k) EXPECT_NEAR(dy[k], ref[k], 1e-9);
  EXPECT_THROW(sy::henon_heiles_flows(hh), sy::ConfigurationError);
}

TEST(HenonHeiles, LaneRhsIsBitwiseScalar) {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(-0.6, 0.6);
  std::vector<std::vector<double>> states(8);
  std::vector<double> times(8);
  for (int i = 0; i < 8; ++i) {
    states[i] = {u(rng), u(rng), u(rng), u(rng)};
    times[i] = 3.0 * u(rng);
  }
  expect_lane_rhs_matches_scalar<8>(sy::HenonHeiles(), states, times);
  expect_lane_rhs_matches_scalar<8>(sy::HenonHeiles(0.25, 1.0), states, times);
  expect_lane_rhs_matches_scalar<4>(sy::HenonHeiles(0.25, 1.0), states, times);
}

// ---------------------------------------------------------------------------
// N-body

TEST(NBody, BundledSystemLoadsBarycentric) {
  const auto sys = sy::outer_solar_system();
  EXPECT_EQ(sys.bodies(), 6u);
  EXPECT_EQ(sys.dimension(), 36u);
  EXPECT_EQ(sys.label(), "outer-solar-system");
  EXPECT_EQ(sys.body_data().front().name, "Sun");
  EXPECT_DOUBLE_EQ(sys.gravitational_constant(), 2.95912208286e-4);
  const auto y0 = sys.initial_state();
  const auto p = sys.momentum(y0);
  double total = 0.0, scale = 0.0;
  for (std::size_t i = 0; i < sys.bodies(); ++i) {
    total += sys.masses()[i];
    for (int k = 0; k < 3; ++k) scale += sys.masses()[i] * std::fabs(y0[18 + 3 * i + k]);
  }
  for (double c : p) EXPECT_LT(std::fabs(c), 1e-15 * scale);
  std::array<double, 3> cm{};
  for (std::size_t i = 0; i < sys.bodies(); ++i)
    for (int k = 0; k < 3; ++k) cm[k] += sys.masses()[i] * y0[3 * i + k] / total;
  for (double c : cm) EXPECT_LT(std::fabs(c), 1e-13);
}

// a_i = -grad_i U_i with U_i(q_i) = -G sum_{j != i} m_j / |q_i - q_j|.
TEST(NBody, AccelerationIsPotentialGradient) {
  const auto sys = sy::outer_solar_system();
  const auto y0 = sys.initial_state();
  std::vector<double> dy(36);
  sys.rhs(std::span<double>(dy), std::span<const double>(y0), 0.0);
  const double G = sys.gravitational_constant();
  for (std::size_t i = 0; i < 6; ++i) {
    auto potential = [&](const std::vector<double>& qi) {
      double u = 0.0;
      for (std::size_t j = 0; j < 6; ++j) {
        if (j == i) continue;
        const double dx = qi[0] - y0[3 * j], dy_ = qi[1] - y0[3 * j + 1], dz = qi[2] - y0[3 * j + 2];
        u -= G * sys.masses()[j] / std::sqrt(dx * dx + dy_ * dy_ + dz * dz);
      }
      return u;
    };
    const std::vector<double> qi{y0[3 * i], y0[3 * i + 1], y0[3 * i + 2]};
    const auto g = gradient(potential, qi, 1e-4);
    double norm = 0.0;
    for (int k = 0; k < 3; ++k) norm += g[k] * g[k];
    norm = std::sqrt(norm);
    for (int k = 0; k < 3; ++k) {
      EXPECT_NEAR(dy[18 + 3 * i + k], -g[k], 1e-7 * norm) << sys.body_data()[i].name << ' ' << k;
      EXPECT_EQ(dy[3 * i + k], y0[18 + 3 * i + k]);
    }
  }
}

TEST(NBody, LaneRhsIsBitwiseScalar) {
  const auto sys = sy::outer_solar_system();
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(-1e-3, 1e-3);
  std::vector<std::vector<double>> states(8, sys.initial_state());
  for (auto& s : states)
    for (auto& v : s) v *= 1.0 + u(rng);
  expect_lane_rhs_matches_scalar<8>(sys, states, std::vector<double>(8, 0.0));
}

TEST(NBody, ShapeMatchesLayout) {
  const auto sys = sy::outer_solar_system();
  const sy::StateArray<2> a(sys.shape());
  ASSERT_EQ(a.size(), sys.dimension());
  // (k, body, q/v) -> 3 body + k + 3N (q/v)
  const std::size_t idx[3] = {2, 4, 1};
  EXPECT_EQ(a.flat_index(idx), 2u + 3u * 4u + 18u);
}

TEST(NBody, DataFileErrors) {
  const auto dir = std::filesystem::temp_directory_path();
  const auto nog = dir / "symplectic_no_g.txt";
  std::ofstream(nog) << "Sun 1 0 0 0 0 0 0\n";
  EXPECT_THROW(sy::read_bodies(nog, nullptr), sy::ConfigurationError);
  const auto bad = dir / "symplectic_bad_body.txt";
  std::ofstream(bad) << "# G 1\nSun 1 0 0\n";
  EXPECT_THROW(sy::read_bodies(bad, nullptr), sy::ConfigurationError);
  EXPECT_THROW(sy::outer_solar_system(dir / "does_not_exist.txt"), sy::ConfigurationError);
  const auto two = dir / "symplectic_two.txt";
  std::ofstream(two) << "# G 1\nA 1 0 0 0 0 0 0\nB 1 1 0 0 0 1 0\n";
  EXPECT_THROW(sy::outer_solar_system(two), sy::ConfigurationError);
  std::filesystem::remove(nog);
  std::filesystem::remove(bad);
  std::filesystem::remove(two);
}

// ---------------------------------------------------------------------------
// Schwarzschild

TEST(Schwarzschild, InitialStateHasEnergyMinusHalf) {
  const sy::Schwarzschild bh;
  const auto y0 = bh.initial_state();
  EXPECT_EQ(y0[0], 11.0);
  EXPECT_EQ(y0[1], std::numbers::pi / 2);
  EXPECT_EQ(y0[2], 0.0);
  EXPECT_GT(y0[3], 0.0);
  EXPECT_NEAR(bh.energy(y0), -0.5, 1e-15);
}

TEST(Schwarzschild, RhsAreHamiltonsEquations) {
  const sy::Schwarzschild bh;
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    const auto y = random_schwarzschild_state(rng);
    const auto ref = hamilton_rhs([&](const std::vector<double>& z) { return bh.energy(z); }, y);
    std::vector<double> dy(4);
    bh.rhs(std::span<double>(dy), std::span<const double>(y), 0.0);
    for (int k = 0; k < 4; ++k) EXPECT_NEAR(dy[k], ref[k], 1e-7 * (1 + std::fabs(ref[k]))) << k;
  }
}

TEST(Schwarzschild, LaneRhsIsBitwiseScalar) {
  std::mt19937_64 rng(6);
  std::vector<std::vector<double>> states;
  for (int i = 0; i < 8; ++i) states.push_back(random_schwarzschild_state(rng));
  expect_lane_rhs_matches_scalar<8>(sy::Schwarzschild(), states, std::vector<double>(8, 0.0));
}

TEST(Schwarzschild, PolarCartesianRoundTrip) {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 100; ++trial) {
    const auto p = random_schwarzschild_state(rng);
    const auto z = sy::polar_to_cart(p);
    const auto back = sy::cart_to_polar(z);
    for (int k = 0; k < 4; ++k) EXPECT_NEAR(back[k], p[k], 1e-13 * (1 + std::fabs(p[k])));
  }
  const std::vector<double> bad{0.0, 1.0, 0.0, 0.0};
  EXPECT_THROW(sy::polar_to_cart(bad), sy::InputError);
  EXPECT_THROW(sy::cart_to_polar(std::vector<double>{0, 0, 1, 1}), sy::InputError);
}

TEST(Schwarzschild, SplitPartsSumToHamiltonian) {
  const sy::Schwarzschild bh;
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 1000; ++trial) {
    const auto p = random_schwarzschild_state(rng);
    const auto z = sy::polar_to_cart(p);
    const double h = bh.energy(p);
    EXPECT_NEAR(bh.cartesian_energy(z), h, 1e-13 * std::max(1.0, std::fabs(h)));
  }
}

TEST(Schwarzschild, GradientOfPartA) {
  const sy::Schwarzschild bh;
  std::mt19937_64 rng(9);
  for (int trial = 0; trial < 50; ++trial) {
    const auto z = sy::polar_to_cart(random_schwarzschild_state(rng));
    const auto g = bh.grad_h_a_bar(z[0], z[1]);
    const auto ref = gradient(
        [&](const std::vector<double>& v) { return bh.h_a_bar(v); }, std::vector<double>(z.begin(), z.end()));
    EXPECT_NEAR(g[0], ref[0], 1e-8 * (1 + std::fabs(ref[0])));
    EXPECT_NEAR(g[1], ref[1], 1e-8 * (1 + std::fabs(ref[1])));
  }
}

TEST(Schwarzschild, FlowsAAndBAreExact) {
  const sy::Schwarzschild bh;
  const sy::SchwarzschildFlows flows(bh);
  std::mt19937_64 rng(10);
  const auto z0 = sy::polar_to_cart(random_schwarzschild_state(rng));
  auto z = z0;
  flows.flow_a(z, 0.7);
  const auto g = bh.grad_h_a_bar(z0[0], z0[1]);
  EXPECT_EQ(z[0], z0[0]);
  EXPECT_EQ(z[1], z0[1]);
  EXPECT_EQ(z[2], z0[2] - 0.7 * g[0]);
  EXPECT_EQ(z[3], z0[3] - 0.7 * g[1]);
  z = z0;
  sy::SchwarzschildFlows::flow_b(z, -0.4);
  EXPECT_EQ(z[0], z0[0] - 0.4 * z0[2]);
  EXPECT_EQ(z[2], z0[2]);
  EXPECT_NEAR(bh.h_b_bar(z), bh.h_b_bar(z0), 1e-16);
}

// H_C = -nu^2 / r^3 with nu = x p_x + y p_y; integrate its canonical
// equations with many RK4 substeps as the reference.
TEST(Schwarzschild, FlowCMatchesNumericalFlow) {
  auto f = [](const std::array<double, 4>& z) {
    const double r2 = z[0] * z[0] + z[1] * z[1];
    const double r = std::sqrt(r2);
    const double r3 = r2 * r, r5 = r3 * r2;
    const double nu = z[0] * z[2] + z[1] * z[3];
    const double dpx = -2 * nu * z[0] / r3, dpy = -2 * nu * z[1] / r3;       // dH/dp
    const double dx = -2 * nu * z[2] / r3 + 3 * nu * nu * z[0] / r5;          // dH/dx
    const double dy = -2 * nu * z[3] / r3 + 3 * nu * nu * z[1] / r5;
    return std::array<double, 4>{dpx, dpy, -dx, -dy};
  };
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 10; ++trial) {
    const auto z0 = sy::polar_to_cart(random_schwarzschild_state(rng));
    const double t = 0.5;
    const int n = 20000;
    auto z = z0;
    const double dt = t / n;
    for (int k = 0; k < n; ++k) {
      auto add = [](std::array<double, 4> a, const std::array<double, 4>& b, double c) {
        for (int i = 0; i < 4; ++i) a[i] += c * b[i];
        return a;
      };
      const auto k1 = f(z);
      const auto k2 = f(add(z, k1, dt / 2));
      const auto k3 = f(add(z, k2, dt / 2));
      const auto k4 = f(add(z, k3, dt));
      for (int i = 0; i < 4; ++i) z[i] += dt / 6 * (k1[i] + 2 * k2[i] + 2 * k3[i] + k4[i]);
    }
    auto exact = z0;
    sy::SchwarzschildFlows::flow_c(exact, t);
    for (int i = 0; i < 4; ++i) EXPECT_NEAR(exact[i], z[i], 1e-10 * (1 + std::fabs(z[i]))) << i;
  }
}

TEST(Schwarzschild, FlowCConservesItsHamiltonian) {
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> rr(3.0, 40.0), pp(-0.8, 0.8), tt(-2.0, 2.0);
  std::int64_t worst = 0;
  for (int trial = 0; trial < 10000; ++trial) {
    const double r = rr(rng), pr = pp(rng);
    const auto [r1, pr1] = sy::SchwarzschildFlows::flow_c_radial(r, pr, tt(rng));
    ASSERT_GT(r1, 0.0);
    worst = std::max(worst, sy::ulp_distance(-pr1 * pr1 / r1, -pr * pr / r));
  }
  EXPECT_LE(worst, 4);
}

// In Cartesian variables H_C is recovered through p_r = (x p_x + y p_y)/r,
// which loses digits when |p_r| << |p_theta|/r. The drift must stay within
// a few ulp per unit of the condition number of that evaluation.
TEST(Schwarzschild, FlowCCartesianDriftWithinConditioning) {
  const sy::Schwarzschild bh;
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> tt(-2.0, 2.0);
  auto condition = [&](std::array<double, 4> z) {
    const double h = bh.h_c(z);
    const double eps = 1e-7;
    double k = 0.0;
    for (int i = 0; i < 4; ++i) {
      auto a = z, b = z;
      a[i] *= 1 + eps;
      b[i] *= 1 - eps;
      k += std::fabs(bh.h_c(a) - bh.h_c(b)) / (2 * eps);
    }
    return k / std::fabs(h);
  };
  for (int trial = 0; trial < 1000; ++trial) {
    auto z = sy::polar_to_cart(random_schwarzschild_state(rng));
    const double before = bh.h_c(z);
    const double kin = condition(z);
    sy::SchwarzschildFlows::flow_c(z, tt(rng));
    const double kout = condition(z);
    EXPECT_LE(static_cast<double>(sy::ulp_distance(bh.h_c(z), before)), 4.0 * std::max(1.0, kin + kout));
  }
}

TEST(Schwarzschild, FlowCIdentityCases) {
  std::mt19937_64 rng(13);
  auto z = sy::polar_to_cart(random_schwarzschild_state(rng));
  const auto z0 = z;
  sy::SchwarzschildFlows::flow_c(z, 0.0);
  for (int i = 0; i < 4; ++i) EXPECT_NEAR(z[i], z0[i], 1e-15 * (1 + std::fabs(z0[i])));
  // p_r = 0: stationary.
  const std::vector<double> still{9.0, 1.2, 0.0, 2.0};
  auto w = sy::polar_to_cart(still);
  const auto w0 = w;
  sy::SchwarzschildFlows::flow_c(w, 3.0);
  for (int i = 0; i < 4; ++i) EXPECT_NEAR(w[i], w0[i], 1e-15 * (1 + std::fabs(w0[i])));
}

TEST(DriftKick, NeedsSecondOrderStructure) {
  EXPECT_THROW(sy::DriftKickFlows<sy::Schwarzschild>(sy::Schwarzschild()), sy::ConfigurationError);
  const sy::HenonHeiles hh;
  const auto flows = sy::henon_heiles_flows(hh);
  std::vector<double> y{0.1, 0.2, 0.3, 0.4};
  flows.apply(0, y, 0.5);
  EXPECT_EQ(y[0], 0.1 + 0.5 * 0.3);
  EXPECT_EQ(y[2], 0.3);
  std::vector<double> g(2);
  hh.accel(std::span<double>(g), std::span<const double>(y.data(), 2), 0.0);
  const double v0 = y[2];
  flows.apply(1, y, 0.25);
  EXPECT_EQ(y[2], v0 + 0.25 * g[0]);
}
