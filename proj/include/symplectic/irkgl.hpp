#pragma once

#include <chrono>
#include <cmath>
#include <concepts>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "symplectic/errors.hpp"
#include "symplectic/lanes.hpp"
#include "symplectic/problems.hpp"
#include "symplectic/tableau.hpp"
#include "symplectic/trajectory.hpp"

namespace symplectic {

enum class IterationMode { first_order, partitioned };

struct IntegratorConfig {
  double h = 0.0;
  double t0 = 0.0;
  double tf = 0.0;
  IterationMode mode = IterationMode::first_order;
  int max_iters = 100;
  std::int64_t save_every = 1;

  // h > 0, tf >= t0, max_iters >= 3, save_every >= 1.
  void validate() const;
};

// Stopping rule evaluated on the full history delta[l] = (D^[1], ..., D^[k])
// of each component: stop iff for every l either D^[k] == 0 or
// min(D^[1..k-2]) <= min(D^[k-1], D^[k]).
bool stop_check(const std::vector<std::vector<double>>& delta_history, int k);

// The same rule evaluated incrementally. Per component it keeps
// min(D^[1..k-2]) and D^[k-1], which is all the rule ever reads.
class StagnationMonitor {
 public:
  void reset(std::size_t components);
  // Records D^[k] for k = iterations() + 1 and returns the stop decision.
  bool record(std::span<const double> delta);
  int iterations() const { return k_; }

 private:
  std::vector<double> older_min_;
  std::vector<double> previous_;
  int k_ = 0;
};

struct StepResult {
  int iterations = 0;
  bool capped = false;
};

template <std::size_t S>
struct StepWorkspace {
  StateArray<S> Y, F, L, L_prev;
  std::vector<double> delta;  // D^[k] of the latest sweep, per component
  StagnationMonitor monitor;
  bool has_history = false;
  int iter_count = 0;

  StepWorkspace() = default;
  explicit StepWorkspace(std::vector<std::size_t> shape)
      : Y(shape), F(shape), L(shape), L_prev(shape), delta(Y.size(), 0.0) {}
};

namespace detail {
[[noreturn]] inline void throw_divergence() {
  throw DivergenceError("non-finite stage values in fixed-point iteration");
}
}  // namespace detail

// Y^[0] = y_{n-1} + sum_i nu_i L_{n-1,i}, or the broadcast of y_{n-1} when no
// previous step exists.
template <std::size_t S>
void init_guess(const GaussTableau<S>& tab, std::span<const double> y_prev, StepWorkspace<S>& ws) {
  const std::size_t dim = ws.Y.size();
  if (!ws.has_history) {
    for (std::size_t l = 0; l < dim; ++l) ws.Y[l] = LaneVector<S>(y_prev[l]);
    return;
  }
  for (std::size_t l = 0; l < dim; ++l) {
    const LaneVector<S>& Lp = ws.L_prev[l];
    LaneVector<S> dY = tab.nu[0] * Lp[0];
    for (std::size_t i = 1; i < S; ++i) dY += tab.nu[i] * Lp[i];
    ws.Y[l] = y_prev[l] + dY;
  }
}

namespace detail {
// L = h (b o F), Y_new = y + sum_i mu_i L_i; delta = |Y_new - Y_old|_inf.
template <std::size_t S>
inline void update_component(const GaussTableau<S>& tab, double h, double y, const LaneVector<S>& F,
                              LaneVector<S>& L, LaneVector<S>& Y, double& delta) {
  L = h * (tab.b * F);
  LaneVector<S> dY = tab.mu[0] * L[0];
  for (std::size_t i = 1; i < S; ++i) dY += tab.mu[i] * L[i];
  const LaneVector<S> Ynew = y + dY;
  delta = lane_max_abs(Ynew - Y);
  Y = Ynew;
}
}  // namespace detail

// One sweep of the first-order iteration:
//   F = f(t + h c, Y), L^l = h (b o F^l), Y^l = y^l + sum_i mu_i L^l_i.
template <std::size_t S, OdeProblem P>
void fixed_point_sweep(const P& problem, const GaussTableau<S>& tab, double t_prev, double h,
                       std::span<const double> y_prev, StepWorkspace<S>& ws) {
  const LaneVector<S> t = t_prev + h * tab.c;
  problem.rhs(ws.F.components(), std::span<const LaneVector<S>>(ws.Y.components()), t);
  const std::size_t dim = ws.Y.size();
  bool finite = true;
  for (std::size_t l = 0; l < dim; ++l) {
    detail::update_component(tab, h, y_prev[l], ws.F[l], ws.L[l], ws.Y[l], ws.delta[l]);
    finite = finite && std::isfinite(ws.delta[l]);
  }
  if (!finite) detail::throw_divergence();
}

// One sweep of the partitioned iteration for y = (q, v): the positions are
// updated from the current velocity stages, then g is evaluated on the new
// positions and the velocities are updated. F^l for l < d holds the velocity
// stages that were used.
template <std::size_t S, OdeProblem P>
void partitioned_sweep(const P& problem, const GaussTableau<S>& tab, double t_prev, double h,
                       std::span<const double> y_prev, StepWorkspace<S>& ws) {
  const std::size_t d = problem.second_order_dimension();
  if constexpr (!SecondOrderProblem<P>) {
    throw ConfigurationError(problem.label() + ": partitioned iteration needs second-order structure");
  } else {
    if (d == 0) throw ConfigurationError(problem.label() + ": partitioned iteration needs second-order structure");
    const LaneVector<S> t = t_prev + h * tab.c;
    bool finite = true;
    for (std::size_t l = 0; l < d; ++l) {
      ws.F[l] = ws.Y[d + l];
      detail::update_component(tab, h, y_prev[l], ws.F[l], ws.L[l], ws.Y[l], ws.delta[l]);
    }
    auto F = ws.F.components();
    problem.accel(F.subspan(d, d), std::span<const LaneVector<S>>(ws.Y.components()).first(d), t);
    for (std::size_t l = d; l < 2 * d; ++l) {
      detail::update_component(tab, h, y_prev[l], ws.F[l], ws.L[l], ws.Y[l], ws.delta[l]);
    }
    for (std::size_t l = 0; l < 2 * d; ++l) finite = finite && std::isfinite(ws.delta[l]);
    if (!finite) detail::throw_divergence();
  }
}

// One step: initial guess, sweeps until the stagnation rule fires or
// max_iters is reached, then y_n = y_{n-1} + sum(L) with the last sweep's L.
template <std::size_t S, OdeProblem P>
StepResult irkgl_step(const P& problem, const GaussTableau<S>& tab, IterationMode mode, int max_iters,
                      double t_prev, double h, std::span<const double> y_prev, std::span<double> y_next,
                      StepWorkspace<S>& ws) {
  const std::size_t dim = ws.Y.size();
  const std::size_t watched = mode == IterationMode::partitioned ? problem.second_order_dimension() : dim;
  init_guess(tab, y_prev, ws);
  ws.monitor.reset(watched);
  StepResult result;
  result.capped = true;
  const std::span<const double> delta(ws.delta.data(), watched);
  for (int k = 1; k <= max_iters; ++k) {
    if (mode == IterationMode::partitioned) {
      partitioned_sweep(problem, tab, t_prev, h, y_prev, ws);
    } else {
      fixed_point_sweep(problem, tab, t_prev, h, y_prev, ws);
    }
    result.iterations = k;
    // Partitioned mode watches positions only, and the first position
    // iterate has no computed predecessor: history starts at D^[2].
    if (mode == IterationMode::partitioned && k == 1) continue;
    if (ws.monitor.record(delta)) {
      result.capped = false;
      break;
    }
  }
  for (std::size_t l = 0; l < dim; ++l) y_next[l] = y_prev[l] + lane_sum(ws.L[l]);
  std::swap(ws.L, ws.L_prev);
  ws.has_history = true;
  ws.iter_count = result.iterations;
  return result;
}

// Stepper bundling the problem, tableau and workspace of the lane method.
template <std::size_t S, OdeProblem P>
class LaneIrkgl {
 public:
  static constexpr std::size_t stages = S;

  LaneIrkgl(P problem, GaussTableau<S> tableau, IterationMode mode = IterationMode::first_order,
            int max_iters = 100)
      : problem_(std::move(problem)), tab_(std::move(tableau)), mode_(mode), max_iters_(max_iters),
        ws_(problem_.shape()) {
    check_mode(problem_, mode_);
  }

  StepResult step(double t_prev, double h, std::span<const double> y_prev, std::span<double> y_next) {
    return irkgl_step(problem_, tab_, mode_, max_iters_, t_prev, h, y_prev, y_next, ws_);
  }
  void reset() { ws_.has_history = false; }
  std::size_t dimension() const { return problem_.dimension(); }
  static constexpr std::int64_t rhs_evals_per_sweep() { return static_cast<std::int64_t>(S); }
  const P& problem() const { return problem_; }
  const GaussTableau<S>& tableau() const { return tab_; }
  const StepWorkspace<S>& workspace() const { return ws_; }
  StepWorkspace<S>& workspace() { return ws_; }
  double stage(std::size_t i, std::size_t l) const { return ws_.Y[l][i]; }
  IterationMode mode() const { return mode_; }

  static void check_mode(const P& problem, IterationMode mode) {
    if (mode == IterationMode::partitioned && problem.second_order_dimension() == 0) {
      throw ConfigurationError(problem.label() + ": partitioned iteration needs second-order structure");
    }
  }

 private:
  P problem_;
  GaussTableau<S> tab_;
  IterationMode mode_;
  int max_iters_;
  StepWorkspace<S> ws_;
};

// Stage-by-stage scalar implementation of the same iteration with identical
// operation order; serves as the sequential baseline and the reference for
// lane/scalar equivalence. Stage values are stored stage-major, Y[i*D + l].
template <OdeProblem P>
class SequentialIrkgl {
 public:
  SequentialIrkgl(P problem, ScalarTableau tableau, IterationMode mode = IterationMode::first_order,
                  int max_iters = 100)
      : problem_(std::move(problem)), tab_(std::move(tableau)), mode_(mode), max_iters_(max_iters),
        s_(static_cast<std::size_t>(tab_.stages)), dim_(problem_.dimension()) {
    validate_tableau(tab_);
    if (mode_ == IterationMode::partitioned && problem_.second_order_dimension() == 0) {
      throw ConfigurationError(problem_.label() + ": partitioned iteration needs second-order structure");
    }
    Y_.assign(s_ * dim_, 0.0);
    F_ = Y_;
    L_ = Y_;
    L_prev_ = Y_;
    Ynew_.assign(s_, 0.0);
    delta_.assign(dim_, 0.0);
  }

  StepResult step(double t_prev, double h, std::span<const double> y_prev, std::span<double> y_next) {
    const std::size_t watched = mode_ == IterationMode::partitioned ? problem_.second_order_dimension() : dim_;
    init_guess(y_prev);
    monitor_.reset(watched);
    StepResult result;
    result.capped = true;
    for (int k = 1; k <= max_iters_; ++k) {
      if (mode_ == IterationMode::partitioned) {
        partitioned_sweep(t_prev, h, y_prev);
      } else {
        sweep(t_prev, h, y_prev);
      }
      result.iterations = k;
      if (mode_ == IterationMode::partitioned && k == 1) continue;
      if (monitor_.record(std::span<const double>(delta_.data(), watched))) {
        result.capped = false;
        break;
      }
    }
    for (std::size_t l = 0; l < dim_; ++l) {
      double sum = L_[l];
      for (std::size_t i = 1; i < s_; ++i) sum += L_[i * dim_ + l];
      y_next[l] = y_prev[l] + sum;
    }
    std::swap(L_, L_prev_);
    has_history_ = true;
    return result;
  }

  void init_guess(std::span<const double> y_prev) {
    for (std::size_t l = 0; l < dim_; ++l) {
      for (std::size_t j = 0; j < s_; ++j) {
        if (!has_history_) {
          Y_[j * dim_ + l] = y_prev[l];
          continue;
        }
        double dY = tab_.nu[j][0] * L_prev_[l];
        for (std::size_t i = 1; i < s_; ++i) dY += tab_.nu[j][i] * L_prev_[i * dim_ + l];
        Y_[j * dim_ + l] = y_prev[l] + dY;
      }
    }
  }

  void sweep(double t_prev, double h, std::span<const double> y_prev) {
    for (std::size_t i = 0; i < s_; ++i) {
      problem_.rhs(std::span<double>(&F_[i * dim_], dim_), std::span<const double>(&Y_[i * dim_], dim_),
                   t_prev + h * tab_.c[i]);
    }
    bool finite = true;
    for (std::size_t l = 0; l < dim_; ++l) {
      update_component(l, h, y_prev[l]);
      finite = finite && std::isfinite(delta_[l]);
    }
    if (!finite) detail::throw_divergence();
  }

  void partitioned_sweep(double t_prev, double h, std::span<const double> y_prev) {
    const std::size_t d = problem_.second_order_dimension();
    if constexpr (!SecondOrderProblem<P>) {
      throw ConfigurationError(problem_.label() + ": partitioned iteration needs second-order structure");
    } else {
      for (std::size_t l = 0; l < d; ++l) {
        for (std::size_t i = 0; i < s_; ++i) F_[i * dim_ + l] = Y_[i * dim_ + d + l];
        update_component(l, h, y_prev[l]);
      }
      for (std::size_t i = 0; i < s_; ++i) {
        problem_.accel(std::span<double>(&F_[i * dim_ + d], d), std::span<const double>(&Y_[i * dim_], d),
                       t_prev + h * tab_.c[i]);
      }
      for (std::size_t l = d; l < 2 * d; ++l) update_component(l, h, y_prev[l]);
      bool finite = true;
      for (std::size_t l = 0; l < 2 * d; ++l) finite = finite && std::isfinite(delta_[l]);
      if (!finite) detail::throw_divergence();
    }
  }

  void reset() { has_history_ = false; }
  std::size_t dimension() const { return dim_; }
  std::int64_t rhs_evals_per_sweep() const { return static_cast<std::int64_t>(s_); }
  const P& problem() const { return problem_; }
  double stage(std::size_t i, std::size_t l) const { return Y_[i * dim_ + l]; }
  std::span<const double> deltas() const { return delta_; }

 private:
  void update_component(std::size_t l, double h, double y) {
    for (std::size_t i = 0; i < s_; ++i) L_[i * dim_ + l] = h * (tab_.b[i] * F_[i * dim_ + l]);
    double m = 0.0;
    bool nan = false;
    for (std::size_t j = 0; j < s_; ++j) {
      double dY = tab_.mu[j][0] * L_[l];
      for (std::size_t i = 1; i < s_; ++i) dY += tab_.mu[j][i] * L_[i * dim_ + l];
      Ynew_[j] = y + dY;
      const double a = std::fabs(Ynew_[j] - Y_[j * dim_ + l]);
      if (std::isnan(a)) nan = true;
      if (a > m) m = a;
    }
    for (std::size_t j = 0; j < s_; ++j) Y_[j * dim_ + l] = Ynew_[j];
    delta_[l] = nan ? std::numeric_limits<double>::quiet_NaN() : m;
  }

  P problem_;
  ScalarTableau tab_;
  IterationMode mode_;
  int max_iters_;
  std::size_t s_;
  std::size_t dim_;
  std::vector<double> Y_, F_, L_, L_prev_, Ynew_, delta_;
  StagnationMonitor monitor_;
  bool has_history_ = false;
};

template <class Stepper>
concept OneStepMethod = requires(Stepper& m, double t, double h, std::span<const double> y, std::span<double> out) {
  { m.step(t, h, y, out) } -> std::same_as<StepResult>;
  { m.dimension() } -> std::convertible_to<std::size_t>;
};

// Constant-step loop over any stepper. rhs_evals_per_sweep is counted for
// every iteration of every step.
template <OneStepMethod Stepper>
Trajectory integrate(Stepper& method, const StepGrid& grid, std::span<const double> y0, std::int64_t rhs_evals_per_sweep) {
  const std::size_t dim = method.dimension();
  if (y0.size() != dim) throw InputError("integrate: initial state has wrong dimension");
  Trajectory traj(dim);
  traj.reserve(grid.saved_rows());
  traj.push(grid.t0, y0, 0);
  std::vector<double> y(y0.begin(), y0.end());
  std::vector<double> next(dim);
  const auto start = std::chrono::steady_clock::now();
  for (std::int64_t n = 1; n <= grid.steps; ++n) {
    StepResult r;
    try {
      r = method.step(grid.time(n - 1), grid.step_size(n), y, next);
    } catch (const DivergenceError& e) {
      throw e.at_step(n);
    }
    for (double v : next) {
      if (!std::isfinite(v)) throw DivergenceError("non-finite state").at_step(n);
    }
    traj.total_iters += r.iterations;
    traj.rhs_evals += rhs_evals_per_sweep * r.iterations;
    if (r.capped) {
      ++traj.capped_steps;
      traj.flag("max_iters_reached");
    }
    y.swap(next);
    if (grid.saves(n)) traj.push(grid.time(n), y, r.iterations);
  }
  traj.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  traj.steps = grid.steps;
  return traj;
}

template <OneStepMethod Stepper>
Trajectory integrate(Stepper& method, const IntegratorConfig& config, std::span<const double> y0) {
  config.validate();
  method.reset();
  return integrate(method, StepGrid::make(config.t0, config.tf, config.h, config.save_every), y0,
                   method.rhs_evals_per_sweep());
}

}  // namespace symplectic
