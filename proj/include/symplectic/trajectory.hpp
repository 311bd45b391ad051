#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "symplectic/errors.hpp"

namespace symplectic {

// Stored states of a constant-step run plus cost counters.
struct Trajectory {
  std::size_t dim = 0;
  std::vector<double> t;
  std::vector<double> states;   // t.size() rows of length dim
  std::vector<int> iterations;  // sweeps of the step that produced each row (0 for the initial row, 1 for explicit steps)
  std::int64_t steps = 0;
  std::int64_t rhs_evals = 0;
  std::int64_t total_iters = 0;
  std::int64_t capped_steps = 0;
  double wall_seconds = 0.0;
  std::vector<std::string> flags;

  explicit Trajectory(std::size_t dimension = 0) : dim(dimension) {}

  std::size_t size() const { return t.size(); }
  std::span<const double> state(std::size_t n) const { return {states.data() + n * dim, dim}; }
  std::span<const double> back() const { return state(size() - 1); }

  void reserve(std::size_t rows) {
    t.reserve(rows);
    states.reserve(rows * dim);
    iterations.reserve(rows);
  }
  void push(double time, std::span<const double> y, int iters) {
    if (y.size() != dim) throw InputError("trajectory: state dimension mismatch");
    t.push_back(time);
    states.insert(states.end(), y.begin(), y.end());
    iterations.push_back(iters);
  }
  void flag(const std::string& f) {
    for (const auto& g : flags)
      if (g == f) return;
    flags.push_back(f);
  }
};

// Constant-step grid: steps = round((tf - t0)/h), save every `save_every`
// steps and always the last one. Throws InputError when h does not divide
// the interval to within 1e-9 of a step.
struct StepGrid {
  double t0 = 0.0;
  double tf = 0.0;
  double h = 0.0;
  std::int64_t steps = 0;
  std::int64_t save_every = 1;
  bool lands_on_tf = true;

  static StepGrid make(double t0, double tf, double h, std::int64_t save_every);
  double time(std::int64_t n) const {
    return n == steps && lands_on_tf ? tf : t0 + static_cast<double>(n) * h;
  }
  // Step size for step n (1-based): h, except the last step lands on tf when
  // that changes h by no more than 4 ulp.
  double step_size(std::int64_t n) const;
  bool saves(std::int64_t n) const { return n % save_every == 0 || n == steps; }
  std::size_t saved_rows() const { return static_cast<std::size_t>(steps / save_every + 2); }
};

}  // namespace symplectic
