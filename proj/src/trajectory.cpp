#include "symplectic/trajectory.hpp"

#include <cmath>
#include <limits>

namespace symplectic {

StepGrid StepGrid::make(double t0, double tf, double h, std::int64_t save_every) {
  if (!(h > 0.0) || !std::isfinite(h)) throw InputError("step size must be positive and finite");
  if (!(tf >= t0) || !std::isfinite(tf - t0)) throw InputError("interval must satisfy tf >= t0");
  if (save_every < 1) throw InputError("save_every must be at least 1");
  const double ratio = (tf - t0) / h;
  if (ratio > 1e12) throw InputError("too many steps");
  StepGrid g;
  g.t0 = t0;
  g.tf = tf;
  g.h = h;
  g.save_every = save_every;
  g.steps = std::llround(ratio);
  if (std::fabs(ratio - static_cast<double>(g.steps)) > 1e-9) {
    throw InputError("step size does not divide the integration interval");
  }
  if (g.steps > 0) {
    const double last = tf - (t0 + static_cast<double>(g.steps - 1) * h);
    g.lands_on_tf = std::fabs(last - h) <= 4.0 * std::numeric_limits<double>::epsilon() * h;
  }
  return g;
}

double StepGrid::step_size(std::int64_t n) const {
  if (n == steps && lands_on_tf) return tf - (t0 + static_cast<double>(n - 1) * h);
  return h;
}

}  // namespace symplectic
