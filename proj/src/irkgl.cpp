#include "symplectic/irkgl.hpp"

#include <algorithm>

namespace symplectic {

void IntegratorConfig::validate() const {
  if (!(h > 0.0) || !std::isfinite(h)) throw InputError("integrator config: h must be positive");
  if (!(tf >= t0)) throw InputError("integrator config: tf must not precede t0");
  if (max_iters < 3) throw InputError("integrator config: max_iters must be at least 3");
  if (save_every < 1) throw InputError("integrator config: save_every must be at least 1");
}

bool stop_check(const std::vector<std::vector<double>>& delta_history, int k) {
  if (k < 1) throw InputError("stop_check: k must be at least 1");
  const auto kk = static_cast<std::size_t>(k);
  for (const auto& d : delta_history) {
    if (d.size() < kk) throw InputError("stop_check: history shorter than k");
    if (d[kk - 1] == 0.0) continue;
    if (k < 3) return false;
    const double older = *std::min_element(d.begin(), d.begin() + (k - 2));
    if (!(older <= std::min(d[kk - 2], d[kk - 1]))) return false;
  }
  return true;
}

void StagnationMonitor::reset(std::size_t components) {
  older_min_.assign(components, std::numeric_limits<double>::infinity());
  previous_.assign(components, 0.0);
  k_ = 0;
}

bool StagnationMonitor::record(std::span<const double> delta) {
  if (delta.size() != previous_.size()) throw InputError("stagnation monitor: component count changed");
  ++k_;
  bool stop = true;
  for (std::size_t l = 0; l < delta.size(); ++l) {
    const double dk = delta[l];
    const bool ok = dk == 0.0 || (k_ >= 3 && older_min_[l] <= std::min(previous_[l], dk));
    stop = stop && ok;
    if (k_ >= 2) older_min_[l] = std::min(older_min_[l], previous_[l]);
    previous_[l] = dk;
  }
  return stop;
}

}  // namespace symplectic
