#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "symplectic/errors.hpp"
#include "symplectic/irkgl.hpp"

namespace symplectic {

// Symmetric composition of a second-order symmetric base step:
// phi_{gamma_s h} o ... o phi_{gamma_1 h}.
struct CompositionScheme {
  std::string name;
  int order = 0;
  std::vector<double> gammas;
  std::string provenance;

  std::size_t stages() const { return gammas.size(); }
  // Palindromic bitwise and sum(gamma) within 1e-15 of 1.
  void validate() const;
};

// phi^A_{a_{s+1} h} o phi^B_{b_s h} o phi^A_{a_s h} o ... o phi^B_{b_1 h} o phi^A_{a_1 h}.
struct ABSplittingScheme {
  std::string name;
  int order = 0;
  std::vector<double> a;  // s + 1 entries
  std::vector<double> b;  // s entries
  std::string provenance;

  std::size_t stages() const { return b.size(); }
  bool symmetric() const;
  void validate() const;
};

using SplittingScheme = std::variant<CompositionScheme, ABSplittingScheme>;

ABSplittingScheme gamma_to_ab(const CompositionScheme& scheme);
ABSplittingScheme gamma_to_ab(std::span<const double> gammas);

// Anything that can advance a state by one of its exact sub-flows.
template <class F>
concept FlowMaps = requires(const F& f, std::size_t k, std::span<double> y, double t) {
  { f.size() } -> std::convertible_to<std::size_t>;
  f.apply(k, y, t);
};

// Runtime-assembled flow set.
struct FlowSet {
  using Flow = std::function<void(std::span<double>, double)>;
  std::vector<Flow> flows;
  std::vector<std::string> labels;

  std::size_t size() const { return flows.size(); }
  void apply(std::size_t k, std::span<double> y, double t) const { flows.at(k)(y, t); }
};

template <FlowMaps F>
void strang_step(const F& flows, double h, std::span<double> y) {
  if (flows.size() != 2) throw ConfigurationError("strang_step: needs exactly two flows");
  const double half = 0.5 * h;
  flows.apply(0, y, half);
  flows.apply(1, y, h);
  flows.apply(0, y, half);
}

// Halves of parts 0..m-2 outward, a full step of part m-1 in the middle.
template <FlowMaps F>
void multi_part_step(const F& flows, double h, std::span<double> y) {
  const std::size_t m = flows.size();
  if (m < 2) throw ConfigurationError("multi_part_step: needs at least two flows");
  const double half = 0.5 * h;
  for (std::size_t k = 0; k + 1 < m; ++k) flows.apply(k, y, half);
  flows.apply(m - 1, y, h);
  for (std::size_t k = m - 1; k-- > 0;) flows.apply(k, y, half);
}

// Applies base(gamma_j h, y) for j = 1..s, no fusion.
template <class BaseStep>
void composition_step(const CompositionScheme& scheme, BaseStep&& base, double h, std::span<double> y) {
  for (double g : scheme.gammas) base(g * h, y);
}

template <FlowMaps F>
void ab_splitting_step(const ABSplittingScheme& scheme, const F& flows, double h, std::span<double> y) {
  if (flows.size() != 2) throw ConfigurationError("ab_splitting_step: needs exactly two flows");
  const std::size_t s = scheme.b.size();
  for (std::size_t j = 0; j < s; ++j) {
    flows.apply(0, y, scheme.a[j] * h);
    flows.apply(1, y, scheme.b[j] * h);
  }
  flows.apply(0, y, scheme.a[s] * h);
}

// A flattened sequence of sub-flow applications, each advancing part `part`
// by coefficient * h. Compositions are fused: the outer part of consecutive
// base steps is merged into one application, and zero coefficients dropped.
class SplittingPlan {
 public:
  struct Stage {
    std::size_t part;
    double coefficient;
  };

  static SplittingPlan strang();
  static SplittingPlan multi_part(std::size_t parts);
  static SplittingPlan composition(const CompositionScheme& scheme, std::size_t parts);
  static SplittingPlan ab(const ABSplittingScheme& scheme);
  static SplittingPlan from_scheme(const SplittingScheme& scheme, std::size_t parts);

  const std::vector<Stage>& stages() const { return stages_; }
  std::size_t parts() const { return parts_; }
  // Applications of the innermost part per step (one per base stage for
  // compositions, the kicks for (a,b) schemes).
  std::int64_t evaluations() const;

  template <FlowMaps F>
  void step(const F& flows, double h, std::span<double> y) const {
    for (const Stage& s : stages_) flows.apply(s.part, y, s.coefficient * h);
  }

 private:
  std::vector<Stage> stages_;
  std::size_t parts_ = 0;
};

// Constant-step explicit integrator over a flow set and a plan, usable with
// the generic integrate() loop. State variables are whatever the flows act on.
template <FlowMaps F>
class SplittingIntegrator {
 public:
  SplittingIntegrator(F flows, SplittingPlan plan, std::size_t dim)
      : flows_(std::move(flows)), plan_(std::move(plan)), dim_(dim) {
    if (plan_.parts() != flows_.size()) {
      throw ConfigurationError("splitting plan expects " + std::to_string(plan_.parts()) + " flows, got " +
                               std::to_string(flows_.size()));
    }
  }

  StepResult step(double, double h, std::span<const double> y_prev, std::span<double> y_next) {
    std::copy(y_prev.begin(), y_prev.end(), y_next.begin());
    plan_.step(flows_, h, y_next);
    return {1, false};
  }
  void reset() {}
  std::size_t dimension() const { return dim_; }
  std::int64_t rhs_evals_per_sweep() const { return plan_.evaluations(); }
  const SplittingPlan& plan() const { return plan_; }

 private:
  F flows_;
  SplittingPlan plan_;
  std::size_t dim_;
};

// Coefficient files: "# name", "# order", "# type gamma|ab" headers (other
// "#" lines are kept as provenance), then one decimal per line; for ab the
// a-list (s + 1 values) precedes the b-list (s values).
SplittingScheme read_scheme(std::istream& in, const std::string& origin);
SplittingScheme read_scheme_file(const std::filesystem::path& file);
const std::string& scheme_name(const SplittingScheme& s);
int scheme_order(const SplittingScheme& s);

class SchemeRegistry {
 public:
  static const std::vector<std::string>& standard_names();
  // Loads <dir>/<name>.txt for every standard name.
  static SchemeRegistry load(const std::filesystem::path& dir);

  const SplittingScheme& get(const std::string& name) const;
  bool contains(const std::string& name) const { return schemes_.count(name) != 0; }
  std::vector<std::string> names() const;
  std::size_t size() const { return schemes_.size(); }

 private:
  std::map<std::string, SplittingScheme> schemes_;
};

// The registry built from the bundled data directory, loaded once.
const SchemeRegistry& scheme_registry();

}  // namespace symplectic
