#include "symplectic/splitting.hpp"

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <sstream>

#include "symplectic/problems.hpp"

namespace symplectic {

namespace {

double sequential_sum(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s;
}

bool palindromic(std::span<const double> v) {
  for (std::size_t i = 0; i < v.size(); ++i)
    if (v[i] != v[v.size() - 1 - i]) return false;
  return true;
}

}  // namespace

void CompositionScheme::validate() const {
  if (gammas.empty()) throw ConfigurationError("scheme " + name + ": no weights");
  if (!palindromic(gammas)) throw ConfigurationError("scheme " + name + ": weights are not palindromic");
  if (std::fabs(sequential_sum(gammas) - 1.0) > 1e-15) {
    throw ConfigurationError("scheme " + name + ": weights do not sum to 1");
  }
}

bool ABSplittingScheme::symmetric() const { return palindromic(a) && palindromic(b); }

void ABSplittingScheme::validate() const {
  if (b.empty() || a.size() != b.size() + 1) {
    throw ConfigurationError("scheme " + name + ": need s + 1 drift and s kick coefficients");
  }
  if (std::fabs(sequential_sum(a) - 1.0) > 1e-15 || std::fabs(sequential_sum(b) - 1.0) > 1e-15) {
    throw ConfigurationError("scheme " + name + ": coefficients do not sum to 1");
  }
}

ABSplittingScheme gamma_to_ab(std::span<const double> g) {
  if (g.empty()) throw InputError("gamma_to_ab: empty weight list");
  ABSplittingScheme out;
  const std::size_t s = g.size();
  out.a.resize(s + 1);
  out.a[0] = g[0] / 2.0;
  for (std::size_t j = 1; j < s; ++j) out.a[j] = (g[j - 1] + g[j]) / 2.0;
  out.a[s] = g[s - 1] / 2.0;
  out.b.assign(g.begin(), g.end());
  return out;
}

ABSplittingScheme gamma_to_ab(const CompositionScheme& scheme) {
  ABSplittingScheme out = gamma_to_ab(std::span<const double>(scheme.gammas));
  out.name = scheme.name;
  out.order = scheme.order;
  out.provenance = scheme.provenance;
  return out;
}

SplittingPlan SplittingPlan::strang() { return multi_part(2); }

SplittingPlan SplittingPlan::multi_part(std::size_t parts) {
  CompositionScheme single{"strang", 2, {1.0}, ""};
  return composition(single, parts);
}

SplittingPlan SplittingPlan::composition(const CompositionScheme& scheme, std::size_t parts) {
  if (parts < 2) throw ConfigurationError("splitting plan: needs at least two parts");
  const auto& g = scheme.gammas;
  if (g.empty()) throw ConfigurationError("splitting plan: empty composition");
  SplittingPlan plan;
  plan.parts_ = parts;
  auto push = [&plan](std::size_t part, double c) {
    if (c != 0.0) plan.stages_.push_back({part, c});
  };
  for (std::size_t j = 0; j < g.size(); ++j) {
    push(0, j == 0 ? g[0] / 2.0 : (g[j - 1] + g[j]) / 2.0);
    for (std::size_t k = 1; k + 1 < parts; ++k) push(k, g[j] / 2.0);
    push(parts - 1, g[j]);
    for (std::size_t k = parts - 1; k-- > 1;) push(k, g[j] / 2.0);
  }
  push(0, g.back() / 2.0);
  return plan;
}

SplittingPlan SplittingPlan::ab(const ABSplittingScheme& scheme) {
  scheme.validate();
  SplittingPlan plan;
  plan.parts_ = 2;
  for (std::size_t j = 0; j < scheme.b.size(); ++j) {
    if (scheme.a[j] != 0.0) plan.stages_.push_back({0, scheme.a[j]});
    if (scheme.b[j] != 0.0) plan.stages_.push_back({1, scheme.b[j]});
  }
  if (scheme.a.back() != 0.0) plan.stages_.push_back({0, scheme.a.back()});
  return plan;
}

SplittingPlan SplittingPlan::from_scheme(const SplittingScheme& scheme, std::size_t parts) {
  if (const auto* c = std::get_if<CompositionScheme>(&scheme)) return composition(*c, parts);
  const auto& ab_scheme = std::get<ABSplittingScheme>(scheme);
  if (parts != 2) {
    throw ConfigurationError("scheme " + ab_scheme.name + " needs a two-part (drift/kick) splitting");
  }
  return ab(ab_scheme);
}

std::int64_t SplittingPlan::evaluations() const {
  std::int64_t n = 0;
  for (const auto& s : stages_)
    if (s.part + 1 == parts_) ++n;
  return n;
}

SplittingScheme read_scheme(std::istream& in, const std::string& origin) {
  std::string name, type, provenance;
  int order = 0;
  std::vector<double> values;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      std::istringstream hs(line.substr(1));
      std::string key;
      hs >> key;
      if (key == "name") {
        hs >> name;
      } else if (key == "order") {
        hs >> order;
      } else if (key == "type") {
        hs >> type;
      } else {
        std::string rest = line.substr(1);
        const auto first = rest.find_first_not_of(' ');
        if (first != std::string::npos) {
          if (!provenance.empty()) provenance += "; ";
          provenance += rest.substr(first);
        }
      }
      continue;
    }
    char* end = nullptr;
    const double v = std::strtod(line.c_str(), &end);
    if (end == line.c_str() || std::string(end).find_first_not_of(" \t\r") != std::string::npos) {
      throw ConfigurationError("scheme file " + origin + ": malformed value '" + line + "'");
    }
    values.push_back(v);
  }
  if (name.empty() || order <= 0) throw ConfigurationError("scheme file " + origin + ": missing name or order");
  if (type == "gamma") {
    CompositionScheme c{name, order, values, provenance};
    c.validate();
    return c;
  }
  if (type == "ab") {
    if (values.size() % 2 != 1) throw ConfigurationError("scheme " + name + ": ab file needs 2s + 1 values");
    const std::size_t s = (values.size() - 1) / 2;
    ABSplittingScheme ab{name, order, {values.begin(), values.begin() + static_cast<std::ptrdiff_t>(s + 1)},
                         {values.begin() + static_cast<std::ptrdiff_t>(s + 1), values.end()}, provenance};
    ab.validate();
    return ab;
  }
  throw ConfigurationError("scheme file " + origin + ": unknown type '" + type + "'");
}

SplittingScheme read_scheme_file(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw ConfigurationError("cannot open scheme file " + file.string());
  return read_scheme(in, file.string());
}

const std::string& scheme_name(const SplittingScheme& s) {
  return std::visit([](const auto& x) -> const std::string& { return x.name; }, s);
}

int scheme_order(const SplittingScheme& s) {
  return std::visit([](const auto& x) { return x.order; }, s);
}

const std::vector<std::string>& SchemeRegistry::standard_names() {
  static const std::vector<std::string> names{"strang", "suz90", "ss05-6", "ss05-8", "ss05-10", "bm02", "bce22"};
  return names;
}

SchemeRegistry SchemeRegistry::load(const std::filesystem::path& dir) {
  SchemeRegistry r;
  for (const auto& name : standard_names()) {
    SplittingScheme s;
    try {
      s = read_scheme_file(dir / (name + ".txt"));
    } catch (const ConfigurationError& e) {
      throw ConfigurationError("scheme " + name + ": " + e.what());
    }
    if (scheme_name(s) != name) throw ConfigurationError("scheme " + name + ": file declares another name");
    r.schemes_.emplace(name, std::move(s));
  }
  return r;
}

const SplittingScheme& SchemeRegistry::get(const std::string& name) const {
  auto it = schemes_.find(name);
  if (it == schemes_.end()) throw ConfigurationError("unknown splitting scheme " + name);
  return it->second;
}

std::vector<std::string> SchemeRegistry::names() const {
  std::vector<std::string> out;
  for (const auto& n : standard_names())
    if (contains(n)) out.push_back(n);
  return out;
}

const SchemeRegistry& scheme_registry() {
  static const SchemeRegistry registry = SchemeRegistry::load(data_directory() / "schemes");
  return registry;
}

}  // namespace symplectic
