#pragma once

// Default catalog of eight reference priors over the four regimes
// (Expansion, Recovery, Stagnation, Recession). The regime-focused and mixed
// priors only have qualitative descriptions, so their numbers are
// defaults; they live in data/default_priors.csv and are embedded at
// configure time. Pass a different priors file to the CLI to override them.

#include <algorithm>
#include <cmath>
#include <sstream>
#include <string>
#include <vector>

#include "robust_bayes/decision.hpp"
#include "robust_bayes/default_priors_data.hpp"
#include "robust_bayes/io.hpp"

namespace robust_bayes {

struct PriorCatalog {
  std::vector<std::string> states;
  std::vector<Prior> entries;

  const Prior& find(const std::string& name) const {
    const auto it = std::find_if(entries.begin(), entries.end(), [&](const Prior& p) { return p.name == name; });
    if (it == entries.end()) throw InputError("unknown prior '" + name + "'");
    return *it;
  }

  void validate() const {
    if (entries.size() != 8) throw ConsistencyError("prior catalog must hold 8 entries");
    std::size_t uniform = 0;
    for (const auto& p : entries) {
      if (p.mass.size() != states.size()) throw ConsistencyError("prior '" + p.name + "' has the wrong length");
      const bool is_uniform = std::all_of(p.mass.begin(), p.mass.end(), [&](double v) {
        return std::abs(v - 1.0 / static_cast<double>(states.size())) <= 1e-12;
      });
      uniform += is_uniform ? 1 : 0;
    }
    if (uniform != 1) throw ConsistencyError("prior catalog must contain exactly one uniform prior");
  }
};

inline PriorCatalog default_catalog() {
  std::istringstream in{std::string(generated::kDefaultPriorsCsv)};
  auto file = io::parse_priors(io::read_csv(in, "default_priors.csv"));
  PriorCatalog catalog{std::move(file.states), std::move(file.priors)};
  catalog.validate();
  return catalog;
}

}  // namespace robust_bayes
