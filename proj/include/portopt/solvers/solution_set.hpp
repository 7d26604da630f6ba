#pragma once

#include <algorithm>
#include <cstdint>
#include <json.hpp>
#include <optional>
#include <string>
#include <vector>

#include "portopt/common.hpp"
#include "portopt/problem.hpp"
#include "portopt/qubo.hpp"

namespace portopt {

/// Ranked low-energy assignments, deduplicated and ascending in energy with
/// lexicographically smallest bit strings first among ties.
struct SolutionSet {
  struct Entry {
    std::vector<std::uint8_t> bits;  // flat assignment, layout order
    double energy = 0.0;
  };

  std::string solver;
  std::uint64_t seed = 0;
  double wall_time_s = 0.0;
  long iterations = 0;
  std::vector<Entry> entries;
  std::optional<VariableLayout> layout;

  const Entry& best() const {
    if (entries.empty()) throw SolverError("empty solution set");
    return entries.front();
  }

  /// Sorts ascending by (energy, bits) and removes duplicate assignments.
  void finalize() {
    std::sort(entries.begin(), entries.end(),
              [](const Entry& a, const Entry& b) {
                if (a.energy != b.energy) return a.energy < b.energy;
                return a.bits < b.bits;
              });
    entries.erase(std::unique(entries.begin(), entries.end(),
                              [](const Entry& a, const Entry& b) {
                                return a.bits == b.bits;
                              }),
                  entries.end());
  }

  BitTrajectory holding_bits(const Entry& entry) const {
    if (!layout) throw SolverError("solution set has no variable layout");
    return layout->holding_bits(entry.bits);
  }
};

/// Export schema: {solver, seed, wall_time_s, entries: [{bits, energy,
/// holdings}]} with bits serialized in (n-major, t, q-minor) order. When no
/// timing is supplied the wall_time_s field is null, which keeps artifacts
/// reproducible byte for byte.
inline nlohmann::json solution_set_to_json(const SolutionSet& set,
                                           const ProblemSpec* spec = nullptr,
                                           bool include_timing = true) {
  nlohmann::json entries = nlohmann::json::array();
  for (const auto& e : set.entries) {
    nlohmann::json je;
    if (set.layout) {
      const BitTrajectory traj = set.layout->holding_bits(e.bits);
      je["bits"] = traj.bit_string_nmajor();
      if (spec) {
        const HoldingsTrajectory h = decode(traj, *spec);
        nlohmann::json rows = nlohmann::json::array();
        for (int n = 0; n < h.num_assets(); ++n) {
          nlohmann::json row = nlohmann::json::array();
          for (int t = 0; t < h.num_steps(); ++t) row.push_back(h.holdings(n, t));
          rows.push_back(row);
        }
        je["holdings"] = rows;
      }
    } else {
      std::string s;
      for (auto b : e.bits) s.push_back(b ? '1' : '0');
      je["bits"] = s;
    }
    je["energy"] = e.energy;
    entries.push_back(je);
  }
  nlohmann::json out{{"solver", set.solver},
                     {"seed", set.seed},
                     {"entries", entries}};
  if (include_timing)
    out["wall_time_s"] = set.wall_time_s;
  else
    out["wall_time_s"] = nullptr;
  return out;
}

}  // namespace portopt
