#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <vector>

#include "portopt/common.hpp"
#include "portopt/qubo.hpp"
#include "portopt/solvers/solution_set.hpp"

namespace portopt {

/// Geometric cooling schedule for Metropolis single-bit-flip annealing.
struct AnnealSchedule {
  double initial_temperature = 1.0;
  double final_temperature = 1e-3;
  double cooling = 0.95;  // in (0, 1)
  int sweeps_per_temperature = 2;
  int restarts = 100;
  std::uint64_t seed = 0;

  void validate() const {
    if (!(final_temperature > 0.0) ||
        final_temperature > initial_temperature)
      throw ConfigError("anneal schedule needs 0 < final <= initial");
    if (!(cooling > 0.0 && cooling < 1.0))
      throw ConfigError("anneal cooling factor must be in (0, 1)");
    if (sweeps_per_temperature < 1 || restarts < 1)
      throw ConfigError("anneal sweeps and restarts must be >= 1");
  }
};

/// Temperature scale from the energy spread of random assignments, so the
/// same schedule shape works across instances.
inline AnnealSchedule default_anneal_schedule(const QuboMatrix& qubo,
                                              std::uint64_t seed) {
  Rng rng(mix_seed(seed, 0x5CA1E));
  const int n = qubo.size();
  const int samples = 128;
  std::vector<std::uint8_t> bits(static_cast<std::size_t>(n));
  double sum = 0.0, sum2 = 0.0;
  for (int s = 0; s < samples; ++s) {
    for (auto& b : bits) b = rng.coin() ? 1 : 0;
    const double e = qubo.energy(bits);
    sum += e;
    sum2 += e * e;
  }
  const double var = std::max(0.0, sum2 / samples - (sum / samples) * (sum / samples));
  const double scale = std::max(std::sqrt(var), 1e-12);
  AnnealSchedule sched;
  sched.initial_temperature = 2.0 * scale;
  sched.final_temperature = 2e-3 * scale;
  sched.seed = seed;
  return sched;
}

/// Metropolis annealing with incremental O(N) energy deltas. Restarts are
/// independent chains with seeds derived from the root seed; the result is
/// reproducible bit for bit from (instance, schedule).
inline SolutionSet solve_annealing(
    const QuboMatrix& qubo, const AnnealSchedule& schedule,
    const std::function<bool(int)>& keep_going = {}) {
  schedule.validate();
  const int n = qubo.size();
  const auto start = std::chrono::steady_clock::now();

  SolutionSet out;
  out.solver = "annealing";
  out.seed = schedule.seed;
  out.layout = qubo.layout;

  long iterations = 0;
  for (int restart = 0; restart < schedule.restarts; ++restart) {
    Rng rng(mix_seed(schedule.seed, static_cast<std::uint64_t>(restart)));
    std::vector<std::uint8_t> bits(static_cast<std::size_t>(n));
    for (auto& b : bits) b = rng.coin() ? 1 : 0;
    // field(i) = sum_j Q_ij x_j
    Eigen::VectorXd field = Eigen::VectorXd::Zero(n);
    for (int j = 0; j < n; ++j)
      if (bits[static_cast<std::size_t>(j)]) field += qubo.q.col(j);
    double energy = qubo.energy(bits);
    std::vector<std::uint8_t> best_bits = bits;
    double best_energy = energy;

    int sweep = 0;
    for (double temp = schedule.initial_temperature;
         temp >= schedule.final_temperature; temp *= schedule.cooling) {
      for (int s = 0; s < schedule.sweeps_per_temperature; ++s, ++sweep) {
        if (keep_going && !keep_going(sweep)) {
          temp = 0.0;
          break;
        }
        for (int k = 0; k < n; ++k) {
          const int i = static_cast<int>(rng.below(static_cast<std::uint64_t>(n)));
          const double old = bits[static_cast<std::size_t>(i)] ? 1.0 : 0.0;
          const double delta = (1.0 - 2.0 * old) *
                               (qubo.q(i, i) + 2.0 * (field(i) - qubo.q(i, i) * old));
          if (delta <= 0.0 || rng.uniform() < std::exp(-delta / temp)) {
            const double sign = 1.0 - 2.0 * old;
            bits[static_cast<std::size_t>(i)] ^= 1;
            field += sign * qubo.q.col(i);
            energy += delta;
            if (energy < best_energy) {
              best_energy = energy;
              best_bits = bits;
            }
          }
          ++iterations;
        }
      }
    }
    out.entries.push_back({best_bits, qubo.energy(best_bits)});
  }

  out.iterations = iterations;
  out.finalize();
  out.wall_time_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
          .count();
  return out;
}

}  // namespace portopt
