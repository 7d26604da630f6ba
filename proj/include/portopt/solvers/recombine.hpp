#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <chrono>
#include <limits>
#include <vector>

#include "portopt/common.hpp"
#include "portopt/problem.hpp"
#include "portopt/qubo.hpp"
#include "portopt/solvers/annealing.hpp"
#include "portopt/solvers/exhaustive.hpp"
#include "portopt/solvers/mps.hpp"
#include "portopt/solvers/solution_set.hpp"

namespace portopt {

/// A candidate portfolio for one rebalancing step.
struct StepCandidate {
  Eigen::VectorXd holdings;  // integer units per asset
  double step_energy = 0.0;  // h_t at this portfolio
};

using StepCandidates = std::vector<std::vector<StepCandidate>>;

/// Which sampler produces the per-step shortlists.
struct InnerSolver {
  enum class Kind { Exhaustive, Annealing, Mps };
  Kind kind = Kind::Exhaustive;
  ExhaustiveOptions exhaustive;
  AnnealSchedule annealing;
  MpsOptions mps;
  std::uint64_t seed = 0;
};

/// For each step t, solves the single-step instance h_t (returns, risk and
/// budget penalty; no inter-step coupling) and keeps the k lowest-energy
/// portfolios.
inline StepCandidates per_step_low_energy(const ProblemSpec& spec, int k,
                                          const InnerSolver& inner = {}) {
  if (k < 1) throw ConfigError("per-step candidate count must be >= 1");
  StepCandidates out;
  for (int t = 0; t < spec.num_steps; ++t) {
    const ProblemSpec step = single_step_spec(spec, t);
    const QuboMatrix qubo = build_qubo(step);
    SolutionSet sols;
    switch (inner.kind) {
      case InnerSolver::Kind::Exhaustive: {
        ExhaustiveOptions opts = inner.exhaustive;
        opts.top_k = k;
        sols = solve_exhaustive(qubo, opts);
        break;
      }
      case InnerSolver::Kind::Annealing: {
        AnnealSchedule sched = inner.annealing;
        sched.seed = mix_seed(inner.seed, static_cast<std::uint64_t>(t));
        sols = solve_annealing(qubo, sched);
        break;
      }
      case InnerSolver::Kind::Mps: {
        MpsOptions opts = inner.mps;
        opts.seed = mix_seed(inner.seed, static_cast<std::uint64_t>(t));
        sols = solve_mps(qubo, opts);
        break;
      }
    }
    std::vector<StepCandidate> list;
    for (const auto& e : sols.entries) {
      if (static_cast<int>(list.size()) >= k) break;
      const HoldingsTrajectory h = decode(sols.holding_bits(e), step);
      list.push_back({h.holdings.col(0), e.energy});
    }
    if (list.empty())
      throw SolverError("no candidates produced for step " + std::to_string(t));
    out.push_back(std::move(list));
  }
  return out;
}

namespace detail {

/// h_t at a normalized portfolio (no inter-step terms).
inline double step_energy(const ProblemSpec& spec, int t,
                          const Eigen::VectorXd& w) {
  return -spec.mu.col(t).dot(w) +
         0.5 * spec.gamma * w.dot(spec.sigma[static_cast<std::size_t>(t)] * w) +
         spec.rho * std::pow(w.sum() - 1.0, 2);
}

/// Coupling between consecutive portfolios: transaction costs plus market
/// impact of the trade into step t.
inline double edge_energy(const ProblemSpec& spec, int t,
                          const Eigen::VectorXd& w_prev,
                          const Eigen::VectorXd& w) {
  const Eigen::VectorXd dw = w - w_prev;
  double e = 0.0;
  if (spec.exact_cost)
    e += spec.exact_cost->rates.col(t).dot(dw.cwiseAbs());
  else
    e += dw.dot(spec.lambda_diagonal().asDiagonal() * dw);
  if (spec.market_impact)
    e -= dw.dot(spec.market_impact->coefficients.col(t).asDiagonal() * w);
  return e;
}

}  // namespace detail

/// Stitches one candidate per step into the trajectory minimizing the full
/// cost function. Exact dynamic programming over the step chain: coupling
/// exists only between adjacent steps, so the result matches brute force
/// over all k^{N_t} combinations.
inline SolutionSet recombine(const StepCandidates& candidates,
                             const ProblemSpec& spec) {
  if (static_cast<int>(candidates.size()) != spec.num_steps)
    throw ConfigError("candidate lists do not match the step count");
  const auto start = std::chrono::steady_clock::now();
  const double k_inv = 1.0 / static_cast<double>(spec.total_investment);

  // deduplicate candidates per step
  std::vector<std::vector<Eigen::VectorXd>> pools;
  for (const auto& list : candidates) {
    if (list.empty()) throw ConfigError("a step has no candidates");
    std::vector<Eigen::VectorXd> pool;
    for (const auto& c : list) {
      const bool seen = std::any_of(pool.begin(), pool.end(),
                                    [&](const Eigen::VectorXd& p) {
                                      return p.isApprox(c.holdings);
                                    });
      if (!seen) pool.push_back(c.holdings);
    }
    pools.push_back(std::move(pool));
  }

  std::vector<std::vector<double>> best(pools.size());
  std::vector<std::vector<int>> from(pools.size());
  const Eigen::VectorXd w_init = spec.previous_holdings();
  for (std::size_t t = 0; t < pools.size(); ++t) {
    best[t].assign(pools[t].size(), std::numeric_limits<double>::infinity());
    from[t].assign(pools[t].size(), -1);
    for (std::size_t c = 0; c < pools[t].size(); ++c) {
      const Eigen::VectorXd w = pools[t][c] * k_inv;
      const double node = detail::step_energy(spec, static_cast<int>(t), w);
      if (t == 0) {
        best[0][c] =
            node + detail::edge_energy(spec, 0, w_init, w);
        continue;
      }
      for (std::size_t p = 0; p < pools[t - 1].size(); ++p) {
        const Eigen::VectorXd wp = pools[t - 1][p] * k_inv;
        const double total =
            best[t - 1][p] + node +
            detail::edge_energy(spec, static_cast<int>(t), wp, w);
        if (total < best[t][c]) {
          best[t][c] = total;
          from[t][c] = static_cast<int>(p);
        }
      }
    }
  }

  // backtrack the optimal chain
  const auto& last = best.back();
  std::size_t arg = 0;
  for (std::size_t c = 1; c < last.size(); ++c)
    if (last[c] < last[arg]) arg = c;
  std::vector<int> chain(pools.size());
  chain.back() = static_cast<int>(arg);
  for (std::size_t t = pools.size() - 1; t > 0; --t)
    chain[t - 1] = from[t][static_cast<std::size_t>(chain[t])];

  Eigen::MatrixXd holdings(spec.num_assets, spec.num_steps);
  for (int t = 0; t < spec.num_steps; ++t)
    holdings.col(t) =
        pools[static_cast<std::size_t>(t)][static_cast<std::size_t>(chain[static_cast<std::size_t>(t)])];
  const HoldingsTrajectory units{holdings, false};
  const BitTrajectory bits = encode(units, spec);
  const double energy =
      evaluate_hamiltonian(normalize(units, spec), spec).total;

  VariableLayout layout;
  layout.num_assets = spec.num_assets;
  layout.num_steps = spec.num_steps;
  layout.bits_per_holding = spec.bits_per_holding;

  SolutionSet out;
  out.solver = "recombine";
  out.layout = layout;
  out.entries.push_back({bits.bits, energy});
  out.iterations = static_cast<long>(pools.size());
  out.wall_time_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
          .count();
  return out;
}

}  // namespace portopt
