#pragma once

#include <cmath>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "portopt/common.hpp"
#include "portopt/problem.hpp"
#include "portopt/solvers/solution_set.hpp"

namespace portopt {

/// Financial figures of merit of one trajectory. `risk` is sum_t w' Sigma w
/// (the Sharpe denominator squared, no gamma/2); the Hamiltonian convention
/// with the gamma/2 prefactor is reported alongside as `risk_hamiltonian`.
struct TrajectoryReport {
  double energy = 0.0;
  double returns = 0.0;
  double risk = 0.0;
  double risk_hamiltonian = 0.0;
  double transaction_cost = 0.0;
  double profit = 0.0;
  double sharpe = 0.0;
  double budget_residual = 0.0;  // max_t |u' w_t - 1|
  bool sharpe_degenerate = false;
};

/// Scores a normalized trajectory:
///   returns = sum_t mu' w,  risk = sum_t w' Sigma w,
///   cost = parabolic or exact transaction costs,
///   profit = returns - cost,  sharpe = returns / sqrt(risk).
/// Zero risk is flagged instead of producing an infinite ratio.
inline TrajectoryReport score(const HoldingsTrajectory& traj,
                              const ProblemSpec& spec) {
  if (!traj.normalized)
    throw ConfigError("score expects a normalized trajectory");
  if (traj.num_assets() != spec.num_assets ||
      traj.num_steps() != spec.num_steps)
    throw ConfigError("trajectory dimensions do not match spec");

  TrajectoryReport out;
  const Eigen::VectorXd lam = spec.lambda_diagonal();
  Eigen::VectorXd prev = spec.previous_holdings();
  for (int t = 0; t < spec.num_steps; ++t) {
    const Eigen::VectorXd w = traj.holdings.col(t);
    const Eigen::VectorXd dw = w - prev;
    out.returns += spec.mu.col(t).dot(w);
    out.risk += w.dot(spec.sigma[static_cast<std::size_t>(t)] * w);
    if (spec.exact_cost)
      out.transaction_cost += spec.exact_cost->rates.col(t).dot(dw.cwiseAbs());
    else
      out.transaction_cost += dw.dot(lam.asDiagonal() * dw);
    out.budget_residual = std::max(out.budget_residual, std::abs(w.sum() - 1.0));
    prev = w;
  }
  out.risk_hamiltonian = 0.5 * spec.gamma * out.risk;
  out.profit = out.returns - out.transaction_cost;
  if (out.risk > 0.0) {
    out.sharpe = out.returns / std::sqrt(out.risk);
  } else {
    out.sharpe = 0.0;
    out.sharpe_degenerate = true;
  }
  out.energy = evaluate_hamiltonian(traj, spec).total;
  return out;
}

/// One row per solution, in the solution set's energy order.
inline std::vector<TrajectoryReport> landscape_table(const SolutionSet& sols,
                                                     const ProblemSpec& spec) {
  std::vector<TrajectoryReport> out;
  for (const auto& e : sols.entries) {
    const HoldingsTrajectory units = decode(sols.holding_bits(e), spec);
    out.push_back(score(normalize(units, spec), spec));
  }
  return out;
}

/// CSV table with header `T,E,C,R,TC,P,SR`. Returns, costs and profit are
/// expressed in percent.
inline void landscape_csv(const std::vector<TrajectoryReport>& rows,
                          std::ostream& os) {
  os << "T,E,C,R,TC,P,SR\n";
  os << std::setprecision(12);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& r = rows[i];
    os << (i + 1) << "," << r.energy << "," << r.risk << ","
       << 100.0 * r.returns << "," << 100.0 * r.transaction_cost << ","
       << 100.0 * r.profit << "," << r.sharpe << "\n";
  }
}

/// Fixed-width plain-text rendering of the same table.
inline void landscape_text(const std::vector<TrajectoryReport>& rows,
                           std::ostream& os) {
  os << std::setw(4) << "T" << std::setw(12) << "E" << std::setw(12) << "C"
     << std::setw(12) << "R" << std::setw(12) << "TC" << std::setw(12) << "P"
     << std::setw(12) << "SR" << "\n";
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& r = rows[i];
    os << std::setw(4) << (i + 1) << std::fixed << std::setprecision(4)
       << std::setw(12) << r.energy << std::setw(12) << r.risk << std::setw(12)
       << 100.0 * r.returns << std::setw(12) << 100.0 * r.transaction_cost
       << std::setw(12) << 100.0 * r.profit << std::setw(12) << r.sharpe
       << "\n";
    os.unsetf(std::ios_base::fixed);
    os << std::setprecision(6);
  }
}

}  // namespace portopt
