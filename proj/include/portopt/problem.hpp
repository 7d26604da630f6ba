#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "portopt/common.hpp"
#include "portopt/trajectory.hpp"

namespace portopt {

/// Market impact extension: diagonal impact coefficients per asset and step,
/// entering the objective as -dw_t' L_t w_t.
struct MarketImpact {
  Eigen::MatrixXd coefficients;  // assets x steps
};

/// Exact linear transaction costs via one sign ancilla y_{n,t} per holding:
/// cost nu * dw * (1 - 2y) plus the sign penalty rho_prime * dw * y.
/// Rates may be given per (asset, step), per step, or as one scalar.
struct ExactLinearCost {
  Eigen::MatrixXd rates;  // assets x steps (nu)
  double rho_prime = 0.0; // 0 -> default 4 * max rate at build time

  static ExactLinearCost uniform(double rate, int num_assets, int num_steps,
                                 double rho_prime = 0.0) {
    return {Eigen::MatrixXd::Constant(num_assets, num_steps, rate), rho_prime};
  }
  static ExactLinearCost per_step(const Eigen::VectorXd& rates, int num_assets,
                                  double rho_prime = 0.0) {
    Eigen::MatrixXd m(num_assets, rates.size());
    for (Eigen::Index t = 0; t < rates.size(); ++t)
      m.col(t).setConstant(rates(t));
    return {std::move(m), rho_prime};
  }
};

/// 10-5-40 rule extension. Requires 2^{N_q}-1 <= 0.1 K so the per-asset cap
/// itself enforces the 10% leg; the 40% leg and the 5% indicator become
/// penalty terms of a HUBO.
struct Rule105040 {
  int slack_bits = 4;            // S: resolution of the squared slacks
  double rho_prime = 0.0;        // UpToForty multiplier; 0 -> spec.rho
  double rho_double_prime = 0.0; // WhoIsFive multiplier; 0 -> spec.rho
};

/// Complete instance definition: dimensions, hyperparameters, forecast
/// returns and covariances, plus optional constraint extensions.
struct ProblemSpec {
  int num_assets = 1;       // N
  int num_steps = 1;        // N_t
  int bits_per_holding = 1; // N_q
  long total_investment = 1; // K, integer units
  double gamma = 1.0;       // risk aversion
  double lambda = 0.0;      // parabolic transaction-cost coefficient
  double rho = 0.0;         // budget penalty multiplier
  Eigen::MatrixXd mu;                 // assets x steps forecast log returns
  std::vector<Eigen::MatrixXd> sigma; // per-step covariance, assets x assets

  /// Normalized holdings before the first step; zero means the first
  /// rebalance pays full acquisition cost.
  Eigen::VectorXd initial_holdings;

  /// Optional per-asset diagonal replacing the scalar lambda.
  std::optional<Eigen::VectorXd> lambda_per_asset;

  std::optional<MarketImpact> market_impact;
  std::optional<ExactLinearCost> exact_cost;
  std::optional<Rule105040> rule_10_5_40;

  long max_holding() const { return (1L << bits_per_holding) - 1; }

  int holding_bits() const {
    return num_assets * num_steps * bits_per_holding;
  }

  void validate() const {
    if (num_assets < 1 || num_steps < 1 || bits_per_holding < 1 ||
        total_investment < 1)
      throw ConfigError("N, N_t, N_q and K must all be >= 1");
    if (gamma < 0.0 || lambda < 0.0 || rho < 0.0)
      throw ConfigError("gamma, lambda and rho must be >= 0");
    if (mu.rows() != num_assets || mu.cols() != num_steps)
      throw ConfigError("mu must be N x N_t");
    if (static_cast<int>(sigma.size()) != num_steps)
      throw ConfigError("sigma must hold one matrix per step");
    for (const auto& s : sigma) {
      if (s.rows() != num_assets || s.cols() != num_assets)
        throw ConfigError("sigma matrices must be N x N");
      if ((s - s.transpose()).cwiseAbs().maxCoeff() > 1e-9)
        throw ConfigError("sigma matrices must be symmetric");
    }
    if (initial_holdings.size() != 0 && initial_holdings.size() != num_assets)
      throw ConfigError("initial holdings must have one entry per asset");
    if (lambda_per_asset && lambda_per_asset->size() != num_assets)
      throw ConfigError("per-asset lambda must have one entry per asset");
    if (market_impact && (market_impact->coefficients.rows() != num_assets ||
                          market_impact->coefficients.cols() != num_steps))
      throw ConfigError("market impact coefficients must be N x N_t");
    if (exact_cost) {
      if (exact_cost->rates.rows() != num_assets ||
          exact_cost->rates.cols() != num_steps)
        throw ConfigError("exact cost rates must be N x N_t");
      if (lambda > 0.0)
        throw ConfigError(
            "parabolic and exact linear transaction costs are mutually "
            "exclusive");
    }
    if (rule_10_5_40) {
      if (rule_10_5_40->slack_bits < 1)
        throw ConfigError("10-5-40 slack bit width must be >= 1");
      if (static_cast<double>(max_holding()) >
          0.1 * static_cast<double>(total_investment))
        throw ConfigError(
            "10-5-40 rule requires the per-asset cap 2^N_q - 1 <= 0.1 K "
            "(10% cap violated)");
    }
  }

  Eigen::VectorXd previous_holdings() const {
    return initial_holdings.size() == num_assets
               ? initial_holdings
               : Eigen::VectorXd::Zero(num_assets);
  }

  Eigen::VectorXd lambda_diagonal() const {
    return lambda_per_asset ? *lambda_per_asset
                            : Eigen::VectorXd::Constant(num_assets, lambda);
  }
};

/// Penalty multiplier large enough that violating the budget can never beat
/// the best attainable objective improvement.
inline double default_rho(const ProblemSpec& spec) {
  double mu_max = 0.0, sigma_max = 0.0;
  for (int t = 0; t < spec.num_steps; ++t) {
    mu_max = std::max(mu_max, spec.mu.col(t).cwiseAbs().maxCoeff());
    sigma_max = std::max(
        sigma_max, spec.sigma[static_cast<std::size_t>(t)].cwiseAbs().maxCoeff());
  }
  return 2.0 * (mu_max + spec.gamma * sigma_max *
                             static_cast<double>(spec.max_holding()));
}

/// w_{n,t} = sum_q 2^q x_{n,t,q}, in integer units.
inline HoldingsTrajectory decode(const BitTrajectory& bits,
                                 const ProblemSpec& spec) {
  if (bits.num_assets != spec.num_assets || bits.num_steps != spec.num_steps ||
      bits.bits_per_holding != spec.bits_per_holding)
    throw ConfigError("bit trajectory dimensions do not match spec");
  Eigen::MatrixXd h(spec.num_assets, spec.num_steps);
  for (int t = 0; t < spec.num_steps; ++t)
    for (int n = 0; n < spec.num_assets; ++n) {
      long v = 0;
      for (int q = 0; q < spec.bits_per_holding; ++q)
        if (bits.at(n, t, q)) v += 1L << q;
      h(n, t) = static_cast<double>(v);
    }
  return {std::move(h), false};
}

/// Inverse of decode for integer-unit trajectories within the encoding range.
inline BitTrajectory encode(const HoldingsTrajectory& traj,
                            const ProblemSpec& spec) {
  if (traj.normalized)
    throw ConfigError("encode expects holdings in integer units");
  BitTrajectory bits(spec.num_assets, spec.num_steps, spec.bits_per_holding);
  for (int t = 0; t < spec.num_steps; ++t)
    for (int n = 0; n < spec.num_assets; ++n) {
      const double v = traj.holdings(n, t);
      const long u = std::lround(v);
      if (std::abs(v - static_cast<double>(u)) > 1e-9 || u < 0 ||
          u > spec.max_holding())
        throw ConfigError("holding " + std::to_string(v) +
                          " outside the encoding range");
      for (int q = 0; q < spec.bits_per_holding; ++q)
        bits.set(n, t, q, static_cast<std::uint8_t>((u >> q) & 1));
    }
  return bits;
}

inline HoldingsTrajectory normalize(const HoldingsTrajectory& traj,
                                    const ProblemSpec& spec) {
  if (traj.normalized) return traj;
  return {traj.holdings / static_cast<double>(spec.total_investment), true};
}

/// Energy split by objective term; `total` is their exact sum.
struct HamiltonianBreakdown {
  double returns_term = 0.0;   // - sum_t mu' w
  double risk_term = 0.0;      // (gamma/2) sum_t w' Sigma w
  double cost_term = 0.0;      // parabolic or exact transaction costs
  double impact_term = 0.0;    // - sum_t dw' L w (market impact)
  double penalty_term = 0.0;   // rho sum_t (u'w - 1)^2
  double total = 0.0;
};

/// Cost function over a normalized trajectory:
///   H = sum_t [ -mu_t' w_t + (gamma/2) w_t' Sigma_t w_t + cost_t
///               + rho (u' w_t - 1)^2  (- dw' L w when impact is enabled) ]
/// with dw_t = w_t - w_{t-1} and w_{-1} the configured initial holdings.
/// Under the exact-linear extension the cost term is sum nu |dw| (sign
/// ancillas at their optimal setting).
inline HamiltonianBreakdown evaluate_hamiltonian(const HoldingsTrajectory& traj,
                                                 const ProblemSpec& spec) {
  if (!traj.normalized)
    throw ConfigError("evaluate_hamiltonian expects a normalized trajectory");
  if (traj.num_assets() != spec.num_assets ||
      traj.num_steps() != spec.num_steps)
    throw ConfigError("trajectory dimensions do not match spec");

  HamiltonianBreakdown out;
  const Eigen::VectorXd lam = spec.lambda_diagonal();
  Eigen::VectorXd prev = spec.previous_holdings();
  for (int t = 0; t < spec.num_steps; ++t) {
    const Eigen::VectorXd w = traj.holdings.col(t);
    const Eigen::VectorXd dw = w - prev;
    out.returns_term -= spec.mu.col(t).dot(w);
    out.risk_term += 0.5 * spec.gamma *
                     w.dot(spec.sigma[static_cast<std::size_t>(t)] * w);
    if (spec.exact_cost) {
      out.cost_term +=
          spec.exact_cost->rates.col(t).dot(dw.cwiseAbs());
    } else {
      out.cost_term += dw.dot(lam.asDiagonal() * dw);
    }
    if (spec.market_impact)
      out.impact_term -=
          dw.dot(spec.market_impact->coefficients.col(t).asDiagonal() * w);
    const double budget = w.sum() - 1.0;
    out.penalty_term += spec.rho * budget * budget;
    prev = w;
  }
  out.total = out.returns_term + out.risk_term + out.cost_term +
              out.impact_term + out.penalty_term;
  return out;
}

struct ContinuousSolution {
  HoldingsTrajectory trajectory;  // normalized, real-valued
  double max_budget_residual = 0.0;
};

/// Closed-form optimum of the cost function without transaction costs:
///   w_t = ((gamma/2) Sigma_t + rho u u')^{-1} ((1/2) mu_t + rho u),
/// independently per step. Reports max_t |u' w_t - 1| so callers can check
/// a posteriori that the budget holds to the desired accuracy.
inline ContinuousSolution continuous_optimum(const ProblemSpec& spec) {
  if (spec.lambda != 0.0 || spec.lambda_per_asset)
    throw ConfigError(
        "continuous optimum requires lambda = 0 (no transaction costs)");
  const int n = spec.num_assets;
  const Eigen::VectorXd u = Eigen::VectorXd::Ones(n);
  Eigen::MatrixXd w(n, spec.num_steps);
  double residual = 0.0;
  for (int t = 0; t < spec.num_steps; ++t) {
    const Eigen::MatrixXd a =
        0.5 * spec.gamma * spec.sigma[static_cast<std::size_t>(t)] +
        spec.rho * u * u.transpose();
    const Eigen::VectorXd b = 0.5 * spec.mu.col(t) + spec.rho * u;
    Eigen::FullPivLU<Eigen::MatrixXd> lu(a);
    if (!lu.isInvertible())
      throw ConfigError(
          "singular system at step " + std::to_string(t) +
          "; increase rho (or gamma) to make the problem well-posed");
    w.col(t) = lu.solve(b);
    residual = std::max(residual, std::abs(u.dot(w.col(t)) - 1.0));
  }
  return {{std::move(w), true}, residual};
}

}  // namespace portopt
