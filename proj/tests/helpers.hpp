#pragma once

#include <Eigen/Dense>
#include <vector>

#include "portopt/common.hpp"
#include "portopt/problem.hpp"
#include "portopt/trajectory.hpp"

namespace test_helpers {

/// Random positive semi-definite matrix A A' with O(1) entries.
inline Eigen::MatrixXd random_psd(int n, portopt::Rng& rng) {
  Eigen::MatrixXd a(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) a(i, j) = rng.gaussian();
  Eigen::MatrixXd s = a * a.transpose() / static_cast<double>(n);
  return ((s + s.transpose()) / 2.0).eval();
}

struct SpecOptions {
  bool market_impact = false;
  bool exact_cost = false;
  bool random_initial_holdings = false;
  bool per_asset_lambda = false;
  double lambda_override = -1.0;  // < 0 keeps the random draw
};

/// Random instance with hyperparameters in (0, 5] and PSD covariances.
inline portopt::ProblemSpec random_spec(int n, int n_t, int n_q, long k,
                                        portopt::Rng& rng,
                                        const SpecOptions& options = {}) {
  portopt::ProblemSpec spec;
  spec.num_assets = n;
  spec.num_steps = n_t;
  spec.bits_per_holding = n_q;
  spec.total_investment = k;
  spec.gamma = rng.uniform(0.01, 5.0);
  spec.lambda = options.exact_cost ? 0.0 : rng.uniform(0.01, 5.0);
  if (options.lambda_override >= 0.0 && !options.exact_cost)
    spec.lambda = options.lambda_override;
  spec.rho = rng.uniform(0.01, 5.0);
  spec.mu.resize(n, n_t);
  for (int i = 0; i < n; ++i)
    for (int t = 0; t < n_t; ++t) spec.mu(i, t) = 0.3 * rng.gaussian();
  for (int t = 0; t < n_t; ++t) spec.sigma.push_back(random_psd(n, rng));
  if (options.random_initial_holdings) {
    spec.initial_holdings.resize(n);
    for (int i = 0; i < n; ++i)
      spec.initial_holdings(i) = rng.uniform(0.0, 0.5);
  }
  if (options.per_asset_lambda) {
    Eigen::VectorXd lam(n);
    for (int i = 0; i < n; ++i) lam(i) = rng.uniform(0.0, 3.0);
    spec.lambda_per_asset = lam;
  }
  if (options.market_impact) {
    Eigen::MatrixXd g(n, n_t);
    for (int i = 0; i < n; ++i)
      for (int t = 0; t < n_t; ++t) g(i, t) = rng.uniform(0.0, 2.0);
    spec.market_impact = portopt::MarketImpact{g};
  }
  if (options.exact_cost) {
    Eigen::MatrixXd nu(n, n_t);
    for (int i = 0; i < n; ++i)
      for (int t = 0; t < n_t; ++t) nu(i, t) = rng.uniform(0.001, 0.5);
    spec.exact_cost = portopt::ExactLinearCost{nu, 0.0};
  }
  return spec;
}

inline portopt::BitTrajectory random_bits(const portopt::ProblemSpec& spec,
                                          portopt::Rng& rng) {
  portopt::BitTrajectory bits(spec.num_assets, spec.num_steps,
                              spec.bits_per_holding);
  for (auto& b : bits.bits) b = rng.coin() ? 1 : 0;
  return bits;
}

/// All 2^n assignments of n bits, for small n.
inline std::vector<std::vector<std::uint8_t>> all_assignments(int n) {
  std::vector<std::vector<std::uint8_t>> out;
  const std::uint64_t total = 1ULL << n;
  for (std::uint64_t m = 0; m < total; ++m) {
    std::vector<std::uint8_t> bits(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) bits[static_cast<std::size_t>(i)] = (m >> i) & 1;
    out.push_back(std::move(bits));
  }
  return out;
}

}  // namespace test_helpers
