#include <catch2/catch_amalgamated.hpp>
#include <cmath>
#include <sstream>

#include "helpers.hpp"
#include "portopt/metrics.hpp"
#include "portopt/solvers/exhaustive.hpp"

using namespace portopt;
using test_helpers::random_spec;

TEST_CASE("score on worked fixtures") {
  SECTION("the zero trajectory is all zeros with a degenerate Sharpe") {
    Rng rng(1);
    const auto spec = random_spec(3, 2, 1, 2, rng);
    const TrajectoryReport r =
        score({Eigen::MatrixXd::Zero(3, 2), true}, spec);
    CHECK(r.returns == 0.0);
    CHECK(r.risk == 0.0);
    CHECK(r.transaction_cost == 0.0);
    CHECK(r.profit == 0.0);
    CHECK(r.sharpe == 0.0);
    CHECK(r.sharpe_degenerate);
    CHECK(r.budget_residual == 1.0);
  }
  SECTION("single asset, single step: sharpe = 0.1 / 0.2") {
    ProblemSpec spec;
    spec.num_assets = 1;
    spec.num_steps = 1;
    spec.bits_per_holding = 1;
    spec.total_investment = 1;
    spec.lambda = 0.0;
    spec.mu = Eigen::MatrixXd::Constant(1, 1, 0.1);
    spec.sigma = {Eigen::MatrixXd::Constant(1, 1, 0.04)};
    const TrajectoryReport r =
        score({Eigen::MatrixXd::Constant(1, 1, 1.0), true}, spec);
    CHECK_THAT(r.returns, Catch::Matchers::WithinAbs(0.1, 1e-15));
    CHECK_THAT(r.sharpe, Catch::Matchers::WithinAbs(0.5, 1e-12));
    CHECK_FALSE(r.sharpe_degenerate);
    CHECK(r.budget_residual == 0.0);
  }
}

TEST_CASE("profit and sharpe identities hold against independent recompute") {
  Rng rng(22);
  for (int rep = 0; rep < 50; ++rep) {
    test_helpers::SpecOptions opts;
    opts.exact_cost = rep % 4 == 3;
    const auto spec = random_spec(3, 3, 2, 4, rng, opts);
    const auto bits = test_helpers::random_bits(spec, rng);
    const auto traj = normalize(decode(bits, spec), spec);
    const auto r = score(traj, spec);

    CHECK_THAT(r.profit, Catch::Matchers::WithinAbs(
                             r.returns - r.transaction_cost, 1e-12));
    if (r.risk > 0.0)
      CHECK_THAT(r.sharpe * std::sqrt(r.risk),
                 Catch::Matchers::WithinAbs(r.returns,
                                            1e-9 * (1.0 + std::abs(r.returns))));
    CHECK(r.risk_hamiltonian ==
          Catch::Approx(0.5 * spec.gamma * r.risk).epsilon(1e-12));

    // independent scalar-loop recompute of returns and risk
    double returns = 0.0, risk = 0.0;
    for (int t = 0; t < spec.num_steps; ++t)
      for (int n = 0; n < spec.num_assets; ++n) {
        returns += spec.mu(n, t) * traj.holdings(n, t);
        for (int m = 0; m < spec.num_assets; ++m)
          risk += traj.holdings(n, t) *
                  spec.sigma[static_cast<std::size_t>(t)](n, m) *
                  traj.holdings(m, t);
      }
    CHECK_THAT(r.returns, Catch::Matchers::WithinAbs(
                              returns, 1e-12 * (1.0 + std::abs(returns))));
    CHECK_THAT(r.risk,
               Catch::Matchers::WithinAbs(risk, 1e-12 * (1.0 + std::abs(risk))));
    // sharpe sign equals returns sign when risk > 0
    if (r.risk > 0.0)
      CHECK(((r.sharpe > 0.0) == (r.returns > 0.0) ||
             (r.sharpe == 0.0 && r.returns == 0.0)));
  }
}

TEST_CASE("score ignores an appended zero asset") {
  Rng rng(33);
  const auto spec = random_spec(2, 2, 1, 2, rng);
  Eigen::MatrixXd h(2, 2);
  h << 0.5, 0.0, 0.5, 1.0;
  const auto base = score({h, true}, spec);

  ProblemSpec padded = spec;
  padded.num_assets = 3;
  padded.mu.conservativeResize(3, Eigen::NoChange);
  padded.mu.row(2).setZero();
  for (auto& s : padded.sigma) {
    s.conservativeResize(3, 3);
    s.row(2).setZero();
    s.col(2).setZero();
  }
  Eigen::MatrixXd hp(3, 2);
  hp << 0.5, 0.0, 0.5, 1.0, 0.0, 0.0;
  const auto ext = score({hp, true}, padded);
  CHECK_THAT(ext.returns, Catch::Matchers::WithinAbs(base.returns, 1e-12));
  CHECK_THAT(ext.risk, Catch::Matchers::WithinAbs(base.risk, 1e-12));
  CHECK_THAT(ext.profit, Catch::Matchers::WithinAbs(base.profit, 1e-12));
  CHECK_THAT(ext.sharpe, Catch::Matchers::WithinAbs(base.sharpe, 1e-12));
}

TEST_CASE("landscape tables") {
  SECTION("an empty solution set gives an empty table") {
    Rng rng(44);
    const auto spec = random_spec(2, 2, 1, 2, rng);
    SolutionSet sols;
    VariableLayout layout;
    layout.num_assets = 2;
    layout.num_steps = 2;
    layout.bits_per_holding = 1;
    sols.layout = layout;
    CHECK(landscape_table(sols, spec).empty());
  }
  SECTION("rows come out in ascending energy order") {
    Rng rng(45);
    const auto spec = random_spec(2, 2, 1, 2, rng);
    const auto sols = solve_exhaustive(build_qubo(spec), {.top_k = 5});
    const auto rows = landscape_table(sols, spec);
    REQUIRE(rows.size() == 5);
    for (std::size_t i = 1; i < rows.size(); ++i)
      CHECK(rows[i - 1].energy <= rows[i].energy + 1e-12);
  }
  SECTION("the minimal-energy row need not maximize profit") {
    // w = 1: energy -mu + lambda = 0.1, profit mu - lambda = -0.1
    // w = 0: energy rho = 2, profit 0 -> profit inversion preserved
    ProblemSpec spec;
    spec.num_assets = 1;
    spec.num_steps = 1;
    spec.bits_per_holding = 1;
    spec.total_investment = 1;
    spec.gamma = 1.0;
    spec.lambda = 0.4;
    spec.rho = 2.0;
    spec.mu = Eigen::MatrixXd::Constant(1, 1, 0.3);
    spec.sigma = {Eigen::MatrixXd::Zero(1, 1)};
    const auto sols = solve_exhaustive(build_qubo(spec), {.top_k = 2});
    REQUIRE(sols.entries.size() == 2);
    const auto rows = landscape_table(sols, spec);
    REQUIRE(rows.size() == 2);
    CHECK(rows[0].energy < rows[1].energy);
    CHECK(rows[0].profit < rows[1].profit);  // inversion, rows not reordered
  }
  SECTION("CSV export carries the exact header") {
    Rng rng(46);
    const auto spec = random_spec(2, 1, 1, 2, rng);
    const auto sols = solve_exhaustive(build_qubo(spec), {.top_k = 3});
    std::ostringstream os;
    landscape_csv(landscape_table(sols, spec), os);
    CHECK(os.str().substr(0, 17) == "T,E,C,R,TC,P,SR\n1");
  }
}
