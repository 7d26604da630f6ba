#include <catch2/catch_amalgamated.hpp>
#include <cmath>

#include "helpers.hpp"
#include "portopt/problem.hpp"

using namespace portopt;
using test_helpers::random_spec;

namespace {

ProblemSpec tiny_spec(int n, int n_t, int n_q, long k) {
  ProblemSpec spec;
  spec.num_assets = n;
  spec.num_steps = n_t;
  spec.bits_per_holding = n_q;
  spec.total_investment = k;
  spec.mu = Eigen::MatrixXd::Zero(n, n_t);
  for (int t = 0; t < n_t; ++t)
    spec.sigma.push_back(Eigen::MatrixXd::Zero(n, n));
  return spec;
}

}  // namespace

TEST_CASE("decode implements the positional binary encoding") {
  SECTION("all-zero bits decode to zero holdings") {
    const auto spec = tiny_spec(2, 3, 2, 5);
    BitTrajectory bits(2, 3, 2);
    const auto h = decode(bits, spec);
    CHECK(h.holdings.cwiseAbs().maxCoeff() == 0.0);
    CHECK_FALSE(h.normalized);
  }
  SECTION("three set bits decode to the XXL per-asset cap of 7") {
    const auto spec = tiny_spec(1, 1, 3, 15);
    BitTrajectory bits(1, 1, 3);
    bits.set(0, 0, 0, 1);
    bits.set(0, 0, 1, 1);
    bits.set(0, 0, 2, 1);
    CHECK(decode(bits, spec).holdings(0, 0) == 7.0);
    CHECK(spec.max_holding() == 7);
  }
  SECTION("q = 0 is the least significant bit") {
    const auto spec = tiny_spec(1, 1, 2, 3);
    BitTrajectory bits(1, 1, 2);
    bits.set(0, 0, 0, 1);
    CHECK(decode(bits, spec).holdings(0, 0) == 1.0);
  }
}

TEST_CASE("decode is injective: every holding has exactly one preimage") {
  const auto spec = tiny_spec(1, 1, 3, 10);
  std::vector<int> hits(8, 0);
  for (const auto& assignment : test_helpers::all_assignments(3)) {
    BitTrajectory bits(1, 1, 3);
    bits.bits = assignment;
    const long v = std::lround(decode(bits, spec).holdings(0, 0));
    REQUIRE(v >= 0);
    REQUIRE(v <= 7);
    ++hits[static_cast<std::size_t>(v)];
  }
  for (int h : hits) CHECK(h == 1);
}

TEST_CASE("bit strings serialize in (n-major, t, q-minor) order") {
  BitTrajectory bits(2, 2, 1);  // storage is step-major internally
  bits.set(1, 0, 0, 1);
  CHECK(bits.bit_string_nmajor() == "0010");
  bits.set(0, 1, 0, 1);
  CHECK(bits.bit_string_nmajor() == "0110");
}

TEST_CASE("encode inverts decode") {
  Rng rng(31);
  const auto spec = tiny_spec(3, 4, 2, 6);
  for (int rep = 0; rep < 20; ++rep) {
    const auto bits = test_helpers::random_bits(spec, rng);
    const auto round = encode(decode(bits, spec), spec);
    CHECK(round.bits == bits.bits);
  }
}

TEST_CASE("evaluate_hamiltonian worked examples") {
  SECTION("zero trajectory with zero data leaves only the budget penalty") {
    auto spec = tiny_spec(2, 3, 1, 2);
    spec.rho = 1.7;
    const HoldingsTrajectory traj{Eigen::MatrixXd::Zero(2, 3), true};
    const auto h = evaluate_hamiltonian(traj, spec);
    CHECK_THAT(h.total, Catch::Matchers::WithinAbs(1.7 * 3, 1e-12));
    CHECK(h.returns_term == 0.0);
    CHECK(h.risk_term == 0.0);
    CHECK(h.cost_term == 0.0);
  }
  SECTION("single-asset single-step closed form") {
    auto spec = tiny_spec(1, 1, 1, 1);
    spec.mu(0, 0) = 0.1;
    spec.sigma[0](0, 0) = 0.04;
    spec.gamma = 1.0;
    spec.lambda = 0.0;
    spec.rho = 3.9;  // budget satisfied, multiplier irrelevant
    const HoldingsTrajectory traj{Eigen::MatrixXd::Constant(1, 1, 1.0), true};
    const auto h = evaluate_hamiltonian(traj, spec);
    CHECK_THAT(h.total, Catch::Matchers::WithinAbs(-0.08, 1e-12));
    CHECK_THAT(h.returns_term, Catch::Matchers::WithinAbs(-0.1, 1e-15));
    CHECK_THAT(h.risk_term, Catch::Matchers::WithinAbs(0.02, 1e-15));
  }
  SECTION("the breakdown sums to the total") {
    Rng rng(13);
    for (int rep = 0; rep < 25; ++rep) {
      const auto spec = random_spec(3, 4, 2, 5, rng,
                                    {.market_impact = rep % 2 == 0,
                                     .random_initial_holdings = true});
      const auto bits = test_helpers::random_bits(spec, rng);
      const auto traj = normalize(decode(bits, spec), spec);
      const auto h = evaluate_hamiltonian(traj, spec);
      const double sum = h.returns_term + h.risk_term + h.cost_term +
                         h.impact_term + h.penalty_term;
      CHECK_THAT(h.total, Catch::Matchers::WithinAbs(sum, 1e-12));
    }
  }
}

TEST_CASE("continuous_optimum closed form") {
  SECTION("scalar worked example") {
    auto spec = tiny_spec(1, 1, 1, 1);
    spec.mu(0, 0) = 0.2;
    spec.gamma = 1.0;
    spec.rho = 10.0;
    const auto sol = continuous_optimum(spec);
    CHECK_THAT(sol.trajectory.holdings(0, 0),
               Catch::Matchers::WithinAbs(1.01, 1e-12));
    CHECK_THAT(sol.max_budget_residual,
               Catch::Matchers::WithinAbs(0.01, 1e-12));
  }
  SECTION("isotropic covariance and uniform returns give uniform weights") {
    auto spec = tiny_spec(4, 2, 1, 1);
    for (auto& s : spec.sigma)
      s = 0.3 * Eigen::MatrixXd::Identity(4, 4);
    spec.mu = Eigen::MatrixXd::Constant(4, 2, 0.05);
    spec.gamma = 2.0;
    spec.rho = 50.0;
    const auto sol = continuous_optimum(spec);
    for (int t = 0; t < 2; ++t)
      for (int n = 1; n < 4; ++n)
        CHECK_THAT(sol.trajectory.holdings(n, t),
                   Catch::Matchers::WithinRel(sol.trajectory.holdings(0, t),
                                              1e-12));
  }
  SECTION("large rho meets the budget and the stationarity condition") {
    Rng rng(77);
    for (int rep = 0; rep < 20; ++rep) {
      auto spec = random_spec(4, 3, 1, 1, rng, {.lambda_override = 0.0});
      double smax = 0.0;
      for (const auto& s : spec.sigma)
        smax = std::max(smax, s.cwiseAbs().maxCoeff());
      spec.rho = 1e4 * spec.gamma * std::max(smax, 1e-6);
      const auto sol = continuous_optimum(spec);
      CHECK(sol.max_budget_residual <= 1e-3);
      for (int t = 0; t < spec.num_steps; ++t) {
        const Eigen::VectorXd w = sol.trajectory.holdings.col(t);
        const Eigen::VectorXd u = Eigen::VectorXd::Ones(4);
        // gradient of h_t, written out independently of the solver path
        const Eigen::VectorXd grad =
            -spec.mu.col(t) + spec.gamma * spec.sigma[static_cast<std::size_t>(t)] * w +
            2.0 * spec.rho * (u.dot(w) - 1.0) * u;
        CHECK(grad.norm() <= 1e-8 * (1.0 + spec.mu.col(t).norm()));
      }
    }
  }
  SECTION("raising rho never worsens the budget residual") {
    Rng rng(101);
    for (int rep = 0; rep < 5; ++rep) {
      auto spec = random_spec(3, 2, 1, 1, rng, {.lambda_override = 0.0});
      double last = 1e300;
      for (double rho : {0.5, 2.0, 8.0, 32.0, 128.0, 512.0}) {
        spec.rho = rho;
        const auto sol = continuous_optimum(spec);
        CHECK(sol.max_budget_residual <= last + 1e-12);
        last = sol.max_budget_residual;
      }
    }
  }
  SECTION("singular systems are rejected with guidance") {
    auto spec = tiny_spec(2, 1, 1, 1);
    spec.gamma = 0.0;  // rank-1 u u' alone is singular for N = 2
    spec.rho = 1.0;
    CHECK_THROWS_WITH(continuous_optimum(spec),
                      Catch::Matchers::ContainsSubstring("rho"));
  }
  SECTION("transaction costs are out of scope for the closed form") {
    auto spec = tiny_spec(2, 1, 1, 1);
    spec.lambda = 0.5;
    CHECK_THROWS_AS(continuous_optimum(spec), ConfigError);
  }
}

TEST_CASE("default_rho dominates the instance scales") {
  Rng rng(55);
  const auto spec = random_spec(3, 2, 2, 4, rng);
  const double rho = default_rho(spec);
  double mu_max = spec.mu.cwiseAbs().maxCoeff();
  CHECK(rho >= 2.0 * mu_max);
  CHECK(rho > 0.0);
}

TEST_CASE("spec validation rejects inconsistent instances") {
  auto spec = tiny_spec(2, 2, 1, 3);
  SECTION("negative hyperparameters") {
    spec.gamma = -0.1;
    CHECK_THROWS_AS(spec.validate(), ConfigError);
  }
  SECTION("wrong mu shape") {
    spec.mu = Eigen::MatrixXd::Zero(3, 2);
    CHECK_THROWS_AS(spec.validate(), ConfigError);
  }
  SECTION("asymmetric sigma") {
    spec.sigma[0] = Eigen::MatrixXd::Zero(2, 2);
    spec.sigma[0](0, 1) = 1.0;
    CHECK_THROWS_AS(spec.validate(), ConfigError);
  }
  SECTION("parabolic and exact costs are mutually exclusive") {
    spec.lambda = 1.0;
    spec.exact_cost =
        ExactLinearCost{Eigen::MatrixXd::Constant(2, 2, 0.01), 0.0};
    CHECK_THROWS_AS(spec.validate(), ConfigError);
  }
}
