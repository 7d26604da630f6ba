#include <catch2/catch_amalgamated.hpp>
#include <cmath>

#include "helpers.hpp"
#include "portopt/hubo.hpp"

using namespace portopt;

namespace {

/// K = 40, N_q = 2 keeps 2^{N_q}-1 = 3 <= 0.1 K = 4.
ProblemSpec rule_spec(int n, int n_t) {
  ProblemSpec spec;
  spec.num_assets = n;
  spec.num_steps = n_t;
  spec.bits_per_holding = 2;
  spec.total_investment = 40;
  spec.gamma = 1.0;
  spec.lambda = 1.0;
  spec.rho = 2.0;
  spec.mu = Eigen::MatrixXd::Zero(n, n_t);
  for (int t = 0; t < n_t; ++t)
    spec.sigma.push_back(Eigen::MatrixXd::Zero(n, n));
  spec.rule_10_5_40 = Rule105040{2, 3.0, 5.0};
  return spec;
}

/// Independent oracle: evaluate the base cost function plus the two rule
/// penalties directly from their defining formulas, with the UpToForty slack
/// minimized analytically and the discretized squared slacks read off the
/// assignment.
double oracle_energy(const ProblemSpec& spec, const HuboPolynomial& poly,
                     const std::vector<std::uint8_t>& bits) {
  const auto& layout = poly.layout;
  const int n = spec.num_assets, n_t = spec.num_steps;
  const double k_inv = 1.0 / static_cast<double>(spec.total_investment);
  const double rho_p = spec.rule_10_5_40->rho_prime;
  const double rho_pp = spec.rule_10_5_40->rho_double_prime;
  const int s_bits = spec.rule_10_5_40->slack_bits;

  Eigen::MatrixXd w(n, n_t);
  for (int t = 0; t < n_t; ++t)
    for (int a = 0; a < n; ++a) {
      double v = 0.0;
      for (int q = 0; q < spec.bits_per_holding; ++q)
        if (bits[static_cast<std::size_t>(layout.x_index(a, t, q))])
          v += static_cast<double>(1L << q);
      w(a, t) = v * k_inv;
    }

  double e = 0.0;
  Eigen::VectorXd prev = spec.previous_holdings();
  for (int t = 0; t < n_t; ++t) {
    const Eigen::VectorXd wt = w.col(t);
    const Eigen::VectorXd dw = wt - prev;
    e += -spec.mu.col(t).dot(wt) +
         0.5 * spec.gamma * wt.dot(spec.sigma[static_cast<std::size_t>(t)] * wt) +
         spec.lambda * dw.squaredNorm() +
         spec.rho * std::pow(wt.sum() - 1.0, 2);
    prev = wt;

    double b = -0.4;
    for (int a = 0; a < n; ++a)
      if (bits[static_cast<std::size_t>(layout.y_index(a, t))]) b += w(a, t);
    if (b > 0.0) e += rho_p * b * b;  // alpha^2 = -B at the optimum otherwise

    for (int a = 0; a < n; ++a) {
      double s_above = 0.0, s_below = 0.0;
      for (int sb = 0; sb < s_bits; ++sb) {
        if (bits[static_cast<std::size_t>(layout.slack_above_index(a, t, sb))])
          s_above += std::ldexp(1.0, -(sb + 1));
        if (bits[static_cast<std::size_t>(layout.slack_below_index(a, t, sb))])
          s_below += std::ldexp(1.0, -(sb + 1));
      }
      const bool y = bits[static_cast<std::size_t>(layout.y_index(a, t))] != 0;
      if (y)
        e += rho_pp * std::pow(0.05 - w(a, t) + s_above, 2);
      else
        e += rho_pp * std::pow(w(a, t) - 0.05 + s_below, 2);
    }
  }
  return e;
}

}  // namespace

TEST_CASE("10-5-40 requires the 10% cap") {
  auto spec = rule_spec(2, 1);
  spec.total_investment = 10;  // 2^2-1 = 3 > 0.1 * 10
  CHECK_THROWS_WITH(build_10_5_40_hubo(spec),
                    Catch::Matchers::ContainsSubstring("10%"));
}

TEST_CASE("the rule build is a HUBO, build_qubo refuses it") {
  const auto spec = rule_spec(2, 1);
  CHECK_THROWS_AS(build_qubo(spec), ConfigError);
  const auto poly = build_10_5_40_hubo(spec);
  CHECK(poly.degree() >= 3);
  CHECK(poly.degree() <= 4);
  // variables: 2 holding bits + 1 ancilla + 2 x 2 slack bits, per asset
  CHECK(poly.size() == 2 * (2 + 1 + 4));
  CHECK(poly.roster().size() == static_cast<std::size_t>(poly.size()));
}

TEST_CASE("HUBO energies match the formula oracle on random assignments") {
  Rng rng(606);
  for (int rep = 0; rep < 10; ++rep) {
    auto spec = rule_spec(2, 2);
    for (int i = 0; i < 2; ++i)
      for (int t = 0; t < 2; ++t) spec.mu(i, t) = 0.2 * rng.gaussian();
    for (auto& s : spec.sigma) s = test_helpers::random_psd(2, rng);
    const auto poly = build_10_5_40_hubo(spec);
    for (int s = 0; s < 200; ++s) {
      std::vector<std::uint8_t> bits(static_cast<std::size_t>(poly.size()));
      for (auto& b : bits) b = rng.coin() ? 1 : 0;
      const double via_poly = poly.energy(bits);
      const double via_oracle = oracle_energy(spec, poly, bits);
      CHECK_THAT(via_poly,
                 Catch::Matchers::WithinAbs(
                     via_oracle, 1e-9 * (1.0 + std::abs(via_oracle))));
    }
  }
}

TEST_CASE("all-zero bits leave only hinge-free penalties") {
  // with every w = y = 0, UpToForty has B = -0.4 < 0: the continuous slack
  // absorbs it exactly (alpha^2 = 0.4), so only WhoIsFive's (w - 0.05 + s)^2
  // and the budget penalty remain
  const auto spec = rule_spec(1, 1);
  const auto poly = build_10_5_40_hubo(spec);
  std::vector<std::uint8_t> bits(static_cast<std::size_t>(poly.size()), 0);
  const double expect =
      spec.rho * 1.0 +  // budget (0 - 1)^2
      spec.rule_10_5_40->rho_double_prime * std::pow(0.0 - 0.05 + 0.0, 2);
  CHECK_THAT(poly.energy(bits),
             Catch::Matchers::WithinAbs(expect, 1e-12));
}

TEST_CASE("a 10% position with its ancilla set leaves no UpToForty residue") {
  // one asset at w = 0.1 with y = 1: B = 0.1 - 0.4 < 0, absorbed by the
  // continuous slack; WhoIsFive's y-branch wants s_above = w - 0.05 = 0.05,
  // representable within the 2^-S grid
  const auto spec = rule_spec(2, 1);
  const auto poly = build_10_5_40_hubo(spec, 4);
  std::vector<std::uint8_t> bits(static_cast<std::size_t>(poly.size()), 0);
  // w_0 = 4/40 = 0.1 needs holding 4 ... outside N_q=2; use w = 3/40 = 0.075
  bits[static_cast<std::size_t>(poly.layout.x_index(0, 0, 0))] = 1;
  bits[static_cast<std::size_t>(poly.layout.x_index(0, 0, 1))] = 1;
  bits[static_cast<std::size_t>(poly.layout.y_index(0, 0))] = 1;

  // best discretized squared slack for 0.075 - 0.05 = 0.025 on the S=4 grid
  double best = 1e300;
  for (int g = 0; g < 16; ++g) {
    const double s = g / 16.0;
    best = std::min(best, std::pow(0.05 - 0.075 + s, 2));
  }
  double best_lo = 1e300;  // asset 1 at w = 0, y = 0
  for (int g = 0; g < 16; ++g) {
    const double s = g / 16.0;
    best_lo = std::min(best_lo, std::pow(0.0 - 0.05 + s, 2));
  }

  double e_min = 1e300;
  // scan both slack registers of asset 0 (above) and asset 1 (below)
  for (int ga = 0; ga < 16; ++ga)
    for (int gb = 0; gb < 16; ++gb) {
      auto b = bits;
      for (int sb = 0; sb < 4; ++sb) {
        b[static_cast<std::size_t>(poly.layout.slack_above_index(0, 0, sb))] =
            static_cast<std::uint8_t>((ga >> (3 - sb)) & 1);
        b[static_cast<std::size_t>(poly.layout.slack_below_index(1, 0, sb))] =
            static_cast<std::uint8_t>((gb >> (3 - sb)) & 1);
      }
      e_min = std::min(e_min, poly.energy(b));
    }

  const double k_inv = 1.0 / 40.0;
  const double w0 = 3.0 * k_inv;
  const double base = spec.lambda * w0 * w0 +  // transaction from zero
                      spec.rho * std::pow(w0 - 1.0, 2);
  const double expect = base +
                        spec.rule_10_5_40->rho_double_prime * (best + best_lo);
  CHECK_THAT(e_min, Catch::Matchers::WithinAbs(expect, 1e-9));
  // discretization error bound: 2^{-S+1} rho'' per term
  CHECK(spec.rule_10_5_40->rho_double_prime * best <=
        std::pow(2.0, -3) * spec.rule_10_5_40->rho_double_prime);
}
