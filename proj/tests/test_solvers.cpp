#include <catch2/catch_amalgamated.hpp>
#include <cmath>

#include "helpers.hpp"
#include "portopt/solvers/annealing.hpp"
#include "portopt/solvers/exhaustive.hpp"
#include "portopt/solvers/recombine.hpp"

using namespace portopt;
using test_helpers::random_spec;

namespace {

QuboMatrix random_qubo(int n, Rng& rng, double scale = 1.0) {
  Eigen::MatrixXd a(n, n);
  for (int i = 0; i < n * n; ++i) a.data()[i] = scale * rng.gaussian();
  QuboMatrix q;
  q.q = ((a + a.transpose()) / 2.0).eval();
  q.offset = scale * rng.gaussian();
  return q;
}

/// Plain reference enumeration, no incremental tricks.
std::pair<double, std::vector<std::uint8_t>> brute_force_best(
    const QuboMatrix& q) {
  double best = 1e300;
  std::vector<std::uint8_t> arg;
  for (const auto& bits : test_helpers::all_assignments(q.size())) {
    const double e = q.energy(bits);
    if (e < best) {
      best = e;
      arg = bits;
    }
  }
  return {best, arg};
}

}  // namespace

TEST_CASE("exhaustive solver on worked fixtures") {
  SECTION("upper triangular [[-1,2],[0,0]] has optimum (1,0) at -1") {
    const auto qubo =
        QuboMatrix::from_upper_triangle(2, {{0, 0, -1.0}, {0, 1, 2.0}});
    const auto sols = solve_exhaustive(qubo);
    REQUIRE(!sols.entries.empty());
    CHECK(sols.best().bits == std::vector<std::uint8_t>{1, 0});
    CHECK_THAT(sols.best().energy, Catch::Matchers::WithinAbs(-1.0, 1e-15));
  }
  SECTION("an XS-scale instance enumerates 64 states") {
    Rng rng(1);
    const auto spec = random_spec(3, 2, 1, 2, rng);
    const auto qubo = build_qubo(spec);
    REQUIRE(qubo.size() == 6);
    const auto sols = solve_exhaustive(qubo);
    CHECK(sols.iterations == 64);
  }
  SECTION("ties break to the lexicographically smallest bit string") {
    QuboMatrix qubo;
    qubo.q = Eigen::MatrixXd::Zero(4, 4);
    const auto sols = solve_exhaustive(qubo);
    CHECK(sols.best().bits == std::vector<std::uint8_t>{0, 0, 0, 0});
    CHECK(sols.best().energy == 0.0);
  }
  SECTION("the cap refuses oversized instances with a state-count estimate") {
    QuboMatrix qubo;
    qubo.q = Eigen::MatrixXd::Zero(30, 30);
    CHECK_THROWS_WITH(solve_exhaustive(qubo),
                      Catch::Matchers::ContainsSubstring("2^30"));
  }
}

TEST_CASE("exhaustive agrees with plain enumeration on random instances") {
  Rng rng(42);
  for (int rep = 0; rep < 20; ++rep) {
    const auto qubo = random_qubo(8, rng);
    const auto sols = solve_exhaustive(qubo);
    const auto [best, arg] = brute_force_best(qubo);
    CHECK_THAT(sols.best().energy,
               Catch::Matchers::WithinAbs(best, 1e-9 * (1.0 + std::abs(best))));
    // entries are sorted, deduplicated and re-evaluate to their energies
    for (std::size_t i = 1; i < sols.entries.size(); ++i)
      CHECK(sols.entries[i - 1].energy <= sols.entries[i].energy);
    for (const auto& e : sols.entries)
      CHECK_THAT(qubo.energy(e.bits),
                 Catch::Matchers::WithinAbs(
                     e.energy, 1e-9 * (1.0 + std::abs(e.energy))));
  }
}

TEST_CASE("budget-constrained enumeration keeps only feasible trajectories") {
  Rng rng(7);
  const auto spec = random_spec(3, 2, 1, 2, rng);
  const auto qubo = build_qubo(spec);
  ExhaustiveOptions opts;
  opts.mode = EnumerationMode::BudgetConstrained;
  opts.spec = &spec;
  opts.top_k = 64;
  const auto sols = solve_exhaustive(qubo, opts);
  // with N = 3, K = 2, K' = 1 there are C(3,2) = 3 feasible portfolios per
  // step, hence 9 feasible trajectories
  CHECK(sols.entries.size() == 9);
  for (const auto& e : sols.entries) {
    const auto units = decode(sols.holding_bits(e), spec);
    for (int t = 0; t < spec.num_steps; ++t)
      CHECK(units.holdings.col(t).sum() ==
            static_cast<double>(spec.total_investment));
  }
}

TEST_CASE("exhaustive solves small HUBOs and respects hinge terms") {
  // hand-built: energy = x0 + 2 x1 x2 - 3 x0 x1 x2 + max(0, x0 + x1 - 1)^2
  HuboPolynomial poly;
  poly.layout.num_assets = 3;
  poly.layout.num_steps = 1;
  poly.layout.bits_per_holding = 1;
  poly.add_term({0}, 1.0);
  poly.add_term({1, 2}, 2.0);
  poly.add_term({0, 1, 2}, -3.0);
  HuboPolynomial::Hinge hinge;
  hinge.expr[{0}] = 1.0;
  hinge.expr[{1}] = 1.0;
  hinge.expr_constant = -1.0;
  hinge.multiplier = 1.0;
  poly.hinges.push_back(hinge);

  // reference: direct evaluation over all 8 states
  double best = 1e300;
  std::vector<std::uint8_t> arg;
  for (const auto& bits : test_helpers::all_assignments(3)) {
    const double x0 = bits[0], x1 = bits[1], x2 = bits[2];
    const double b = x0 + x1 - 1.0;
    const double e =
        x0 + 2.0 * x1 * x2 - 3.0 * x0 * x1 * x2 + (b > 0 ? b * b : 0.0);
    if (e < best) {
      best = e;
      arg = bits;
    }
  }
  const auto sols = solve_exhaustive(poly);
  CHECK_THAT(sols.best().energy, Catch::Matchers::WithinAbs(best, 1e-12));
  CHECK(sols.best().bits == arg);
}

TEST_CASE("annealing finds separable optima and is deterministic") {
  SECTION("dominant diagonal -I drives all bits on") {
    QuboMatrix qubo;
    qubo.q = -Eigen::MatrixXd::Identity(12, 12);
    AnnealSchedule sched;
    sched.seed = 5;
    sched.restarts = 4;
    const auto sols = solve_annealing(qubo, sched);
    CHECK(sols.best().bits == std::vector<std::uint8_t>(12, 1));
    CHECK_THAT(sols.best().energy, Catch::Matchers::WithinAbs(-12.0, 1e-12));
  }
  SECTION("identical seeds give bit-identical output") {
    Rng rng(12);
    const auto qubo = random_qubo(14, rng);
    const auto sched = default_anneal_schedule(qubo, 99);
    const auto a = solve_annealing(qubo, sched);
    const auto b = solve_annealing(qubo, sched);
    REQUIRE(a.entries.size() == b.entries.size());
    for (std::size_t i = 0; i < a.entries.size(); ++i) {
      CHECK(a.entries[i].bits == b.entries[i].bits);
      CHECK(a.entries[i].energy == b.entries[i].energy);
    }
  }
  SECTION("schedule validation") {
    AnnealSchedule sched;
    sched.cooling = 1.5;
    QuboMatrix qubo;
    qubo.q = Eigen::MatrixXd::Zero(2, 2);
    CHECK_THROWS_AS(solve_annealing(qubo, sched), ConfigError);
  }
}

TEST_CASE("annealing reaches the exhaustive optimum on random instances") {
  Rng rng(2025);
  int hits = 0;
  const int instances = 20;
  for (int rep = 0; rep < instances; ++rep) {
    const auto qubo = random_qubo(14, rng);
    auto sched = default_anneal_schedule(qubo, 1000 + static_cast<std::uint64_t>(rep));
    sched.restarts = 40;
    const auto sols = solve_annealing(qubo, sched);
    const auto exact = solve_exhaustive(qubo);
    if (std::abs(sols.best().energy - exact.best().energy) <=
        1e-9 * (1.0 + std::abs(exact.best().energy)))
      ++hits;
  }
  CHECK(hits >= instances - 1);
}

TEST_CASE("per-step shortlists and recombination") {
  SECTION("k = 1 with lambda = 0 concatenates to the global optimum") {
    Rng rng(300);
    for (int rep = 0; rep < 10; ++rep) {
      const auto spec =
          random_spec(2, 3, 1, 2, rng, {.lambda_override = 0.0});
      const auto candidates = per_step_low_energy(spec, 1);
      const auto combo = recombine(candidates, spec);
      const auto exact = solve_exhaustive(build_qubo(spec));
      CHECK_THAT(combo.best().energy,
                 Catch::Matchers::WithinAbs(
                     exact.best().energy,
                     1e-9 * (1.0 + std::abs(exact.best().energy))));
    }
  }
  SECTION("a full candidate list is a complete enumeration") {
    Rng rng(301);
    const auto spec = random_spec(2, 2, 1, 2, rng);
    const auto candidates = per_step_low_energy(spec, 16);
    for (const auto& list : candidates) CHECK(list.size() == 4);
  }
  SECTION("N_t = 1 returns the top-k of the single step") {
    Rng rng(302);
    const auto spec = random_spec(2, 1, 2, 3, rng);
    const auto candidates = per_step_low_energy(spec, 5);
    REQUIRE(candidates.size() == 1);
    CHECK(candidates[0].size() == 5);
    for (std::size_t i = 1; i < candidates[0].size(); ++i)
      CHECK(candidates[0][i - 1].step_energy <= candidates[0][i].step_energy);
  }
  SECTION("DP equals brute force over all combinations with coupling on") {
    Rng rng(303);
    for (int rep = 0; rep < 25; ++rep) {
      const int n_t = 2 + static_cast<int>(rng.below(3));
      const int k = 2 + static_cast<int>(rng.below(2));
      test_helpers::SpecOptions opts;
      opts.market_impact = rep % 4 == 2;
      const auto spec = random_spec(2, n_t, 1, 2, rng, opts);
      REQUIRE(spec.lambda > 0.0);
      const auto candidates = per_step_low_energy(spec, k);
      const auto combo = recombine(candidates, spec);

      // oracle: try every combination, evaluate the full Hamiltonian
      double best = 1e300;
      std::size_t total = 1;
      for (int t = 0; t < n_t; ++t) total *= candidates[static_cast<std::size_t>(t)].size();
      for (std::size_t m = 0; m < total; ++m) {
        std::size_t rem = m;
        Eigen::MatrixXd h(2, n_t);
        for (int t = 0; t < n_t; ++t) {
          const auto& list = candidates[static_cast<std::size_t>(t)];
          h.col(t) = list[rem % list.size()].holdings;
          rem /= list.size();
        }
        const double e =
            evaluate_hamiltonian(normalize({h, false}, spec), spec).total;
        best = std::min(best, e);
      }
      CHECK_THAT(combo.best().energy,
                 Catch::Matchers::WithinAbs(best, 1e-9 * (1.0 + std::abs(best))));
    }
  }
  SECTION("k = 1 recombination energy equals the evaluated concatenation") {
    Rng rng(304);
    const auto spec = random_spec(3, 3, 1, 2, rng);
    const auto candidates = per_step_low_energy(spec, 1);
    const auto combo = recombine(candidates, spec);
    Eigen::MatrixXd h(3, 3);
    for (int t = 0; t < 3; ++t)
      h.col(t) = candidates[static_cast<std::size_t>(t)][0].holdings;
    const double expect =
        evaluate_hamiltonian(normalize({h, false}, spec), spec).total;
    CHECK_THAT(combo.best().energy,
               Catch::Matchers::WithinAbs(expect, 1e-12));
  }
}

TEST_CASE("recombination over complete candidate lists is exact") {
  // with every per-step portfolio available, the DP must reproduce the
  // unrestricted optimum of the full Hamiltonian, coupling included
  Rng rng(310);
  for (int rep = 0; rep < 10; ++rep) {
    test_helpers::SpecOptions opts;
    opts.market_impact = rep % 2 == 1;
    const auto spec = random_spec(2, 3, 1, 2, rng, opts);
    const int per_step_states = 1 << (spec.num_assets * spec.bits_per_holding);
    const auto candidates = per_step_low_energy(spec, per_step_states);
    const auto combo = recombine(candidates, spec);
    const auto exact = solve_exhaustive(build_qubo(spec));
    CHECK_THAT(combo.best().energy,
               Catch::Matchers::WithinAbs(
                   exact.best().energy,
                   1e-9 * (1.0 + std::abs(exact.best().energy))));
  }
}

TEST_CASE("annealing respects the sweep-level cancellation signal") {
  Rng rng(311);
  QuboMatrix qubo;
  qubo.q = -Eigen::MatrixXd::Identity(10, 10);
  AnnealSchedule sched;
  sched.restarts = 2;
  int calls = 0;
  const auto sols = solve_annealing(qubo, sched, [&](int) {
    ++calls;
    return calls <= 3;  // cancel each restart after three sweeps
  });
  CHECK(calls > 3);
  CHECK(!sols.entries.empty());  // partial results are still returned
}

TEST_CASE("every solver dominates or matches the exhaustive oracle") {
  Rng rng(500);
  for (int rep = 0; rep < 5; ++rep) {
    const auto spec = random_spec(2, 2, 2, 3, rng);
    const auto qubo = build_qubo(spec);
    const auto exact = solve_exhaustive(qubo);
    auto sched = default_anneal_schedule(qubo, 77);
    sched.restarts = 10;
    const auto annealed = solve_annealing(qubo, sched);
    CHECK(annealed.best().energy >=
          exact.best().energy - 1e-9 * (1.0 + std::abs(exact.best().energy)));
    const auto combo = recombine(per_step_low_energy(spec, 4), spec);
    CHECK(combo.best().energy >=
          exact.best().energy - 1e-9 * (1.0 + std::abs(exact.best().energy)));
  }
}
