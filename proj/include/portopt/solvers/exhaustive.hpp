#pragma once

#include <bit>
#include <chrono>
#include <cstdint>
#include <set>
#include <string>
#include <vector>

#include "portopt/common.hpp"
#include "portopt/hubo.hpp"
#include "portopt/qubo.hpp"
#include "portopt/solvers/solution_set.hpp"

namespace portopt {

enum class EnumerationMode {
  All,                // every bit assignment
  BudgetConstrained,  // only assignments with sum_n w_{n,t} = K for every t
};

struct ExhaustiveOptions {
  int max_bits = 24;  // hard cap on 2^{N_tot} enumeration
  EnumerationMode mode = EnumerationMode::All;
  const ProblemSpec* spec = nullptr;  // required for BudgetConstrained
  int top_k = 10;
};

namespace detail {

/// Bounded best-k collector ordered by (energy, lexicographic bits).
class TopK {
 public:
  explicit TopK(int k) : k_(static_cast<std::size_t>(k)) {}

  /// Slightly loose so that incremental-energy drift cannot shadow an exact
  /// tie at the cut; exact insertion order below settles membership.
  bool would_accept(double energy) const {
    if (set_.size() < k_) return true;
    const double worst = std::prev(set_.end())->first;
    return energy <= worst + 1e-9 * (1.0 + std::abs(worst));
  }

  void offer(double energy, const std::vector<std::uint8_t>& bits) {
    if (set_.size() >= k_ && std::make_pair(energy, bits) >= *std::prev(set_.end()))
      return;
    set_.emplace(energy, bits);
    if (set_.size() > k_) set_.erase(std::prev(set_.end()));
  }

  std::vector<SolutionSet::Entry> take() const {
    std::vector<SolutionSet::Entry> out;
    for (const auto& [e, b] : set_) out.push_back({b, e});
    return out;
  }

 private:
  std::size_t k_;
  std::multiset<std::pair<double, std::vector<std::uint8_t>>> set_;
};

inline void check_cap(int n, int max_bits) {
  if (n > max_bits)
    throw SolverError(
        "exhaustive enumeration refused: " + std::to_string(n) +
        " variables means 2^" + std::to_string(n) + " = " +
        (n < 63 ? std::to_string(1ULL << n) : std::string("> 9e18")) +
        " states (cap is " + std::to_string(max_bits) + " variables)");
}

/// Tracks whether the decoded holdings meet the budget in every step,
/// updated in O(1) per bit flip.
class BudgetTracker {
 public:
  BudgetTracker(const VariableLayout& layout, const ProblemSpec& spec)
      : layout_(layout), spec_(spec),
        sums_(static_cast<std::size_t>(layout.num_steps), 0),
        bad_steps_(layout.num_steps) {}

  void flip(int var, bool now_set) {
    const int b = layout_.block_size();
    const int t = var / b;
    const int r = var % b;
    if (r >= layout_.num_assets * layout_.bits_per_holding) return;
    const long w = 1L << (r % layout_.bits_per_holding);
    auto& s = sums_[static_cast<std::size_t>(t)];
    const bool was_ok = s == spec_.total_investment;
    s += now_set ? w : -w;
    const bool is_ok = s == spec_.total_investment;
    if (was_ok && !is_ok) ++bad_steps_;
    if (!was_ok && is_ok) --bad_steps_;
  }

  bool feasible() const { return bad_steps_ == 0; }

 private:
  const VariableLayout& layout_;
  const ProblemSpec& spec_;
  std::vector<long> sums_;
  int bad_steps_;
};

}  // namespace detail

/// Brute-force search. States are visited in Gray-code order so the energy
/// update per state is a single bit flip; accepted candidates are re-scored
/// exactly before insertion to keep recorded energies drift-free.
inline SolutionSet solve_exhaustive(const QuboMatrix& qubo,
                                    const ExhaustiveOptions& options = {}) {
  const int n = qubo.size();
  detail::check_cap(n, options.max_bits);
  if (options.mode == EnumerationMode::BudgetConstrained &&
      (options.spec == nullptr || !qubo.layout))
    throw ConfigError("budget-constrained enumeration needs a problem spec "
                      "and a structured layout");
  const auto start = std::chrono::steady_clock::now();

  std::vector<std::uint8_t> bits(static_cast<std::size_t>(n), 0);
  // field(i) = sum_j Q_ij x_j; flipping i costs (1-2x_i)(Q_ii + 2 field(i))
  Eigen::VectorXd field = Eigen::VectorXd::Zero(n);
  double energy = qubo.offset;
  detail::TopK top(options.top_k);

  std::optional<detail::BudgetTracker> budget;
  if (options.mode == EnumerationMode::BudgetConstrained)
    budget.emplace(*qubo.layout, *options.spec);

  auto consider = [&]() {
    if (budget && !budget->feasible()) return;
    if (!top.would_accept(energy)) return;
    top.offer(qubo.energy(bits), bits);
  };

  consider();
  const std::uint64_t total = 1ULL << n;
  for (std::uint64_t step = 1; step < total; ++step) {
    const int i = std::countr_zero(step);
    const bool now = !bits[static_cast<std::size_t>(i)];
    const double delta =
        (now ? 1.0 : -1.0) * (qubo.q(i, i) + 2.0 * (field(i) - qubo.q(i, i) *
                                                                    bits[static_cast<std::size_t>(i)]));
    bits[static_cast<std::size_t>(i)] = now ? 1 : 0;
    energy += delta;
    field += (now ? 1.0 : -1.0) * qubo.q.col(i);
    if (budget) budget->flip(i, now);
    consider();
  }

  SolutionSet out;
  out.solver = "exhaustive";
  out.entries = top.take();
  out.layout = qubo.layout;
  out.iterations = static_cast<long>(total);
  out.wall_time_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
          .count();
  out.finalize();
  return out;
}

/// HUBO variant of the brute-force search. Monomial activation counters give
/// O(degree) updates per flip; hinge expressions are tracked the same way.
inline SolutionSet solve_exhaustive(const HuboPolynomial& poly,
                                    const ExhaustiveOptions& options = {}) {
  const int n = poly.size();
  detail::check_cap(n, options.max_bits);
  const auto start = std::chrono::steady_clock::now();

  struct Mono {
    double coeff;
    int unset;  // variables in the monomial currently 0
  };
  std::vector<Mono> monos;
  std::vector<std::vector<int>> touching(static_cast<std::size_t>(n));
  double base = poly.offset;
  for (const auto& [m, c] : poly.terms) {
    const int id = static_cast<int>(monos.size());
    monos.push_back({c, static_cast<int>(m.size())});
    for (int v : m) touching[static_cast<std::size_t>(v)].push_back(id);
  }
  struct HingeState {
    double value;
    double multiplier;
  };
  std::vector<HingeState> hinge_state;
  std::vector<Mono> hinge_monos;
  std::vector<std::vector<std::pair<int, int>>> hinge_touching(
      static_cast<std::size_t>(n));  // (hinge, monomial) pairs
  std::vector<std::vector<double>> hinge_coeffs;
  std::vector<std::vector<int>> hinge_unset;
  for (const auto& h : poly.hinges) {
    const int hid = static_cast<int>(hinge_state.size());
    hinge_state.push_back({h.expr_constant, h.multiplier});
    hinge_coeffs.emplace_back();
    hinge_unset.emplace_back();
    for (const auto& [m, c] : h.expr) {
      const int mid = static_cast<int>(hinge_coeffs.back().size());
      hinge_coeffs.back().push_back(c);
      hinge_unset.back().push_back(static_cast<int>(m.size()));
      for (int v : m)
        hinge_touching[static_cast<std::size_t>(v)].emplace_back(hid, mid);
    }
  }

  auto hinge_total = [&]() {
    double e = 0.0;
    for (const auto& h : hinge_state)
      if (h.value > 0.0) e += h.multiplier * h.value * h.value;
    return e;
  };

  std::vector<std::uint8_t> bits(static_cast<std::size_t>(n), 0);
  double poly_energy = base;

  detail::TopK top(options.top_k);
  std::optional<detail::BudgetTracker> budget;
  if (options.mode == EnumerationMode::BudgetConstrained) {
    if (options.spec == nullptr)
      throw ConfigError("budget-constrained enumeration needs a problem spec");
    budget.emplace(poly.layout, *options.spec);
  }

  auto consider = [&]() {
    if (budget && !budget->feasible()) return;
    const double e = poly_energy + hinge_total();
    if (!top.would_accept(e)) return;
    top.offer(poly.energy(bits), bits);
  };

  consider();
  const std::uint64_t total = 1ULL << n;
  for (std::uint64_t step = 1; step < total; ++step) {
    const int i = std::countr_zero(step);
    const bool now = !bits[static_cast<std::size_t>(i)];
    bits[static_cast<std::size_t>(i)] = now ? 1 : 0;
    for (int id : touching[static_cast<std::size_t>(i)]) {
      auto& m = monos[static_cast<std::size_t>(id)];
      if (now) {
        if (--m.unset == 0) poly_energy += m.coeff;
      } else {
        if (m.unset++ == 0) poly_energy -= m.coeff;
      }
    }
    for (const auto& [hid, mid] : hinge_touching[static_cast<std::size_t>(i)]) {
      auto& unset = hinge_unset[static_cast<std::size_t>(hid)]
                               [static_cast<std::size_t>(mid)];
      const double c = hinge_coeffs[static_cast<std::size_t>(hid)]
                                   [static_cast<std::size_t>(mid)];
      if (now) {
        if (--unset == 0) hinge_state[static_cast<std::size_t>(hid)].value += c;
      } else {
        if (unset++ == 0) hinge_state[static_cast<std::size_t>(hid)].value -= c;
      }
    }
    if (budget) budget->flip(i, now);
    consider();
  }

  SolutionSet out;
  out.solver = "exhaustive";
  out.entries = top.take();
  out.layout = poly.layout;
  out.iterations = static_cast<long>(total);
  out.wall_time_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
          .count();
  out.finalize();
  return out;
}

}  // namespace portopt
