#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "portopt/common.hpp"
#include "portopt/problem.hpp"
#include "portopt/qubo.hpp"

namespace portopt {

/// Sparse polynomial over bit variables plus hinge penalties whose
/// continuous slack has already been minimized in closed form:
///   energy(x) = offset + sum_m coeff_m * prod x_i
///             + sum_h mult_h * max(0, expr_h(x))^2.
/// The hinge form comes from a penalty (B + a^2)^2 with a real: minimizing
/// over a >= 0 leaves max(0, B)^2. Monomials are sorted, distinct (x^2 = x)
/// and of degree <= 4.
struct HuboPolynomial {
  using Monomial = std::vector<int>;

  std::map<Monomial, double> terms;
  double offset = 0.0;
  VariableLayout layout;

  struct Hinge {
    std::map<Monomial, double> expr;  // degree <= 2
    double expr_constant = 0.0;
    double multiplier = 0.0;
  };
  std::vector<Hinge> hinges;

  int size() const { return layout.total_bits(); }

  int degree() const {
    std::size_t d = 0;
    for (const auto& [m, c] : terms) d = std::max(d, m.size());
    for (const auto& h : hinges)
      for (const auto& [m, c] : h.expr) d = std::max(d, 2 * m.size());
    return static_cast<int>(d);
  }

  std::vector<std::string> roster() const {
    std::vector<std::string> out;
    for (int i = 0; i < size(); ++i) out.push_back(layout.variable_name(i));
    return out;
  }

  void add_term(Monomial m, double coeff) {
    if (coeff == 0.0) return;
    std::sort(m.begin(), m.end());
    m.erase(std::unique(m.begin(), m.end()), m.end());  // idempotence
    if (m.empty())
      offset += coeff;
    else
      terms[m] += coeff;
  }

  static double eval_terms(const std::map<Monomial, double>& terms,
                           std::span<const std::uint8_t> bits) {
    double e = 0.0;
    for (const auto& [m, c] : terms) {
      bool on = true;
      for (int i : m)
        if (!bits[static_cast<std::size_t>(i)]) {
          on = false;
          break;
        }
      if (on) e += c;
    }
    return e;
  }

  double energy(std::span<const std::uint8_t> bits) const {
    double e = offset + eval_terms(terms, bits);
    for (const auto& h : hinges) {
      const double b = h.expr_constant + eval_terms(h.expr, bits);
      if (b > 0.0) e += h.multiplier * b * b;
    }
    return e;
  }
};

namespace detail {

/// Linear form over bit variables; products of two of these expand into
/// the monomial map.
struct LinearForm {
  std::vector<std::pair<int, double>> coeffs;
  double constant = 0.0;
};

inline void add_product(HuboPolynomial& poly, const LinearForm& a,
                        const LinearForm& b, double scale,
                        const std::vector<int>& extra) {
  if (scale == 0.0) return;
  for (const auto& [i, ci] : a.coeffs)
    for (const auto& [j, cj] : b.coeffs) {
      HuboPolynomial::Monomial m = extra;
      m.push_back(i);
      m.push_back(j);
      poly.add_term(std::move(m), scale * ci * cj);
    }
  for (const auto& [i, ci] : a.coeffs) {
    HuboPolynomial::Monomial m = extra;
    m.push_back(i);
    poly.add_term(std::move(m), scale * ci * b.constant);
  }
  for (const auto& [j, cj] : b.coeffs) {
    HuboPolynomial::Monomial m = extra;
    m.push_back(j);
    poly.add_term(std::move(m), scale * a.constant * cj);
  }
  poly.add_term(extra, scale * a.constant * b.constant);
}

}  // namespace detail

/// Compiles the cost function plus the 10-5-40 penalties into a HUBO.
/// Preconditions: the per-asset cap satisfies 2^{N_q}-1 <= 0.1 K (the 10%
/// leg). Ancillas y_{n,t} mark holdings above 5%; UpToForty is a hinge per
/// step (its real slack alpha_t is eliminated analytically) and WhoIsFive is
/// cubic, with the squared slacks discretized to `slack_bits` fixed-point
/// bits over [0, 1).
inline HuboPolynomial build_10_5_40_hubo(const ProblemSpec& spec,
                                         int slack_bits = 0) {
  ProblemSpec base = spec;
  base.rule_10_5_40.reset();
  base.validate();
  if (static_cast<double>(spec.max_holding()) >
      0.1 * static_cast<double>(spec.total_investment))
    throw ConfigError(
        "10-5-40 rule requires 2^N_q - 1 <= 0.1 K: per-asset investments "
        "may not exceed 10% of the portfolio");

  const Rule105040 rule = spec.rule_10_5_40 ? *spec.rule_10_5_40 : Rule105040{};
  const int s_bits = slack_bits > 0 ? slack_bits : rule.slack_bits;
  if (s_bits < 1) throw ConfigError("slack bit width must be >= 1");
  const double rho_p = rule.rho_prime > 0.0 ? rule.rho_prime : spec.rho;
  const double rho_pp =
      rule.rho_double_prime > 0.0 ? rule.rho_double_prime : spec.rho;

  // base objective terms, reusing the QUBO expansion
  QuboBuildOptions opts;
  const QuboMatrix qubo = build_qubo(base, opts);

  HuboPolynomial poly;
  poly.layout = *qubo.layout;
  poly.layout.rule_ancillas = true;
  poly.layout.slack_bits = s_bits;
  if (poly.layout.sign_ancillas)
    throw ConfigError("10-5-40 rule cannot be combined with exact-cost "
                      "ancillas");

  // re-index holding bits from the base layout into the extended one
  const VariableLayout& bl = *qubo.layout;
  auto remap = [&](int i) {
    const int t = i / bl.block_size();
    const int r = i % bl.block_size();
    return poly.layout.x_index(r / bl.bits_per_holding, t,
                               r % bl.bits_per_holding);
  };
  poly.offset = qubo.offset;
  for (int i = 0; i < qubo.size(); ++i) {
    if (qubo.q(i, i) != 0.0) poly.add_term({remap(i)}, qubo.q(i, i));
    for (int j = i + 1; j < qubo.size(); ++j)
      if (qubo.q(i, j) != 0.0)
        poly.add_term({remap(i), remap(j)}, 2.0 * qubo.q(i, j));
  }

  const double k_inv = 1.0 / static_cast<double>(spec.total_investment);
  constexpr double kFive = 0.05;
  constexpr double kForty = 0.4;

  for (int t = 0; t < spec.num_steps; ++t) {
    // UpToForty: rho' (sum_n y w - 0.4 + alpha^2)^2 with alpha real ->
    // hinge on B = sum_n y w - 0.4.
    HuboPolynomial::Hinge hinge;
    hinge.expr_constant = -kForty;
    hinge.multiplier = rho_p;
    for (int n = 0; n < spec.num_assets; ++n)
      for (int q = 0; q < spec.bits_per_holding; ++q) {
        HuboPolynomial::Monomial m{poly.layout.y_index(n, t),
                                   poly.layout.x_index(n, t, q)};
        std::sort(m.begin(), m.end());
        hinge.expr[m] += static_cast<double>(1L << q) * k_inv;
      }
    poly.hinges.push_back(std::move(hinge));

    // WhoIsFive: rho'' [ y (0.05 - w + s+)^2 + (1-y)(w - 0.05 + s-)^2 ]
    for (int n = 0; n < spec.num_assets; ++n) {
      const int y = poly.layout.y_index(n, t);
      detail::LinearForm above;  // 0.05 - w + s+
      above.constant = kFive;
      detail::LinearForm below;  // w - 0.05 + s-
      below.constant = -kFive;
      for (int q = 0; q < spec.bits_per_holding; ++q) {
        const double w = static_cast<double>(1L << q) * k_inv;
        above.coeffs.emplace_back(poly.layout.x_index(n, t, q), -w);
        below.coeffs.emplace_back(poly.layout.x_index(n, t, q), w);
      }
      for (int b = 0; b < s_bits; ++b) {
        const double w = std::ldexp(1.0, -(b + 1));
        above.coeffs.emplace_back(poly.layout.slack_above_index(n, t, b), w);
        below.coeffs.emplace_back(poly.layout.slack_below_index(n, t, b), w);
      }
      detail::add_product(poly, above, above, rho_pp, {y});   // y branch
      detail::add_product(poly, below, below, rho_pp, {});    // constant part
      detail::add_product(poly, below, below, -rho_pp, {y});  // minus y part
    }
  }
  return poly;
}

}  // namespace portopt
