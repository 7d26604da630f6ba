#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <cstdio>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "portopt/common.hpp"
#include "portopt/problem.hpp"

namespace portopt {

/// Maps structured variables (holding bits, sign ancillas, rule slack bits)
/// onto flat indices. Variables are grouped by step so that every coupling of
/// the compiled objective spans at most two adjacent step blocks.
struct VariableLayout {
  int num_assets = 0;
  int num_steps = 0;
  int bits_per_holding = 0;
  bool sign_ancillas = false;  // y_{n,t} of the exact linear cost model
  bool rule_ancillas = false;  // y_{n,t} of the 10-5-40 rule
  int slack_bits = 0;          // S per slack (10-5-40 only)

  int block_size() const {
    int b = num_assets * bits_per_holding;
    if (sign_ancillas || rule_ancillas) b += num_assets;
    if (slack_bits > 0) b += 2 * num_assets * slack_bits;
    return b;
  }
  int total_bits() const { return num_steps * block_size(); }

  int x_index(int n, int t, int q) const {
    return t * block_size() + n * bits_per_holding + q;
  }
  int y_index(int n, int t) const {
    return t * block_size() + num_assets * bits_per_holding + n;
  }
  /// Slack bits of the squared slack in the y=1 branch of WhoIsFive.
  int slack_above_index(int n, int t, int b) const {
    return t * block_size() + num_assets * (bits_per_holding + 1) +
           n * slack_bits + b;
  }
  /// Slack bits of the squared slack in the y=0 branch.
  int slack_below_index(int n, int t, int b) const {
    return t * block_size() + num_assets * (bits_per_holding + 1) +
           num_assets * slack_bits + n * slack_bits + b;
  }

  std::string variable_name(int i) const {
    const int b = block_size();
    const int t = i / b;
    int r = i % b;
    if (r < num_assets * bits_per_holding)
      return "x[" + std::to_string(r / bits_per_holding) + "," +
             std::to_string(t) + "," + std::to_string(r % bits_per_holding) +
             "]";
    r -= num_assets * bits_per_holding;
    if (sign_ancillas || rule_ancillas) {
      if (r < num_assets)
        return "y[" + std::to_string(r) + "," + std::to_string(t) + "]";
      r -= num_assets;
    }
    const char* tag = r < num_assets * slack_bits ? "sa" : "sb";
    if (r >= num_assets * slack_bits) r -= num_assets * slack_bits;
    return std::string(tag) + "[" + std::to_string(r / slack_bits) + "," +
           std::to_string(t) + "," + std::to_string(r % slack_bits) + "]";
  }

  /// Extract the holding bits of a flat assignment into a BitTrajectory.
  BitTrajectory holding_bits(std::span<const std::uint8_t> bits) const {
    BitTrajectory out(num_assets, num_steps, bits_per_holding);
    for (int t = 0; t < num_steps; ++t)
      for (int n = 0; n < num_assets; ++n)
        for (int q = 0; q < bits_per_holding; ++q)
          out.set(n, t, q,
                  bits[static_cast<std::size_t>(x_index(n, t, q))]);
    return out;
  }
};

/// Symmetric QUBO: energy(x) = x' Q x + offset over x in {0,1}^size.
/// Linear terms sit on the diagonal (x^2 = x).
struct QuboMatrix {
  Eigen::MatrixXd q;
  double offset = 0.0;
  std::optional<VariableLayout> layout;

  int size() const { return static_cast<int>(q.rows()); }

  double energy(std::span<const std::uint8_t> bits) const {
    double e = offset;
    const int n = size();
    for (int i = 0; i < n; ++i) {
      if (!bits[static_cast<std::size_t>(i)]) continue;
      e += q(i, i);
      for (int j = i + 1; j < n; ++j)
        if (bits[static_cast<std::size_t>(j)]) e += 2.0 * q(i, j);
    }
    return e;
  }

  /// Builds from upper-triangle triplets where each (i, j, v) contributes
  /// v * x_i x_j; the stored matrix is the symmetrized form.
  static QuboMatrix from_upper_triangle(
      int size, const std::vector<std::tuple<int, int, double>>& triplets,
      double offset = 0.0) {
    QuboMatrix out;
    out.q = Eigen::MatrixXd::Zero(size, size);
    out.offset = offset;
    for (const auto& [i, j, v] : triplets) {
      if (i == j)
        out.q(i, i) += v;
      else {
        out.q(i, j) += v / 2.0;
        out.q(j, i) += v / 2.0;
      }
    }
    return out;
  }

  struct Coupling {
    int i, j;
    double weight;  // coefficient of x_i x_j, i.e. 2 Q_ij
  };

  std::vector<Coupling> couplings() const {
    std::vector<Coupling> out;
    const int n = size();
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j)
        if (q(i, j) != 0.0) out.push_back({i, j, 2.0 * q(i, j)});
    return out;
  }

  /// Plain-text triplet export: `# offset <c>` header, then `i j value` with
  /// zero-based indices, upper triangle only (off-diagonal values carry the
  /// full x_i x_j coefficient).
  void export_text(std::ostream& os) const {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", offset);
    os << "# offset " << buf << "\n";
    const int n = size();
    for (int i = 0; i < n; ++i)
      for (int j = i; j < n; ++j) {
        const double v = i == j ? q(i, i) : 2.0 * q(i, j);
        if (v == 0.0) continue;
        std::snprintf(buf, sizeof(buf), "%.17g", v);
        os << i << " " << j << " " << buf << "\n";
      }
  }
};

/// Spin form: energy(s) = s' J s + h' s + offset over s in {-1,+1}^size,
/// with J symmetric and zero on the diagonal.
struct IsingModel {
  Eigen::MatrixXd couplings;
  Eigen::VectorXd fields;
  double offset = 0.0;

  int size() const { return static_cast<int>(fields.size()); }

  double energy(std::span<const int> spins) const {
    const int n = size();
    double e = offset;
    for (int i = 0; i < n; ++i) {
      e += fields(i) * spins[static_cast<std::size_t>(i)];
      for (int j = 0; j < n; ++j)
        e += couplings(i, j) * spins[static_cast<std::size_t>(i)] *
             spins[static_cast<std::size_t>(j)];
    }
    return e;
  }
};

/// Exact substitution x_i = (1 + s_i)/2.
inline IsingModel qubo_to_ising(const QuboMatrix& qubo) {
  IsingModel out;
  out.couplings = qubo.q / 4.0;
  out.couplings.diagonal().setZero();
  out.fields = qubo.q.rowwise().sum() / 2.0;
  double off = qubo.offset + qubo.q.diagonal().sum() / 2.0;
  off += (qubo.q.sum() - qubo.q.diagonal().sum()) / 4.0;
  out.offset = off;
  return out;
}

struct QuboBuildOptions {
  int max_total_bits = 4096;
};

/// Compiles the cost function into QUBO form over the binary encoding
/// w_{n,t} = (1/K) sum_q 2^q x_{n,t,q}. Supports the market-impact and
/// exact-linear-cost extensions; the 10-5-40 rule yields a HUBO instead.
inline QuboMatrix build_qubo(const ProblemSpec& spec,
                             const QuboBuildOptions& options = {}) {
  spec.validate();
  if (spec.rule_10_5_40)
    throw ConfigError(
        "the 10-5-40 rule makes the problem a HUBO; use build_10_5_40_hubo");

  VariableLayout layout;
  layout.num_assets = spec.num_assets;
  layout.num_steps = spec.num_steps;
  layout.bits_per_holding = spec.bits_per_holding;
  layout.sign_ancillas = spec.exact_cost.has_value();
  const int n_tot = layout.total_bits();
  if (n_tot > options.max_total_bits)
    throw SolverError("problem needs " + std::to_string(n_tot) +
                      " bit variables, above the configured maximum of " +
                      std::to_string(options.max_total_bits));

  QuboMatrix out;
  out.q = Eigen::MatrixXd::Zero(n_tot, n_tot);
  out.offset = 0.0;
  out.layout = layout;

  auto add = [&](int i, int j, double c) {
    if (i == j) {
      out.q(i, i) += c;
    } else {
      out.q(i, j) += c / 2.0;
      out.q(j, i) += c / 2.0;
    }
  };

  const double k_inv = 1.0 / static_cast<double>(spec.total_investment);
  auto weight = [&](int q) { return static_cast<double>(1L << q) * k_inv; };

  const Eigen::VectorXd lam = spec.lambda_diagonal();
  const Eigen::VectorXd prev = spec.previous_holdings();
  const double rho_prime =
      spec.exact_cost
          ? (spec.exact_cost->rho_prime > 0.0
                 ? spec.exact_cost->rho_prime
                 : 4.0 * spec.exact_cost->rates.cwiseAbs().maxCoeff())
          : 0.0;

  const int nq = spec.bits_per_holding;
  for (int t = 0; t < spec.num_steps; ++t) {
    const auto& sig = spec.sigma[static_cast<std::size_t>(t)];
    for (int n = 0; n < spec.num_assets; ++n) {
      for (int q = 0; q < nq; ++q) {
        const int i = layout.x_index(n, t, q);
        add(i, i, -spec.mu(n, t) * weight(q));  // returns
        add(i, i, -2.0 * spec.rho * weight(q)); // budget, linear part
        // risk and budget quadratic parts
        for (int m = 0; m < spec.num_assets; ++m)
          for (int r = 0; r < nq; ++r) {
            const int j = layout.x_index(m, t, r);
            const double wq = weight(q) * weight(r);
            if (j < i) continue;  // count each unordered pair once
            const double scale = (j == i) ? 1.0 : 2.0;
            add(i, j, scale * (0.5 * spec.gamma * sig(n, m) + spec.rho) * wq);
          }
      }
    }
    out.offset += spec.rho;  // budget constant

    for (int n = 0; n < spec.num_assets; ++n) {
      if (!spec.exact_cost) {
        // parabolic transaction costs lambda_n (w_t - w_{t-1})^2
        const double l = lam(n);
        if (l != 0.0) {
          for (int q = 0; q < nq; ++q) {
            const int i = layout.x_index(n, t, q);
            for (int r = q; r < nq; ++r) {
              const int j = layout.x_index(n, t, r);
              const double scale = (r == q) ? 1.0 : 2.0;
              add(i, j, scale * l * weight(q) * weight(r));
            }
            if (t == 0) {
              add(i, i, -2.0 * l * prev(n) * weight(q));
            } else {
              for (int r = 0; r < nq; ++r)
                add(layout.x_index(n, t - 1, r), i,
                    -2.0 * l * weight(q) * weight(r));
            }
          }
          if (t == 0) out.offset += l * prev(n) * prev(n);
          if (t > 0) {
            for (int q = 0; q < nq; ++q) {
              const int i = layout.x_index(n, t - 1, q);
              for (int r = q; r < nq; ++r) {
                const int j = layout.x_index(n, t - 1, r);
                const double scale = (r == q) ? 1.0 : 2.0;
                add(i, j, scale * l * weight(q) * weight(r));
              }
            }
          }
        }
      } else {
        // exact linear costs: nu dw (1 - 2y) + rho' dw y
        //                   = nu dw + (rho' - 2 nu) dw y
        const double nu = spec.exact_cost->rates(n, t);
        const double c = rho_prime - 2.0 * nu;
        const int yi = layout.y_index(n, t);
        for (int q = 0; q < nq; ++q) {
          const int i = layout.x_index(n, t, q);
          add(i, i, nu * weight(q));
          add(i, yi, c * weight(q));
          if (t == 0) continue;
          const int ip = layout.x_index(n, t - 1, q);
          add(ip, ip, -nu * weight(q));
          add(ip, yi, -c * weight(q));
        }
        if (t == 0) {
          out.offset += -nu * prev(n);
          add(yi, yi, -c * prev(n));
        }
      }

      if (spec.market_impact) {
        // - L (w_t - w_{t-1}) w_t
        const double g = spec.market_impact->coefficients(n, t);
        if (g != 0.0) {
          for (int q = 0; q < nq; ++q) {
            const int i = layout.x_index(n, t, q);
            for (int r = q; r < nq; ++r) {
              const int j = layout.x_index(n, t, r);
              const double scale = (r == q) ? 1.0 : 2.0;
              add(i, j, -scale * g * weight(q) * weight(r));
            }
            if (t == 0) {
              add(i, i, g * prev(n) * weight(q));
            } else {
              for (int r = 0; r < nq; ++r)
                add(layout.x_index(n, t - 1, r), i,
                    g * weight(q) * weight(r));
            }
          }
        }
      }
    }
  }
  return out;
}

/// Single-step restriction h_t (returns, risk and budget penalty only; no
/// inter-step coupling), used by the low-energy-subspace strategy.
inline ProblemSpec single_step_spec(const ProblemSpec& spec, int t) {
  ProblemSpec out;
  out.num_assets = spec.num_assets;
  out.num_steps = 1;
  out.bits_per_holding = spec.bits_per_holding;
  out.total_investment = spec.total_investment;
  out.gamma = spec.gamma;
  out.lambda = 0.0;
  out.rho = spec.rho;
  out.mu = spec.mu.col(t);
  out.sigma = {spec.sigma[static_cast<std::size_t>(t)]};
  return out;
}

}  // namespace portopt
