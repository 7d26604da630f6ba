#pragma once

#include <Eigen/Dense>
#include <Eigen/SVD>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "portopt/common.hpp"
#include "portopt/qubo.hpp"
#include "portopt/solvers/solution_set.hpp"

namespace portopt {

/// Matrix product state over binary sites with a bounded bond dimension.
/// The state is kept mixed-canonical: sites left of the orthogonality center
/// are left-canonical, sites right of it right-canonical, so the global norm
/// is the Frobenius norm of the center tensor.
class Mps {
 public:
  using Site = std::array<Eigen::MatrixXd, 2>;  // [physical] -> left x right

  Mps(int num_sites, int max_bond)
      : max_bond_(max_bond), sites_(static_cast<std::size_t>(num_sites)) {
    if (num_sites < 1) throw ConfigError("MPS needs at least one site");
    if (max_bond < 1) throw ConfigError("MPS bond dimension must be >= 1");
    const double amp = 1.0 / std::sqrt(2.0);
    for (auto& s : sites_) {
      s[0] = Eigen::MatrixXd::Constant(1, 1, amp);
      s[1] = Eigen::MatrixXd::Constant(1, 1, amp);
    }
    center_ = 0;
  }

  int num_sites() const { return static_cast<int>(sites_.size()); }
  int center() const { return center_; }
  double discarded_weight() const { return discarded_weight_; }

  /// Frobenius norm of the center tensor == global norm of the state.
  double norm() const {
    const Site& c = sites_[static_cast<std::size_t>(center_)];
    return std::sqrt(c[0].squaredNorm() + c[1].squaredNorm());
  }

  std::vector<int> bond_dims() const {
    std::vector<int> out;
    for (std::size_t k = 0; k + 1 < sites_.size(); ++k)
      out.push_back(static_cast<int>(sites_[k][0].cols()));
    return out;
  }

  void canonize_to(int target) {
    while (center_ < target) move_center_right();
    while (center_ > target) move_center_left();
  }

  /// Multiply the amplitude of every string with x_i = 1 by `factor`.
  void apply_single_factor(int i, double factor) {
    check_factor(factor);
    canonize_to(i);
    sites_[static_cast<std::size_t>(i)][1] *= factor;
    renormalize_center();
  }

  /// Multiply the amplitude of every string with x_i = x_j = 1 by `factor`
  /// (i < j). Implemented as a bond-2 operator chain spanning the
  /// intervening sites, followed by an SVD re-truncation of the span.
  void apply_pair_factor(int i, int j, double factor) {
    check_factor(factor);
    if (i >= j) throw ConfigError("pair factor needs i < j");
    apply_pair_chain(i, {{j, factor}});
  }

  /// Applies prod_j exp-factors for the pairs (i, j) in one bond-2 chain:
  /// the amplitude of a string picks up factor_j for every set partner bit
  /// j when x_i = 1. Exactly the composition of the individual pair factors
  /// (diagonal operators commute) with a single re-truncation of the span.
  void apply_pair_chain(int i,
                        const std::vector<std::pair<int, double>>& partners) {
    if (partners.empty()) return;
    const int j_max = partners.back().first;
    for (std::size_t p = 0; p < partners.size(); ++p) {
      check_factor(partners[p].second);
      if (partners[p].first <= i || (p > 0 && partners[p].first <= partners[p - 1].first))
        throw ConfigError("pair chain partners must be ascending and > i");
    }
    canonize_to(i);

    // absorb the operator chain into the span's site tensors
    {
      Site& s = sites_[static_cast<std::size_t>(i)];
      for (int x = 0; x < 2; ++x) {
        const Eigen::Index l = s[x].rows(), r = s[x].cols();
        Eigen::MatrixXd b = Eigen::MatrixXd::Zero(l, 2 * r);
        b.block(0, x * r, l, r) = s[x];
        s[x] = std::move(b);
      }
    }
    std::size_t next = 0;
    for (int k = i + 1; k < j_max; ++k) {
      double factor = 1.0;
      if (next < partners.size() && partners[next].first == k)
        factor = partners[next++].second;
      Site& s = sites_[static_cast<std::size_t>(k)];
      for (int x = 0; x < 2; ++x) {
        const Eigen::Index l = s[x].rows(), r = s[x].cols();
        Eigen::MatrixXd b = Eigen::MatrixXd::Zero(2 * l, 2 * r);
        b.block(0, 0, l, r) = s[x];
        b.block(l, r, l, r) = (x == 1 ? factor : 1.0) * s[x];
        s[x] = std::move(b);
      }
    }
    {
      const double factor = partners.back().second;
      Site& s = sites_[static_cast<std::size_t>(j_max)];
      for (int x = 0; x < 2; ++x) {
        const Eigen::Index l = s[x].rows(), r = s[x].cols();
        Eigen::MatrixXd b(2 * l, r);
        b.topRows(l) = s[x];
        b.bottomRows(l) = (x == 1 ? factor : 1.0) * s[x];
        s[x] = std::move(b);
      }
    }

    // restore right-canonical form on the span (no truncation) ...
    for (int k = j_max; k > i; --k) {
      const Eigen::MatrixXd lfac = right_canonize_site(k);
      Site& pv = sites_[static_cast<std::size_t>(k - 1)];
      pv[0] = pv[0] * lfac;
      pv[1] = pv[1] * lfac;
    }
    // ... then truncate every bond of the span left to right
    for (int k = i; k < j_max; ++k) truncate_bond_right(k);
    renormalize_center();
  }

  /// Amplitude of one basis string: the chain contraction of the selected
  /// physical slices.
  double amplitude(std::span<const std::uint8_t> bits) const {
    Eigen::RowVectorXd v = Eigen::RowVectorXd::Ones(1);
    for (std::size_t k = 0; k < sites_.size(); ++k)
      v = v * sites_[k][bits[k] ? 1 : 0];
    return v(0);
  }

  /// Greedy candidate: conditional argmax per site, left to right.
  /// Requires (and establishes) the center at site 0.
  std::vector<std::uint8_t> argmax_decode() {
    canonize_to(0);
    return decode_impl(nullptr);
  }

  /// One stochastic draw from the |amplitude|^2 distribution.
  std::vector<std::uint8_t> sample(Rng& rng) {
    canonize_to(0);
    return decode_impl(&rng);
  }

 private:
  static void check_factor(double factor) {
    if (!std::isfinite(factor))
      throw SolverError(
          "imaginary-time factor overflowed; shrink the tau steps");
  }

  void renormalize_center() {
    Site& c = sites_[static_cast<std::size_t>(center_)];
    const double n = std::sqrt(c[0].squaredNorm() + c[1].squaredNorm());
    if (!(n > 1e-290) || !std::isfinite(n))
      throw SolverError(
          "MPS norm underflowed during imaginary-time evolution; "
          "shrink the tau steps");
    c[0] /= n;
    c[1] /= n;
  }

  void move_center_right() {
    Site& s = sites_[static_cast<std::size_t>(center_)];
    const Eigen::Index l = s[0].rows(), r = s[0].cols();
    Eigen::MatrixXd stacked(2 * l, r);
    stacked.topRows(l) = s[0];
    stacked.bottomRows(l) = s[1];
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(stacked);
    const Eigen::Index rank = std::min(2 * l, r);
    const Eigen::MatrixXd q =
        qr.householderQ() * Eigen::MatrixXd::Identity(2 * l, rank);
    const Eigen::MatrixXd rmat = qr.matrixQR()
                                     .topRows(rank)
                                     .triangularView<Eigen::Upper>();
    s[0] = q.topRows(l);
    s[1] = q.bottomRows(l);
    Site& nx = sites_[static_cast<std::size_t>(center_ + 1)];
    nx[0] = rmat * nx[0];
    nx[1] = rmat * nx[1];
    ++center_;
  }

  void move_center_left() {
    const Eigen::MatrixXd lmat =
        right_canonize_site(center_);
    Site& pv = sites_[static_cast<std::size_t>(center_ - 1)];
    pv[0] = pv[0] * lmat;
    pv[1] = pv[1] * lmat;
    --center_;
  }

  /// LQ-factorizes site k in place, leaving it right-canonical, and returns
  /// the L factor to absorb into the site on the left.
  Eigen::MatrixXd right_canonize_site(int k) {
    Site& s = sites_[static_cast<std::size_t>(k)];
    const Eigen::Index l = s[0].rows(), r = s[0].cols();
    Eigen::MatrixXd wide(l, 2 * r);
    wide.leftCols(r) = s[0];
    wide.rightCols(r) = s[1];
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(wide.transpose());
    const Eigen::Index rank = std::min(l, 2 * r);
    const Eigen::MatrixXd q =
        (qr.householderQ() * Eigen::MatrixXd::Identity(2 * r, rank))
            .transpose();
    const Eigen::MatrixXd lfac = Eigen::MatrixXd(qr.matrixQR()
                                                     .topRows(rank)
                                                     .triangularView<Eigen::Upper>())
                                     .transpose();
    s[0] = q.leftCols(r);
    s[1] = q.rightCols(r);
    return lfac;  // l x rank
  }

  /// SVD-truncates the bond between `k` and `k+1` to the bond cap; moves the
  /// center from k to k+1. Assumes mixed-canonical form around k.
  void truncate_bond_right(int k) {
    Site& s = sites_[static_cast<std::size_t>(k)];
    const Eigen::Index l = s[0].rows(), r = s[0].cols();
    Eigen::MatrixXd stacked(2 * l, r);
    stacked.topRows(l) = s[0];
    stacked.bottomRows(l) = s[1];
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(
        stacked, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Eigen::VectorXd& sv = svd.singularValues();
    const double total = sv.squaredNorm();
    Eigen::Index keep = std::min<Eigen::Index>(sv.size(), max_bond_);
    // drop numerically-zero directions so product states stay bond-1
    while (keep > 1 && sv(keep - 1) <= 1e-14 * sv(0)) --keep;
    double kept = 0.0;
    for (Eigen::Index a = 0; a < keep; ++a) kept += sv(a) * sv(a);
    if (total > 0.0) discarded_weight_ += (total - kept) / total;

    const Eigen::MatrixXd u = svd.matrixU().leftCols(keep);
    s[0] = u.topRows(l);
    s[1] = u.bottomRows(l);
    const Eigen::MatrixXd carry =
        sv.head(keep).asDiagonal() * svd.matrixV().leftCols(keep).transpose();
    Site& nx = sites_[static_cast<std::size_t>(k + 1)];
    nx[0] = carry * nx[0];
    nx[1] = carry * nx[1];
    center_ = k + 1;
  }

  std::vector<std::uint8_t> decode_impl(Rng* rng) {
    std::vector<std::uint8_t> out(sites_.size(), 0);
    Eigen::RowVectorXd v = Eigen::RowVectorXd::Ones(1);
    for (std::size_t k = 0; k < sites_.size(); ++k) {
      const Site& s = sites_[k];
      const Eigen::RowVectorXd w0 = v * s[0];
      const Eigen::RowVectorXd w1 = v * s[1];
      const double p0 = w0.squaredNorm();
      const double p1 = w1.squaredNorm();
      int x;
      if (rng) {
        const double total = p0 + p1;
        x = (total > 0.0 && rng->uniform() * total < p1) ? 1 : 0;
      } else {
        x = p1 > p0 ? 1 : 0;
      }
      out[k] = static_cast<std::uint8_t>(x);
      v = x ? w1 : w0;
      const double nv = v.norm();
      if (nv > 0.0) v /= nv;
    }
    return out;
  }

  int max_bond_;
  int center_ = 0;
  double discarded_weight_ = 0.0;
  std::vector<Site> sites_;
};

struct MpsOptions {
  int bond_dim = 16;
  /// One entry per sweep; empty selects the default schedule: 10 sweeps at
  /// 0.05/sigma_E then 10 at 0.5/sigma_E, with sigma_E the sample standard
  /// deviation of the energies of 1000 random bit strings.
  std::vector<double> tau_steps;
  int samples = 64;
  std::uint64_t seed = 0;
  std::function<bool(int)> keep_going;  // checked once per sweep
};

struct MpsDiagnostics {
  std::vector<double> sweep_norms;
  double discarded_weight = 0.0;
  std::vector<int> final_bond_dims;
};

/// Sample standard deviation of the energies of random bit strings; the
/// scale-free reference for imaginary-time steps and temperatures.
inline double random_energy_std(const QuboMatrix& qubo, std::uint64_t seed,
                                int samples = 1000) {
  Rng rng(mix_seed(seed, 0x7A0));
  const int n = qubo.size();
  std::vector<std::uint8_t> bits(static_cast<std::size_t>(n));
  double sum = 0.0, sum2 = 0.0;
  for (int s = 0; s < samples; ++s) {
    for (auto& b : bits) b = rng.coin() ? 1 : 0;
    const double e = qubo.energy(bits);
    sum += e;
    sum2 += e * e;
  }
  const double var =
      std::max(0.0, (sum2 - sum * sum / samples) / (samples - 1));
  return std::max(std::sqrt(var), 1e-12);
}

inline std::vector<double> default_tau_schedule(const QuboMatrix& qubo,
                                                std::uint64_t seed) {
  const double scale = random_energy_std(qubo, seed);
  std::vector<double> taus;
  for (int s = 0; s < 10; ++s) taus.push_back(0.05 / scale);
  for (int s = 0; s < 10; ++s) taus.push_back(0.5 / scale);
  return taus;
}

/// Imaginary-time evolution over an MPS. The objective is diagonal in the
/// computational basis, so exp(-tau H) factorizes exactly into commuting
/// single-site and pair factors; each sweep applies all factors for its tau
/// with immediate bond re-truncation, then candidates are read out by
/// conditional argmax plus stochastic draws and re-scored exactly.
inline SolutionSet solve_mps(const QuboMatrix& qubo, const MpsOptions& options,
                             MpsDiagnostics* diagnostics = nullptr) {
  if (options.bond_dim < 1)
    throw ConfigError("MPS bond dimension must be >= 1");
  const auto start = std::chrono::steady_clock::now();
  const int n = qubo.size();
  const std::vector<double> taus = options.tau_steps.empty()
                                       ? default_tau_schedule(qubo, options.seed)
                                       : options.tau_steps;
  // pairs grouped by their left site: one operator chain per site and sweep
  std::vector<std::vector<std::pair<int, double>>> partners(
      static_cast<std::size_t>(n));
  for (const auto& c : qubo.couplings())
    partners[static_cast<std::size_t>(c.i)].emplace_back(c.j, c.weight);

  Mps mps(n, options.bond_dim);
  if (diagnostics) *diagnostics = {};
  int sweep = 0;
  std::vector<std::pair<int, double>> chain;
  for (const double tau : taus) {
    if (options.keep_going && !options.keep_going(sweep)) break;
    // ascending site order, each site's single factor right before its chain
    for (int i = 0; i < n; ++i) {
      const double qi = qubo.q(i, i);
      if (qi != 0.0) mps.apply_single_factor(i, std::exp(-tau * qi));
      if (partners[static_cast<std::size_t>(i)].empty()) continue;
      chain.clear();
      for (const auto& [j, w] : partners[static_cast<std::size_t>(i)])
        chain.emplace_back(j, std::exp(-tau * w));
      mps.apply_pair_chain(i, chain);
    }
    if (diagnostics) diagnostics->sweep_norms.push_back(mps.norm());
    ++sweep;
  }
  if (diagnostics) {
    diagnostics->discarded_weight = mps.discarded_weight();
    diagnostics->final_bond_dims = mps.bond_dims();
  }

  SolutionSet out;
  out.solver = "mps";
  out.seed = options.seed;
  out.layout = qubo.layout;
  out.iterations = sweep;

  std::vector<std::vector<std::uint8_t>> candidates;
  candidates.push_back(mps.argmax_decode());
  Rng rng(mix_seed(options.seed, 0xD7A));
  for (int s = 0; s < options.samples; ++s) candidates.push_back(mps.sample(rng));
  for (auto& c : candidates) out.entries.push_back({c, qubo.energy(c)});
  out.finalize();
  out.wall_time_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
          .count();
  return out;
}

}  // namespace portopt
