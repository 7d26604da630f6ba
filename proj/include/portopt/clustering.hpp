#pragma once

#include <Eigen/Dense>
#include <json.hpp>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "portopt/common.hpp"
#include "portopt/market_data.hpp"
#include "portopt/trajectory.hpp"

namespace portopt {

/// Agglomerative clustering result. `merge_tree` follows the usual
/// convention: initial clusters are 0..N-1 and the merge at position s
/// creates cluster N+s.
struct Clustering {
  int k = 0;
  std::vector<int> assignment;  // asset -> cluster in 0..k-1
  struct Merge {
    int left = 0;
    int right = 0;
    double distance = 0.0;
  };
  std::vector<Merge> merge_tree;
  std::vector<double> mean_variance_curve;  // index c -> curve for c+1 clusters

  int num_assets() const { return static_cast<int>(assignment.size()); }

  std::vector<std::vector<int>> members() const {
    std::vector<std::vector<int>> out(static_cast<std::size_t>(k));
    for (int a = 0; a < num_assets(); ++a)
      out[static_cast<std::size_t>(assignment[static_cast<std::size_t>(a)])]
          .push_back(a);
    return out;
  }
};

namespace detail {

/// Cut the merge sequence so that exactly k clusters remain; labels are
/// assigned in order of first appearance for determinism.
inline std::vector<int> cut_tree(const std::vector<Clustering::Merge>& merges,
                                 int n, int k) {
  std::vector<int> parent(static_cast<std::size_t>(n + merges.size()));
  for (std::size_t i = 0; i < parent.size(); ++i)
    parent[i] = static_cast<int>(i);
  auto find = [&](int x) {
    while (parent[static_cast<std::size_t>(x)] != x)
      x = parent[static_cast<std::size_t>(x)] =
          parent[static_cast<std::size_t>(parent[static_cast<std::size_t>(x)])];
    return x;
  };
  for (int s = 0; s < n - k; ++s) {
    const auto& m = merges[static_cast<std::size_t>(s)];
    parent[static_cast<std::size_t>(find(m.left))] = n + s;
    parent[static_cast<std::size_t>(find(m.right))] = n + s;
  }
  std::vector<int> label(static_cast<std::size_t>(n), -1);
  std::vector<int> root_label;
  std::vector<int> roots;
  for (int a = 0; a < n; ++a) {
    const int r = find(a);
    int lab = -1;
    for (std::size_t i = 0; i < roots.size(); ++i)
      if (roots[i] == r) lab = root_label[i];
    if (lab < 0) {
      lab = static_cast<int>(roots.size());
      roots.push_back(r);
      root_label.push_back(lab);
    }
    label[static_cast<std::size_t>(a)] = lab;
  }
  return label;
}

/// Mean over clusters of the mean squared Euclidean distance of member
/// series to their cluster centroid series.
inline double mean_intracluster_variance(const Eigen::MatrixXd& trends,
                                         const std::vector<int>& label,
                                         int k) {
  double total = 0.0;
  for (int c = 0; c < k; ++c) {
    std::vector<int> members;
    for (int a = 0; a < static_cast<int>(label.size()); ++a)
      if (label[static_cast<std::size_t>(a)] == c) members.push_back(a);
    if (members.empty()) continue;
    Eigen::VectorXd centroid = Eigen::VectorXd::Zero(trends.cols());
    for (int a : members) centroid += trends.row(a).transpose();
    centroid /= static_cast<double>(members.size());
    double v = 0.0;
    for (int a : members)
      v += (trends.row(a).transpose() - centroid).squaredNorm();
    total += v / static_cast<double>(members.size());
  }
  return total / static_cast<double>(k);
}

}  // namespace detail

/// Agglomerative hierarchical clustering of trend series with Euclidean
/// distance and average linkage. With k unset, picks the smallest k in [2, 8]
/// whose relative decrease in mean intra-cluster variance from k to k+1 drops
/// below 10% (elbow rule).
inline Clustering cluster_assets(const Eigen::MatrixXd& trends,
                                 std::optional<int> k = std::nullopt) {
  const int n = static_cast<int>(trends.rows());
  if (n < 2) throw DataError("clustering needs at least 2 assets");
  if (k && (*k < 1 || *k > n))
    throw ConfigError("cluster count " + std::to_string(*k) +
                      " outside [1, " + std::to_string(n) + "]");

  // Lance-Williams update for average linkage on a dense distance matrix.
  Eigen::MatrixXd dist(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      dist(i, j) = (trends.row(i) - trends.row(j)).norm();

  Clustering out;
  std::vector<int> active_id(static_cast<std::size_t>(n));
  std::vector<int> size(static_cast<std::size_t>(n), 1);
  std::vector<bool> alive(static_cast<std::size_t>(n), true);
  for (int i = 0; i < n; ++i) active_id[static_cast<std::size_t>(i)] = i;

  for (int step = 0; step < n - 1; ++step) {
    int bi = -1, bj = -1;
    double best = std::numeric_limits<double>::infinity();
    for (int i = 0; i < n; ++i) {
      if (!alive[static_cast<std::size_t>(i)]) continue;
      for (int j = i + 1; j < n; ++j) {
        if (!alive[static_cast<std::size_t>(j)]) continue;
        if (dist(i, j) < best) {
          best = dist(i, j);
          bi = i;
          bj = j;
        }
      }
    }
    out.merge_tree.push_back({active_id[static_cast<std::size_t>(bi)],
                              active_id[static_cast<std::size_t>(bj)], best});
    const double si = size[static_cast<std::size_t>(bi)];
    const double sj = size[static_cast<std::size_t>(bj)];
    for (int m = 0; m < n; ++m) {
      if (!alive[static_cast<std::size_t>(m)] || m == bi || m == bj) continue;
      const double d = (si * dist(bi, m) + sj * dist(bj, m)) / (si + sj);
      dist(bi, m) = d;
      dist(m, bi) = d;
    }
    alive[static_cast<std::size_t>(bj)] = false;
    size[static_cast<std::size_t>(bi)] = static_cast<int>(si + sj);
    active_id[static_cast<std::size_t>(bi)] = n + step;
  }

  const int curve_max = std::min(n, 10);
  out.mean_variance_curve.resize(static_cast<std::size_t>(curve_max));
  for (int c = 1; c <= curve_max; ++c) {
    const auto label = detail::cut_tree(out.merge_tree, n, c);
    out.mean_variance_curve[static_cast<std::size_t>(c - 1)] =
        detail::mean_intracluster_variance(trends, label, c);
  }

  int chosen;
  if (k) {
    chosen = *k;
  } else {
    const int lo = 2;
    const int hi = std::min(8, n);
    chosen = hi;
    for (int c = lo; c < hi; ++c) {
      const double vk = out.mean_variance_curve[static_cast<std::size_t>(c - 1)];
      const double vk1 = out.mean_variance_curve[static_cast<std::size_t>(c)];
      if (vk <= 0.0 || (vk - vk1) / vk < 0.10) {
        chosen = c;
        break;
      }
    }
  }
  out.k = chosen;
  out.assignment = detail::cut_tree(out.merge_tree, n, chosen);
  return out;
}

/// Replace assets by cluster aggregates: cluster return is the mean of member
/// returns, cluster covariance block the mean of member-pair entries.
inline std::pair<ReturnsPanel, CovariancePanel> clusterize(
    const ReturnsPanel& returns, const CovariancePanel& cov,
    const Clustering& clustering) {
  if (clustering.num_assets() != returns.num_assets())
    throw DataError("clustering does not cover the returns panel");
  const auto members = clustering.members();
  const int k = clustering.k;

  ReturnsPanel cret;
  cret.periods = returns.periods;
  cret.dates = returns.dates;
  for (int c = 0; c < k; ++c)
    cret.asset_ids.push_back("cluster_" + std::to_string(c));
  cret.values.resize(k, returns.values.cols());
  for (int c = 0; c < k; ++c) {
    Eigen::RowVectorXd acc = Eigen::RowVectorXd::Zero(returns.values.cols());
    for (int a : members[static_cast<std::size_t>(c)])
      acc += returns.values.row(a);
    cret.values.row(c) =
        acc / static_cast<double>(members[static_cast<std::size_t>(c)].size());
  }

  CovariancePanel ccov;
  ccov.periods = cov.periods;
  ccov.dates = cov.dates;
  for (const auto& m : cov.matrices) {
    Eigen::MatrixXd block(k, k);
    for (int c = 0; c < k; ++c)
      for (int d = 0; d < k; ++d) {
        double acc = 0.0;
        for (int a : members[static_cast<std::size_t>(c)])
          for (int b : members[static_cast<std::size_t>(d)]) acc += m(a, b);
        block(c, d) =
            acc / static_cast<double>(
                      members[static_cast<std::size_t>(c)].size() *
                      members[static_cast<std::size_t>(d)].size());
      }
    block = ((block + block.transpose()) / 2.0).eval();
    ccov.matrices.push_back(std::move(block));
  }
  return {std::move(cret), std::move(ccov)};
}

/// Distribute each cluster holding equally among its member assets. The last
/// member takes the remainder so the per-period total is conserved exactly in
/// floating point.
inline HoldingsTrajectory unfold(const HoldingsTrajectory& clustered,
                                 const Clustering& clustering) {
  if (clustered.num_assets() != clustering.k)
    throw DataError("trajectory dimensions do not match clustering");
  const auto members = clustering.members();
  const int steps = clustered.num_steps();
  Eigen::MatrixXd out =
      Eigen::MatrixXd::Zero(clustering.num_assets(), steps);
  for (int c = 0; c < clustering.k; ++c) {
    const auto& mem = members[static_cast<std::size_t>(c)];
    for (int t = 0; t < steps; ++t) {
      const double total = clustered.holdings(c, t);
      const double share = total / static_cast<double>(mem.size());
      double used = 0.0;
      for (std::size_t i = 0; i + 1 < mem.size(); ++i) {
        out(mem[i], t) = share;
        used += share;
      }
      out(mem.back(), t) = mem.size() > 1 ? total - used : total;
    }
  }
  return {std::move(out), clustered.normalized};
}

/// Report format: {k, assignment: {asset: cluster}, merges: [[i, j, dist]...],
/// mean_variance_curve: [...]}.
inline nlohmann::json clustering_report(
    const Clustering& clustering, const std::vector<std::string>& asset_ids) {
  nlohmann::json assignment = nlohmann::json::object();
  for (std::size_t a = 0; a < asset_ids.size(); ++a)
    assignment[asset_ids[a]] = clustering.assignment[a];
  nlohmann::json merges = nlohmann::json::array();
  for (const auto& m : clustering.merge_tree)
    merges.push_back({m.left, m.right, m.distance});
  return nlohmann::json{{"k", clustering.k},
                        {"assignment", assignment},
                        {"merges", merges},
                        {"mean_variance_curve", clustering.mean_variance_curve}};
}

}  // namespace portopt
