#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "portopt/common.hpp"

namespace portopt {

/// Binary decision variables x_{n,t,q}: N_q bits per holding, per asset and
/// rebalancing step. Stored flat in step-major order (all bits of step t are
/// contiguous) so that couplings of the compiled problem stay short-ranged.
struct BitTrajectory {
  int num_assets = 0;
  int num_steps = 0;
  int bits_per_holding = 0;
  std::vector<std::uint8_t> bits;

  BitTrajectory() = default;
  BitTrajectory(int n, int n_t, int n_q)
      : num_assets(n),
        num_steps(n_t),
        bits_per_holding(n_q),
        bits(static_cast<std::size_t>(n) * n_t * n_q, 0) {}

  std::size_t flat_index(int n, int t, int q) const {
    return (static_cast<std::size_t>(t) * num_assets + n) * bits_per_holding +
           q;
  }

  std::uint8_t at(int n, int t, int q) const {
    return bits[flat_index(n, t, q)];
  }
  void set(int n, int t, int q, std::uint8_t v) {
    bits[flat_index(n, t, q)] = v;
  }

  /// Bit string in (n-major, t, q-minor) order, the serialization order of
  /// solution files.
  std::string bit_string_nmajor() const {
    std::string s;
    s.reserve(bits.size());
    for (int n = 0; n < num_assets; ++n)
      for (int t = 0; t < num_steps; ++t)
        for (int q = 0; q < bits_per_holding; ++q)
          s.push_back(at(n, t, q) ? '1' : '0');
    return s;
  }
};

/// Holdings per asset and step. `normalized` distinguishes fractions of the
/// total investment K from integer unit counts.
struct HoldingsTrajectory {
  Eigen::MatrixXd holdings;  // assets x steps
  bool normalized = false;

  HoldingsTrajectory() = default;
  HoldingsTrajectory(Eigen::MatrixXd h, bool norm)
      : holdings(std::move(h)), normalized(norm) {}

  int num_assets() const { return static_cast<int>(holdings.rows()); }
  int num_steps() const { return static_cast<int>(holdings.cols()); }
};

}  // namespace portopt
