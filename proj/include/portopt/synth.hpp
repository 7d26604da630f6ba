#pragma once

#include <cmath>
#include <cstdio>
#include <ostream>
#include <vector>

#include "portopt/common.hpp"
#include "portopt/dates.hpp"
#include "portopt/market_data.hpp"

namespace portopt {

/// Seeded geometric-random-walk price generator with a one-factor
/// cross-correlation structure, so every experiment runs without any
/// proprietary dataset.
struct SynthConfig {
  int num_assets = 8;
  int num_days = 260;  // business days
  std::uint64_t seed = 0;
  double correlation = 0.3;  // in [0, 1): shared-factor weight
  double drift_mean = 0.0004;
  double drift_spread = 0.0008;
  double vol_min = 0.005;
  double vol_max = 0.02;
  Date start{2018, 1, 2};
};

inline PricePanel generate_prices(const SynthConfig& config) {
  if (config.num_assets < 1 || config.num_days < 2)
    throw ConfigError("synthetic panel needs >= 1 asset and >= 2 days");
  if (config.correlation < 0.0 || config.correlation >= 1.0)
    throw ConfigError("synthetic correlation must be in [0, 1)");

  Rng rng(config.seed);
  std::vector<double> drift(static_cast<std::size_t>(config.num_assets));
  std::vector<double> vol(static_cast<std::size_t>(config.num_assets));
  for (int n = 0; n < config.num_assets; ++n) {
    drift[static_cast<std::size_t>(n)] =
        config.drift_mean + config.drift_spread * rng.gaussian();
    vol[static_cast<std::size_t>(n)] =
        rng.uniform(config.vol_min, config.vol_max);
  }

  PricePanel panel;
  for (int n = 0; n < config.num_assets; ++n)
    panel.asset_ids.push_back("A" + std::to_string(n));
  Date d = config.start;
  if (!d.is_business_day()) d = d.next_business_day();
  for (int t = 0; t < config.num_days; ++t) {
    panel.dates.push_back(d);
    d = d.next_business_day();
  }

  const double shared = std::sqrt(config.correlation);
  const double own = std::sqrt(1.0 - config.correlation);
  panel.prices.resize(config.num_assets, config.num_days);
  for (int n = 0; n < config.num_assets; ++n)
    panel.prices(n, 0) = 50.0 + 100.0 * rng.uniform();
  for (int t = 1; t < config.num_days; ++t) {
    const double factor = rng.gaussian();
    for (int n = 0; n < config.num_assets; ++n) {
      const double eps = shared * factor + own * rng.gaussian();
      const double r = drift[static_cast<std::size_t>(n)] +
                       vol[static_cast<std::size_t>(n)] * eps;
      panel.prices(n, t) = panel.prices(n, t - 1) * std::exp(r);
    }
  }
  panel.validate();
  return panel;
}

inline void write_prices_csv(const PricePanel& panel, std::ostream& os) {
  os << "date";
  for (const auto& id : panel.asset_ids) os << "," << id;
  os << "\n";
  char buf[32];
  for (int t = 0; t < panel.num_dates(); ++t) {
    os << panel.dates[static_cast<std::size_t>(t)].iso();
    for (int n = 0; n < panel.num_assets(); ++n) {
      std::snprintf(buf, sizeof(buf), "%.10g", panel.prices(n, t));
      os << "," << buf;
    }
    os << "\n";
  }
}

}  // namespace portopt
