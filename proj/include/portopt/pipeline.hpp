#pragma once

#include <chrono>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "portopt/clustering.hpp"
#include "portopt/common.hpp"
#include "portopt/market_data.hpp"
#include "portopt/metrics.hpp"
#include "portopt/problem.hpp"
#include "portopt/qubo.hpp"
#include "portopt/serialize.hpp"
#include "portopt/solvers/annealing.hpp"
#include "portopt/solvers/exhaustive.hpp"
#include "portopt/solvers/mps.hpp"
#include "portopt/solvers/recombine.hpp"
#include "portopt/synth.hpp"

namespace portopt {

enum class ForecastMode { Realized, Lagged };

inline std::string to_string(ForecastMode m) {
  return m == ForecastMode::Realized ? "realized" : "lagged";
}

inline ForecastMode forecast_from_string(const std::string& s) {
  if (s == "realized") return ForecastMode::Realized;
  if (s == "lagged") return ForecastMode::Lagged;
  throw ConfigError("unknown forecast mode '" + s + "'");
}

/// Dataset profiles from the benchmarking setup; gamma = 1 and lambda = 1
/// throughout.
struct Profile {
  int num_assets;
  int num_steps;
  int bits_per_holding;
  long total_investment;
};

inline const std::map<std::string, Profile>& profiles() {
  static const std::map<std::string, Profile> table = {
      {"XS", {3, 2, 1, 2}},  {"S", {4, 5, 1, 3}},   {"M", {4, 7, 1, 3}},
      {"L", {8, 17, 2, 5}},  {"XL", {8, 29, 2, 10}}, {"XXL", {8, 53, 3, 15}},
  };
  return table;
}

/// Everything one experiment needs; flags > config file > profile defaults.
struct RunConfig {
  std::string input_path;
  std::string out_dir = "run";
  std::string profile = "custom";
  std::uint64_t seed = 0;

  // instance dimensions and hyperparameters (profile fills them when named)
  int num_assets = 0;
  int num_steps = 0;
  int bits_per_holding = 1;
  long total_investment = 1;
  double gamma = 1.0;
  double lambda = 1.0;
  double rho = -1.0;  // < 0: autoscale via default_rho

  ForecastMode forecast = ForecastMode::Realized;

  // preprocessing
  std::string date_start;  // optional ISO-8601 bounds
  std::string date_end;
  int cov_window = 20;
  bool filter_subaverage = false;
  bool cluster = false;
  int cluster_k = 0;  // 0: elbow rule
  double hp_smoothing = 129600.0;

  // solver selection and parameters
  std::string solver = "exhaustive";  // exhaustive|annealing|mps|recombine
  int top_k = 10;
  int exhaustive_max_bits = 24;
  bool budget_constrained = false;
  int anneal_restarts = 100;
  int anneal_sweeps = 2;
  double anneal_cooling = 0.95;
  int mps_bond_dim = 16;
  int mps_samples = 64;
  int recombine_k = 10;
  std::string recombine_inner = "exhaustive";

  void apply_profile() {
    if (profile == "custom") return;
    const auto it = profiles().find(profile);
    if (it == profiles().end())
      throw ConfigError("unknown profile '" + profile +
                        "' (use XS, S, M, L, XL, XXL or custom)");
    num_assets = it->second.num_assets;
    num_steps = it->second.num_steps;
    bits_per_holding = it->second.bits_per_holding;
    total_investment = it->second.total_investment;
    gamma = 1.0;
    lambda = 1.0;
  }
};

namespace detail {

inline nlohmann::json config_to_json(const RunConfig& c) {
  return nlohmann::json{
      {"input", c.input_path},
      {"out", c.out_dir},
      {"profile", c.profile},
      {"seed", c.seed},
      {"N", c.num_assets},
      {"N_t", c.num_steps},
      {"N_q", c.bits_per_holding},
      {"K", c.total_investment},
      {"gamma", c.gamma},
      {"lambda", c.lambda},
      {"rho", c.rho},
      {"forecast", to_string(c.forecast)},
      {"date_start", c.date_start},
      {"date_end", c.date_end},
      {"cov_window", c.cov_window},
      {"filter", c.filter_subaverage},
      {"cluster", c.cluster},
      {"cluster_k", c.cluster_k},
      {"hp_smoothing", c.hp_smoothing},
      {"solver", c.solver},
      {"top_k", c.top_k},
      {"exhaustive_max_bits", c.exhaustive_max_bits},
      {"budget_constrained", c.budget_constrained},
      {"anneal_restarts", c.anneal_restarts},
      {"anneal_sweeps", c.anneal_sweeps},
      {"anneal_cooling", c.anneal_cooling},
      {"mps_bond_dim", c.mps_bond_dim},
      {"mps_samples", c.mps_samples},
      {"recombine_k", c.recombine_k},
      {"recombine_inner", c.recombine_inner}};
}

inline void config_from_json(const nlohmann::json& j, RunConfig& c) {
  c.input_path = j.value("input", c.input_path);
  c.out_dir = j.value("out", c.out_dir);
  c.profile = j.value("profile", c.profile);
  c.seed = j.value("seed", c.seed);
  if (c.profile != "custom") c.apply_profile();
  c.num_assets = j.value("N", c.num_assets);
  c.num_steps = j.value("N_t", c.num_steps);
  c.bits_per_holding = j.value("N_q", c.bits_per_holding);
  c.total_investment = j.value("K", c.total_investment);
  c.gamma = j.value("gamma", c.gamma);
  c.lambda = j.value("lambda", c.lambda);
  c.rho = j.value("rho", c.rho);
  if (j.contains("forecast"))
    c.forecast = forecast_from_string(j["forecast"].get<std::string>());
  c.date_start = j.value("date_start", c.date_start);
  c.date_end = j.value("date_end", c.date_end);
  c.cov_window = j.value("cov_window", c.cov_window);
  c.filter_subaverage = j.value("filter", c.filter_subaverage);
  c.cluster = j.value("cluster", c.cluster);
  c.cluster_k = j.value("cluster_k", c.cluster_k);
  c.hp_smoothing = j.value("hp_smoothing", c.hp_smoothing);
  c.solver = j.value("solver", c.solver);
  c.top_k = j.value("top_k", c.top_k);
  c.exhaustive_max_bits = j.value("exhaustive_max_bits", c.exhaustive_max_bits);
  c.budget_constrained = j.value("budget_constrained", c.budget_constrained);
  c.anneal_restarts = j.value("anneal_restarts", c.anneal_restarts);
  c.anneal_sweeps = j.value("anneal_sweeps", c.anneal_sweeps);
  c.anneal_cooling = j.value("anneal_cooling", c.anneal_cooling);
  c.mps_bond_dim = j.value("mps_bond_dim", c.mps_bond_dim);
  c.mps_samples = j.value("mps_samples", c.mps_samples);
  c.recombine_k = j.value("recombine_k", c.recombine_k);
  c.recombine_inner = j.value("recombine_inner", c.recombine_inner);
}

/// Config files are JSON when they start with '{', key=value lines otherwise.
inline void load_config_file(const std::string& path, RunConfig& c) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file '" + path + "'");
  std::stringstream buffer;
  buffer << in.rdbuf();
  const std::string text = buffer.str();
  const auto first = text.find_first_not_of(" \t\r\n");
  nlohmann::json j;
  if (first != std::string::npos && text[first] == '{') {
    try {
      j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError(std::string("config JSON parse error: ") + e.what());
    }
  } else {
    j = nlohmann::json::object();
    std::istringstream lines(text);
    std::string line;
    int line_no = 0;
    while (std::getline(lines, line)) {
      ++line_no;
      const auto head = line.find_first_not_of(" \t\r");
      if (head == std::string::npos || line[head] == '#') continue;
      const auto eq = line.find('=');
      if (eq == std::string::npos)
        throw ConfigError("config line " + std::to_string(line_no) +
                          " is not key=value");
      auto trim = [](std::string s) {
        const auto b = s.find_first_not_of(" \t\r");
        const auto e = s.find_last_not_of(" \t\r");
        return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
      };
      const std::string key = trim(line.substr(0, eq));
      const std::string value = trim(line.substr(eq + 1));
      // typed keys get parsed, the rest stay strings
      try {
        if (value == "true" || value == "false")
          j[key] = value == "true";
        else if (value.find_first_not_of("+-0123456789") == std::string::npos &&
                 !value.empty())
          j[key] = std::stoll(value);
        else if (value.find_first_not_of("+-0123456789.eE") ==
                     std::string::npos &&
                 !value.empty())
          j[key] = std::stod(value);
        else
          j[key] = value;
      } catch (const std::exception&) {
        j[key] = value;
      }
    }
  }
  config_from_json(j, c);
}

struct StageTimer {
  std::map<std::string, double>& sink;
  std::string stage;
  std::chrono::steady_clock::time_point begin =
      std::chrono::steady_clock::now();
  ~StageTimer() {
    sink[stage] =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - begin)
            .count();
  }
};

inline void write_file(const std::filesystem::path& path,
                       const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write '" + path.string() + "'");
  out << content;
}

/// Exclusive lock file; one run per output directory.
class DirectoryLock {
 public:
  explicit DirectoryLock(const std::filesystem::path& dir)
      : path_(dir / "lock") {
    if (std::filesystem::exists(path_))
      throw ConfigError("output directory is locked by another run: " +
                        path_.string());
    std::ofstream out(path_);
    out << "locked\n";
  }
  ~DirectoryLock() {
    std::error_code ec;
    std::filesystem::remove(path_, ec);
  }

 private:
  std::filesystem::path path_;
};

}  // namespace detail

/// Preprocessed panels ready for instance assembly.
struct PreparedData {
  ReturnsPanel monthly;      // per asset or per cluster
  CovariancePanel covariance;
  std::vector<std::string> warnings;
  std::optional<Clustering> clustering;
  std::vector<std::string> asset_ids;  // ids before clustering
};

/// ingest + preprocess: returns monthly return and covariance panels over
/// assets (or clusters when clustering is on).
inline PreparedData prepare_data(const PricePanel& raw, const RunConfig& cfg) {
  PricePanel panel = raw;
  if (!cfg.date_start.empty() || !cfg.date_end.empty()) {
    const Date lo = cfg.date_start.empty() ? Date{1, 1, 1}
                                           : Date::parse(cfg.date_start);
    const Date hi = cfg.date_end.empty() ? Date{9999, 12, 31}
                                         : Date::parse(cfg.date_end);
    std::vector<std::size_t> keep;
    for (std::size_t t = 0; t < panel.dates.size(); ++t)
      if (!(panel.dates[t] < lo) && !(hi < panel.dates[t])) keep.push_back(t);
    if (keep.size() < 2)
      throw DataError("date range leaves fewer than 2 dates");
    PricePanel cut;
    cut.asset_ids = panel.asset_ids;
    cut.prices.resize(panel.prices.rows(),
                      static_cast<Eigen::Index>(keep.size()));
    for (std::size_t i = 0; i < keep.size(); ++i) {
      cut.dates.push_back(panel.dates[keep[i]]);
      cut.prices.col(static_cast<Eigen::Index>(i)) =
          panel.prices.col(static_cast<Eigen::Index>(keep[i]));
    }
    panel = std::move(cut);
  }

  PreparedData out;
  ReturnsPanel daily = log_returns(panel);

  if (cfg.filter_subaverage) {
    const auto kept = filter_assets(daily);
    if (kept.size() < daily.asset_ids.size())
      out.warnings.push_back("filter discarded " +
                             std::to_string(daily.asset_ids.size() -
                                            kept.size()) +
                             " sub-average assets");
    daily = select_assets(daily, kept);
  }

  auto monthly = aggregate_monthly(daily);
  auto cov = rolling_covariance(daily, cfg.cov_window);
  out.warnings.insert(out.warnings.end(), monthly.warnings.begin(),
                      monthly.warnings.end());
  out.warnings.insert(out.warnings.end(), cov.warnings.begin(),
                      cov.warnings.end());
  out.asset_ids = daily.asset_ids;

  if (cfg.cluster) {
    // trend = HP-smoothed cumulative log return, scale-free across assets
    Eigen::MatrixXd trends(daily.values.rows(), daily.values.cols());
    for (int n = 0; n < daily.values.rows(); ++n) {
      Eigen::VectorXd cumulative(daily.values.cols());
      double acc = 0.0;
      for (int t = 0; t < daily.values.cols(); ++t) {
        acc += daily.values(n, t);
        cumulative(t) = acc;
      }
      trends.row(n) = hp_filter(cumulative, cfg.hp_smoothing).transpose();
    }
    out.clustering = cluster_assets(
        trends, cfg.cluster_k > 0 ? std::optional<int>(cfg.cluster_k)
                                  : std::nullopt);
    auto [cret, ccov] = clusterize(monthly.panel, cov.panel, *out.clustering);
    out.monthly = std::move(cret);
    out.covariance = std::move(ccov);
  } else {
    out.monthly = std::move(monthly.panel);
    out.covariance = std::move(cov.panel);
  }
  return out;
}

/// Assembles the optimization instance: mu_t from the monthly returns
/// (realized or lagged by one month), Sigma_t from the covariance at the
/// month-end preceding step t (information available at rebalancing time).
inline ProblemSpec assemble_problem(const PreparedData& data,
                                    const RunConfig& cfg) {
  const int avail_assets = data.monthly.num_assets();
  if (avail_assets < cfg.num_assets)
    throw DataError("profile needs " + std::to_string(cfg.num_assets) +
                    " assets but only " + std::to_string(avail_assets) +
                    " are available after preprocessing");

  // month t is usable as a step when the previous month has a covariance
  std::map<std::string, int> cov_index;
  for (int i = 0; i < data.covariance.num_periods(); ++i)
    cov_index[data.covariance.periods[static_cast<std::size_t>(i)]] = i;
  std::vector<int> usable;
  for (int t = 1; t < data.monthly.num_periods(); ++t)
    if (cov_index.count(data.monthly.periods[static_cast<std::size_t>(t - 1)]))
      usable.push_back(t);
  if (static_cast<int>(usable.size()) < cfg.num_steps)
    throw DataError("profile needs " + std::to_string(cfg.num_steps) +
                    " rebalancing steps but only " +
                    std::to_string(usable.size()) +
                    " months are usable after preprocessing");

  ProblemSpec spec;
  spec.num_assets = cfg.num_assets;
  spec.num_steps = cfg.num_steps;
  spec.bits_per_holding = cfg.bits_per_holding;
  spec.total_investment = cfg.total_investment;
  spec.gamma = cfg.gamma;
  spec.lambda = cfg.lambda;
  spec.mu.resize(cfg.num_assets, cfg.num_steps);
  for (int s = 0; s < cfg.num_steps; ++s) {
    const int month = usable[static_cast<std::size_t>(s)];
    const int mu_month = cfg.forecast == ForecastMode::Realized ? month
                                                                : month - 1;
    for (int n = 0; n < cfg.num_assets; ++n)
      spec.mu(n, s) = data.monthly.values(n, mu_month);
    const int ci = cov_index.at(
        data.monthly.periods[static_cast<std::size_t>(month - 1)]);
    spec.sigma.push_back(
        data.covariance.matrices[static_cast<std::size_t>(ci)]
            .topLeftCorner(cfg.num_assets, cfg.num_assets));
  }
  spec.rho = cfg.rho >= 0.0 ? cfg.rho : default_rho(spec);
  spec.validate();
  return spec;
}

/// Runs the configured solver on a compiled instance.
inline SolutionSet dispatch_solver(const RunConfig& cfg, const ProblemSpec& spec,
                                   const QuboMatrix& qubo) {
  if (cfg.solver == "exhaustive") {
    ExhaustiveOptions opts;
    opts.max_bits = cfg.exhaustive_max_bits;
    opts.top_k = cfg.top_k;
    if (cfg.budget_constrained) {
      opts.mode = EnumerationMode::BudgetConstrained;
      opts.spec = &spec;
    }
    return solve_exhaustive(qubo, opts);
  }
  if (cfg.solver == "annealing") {
    AnnealSchedule sched = default_anneal_schedule(qubo, cfg.seed);
    sched.restarts = cfg.anneal_restarts;
    sched.sweeps_per_temperature = cfg.anneal_sweeps;
    sched.cooling = cfg.anneal_cooling;
    return solve_annealing(qubo, sched);
  }
  if (cfg.solver == "mps") {
    MpsOptions opts;
    opts.bond_dim = cfg.mps_bond_dim;
    opts.samples = cfg.mps_samples;
    opts.seed = cfg.seed;
    return solve_mps(qubo, opts);
  }
  if (cfg.solver == "recombine") {
    InnerSolver inner;
    inner.seed = cfg.seed;
    if (cfg.recombine_inner == "exhaustive") {
      inner.kind = InnerSolver::Kind::Exhaustive;
      inner.exhaustive.max_bits = cfg.exhaustive_max_bits;
    } else if (cfg.recombine_inner == "annealing") {
      inner.kind = InnerSolver::Kind::Annealing;
      inner.annealing.restarts = cfg.anneal_restarts;
      inner.annealing.sweeps_per_temperature = cfg.anneal_sweeps;
      inner.annealing.cooling = cfg.anneal_cooling;
      // temperature scale set per step from the step instance
      const QuboMatrix step0 = build_qubo(single_step_spec(spec, 0));
      const AnnealSchedule base = default_anneal_schedule(step0, cfg.seed);
      inner.annealing.initial_temperature = base.initial_temperature;
      inner.annealing.final_temperature = base.final_temperature;
    } else if (cfg.recombine_inner == "mps") {
      inner.kind = InnerSolver::Kind::Mps;
      inner.mps.bond_dim = cfg.mps_bond_dim;
      inner.mps.samples = cfg.mps_samples;
    } else {
      throw ConfigError("unknown inner solver '" + cfg.recombine_inner + "'");
    }
    return recombine(per_step_low_energy(spec, cfg.recombine_k, inner), spec);
  }
  throw ConfigError("unknown solver '" + cfg.solver +
                    "' (use exhaustive, annealing, mps or recombine)");
}

struct RunResult {
  std::filesystem::path out_dir;
  nlohmann::json manifest;
  SolutionSet solutions;
  ProblemSpec spec;
};

/// The whole experiment: ingest, preprocess, build, solve, score. Writes
/// problem.json, qubo.txt, solution.json, metrics tables, clustering report
/// (when clustering) and a manifest. Deterministic given (config, seed).
inline RunResult run(const RunConfig& cfg) {
  namespace fs = std::filesystem;
  if (cfg.input_path.empty()) throw ConfigError("run needs an input CSV");
  const fs::path dir(cfg.out_dir);
  fs::create_directories(dir);
  detail::DirectoryLock lock(dir);

  std::map<std::string, double> wall_times;
  std::vector<std::string> artifacts;

  PricePanel prices;
  {
    detail::StageTimer timer{wall_times, "ingest"};
    std::ifstream in(cfg.input_path);
    if (!in) throw DataError("cannot read input '" + cfg.input_path + "'");
    prices = load_prices(in);
  }

  PreparedData data;
  {
    detail::StageTimer timer{wall_times, "preprocess"};
    data = prepare_data(prices, cfg);
    if (data.clustering) {
      detail::write_file(dir / "clustering.json",
                         clustering_report(*data.clustering, data.asset_ids)
                                 .dump(2) +
                             "\n");
      artifacts.push_back("clustering.json");
    }
  }

  ProblemSpec spec;
  QuboMatrix qubo;
  std::string problem_bytes;
  {
    detail::StageTimer timer{wall_times, "build"};
    spec = assemble_problem(data, cfg);
    QuboBuildOptions opts;
    qubo = build_qubo(spec, opts);
    problem_bytes = problem_to_json(spec).dump(2) + "\n";
    detail::write_file(dir / "problem.json", problem_bytes);
    artifacts.push_back("problem.json");
    std::ostringstream qubo_text;
    qubo.export_text(qubo_text);
    detail::write_file(dir / "qubo.txt", qubo_text.str());
    artifacts.push_back("qubo.txt");
  }

  RunResult result;
  {
    detail::StageTimer timer{wall_times, "solve"};
    result.solutions = dispatch_solver(cfg, spec, qubo);
    detail::write_file(
        dir / "solution.json",
        solution_set_to_json(result.solutions, &spec, false).dump(2) + "\n");
    artifacts.push_back("solution.json");
  }

  {
    detail::StageTimer timer{wall_times, "score"};
    const auto rows = landscape_table(result.solutions, spec);
    std::ostringstream csv, text;
    landscape_csv(rows, csv);
    landscape_text(rows, text);
    detail::write_file(dir / "metrics.csv", csv.str());
    detail::write_file(dir / "metrics.txt", text.str());
    artifacts.push_back("metrics.csv");
    artifacts.push_back("metrics.txt");
  }

  nlohmann::json manifest{
      {"config", detail::config_to_json(cfg)},
      {"seed", cfg.seed},
      {"versions",
       {{"portopt", kVersion},
        {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." +
                      std::to_string(EIGEN_MAJOR_VERSION) + "." +
                      std::to_string(EIGEN_MINOR_VERSION)}}},
      {"fingerprint", to_hex(fnv1a64(problem_bytes))},
      {"n_total_bits", qubo.size()},
      {"solver", cfg.solver},
      {"profile", cfg.profile},
      {"wall_times_s", wall_times},
      {"solver_wall_time_s", result.solutions.wall_time_s},
      {"warnings", data.warnings},
      {"artifacts", artifacts}};
  detail::write_file(dir / "manifest.json", manifest.dump(2) + "\n");

  result.out_dir = dir;
  result.manifest = std::move(manifest);
  result.spec = spec;
  return result;
}

/// Cross-solver comparison of run directories. Every run of the same profile
/// must share the problem fingerprint; the grids have one row per solver and
/// one column per profile, blank where a solver has no run.
struct CompareTable {
  std::vector<std::string> methods;
  std::vector<std::string> datasets;
  // maps (method, dataset) -> value
  std::map<std::pair<std::string, std::string>, double> sharpe;
  std::map<std::pair<std::string, std::string>, double> profit_percent;
  std::map<std::pair<std::string, std::string>, double> wall_time_s;
};

inline CompareTable compare_runs(const std::vector<std::string>& dirs) {
  namespace fs = std::filesystem;
  CompareTable table;
  std::map<std::string, std::string> fingerprint_by_dataset;
  std::map<std::string, nlohmann::json> problem_by_dataset;

  for (const auto& d : dirs) {
    std::ifstream mf(fs::path(d) / "manifest.json");
    if (!mf) throw DataError("missing manifest in '" + d + "'");
    nlohmann::json manifest;
    mf >> manifest;
    std::ifstream pf(fs::path(d) / "problem.json");
    if (!pf) throw DataError("missing problem.json in '" + d + "'");
    std::stringstream pb;
    pb << pf.rdbuf();
    const std::string problem_bytes = pb.str();
    const std::string fingerprint = to_hex(fnv1a64(problem_bytes));
    if (manifest.value("fingerprint", "") != fingerprint)
      throw DataError("manifest fingerprint does not match problem.json in '" +
                      d + "'");

    const std::string dataset = manifest.value("profile", "custom");
    const std::string method = manifest.value("solver", "?");
    const auto it = fingerprint_by_dataset.find(dataset);
    if (it == fingerprint_by_dataset.end()) {
      fingerprint_by_dataset[dataset] = fingerprint;
      problem_by_dataset[dataset] = nlohmann::json::parse(problem_bytes);
    } else if (it->second != fingerprint) {
      // refuse, naming the top-level fields that differ
      const auto other = nlohmann::json::parse(problem_bytes);
      std::string fields;
      for (const auto& [key, value] : problem_by_dataset[dataset].items())
        if (!other.contains(key) || other[key] != value)
          fields += (fields.empty() ? "" : ", ") + key;
      if (fields.empty()) fields = "(formatting)";
      throw ConfigError("runs for dataset '" + dataset +
                        "' solve different problems; differing fields: " +
                        fields);
    }

    // score the best entry of the stored solution against the stored problem
    const ProblemSpec spec =
        problem_from_json(nlohmann::json::parse(problem_bytes));
    std::ifstream sf(fs::path(d) / "solution.json");
    if (!sf) throw DataError("missing solution.json in '" + d + "'");
    nlohmann::json solution;
    sf >> solution;
    if (solution["entries"].empty())
      throw DataError("empty solution in '" + d + "'");
    const std::string bit_string = solution["entries"][0]["bits"];
    BitTrajectory bits(spec.num_assets, spec.num_steps, spec.bits_per_holding);
    std::size_t pos = 0;
    for (int n = 0; n < spec.num_assets; ++n)
      for (int t = 0; t < spec.num_steps; ++t)
        for (int q = 0; q < spec.bits_per_holding; ++q) {
          if (pos >= bit_string.size())
            throw DataError("solution bit string too short in '" + d + "'");
          bits.set(n, t, q, bit_string[pos++] == '1' ? 1 : 0);
        }
    const auto report = score(normalize(decode(bits, spec), spec), spec);

    if (std::find(table.methods.begin(), table.methods.end(), method) ==
        table.methods.end())
      table.methods.push_back(method);
    if (std::find(table.datasets.begin(), table.datasets.end(), dataset) ==
        table.datasets.end())
      table.datasets.push_back(dataset);
    const auto key = std::make_pair(method, dataset);
    table.sharpe[key] = report.sharpe;
    table.profit_percent[key] = 100.0 * report.profit;
    table.wall_time_s[key] = manifest.value("solver_wall_time_s", 0.0);
  }
  return table;
}

inline void render_compare(const CompareTable& table, std::ostream& os) {
  const auto grid = [&](const char* title,
                        const std::map<std::pair<std::string, std::string>,
                                       double>& cells) {
    os << title << "\n";
    os << std::setw(14) << "method";
    for (const auto& d : table.datasets) os << std::setw(12) << d;
    os << "\n";
    for (const auto& m : table.methods) {
      os << std::setw(14) << m;
      for (const auto& d : table.datasets) {
        const auto it = cells.find({m, d});
        if (it == cells.end()) {
          os << std::setw(12) << "-";
        } else {
          std::ostringstream v;
          v << std::fixed << std::setprecision(3) << it->second;
          os << std::setw(12) << v.str();
        }
      }
      os << "\n";
    }
    os << "\n";
  };
  grid("Sharpe ratio", table.sharpe);
  grid("Profit (%)", table.profit_percent);
  grid("Wall time (s)", table.wall_time_s);
  os << "note: wall times are as recorded per run directory and are not\n"
        "comparable across machines or hardware classes\n";
}

}  // namespace portopt
