// Command-line pipeline: ingest -> preprocess -> build -> solve -> score,
// plus fixture generation and cross-run comparison.

#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "portopt/pipeline.hpp"

namespace fs = std::filesystem;
using namespace portopt;

namespace {

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const ConfigError*>(&e)) return 2;
  if (dynamic_cast<const DataError*>(&e)) return 3;
  if (dynamic_cast<const SolverError*>(&e)) return 4;
  return 1;
}

PricePanel load_panel(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot read input '" + path + "'");
  return load_prices(in);
}

void write_text(const fs::path& path, const std::string& content) {
  fs::create_directories(path.parent_path().empty() ? "." : path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write '" + path.string() + "'");
  out << content;
}

ProblemSpec load_problem(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot read problem '" + path + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("problem JSON parse error: ") + e.what());
  }
  return problem_from_json(j);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Dynamic portfolio optimization over discrete holdings: "
               "QUBO/Ising/HUBO compilation with exhaustive, annealing, "
               "MPS and per-step recombination solvers"};
  app.require_subcommand(1);

  RunConfig cfg;
  std::string config_file;

  // shared instance/solver flags, reused by build/solve/run
  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--seed", cfg.seed, "root random seed");
    cmd->add_option("--profile", cfg.profile,
                    "dataset profile: XS, S, M, L, XL, XXL or custom");
    cmd->add_option("--out", cfg.out_dir, "output directory");
  };
  auto add_build = [&](CLI::App* cmd) {
    cmd->add_option("--input", cfg.input_path, "price CSV path");
    cmd->add_option("--forecast", cfg.forecast,
                    "forecast returns: realized or lagged")
        ->transform(CLI::CheckedTransformer(
            std::map<std::string, ForecastMode>{
                {"realized", ForecastMode::Realized},
                {"lagged", ForecastMode::Lagged}},
            CLI::ignore_case));
    cmd->add_option("--assets", cfg.num_assets, "asset (or cluster) count N");
    cmd->add_option("--steps", cfg.num_steps, "rebalancing step count N_t");
    cmd->add_option("--bits", cfg.bits_per_holding, "bits per holding N_q");
    cmd->add_option("--investment", cfg.total_investment,
                    "total investment K (units)");
    cmd->add_option("--gamma", cfg.gamma, "risk aversion");
    cmd->add_option("--lambda", cfg.lambda, "parabolic transaction cost");
    cmd->add_option("--rho", cfg.rho, "budget multiplier (<0: autoscale)");
    cmd->add_option("--window", cfg.cov_window, "covariance window (days)");
    cmd->add_flag("--filter", cfg.filter_subaverage,
                  "drop doubly sub-average assets");
    cmd->add_flag("--cluster", cfg.cluster, "cluster assets before building");
    cmd->add_option("--cluster-k", cfg.cluster_k,
                    "cluster count (0: elbow rule)");
    cmd->add_option("--hp-smoothing", cfg.hp_smoothing,
                    "Hodrick-Prescott smoothing for trend extraction");
    cmd->add_option("--date-start", cfg.date_start, "first date (inclusive)");
    cmd->add_option("--date-end", cfg.date_end, "last date (inclusive)");
  };
  auto add_solver = [&](CLI::App* cmd) {
    cmd->add_option("--solver", cfg.solver,
                    "exhaustive, annealing, mps or recombine");
    cmd->add_option("--top-k", cfg.top_k, "solutions to keep");
    cmd->add_option("--max-bits", cfg.exhaustive_max_bits,
                    "exhaustive enumeration cap");
    cmd->add_flag("--budget-constrained", cfg.budget_constrained,
                  "enumerate only budget-feasible trajectories");
    cmd->add_option("--restarts", cfg.anneal_restarts, "annealing restarts");
    cmd->add_option("--sweeps", cfg.anneal_sweeps,
                    "annealing sweeps per temperature");
    cmd->add_option("--cooling", cfg.anneal_cooling,
                    "annealing geometric cooling factor");
    cmd->add_option("--bond-dim", cfg.mps_bond_dim, "MPS bond dimension");
    cmd->add_option("--mps-samples", cfg.mps_samples,
                    "stochastic MPS readout draws");
    cmd->add_option("--recombine-k", cfg.recombine_k,
                    "per-step candidates for recombination");
    cmd->add_option("--inner", cfg.recombine_inner,
                    "inner solver for recombination");
  };

  // --- synth ---
  SynthConfig synth_cfg;
  std::string synth_out = "prices.csv";
  auto* synth_cmd =
      app.add_subcommand("synth", "generate a synthetic price CSV fixture");
  synth_cmd->add_option("--assets", synth_cfg.num_assets, "asset count");
  synth_cmd->add_option("--days", synth_cfg.num_days, "business days");
  synth_cmd->add_option("--seed", synth_cfg.seed, "random seed");
  synth_cmd->add_option("--correlation", synth_cfg.correlation,
                        "shared-factor weight in [0,1)");
  synth_cmd->add_option("--out", synth_out, "output CSV path");
  synth_cmd->callback([&]() {
    const PricePanel panel = generate_prices(synth_cfg);
    std::ostringstream os;
    write_prices_csv(panel, os);
    write_text(synth_out, os.str());
    std::cout << "wrote " << synth_out << " (" << panel.num_assets()
              << " assets x " << panel.num_dates() << " days)\n";
  });

  // --- ingest ---
  auto* ingest_cmd =
      app.add_subcommand("ingest", "validate and normalize a price CSV");
  ingest_cmd->add_option("--input", cfg.input_path, "price CSV path")
      ->required();
  ingest_cmd->add_option("--out", cfg.out_dir, "output directory");
  ingest_cmd->callback([&]() {
    const PricePanel panel = load_panel(cfg.input_path);
    fs::create_directories(cfg.out_dir);
    std::ostringstream os;
    write_prices_csv(panel, os);
    write_text(fs::path(cfg.out_dir) / "prices.csv", os.str());
    nlohmann::json summary{{"assets", panel.num_assets()},
                           {"dates", panel.num_dates()},
                           {"first_date", panel.dates.front().iso()},
                           {"last_date", panel.dates.back().iso()}};
    write_text(fs::path(cfg.out_dir) / "ingest.json", summary.dump(2) + "\n");
    std::cout << summary.dump(2) << "\n";
  });

  // --- preprocess ---
  auto* prep_cmd = app.add_subcommand(
      "preprocess", "returns, covariances, filtering and clustering");
  add_build(prep_cmd);
  prep_cmd->add_option("--out", cfg.out_dir, "output directory");
  prep_cmd->callback([&]() {
    const PricePanel panel = load_panel(cfg.input_path);
    const PreparedData data = prepare_data(panel, cfg);
    fs::create_directories(cfg.out_dir);
    std::ostringstream monthly;
    monthly << "period";
    for (const auto& id : data.monthly.asset_ids) monthly << "," << id;
    monthly << "\n";
    for (int t = 0; t < data.monthly.num_periods(); ++t) {
      monthly << data.monthly.periods[static_cast<std::size_t>(t)];
      for (int n = 0; n < data.monthly.num_assets(); ++n)
        monthly << "," << data.monthly.values(n, t);
      monthly << "\n";
    }
    write_text(fs::path(cfg.out_dir) / "returns_monthly.csv", monthly.str());
    nlohmann::json cov = nlohmann::json::array();
    for (int i = 0; i < data.covariance.num_periods(); ++i) {
      nlohmann::json entry{
          {"period", data.covariance.periods[static_cast<std::size_t>(i)]}};
      nlohmann::json rows = nlohmann::json::array();
      const auto& m = data.covariance.matrices[static_cast<std::size_t>(i)];
      for (Eigen::Index r = 0; r < m.rows(); ++r) {
        nlohmann::json row = nlohmann::json::array();
        for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
        rows.push_back(row);
      }
      entry["matrix"] = rows;
      cov.push_back(entry);
    }
    write_text(fs::path(cfg.out_dir) / "covariance.json", cov.dump(2) + "\n");
    if (data.clustering)
      write_text(fs::path(cfg.out_dir) / "clustering.json",
                 clustering_report(*data.clustering, data.asset_ids).dump(2) +
                     "\n");
    for (const auto& w : data.warnings) std::cerr << "warning: " << w << "\n";
    std::cout << "preprocessed " << data.monthly.num_assets() << " series, "
              << data.monthly.num_periods() << " months, "
              << data.covariance.num_periods() << " covariance dates\n";
  });

  // --- build ---
  auto* build_cmd = app.add_subcommand(
      "build", "compile the optimization instance into problem.json + QUBO");
  add_common(build_cmd);
  add_build(build_cmd);
  build_cmd->callback([&]() {
    const PricePanel panel = load_panel(cfg.input_path);
    const PreparedData data = prepare_data(panel, cfg);
    const ProblemSpec spec = assemble_problem(data, cfg);
    const QuboMatrix qubo = build_qubo(spec);
    fs::create_directories(cfg.out_dir);
    write_text(fs::path(cfg.out_dir) / "problem.json",
               problem_to_json(spec).dump(2) + "\n");
    std::ostringstream qt;
    qubo.export_text(qt);
    write_text(fs::path(cfg.out_dir) / "qubo.txt", qt.str());
    std::cout << "built instance with " << qubo.size() << " bit variables\n";
  });

  // --- solve ---
  std::string problem_path;
  auto* solve_cmd =
      app.add_subcommand("solve", "run a solver on a problem.json instance");
  solve_cmd->add_option("--problem", problem_path, "problem.json path")
      ->required();
  add_solver(solve_cmd);
  solve_cmd->add_option("--seed", cfg.seed, "root random seed");
  solve_cmd->add_option("--out", cfg.out_dir, "output directory");
  solve_cmd->callback([&]() {
    const ProblemSpec spec = load_problem(problem_path);
    const QuboMatrix qubo = build_qubo(spec);
    const SolutionSet sols = dispatch_solver(cfg, spec, qubo);
    fs::create_directories(cfg.out_dir);
    write_text(fs::path(cfg.out_dir) / "solution.json",
               solution_set_to_json(sols, &spec, false).dump(2) + "\n");
    std::cout << "best energy " << sols.best().energy << " in "
              << sols.wall_time_s << " s (" << sols.entries.size()
              << " solutions)\n";
  });

  // --- score ---
  std::string solution_path;
  auto* score_cmd = app.add_subcommand(
      "score", "financial figures of merit for a solution set");
  score_cmd->add_option("--problem", problem_path, "problem.json path")
      ->required();
  score_cmd->add_option("--solution", solution_path, "solution.json path")
      ->required();
  score_cmd->add_option("--out", cfg.out_dir, "output directory");
  score_cmd->callback([&]() {
    const ProblemSpec spec = load_problem(problem_path);
    std::ifstream sf(solution_path);
    if (!sf) throw DataError("cannot read solution '" + solution_path + "'");
    nlohmann::json sj;
    sf >> sj;
    SolutionSet sols;
    sols.solver = sj.value("solver", "?");
    VariableLayout layout;
    layout.num_assets = spec.num_assets;
    layout.num_steps = spec.num_steps;
    layout.bits_per_holding = spec.bits_per_holding;
    sols.layout = layout;
    for (const auto& e : sj["entries"]) {
      const std::string s = e["bits"];
      BitTrajectory bits(spec.num_assets, spec.num_steps,
                         spec.bits_per_holding);
      std::size_t pos = 0;
      for (int n = 0; n < spec.num_assets; ++n)
        for (int t = 0; t < spec.num_steps; ++t)
          for (int q = 0; q < spec.bits_per_holding; ++q) {
            if (pos >= s.size()) throw DataError("bit string too short");
            bits.set(n, t, q, s[pos++] == '1' ? 1 : 0);
          }
      sols.entries.push_back({bits.bits, e["energy"].get<double>()});
    }
    const auto rows = landscape_table(sols, spec);
    std::ostringstream csv, text;
    landscape_csv(rows, csv);
    landscape_text(rows, text);
    fs::create_directories(cfg.out_dir);
    write_text(fs::path(cfg.out_dir) / "metrics.csv", csv.str());
    write_text(fs::path(cfg.out_dir) / "metrics.txt", text.str());
    std::cout << text.str();
  });

  // --- run ---
  auto* run_cmd = app.add_subcommand(
      "run", "full pipeline: ingest, preprocess, build, solve, score");
  run_cmd->add_option("--config", config_file,
                      "config file (JSON or key=value lines)");
  add_common(run_cmd);
  add_build(run_cmd);
  add_solver(run_cmd);
  run_cmd->callback([&]() {
    const RunResult result = run(cfg);
    std::cout << "run complete: " << result.out_dir.string() << "\n"
              << "  fingerprint " << result.manifest["fingerprint"]
              << ", best energy " << result.solutions.best().energy << "\n";
  });

  // --- compare ---
  std::vector<std::string> run_dirs;
  auto* compare_cmd = app.add_subcommand(
      "compare", "method x dataset grids of Sharpe, profit and wall time");
  compare_cmd->add_option("dirs", run_dirs, "run directories")->required();
  compare_cmd->callback([&]() {
    const CompareTable table = compare_runs(run_dirs);
    render_compare(table, std::cout);
  });

  // let a config file seed the defaults, then re-parse flags over it
  try {
    argv = app.ensure_utf8(argv);
    // peek for run --config to apply precedence: flags > file > profile
    for (int i = 1; i + 1 < argc; ++i) {
      if (std::string(argv[i]) == "--config" &&
          std::string(argv[1]) == "run") {
        detail::load_config_file(argv[i + 1], cfg);
        break;
      }
    }
    // profile fills instance fields before explicit dimension flags land
    for (int i = 1; i + 1 < argc; ++i) {
      if (std::string(argv[i]) == "--profile") {
        cfg.profile = argv[i + 1];
        cfg.apply_profile();
        break;
      }
    }
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code_for(e);
  }
  return 0;
}
