// soba: command-line front end for data generation, single runs, gamma
// sweeps and the self-check suite.

#include <cstdlib>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <string>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "CLI11.hpp"
#include "soba/checks.hpp"
#include "soba/dataset.hpp"
#include "soba/errors.hpp"
#include "soba/harness.hpp"

namespace {

using namespace soba;

struct DataFlags {
  std::string dataset = "synsep";
  std::size_t samples = 100000;
  std::size_t classes = 9;
  std::size_t dim = 400;
  double noise = -1.0;
  double margin = 1.0;
  double x_bound = 0.0;
  std::uint64_t data_seed = 0;

  void attach(CLI::App* app) {
    app->add_option("--dataset", dataset, "synsep, synnonsep, or a LibSVM/snapshot path");
    app->add_option("--samples,-n", samples, "Number of examples to generate");
    app->add_option("--classes,-k", classes, "Number of classes");
    app->add_option("--dim,-d", dim, "Feature dimension (including the bias coordinate)");
    app->add_option("--noise", noise, "Label noise rate (synnonsep; default 0.05)");
    app->add_option("--margin", margin, "Planted multiclass margin");
    app->add_option("--x-bound", x_bound, "Rescale features so max ||x|| equals this (0 keeps the natural scale)");
    app->add_option("--data-seed", data_seed, "Dataset generation seed");
  }

  DatasetSpec spec() const {
    DatasetSpec s;
    if (dataset == "synsep") {
      s = DatasetSpec::synsep(samples, classes, dim, data_seed);
    } else if (dataset == "synnonsep") {
      s = DatasetSpec::synnonsep(samples, classes, dim, data_seed);
      if (noise >= 0.0) s.noise_rate = noise;
    } else {
      s.kind = DatasetKind::File;
      s.path = dataset;
      s.k = classes;
    }
    s.margin = margin;
    s.x_bound = x_bound;
    return s;
  }
};

Dataset load(const DatasetSpec& spec) {
  Dataset data = materialize(spec);
  if (spec.kind == DatasetKind::File && spec.n > 0 && spec.n < data.size()) data = data.prefix(spec.n);
  return data;
}

ReportFormat parse_format(const std::string& f) {
  if (f == "csv") return ReportFormat::Csv;
  if (f == "json") return ReportFormat::Json;
  throw ConfigError("unknown format '" + f + "'");
}

std::vector<double> parse_gammas(const std::vector<std::string>& items) {
  std::vector<double> out;
  for (const auto& item : items) {
    if (item == "default") {
      const auto grid = default_gamma_grid();
      out.insert(out.end(), grid.begin(), grid.end());
    } else {
      out.push_back(std::stod(item));
    }
  }
  return out;
}

void print_summary(const SweepResult& result) {
  std::cout << std::left << std::setw(15) << "algorithm" << std::setw(12) << "gamma" << std::setw(12) << "mean_err"
            << std::setw(12) << "std_err" << std::setw(14) << "mean_updates" << "runs\n";
  for (const auto& row : result.aggregates) {
    std::cout << std::left << std::setw(15) << algorithm_name(row.algorithm) << std::setw(12)
              << format_gamma(row.gamma) << std::setw(12) << row.mean_error << std::setw(12) << row.std_error
              << std::setw(14) << row.mean_updates << row.runs;
    if (row.aborted > 0) std::cout << " (" << row.aborted << " aborted)";
    std::cout << '\n';
  }
}

int run_config(ExperimentConfig& config) {
  config.validate();
  const Dataset data = load(config.dataset);
  const auto result = run_sweep(config, data);
  print_summary(result);
  if (!config.output_path.empty()) {
    const auto paths = report(result, config, data);
    std::cerr << "wrote " << paths.runs.string() << '\n';
  }
  for (const auto& r : result.runs) {
    if (r.aborted) std::cerr << "aborted " << algorithm_name(r.key.algorithm) << " seed " << r.key.seed << ": " << r.diagnostic << '\n';
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
#ifdef _OPENMP
  if (std::getenv("SOBA_NUM_THREADS")) omp_set_num_threads(sweep_threads());
#endif

  CLI::App app{"Bandit multiclass learners: data generation, runs, sweeps and self-checks"};
  app.require_subcommand(1);

  // datagen
  auto* datagen = app.add_subcommand("datagen", "Generate a synthetic dataset");
  DataFlags gen_data;
  gen_data.attach(datagen);
  std::string gen_out;
  std::string gen_format = "libsvm";
  datagen->add_option("--out,-o", gen_out, "Output path")->required();
  datagen->add_option("--format", gen_format, "libsvm or snapshot")->check(CLI::IsMember({"libsvm", "snapshot"}));

  // run
  auto* run = app.add_subcommand("run", "Run one algorithm on one dataset");
  DataFlags run_data;
  run_data.attach(run);
  std::string run_algo = "soba";
  double run_gamma = 0.01;
  double run_a = 1.0;
  std::uint64_t run_seeds = 1;
  std::string run_checkpoints = "log:100";
  std::string run_out;
  std::string run_format = "csv";
  bool run_parallel = false;
  run->add_option("--algo", run_algo, "soba, sobadiag, soba-adaptive, banditron, perceptron");
  run->add_option("--gamma", run_gamma, "Exploration rate");
  run->add_option("--a", run_a, "Regularizer a > 0");
  run->add_option("--seeds", run_seeds, "Number of seeds (1..N)");
  run->add_option("--checkpoints", run_checkpoints, "log:COUNT or linear:STEP");
  run->add_option("--out,-o", run_out, "Report path");
  run->add_option("--format", run_format, "csv or json");
  run->add_flag("--parallel", run_parallel, "Run seeds in parallel");

  // sweep
  auto* sweep = app.add_subcommand("sweep", "Sweep algorithms x gammas x seeds");
  DataFlags sweep_data;
  sweep_data.attach(sweep);
  std::string config_path;
  std::vector<std::string> sweep_algos;
  std::vector<std::string> sweep_gammas;
  double sweep_a = 1.0;
  std::uint64_t sweep_seeds = 0;
  std::string sweep_checkpoints;
  std::string sweep_out;
  std::string sweep_format;
  bool sweep_parallel = false;
  sweep->add_option("--config,-c", config_path, "YAML experiment file");
  sweep->add_option("--algo", sweep_algos, "Algorithms (repeatable)");
  sweep->add_option("--gammas", sweep_gammas, "Gamma values, or 'default' for the log grid");
  sweep->add_option("--a", sweep_a, "Regularizer a > 0");
  sweep->add_option("--seeds", sweep_seeds, "Number of seeds (1..N)");
  sweep->add_option("--checkpoints", sweep_checkpoints, "log:COUNT or linear:STEP");
  sweep->add_option("--out,-o", sweep_out, "Report path");
  sweep->add_option("--format", sweep_format, "csv or json");
  sweep->add_flag("--parallel", sweep_parallel, "Run cells in parallel (SOBA_NUM_THREADS sets the thread count)");

  // check
  auto* check = app.add_subcommand("check", "Run the self-check suite");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*datagen) {
      const auto spec = gen_data.spec();
      if (spec.kind == DatasetKind::File) throw ConfigError("datagen needs --dataset synsep or synnonsep");
      const Dataset data = materialize(spec);
      if (gen_format == "snapshot") {
        save_snapshot(data, gen_out);
      } else {
        write_libsvm(data, gen_out);
      }
      std::cerr << "wrote " << data.size() << " examples (k=" << data.classes() << ", d=" << data.dim()
                << ", X=" << data.x_bound() << ") to " << gen_out << '\n';
      return 0;
    }
    if (*run) {
      ExperimentConfig config;
      config.dataset = run_data.spec();
      AlgorithmSpec alg;
      alg.algorithm = parse_algorithm(run_algo);
      alg.a = run_a;
      if (uses_fixed_gamma(alg.algorithm)) alg.gammas = {run_gamma};
      config.algorithms = {alg};
      for (std::uint64_t s = 1; s <= run_seeds; ++s) config.seeds.push_back(s);
      config.checkpoints = Checkpoints::parse(run_checkpoints);
      config.output_path = run_out;
      config.format = parse_format(run_format);
      config.parallel = run_parallel;
      return run_config(config);
    }
    if (*sweep) {
      ExperimentConfig config;
      if (!config_path.empty()) {
        config = load_config(config_path);
      } else {
        config.dataset = sweep_data.spec();
      }
      if (!config_path.empty() && sweep->count("--dataset") > 0) config.dataset = sweep_data.spec();
      if (!sweep_algos.empty()) {
        const auto gammas = sweep_gammas.empty() ? default_gamma_grid() : parse_gammas(sweep_gammas);
        config.algorithms.clear();
        for (const auto& name : sweep_algos) {
          AlgorithmSpec alg;
          alg.algorithm = parse_algorithm(name);
          alg.a = sweep_a;
          if (uses_fixed_gamma(alg.algorithm)) alg.gammas = gammas;
          config.algorithms.push_back(alg);
        }
      }
      if (sweep_seeds > 0) {
        config.seeds.clear();
        for (std::uint64_t s = 1; s <= sweep_seeds; ++s) config.seeds.push_back(s);
      }
      if (!sweep_checkpoints.empty()) config.checkpoints = Checkpoints::parse(sweep_checkpoints);
      if (!sweep_out.empty()) config.output_path = sweep_out;
      if (!sweep_format.empty()) config.format = parse_format(sweep_format);
      if (sweep_parallel) config.parallel = true;
      return run_config(config);
    }
    if (*check) {
      bool ok = true;
      for (const auto& r : run_all_checks()) {
        std::cout << (r.passed() ? "PASS " : "FAIL ") << r.name << ": " << r.detail << '\n';
        ok = ok && r.passed();
      }
      return ok ? 0 : 1;
    }
  } catch (const ParseError& e) {
    std::cerr << "parse error (line " << e.line() << "): " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
