#include "doctest.h"

#include <cmath>
#include <sstream>

#include "soba/errors.hpp"
#include "soba/harness.hpp"

using namespace soba;

namespace {

Dataset small_synsep(std::size_t n, std::uint64_t seed) {
  auto spec = DatasetSpec::synsep(n, 4, 6, seed);
  spec.margin = 0.3;
  return generate_synsep(spec);
}

}  // namespace

TEST_CASE("algorithm names and checkpoints") {
  for (auto a : {Algorithm::Soba, Algorithm::SobaDiag, Algorithm::SobaAdaptive, Algorithm::Banditron,
                 Algorithm::Perceptron}) {
    CHECK(parse_algorithm(algorithm_name(a)) == a);
  }
  CHECK_THROWS_AS(parse_algorithm("newtron"), ConfigError);

  const auto lin = Checkpoints::parse("linear:250").schedule(1000);
  CHECK(lin == std::vector<std::uint64_t>{250, 500, 750, 1000});
  CHECK(Checkpoints::parse("linear:300").schedule(1000).back() == 1000);

  const auto log = Checkpoints::parse("log:50").schedule(100000);
  CHECK(log.size() <= 50);
  CHECK(log.back() == 100000);
  for (std::size_t i = 1; i < log.size(); ++i) CHECK(log[i] > log[i - 1]);
  CHECK(Checkpoints::parse("7").kind == Checkpoints::Kind::LogSpaced);
  CHECK_THROWS_AS(Checkpoints::parse("log:0"), ConfigError);
  CHECK_THROWS_AS(Checkpoints::parse("cubic:3"), ConfigError);
}

TEST_CASE("gamma = 1 is uniform guessing") {
  auto spec = DatasetSpec::synsep(10000, 4, 6, 2);
  spec.margin = 0.3;
  const Dataset data = generate_synsep(spec);
  for (auto alg : {Algorithm::Soba, Algorithm::SobaDiag, Algorithm::Banditron}) {
    const auto r = run_one({alg, 1.0, 5}, 1.0, data, Checkpoints::log_spaced(20));
    const double sigma = std::sqrt(0.75 * 0.25 / 10000.0);
    CHECK(std::abs(r.final_error() - 0.75) <= 4.0 * sigma);
  }
}

TEST_CASE("run_one is deterministic and records checkpoints") {
  const Dataset data = small_synsep(3000, 3);
  const CellKey key{Algorithm::Soba, 0.1, 4};
  const auto a = run_one(key, 1.0, data, Checkpoints::log_spaced(50), {0.0, 1.0});
  const auto b = run_one(key, 1.0, data, Checkpoints::log_spaced(50), {0.0, 1.0});
  CHECK(a.series == b.series);
  CHECK(a.mistakes == b.mistakes);
  CHECK(a.updates == b.updates);
  CHECK(a.eta_losses == b.eta_losses);
  CHECK(a.eta_losses.size() == 2);
  CHECK(a.series.size() <= 50);
  CHECK(a.series.back().t == 3000);
  CHECK(a.series.back().cumulative_mistakes == a.mistakes);
  CHECK_FALSE(a.aborted);

  const auto p = run_one({Algorithm::Perceptron, std::nullopt, 4}, 1.0, data, Checkpoints::linear(1000));
  CHECK(p.series.size() == 3);
  CHECK(p.final_error() < 0.2);
  const auto broken = run_one({Algorithm::Soba, std::nullopt, 1}, 1.0, data, Checkpoints{});
  CHECK(broken.aborted);
  CHECK_FALSE(broken.diagnostic.empty());
}

TEST_CASE("sweep cardinality, aggregation and ordering") {
  ExperimentConfig config;
  config.algorithms = {{Algorithm::Soba, 1.0, {0.2}, {}}};
  for (std::uint64_t s = 1; s <= 10; ++s) config.seeds.push_back(s);
  config.checkpoints = Checkpoints::log_spaced(10);
  const Dataset data = small_synsep(500, 1);
  const auto result = run_sweep(config, data);
  CHECK(result.runs.size() == 10);
  REQUIRE(result.aggregates.size() == 1);
  double mean = 0.0;
  for (const auto& r : result.runs) mean += r.final_error();
  mean /= 10.0;
  CHECK(result.aggregates[0].mean_error == doctest::Approx(mean));
  CHECK(result.aggregates[0].runs == 10);

  config.algorithms.push_back({Algorithm::Perceptron, 1.0, {}, {}});
  config.algorithms.push_back({Algorithm::Banditron, 1.0, {0.1, 0.5}, {}});
  const auto cells = sweep_cells(config);
  CHECK(cells.size() == 10 + 10 + 20);
  CHECK_FALSE(cells[15].first.gamma.has_value());
  CHECK(*cells[30].first.gamma == 0.5);
}

TEST_CASE("parallel sweep output is byte-identical to serial") {
  ExperimentConfig config;
  config.algorithms = {{Algorithm::Soba, 1.0, {0.05, 0.3}, {}}, {Algorithm::Banditron, 1.0, {0.1}, {}}};
  config.seeds = {1, 2, 3};
  config.checkpoints = Checkpoints::log_spaced(20);
  const Dataset data = small_synsep(800, 6);
  const auto serial = run_sweep(config, data);
  config.parallel = true;
  const auto parallel = run_sweep(config, data);
  std::ostringstream a, b, sa, sb;
  write_runs_csv(serial.runs, a);
  write_runs_csv(parallel.runs, b);
  write_summary_csv(serial.aggregates, sa);
  write_summary_csv(parallel.aggregates, sb);
  CHECK(a.str() == b.str());
  CHECK(sa.str() == sb.str());
}

TEST_CASE("csv reports") {
  std::ostringstream empty;
  write_runs_csv({}, empty);
  CHECK(empty.str() == "algorithm,gamma,seed,t,cumulative_mistakes,error_rate\n");
  std::ostringstream empty_summary;
  write_summary_csv({}, empty_summary);
  CHECK(empty_summary.str() == "algorithm,gamma,mean_error,std_error,mean_updates\n");

  const Dataset data = small_synsep(700, 8);
  std::vector<RunRecord> runs{run_one({Algorithm::Soba, 0.3, 1}, 1.0, data, Checkpoints::log_spaced(30)),
                              run_one({Algorithm::Perceptron, std::nullopt, 2}, 1.0, data, Checkpoints::linear(100))};
  std::ostringstream out;
  write_runs_csv(runs, out);
  std::istringstream in(out.str());
  const auto rows = parse_runs_csv(in);
  std::size_t i = 0;
  for (const auto& r : runs) {
    for (const auto& c : r.series) {
      REQUIRE(i < rows.size());
      CHECK(rows[i].algorithm == r.key.algorithm);
      CHECK(rows[i].gamma == r.key.gamma);
      CHECK(rows[i].seed == r.key.seed);
      CHECK(rows[i].row == c);
      ++i;
    }
  }
  CHECK(i == rows.size());

  std::istringstream bad("algorithm,gamma,seed,t,cumulative_mistakes,error_rate\nsoba,0.1,1,2\n");
  CHECK_THROWS_AS(parse_runs_csv(bad), ParseError);
  CHECK(format_gamma(std::nullopt) == "-");
}

TEST_CASE("yaml config") {
  const auto config = parse_config(R"(
dataset:
  kind: synnonsep
  n: 5000
  k: 5
  d: 20
  seed: 3
algorithms:
  - name: soba
    a: 2.0
    gammas: [0.01, 0.1]
  - name: banditron
    gammas: default
  - name: soba-adaptive
  - name: perceptron
seeds: 4
checkpoints: linear:500
output: out/run.csv
format: json
parallel: true
)");
  CHECK(config.dataset.kind == DatasetKind::SynNonSep);
  CHECK(config.dataset.noise_rate == 0.05);
  CHECK(config.dataset.n == 5000);
  CHECK(config.algorithms.size() == 4);
  CHECK(config.algorithms[0].a == 2.0);
  CHECK(config.algorithms[0].gammas == std::vector<double>{0.01, 0.1});
  CHECK(config.algorithms[1].gammas == default_gamma_grid());
  CHECK(config.seeds == std::vector<std::uint64_t>{1, 2, 3, 4});
  CHECK(config.checkpoints.kind == Checkpoints::Kind::Linear);
  CHECK(config.format == ReportFormat::Json);
  CHECK(config.parallel);

  const auto grid = default_gamma_grid();
  CHECK(grid.size() == 13);
  CHECK(grid.front() == doctest::Approx(1e-3));
  CHECK(grid.back() == doctest::Approx(1.0));

  CHECK_NOTHROW(config.validate());
  CHECK_THROWS_AS(parse_config("algorithms:\n  - name: soba\n    gammas: [2.0]\nseeds: 1\n").validate(), ConfigError);
  CHECK_THROWS_AS(parse_config("algorithms:\n  - name: soba\n    gammas: [0.1]\n").validate(), ConfigError);
  CHECK_THROWS_AS(parse_config("algorithms:\n  - name: soba\n    gammas: [0.1]\nformat: xml\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("dataset: [oops"), ConfigError);
}
