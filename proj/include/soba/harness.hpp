#pragma once

// Seeded experiment runner: single cells, gamma sweeps, aggregation, reports.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "soba/dataset.hpp"

namespace soba {

enum class Algorithm { Soba, SobaDiag, SobaAdaptive, Banditron, Perceptron };

std::string_view algorithm_name(Algorithm a) noexcept;
Algorithm parse_algorithm(std::string_view name);
/// Whether the algorithm takes a fixed exploration rate.
bool uses_fixed_gamma(Algorithm a) noexcept;

struct Checkpoints {
  enum class Kind { Linear, LogSpaced };
  Kind kind = Kind::LogSpaced;
  std::uint64_t value = 100;  // step for Linear, count for LogSpaced

  static Checkpoints linear(std::uint64_t step) { return {Kind::Linear, step}; }
  static Checkpoints log_spaced(std::uint64_t count) { return {Kind::LogSpaced, count}; }
  /// "linear:STEP", "log:COUNT", or a bare COUNT.
  static Checkpoints parse(std::string_view text);

  /// Increasing checkpoint times in [1, horizon]; always ends at horizon.
  std::vector<std::uint64_t> schedule(std::uint64_t horizon) const;
  std::string describe() const;
};

struct AlgorithmSpec {
  Algorithm algorithm = Algorithm::Soba;
  double a = 1.0;
  std::vector<double> gammas;
  /// Etas at which to report the final model's cumulative eta-loss.
  std::vector<double> eta_report;
};

enum class ReportFormat { Csv, Json };

struct ExperimentConfig {
  DatasetSpec dataset;
  std::vector<AlgorithmSpec> algorithms;
  std::vector<std::uint64_t> seeds;
  Checkpoints checkpoints;
  std::filesystem::path output_path;
  ReportFormat format = ReportFormat::Csv;
  bool parallel = false;

  void validate() const;
};

/// Reads the YAML experiment file format documented in the README.
ExperimentConfig load_config(const std::filesystem::path& path);
ExperimentConfig parse_config(std::string_view yaml_text);

/// Default gamma grid: 13 log-spaced values over [1e-3, 1].
std::vector<double> default_gamma_grid();

struct CellKey {
  Algorithm algorithm = Algorithm::Soba;
  /// Empty for algorithms without a fixed gamma.
  std::optional<double> gamma;
  std::uint64_t seed = 0;

  friend bool operator==(const CellKey&, const CellKey&) = default;
};

/// Learner seed for a cell, mixing seed, algorithm, and gamma.
std::uint64_t cell_seed(const CellKey& key) noexcept;

struct CheckpointRow {
  std::uint64_t t = 0;
  std::uint64_t cumulative_mistakes = 0;
  double error_rate = 0.0;

  friend bool operator==(const CheckpointRow&, const CheckpointRow&) = default;
};

struct RunRecord {
  CellKey key;
  double a = 1.0;
  std::vector<CheckpointRow> series;
  std::uint64_t mistakes = 0;
  std::uint64_t updates = 0;
  /// Greedy-prediction mistakes in the first and second half of the stream.
  std::uint64_t greedy_mistakes_first_half = 0;
  std::uint64_t greedy_mistakes_second_half = 0;
  std::vector<std::pair<double, double>> eta_losses;
  double wall_time = 0.0;
  bool aborted = false;
  std::string diagnostic;

  double final_error() const noexcept { return series.empty() ? 0.0 : series.back().error_rate; }
};

struct AggregateRow {
  Algorithm algorithm = Algorithm::Soba;
  std::optional<double> gamma;
  double mean_error = 0.0;
  double std_error = 0.0;
  double mean_updates = 0.0;
  std::size_t runs = 0;
  std::size_t aborted = 0;
};

struct SweepResult {
  std::vector<RunRecord> runs;
  std::vector<AggregateRow> aggregates;
};

RunRecord run_one(const CellKey& key, double a, const Dataset& data, const Checkpoints& checkpoints,
                  const std::vector<double>& eta_report = {});

/// Every (algorithm x gamma x seed) cell of the config, in key order.
std::vector<std::pair<CellKey, const AlgorithmSpec*>> sweep_cells(const ExperimentConfig& config);

SweepResult run_sweep(const ExperimentConfig& config, const Dataset& data);
SweepResult run_sweep(const ExperimentConfig& config);

/// Mean and sample standard deviation of final errors, grouped in key order.
std::vector<AggregateRow> aggregate(const std::vector<RunRecord>& runs);

/// Sweep threads from SOBA_NUM_THREADS, falling back to the OpenMP default.
int sweep_threads();

// Reports.  CSV: one row per checkpoint
//   algorithm,gamma,seed,t,cumulative_mistakes,error_rate
// plus a summary file
//   algorithm,gamma,mean_error,std_error,mean_updates
// and a metadata JSON.  JSON: one document with the same fields.

struct ReportPaths {
  std::filesystem::path runs;
  std::filesystem::path summary;
  std::filesystem::path metadata;
};

ReportPaths report_paths(const std::filesystem::path& out, ReportFormat format);

void write_runs_csv(const std::vector<RunRecord>& runs, std::ostream& out);
void write_summary_csv(const std::vector<AggregateRow>& rows, std::ostream& out);
std::string report_json(const SweepResult& result, const std::string& metadata_json);
std::string report_metadata(const ExperimentConfig& config, const Dataset& data);

ReportPaths report(const SweepResult& result, const ExperimentConfig& config, const Dataset& data);

struct CsvRunRow {
  Algorithm algorithm;
  std::optional<double> gamma;
  std::uint64_t seed;
  CheckpointRow row;

  friend bool operator==(const CsvRunRow&, const CsvRunRow&) = default;
};

std::vector<CsvRunRow> parse_runs_csv(std::istream& in);

std::string format_gamma(const std::optional<double>& gamma);

}  // namespace soba
