#include "soba/harness.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>

#include <nlohmann/json.hpp>
#include <yaml-cpp/yaml.h>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "soba/baselines.hpp"
#include "soba/errors.hpp"
#include "soba/learner.hpp"
#include "soba/losses.hpp"

namespace soba {

namespace {

constexpr std::pair<Algorithm, std::string_view> kAlgorithmNames[] = {
    {Algorithm::Soba, "soba"},
    {Algorithm::SobaDiag, "sobadiag"},
    {Algorithm::SobaAdaptive, "soba-adaptive"},
    {Algorithm::Banditron, "banditron"},
    {Algorithm::Perceptron, "perceptron"},
};

std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t fnv1a(std::string_view s) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string shortest(double v) {
  char buf[32];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return {buf, ptr};
}

}  // namespace

std::string_view algorithm_name(Algorithm a) noexcept {
  for (const auto& [alg, name] : kAlgorithmNames) {
    if (alg == a) return name;
  }
  return "unknown";
}

Algorithm parse_algorithm(std::string_view name) {
  for (const auto& [alg, n] : kAlgorithmNames) {
    if (n == name) return alg;
  }
  throw ConfigError("unknown algorithm '" + std::string(name) + "'");
}

bool uses_fixed_gamma(Algorithm a) noexcept {
  return a == Algorithm::Soba || a == Algorithm::SobaDiag || a == Algorithm::Banditron;
}

Checkpoints Checkpoints::parse(std::string_view text) {
  auto number = [&](std::string_view s) {
    std::uint64_t v = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size() || v == 0) {
      throw ConfigError("bad checkpoint spec '" + std::string(text) + "'");
    }
    return v;
  };
  if (text.starts_with("linear:")) return linear(number(text.substr(7)));
  if (text.starts_with("log:")) return log_spaced(number(text.substr(4)));
  return log_spaced(number(text));
}

std::vector<std::uint64_t> Checkpoints::schedule(std::uint64_t horizon) const {
  std::vector<std::uint64_t> out;
  if (horizon == 0) return out;
  if (value == 0) throw ConfigError("checkpoint parameter must be positive");
  if (kind == Kind::Linear) {
    for (std::uint64_t t = value; t < horizon; t += value) out.push_back(t);
    out.push_back(horizon);
    return out;
  }
  if (value == 1) return {horizon};
  const double log_h = std::log(static_cast<double>(horizon));
  for (std::uint64_t i = 0; i + 1 < value; ++i) {
    const double frac = static_cast<double>(i) / static_cast<double>(value - 1);
    const auto t = static_cast<std::uint64_t>(std::llround(std::exp(log_h * frac)));
    const std::uint64_t clamped = std::clamp<std::uint64_t>(t, 1, horizon);
    if (out.empty() || clamped > out.back()) out.push_back(clamped);
  }
  if (out.empty() || out.back() != horizon) out.push_back(horizon);
  return out;
}

std::string Checkpoints::describe() const {
  return (kind == Kind::Linear ? "linear:" : "log:") + std::to_string(value);
}

void ExperimentConfig::validate() const {
  if (seeds.empty()) throw ConfigError("at least one seed is required");
  if (algorithms.empty()) throw ConfigError("at least one algorithm is required");
  for (const auto& alg : algorithms) {
    if (!(alg.a > 0.0)) throw ConfigError("regularizer a must be positive");
    if (uses_fixed_gamma(alg.algorithm) && alg.gammas.empty()) {
      throw ConfigError(std::string(algorithm_name(alg.algorithm)) + " needs at least one gamma");
    }
    for (double g : alg.gammas) {
      if (!(g >= 0.0 && g <= 1.0)) throw ConfigError("gamma values must lie in [0, 1]");
      if (alg.algorithm == Algorithm::Banditron && g == 0.0) throw ConfigError("banditron needs gamma > 0");
    }
    for (double eta : alg.eta_report) EtaParam{eta};
  }
  if (checkpoints.value == 0) throw ConfigError("checkpoint parameter must be positive");
}

std::vector<double> default_gamma_grid() {
  std::vector<double> grid;
  for (int i = 0; i <= 12; ++i) grid.push_back(std::pow(10.0, -3.0 + 0.25 * i));
  grid.back() = 1.0;
  return grid;
}

namespace {

DatasetKind parse_dataset_kind(const std::string& s) {
  if (s == "synsep") return DatasetKind::SynSep;
  if (s == "synnonsep") return DatasetKind::SynNonSep;
  if (s == "file") return DatasetKind::File;
  throw ConfigError("unknown dataset kind '" + s + "'");
}

template <typename T>
void read_if(const YAML::Node& node, const char* key, T& out) {
  if (node[key]) out = node[key].as<T>();
}

}  // namespace

ExperimentConfig parse_config(std::string_view yaml_text) {
  YAML::Node root;
  try {
    root = YAML::Load(std::string(yaml_text));
  } catch (const YAML::Exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  ExperimentConfig config;
  try {
    if (const auto ds = root["dataset"]) {
      if (ds["kind"]) {
        config.dataset.kind = parse_dataset_kind(ds["kind"].as<std::string>());
        if (config.dataset.kind == DatasetKind::SynNonSep) config.dataset.noise_rate = 0.05;
      }
      if (ds["path"]) config.dataset.path = ds["path"].as<std::string>();
      read_if(ds, "n", config.dataset.n);
      read_if(ds, "k", config.dataset.k);
      read_if(ds, "d", config.dataset.d);
      read_if(ds, "noise_rate", config.dataset.noise_rate);
      read_if(ds, "margin", config.dataset.margin);
      read_if(ds, "seed", config.dataset.seed);
      read_if(ds, "x_bound", config.dataset.x_bound);
    }
    for (const auto& node : root["algorithms"]) {
      AlgorithmSpec spec;
      spec.algorithm = parse_algorithm(node["name"].as<std::string>());
      read_if(node, "a", spec.a);
      if (node["gamma"]) spec.gammas = {node["gamma"].as<double>()};
      if (node["gammas"]) {
        if (node["gammas"].IsScalar() && node["gammas"].as<std::string>() == "default") {
          spec.gammas = default_gamma_grid();
        } else {
          spec.gammas = node["gammas"].as<std::vector<double>>();
        }
      }
      read_if(node, "eta_report", spec.eta_report);
      config.algorithms.push_back(std::move(spec));
    }
    if (root["seeds"]) {
      const auto seeds = root["seeds"];
      if (seeds.IsSequence()) {
        config.seeds = seeds.as<std::vector<std::uint64_t>>();
      } else {
        for (std::uint64_t s = 1; s <= seeds.as<std::uint64_t>(); ++s) config.seeds.push_back(s);
      }
    }
    if (root["checkpoints"]) config.checkpoints = Checkpoints::parse(root["checkpoints"].as<std::string>());
    if (root["output"]) config.output_path = root["output"].as<std::string>();
    if (root["format"]) {
      const auto f = root["format"].as<std::string>();
      if (f == "csv") {
        config.format = ReportFormat::Csv;
      } else if (f == "json") {
        config.format = ReportFormat::Json;
      } else {
        throw ConfigError("unknown format '" + f + "'");
      }
    }
    read_if(root, "parallel", config.parallel);
  } catch (const YAML::Exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  return config;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

std::uint64_t cell_seed(const CellKey& key) noexcept {
  std::uint64_t h = splitmix64(key.seed);
  h = splitmix64(h ^ fnv1a(algorithm_name(key.algorithm)));
  const double g = key.gamma.value_or(-1.0);
  return splitmix64(h ^ std::bit_cast<std::uint64_t>(g));
}

namespace {

bool all_finite(const RowMatrix& m) { return m.allFinite(); }

// Protocol loop shared by every algorithm.  `round` consumes one example and
// reports {sampled mistake, greedy mistake, updated}.
template <typename Round, typename Model>
void drive(RunRecord& rec, const Dataset& data, const std::vector<std::uint64_t>& schedule, Round&& round,
           Model&& model) {
  const std::uint64_t horizon = data.size();
  std::size_t next = 0;
  for (std::uint64_t t = 1; t <= horizon; ++t) {
    const auto [mistake, greedy_mistake, updated] = round(data[t - 1]);
    rec.mistakes += mistake;
    rec.updates += updated;
    if (greedy_mistake) {
      (2 * t <= horizon ? rec.greedy_mistakes_first_half : rec.greedy_mistakes_second_half) += 1;
    }
    if (next < schedule.size() && schedule[next] == t) {
      ++next;
      rec.series.push_back(
          {t, rec.mistakes, static_cast<double>(rec.mistakes) / static_cast<double>(t)});
      if (!all_finite(model())) {
        rec.aborted = true;
        rec.diagnostic = "non-finite weights at t=" + std::to_string(t);
        return;
      }
    }
  }
}

struct RoundResult {
  bool mistake;
  bool greedy_mistake;
  bool updated;
};

}  // namespace

RunRecord run_one(const CellKey& key, double a, const Dataset& data, const Checkpoints& checkpoints,
                  const std::vector<double>& eta_report) {
  RunRecord rec;
  rec.key = key;
  rec.a = a;
  const auto start = std::chrono::steady_clock::now();
  const auto schedule = checkpoints.schedule(data.size());
  const std::uint64_t seed = cell_seed(key);
  const std::size_t k = data.classes();
  const std::size_t d = data.dim();
  RowMatrix final_model;

  try {
    if (uses_fixed_gamma(key.algorithm) && !key.gamma) throw ConfigError("cell needs a gamma");
    switch (key.algorithm) {
      case Algorithm::Perceptron: {
        Perceptron learner(k, d);
        drive(
            rec, data, schedule,
            [&](const Example& ex) {
              const bool mistake = learner.step(ex.x(), ex.label);
              return RoundResult{mistake, mistake, mistake};
            },
            [&]() -> const RowMatrix& { return learner.weights(); });
        final_model = learner.weights();
        break;
      }
      case Algorithm::Banditron: {
        Banditron learner(k, d, *key.gamma, seed);
        drive(
            rec, data, schedule,
            [&](const Example& ex) {
              const auto dist = learner.predict(ex.x());
              const bool correct = dist.sampled == ex.label;
              const bool updated = learner.observe(ex.x(), dist, correct);
              return RoundResult{!correct, dist.greedy != ex.label, updated};
            },
            [&]() -> const RowMatrix& { return learner.weights(); });
        final_model = learner.weights();
        break;
      }
      case Algorithm::Soba:
      case Algorithm::SobaDiag:
      case Algorithm::SobaAdaptive: {
        LearnerConfig config;
        config.k = k;
        config.d = d;
        config.a = a;
        config.gamma = key.gamma.value_or(0.0);
        config.adaptive_gamma = key.algorithm == Algorithm::SobaAdaptive;
        config.inverse_kind = key.algorithm == Algorithm::SobaDiag ? InverseKind::Diagonal : InverseKind::Full;
        config.seed = seed;
        SobaLearner learner(config);
        drive(
            rec, data, schedule,
            [&](const Example& ex) {
              const auto dist = learner.predict(ex.x());
              const bool correct = dist.sampled == ex.label;
              const auto trace = learner.observe(ex.x(), dist, correct);
              return RoundResult{!correct, dist.greedy != ex.label, trace.updated};
            },
            [&]() -> const RowMatrix& { return learner.weights(); });
        final_model = learner.weights();
        break;
      }
    }
    if (!rec.aborted) {
      for (double eta : eta_report) rec.eta_losses.emplace_back(eta, cumulative_eta_loss(final_model, data, EtaParam(eta)));
    }
  } catch (const std::exception& e) {
    rec.aborted = true;
    rec.diagnostic = e.what();
  }
  rec.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return rec;
}

std::vector<std::pair<CellKey, const AlgorithmSpec*>> sweep_cells(const ExperimentConfig& config) {
  std::vector<std::pair<CellKey, const AlgorithmSpec*>> cells;
  for (const auto& alg : config.algorithms) {
    std::vector<std::optional<double>> gammas;
    if (uses_fixed_gamma(alg.algorithm)) {
      gammas.assign(alg.gammas.begin(), alg.gammas.end());
    } else {
      gammas.push_back(std::nullopt);
    }
    for (const auto& g : gammas) {
      for (std::uint64_t seed : config.seeds) cells.push_back({CellKey{alg.algorithm, g, seed}, &alg});
    }
  }
  return cells;
}

int sweep_threads() {
  if (const char* env = std::getenv("SOBA_NUM_THREADS")) {
    const int n = std::atoi(env);
    if (n > 0) return n;
  }
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

SweepResult run_sweep(const ExperimentConfig& config, const Dataset& data) {
  config.validate();
  const auto cells = sweep_cells(config);
  SweepResult result;
  result.runs.resize(cells.size());
  const auto count = static_cast<std::ptrdiff_t>(cells.size());
  [[maybe_unused]] const int threads = sweep_threads();
#pragma omp parallel for schedule(dynamic, 1) num_threads(threads) if (config.parallel)
  for (std::ptrdiff_t i = 0; i < count; ++i) {
    const auto& [key, alg] = cells[static_cast<std::size_t>(i)];
    result.runs[static_cast<std::size_t>(i)] = run_one(key, alg->a, data, config.checkpoints, alg->eta_report);
  }
  result.aggregates = aggregate(result.runs);
  return result;
}

SweepResult run_sweep(const ExperimentConfig& config) { return run_sweep(config, materialize(config.dataset)); }

std::vector<AggregateRow> aggregate(const std::vector<RunRecord>& runs) {
  std::vector<AggregateRow> rows;
  std::vector<std::vector<const RunRecord*>> groups;
  for (const auto& run : runs) {
    auto it = std::find_if(rows.begin(), rows.end(), [&](const AggregateRow& r) {
      return r.algorithm == run.key.algorithm && r.gamma == run.key.gamma;
    });
    if (it == rows.end()) {
      rows.push_back({run.key.algorithm, run.key.gamma});
      groups.emplace_back();
      it = rows.end() - 1;
    }
    groups[static_cast<std::size_t>(it - rows.begin())].push_back(&run);
  }
  for (std::size_t g = 0; g < rows.size(); ++g) {
    auto& row = rows[g];
    double sum_err = 0.0;
    double sum_upd = 0.0;
    std::vector<double> finals;
    for (const auto* run : groups[g]) {
      if (run->aborted) {
        ++row.aborted;
        continue;
      }
      finals.push_back(run->final_error());
      sum_err += run->final_error();
      sum_upd += static_cast<double>(run->updates);
    }
    row.runs = finals.size();
    if (finals.empty()) {
      row.mean_error = std::nan("");
      row.std_error = std::nan("");
      row.mean_updates = std::nan("");
      continue;
    }
    const double n = static_cast<double>(finals.size());
    row.mean_error = sum_err / n;
    row.mean_updates = sum_upd / n;
    double ss = 0.0;
    for (double f : finals) ss += (f - row.mean_error) * (f - row.mean_error);
    row.std_error = finals.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
  }
  return rows;
}

std::string format_gamma(const std::optional<double>& gamma) { return gamma ? shortest(*gamma) : "-"; }

ReportPaths report_paths(const std::filesystem::path& out, ReportFormat format) {
  ReportPaths paths;
  paths.runs = out;
  auto sibling = [&](const std::string& suffix) {
    auto p = out;
    p.replace_filename(out.stem().string() + suffix);
    return p;
  };
  if (format == ReportFormat::Csv) {
    paths.summary = sibling(".summary.csv");
    paths.metadata = sibling(".meta.json");
  }
  return paths;
}

void write_runs_csv(const std::vector<RunRecord>& runs, std::ostream& out) {
  out << "algorithm,gamma,seed,t,cumulative_mistakes,error_rate\n";
  for (const auto& run : runs) {
    for (const auto& row : run.series) {
      out << algorithm_name(run.key.algorithm) << ',' << format_gamma(run.key.gamma) << ',' << run.key.seed << ','
          << row.t << ',' << row.cumulative_mistakes << ',' << shortest(row.error_rate) << '\n';
    }
  }
}

void write_summary_csv(const std::vector<AggregateRow>& rows, std::ostream& out) {
  out << "algorithm,gamma,mean_error,std_error,mean_updates\n";
  for (const auto& row : rows) {
    out << algorithm_name(row.algorithm) << ',' << format_gamma(row.gamma) << ',' << shortest(row.mean_error) << ','
        << shortest(row.std_error) << ',' << shortest(row.mean_updates) << '\n';
  }
}

namespace {

using Json = nlohmann::ordered_json;

Json gamma_json(const std::optional<double>& g) { return g ? Json(*g) : Json(nullptr); }

}  // namespace

std::string report_metadata(const ExperimentConfig& config, const Dataset& data) {
  Json meta;
  const char* kind = config.dataset.kind == DatasetKind::SynSep      ? "synsep"
                     : config.dataset.kind == DatasetKind::SynNonSep ? "synnonsep"
                                                                      : "file";
  meta["dataset"] = {{"kind", kind},
                     {"path", config.dataset.path.string()},
                     {"n", data.size()},
                     {"k", data.classes()},
                     {"d", data.dim()},
                     {"x_bound", data.x_bound()},
                     {"noise_rate", config.dataset.noise_rate},
                     {"margin", config.dataset.margin},
                     {"seed", config.dataset.seed}};
  Json algs = Json::array();
  for (const auto& alg : config.algorithms) {
    algs.push_back({{"name", algorithm_name(alg.algorithm)},
                    {"a", alg.a},
                    {"gammas", alg.gammas},
                    {"eta_report", alg.eta_report}});
  }
  meta["algorithms"] = algs;
  meta["seeds"] = config.seeds;
  meta["checkpoints"] = config.checkpoints.describe();
  meta["protocol"] = "single pass";
  return meta.dump(2);
}

std::string report_json(const SweepResult& result, const std::string& metadata_json) {
  Json doc;
  doc["metadata"] = Json::parse(metadata_json);
  Json runs = Json::array();
  for (const auto& run : result.runs) {
    Json series = Json::array();
    for (const auto& row : run.series) {
      series.push_back({{"t", row.t}, {"cumulative_mistakes", row.cumulative_mistakes}, {"error_rate", row.error_rate}});
    }
    Json etas = Json::array();
    for (const auto& [eta, loss] : run.eta_losses) etas.push_back({{"eta", eta}, {"loss", loss}});
    runs.push_back({{"algorithm", algorithm_name(run.key.algorithm)},
                    {"gamma", gamma_json(run.key.gamma)},
                    {"seed", run.key.seed},
                    {"a", run.a},
                    {"series", series},
                    {"mistakes", run.mistakes},
                    {"updates", run.updates},
                    {"greedy_mistakes_first_half", run.greedy_mistakes_first_half},
                    {"greedy_mistakes_second_half", run.greedy_mistakes_second_half},
                    {"eta_losses", etas},
                    {"aborted", run.aborted},
                    {"diagnostic", run.diagnostic}});
  }
  doc["runs"] = runs;
  Json summary = Json::array();
  for (const auto& row : result.aggregates) {
    summary.push_back({{"algorithm", algorithm_name(row.algorithm)},
                       {"gamma", gamma_json(row.gamma)},
                       {"mean_error", row.mean_error},
                       {"std_error", row.std_error},
                       {"mean_updates", row.mean_updates},
                       {"runs", row.runs},
                       {"aborted", row.aborted}});
  }
  doc["summary"] = summary;
  return doc.dump(2);
}

ReportPaths report(const SweepResult& result, const ExperimentConfig& config, const Dataset& data) {
  const auto paths = report_paths(config.output_path, config.format);
  auto open = [](const std::filesystem::path& p) {
    std::ofstream out(p);
    if (!out) throw IoError("cannot write " + p.string());
    return out;
  };
  const std::string meta = report_metadata(config, data);
  if (config.format == ReportFormat::Json) {
    auto out = open(paths.runs);
    out << report_json(result, meta) << '\n';
    if (!out) throw IoError("write failed for " + paths.runs.string());
    return paths;
  }
  {
    auto out = open(paths.runs);
    write_runs_csv(result.runs, out);
    if (!out) throw IoError("write failed for " + paths.runs.string());
  }
  {
    auto out = open(paths.summary);
    write_summary_csv(result.aggregates, out);
  }
  {
    auto out = open(paths.metadata);
    out << meta << '\n';
  }
  return paths;
}

std::vector<CsvRunRow> parse_runs_csv(std::istream& in) {
  std::vector<CsvRunRow> rows;
  std::string line;
  std::size_t line_no = 0;
  auto field = [&](std::string_view s, auto& out) {
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    if (ec != std::errc() || ptr != s.data() + s.size()) throw ParseError("bad field '" + std::string(s) + "'", line_no);
  };
  while (std::getline(in, line)) {
    ++line_no;
    if (line_no == 1) {
      if (line != "algorithm,gamma,seed,t,cumulative_mistakes,error_rate") throw ParseError("unexpected header", 1);
      continue;
    }
    if (line.empty()) continue;
    std::vector<std::string_view> cols;
    std::string_view rest(line);
    while (true) {
      const auto comma = rest.find(',');
      cols.push_back(rest.substr(0, comma));
      if (comma == std::string_view::npos) break;
      rest.remove_prefix(comma + 1);
    }
    if (cols.size() != 6) throw ParseError("expected 6 columns", line_no);
    CsvRunRow row{parse_algorithm(cols[0]), std::nullopt, 0, {}};
    if (cols[1] != "-") {
      double g = 0.0;
      field(cols[1], g);
      row.gamma = g;
    }
    field(cols[2], row.seed);
    field(cols[3], row.row.t);
    field(cols[4], row.row.cumulative_mistakes);
    field(cols[5], row.row.error_rate);
    rows.push_back(row);
  }
  return rows;
}

}  // namespace soba
