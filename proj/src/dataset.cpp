#include "soba/dataset.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <map>
#include <random>
#include <sstream>

#include <nlohmann/json.hpp>

#include "soba/errors.hpp"
#include "soba/learner.hpp"
#include "soba/losses.hpp"

namespace soba {

Dataset::Dataset(std::vector<Example> examples, std::size_t k, std::size_t d)
    : examples_(std::move(examples)), k_(k), d_(d) {
  for (const auto& ex : examples_) {
    if (ex.label >= k_) throw ConfigError("label out of range");
    if (ex.features.view().extent() > d_) throw ConfigError("feature index out of range");
    x_bound_ = std::max(x_bound_, std::sqrt(ex.features.squared_norm()));
  }
}

Dataset Dataset::prefix(std::size_t n) const {
  if (n >= size()) return *this;
  Dataset out(std::vector<Example>(examples_.begin(), examples_.begin() + static_cast<std::ptrdiff_t>(n)), k_, d_);
  out.raw_labels_ = raw_labels_;
  out.planted_ = planted_;
  return out;
}

bool operator==(const Dataset& a, const Dataset& b) {
  return a.k_ == b.k_ && a.d_ == b.d_ && a.examples_ == b.examples_ && a.raw_labels_ == b.raw_labels_;
}

DatasetSpec DatasetSpec::synsep(std::size_t n, std::size_t k, std::size_t d, std::uint64_t seed) {
  DatasetSpec s;
  s.kind = DatasetKind::SynSep;
  s.n = n;
  s.k = k;
  s.d = d;
  s.seed = seed;
  return s;
}

DatasetSpec DatasetSpec::synnonsep(std::size_t n, std::size_t k, std::size_t d, std::uint64_t seed,
                                   double noise_rate) {
  DatasetSpec s = synsep(n, k, d, seed);
  s.kind = DatasetKind::SynNonSep;
  s.noise_rate = noise_rate;
  return s;
}

namespace {

// Stream for label noise, decorrelated from the feature stream.
constexpr std::uint64_t kNoiseStream = 0x6a09e667f3bcc909ULL;

Dataset generate_separable(const DatasetSpec& spec) {
  if (spec.k < 2) throw ConfigError("need at least two classes");
  if (spec.d < 1) throw ConfigError("need at least one feature");
  if (!(spec.margin > 0.0)) throw ConfigError("margin must be positive");

  Rng rng(spec.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  const auto k = static_cast<Eigen::Index>(spec.k);
  const auto d = static_cast<Eigen::Index>(spec.d);

  RowMatrix planted(k, d);
  for (Eigen::Index i = 0; i < k; ++i) {
    for (Eigen::Index j = 0; j < d; ++j) planted(i, j) = normal(rng);
    planted.row(i).normalize();
  }

  std::vector<Example> examples;
  examples.reserve(spec.n);
  const std::size_t max_attempts = 1000 * std::max<std::size_t>(spec.n, 1);
  std::size_t attempts = 0;
  std::vector<double> dense(spec.d);
  while (examples.size() < spec.n) {
    if (++attempts > max_attempts) {
      throw GenerationError("could not reach margin " + std::to_string(spec.margin) + " after " +
                            std::to_string(max_attempts) + " draws");
    }
    // Gaussian coordinates plus a constant bias in the last slot.
    for (std::size_t j = 0; j + 1 < spec.d; ++j) dense[j] = normal(rng);
    dense[spec.d - 1] = 1.0;
    const Vector scores = planted * Eigen::Map<const Vector>(dense.data(), d);
    const std::span<const double> s{scores.data(), spec.k};
    const std::size_t y = argmax_class(s);
    if (scores(y) - scores(argmax_class_excluding(s, y)) < spec.margin) continue;
    examples.push_back({SparseVector::from_dense(dense), static_cast<std::uint32_t>(y)});
  }

  Dataset out(std::move(examples), spec.k, spec.d);
  out.set_planted(std::move(planted));
  if (spec.x_bound > 0.0) out = rescale_features(out, spec.x_bound);
  return out;
}

}  // namespace

Dataset generate_synsep(const DatasetSpec& spec) {
  if (spec.kind != DatasetKind::SynSep) throw ConfigError("spec is not SynSep");
  return generate_separable(spec);
}

Dataset generate_synnonsep(const DatasetSpec& spec) {
  if (spec.kind != DatasetKind::SynNonSep) throw ConfigError("spec is not SynNonSep");
  if (!(spec.noise_rate >= 0.0 && spec.noise_rate <= 1.0)) throw ConfigError("noise rate must lie in [0, 1]");
  Dataset clean = generate_separable(spec);
  Rng noise(spec.seed ^ kNoiseStream);
  std::uniform_int_distribution<std::uint32_t> other(0, static_cast<std::uint32_t>(spec.k - 2));
  std::vector<Example> examples = clean.examples();
  for (auto& ex : examples) {
    if (uniform01(noise) < spec.noise_rate) {
      const std::uint32_t r = other(noise);
      ex.label = r >= ex.label ? r + 1 : r;
    }
  }
  Dataset out(std::move(examples), clean.classes(), clean.dim());
  out.set_planted(*clean.planted());
  return out;
}

Dataset materialize(const DatasetSpec& spec) {
  switch (spec.kind) {
    case DatasetKind::SynSep:
      return generate_synsep(spec);
    case DatasetKind::SynNonSep:
      return generate_synnonsep(spec);
    case DatasetKind::File: {
      std::ifstream probe(spec.path, std::ios::binary);
      if (!probe) throw IoError("cannot open " + spec.path.string());
      std::string first;
      std::getline(probe, first);
      Dataset data = first == "SOBA-DATASET" ? load_snapshot(spec.path) : load_libsvm(spec.path);
      if (spec.n > 0) data = data.prefix(spec.n);
      if (spec.x_bound > 0.0) data = rescale_features(data, spec.x_bound);
      return data;
    }
  }
  throw ConfigError("unknown dataset kind");
}

namespace {

template <typename T>
bool parse_number(std::string_view token, T& out) {
  if (!token.empty() && token.front() == '+') token.remove_prefix(1);
  const auto* end = token.data() + token.size();
  const auto [ptr, ec] = std::from_chars(token.data(), end, out);
  return ec == std::errc() && ptr == end;
}

struct RawExample {
  double label;
  SparseVector features;
};

}  // namespace

Dataset parse_libsvm(std::istream& in, std::optional<std::size_t> expected_classes) {
  std::vector<RawExample> raw;
  std::size_t d = 0;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::istringstream tokens(line);
    std::string token;
    if (!(tokens >> token)) continue;  // blank line

    RawExample ex;
    if (!parse_number(std::string_view(token), ex.label) || !std::isfinite(ex.label)) {
      throw ParseError("bad label '" + token + "'", line_no);
    }
    std::uint64_t previous = 0;
    while (tokens >> token) {
      const auto colon = token.find(':');
      if (colon == std::string::npos) throw ParseError("expected index:value, got '" + token + "'", line_no);
      std::uint64_t index = 0;
      double value = 0.0;
      if (!parse_number(std::string_view(token).substr(0, colon), index) || index == 0) {
        throw ParseError("bad feature index in '" + token + "'", line_no);
      }
      if (!parse_number(std::string_view(token).substr(colon + 1), value) || !std::isfinite(value)) {
        throw ParseError("bad feature value in '" + token + "'", line_no);
      }
      if (index <= previous) throw ParseError("feature indices must be strictly increasing", line_no);
      if (index > std::numeric_limits<std::uint32_t>::max()) throw ParseError("feature index too large", line_no);
      previous = index;
      ex.features.index.push_back(static_cast<std::uint32_t>(index - 1));
      ex.features.value.push_back(value);
    }
    d = std::max<std::size_t>(d, previous);
    raw.push_back(std::move(ex));
  }

  std::map<double, std::uint32_t> label_ids;
  for (const auto& ex : raw) label_ids.emplace(ex.label, 0);
  std::vector<double> raw_labels;
  for (auto& [value, id] : label_ids) {
    id = static_cast<std::uint32_t>(raw_labels.size());
    raw_labels.push_back(value);
  }
  std::size_t k = raw_labels.size();
  if (expected_classes) {
    if (k > *expected_classes) {
      throw ParseError("found " + std::to_string(k) + " distinct labels, expected at most " +
                           std::to_string(*expected_classes),
                       line_no);
    }
    k = *expected_classes;
  }

  std::vector<Example> examples;
  examples.reserve(raw.size());
  for (auto& ex : raw) examples.push_back({std::move(ex.features), label_ids.at(ex.label)});
  Dataset out(std::move(examples), k, std::max<std::size_t>(d, 1));
  out.set_raw_labels(std::move(raw_labels));
  return out;
}

Dataset load_libsvm(const std::filesystem::path& path, std::optional<std::size_t> expected_classes) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  return parse_libsvm(in, expected_classes);
}

namespace {

void put_double(std::string& out, double v) {
  char buf[32];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  out.append(buf, ptr);
}

}  // namespace

void write_libsvm(const Dataset& data, std::ostream& out) {
  std::string line;
  for (const auto& ex : data) {
    line.clear();
    const double label = ex.label < data.raw_labels().size() ? data.raw_labels()[ex.label]
                                                              : static_cast<double>(ex.label + 1);
    put_double(line, label);
    for (std::size_t a = 0; a < ex.features.nnz(); ++a) {
      line += ' ';
      line += std::to_string(ex.features.index[a] + 1);
      line += ':';
      put_double(line, ex.features.value[a]);
    }
    line += '\n';
    out << line;
  }
}

void write_libsvm(const Dataset& data, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  write_libsvm(data, out);
  if (!out) throw IoError("write failed for " + path.string());
}

Dataset rescale_features(const Dataset& data, double target_x) {
  if (!(target_x > 0.0)) throw ConfigError("target norm must be positive");
  const double current = data.x_bound();
  if (current == 0.0 || current == target_x) return data;
  const double factor = target_x / current;
  std::vector<Example> examples = data.examples();
  for (auto& ex : examples) {
    for (double& v : ex.features.value) v *= factor;
  }
  Dataset out(std::move(examples), data.classes(), data.dim());
  out.set_raw_labels(data.raw_labels());
  // Keeps the planted margins: (U/c)(c x) = U x.
  if (data.planted()) out.set_planted(*data.planted() / factor);
  return out;
}

namespace {

constexpr const char* kSnapshotMagic = "SOBA-DATASET";

template <typename T>
void write_le(std::ostream& out, T v) {
  static_assert(std::endian::native == std::endian::little, "snapshot I/O assumes a little-endian host");
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

template <typename T>
T read_le(std::istream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof v);
  if (!in) throw IoError("truncated dataset snapshot");
  return v;
}

}  // namespace

void save_snapshot(const Dataset& data, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  nlohmann::ordered_json header;
  header["version"] = 1;
  header["n"] = data.size();
  header["k"] = data.classes();
  header["d"] = data.dim();
  header["x_bound"] = data.x_bound();
  header["raw_labels"] = data.raw_labels();
  if (data.planted()) {
    const Vector flat = mat_to_vec(*data.planted());
    header["planted"] = std::vector<double>(flat.data(), flat.data() + flat.size());
  } else {
    header["planted"] = nullptr;
  }
  out << kSnapshotMagic << '\n' << header.dump() << '\n';
  for (const auto& ex : data) {
    write_le<std::uint32_t>(out, ex.label);
    write_le<std::uint32_t>(out, static_cast<std::uint32_t>(ex.features.nnz()));
    for (auto idx : ex.features.index) write_le<std::uint32_t>(out, idx);
    for (double v : ex.features.value) write_le<double>(out, v);
  }
  if (!out) throw IoError("write failed for " + path.string());
}

Dataset load_snapshot(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::string magic, header_line;
  std::getline(in, magic);
  if (magic != kSnapshotMagic) throw IoError(path.string() + " is not a dataset snapshot");
  std::getline(in, header_line);
  const auto header = nlohmann::json::parse(header_line);
  const auto n = header.at("n").get<std::size_t>();
  const auto k = header.at("k").get<std::size_t>();
  const auto d = header.at("d").get<std::size_t>();

  std::vector<Example> examples(n);
  for (auto& ex : examples) {
    ex.label = read_le<std::uint32_t>(in);
    const auto nnz = read_le<std::uint32_t>(in);
    ex.features.index.resize(nnz);
    ex.features.value.resize(nnz);
    for (auto& idx : ex.features.index) idx = read_le<std::uint32_t>(in);
    for (double& v : ex.features.value) v = read_le<double>(in);
  }
  Dataset out(std::move(examples), k, d);
  out.set_raw_labels(header.at("raw_labels").get<std::vector<double>>());
  if (!header.at("planted").is_null()) {
    const auto flat = header.at("planted").get<std::vector<double>>();
    out.set_planted(vec_to_mat(Eigen::Map<const Vector>(flat.data(), static_cast<Eigen::Index>(flat.size())), k, d));
  }
  return out;
}

}  // namespace soba
