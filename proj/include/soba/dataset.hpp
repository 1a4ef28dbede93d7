#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "soba/linalg.hpp"

namespace soba {

/// One labeled example; labels are 0-based internally.
struct Example {
  SparseVector features;
  std::uint32_t label = 0;

  FeatureView x() const noexcept { return features.view(); }
  friend bool operator==(const Example&, const Example&) = default;
};

/// An ordered, immutable-after-construction stream of examples.
class Dataset {
 public:
  Dataset() = default;
  Dataset(std::vector<Example> examples, std::size_t k, std::size_t d);

  std::size_t size() const noexcept { return examples_.size(); }
  bool empty() const noexcept { return examples_.empty(); }
  std::size_t classes() const noexcept { return k_; }
  std::size_t dim() const noexcept { return d_; }
  /// max_t ||x_t||.
  double x_bound() const noexcept { return x_bound_; }

  const Example& operator[](std::size_t t) const { return examples_[t]; }
  const std::vector<Example>& examples() const noexcept { return examples_; }
  auto begin() const noexcept { return examples_.begin(); }
  auto end() const noexcept { return examples_.end(); }

  /// Original labels from a loaded file, indexed by internal label.
  const std::vector<double>& raw_labels() const noexcept { return raw_labels_; }
  void set_raw_labels(std::vector<double> raw) { raw_labels_ = std::move(raw); }

  /// The generating model of a synthetic dataset, when known.
  const std::optional<RowMatrix>& planted() const noexcept { return planted_; }
  void set_planted(RowMatrix u) { planted_ = std::move(u); }

  /// First n examples (or all if n >= size()).
  Dataset prefix(std::size_t n) const;

  friend bool operator==(const Dataset& a, const Dataset& b);

 private:
  std::vector<Example> examples_;
  std::size_t k_ = 0;
  std::size_t d_ = 0;
  double x_bound_ = 0.0;
  std::vector<double> raw_labels_;
  std::optional<RowMatrix> planted_;
};

enum class DatasetKind { SynSep, SynNonSep, File };

struct DatasetSpec {
  DatasetKind kind = DatasetKind::SynSep;
  std::filesystem::path path;  // File only
  std::size_t n = 100000;
  std::size_t k = 9;
  std::size_t d = 400;
  double noise_rate = 0.0;     // SynNonSep defaults to 0.05
  double margin = 1.0;
  std::uint64_t seed = 0;
  double x_bound = 0.0;        // 0 keeps the natural scale

  static DatasetSpec synsep(std::size_t n, std::size_t k, std::size_t d, std::uint64_t seed);
  static DatasetSpec synnonsep(std::size_t n, std::size_t k, std::size_t d, std::uint64_t seed,
                               double noise_rate = 0.05);
};

/// Linearly separable stream with a planted model of multiclass margin >= spec.margin.
Dataset generate_synsep(const DatasetSpec& spec);

/// generate_synsep followed by label flips at spec.noise_rate; a flip always
/// picks a different class.
Dataset generate_synnonsep(const DatasetSpec& spec);

/// Dispatches on spec.kind (File loads LibSVM text or a snapshot).
Dataset materialize(const DatasetSpec& spec);

/// Reads "label index:value ..." lines with 1-based strictly increasing indices.
/// Labels are remapped to 0..k-1 in sorted order of the distinct raw labels.
Dataset load_libsvm(const std::filesystem::path& path,
                    std::optional<std::size_t> expected_classes = std::nullopt);
Dataset parse_libsvm(std::istream& in, std::optional<std::size_t> expected_classes = std::nullopt);

/// Writes LibSVM text; labels are written as raw labels when present.
void write_libsvm(const Dataset& data, const std::filesystem::path& path);
void write_libsvm(const Dataset& data, std::ostream& out);

/// Uniformly scales features so that max ||x|| equals target_x.
Dataset rescale_features(const Dataset& data, double target_x);

/// Snapshot: a magic line, a one-line JSON header, then a little-endian
/// binary block of (u32 label, u32 nnz, nnz x u32 index, nnz x f64 value).
void save_snapshot(const Dataset& data, const std::filesystem::path& path);
Dataset load_snapshot(const std::filesystem::path& path);

}  // namespace soba
