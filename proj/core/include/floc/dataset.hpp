#pragma once

// Training data: CSV loading (columns temp,do,ph,tds,floc), DO binning,
// z-score normalization and the seeded train/test split.

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "floc/datamodel.hpp"

namespace floc::dataset {

enum class ErrorKind {
  Io,
  MissingColumn,
  RowParse,
  EmptyFile,
  InvariantViolation,
  NonFinite,
  ConstantFeature,
  DegenerateSplit,
};

std::string_view to_string(ErrorKind k) noexcept;

class DatasetError : public std::runtime_error {
 public:
  DatasetError(ErrorKind kind, const std::string& what, std::size_t line = 0,
               std::string field = {})
      : std::runtime_error(what), kind_(kind), line_(line), field_(std::move(field)) {}

  ErrorKind kind() const noexcept { return kind_; }
  /// 1-based source line for RowParse / InvariantViolation, 0 otherwise.
  std::size_t line() const noexcept { return line_; }
  const std::string& field() const noexcept { return field_; }

 private:
  ErrorKind kind_;
  std::size_t line_;
  std::string field_;
};

struct LabeledDataset {
  std::vector<WaterSample> samples;
  std::vector<DoClass> labels;

  std::size_t size() const noexcept { return samples.size(); }
  bool empty() const noexcept { return samples.empty(); }
  /// N x 4 feature rows in the fixed temp, ph, tds, floc order.
  std::vector<FeatureVector> feature_matrix() const;
  /// Appends one sample; the label is derived from its do_mg_l.
  void push_back(const WaterSample& s, const BinEdges& edges = kDefaultBinEdges);
  LabeledDataset subset(const std::vector<std::size_t>& indices) const;
};

/// Canonical CSV header.
inline constexpr std::string_view kCsvHeader = "temp,do,ph,tds,floc";

DoClass bin_do(double do_mg_l, const BinEdges& edges = kDefaultBinEdges);

LabeledDataset load_csv(const std::filesystem::path& path, bool header_expected,
                        const BinEdges& edges = kDefaultBinEdges);
LabeledDataset parse_csv(std::string_view text, bool header_expected,
                         const BinEdges& edges = kDefaultBinEdges);
void write_csv(const std::filesystem::path& path, const LabeledDataset& data);

NormStats fit_norm(const LabeledDataset& data);
FeatureVector apply_norm(const NormStats& stats, const FeatureVector& features);
inline FeatureVector apply_norm(const NormStats& stats, const WaterSample& s) {
  return apply_norm(stats, s.features());
}

struct Split {
  LabeledDataset train;
  LabeledDataset test;
  std::vector<std::size_t> train_indices;
  std::vector<std::size_t> test_indices;
};

/// Fisher-Yates shuffle with Rng(seed), then the first floor(N * fraction)
/// shuffled rows become the training set.
Split split(const LabeledDataset& data, double train_fraction, std::uint64_t seed);

/// FNV-1a 64 over the canonical rendering of every row; hex string.
std::string fingerprint(const LabeledDataset& data);

}  // namespace floc::dataset
