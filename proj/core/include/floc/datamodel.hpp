#pragma once

// Core value types shared across the pipeline: water samples, DO classes,
// sensor frames, model parameters and advisories.

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace floc {

inline constexpr std::size_t kNumFeatures = 4;
inline constexpr std::size_t kNumClasses = 4;

/// Feature order is fixed everywhere: temp, ph, tds, floc.
inline constexpr std::array<std::string_view, kNumFeatures> kFeatureNames{
    "temp", "ph", "tds", "floc"};

using FeatureVector = std::array<double, kNumFeatures>;
using Probabilities = std::array<double, kNumClasses>;

struct WaterSample {
  double temp = 0.0;  // degrees Celsius
  double ph = 0.0;
  double tds = 0.0;   // training-data scale, not converted
  double floc = 0.0;  // ml
  std::optional<double> do_mg_l;

  FeatureVector features() const noexcept { return {temp, ph, tds, floc}; }

  friend bool operator==(const WaterSample&, const WaterSample&) = default;
};

/// Dissolved-oxygen level. Lower values are more severe.
enum class DoClass : std::uint8_t { Shallow = 0, Low = 1, Average = 2, High = 3 };

std::string_view label(DoClass c) noexcept;
std::optional<DoClass> do_class_from_int(long long v) noexcept;
constexpr int to_int(DoClass c) noexcept { return static_cast<int>(c); }

struct SensorFrame {
  std::string device_id;
  std::uint64_t seq = 0;
  std::uint64_t timestamp = 0;  // unix seconds
  WaterSample sample;

  friend bool operator==(const SensorFrame&, const SensorFrame&) = default;
};

struct NormStats {
  FeatureVector mean{};
  FeatureVector std{};  // population standard deviation

  friend bool operator==(const NormStats&, const NormStats&) = default;
};

/// Dense row-major matrix shaped fan_in x fan_out.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c, double fill = 0.0)
      : rows(r), cols(c), data(r * c, fill) {}

  double& operator()(std::size_t r, std::size_t c) noexcept { return data[r * cols + c]; }
  double operator()(std::size_t r, std::size_t c) const noexcept { return data[r * cols + c]; }

  friend bool operator==(const Matrix&, const Matrix&) = default;
};

struct DenseLayer {
  Matrix weights;               // fan_in x fan_out
  std::vector<double> biases;   // fan_out

  friend bool operator==(const DenseLayer&, const DenseLayer&) = default;
};

using BinEdges = std::array<double, 3>;
inline constexpr BinEdges kDefaultBinEdges{3.0, 5.0, 7.0};

/// Metadata recorded alongside trained weights; not used at inference.
struct TrainingMeta {
  std::size_t epochs = 0;
  std::size_t batch_size = 0;
  double learning_rate = 0.0;
  double momentum = 0.0;
  std::string dataset_fingerprint;

  friend bool operator==(const TrainingMeta&, const TrainingMeta&) = default;
};

inline constexpr std::string_view kModelFormatVersion = "1.0.0";

struct ModelParams {
  std::vector<std::size_t> layer_dims;
  std::vector<DenseLayer> layers;
  NormStats norm_stats;
  BinEdges bin_edges = kDefaultBinEdges;
  std::uint64_t seed = 0;
  std::string format_version{kModelFormatVersion};
  TrainingMeta training;

  friend bool operator==(const ModelParams&, const ModelParams&) = default;
};

enum class Severity : std::uint8_t { Info = 0, Warning = 1, Critical = 2 };

std::string_view to_string(Severity s) noexcept;
std::optional<Severity> severity_from_string(std::string_view s) noexcept;

struct Advisory {
  std::string device_id;
  std::uint64_t timestamp = 0;
  DoClass predicted_class = DoClass::Shallow;
  Probabilities probabilities{};
  Severity severity = Severity::Info;
  std::vector<std::string> actions;
  std::vector<std::string> triggered_rules;

  friend bool operator==(const Advisory&, const Advisory&) = default;
};

// Validation: each returns the first violated clause, or nullopt when valid.
std::optional<std::string> validate(const WaterSample& s);
std::optional<std::string> validate(const SensorFrame& f);
std::optional<std::string> validate(const NormStats& n);
std::optional<std::string> validate(const ModelParams& p);
std::optional<std::string> validate(const Advisory& a);

bool is_valid_device_id(std::string_view id) noexcept;

}  // namespace floc
