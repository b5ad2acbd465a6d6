#pragma once

// Feedforward classifier: 4 normalized features -> ReLU hidden layers ->
// 4-way softmax, trained with mean categorical cross-entropy and mini-batch
// SGD with momentum.

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "floc/datamodel.hpp"
#include "floc/dataset.hpp"

namespace floc::nn {

enum class ErrorKind {
  ZeroDim,
  ShapeMismatch,
  NonFiniteActivation,
  NonFiniteInput,
  DivergedLoss,
  InvalidConfig,
  Io,
  SchemaViolation,
  VersionMismatch,
};

std::string_view to_string(ErrorKind k) noexcept;

class NnError : public std::runtime_error {
 public:
  NnError(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

inline const std::vector<std::size_t> kDefaultHidden{16, 16, 16, 16, 16};

struct TrainConfig {
  std::size_t epochs = 150;
  std::size_t batch_size = 32;  // clipped to the training-set size
  double learning_rate = 0.05;
  double momentum = 0.9;
  std::uint64_t seed = 7;
  std::vector<std::size_t> hidden_dims = kDefaultHidden;
  double train_fraction = 0.8;
};

using ConfusionMatrix = std::array<std::array<std::size_t, kNumClasses>, kNumClasses>;

struct TrainReport {
  std::size_t train_size = 0;
  std::size_t test_size = 0;
  std::size_t effective_batch = 0;
  double initial_train_loss = 0.0;
  std::vector<double> epoch_train_loss;  // full-train-set loss after each epoch
  double final_test_loss = 0.0;
  double final_test_accuracy = 0.0;
  ConfusionMatrix confusion{};  // rows: true class, columns: predicted
  double wall_time_s = 0.0;

  double final_train_loss() const {
    return epoch_train_loss.empty() ? initial_train_loss : epoch_train_loss.back();
  }
};

struct EvalReport {
  std::size_t count = 0;
  double accuracy = 0.0;
  double mean_loss = 0.0;
  ConfusionMatrix confusion{};
};

/// Gradient buffers, shaped like ModelParams::layers.
using Gradients = std::vector<DenseLayer>;

/// Labeled rows of already-normalized features.
struct BatchView {
  std::span<const FeatureVector> features;
  std::span<const DoClass> labels;
};

ModelParams init_params(std::size_t input_dim, std::span<const std::size_t> hidden_dims,
                        std::size_t output_dim, std::uint64_t seed);

/// Checks layer shapes chain and all entries are finite.
void check_shapes(const ModelParams& params);

/// Numerically stable softmax (max subtracted before exponentiation).
Probabilities softmax(const std::array<double, kNumClasses>& logits);

std::array<double, kNumClasses> logits(const ModelParams& params, const FeatureVector& x);
Probabilities forward(const ModelParams& params, const FeatureVector& normalized);

double loss(const ModelParams& params, const BatchView& batch);
std::pair<double, Gradients> loss_and_grads(const ModelParams& params, const BatchView& batch);

/// Max relative error |a - n| / max(1e-12, |a| + |n|) between analytic
/// partials and central differences over every weight and bias.
double grad_check(const ModelParams& params, const BatchView& batch, double eps = 1e-5);

/// Index of the largest probability; ties go to the lower (more severe) class.
DoClass argmax(const Probabilities& p) noexcept;

std::pair<DoClass, Probabilities> predict(const ModelParams& params, const WaterSample& raw);

std::pair<ModelParams, TrainReport> train(const dataset::LabeledDataset& data,
                                          const TrainConfig& config);

EvalReport evaluate(const ModelParams& params, const dataset::LabeledDataset& data);

// Model file (JSON text). See docs/model-format.md.
std::string to_json(const ModelParams& params);
ModelParams from_json(std::string_view text);
void save_model(const ModelParams& params, const std::filesystem::path& path);
ModelParams load_model(const std::filesystem::path& path);

}  // namespace floc::nn
