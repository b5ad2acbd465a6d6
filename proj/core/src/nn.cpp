#include "floc/nn.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>

#include "floc/random.hpp"

namespace floc::nn {

namespace {

// Per-sample activations kept for the backward pass. act[0] is the input,
// pre[l] / act[l + 1] belong to layer l.
struct Trace {
  std::vector<std::vector<double>> pre;
  std::vector<std::vector<double>> act;

  explicit Trace(const ModelParams& p) {
    pre.resize(p.layers.size());
    act.resize(p.layers.size() + 1);
    act[0].resize(p.layer_dims.front());
    for (std::size_t l = 0; l < p.layers.size(); ++l) {
      pre[l].resize(p.layer_dims[l + 1]);
      act[l + 1].resize(p.layer_dims[l + 1]);
    }
  }
};

void run_forward(const ModelParams& p, const FeatureVector& x, Trace& t) {
  std::copy(x.begin(), x.end(), t.act[0].begin());
  const auto n_layers = p.layers.size();
  for (std::size_t l = 0; l < n_layers; ++l) {
    const auto& W = p.layers[l].weights;
    auto& z = t.pre[l];
    std::copy(p.layers[l].biases.begin(), p.layers[l].biases.end(), z.begin());
    const auto& a = t.act[l];
    for (std::size_t i = 0; i < W.rows; ++i) {
      const double ai = a[i];
      if (ai == 0.0) continue;
      const double* row = &W.data[i * W.cols];
      for (std::size_t j = 0; j < W.cols; ++j) z[j] += ai * row[j];
    }
    auto& out = t.act[l + 1];
    if (l + 1 < n_layers) {
      for (std::size_t j = 0; j < z.size(); ++j) out[j] = z[j] > 0.0 ? z[j] : 0.0;
    } else {
      std::copy(z.begin(), z.end(), out.begin());
    }
  }
}

std::array<double, kNumClasses> output_logits(const Trace& t) {
  std::array<double, kNumClasses> out{};
  std::copy(t.pre.back().begin(), t.pre.back().end(), out.begin());
  return out;
}

// -log softmax(z)[label], via log-sum-exp.
double sample_loss(const std::array<double, kNumClasses>& z, DoClass label) {
  const double m = *std::max_element(z.begin(), z.end());
  double s = 0.0;
  for (double v : z) s += std::exp(v - m);
  return (m + std::log(s)) - z[static_cast<std::size_t>(label)];
}

void check_logits(const std::array<double, kNumClasses>& z) {
  for (double v : z)
    if (!std::isfinite(v)) throw NnError(ErrorKind::NonFiniteActivation, "non-finite output logit");
}

void check_batch(const ModelParams& p, const BatchView& b) {
  check_shapes(p);
  if (b.features.empty()) throw NnError(ErrorKind::ShapeMismatch, "empty batch");
  if (b.features.size() != b.labels.size())
    throw NnError(ErrorKind::ShapeMismatch, "feature and label counts differ");
}

Gradients zeros_like(const ModelParams& p) {
  Gradients g;
  g.reserve(p.layers.size());
  for (const auto& layer : p.layers)
    g.push_back({Matrix(layer.weights.rows, layer.weights.cols), std::vector<double>(layer.biases.size())});
  return g;
}

std::vector<FeatureVector> normalized_features(const NormStats& stats,
                                               const dataset::LabeledDataset& data) {
  std::vector<FeatureVector> out;
  out.reserve(data.size());
  for (const auto& s : data.samples) out.push_back(dataset::apply_norm(stats, s));
  return out;
}

}  // namespace

std::string_view to_string(ErrorKind k) noexcept {
  switch (k) {
    case ErrorKind::ZeroDim: return "ZeroDim";
    case ErrorKind::ShapeMismatch: return "ShapeMismatch";
    case ErrorKind::NonFiniteActivation: return "NonFiniteActivation";
    case ErrorKind::NonFiniteInput: return "NonFiniteInput";
    case ErrorKind::DivergedLoss: return "DivergedLoss";
    case ErrorKind::InvalidConfig: return "InvalidConfig";
    case ErrorKind::Io: return "Io";
    case ErrorKind::SchemaViolation: return "SchemaViolation";
    case ErrorKind::VersionMismatch: return "VersionMismatch";
  }
  return "Unknown";
}

ModelParams init_params(std::size_t input_dim, std::span<const std::size_t> hidden_dims,
                        std::size_t output_dim, std::uint64_t seed) {
  ModelParams p;
  p.layer_dims.push_back(input_dim);
  p.layer_dims.insert(p.layer_dims.end(), hidden_dims.begin(), hidden_dims.end());
  p.layer_dims.push_back(output_dim);
  for (auto d : p.layer_dims)
    if (d == 0) throw NnError(ErrorKind::ZeroDim, "layer dimensions must be >= 1");

  Rng rng(seed);
  for (std::size_t l = 0; l + 1 < p.layer_dims.size(); ++l) {
    const auto fan_in = p.layer_dims[l];
    const auto fan_out = p.layer_dims[l + 1];
    DenseLayer layer{Matrix(fan_in, fan_out), std::vector<double>(fan_out, 0.0)};
    const double scale = std::sqrt(2.0 / static_cast<double>(fan_in));
    for (auto& w : layer.weights.data) w = rng.normal(0.0, scale);
    p.layers.push_back(std::move(layer));
  }
  p.norm_stats.mean.fill(0.0);
  p.norm_stats.std.fill(1.0);
  p.seed = seed;
  return p;
}

void check_shapes(const ModelParams& p) {
  if (p.layer_dims.size() < 2 || p.layers.size() != p.layer_dims.size() - 1)
    throw NnError(ErrorKind::ShapeMismatch, "layer count does not match layer_dims");
  if (p.layer_dims.front() != kNumFeatures || p.layer_dims.back() != kNumClasses)
    throw NnError(ErrorKind::ShapeMismatch, "network must map 4 features to 4 classes");
  for (std::size_t l = 0; l < p.layers.size(); ++l) {
    const auto& L = p.layers[l];
    if (L.weights.rows != p.layer_dims[l] || L.weights.cols != p.layer_dims[l + 1] ||
        L.weights.data.size() != L.weights.rows * L.weights.cols ||
        L.biases.size() != p.layer_dims[l + 1])
      throw NnError(ErrorKind::ShapeMismatch, "layer " + std::to_string(l) + " has wrong shape");
  }
}

Probabilities softmax(const std::array<double, kNumClasses>& z) {
  const double m = *std::max_element(z.begin(), z.end());
  Probabilities p{};
  double s = 0.0;
  for (std::size_t k = 0; k < kNumClasses; ++k) {
    p[k] = std::exp(z[k] - m);
    s += p[k];
  }
  for (auto& v : p) v /= s;
  return p;
}

std::array<double, kNumClasses> logits(const ModelParams& params, const FeatureVector& x) {
  check_shapes(params);
  Trace t(params);
  run_forward(params, x, t);
  return output_logits(t);
}

Probabilities forward(const ModelParams& params, const FeatureVector& normalized) {
  for (double v : normalized)
    if (!std::isfinite(v)) throw NnError(ErrorKind::NonFiniteInput, "non-finite feature");
  const auto z = logits(params, normalized);
  check_logits(z);
  return softmax(z);
}

double loss(const ModelParams& params, const BatchView& batch) {
  check_batch(params, batch);
  Trace t(params);
  double total = 0.0;
  for (std::size_t n = 0; n < batch.features.size(); ++n) {
    run_forward(params, batch.features[n], t);
    total += sample_loss(output_logits(t), batch.labels[n]);
  }
  return total / static_cast<double>(batch.features.size());
}

std::pair<double, Gradients> loss_and_grads(const ModelParams& params, const BatchView& batch) {
  check_batch(params, batch);
  const auto n_layers = params.layers.size();
  Gradients g = zeros_like(params);
  Trace t(params);
  std::vector<std::vector<double>> delta(n_layers);
  for (std::size_t l = 0; l < n_layers; ++l) delta[l].resize(params.layer_dims[l + 1]);

  double total = 0.0;
  for (std::size_t n = 0; n < batch.features.size(); ++n) {
    run_forward(params, batch.features[n], t);
    const auto z = output_logits(t);
    const auto label = static_cast<std::size_t>(batch.labels[n]);
    total += sample_loss(z, batch.labels[n]);

    // Softmax + cross-entropy: dL/dz = p - onehot.
    const auto p = softmax(z);
    for (std::size_t k = 0; k < kNumClasses; ++k) delta[n_layers - 1][k] = p[k] - (k == label ? 1.0 : 0.0);

    for (std::size_t l = n_layers; l-- > 0;) {
      const auto& a = t.act[l];
      const auto& d = delta[l];
      auto& gW = g[l].weights;
      for (std::size_t i = 0; i < gW.rows; ++i) {
        const double ai = a[i];
        if (ai == 0.0) continue;
        double* row = &gW.data[i * gW.cols];
        for (std::size_t j = 0; j < gW.cols; ++j) row[j] += ai * d[j];
      }
      for (std::size_t j = 0; j < d.size(); ++j) g[l].biases[j] += d[j];

      if (l == 0) break;
      // Back through W and the ReLU of the previous layer (subgradient 0 at z = 0).
      const auto& W = params.layers[l].weights;
      auto& prev = delta[l - 1];
      const auto& zprev = t.pre[l - 1];
      for (std::size_t i = 0; i < W.rows; ++i) {
        if (!(zprev[i] > 0.0)) {
          prev[i] = 0.0;
          continue;
        }
        const double* row = &W.data[i * W.cols];
        double s = 0.0;
        for (std::size_t j = 0; j < W.cols; ++j) s += row[j] * d[j];
        prev[i] = s;
      }
    }
  }

  const double inv = 1.0 / static_cast<double>(batch.features.size());
  for (auto& layer : g) {
    for (auto& v : layer.weights.data) v *= inv;
    for (auto& v : layer.biases) v *= inv;
  }
  return {total * inv, std::move(g)};
}

namespace {

// Same loss as loss(), accumulated in long double. The central difference
// divides a loss delta by 2 eps, so double rounding alone would put a floor
// of about 1e-11 under every numeric partial. inputs[n][l] caches the
// unperturbed input of layer l for sample n; evaluation restarts at `from`.
using ExtendedInputs = std::vector<std::vector<std::vector<long double>>>;

long double loss_extended(const ModelParams& p, const BatchView& batch, std::size_t from,
                          ExtendedInputs* record, const ExtendedInputs& inputs) {
  long double total = 0.0L;
  std::vector<long double> a, z;
  for (std::size_t n = 0; n < batch.features.size(); ++n) {
    if (record) {
      a.assign(batch.features[n].begin(), batch.features[n].end());
    } else {
      a = inputs[n][from];
    }
    for (std::size_t l = from; l < p.layers.size(); ++l) {
      if (record) (*record)[n].push_back(a);
      const auto& W = p.layers[l].weights;
      z.assign(p.layers[l].biases.begin(), p.layers[l].biases.end());
      for (std::size_t i = 0; i < W.rows; ++i) {
        const long double ai = a[i];
        if (ai == 0.0L) continue;
        const double* row = &W.data[i * W.cols];
        for (std::size_t j = 0; j < W.cols; ++j) z[j] += ai * row[j];
      }
      if (l + 1 < p.layers.size())
        for (auto& v : z) v = v > 0.0L ? v : 0.0L;
      a.swap(z);
    }
    const long double m = *std::max_element(a.begin(), a.end());
    long double s = 0.0L;
    for (long double v : a) s += std::exp(v - m);
    total += (m + std::log(s)) - a[static_cast<std::size_t>(batch.labels[n])];
  }
  return total / static_cast<long double>(batch.features.size());
}

}  // namespace

double grad_check(const ModelParams& params, const BatchView& batch, double eps) {
  const auto [l0, grads] = loss_and_grads(params, batch);
  (void)l0;
  ModelParams probe = params;
  double worst = 0.0;
  ExtendedInputs inputs(batch.features.size());
  loss_extended(params, batch, 0, &inputs, inputs);
  std::size_t layer = 0;

  auto compare = [&](double& slot, double analytic) {
    const double saved = slot;
    slot = saved + eps;
    const long double up = loss_extended(probe, batch, layer, nullptr, inputs);
    slot = saved - eps;
    const long double down = loss_extended(probe, batch, layer, nullptr, inputs);
    slot = saved;
    // The perturbation actually applied, after rounding saved +- eps.
    const long double step = static_cast<long double>(saved + eps) - static_cast<long double>(saved - eps);
    const double numeric = static_cast<double>((up - down) / step);
    const double err =
        std::abs(analytic - numeric) / std::max(1e-12, std::abs(analytic) + std::abs(numeric));
    worst = std::max(worst, err);
  };

  for (std::size_t l = 0; l < probe.layers.size(); ++l) {
    layer = l;
    auto& W = probe.layers[l].weights.data;
    for (std::size_t i = 0; i < W.size(); ++i) compare(W[i], grads[l].weights.data[i]);
    auto& b = probe.layers[l].biases;
    for (std::size_t j = 0; j < b.size(); ++j) compare(b[j], grads[l].biases[j]);
  }
  return worst;
}

DoClass argmax(const Probabilities& p) noexcept {
  std::size_t best = 0;
  for (std::size_t k = 1; k < kNumClasses; ++k)
    if (p[k] > p[best]) best = k;
  return static_cast<DoClass>(best);
}

std::pair<DoClass, Probabilities> predict(const ModelParams& params, const WaterSample& raw) {
  for (double v : raw.features())
    if (!std::isfinite(v)) throw NnError(ErrorKind::NonFiniteInput, "sample has a non-finite feature");
  const auto probs = forward(params, dataset::apply_norm(params.norm_stats, raw));
  return {argmax(probs), probs};
}

EvalReport evaluate(const ModelParams& params, const dataset::LabeledDataset& data) {
  EvalReport r;
  r.count = data.size();
  if (data.empty()) return r;
  std::size_t correct = 0;
  double total = 0.0;
  for (std::size_t n = 0; n < data.size(); ++n) {
    const auto x = dataset::apply_norm(params.norm_stats, data.samples[n]);
    const auto z = logits(params, x);
    check_logits(z);
    total += sample_loss(z, data.labels[n]);
    const auto pred = argmax(softmax(z));
    const auto truth = data.labels[n];
    ++r.confusion[static_cast<std::size_t>(truth)][static_cast<std::size_t>(pred)];
    if (pred == truth) ++correct;
  }
  r.accuracy = static_cast<double>(correct) / static_cast<double>(data.size());
  r.mean_loss = total / static_cast<double>(data.size());
  return r;
}

std::pair<ModelParams, TrainReport> train(const dataset::LabeledDataset& data,
                                          const TrainConfig& cfg) {
  if (cfg.epochs < 1 || cfg.batch_size < 1 || !(cfg.learning_rate > 0.0) ||
      !(cfg.momentum >= 0.0 && cfg.momentum < 1.0))
    throw NnError(ErrorKind::InvalidConfig,
                  "need epochs >= 1, batch >= 1, lr > 0 and momentum in [0, 1)");
  const auto started = std::chrono::steady_clock::now();

  const auto parts = dataset::split(data, cfg.train_fraction, cfg.seed);
  const auto stats = dataset::fit_norm(parts.train);

  ModelParams params = init_params(kNumFeatures, cfg.hidden_dims, kNumClasses, cfg.seed);
  params.norm_stats = stats;
  params.bin_edges = kDefaultBinEdges;

  const auto x_train = normalized_features(stats, parts.train);
  const auto& y_train = parts.train.labels;
  const BatchView full{x_train, y_train};

  TrainReport report;
  report.train_size = parts.train.size();
  report.test_size = parts.test.size();
  report.effective_batch = std::min(cfg.batch_size, parts.train.size());
  report.initial_train_loss = loss(params, full);
  report.epoch_train_loss.reserve(cfg.epochs);

  Gradients velocity = zeros_like(params);
  std::vector<std::size_t> order(x_train.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::vector<FeatureVector> bx;
  std::vector<DoClass> by;
  // Mini-batch order uses its own stream so the split and init stay independent of it.
  Rng shuffler(cfg.seed ^ 0x9e3779b97f4a7c15ULL);

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    shuffler.shuffle(std::span<std::size_t>(order));
    for (std::size_t start = 0; start < order.size(); start += report.effective_batch) {
      const auto stop = std::min(order.size(), start + report.effective_batch);
      bx.clear();
      by.clear();
      for (std::size_t k = start; k < stop; ++k) {
        bx.push_back(x_train[order[k]]);
        by.push_back(y_train[order[k]]);
      }
      const auto [batch_loss, grads] = loss_and_grads(params, {bx, by});
      if (!std::isfinite(batch_loss))
        throw NnError(ErrorKind::DivergedLoss, "loss became non-finite in epoch " + std::to_string(epoch + 1));
      for (std::size_t l = 0; l < params.layers.size(); ++l) {
        auto& W = params.layers[l].weights.data;
        auto& vW = velocity[l].weights.data;
        const auto& gW = grads[l].weights.data;
        for (std::size_t i = 0; i < W.size(); ++i) {
          vW[i] = cfg.momentum * vW[i] - cfg.learning_rate * gW[i];
          W[i] += vW[i];
        }
        auto& b = params.layers[l].biases;
        auto& vb = velocity[l].biases;
        const auto& gb = grads[l].biases;
        for (std::size_t j = 0; j < b.size(); ++j) {
          vb[j] = cfg.momentum * vb[j] - cfg.learning_rate * gb[j];
          b[j] += vb[j];
        }
      }
    }
    const double epoch_loss = loss(params, full);
    if (!std::isfinite(epoch_loss))
      throw NnError(ErrorKind::DivergedLoss, "loss became non-finite in epoch " + std::to_string(epoch + 1));
    report.epoch_train_loss.push_back(epoch_loss);
  }

  for (const auto& layer : params.layers) {
    for (double w : layer.weights.data)
      if (!std::isfinite(w)) throw NnError(ErrorKind::DivergedLoss, "weights became non-finite");
  }

  const auto test = evaluate(params, parts.test);
  report.final_test_loss = test.mean_loss;
  report.final_test_accuracy = test.accuracy;
  report.confusion = test.confusion;

  params.training = TrainingMeta{cfg.epochs, report.effective_batch, cfg.learning_rate,
                                 cfg.momentum, dataset::fingerprint(data)};
  report.wall_time_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return {std::move(params), std::move(report)};
}

}  // namespace floc::nn
