#include "floc/datamodel.hpp"

#include <cmath>

namespace floc {

std::string_view label(DoClass c) noexcept {
  switch (c) {
    case DoClass::Shallow: return "shallow";
    case DoClass::Low: return "low";
    case DoClass::Average: return "average";
    case DoClass::High: return "high";
  }
  return "unknown";
}

std::optional<DoClass> do_class_from_int(long long v) noexcept {
  if (v < 0 || v >= static_cast<long long>(kNumClasses)) return std::nullopt;
  return static_cast<DoClass>(v);
}

std::string_view to_string(Severity s) noexcept {
  switch (s) {
    case Severity::Info: return "info";
    case Severity::Warning: return "warning";
    case Severity::Critical: return "critical";
  }
  return "unknown";
}

std::optional<Severity> severity_from_string(std::string_view s) noexcept {
  if (s == "info") return Severity::Info;
  if (s == "warning") return Severity::Warning;
  if (s == "critical") return Severity::Critical;
  return std::nullopt;
}

bool is_valid_device_id(std::string_view id) noexcept {
  if (id.empty() || id.size() > 32) return false;
  for (char c : id) {
    const bool ok = (c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z') ||
                    (c >= '0' && c <= '9') || c == '_' || c == '-';
    if (!ok) return false;
  }
  return true;
}

std::optional<std::string> validate(const WaterSample& s) {
  if (!std::isfinite(s.temp) || s.temp < 0.0 || s.temp >= 60.0)
    return "temp must be finite and in [0, 60)";
  if (!std::isfinite(s.ph) || s.ph < 0.0 || s.ph > 14.0)
    return "ph must be finite and in [0, 14]";
  if (!std::isfinite(s.tds) || s.tds < 0.0) return "tds must be finite and >= 0";
  if (!std::isfinite(s.floc) || s.floc < 0.0) return "floc must be finite and >= 0";
  if (s.do_mg_l && (!std::isfinite(*s.do_mg_l) || *s.do_mg_l < 0.0))
    return "do_mg_l must be finite and >= 0";
  return std::nullopt;
}

std::optional<std::string> validate(const SensorFrame& f) {
  if (!is_valid_device_id(f.device_id))
    return "device_id must be 1-32 chars from [A-Za-z0-9_-]";
  if (f.sample.do_mg_l) return "live frames carry no do_mg_l";
  return validate(f.sample);
}

std::optional<std::string> validate(const NormStats& n) {
  for (std::size_t i = 0; i < kNumFeatures; ++i) {
    if (!std::isfinite(n.mean[i])) return "norm mean of " + std::string(kFeatureNames[i]) + " not finite";
    if (!std::isfinite(n.std[i]) || n.std[i] <= 0.0)
      return "norm std of " + std::string(kFeatureNames[i]) + " must be > 0";
  }
  return std::nullopt;
}

std::optional<std::string> validate(const ModelParams& p) {
  if (p.layer_dims.size() < 2) return "layer_dims needs at least input and output";
  if (p.layer_dims.front() != kNumFeatures) return "first layer dim must be 4";
  if (p.layer_dims.back() != kNumClasses) return "last layer dim must be 4";
  if (p.layers.size() != p.layer_dims.size() - 1)
    return "number of weight matrices must be len(layer_dims) - 1";
  for (std::size_t l = 0; l < p.layers.size(); ++l) {
    const auto& layer = p.layers[l];
    const auto in = p.layer_dims[l];
    const auto out = p.layer_dims[l + 1];
    if (in == 0 || out == 0) return "layer dims must be >= 1";
    if (layer.weights.rows != in || layer.weights.cols != out ||
        layer.weights.data.size() != in * out)
      return "weight matrix " + std::to_string(l) + " shape mismatch";
    if (layer.biases.size() != out) return "bias vector " + std::to_string(l) + " shape mismatch";
    for (double w : layer.weights.data)
      if (!std::isfinite(w)) return "non-finite weight in layer " + std::to_string(l);
    for (double b : layer.biases)
      if (!std::isfinite(b)) return "non-finite bias in layer " + std::to_string(l);
  }
  if (auto e = validate(p.norm_stats)) return e;
  for (double e : p.bin_edges)
    if (!std::isfinite(e)) return "bin edges must be finite";
  if (!(p.bin_edges[0] < p.bin_edges[1] && p.bin_edges[1] < p.bin_edges[2]))
    return "bin edges must be strictly ascending";
  return std::nullopt;
}

std::optional<std::string> validate(const Advisory& a) {
  double sum = 0.0;
  for (double p : a.probabilities) {
    if (!(p >= 0.0 && p <= 1.0)) return "probabilities must lie in [0, 1]";
    sum += p;
  }
  if (std::abs(sum - 1.0) > 1e-9) return "probabilities must sum to 1";
  if (a.severity != Severity::Info && a.actions.empty())
    return "actions must be nonempty when severity is not info";
  return std::nullopt;
}

}  // namespace floc
