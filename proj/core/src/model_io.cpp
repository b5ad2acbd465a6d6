#include <fstream>
#include <sstream>

#include <json.hpp>

#include "floc/nn.hpp"

namespace floc::nn {

namespace {

using ojson = nlohmann::ordered_json;

[[noreturn]] void schema(const std::string& what) {
  throw NnError(ErrorKind::SchemaViolation, "model file: " + what);
}

const ojson& require(const ojson& obj, const char* key) {
  if (!obj.is_object() || !obj.contains(key)) schema(std::string("missing key '") + key + "'");
  return obj.at(key);
}

double number(const ojson& v, const char* what) {
  if (!v.is_number()) schema(std::string(what) + " must be a number");
  return v.get<double>();
}

std::size_t count(const ojson& v, const char* what) {
  if (!v.is_number_unsigned()) schema(std::string(what) + " must be a non-negative integer");
  return v.get<std::size_t>();
}

std::vector<double> numbers(const ojson& v, const char* what) {
  if (!v.is_array()) schema(std::string(what) + " must be an array");
  std::vector<double> out;
  out.reserve(v.size());
  for (const auto& x : v) out.push_back(number(x, what));
  return out;
}

FeatureVector feature_vector(const ojson& v, const char* what) {
  const auto xs = numbers(v, what);
  if (xs.size() != kNumFeatures) schema(std::string(what) + " must have 4 entries");
  FeatureVector out{};
  std::copy(xs.begin(), xs.end(), out.begin());
  return out;
}

int major_of(const std::string& version) {
  const auto dot = version.find('.');
  try {
    return std::stoi(version.substr(0, dot));
  } catch (const std::exception&) {
    schema("format_version '" + version + "' is not a semantic version");
  }
}

}  // namespace

std::string to_json(const ModelParams& p) {
  ojson j;
  j["format_version"] = p.format_version;
  j["layer_dims"] = p.layer_dims;
  ojson layers = ojson::array();
  for (const auto& L : p.layers) {
    ojson l;
    l["fan_in"] = L.weights.rows;
    l["fan_out"] = L.weights.cols;
    l["weights"] = L.weights.data;
    l["biases"] = L.biases;
    layers.push_back(std::move(l));
  }
  j["layers"] = std::move(layers);
  j["norm_stats"] = {{"mean", p.norm_stats.mean}, {"std", p.norm_stats.std}};
  j["bin_edges"] = p.bin_edges;
  j["seed"] = p.seed;
  j["training"] = {{"epochs", p.training.epochs},
                   {"batch_size", p.training.batch_size},
                   {"learning_rate", p.training.learning_rate},
                   {"momentum", p.training.momentum},
                   {"dataset_fingerprint", p.training.dataset_fingerprint}};
  return j.dump(1) + "\n";
}

ModelParams from_json(std::string_view text) {
  ojson j;
  try {
    j = ojson::parse(text.begin(), text.end());
  } catch (const nlohmann::json::exception& e) {
    schema(std::string("not valid JSON: ") + e.what());
  }
  if (!j.is_object()) schema("top level must be an object");

  ModelParams p;
  const auto& version = require(j, "format_version");
  if (!version.is_string()) schema("format_version must be a string");
  p.format_version = version.get<std::string>();
  if (major_of(p.format_version) != major_of(std::string(kModelFormatVersion)))
    throw NnError(ErrorKind::VersionMismatch, "model format_version " + p.format_version +
                                                  " is not readable by a " +
                                                  std::string(kModelFormatVersion) + " reader");

  const auto& dims = require(j, "layer_dims");
  if (!dims.is_array()) schema("layer_dims must be an array");
  for (const auto& d : dims) p.layer_dims.push_back(count(d, "layer_dims entry"));

  const auto& layers = require(j, "layers");
  if (!layers.is_array()) schema("layers must be an array");
  if (p.layer_dims.size() < 2 || layers.size() != p.layer_dims.size() - 1)
    throw NnError(ErrorKind::ShapeMismatch, "model file: layer count does not match layer_dims");
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const auto& jl = layers[l];
    const auto fan_in = count(require(jl, "fan_in"), "fan_in");
    const auto fan_out = count(require(jl, "fan_out"), "fan_out");
    auto w = numbers(require(jl, "weights"), "weights");
    auto b = numbers(require(jl, "biases"), "biases");
    if (fan_in != p.layer_dims[l] || fan_out != p.layer_dims[l + 1] ||
        w.size() != fan_in * fan_out || b.size() != fan_out)
      throw NnError(ErrorKind::ShapeMismatch,
                    "model file: layer " + std::to_string(l) + " weights/biases have wrong size");
    DenseLayer layer{Matrix(fan_in, fan_out), std::move(b)};
    layer.weights.data = std::move(w);
    p.layers.push_back(std::move(layer));
  }

  const auto& ns = require(j, "norm_stats");
  p.norm_stats.mean = feature_vector(require(ns, "mean"), "norm_stats.mean");
  p.norm_stats.std = feature_vector(require(ns, "std"), "norm_stats.std");

  const auto edges = numbers(require(j, "bin_edges"), "bin_edges");
  if (edges.size() != 3) schema("bin_edges must have 3 entries");
  std::copy(edges.begin(), edges.end(), p.bin_edges.begin());

  const auto& seed = require(j, "seed");
  if (!seed.is_number_unsigned()) schema("seed must be an unsigned integer");
  p.seed = seed.get<std::uint64_t>();

  if (j.contains("training")) {
    const auto& t = j.at("training");
    p.training.epochs = count(require(t, "epochs"), "training.epochs");
    p.training.batch_size = count(require(t, "batch_size"), "training.batch_size");
    p.training.learning_rate = number(require(t, "learning_rate"), "training.learning_rate");
    p.training.momentum = number(require(t, "momentum"), "training.momentum");
    const auto& fp = require(t, "dataset_fingerprint");
    if (!fp.is_string()) schema("training.dataset_fingerprint must be a string");
    p.training.dataset_fingerprint = fp.get<std::string>();
  }

  check_shapes(p);
  if (auto err = validate(p)) schema(*err);
  return p;
}

void save_model(const ModelParams& params, const std::filesystem::path& path) {
  if (auto err = validate(params)) throw NnError(ErrorKind::SchemaViolation, "refusing to save: " + *err);
  const auto text = to_json(params);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw NnError(ErrorKind::Io, "cannot write model file " + path.string());
  out << text;
  out.flush();
  if (!out) throw NnError(ErrorKind::Io, "write failed for model file " + path.string());
}

ModelParams load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw NnError(ErrorKind::Io, "cannot open model file " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  try {
    return from_json(buf.str());
  } catch (const NnError& e) {
    throw NnError(e.kind(), path.string() + ": " + e.what());
  }
}

}  // namespace floc::nn
