#include "floc/simulator.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <exception>
#include <mutex>
#include <stdexcept>
#include <thread>

#include "floc/protocol.hpp"

namespace floc::simulator {

namespace {

double tenths(double v) { return std::round(v * 10.0) / 10.0; }

double reflect(double x, double lo, double hi) {
  if (x > hi) x = 2.0 * hi - x;
  if (x < lo) x = 2.0 * lo - x;
  return std::clamp(x, lo, hi);
}

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
  // splitmix64 finalizer
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace

std::string_view to_string(ScenarioKind k) noexcept {
  switch (k) {
    case ScenarioKind::Normal: return "normal";
    case ScenarioKind::DoCrash: return "do-crash";
    case ScenarioKind::PhDrift: return "ph-drift";
  }
  return "unknown";
}

ScenarioKind scenario_from_string(std::string_view s) {
  if (s == "normal") return ScenarioKind::Normal;
  if (s == "do-crash" || s == "do_crash") return ScenarioKind::DoCrash;
  if (s == "ph-drift" || s == "ph_drift") return ScenarioKind::PhDrift;
  throw std::invalid_argument("unknown scenario '" + std::string(s) + "'");
}

std::size_t Scenario::frames_per_device() const {
  return std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(rate * duration_s)));
}

void check(const Scenario& s) {
  if (!(s.rate > 0.0) || !std::isfinite(s.rate)) throw std::invalid_argument("rate must be > 0");
  if (!(s.corrupt_prob >= 0.0 && s.corrupt_prob <= 1.0))
    throw std::invalid_argument("corrupt probability must lie in [0, 1]");
  if (s.devices == 0) throw std::invalid_argument("need at least one device");
  if (!(s.duration_s >= 0.0) || !std::isfinite(s.duration_s))
    throw std::invalid_argument("duration must be >= 0");
}

dataset::LabeledDataset gen_labeled(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  dataset::LabeledDataset out;
  out.samples.reserve(n);
  out.labels.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto cls = i % kNumClasses;
    const auto& c = kClusterCenters[cls];
    WaterSample s;
    s.temp = std::clamp(rng.normal(c[0], kClusterSigma[0]), 0.0, 59.9);
    s.ph = std::clamp(rng.normal(c[1], kClusterSigma[1]), 0.0, 14.0);
    s.tds = std::max(0.0, rng.normal(c[2], kClusterSigma[2]));
    s.floc = std::max(0.0, rng.normal(c[3], kClusterSigma[3]));
    s.do_mg_l = rng.uniform(kClusterDo[cls][0], kClusterDo[cls][1]);
    out.push_back(s);
  }
  return out;
}

DoClass nearest_centroid(const FeatureVector& x) {
  std::size_t best = 0;
  double best_d = INFINITY;
  for (std::size_t k = 0; k < kNumClasses; ++k) {
    double d = 0.0;
    for (std::size_t f = 0; f < kNumFeatures; ++f) {
      const double z = (x[f] - kClusterCenters[k][f]) / kClusterSigma[f];
      d += z * z;
    }
    if (d < best_d) {
      best_d = d;
      best = k;
    }
  }
  return static_cast<DoClass>(best);
}

bool in_class0_region(const FeatureVector& x) {
  const auto& c = kClusterCenters[0];
  for (std::size_t f = 0; f < kNumFeatures; ++f)
    if (std::abs(x[f] - c[f]) > 3.0 * kClusterSigma[f]) return false;
  return nearest_centroid(x) == DoClass::Shallow;
}

std::string device_name(std::size_t index) { return "TANK-" + std::to_string(index + 1); }

DeviceStream::DeviceStream(const Scenario& scenario, std::size_t device_index)
    : scenario_(scenario),
      device_id_(device_name(device_index)),
      rng_(mix_seed(scenario.seed, device_index)),
      state_(kBaseline),
      total_(scenario.frames_per_device()) {
  check(scenario_);
}

FeatureVector DeviceStream::step_values() {
  const auto k = count_;
  auto walk = [&](std::size_t f) {
    state_[f] = reflect(state_[f] + rng_.uniform(-kWalkStep[f], kWalkStep[f]), kBandLow[f], kBandHigh[f]);
  };
  switch (scenario_.kind) {
    case ScenarioKind::Normal:
      for (std::size_t f = 0; f < kNumFeatures; ++f) walk(f);
      break;
    case ScenarioKind::PhDrift:
      walk(0);
      walk(2);
      walk(3);
      state_[1] = std::min(14.0, kBaseline[1] + kPhDriftPerFrame * static_cast<double>(k));
      break;
    case ScenarioKind::DoCrash: {
      const auto ramp = std::max<std::size_t>(
          1, static_cast<std::size_t>(std::floor(static_cast<double>(total_) * kCrashRampFraction)));
      const double t = std::min(1.0, static_cast<double>(k) / static_cast<double>(ramp));
      for (std::size_t f = 0; f < kNumFeatures; ++f)
        state_[f] = kBaseline[f] + t * (kClusterCenters[0][f] - kBaseline[f]);
      break;
    }
  }
  return {tenths(state_[0]), tenths(state_[1]), tenths(state_[2]), tenths(state_[3])};
}

Emitted DeviceStream::next_frame() {
  const auto v = step_values();
  Emitted out;
  out.frame.device_id = device_id_;
  out.frame.seq = count_ + 1;
  out.frame.timestamp =
      scenario_.start_timestamp +
      static_cast<std::uint64_t>(std::floor(static_cast<double>(count_) / scenario_.rate));
  out.frame.sample = WaterSample{v[0], v[1], v[2], v[3], std::nullopt};
  out.line = protocol::encode_frame(out.frame);

  const double u = rng_.uniform01();
  if (u < scenario_.corrupt_prob) {
    // One device-id byte becomes another legal id character, so the frame
    // stays well-formed and only the checksum can catch it.
    static constexpr std::string_view kIdChars =
        "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789_-";
    const auto pos = 6 + static_cast<std::size_t>(rng_.index(device_id_.size()));
    char replacement = out.line[pos];
    while (replacement == out.line[pos])
      replacement = kIdChars[static_cast<std::size_t>(rng_.index(kIdChars.size()))];
    out.line[pos] = replacement;
    out.corrupted = true;
  }
  ++count_;
  return out;
}

StreamStats run(const net::Endpoint& target, const Scenario& scenario, bool realtime,
                const std::atomic<bool>* stop) {
  check(scenario);
  std::mutex mu;
  StreamStats total;
  std::exception_ptr failure;
  std::vector<std::thread> workers;
  workers.reserve(scenario.devices);

  for (std::size_t d = 0; d < scenario.devices; ++d) {
    workers.emplace_back([&, d] {
      try {
        auto sock = net::connect_tcp(target);
        DeviceStream stream(scenario, d);
        StreamStats local;
        const auto start = std::chrono::steady_clock::now();
        const auto n = scenario.frames_per_device();
        for (std::size_t k = 0; k < n; ++k) {
          if (stop && stop->load()) break;
          if (realtime) {
            std::this_thread::sleep_until(
                start + std::chrono::duration_cast<std::chrono::steady_clock::duration>(
                            std::chrono::duration<double>(static_cast<double>(k) / scenario.rate)));
          }
          const auto e = stream.next_frame();
          sock.send_all(e.line);
          ++local.frames_sent;
          if (e.corrupted) ++local.corrupted;
        }
        std::lock_guard lock(mu);
        total.frames_sent += local.frames_sent;
        total.corrupted += local.corrupted;
      } catch (...) {
        std::lock_guard lock(mu);
        if (!failure) failure = std::current_exception();
      }
    });
  }
  for (auto& w : workers) w.join();
  if (failure) std::rethrow_exception(failure);
  return total;
}

}  // namespace floc::simulator
