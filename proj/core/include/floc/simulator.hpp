#pragma once

// Stand-in for the tank hardware: per-device frame generators, a synthetic
// labeled dataset with one Gaussian cluster per DO class, and a TCP streamer.

#include <array>
#include <atomic>
#include <cstdint>
#include <string>
#include <vector>

#include "floc/datamodel.hpp"
#include "floc/dataset.hpp"
#include "floc/net.hpp"
#include "floc/random.hpp"

namespace floc::simulator {

enum class ScenarioKind { Normal, DoCrash, PhDrift };

std::string_view to_string(ScenarioKind k) noexcept;
/// Accepts "normal", "do-crash"/"do_crash", "ph-drift"/"ph_drift".
ScenarioKind scenario_from_string(std::string_view s);

struct Scenario {
  ScenarioKind kind = ScenarioKind::Normal;
  std::size_t devices = 1;
  double rate = 1.0;        // frames per second, per device
  double duration_s = 60.0;
  double corrupt_prob = 0.0;
  std::uint64_t seed = 7;
  std::uint64_t start_timestamp = 1602998400;  // 2020-10-18, first day of the study-area-2 log

  /// ceil(rate * duration), at least 1.
  std::size_t frames_per_device() const;
};

/// Throws std::invalid_argument on rate <= 0, corrupt_prob outside [0, 1],
/// devices == 0 or a negative duration.
void check(const Scenario& s);

// Normal-operation baseline and bands (study-area-1 field log).
inline constexpr FeatureVector kBaseline{29.0, 7.0, 1.5, 12.0};
inline constexpr FeatureVector kBandLow{27.0, 6.6, 1.3, 8.0};
inline constexpr FeatureVector kBandHigh{31.0, 7.4, 1.75, 20.0};
// Per-frame random-walk half-widths: temp 0.1 C, pH 0.02, TDS 0.02, floc 1 ml.
inline constexpr FeatureVector kWalkStep{0.1, 0.02, 0.02, 1.0};
inline constexpr double kPhDriftPerFrame = 0.02;
/// Fraction of the run a do-crash spends ramping toward the class-0 centre.
inline constexpr double kCrashRampFraction = 0.5;

// Synthetic cluster centres and spreads, indexed by DoClass.
inline constexpr std::array<FeatureVector, kNumClasses> kClusterCenters{{
    {32.5, 6.3, 7.0, 160.0},  // shallow
    {31.0, 6.7, 4.5, 80.0},   // low
    {29.5, 7.0, 2.5, 35.0},   // average
    {28.0, 7.2, 1.4, 12.0},   // high
}};
inline constexpr FeatureVector kClusterSigma{0.3, 0.06, 0.25, 5.0};
/// DO value ranges [lo, hi) drawn for each class; inside the default bins.
inline constexpr std::array<std::array<double, 2>, kNumClasses> kClusterDo{{
    {1.0, 3.0}, {3.0, 5.0}, {5.0, 7.0}, {7.0, 9.0}}};

/// Balanced labeled dataset: sample i belongs to class i % 4.
dataset::LabeledDataset gen_labeled(std::size_t n, std::uint64_t seed);

/// Index of the nearest cluster centre after scaling each feature by its sigma.
DoClass nearest_centroid(const FeatureVector& x);

/// Core of the class-0 cluster: every feature within 3 sigma of the centre
/// and the nearest centroid is class 0.
bool in_class0_region(const FeatureVector& x);

struct Emitted {
  SensorFrame frame;  // values as encoded on the wire
  std::string line;   // newline-terminated, possibly corrupted
  bool corrupted = false;
};

/// One device's generator. Independent of every other device.
class DeviceStream {
 public:
  DeviceStream(const Scenario& scenario, std::size_t device_index);

  Emitted next_frame();
  const std::string& device_id() const noexcept { return device_id_; }
  std::size_t emitted() const noexcept { return count_; }

 private:
  FeatureVector step_values();

  Scenario scenario_;
  std::string device_id_;
  Rng rng_;
  FeatureVector state_;
  std::size_t count_ = 0;
  std::size_t total_ = 0;
};

std::string device_name(std::size_t index);

struct StreamStats {
  std::size_t frames_sent = 0;
  std::size_t corrupted = 0;
};

/// Opens one connection per device and streams every device's frames.
/// With realtime set, frames are paced at scenario.rate.
StreamStats run(const net::Endpoint& target, const Scenario& scenario, bool realtime,
                const std::atomic<bool>* stop = nullptr);

}  // namespace floc::simulator
