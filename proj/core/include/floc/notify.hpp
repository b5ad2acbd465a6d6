#pragma once

// Advisory delivery: single-line JSON payloads pushed to webhook, stdout or
// append-only file sinks. Failures are reported per sink, never thrown.

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <memory>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "floc/datamodel.hpp"

namespace floc::notify {

inline constexpr int kSchemaVersion = 1;

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

enum class SinkKind { Webhook, Stdout, File };

std::string_view to_string(SinkKind k) noexcept;

struct SinkConfig {
  SinkKind kind = SinkKind::Stdout;
  std::string url;                    // webhook
  double timeout_s = 5.0;             // webhook
  unsigned retries = 3;               // webhook
  double backoff_s = 0.5;             // webhook; doubles after each failure
  std::filesystem::path path;         // file

  static SinkConfig webhook(std::string url) {
    SinkConfig c;
    c.kind = SinkKind::Webhook;
    c.url = std::move(url);
    return c;
  }
  static SinkConfig stdout_sink() { return {}; }
  static SinkConfig file(std::filesystem::path p) {
    SinkConfig c;
    c.kind = SinkKind::File;
    c.path = std::move(p);
    return c;
  }
};

struct HttpUrl {
  std::string host;
  int port = 80;
  std::string path = "/";
};

/// Accepts http://host[:port][/path]. Throws ConfigError otherwise.
HttpUrl parse_http_url(const std::string& url);

/// Fixed key order: device_id, timestamp, predicted_class, class_label,
/// probabilities, severity, actions, triggered_rules, schema_version.
std::string format_payload(const Advisory& advisory);

struct SinkResult {
  std::string sink;  // "webhook:<url>", "stdout", "file:<path>"
  bool delivered = false;
  unsigned attempts = 0;
  std::string reason;  // set when not delivered
};

struct DeliveryReport {
  std::vector<SinkResult> results;

  bool all_delivered() const {
    for (const auto& r : results)
      if (!r.delivered) return false;
    return !results.empty();
  }
};

using Sleeper = std::function<void(std::chrono::duration<double>)>;

class Dispatcher {
 public:
  /// Validates every sink up front (bad URL, unwritable file) and throws
  /// ConfigError on the first problem.
  explicit Dispatcher(std::vector<SinkConfig> sinks, std::ostream* stdout_stream = nullptr,
                      Sleeper sleeper = {});
  ~Dispatcher();

  Dispatcher(const Dispatcher&) = delete;
  Dispatcher& operator=(const Dispatcher&) = delete;

  DeliveryReport dispatch(const Advisory& advisory);

  std::size_t sink_count() const noexcept { return sinks_.size(); }

 private:
  struct Sink;
  SinkResult deliver_webhook(const Sink& sink, const std::string& payload);
  SinkResult deliver_stream(std::ostream& out, std::mutex& mu, std::string name,
                            const std::string& payload);

  std::vector<std::unique_ptr<Sink>> sinks_;
  std::ostream* stdout_;
  Sleeper sleeper_;
};

}  // namespace floc::notify
