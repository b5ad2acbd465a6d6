#pragma once

// Ingestion daemon: newline-delimited FLOC1 frames over TCP are parsed,
// classified, evaluated against the rule table, appended to a JSONL store and,
// when warranted and not debounced, pushed to the notification sinks.

#include <atomic>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <filesystem>
#include <fstream>
#include <list>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>
#include <variant>
#include <vector>

#include "floc/datamodel.hpp"
#include "floc/decision.hpp"
#include "floc/net.hpp"
#include "floc/notify.hpp"

namespace floc::service {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr std::size_t kMinLineLimit = 128;
inline constexpr int kStoreSchemaVersion = 1;

struct ServiceConfig {
  net::Endpoint listen{"127.0.0.1", 7070};
  std::filesystem::path model_path;
  std::vector<notify::SinkConfig> sinks;
  std::filesystem::path store_path{"readings.jsonl"};
  decision::RuleConfig rules;
  double cooldown_s = 300.0;
  std::size_t max_line = 512;
};

void check(const ServiceConfig& config);

/// JSON config; relative paths resolve against base_dir.
ServiceConfig parse_config(std::string_view json_text, const std::filesystem::path& base_dir = {});
ServiceConfig load_config(const std::filesystem::path& path);
/// Rule section on its own ("rules" object of the config file).
decision::RuleConfig parse_rules(std::string_view json_text);

struct ReadingRecord {
  std::int64_t received_at_ms = 0;
  SensorFrame frame;
  DoClass predicted = DoClass::Shallow;
  Probabilities probabilities{};
  Severity severity = Severity::Info;
  std::vector<std::string> triggered_rules;
  bool alert_sent = false;
};

std::string to_jsonl(const ReadingRecord& r);

struct Accepted {
  ReadingRecord record;
};
struct Rejected {
  std::string reason;  // protocol error kind, "OversizedLine", "PredictionFailed", "StoreFailure"
  std::string detail;
};
using HandleResult = std::variant<Accepted, Rejected>;

/// Append-only JSONL file; each record is written and flushed as one unit.
class JsonlStore {
 public:
  explicit JsonlStore(const std::filesystem::path& path);
  void append(const std::string& line);
  void flush();
  std::size_t lines_written() const;

 private:
  mutable std::mutex mu_;
  std::ofstream out_;
  std::filesystem::path path_;
  std::size_t lines_ = 0;
};

/// Per-(device, class) debounce keyed on reading timestamps.
class CooldownTable {
 public:
  explicit CooldownTable(double cooldown_s) : cooldown_s_(cooldown_s) {}
  /// True iff no alert for (device, class) was granted within the last
  /// cooldown seconds; records `now` when returning true. Readings whose
  /// timestamp precedes the last grant are suppressed.
  bool should_alert(const std::string& device_id, DoClass c, std::uint64_t now);

 private:
  std::mutex mu_;
  double cooldown_s_;
  std::map<std::pair<std::string, DoClass>, std::uint64_t> last_;
};

struct ServiceStats {
  std::size_t accepted = 0;
  std::size_t rejected = 0;
  std::map<std::string, std::size_t> rejected_by_reason;
  std::size_t alerts_queued = 0;
  std::size_t alerts_delivered = 0;  // dispatches where every sink delivered
  std::size_t alerts_failed = 0;
  std::size_t store_failures = 0;
  std::size_t connections = 0;
};

class Service {
 public:
  Service(ServiceConfig config, ModelParams model, std::ostream* stdout_stream = nullptr,
          notify::Sleeper sleeper = {});
  ~Service();

  Service(const Service&) = delete;
  Service& operator=(const Service&) = delete;

  /// Processes one line (without or with its trailing newline).
  HandleResult handle_line(std::string_view raw);
  bool should_alert(const std::string& device_id, DoClass c, std::uint64_t now) {
    return cooldown_.should_alert(device_id, c, now);
  }

  /// Binds the listener and starts accepting connections.
  void start();
  /// Port actually bound (after start()).
  std::uint16_t port() const noexcept { return port_; }
  /// Stops accepting, drains connections and pending notifications, flushes the store.
  void stop();
  /// Blocks until every queued advisory has been dispatched.
  void drain_notifications();

  ServiceStats stats() const;
  const ServiceConfig& config() const noexcept { return config_; }

 private:
  struct Connection {
    std::thread thread;
    int fd = -1;
    std::atomic<bool> done{false};
  };

  void accept_loop();
  void serve_connection(Connection& conn);
  void notify_loop();
  Rejected reject(std::string reason, std::string detail);

  ServiceConfig config_;
  const ModelParams model_;
  JsonlStore store_;
  CooldownTable cooldown_;
  notify::Dispatcher dispatcher_;

  mutable std::mutex stats_mu_;
  ServiceStats stats_;

  net::Socket listener_;
  std::uint16_t port_ = 0;
  std::atomic<bool> running_{false};
  std::thread acceptor_;
  std::mutex conns_mu_;
  std::list<std::unique_ptr<Connection>> conns_;

  std::mutex queue_mu_;
  std::condition_variable queue_cv_;
  std::condition_variable idle_cv_;
  std::deque<Advisory> queue_;
  bool dispatching_ = false;
  bool notifier_stop_ = false;
  std::thread notifier_;
};

}  // namespace floc::service
