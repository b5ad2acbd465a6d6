#include "floc/service.hpp"

#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <chrono>
#include <cstring>

#include <json.hpp>

#include "floc/log.hpp"
#include "floc/nn.hpp"
#include "floc/protocol.hpp"

namespace floc::service {

namespace {

std::int64_t now_ms() {
  return std::chrono::duration_cast<std::chrono::milliseconds>(
             std::chrono::system_clock::now().time_since_epoch())
      .count();
}

}  // namespace

std::string to_jsonl(const ReadingRecord& r) {
  nlohmann::ordered_json j;
  j["received_at_ms"] = r.received_at_ms;
  j["device_id"] = r.frame.device_id;
  j["seq"] = r.frame.seq;
  j["timestamp"] = r.frame.timestamp;
  j["temp"] = r.frame.sample.temp;
  j["ph"] = r.frame.sample.ph;
  j["tds"] = r.frame.sample.tds;
  j["floc"] = r.frame.sample.floc;
  j["predicted_class"] = to_int(r.predicted);
  j["class_label"] = label(r.predicted);
  j["probabilities"] = r.probabilities;
  j["severity"] = to_string(r.severity);
  j["triggered_rules"] = r.triggered_rules;
  j["alert_sent"] = r.alert_sent;
  j["schema_version"] = kStoreSchemaVersion;
  return j.dump();
}

// ---------------------------------------------------------------------------

JsonlStore::JsonlStore(const std::filesystem::path& path)
    : out_(path, std::ios::binary | std::ios::app), path_(path) {
  if (!out_) throw ConfigError("cannot open store " + path.string());
}

void JsonlStore::append(const std::string& line) {
  std::string buf = line;
  buf.push_back('\n');
  std::lock_guard lock(mu_);
  out_.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  out_.flush();
  if (!out_) {
    out_.clear();
    throw std::runtime_error("store write failed for " + path_.string());
  }
  ++lines_;
}

void JsonlStore::flush() {
  std::lock_guard lock(mu_);
  out_.flush();
}

std::size_t JsonlStore::lines_written() const {
  std::lock_guard lock(mu_);
  return lines_;
}

bool CooldownTable::should_alert(const std::string& device_id, DoClass c, std::uint64_t now) {
  std::lock_guard lock(mu_);
  const auto key = std::make_pair(device_id, c);
  const auto it = last_.find(key);
  if (it != last_.end()) {
    if (now < it->second) return false;
    if (static_cast<double>(now - it->second) < cooldown_s_) return false;
  }
  last_[key] = now;
  return true;
}

// ---------------------------------------------------------------------------

Service::Service(ServiceConfig config, ModelParams model, std::ostream* stdout_stream,
                 notify::Sleeper sleeper)
    : config_(std::move(config)),
      model_(std::move(model)),
      store_(config_.store_path),
      cooldown_(config_.cooldown_s),
      dispatcher_(config_.sinks, stdout_stream, std::move(sleeper)) {
  check(config_);
  nn::check_shapes(model_);
  if (auto err = validate(model_)) throw ConfigError("model: " + *err);
  notifier_ = std::thread([this] { notify_loop(); });
}

Service::~Service() { stop(); }

Rejected Service::reject(std::string reason, std::string detail) {
  {
    std::lock_guard lock(stats_mu_);
    ++stats_.rejected;
    ++stats_.rejected_by_reason[reason];
  }
  logger()->warn("rejected line ({}): {}", reason, detail);
  return Rejected{std::move(reason), std::move(detail)};
}

HandleResult Service::handle_line(std::string_view raw) {
  std::string_view body = raw;
  if (!body.empty() && body.back() == '\n') body.remove_suffix(1);
  if (body.size() > config_.max_line)
    return reject("OversizedLine", "line of " + std::to_string(body.size()) + " bytes");

  SensorFrame frame;
  try {
    frame = protocol::parse_frame(body);
  } catch (const protocol::ProtocolError& e) {
    return reject(std::string(protocol::to_string(e.kind())), e.what());
  }

  ReadingRecord rec;
  rec.received_at_ms = now_ms();
  rec.frame = frame;
  try {
    std::tie(rec.predicted, rec.probabilities) = nn::predict(model_, frame.sample);
  } catch (const nn::NnError& e) {
    return reject("PredictionFailed", e.what());
  }

  const auto advisory = decision::evaluate(frame, rec.predicted, rec.probabilities, config_.rules);
  rec.severity = advisory.severity;
  rec.triggered_rules = advisory.triggered_rules;
  rec.alert_sent = advisory.severity >= Severity::Warning &&
                   cooldown_.should_alert(frame.device_id, rec.predicted, frame.timestamp);

  try {
    store_.append(to_jsonl(rec));
  } catch (const std::exception& e) {
    {
      std::lock_guard lock(stats_mu_);
      ++stats_.store_failures;
    }
    return reject("StoreFailure", e.what());
  }

  {
    std::lock_guard lock(stats_mu_);
    ++stats_.accepted;
    if (rec.alert_sent) ++stats_.alerts_queued;
  }
  if (rec.alert_sent) {
    std::lock_guard lock(queue_mu_);
    queue_.push_back(advisory);
    queue_cv_.notify_one();
  }
  return Accepted{std::move(rec)};
}

void Service::notify_loop() {
  std::unique_lock lock(queue_mu_);
  for (;;) {
    queue_cv_.wait(lock, [&] { return notifier_stop_ || !queue_.empty(); });
    if (queue_.empty()) {
      if (notifier_stop_) return;
      continue;
    }
    auto advisory = std::move(queue_.front());
    queue_.pop_front();
    dispatching_ = true;
    lock.unlock();

    const auto report = dispatcher_.dispatch(advisory);
    for (const auto& r : report.results)
      if (!r.delivered)
        logger()->error("delivery to {} failed after {} attempt(s): {}", r.sink, r.attempts, r.reason);
    {
      std::lock_guard slock(stats_mu_);
      if (report.all_delivered() || report.results.empty())
        ++stats_.alerts_delivered;
      else
        ++stats_.alerts_failed;
    }

    lock.lock();
    dispatching_ = false;
    if (queue_.empty()) idle_cv_.notify_all();
  }
}

void Service::drain_notifications() {
  std::unique_lock lock(queue_mu_);
  idle_cv_.wait(lock, [&] { return queue_.empty() && !dispatching_; });
}

void Service::start() {
  if (running_.exchange(true)) return;
  listener_ = net::listen_tcp(config_.listen);
  port_ = net::local_port(listener_);
  logger()->info("listening on {}:{}", config_.listen.host, port_);
  acceptor_ = std::thread([this] { accept_loop(); });
}

void Service::accept_loop() {
  while (running_.load()) {
    const int fd = ::accept(listener_.fd(), nullptr, nullptr);
    if (fd < 0) {
      if (errno == EINTR || errno == ECONNABORTED) continue;
      if (!running_.load()) break;
      logger()->error("accept failed: {}", std::strerror(errno));
      std::this_thread::sleep_for(std::chrono::milliseconds(50));
      continue;
    }
    std::lock_guard lock(conns_mu_);
    if (!running_.load()) {
      ::close(fd);
      break;
    }
    // Reap finished connections.
    for (auto it = conns_.begin(); it != conns_.end();) {
      if ((*it)->done.load()) {
        (*it)->thread.join();
        it = conns_.erase(it);
      } else {
        ++it;
      }
    }
    auto conn = std::make_unique<Connection>();
    conn->fd = fd;
    auto* raw = conn.get();
    conn->thread = std::thread([this, raw] { serve_connection(*raw); });
    conns_.push_back(std::move(conn));
    std::lock_guard slock(stats_mu_);
    ++stats_.connections;
  }
}

void Service::serve_connection(Connection& conn) {
  net::Socket sock(conn.fd);
  std::string pending;
  bool discarding = false;
  char buf[4096];
  for (;;) {
    const auto n = ::recv(sock.fd(), buf, sizeof buf, 0);
    if (n < 0 && errno == EINTR) continue;
    if (n <= 0) break;
    std::string_view chunk(buf, static_cast<std::size_t>(n));
    while (!chunk.empty()) {
      const auto nl = chunk.find('\n');
      if (nl == std::string_view::npos) {
        if (!discarding) {
          pending.append(chunk);
          if (pending.size() > config_.max_line) {
            reject("OversizedLine", "line exceeds " + std::to_string(config_.max_line) + " bytes");
            pending.clear();
            discarding = true;
          }
        }
        break;
      }
      if (discarding) {
        discarding = false;
      } else {
        pending.append(chunk.substr(0, nl));
        try {
          handle_line(pending);
        } catch (const std::exception& e) {
          logger()->error("unexpected failure handling line: {}", e.what());
        }
      }
      pending.clear();
      chunk.remove_prefix(nl + 1);
    }
  }
  if (!pending.empty() && !discarding) {
    try {
      handle_line(pending);
    } catch (const std::exception& e) {
      logger()->error("unexpected failure handling line: {}", e.what());
    }
  }
  {
    // The fd must not be shut down by stop() once closed here.
    std::lock_guard lock(conns_mu_);
    sock.close();
    conn.fd = -1;
  }
  conn.done.store(true);
}

void Service::stop() {
  if (running_.exchange(false)) {
    ::shutdown(listener_.fd(), SHUT_RDWR);
    if (acceptor_.joinable()) acceptor_.join();
    listener_.close();

    std::list<std::unique_ptr<Connection>> conns;
    {
      std::lock_guard lock(conns_mu_);
      for (auto& c : conns_)
        if (c->fd >= 0) ::shutdown(c->fd, SHUT_RD);
      conns.swap(conns_);
    }
    for (auto& c : conns)
      if (c->thread.joinable()) c->thread.join();
  }

  if (notifier_.joinable()) {
    drain_notifications();
    {
      std::lock_guard lock(queue_mu_);
      notifier_stop_ = true;
      queue_cv_.notify_all();
    }
    notifier_.join();
  }
  store_.flush();
}

ServiceStats Service::stats() const {
  std::lock_guard lock(stats_mu_);
  return stats_;
}

}  // namespace floc::service
