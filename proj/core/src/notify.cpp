#include "floc/notify.hpp"

#include <fstream>
#include <iostream>
#include <thread>

#include <httplib.h>
#include <json.hpp>

namespace floc::notify {

namespace {

std::mutex& stdout_mutex() {
  static std::mutex mu;
  return mu;
}

}  // namespace

std::string_view to_string(SinkKind k) noexcept {
  switch (k) {
    case SinkKind::Webhook: return "webhook";
    case SinkKind::Stdout: return "stdout";
    case SinkKind::File: return "file";
  }
  return "unknown";
}

HttpUrl parse_http_url(const std::string& url) {
  constexpr std::string_view kScheme = "http://";
  if (url.rfind(kScheme, 0) != 0)
    throw ConfigError("webhook url must start with http:// (got '" + url + "')");
  std::string_view rest(url);
  rest.remove_prefix(kScheme.size());
  const auto slash = rest.find('/');
  const auto authority = rest.substr(0, slash);
  HttpUrl out;
  out.path = slash == std::string_view::npos ? "/" : std::string(rest.substr(slash));
  const auto colon = authority.rfind(':');
  out.host = std::string(authority.substr(0, colon));
  if (colon != std::string_view::npos) {
    const auto port_text = std::string(authority.substr(colon + 1));
    try {
      std::size_t used = 0;
      out.port = std::stoi(port_text, &used);
      if (used != port_text.size()) throw std::invalid_argument("trailing");
    } catch (const std::exception&) {
      throw ConfigError("webhook url has a bad port: '" + url + "'");
    }
    if (out.port < 1 || out.port > 65535) throw ConfigError("webhook url port out of range: '" + url + "'");
  }
  if (out.host.empty()) throw ConfigError("webhook url has no host: '" + url + "'");
  return out;
}

std::string format_payload(const Advisory& a) {
  nlohmann::ordered_json j;
  j["device_id"] = a.device_id;
  j["timestamp"] = a.timestamp;
  j["predicted_class"] = to_int(a.predicted_class);
  j["class_label"] = label(a.predicted_class);
  j["probabilities"] = a.probabilities;
  j["severity"] = to_string(a.severity);
  j["actions"] = a.actions;
  j["triggered_rules"] = a.triggered_rules;
  j["schema_version"] = kSchemaVersion;
  return j.dump();
}

struct Dispatcher::Sink {
  SinkConfig config;
  std::optional<HttpUrl> url;
  std::unique_ptr<std::ofstream> file;
  std::mutex mu;
};

Dispatcher::Dispatcher(std::vector<SinkConfig> configs, std::ostream* stdout_stream, Sleeper sleeper)
    : stdout_(stdout_stream ? stdout_stream : &std::cout), sleeper_(std::move(sleeper)) {
  if (!sleeper_) sleeper_ = [](std::chrono::duration<double> d) { std::this_thread::sleep_for(d); };
  for (auto& c : configs) {
    auto sink = std::make_unique<Sink>();
    switch (c.kind) {
      case SinkKind::Webhook:
        if (!(c.timeout_s > 0.0)) throw ConfigError("webhook timeout must be > 0");
        if (!(c.backoff_s >= 0.0)) throw ConfigError("webhook backoff must be >= 0");
        sink->url = parse_http_url(c.url);
        break;
      case SinkKind::File:
        if (c.path.empty()) throw ConfigError("file sink needs a path");
        sink->file = std::make_unique<std::ofstream>(c.path, std::ios::binary | std::ios::app);
        if (!*sink->file) throw ConfigError("cannot open file sink " + c.path.string());
        break;
      case SinkKind::Stdout:
        break;
    }
    sink->config = std::move(c);
    sinks_.push_back(std::move(sink));
  }
}

Dispatcher::~Dispatcher() = default;

SinkResult Dispatcher::deliver_webhook(const Sink& sink, const std::string& payload) {
  const auto& cfg = sink.config;
  const auto& url = *sink.url;
  SinkResult r{"webhook:" + cfg.url, false, 0, {}};

  const auto timeout = std::chrono::duration<double>(cfg.timeout_s);
  const auto timeout_us = std::chrono::duration_cast<std::chrono::microseconds>(timeout);
  double backoff = cfg.backoff_s;
  for (unsigned attempt = 0; attempt <= cfg.retries; ++attempt) {
    if (attempt > 0) {
      sleeper_(std::chrono::duration<double>(backoff));
      backoff *= 2.0;
    }
    ++r.attempts;
    httplib::Client client(url.host, url.port);
    client.set_connection_timeout(timeout_us);
    client.set_read_timeout(timeout_us);
    client.set_write_timeout(timeout_us);
    httplib::Headers headers{{"X-Floc-Schema", std::to_string(kSchemaVersion)}};
    auto res = client.Post(url.path, headers, payload, "application/json");
    if (!res) {
      r.reason = "transport error: " + httplib::to_string(res.error());
      continue;
    }
    if (res->status >= 200 && res->status < 300) {
      r.delivered = true;
      r.reason.clear();
      return r;
    }
    r.reason = "http status " + std::to_string(res->status);
  }
  return r;
}

SinkResult Dispatcher::deliver_stream(std::ostream& out, std::mutex& mu, std::string name,
                                      const std::string& payload) {
  SinkResult r{std::move(name), false, 1, {}};
  std::string line = payload;
  line.push_back('\n');
  std::lock_guard lock(mu);
  out.write(line.data(), static_cast<std::streamsize>(line.size()));
  out.flush();
  if (out) {
    r.delivered = true;
  } else {
    r.reason = "write failed";
    out.clear();
  }
  return r;
}

DeliveryReport Dispatcher::dispatch(const Advisory& advisory) {
  DeliveryReport report;
  const auto payload = format_payload(advisory);
  for (auto& sink : sinks_) {
    try {
      switch (sink->config.kind) {
        case SinkKind::Webhook:
          report.results.push_back(deliver_webhook(*sink, payload));
          break;
        case SinkKind::Stdout:
          report.results.push_back(deliver_stream(*stdout_, stdout_mutex(), "stdout", payload));
          break;
        case SinkKind::File:
          report.results.push_back(
              deliver_stream(*sink->file, sink->mu, "file:" + sink->config.path.string(), payload));
          break;
      }
    } catch (const std::exception& e) {
      report.results.push_back({std::string(to_string(sink->config.kind)), false, 1, e.what()});
    }
  }
  return report;
}

}  // namespace floc::notify
