#include <fstream>
#include <sstream>

#include <json.hpp>

#include "floc/service.hpp"

namespace floc::service {

namespace {

using json = nlohmann::json;

[[noreturn]] void fail(const std::string& what) { throw ConfigError("config: " + what); }

double get_number(const json& obj, const char* key, double fallback) {
  if (!obj.contains(key)) return fallback;
  const auto& v = obj.at(key);
  if (!v.is_number()) fail(std::string(key) + " must be a number");
  return v.get<double>();
}

std::string get_string(const json& obj, const char* key, const std::string& fallback) {
  if (!obj.contains(key)) return fallback;
  const auto& v = obj.at(key);
  if (!v.is_string()) fail(std::string(key) + " must be a string");
  return v.get<std::string>();
}

decision::Range get_range(const json& obj, const char* key, decision::Range fallback) {
  if (!obj.contains(key)) return fallback;
  const auto& v = obj.at(key);
  if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number())
    fail(std::string("rules.") + key + " must be [min, max]");
  return {v[0].get<double>(), v[1].get<double>()};
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  std::filesystem::path path(p);
  if (path.is_relative() && !base.empty()) return base / path;
  return path;
}

decision::RuleConfig rules_from(const json& r) {
  decision::RuleConfig rules;
  if (!r.is_object()) fail("rules must be an object");
  rules.ph_range = get_range(r, "ph_range", rules.ph_range);
  rules.temp_range = get_range(r, "temp_range", rules.temp_range);
  rules.floc_max = get_number(r, "floc_max", rules.floc_max);
  if (r.contains("class_severity")) {
    const auto& cs = r.at("class_severity");
    if (!cs.is_array() || cs.size() != kNumClasses) fail("rules.class_severity must list 4 severities");
    for (std::size_t k = 0; k < kNumClasses; ++k) {
      if (!cs[k].is_string()) fail("rules.class_severity entries must be strings");
      const auto sev = severity_from_string(cs[k].get<std::string>());
      if (!sev) fail("unknown severity '" + cs[k].get<std::string>() + "'");
      rules.class_severity[k] = *sev;
    }
  }
  if (r.contains("actions")) {
    const auto& a = r.at("actions");
    if (!a.is_object()) fail("rules.actions must be an object");
    for (const auto& [id, text] : a.items()) {
      if (!rules.actions.contains(id)) fail("rules.actions has unknown rule id '" + id + "'");
      if (!text.is_string()) fail("rules.actions." + id + " must be a string");
      rules.actions[id] = text.get<std::string>();
    }
  }
  try {
    decision::check(rules);
  } catch (const decision::InvalidConfig& e) {
    fail(e.what());
  }
  return rules;
}

notify::SinkConfig sink_from(const json& s, const std::filesystem::path& base) {
  if (!s.is_object()) fail("each sink must be an object");
  const auto kind = get_string(s, "kind", "");
  notify::SinkConfig c;
  if (kind == "webhook") {
    c.kind = notify::SinkKind::Webhook;
    c.url = get_string(s, "url", "");
    c.timeout_s = get_number(s, "timeout_s", c.timeout_s);
    const double retries = get_number(s, "retries", c.retries);
    if (retries < 0 || retries != static_cast<double>(static_cast<unsigned>(retries)))
      fail("sink retries must be a non-negative integer");
    c.retries = static_cast<unsigned>(retries);
    c.backoff_s = get_number(s, "backoff_s", c.backoff_s);
    if (!(c.timeout_s > 0.0)) fail("sink timeout_s must be > 0");
    try {
      notify::parse_http_url(c.url);
    } catch (const notify::ConfigError& e) {
      fail(e.what());
    }
  } else if (kind == "stdout") {
    c.kind = notify::SinkKind::Stdout;
  } else if (kind == "file") {
    c.kind = notify::SinkKind::File;
    const auto path = get_string(s, "path", "");
    if (path.empty()) fail("file sink needs a path");
    c.path = resolve(base, path);
  } else {
    fail("unknown sink kind '" + kind + "'");
  }
  return c;
}

}  // namespace

void check(const ServiceConfig& c) {
  if (!(c.cooldown_s >= 0.0)) throw ConfigError("config: cooldown_s must be >= 0");
  if (c.max_line < kMinLineLimit)
    throw ConfigError("config: max_line must be >= " + std::to_string(kMinLineLimit));
  if (c.model_path.empty()) throw ConfigError("config: model path is required");
  if (c.store_path.empty()) throw ConfigError("config: store path is required");
  try {
    decision::check(c.rules);
  } catch (const decision::InvalidConfig& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
}

decision::RuleConfig parse_rules(std::string_view text) {
  json j;
  try {
    j = json::parse(text.begin(), text.end());
  } catch (const json::exception& e) {
    fail(std::string("not valid JSON: ") + e.what());
  }
  return rules_from(j);
}

ServiceConfig parse_config(std::string_view text, const std::filesystem::path& base) {
  json j;
  try {
    j = json::parse(text.begin(), text.end());
  } catch (const json::exception& e) {
    fail(std::string("not valid JSON: ") + e.what());
  }
  if (!j.is_object()) fail("top level must be an object");

  ServiceConfig c;
  if (j.contains("listen")) {
    try {
      c.listen = net::parse_endpoint(get_string(j, "listen", ""));
    } catch (const net::NetError& e) {
      fail(e.what());
    }
  }
  c.model_path = resolve(base, get_string(j, "model", ""));
  c.store_path = resolve(base, get_string(j, "store", c.store_path.string()));
  c.cooldown_s = get_number(j, "cooldown_s", c.cooldown_s);
  const double max_line = get_number(j, "max_line", static_cast<double>(c.max_line));
  if (max_line < 0) fail("max_line must be positive");
  c.max_line = static_cast<std::size_t>(max_line);
  if (j.contains("rules")) c.rules = rules_from(j.at("rules"));
  if (j.contains("sinks")) {
    const auto& sinks = j.at("sinks");
    if (!sinks.is_array()) fail("sinks must be an array");
    for (const auto& s : sinks) c.sinks.push_back(sink_from(s, base));
  }
  check(c);
  return c;
}

ServiceConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str(), path.parent_path());
}

}  // namespace floc::service
