#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>

#include <json.hpp>

#include "floc/net.hpp"
#include "floc/protocol.hpp"
#include "floc/random.hpp"
#include "floc/simulator.hpp"
#include "process.hpp"
#include "support.hpp"

using namespace floc;
using json = nlohmann::json;

namespace {

struct Deployment {
  test::TempDir dir;
  std::filesystem::path model = dir / "model.json";
  std::filesystem::path store = dir / "readings.jsonl";
  std::filesystem::path alerts = dir / "alerts.jsonl";
  std::filesystem::path config = dir / "serve.json";

  Deployment() {
    const auto csv = dir / "syn.csv";
    REQUIRE(test::run_cli({"gen-data", "--n", "800", "--seed", "2", "--out", csv.string()}, dir.path()).code == 0);
    REQUIRE(test::run_cli({"train", "--data", csv.string(), "--out", model.string()}, dir.path()).code == 0);
    // Relative paths resolve against the config file's directory.
    std::ofstream(config) << json{{"listen", "127.0.0.1:0"},
                                  {"model", "model.json"},
                                  {"store", "readings.jsonl"},
                                  {"cooldown_s", 300},
                                  {"sinks", json::array({json{{"kind", "stdout"}},
                                                         json{{"kind", "file"}, {"path", "alerts.jsonl"}}})}}
                                 .dump();
  }
};

std::string class0_frame(const std::string& device, std::uint64_t seq) {
  const auto& c = simulator::kClusterCenters[0];
  return protocol::encode_frame({device, seq, 1602998400 + seq, {c[0], c[1], c[2], c[3], {}}});
}

}  // namespace

TEST_CASE("serve: alerts reach stdout and file sinks, SIGTERM flushes") {
  Deployment d;
  test::Child serve({test::kCliPath, "serve", "--config", d.config.string()}, d.dir / "out", d.dir / "err");
  const auto port = test::await_serving(serve);
  REQUIRE(port != 0);

  {
    auto s = net::connect_tcp({"127.0.0.1", port});
    for (std::uint64_t i = 1; i <= 20; ++i) s.send_all(class0_frame("TANK-9", i));
  }
  CHECK(test::wait_for([&] { return test::read_lines(d.store).size() == 20; }));
  serve.signal(SIGTERM);
  REQUIRE(serve.wait_for(std::chrono::seconds(20)) == 0);

  // One alert for the sustained condition, on both sinks.
  const auto out = serve.out();
  CHECK(std::count(out.begin(), out.end(), '\n') == 1);
  const auto payload = json::parse(out);
  CHECK(payload["severity"] == "critical");
  CHECK(payload["device_id"] == "TANK-9");
  CHECK(payload["timestamp"] == 1602998401);
  const auto alerts = test::read_lines(d.alerts);
  REQUIRE(alerts.size() == 1);
  CHECK(alerts[0] + "\n" == out);

  const auto records = test::read_lines(d.store);
  std::size_t sent = 0;
  for (const auto& r : records) sent += json::parse(r)["alert_sent"].get<bool>();
  CHECK(sent == 1);
}

TEST_CASE("serve: FLOC_CONFIG fallback, --listen override and garbage input") {
  Deployment d;
  ::setenv("FLOC_CONFIG", d.config.c_str(), 1);
  const auto free_port = test::unused_port();
  test::Child serve({test::kCliPath, "serve", "--listen", "127.0.0.1:" + std::to_string(free_port)}, d.dir / "out",
                    d.dir / "err");
  ::unsetenv("FLOC_CONFIG");
  const auto port = test::await_serving(serve);
  REQUIRE(port == free_port);

  Rng rng(4);
  for (int conn = 0; conn < 5; ++conn) {
    auto s = net::connect_tcp({"127.0.0.1", port});
    std::string junk;
    for (int i = 0; i < 5000; ++i) junk.push_back(static_cast<char>(rng.index(256)));
    s.send_all(junk);
    s.send_all("\n");
  }
  {
    auto s = net::connect_tcp({"127.0.0.1", port});
    s.send_all(protocol::encode_frame({"OK-1", 1, 1602998400, {29.5, 7.0, 2.5, 35.0, {}}}));
  }
  CHECK(test::wait_for([&] { return test::read_lines(d.store).size() == 1; }));
  CHECK_FALSE(serve.wait_for(std::chrono::milliseconds(100)));  // still alive

  serve.signal(SIGINT);
  CHECK(serve.wait_for(std::chrono::seconds(20)) == 0);
  CHECK(serve.err().find("rejected line") != std::string::npos);
}

TEST_CASE("serve: startup errors exit 1") {
  Deployment d;
  std::ofstream(d.dir / "bad.json") << R"({"model": "absent.json"})";
  const auto r = test::run_cli({"serve", "--config", (d.dir / "bad.json").string()}, d.dir.path());
  CHECK(r.code == 1);
  CHECK(r.err.find("absent.json") != std::string::npos);

  std::ofstream(d.dir / "hook.json") << R"({"model": "model.json", "sinks": [{"kind": "webhook", "url": "https://x/"}]})";
  CHECK(test::run_cli({"serve", "--config", (d.dir / "hook.json").string()}, d.dir.path()).code == 1);
}

TEST_CASE("simulate against a live serve") {
  Deployment d;
  test::Child serve({test::kCliPath, "serve", "--config", d.config.string()}, d.dir / "out", d.dir / "err");
  const auto port = test::await_serving(serve);
  REQUIRE(port != 0);
  const auto r = test::run_cli({"simulate", "--target", "127.0.0.1:" + std::to_string(port), "--scenario", "normal",
                                "--devices", "2", "--rate", "20", "--duration", "1", "--seed", "3"},
                               d.dir.path());
  CHECK(r.code == 0);
  CHECK(json::parse(r.out)["frames_sent"] == 40);
  CHECK(test::wait_for([&] { return test::read_lines(d.store).size() == 40; }));
  serve.signal(SIGINT);
  CHECK(serve.wait_for(std::chrono::seconds(20)) == 0);

  const auto refused = test::run_cli(
      {"simulate", "--target", "127.0.0.1:" + std::to_string(test::unused_port()), "--duration", "1"}, d.dir.path());
  CHECK(refused.code == 1);
}
