#include "cli.hpp"

#include <csignal>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "floc/dataset.hpp"
#include "floc/log.hpp"
#include "floc/net.hpp"
#include "floc/nn.hpp"
#include "floc/protocol.hpp"
#include "floc/service.hpp"
#include "floc/simulator.hpp"

namespace floc::cli {

namespace {

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

struct UserError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void require_file(const std::string& path, const char* what) {
  std::error_code ec;
  if (!fs::is_regular_file(path, ec)) throw UserError(std::string(what) + " not found: " + path);
}

// First non-blank line starting with a letter is treated as a header.
bool csv_has_header(const std::string& path) {
  std::ifstream in(path);
  std::string line;
  while (std::getline(in, line)) {
    const auto pos = line.find_first_not_of(" \t\r");
    if (pos == std::string::npos) continue;
    return std::isalpha(static_cast<unsigned char>(line[pos])) != 0;
  }
  return false;
}

std::vector<std::size_t> parse_hidden(const std::string& text) {
  std::vector<std::size_t> dims;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t used = 0;
    long long v = 0;
    try {
      v = std::stoll(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != item.size() || v < 0)
      throw UserError("--hidden expects comma-separated non-negative integers, got '" + text + "'");
    dims.push_back(static_cast<std::size_t>(v));
  }
  if (dims.empty()) throw UserError("--hidden must list at least one width");
  return dims;
}

ojson confusion_json(const nn::ConfusionMatrix& m) {
  ojson rows = ojson::array();
  for (const auto& r : m) rows.push_back(r);
  return rows;
}

struct TrainArgs {
  std::string data;
  std::string out;
  nn::TrainConfig config;
  std::string hidden = "16,16,16,16,16";
};

int do_train(const TrainArgs& a, std::ostream& out) {
  require_file(a.data, "data file");
  auto cfg = a.config;
  cfg.hidden_dims = parse_hidden(a.hidden);
  const auto data = dataset::load_csv(a.data, csv_has_header(a.data));
  const auto [params, report] = nn::train(data, cfg);
  nn::save_model(params, a.out);

  ojson j;
  j["train_size"] = report.train_size;
  j["test_size"] = report.test_size;
  j["epochs"] = cfg.epochs;
  j["batch_size"] = report.effective_batch;
  j["initial_train_loss"] = report.initial_train_loss;
  j["final_train_loss"] = report.final_train_loss();
  j["test_loss"] = report.final_test_loss;
  j["test_accuracy"] = report.final_test_accuracy;
  j["confusion"] = confusion_json(report.confusion);
  j["wall_time_s"] = report.wall_time_s;
  j["model"] = a.out;
  out << j.dump() << '\n';
  return kOk;
}

int do_eval(const std::string& model_path, const std::string& data_path, std::ostream& out) {
  require_file(model_path, "model file");
  require_file(data_path, "data file");
  const auto model = nn::load_model(model_path);
  const auto data = dataset::load_csv(data_path, csv_has_header(data_path), model.bin_edges);
  const auto r = nn::evaluate(model, data);
  ojson j;
  j["count"] = r.count;
  j["accuracy"] = r.accuracy;
  j["mean_loss"] = r.mean_loss;
  j["confusion"] = confusion_json(r.confusion);
  out << j.dump() << '\n';
  return kOk;
}

int do_predict(const std::string& model_path, const WaterSample& s, std::ostream& out) {
  require_file(model_path, "model file");
  const auto model = nn::load_model(model_path);
  const auto [cls, probs] = nn::predict(model, s);
  ojson j;
  j["class"] = to_int(cls);
  j["label"] = label(cls);
  j["probabilities"] = probs;
  out << j.dump() << '\n';
  return kOk;
}

int do_serve(std::string config_path, const std::string& listen_override, std::ostream& err) {
  if (config_path.empty()) {
    if (const char* env = std::getenv("FLOC_CONFIG")) config_path = env;
  }
  if (config_path.empty()) throw UserError("serve needs --config <file> or FLOC_CONFIG");
  require_file(config_path, "config file");
  auto config = service::load_config(config_path);
  if (!listen_override.empty()) config.listen = net::parse_endpoint(listen_override);
  require_file(config.model_path.string(), "model file");
  auto model = nn::load_model(config.model_path);

  // Block termination signals before any thread starts so only sigwait sees them.
  sigset_t signals;
  sigemptyset(&signals);
  sigaddset(&signals, SIGINT);
  sigaddset(&signals, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &signals, nullptr);

  service::Service svc(std::move(config), std::move(model));
  svc.start();
  err << "serving on " << svc.config().listen.host << ":" << svc.port() << std::endl;

  int sig = 0;
  sigwait(&signals, &sig);
  logger()->info("signal {} received, shutting down", sig);
  svc.stop();
  const auto st = svc.stats();
  logger()->info("accepted {} rejected {} alerts {}", st.accepted, st.rejected, st.alerts_queued);
  pthread_sigmask(SIG_UNBLOCK, &signals, nullptr);
  return kOk;
}

struct SimArgs {
  std::string target;
  std::string emit;
  std::string scenario = "normal";
  simulator::Scenario s;
  bool no_pace = false;
};

int do_simulate(SimArgs a, std::ostream& out) {
  a.s.kind = simulator::scenario_from_string(a.scenario);
  simulator::check(a.s);
  if (a.target.empty() == a.emit.empty()) throw UserError("simulate needs exactly one of --target or --emit");

  simulator::StreamStats stats;
  if (!a.emit.empty()) {
    std::ofstream file(a.emit, std::ios::binary | std::ios::trunc);
    if (!file) throw UserError("cannot write " + a.emit);
    for (std::size_t d = 0; d < a.s.devices; ++d) {
      simulator::DeviceStream stream(a.s, d);
      for (std::size_t k = 0; k < a.s.frames_per_device(); ++k) {
        const auto e = stream.next_frame();
        file << e.line;
        ++stats.frames_sent;
        if (e.corrupted) ++stats.corrupted;
      }
    }
  } else {
    stats = simulator::run(net::parse_endpoint(a.target), a.s, !a.no_pace);
  }
  ojson j;
  j["scenario"] = simulator::to_string(a.s.kind);
  j["devices"] = a.s.devices;
  j["frames_sent"] = stats.frames_sent;
  j["corrupted"] = stats.corrupted;
  out << j.dump() << '\n';
  return kOk;
}

int do_gen_data(std::size_t n, std::uint64_t seed, const std::string& path, std::ostream& out) {
  if (n < 8) throw UserError("gen-data needs --n >= 8");
  const auto data = simulator::gen_labeled(n, seed);
  dataset::write_csv(path, data);
  ojson j;
  j["rows"] = data.size();
  j["seed"] = seed;
  j["out"] = path;
  out << j.dump() << '\n';
  return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Biofloc water-quality pipeline: train, eval, predict, serve, simulate"};
  app.name("floc");
  app.require_subcommand(1);

  TrainArgs train;
  auto* train_cmd = app.add_subcommand("train", "Train the DO classifier on a CSV dataset");
  train_cmd->add_option("--data", train.data, "CSV with columns temp,do,ph,tds,floc")->required();
  train_cmd->add_option("--out", train.out, "Model file to write")->required();
  train_cmd->add_option("--epochs", train.config.epochs)->capture_default_str()->check(CLI::PositiveNumber);
  train_cmd->add_option("--batch", train.config.batch_size)->capture_default_str()->check(CLI::PositiveNumber);
  train_cmd->add_option("--lr", train.config.learning_rate)->capture_default_str();
  train_cmd->add_option("--momentum", train.config.momentum)->capture_default_str();
  train_cmd->add_option("--seed", train.config.seed)->capture_default_str();
  train_cmd->add_option("--hidden", train.hidden, "Comma-separated hidden widths")->capture_default_str();

  std::string model_path, data_path;
  auto* eval_cmd = app.add_subcommand("eval", "Evaluate a model on a labeled CSV");
  eval_cmd->add_option("--model", model_path)->required();
  eval_cmd->add_option("--data", data_path)->required();

  WaterSample sample;
  std::string predict_model;
  auto* predict_cmd = app.add_subcommand("predict", "Classify one reading");
  predict_cmd->add_option("--model", predict_model)->required();
  predict_cmd->add_option("--temp", sample.temp)->required();
  predict_cmd->add_option("--ph", sample.ph)->required();
  predict_cmd->add_option("--tds", sample.tds)->required();
  predict_cmd->add_option("--floc", sample.floc)->required();

  std::string config_path, listen;
  auto* serve_cmd = app.add_subcommand("serve", "Run the ingestion service until interrupted");
  serve_cmd->add_option("--config", config_path, "JSON config (falls back to FLOC_CONFIG)");
  serve_cmd->add_option("--listen", listen, "Override the configured host:port");

  SimArgs sim;
  auto* sim_cmd = app.add_subcommand("simulate", "Stream simulated sensor frames");
  sim_cmd->add_option("--target", sim.target, "Service host:port");
  sim_cmd->add_option("--emit", sim.emit, "Write frames to a file instead of a socket");
  sim_cmd->add_option("--scenario", sim.scenario)->capture_default_str()
      ->check(CLI::IsMember({"normal", "do-crash", "ph-drift"}));
  sim_cmd->add_option("--devices", sim.s.devices)->capture_default_str()->check(CLI::PositiveNumber);
  sim_cmd->add_option("--rate", sim.s.rate, "Frames per second per device")->capture_default_str();
  sim_cmd->add_option("--duration", sim.s.duration_s, "Seconds")->capture_default_str();
  sim_cmd->add_option("--corrupt-prob", sim.s.corrupt_prob)->capture_default_str();
  sim_cmd->add_option("--seed", sim.s.seed)->capture_default_str();
  sim_cmd->add_flag("--no-pace", sim.no_pace, "Send as fast as possible (timestamps still follow --rate)");

  std::size_t gen_n = 2000;
  std::uint64_t gen_seed = 7;
  std::string gen_out;
  auto* gen_cmd = app.add_subcommand("gen-data", "Write the synthetic four-cluster dataset as CSV");
  gen_cmd->add_option("--n", gen_n)->capture_default_str();
  gen_cmd->add_option("--seed", gen_seed)->capture_default_str();
  gen_cmd->add_option("--out", gen_out)->required();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, err, err);
    return kUserError;
  }

  try {
    if (*train_cmd) return do_train(train, out);
    if (*eval_cmd) return do_eval(model_path, data_path, out);
    if (*predict_cmd) return do_predict(predict_model, sample, out);
    if (*serve_cmd) return do_serve(config_path, listen, err);
    if (*sim_cmd) return do_simulate(sim, out);
    if (*gen_cmd) return do_gen_data(gen_n, gen_seed, gen_out, out);
  } catch (const UserError& e) {
    err << "error: " << e.what() << '\n';
    return kUserError;
  } catch (const dataset::DatasetError& e) {
    err << "error: " << e.what() << '\n';
    return kUserError;
  } catch (const nn::NnError& e) {
    err << "error: " << e.what() << '\n';
    return kUserError;
  } catch (const service::ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return kUserError;
  } catch (const notify::ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return kUserError;
  } catch (const net::NetError& e) {
    err << "error: " << e.what() << '\n';
    return kUserError;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << '\n';
    return kUserError;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << '\n';
    return kInternalError;
  }
  return kInternalError;
}

}  // namespace floc::cli
