#include "floc/log.hpp"

#include <spdlog/sinks/stdout_color_sinks.h>

namespace floc {

std::shared_ptr<spdlog::logger> logger() {
  static const auto instance = [] {
    auto existing = spdlog::get("floc");
    return existing ? existing : spdlog::stderr_color_mt("floc");
  }();
  return instance;
}

}  // namespace floc
