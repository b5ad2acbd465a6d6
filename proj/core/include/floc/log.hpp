#pragma once

#include <memory>

#include <spdlog/spdlog.h>

namespace floc {

/// Shared stderr logger; standard output is reserved for machine-readable data.
std::shared_ptr<spdlog::logger> logger();

}  // namespace floc
