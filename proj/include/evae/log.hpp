#pragma once

#include <spdlog/spdlog.h>

namespace evae::log {

/// Applies EVAE_LOG_LEVEL (error, info, debug; default info) to the default
/// stderr logger.
void init_from_env();

}  // namespace evae::log
