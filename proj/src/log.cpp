#include "evae/log.hpp"

#include <spdlog/sinks/stdout_sinks.h>

#include <cstdlib>
#include <string>

namespace evae::log {

void init_from_env() {
  auto logger = spdlog::stderr_logger_st("evae");
  logger->set_pattern("[%l] %v");
  spdlog::set_default_logger(logger);
  const char* env = std::getenv("EVAE_LOG_LEVEL");
  const std::string level = env ? env : "info";
  if (level == "error") {
    spdlog::set_level(spdlog::level::err);
  } else if (level == "debug") {
    spdlog::set_level(spdlog::level::debug);
  } else {
    if (level != "info") spdlog::warn("unknown EVAE_LOG_LEVEL '{}', using info", level);
    spdlog::set_level(spdlog::level::info);
  }
}

}  // namespace evae::log
