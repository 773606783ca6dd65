#include "shapeforge/log.hpp"

#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <cstdlib>
#include <string>

namespace shapeforge {

void init_logging() {
  auto logger = spdlog::stderr_color_mt("shapeforge");
  logger->set_pattern("[%H:%M:%S.%e] [%^%l%$] %v");
  spdlog::set_default_logger(logger);
  spdlog::set_level(spdlog::level::info);

  const char* env = std::getenv("SHAPEFORGE_LOG");
  if (env == nullptr || *env == '\0') return;
  const std::string name(env);
  const auto level = spdlog::level::from_str(name);
  // from_str maps anything it does not know to off, so check the round trip.
  if (level == spdlog::level::off && name != "off") {
    spdlog::warn("SHAPEFORGE_LOG='{}' is not a log level; using info", name);
    return;
  }
  spdlog::set_level(level);
}

}  // namespace shapeforge
