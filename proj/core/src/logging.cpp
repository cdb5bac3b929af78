#include "uishift/logging.hpp"

#include <cstdlib>
#include <string>

#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

namespace uishift {

void set_log_level(std::string_view level) {
  auto lvl = spdlog::level::from_str(std::string(level));
  // from_str maps unknown names to off; only honour real names.
  if (lvl == spdlog::level::off && level != "off") return;
  spdlog::set_level(lvl);
}

void configure_logging_from_env() {
  static const bool once = [] {
    auto logger = spdlog::stderr_color_mt("uishift");
    spdlog::set_default_logger(logger);
    spdlog::set_level(spdlog::level::warn);
    return true;
  }();
  (void)once;
  if (const char* v = std::getenv("UISHIFT_LOG")) set_log_level(v);
}

std::string_view version() { return UISHIFT_VERSION; }

}  // namespace uishift
