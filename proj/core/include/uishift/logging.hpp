#pragma once

#include <string_view>

namespace uishift {

// Reads UISHIFT_LOG (trace, debug, info, warn, error, off); default warn.
void configure_logging_from_env();

// Same level names as UISHIFT_LOG. Unknown names are ignored.
void set_log_level(std::string_view level);

std::string_view version();

}  // namespace uishift
