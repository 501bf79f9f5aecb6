#pragma once

#include <spdlog/spdlog.h>

namespace roadfuse {

// Library logger, writing to stderr. The level comes from the
// ROADFUSE_LOG_LEVEL environment variable (trace, debug, info, warn,
// error, off) and defaults to warn.
spdlog::logger& log();

}  // namespace roadfuse
