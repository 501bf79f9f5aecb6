#include "roadfuse/logging.hpp"

#include <cstdlib>
#include <memory>

#include <spdlog/sinks/stdout_color_sinks.h>

namespace roadfuse {

spdlog::logger& log() {
  static const std::shared_ptr<spdlog::logger> logger = [] {
    auto l = spdlog::stderr_color_mt("roadfuse");
    l->set_pattern("[%l] %v");
    l->set_level(spdlog::level::warn);
    if (const char* level = std::getenv("ROADFUSE_LOG_LEVEL")) {
      l->set_level(spdlog::level::from_str(level));
    }
    return l;
  }();
  return *logger;
}

}  // namespace roadfuse
