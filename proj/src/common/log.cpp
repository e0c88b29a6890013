#include "siriette/common/log.hpp"

#include <cstdlib>
#include <string_view>

#include <spdlog/sinks/stdout_color_sinks.h>

namespace siriette {

void init_logging() {
  static bool done = false;
  if (done) return;
  done = true;
  auto logger = spdlog::stderr_color_mt("siriette");
  spdlog::set_default_logger(logger);
  spdlog::set_pattern("[%H:%M:%S.%e] [%^%l%$] %v");
  spdlog::set_level(spdlog::level::warn);
  if (const char* env = std::getenv("SIRIETTE_LOG")) {
    std::string_view level(env);
    if (level == "error") spdlog::set_level(spdlog::level::err);
    if (level == "info") spdlog::set_level(spdlog::level::info);
    if (level == "debug") spdlog::set_level(spdlog::level::debug);
    if (level == "trace") spdlog::set_level(spdlog::level::trace);
  }
}

}  // namespace siriette
