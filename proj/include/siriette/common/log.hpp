#pragma once

#include <spdlog/spdlog.h>

namespace siriette {

// Configures the default logger from SIRIETTE_LOG (error, info, debug, trace).
// Defaults to warnings and above; safe to call more than once.
void init_logging();

}  // namespace siriette
