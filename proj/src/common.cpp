#include "engage/common.hpp"

#include <cstdlib>
#include <cstring>

namespace engage {

namespace {

LogLevel g_level = [] {
    const char* env = std::getenv("ENGAGE_MIL_LOG");
    if (env == nullptr) return LogLevel::info;
    if (std::strcmp(env, "quiet") == 0) return LogLevel::quiet;
    if (std::strcmp(env, "debug") == 0) return LogLevel::debug;
    return LogLevel::info;
}();

} // namespace

LogLevel log_level() { return g_level; }

void set_log_level(LogLevel level) { g_level = level; }

void log_info(const std::string& msg) {
    if (g_level >= LogLevel::info) std::fprintf(stdout, "%s\n", msg.c_str());
}

void log_debug(const std::string& msg) {
    if (g_level >= LogLevel::debug) std::fprintf(stdout, "[debug] %s\n", msg.c_str());
}

} // namespace engage
