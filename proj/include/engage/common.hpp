#ifndef ENGAGE_COMMON_HPP
#define ENGAGE_COMMON_HPP

#include <cstdio>
#include <stdexcept>
#include <string>

namespace engage {

// Error taxonomy shared by the whole pipeline. The CLI maps these onto
// exit codes: ValidationError -> 1, NumericError -> 2, IoError -> 3.
class ValidationError : public std::runtime_error {
public:
    explicit ValidationError(const std::string& msg) : std::runtime_error(msg) {}
};

class NumericError : public std::runtime_error {
public:
    explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

class IoError : public std::runtime_error {
public:
    explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

enum class LogLevel { quiet = 0, info = 1, debug = 2 };

// Level is read once from ENGAGE_MIL_LOG (quiet|info|debug, default info).
LogLevel log_level();
void set_log_level(LogLevel level);
void log_info(const std::string& msg);
void log_debug(const std::string& msg);

} // namespace engage

#endif
