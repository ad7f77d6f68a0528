#pragma once

#include <sstream>
#include <stdexcept>
#include <string>

namespace poseac {

// Contract violations and unrecoverable pipeline failures are reported
// through exceptions; the CLI maps them to exit codes.
struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

struct ConfigError : Error {
    explicit ConfigError(const std::string& msg) : Error(msg) {}
};

struct StageError : Error {
    StageError(const std::string& stage, const std::string& msg)
        : Error("stage '" + stage + "': " + msg), stage_name(stage) {}
    std::string stage_name;
};

namespace detail {
template <class... Args>
[[noreturn]] void fail(const char* expr, const char* file, int line, Args&&... args) {
    std::ostringstream os;
    os << "check failed: " << expr << " (" << file << ":" << line << ")";
    if constexpr (sizeof...(Args) > 0) {
        os << ": ";
        (os << ... << args);
    }
    throw Error(os.str());
}
}  // namespace detail

}  // namespace poseac

#define POSEAC_CHECK(cond, ...)                                                   \
    do {                                                                          \
        if (!(cond)) ::poseac::detail::fail(#cond, __FILE__, __LINE__, ##__VA_ARGS__); \
    } while (0)
