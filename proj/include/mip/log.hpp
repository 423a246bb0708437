#pragma once

#include <cstdio>
#include <cstdlib>
#include <cstring>

namespace mip {

enum class LogLevel { error = 0, info = 1, debug = 2 };

// Level comes from the MIP_LOG environment variable (error|info|debug).
inline LogLevel log_level() {
    static LogLevel level = [] {
        const char* env = std::getenv("MIP_LOG");
        if (env == nullptr) return LogLevel::error;
        if (std::strcmp(env, "debug") == 0) return LogLevel::debug;
        if (std::strcmp(env, "info") == 0) return LogLevel::info;
        return LogLevel::error;
    }();
    return level;
}

template <typename... Args>
void log_at(LogLevel lvl, const char* tag, const char* fmt, Args... args) {
    if (static_cast<int>(lvl) > static_cast<int>(log_level())) return;
    std::fprintf(stderr, "[mip %s] ", tag);
    if constexpr (sizeof...(Args) == 0) {
        std::fputs(fmt, stderr);
    } else {
        std::fprintf(stderr, fmt, args...);
    }
    std::fprintf(stderr, "\n");
}

#define MIP_WARN(...) ::mip::log_at(::mip::LogLevel::error, "warn", __VA_ARGS__)
#define MIP_INFO(...) ::mip::log_at(::mip::LogLevel::info, "info", __VA_ARGS__)
#define MIP_DEBUG(...) ::mip::log_at(::mip::LogLevel::debug, "debug", __VA_ARGS__)

} // namespace mip
