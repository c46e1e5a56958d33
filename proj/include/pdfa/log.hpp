#pragma once

#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <string>

namespace pdfa {

enum class LogLevel { kError = 0, kInfo = 1, kDebug = 2 };

// Level comes from PDFA_DISTILL_LOG = {error,info,debug}; read once.
inline LogLevel log_level() {
    static const LogLevel level = [] {
        const char* env = std::getenv("PDFA_DISTILL_LOG");
        if (env == nullptr) return LogLevel::kError;
        if (std::strcmp(env, "debug") == 0) return LogLevel::kDebug;
        if (std::strcmp(env, "info") == 0) return LogLevel::kInfo;
        return LogLevel::kError;
    }();
    return level;
}

inline void log_msg(LogLevel lvl, const std::string& msg) {
    if (static_cast<int>(lvl) > static_cast<int>(log_level())) return;
    const char* tag = lvl == LogLevel::kError ? "error" : lvl == LogLevel::kInfo ? "info" : "debug";
    std::fprintf(stderr, "[pdfa-distill %s] %s\n", tag, msg.c_str());
}

inline void log_error(const std::string& msg) { log_msg(LogLevel::kError, msg); }
inline void log_info(const std::string& msg) { log_msg(LogLevel::kInfo, msg); }
inline void log_debug(const std::string& msg) { log_msg(LogLevel::kDebug, msg); }

}  // namespace pdfa
