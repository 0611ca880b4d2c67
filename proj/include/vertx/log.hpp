#pragma once

#include <cstdlib>
#include <iostream>
#include <string>

namespace vertx::log {

enum class Level : int { Error = 0, Warn = 1, Info = 2 };

// Verbosity is controlled by the VERTX_LOG environment variable
// (0 = errors only, 1 = warnings, 2 = info). Default is 1.
inline int verbosity() {
    static const int level = [] {
        const char* env = std::getenv("VERTX_LOG");
        if (!env || !*env) return 1;
        char* end = nullptr;
        long v = std::strtol(env, &end, 10);
        if (end == env) return 1;
        return static_cast<int>(v < 0 ? 0 : (v > 2 ? 2 : v));
    }();
    return level;
}

inline void emit(Level lvl, const std::string& msg) {
    if (static_cast<int>(lvl) > verbosity()) return;
    const char* tag = lvl == Level::Error ? "error" : (lvl == Level::Warn ? "warning" : "info");
    std::cerr << "vertx: " << tag << ": " << msg << '\n';
}

inline void error(const std::string& msg) { emit(Level::Error, msg); }
inline void warn(const std::string& msg) { emit(Level::Warn, msg); }
inline void info(const std::string& msg) { emit(Level::Info, msg); }

} // namespace vertx::log
