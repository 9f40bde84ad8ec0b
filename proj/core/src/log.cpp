#include "chameleon/log.hpp"

#include <cstdlib>
#include <iostream>
#include <mutex>
#include <string>

namespace chameleon::log {

namespace {

Level read_level() {
    const char* env = std::getenv("CHAMELEON_LOG");
    if (env == nullptr) {
        return Level::error;
    }
    const std::string v(env);
    if (v == "debug") {
        return Level::debug;
    }
    if (v == "info") {
        return Level::info;
    }
    return Level::error;
}

std::mutex& mutex() {
    static std::mutex m;
    return m;
}

void write(Level lvl, const char* tag, std::string_view message) {
    if (static_cast<int>(lvl) > static_cast<int>(level())) {
        return;
    }
    std::lock_guard lock(mutex());
    std::cerr << "[chameleon " << tag << "] " << message << '\n';
}

}  // namespace

Level level() {
    static const Level lvl = read_level();
    return lvl;
}

void error(std::string_view message) {
    write(Level::error, "error", message);
}

void info(std::string_view message) {
    write(Level::info, "info", message);
}

void debug(std::string_view message) {
    write(Level::debug, "debug", message);
}

}  // namespace chameleon::log
