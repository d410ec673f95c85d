#pragma once

#include <stdexcept>
#include <string>

namespace cdi {

// Base class for all library failures. `kind` is a short machine-parseable
// category ("shape", "io", "config", ...) used by the CLI error line.
class Error : public std::runtime_error {
public:
    Error(std::string kind, const std::string& msg)
        : std::runtime_error(kind + ": " + msg), kind_(std::move(kind)) {}

    const std::string& kind() const { return kind_; }

private:
    std::string kind_;
};

struct ShapeError : Error {
    explicit ShapeError(const std::string& msg) : Error("shape", msg) {}
};

struct IoError : Error {
    explicit IoError(const std::string& msg) : Error("io", msg) {}
};

struct ConfigError : Error {
    explicit ConfigError(const std::string& msg) : Error("config", msg) {}
};

struct StateError : Error {
    explicit StateError(const std::string& msg) : Error("state", msg) {}
};

struct ValueError : Error {
    explicit ValueError(const std::string& msg) : Error("value", msg) {}
};

} // namespace cdi
