#pragma once

#include <stdexcept>
#include <string>

namespace planguard {

// Base class for every error this library throws. Catching planguard::Error
// at a run boundary is how the pipeline isolates per-run failures.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& message) : std::runtime_error(message) {}
};

class ConfigError : public Error {
public:
    ConfigError(const std::string& field, const std::string& message)
        : Error("config field '" + field + "': " + message), field_(field) {}
    const std::string& field() const { return field_; }

private:
    std::string field_;
};

class IoError : public Error {
public:
    explicit IoError(const std::string& message) : Error(message) {}
};

}  // namespace planguard
