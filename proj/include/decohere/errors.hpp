#pragma once

#include <stdexcept>
#include <string>

namespace decohere {

/// Array length / state dimension does not match the model.
class DimensionError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

class NonFiniteError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// A request would exceed a memory guard (dense oracle cap, state-vector cap).
class ResourceError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Integration aborted because the monitored norm drifted past its bound.
class NumericalGuardError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid run configuration; `path` names the offending field (JSON pointer).
class ConfigError : public std::runtime_error {
public:
    ConfigError(std::string path, const std::string& what)
        : std::runtime_error(path.empty() ? what : path + ": " + what), path_(std::move(path)) {}

    const std::string& path() const noexcept { return path_; }

private:
    std::string path_;
};

}  // namespace decohere
