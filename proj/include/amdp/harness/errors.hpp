#pragma once

#include <stdexcept>

namespace amdp {

/// Bad configuration or instance file content. Maps to exit code 2.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Filesystem failure. Maps to exit code 4.
class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum ExitCode : int {
    kExitOk = 0,
    kExitConfigError = 2,
    kExitCheckFailure = 3,
    kExitIoError = 4,
};

} // namespace amdp
