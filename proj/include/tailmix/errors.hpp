#pragma once

#include <stdexcept>
#include <string>

namespace tailmix {

/// Raised when a numerical fit fails to converge or the data are degenerate.
/// The message carries best-so-far diagnostics where available.
class FitError : public std::runtime_error {
public:
    explicit FitError(const std::string& what) : std::runtime_error(what) {}
};

/// Raised when external input (CSV, config, model JSON) cannot be parsed.
class InputError : public std::runtime_error {
public:
    explicit InputError(const std::string& what, long line = -1)
        : std::runtime_error(line >= 0 ? what + " (line " + std::to_string(line) + ")" : what),
          line_(line) {}

    long line() const { return line_; }

private:
    long line_;
};

}  // namespace tailmix
