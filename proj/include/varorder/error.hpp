#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace varorder {

/// Input failed validation or could not be parsed. Maps to CLI exit code 2.
class InputError : public std::runtime_error {
public:
    explicit InputError(const std::string& what, std::vector<std::string> details = {})
        : std::runtime_error(what), details_(std::move(details)) {}
    const std::vector<std::string>& details() const noexcept { return details_; }

private:
    std::vector<std::string> details_;
};

/// A numerical routine could not produce a trustworthy result. Exit code 3.
class SolverError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Iterative fitting ran out of budget. Exit code 4.
class ConvergenceError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace varorder
