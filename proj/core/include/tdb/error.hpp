#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace tdb {

/// Failure classes surfaced to callers and, through the CLI, as the
/// machine-parsable category printed on a non-zero exit.
enum class ErrorCategory {
    shape,         // dimension / size mismatch
    range,         // index, rank or time outside the valid domain
    numeric,       // non-finite values, failed factorization
    rank_collapse, // unfolded core lost rank; caller must reinitialize
    io,            // file missing, short, corrupt or unwritable
    config,        // invalid user configuration
};

std::string_view category_name(ErrorCategory c) noexcept;

class Error : public std::runtime_error {
public:
    Error(ErrorCategory category, const std::string& what)
        : std::runtime_error(what), category_(category) {}

    [[nodiscard]] ErrorCategory category() const noexcept { return category_; }

private:
    ErrorCategory category_;
};

[[noreturn]] inline void fail(ErrorCategory c, const std::string& msg) { throw Error(c, msg); }

inline void require(bool cond, ErrorCategory c, const std::string& msg) {
    if (!cond) fail(c, msg);
}

} // namespace tdb
