#pragma once

#include <stdexcept>
#include <string>

namespace memsteer {

// Broad classes; they map onto process exit codes and C API status values.
enum class ErrorClass { usage = 1, data = 2, internal = 3 };

enum class ErrorKind {
    config,         // bad, missing, or unknown config key
    cli_usage,
    not_found,      // missing input artifact or file
    bad_magic,
    bad_version,
    truncated,
    schema,         // malformed record, field, or text
    overflow,       // sequence does not fit the model window
    contract,       // violated operation precondition
    unknown_token,
    dead_end,       // constrained decoding admits no token
    non_finite,
    internal,
};

inline ErrorClass error_class(ErrorKind k) {
    switch (k) {
        case ErrorKind::config:
        case ErrorKind::cli_usage:
            return ErrorClass::usage;
        case ErrorKind::internal:
            return ErrorClass::internal;
        default:
            return ErrorClass::data;
    }
}

class Error : public std::runtime_error {
  public:
    Error(ErrorKind kind, std::string msg) : std::runtime_error(std::move(msg)), kind_(kind) {}
    ErrorKind kind() const noexcept { return kind_; }
    ErrorClass cls() const noexcept { return error_class(kind_); }

  private:
    ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind k, const std::string& msg) { throw Error(k, msg); }

}  // namespace memsteer
