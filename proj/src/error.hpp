#pragma once

#include <stdexcept>
#include <string>

namespace grf {

enum class ErrorKind {
    Structural,  // shapes, ranges, unsupported arguments
    Domain,      // non-SPD metric, non-positive density, bad time
    Validation,  // failed algebraic or closedness check
    Config,      // malformed or inconsistent scenario configuration
    Io,
    Abort,       // run aborted (blow-up, SPD floor, NaN)
};

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& msg) { throw Error(kind, msg); }

inline void require(bool cond, ErrorKind kind, const std::string& msg) {
    if (!cond) fail(kind, msg);
}

}  // namespace grf
