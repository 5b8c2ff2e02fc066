#pragma once

#include <stdexcept>
#include <string>

namespace paxcast {

// Categories map onto CLI exit codes and HTTP statuses in the service layer.
enum class ErrorKind {
    InvalidInput,    // malformed data or arguments
    NotFound,        // unknown station, bucket or file
    Unprocessable,   // well-formed request that violates a domain rule
    NotReady,        // model state missing (untrained)
    Internal         // invariant violation
};

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

[[noreturn]] inline void fail(const std::string& what) { throw Error(ErrorKind::InvalidInput, what); }

}  // namespace paxcast
