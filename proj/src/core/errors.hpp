#pragma once

#include <stdexcept>
#include <string>

namespace mr {

/* Error taxonomy shared with the C API (codes must stay in sync with
 * mr_status in include/mr/metric_resolvent.h). */
enum class ErrorCode {
    ok = 0,
    invalid_argument = 1,
    dimension_mismatch = 2,
    unsupported = 3,
    singular_system = 4,
    residual_failure = 5,
    not_converged = 6,
    config_error = 7,
    io_error = 8,
    internal = 9,
};

const char* error_code_name(ErrorCode code);

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(message), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

inline const char* error_code_name(ErrorCode code)
{
    switch (code) {
    case ErrorCode::ok: return "ok";
    case ErrorCode::invalid_argument: return "invalid_argument";
    case ErrorCode::dimension_mismatch: return "dimension_mismatch";
    case ErrorCode::unsupported: return "unsupported";
    case ErrorCode::singular_system: return "singular_system";
    case ErrorCode::residual_failure: return "residual_failure";
    case ErrorCode::not_converged: return "not_converged";
    case ErrorCode::config_error: return "config_error";
    case ErrorCode::io_error: return "io_error";
    case ErrorCode::internal: return "internal";
    }
    return "unknown";
}

} // namespace mr
