#pragma once

#include <stdexcept>
#include <string>

namespace obslab {

enum class ErrorCode {
    invalid_input,
    invalid_parameter,
    divergence_undefined,
    contract_violation,
    configuration,
    invalid_token,
    context_overflow,
    prompt_overflow,
    data,
    checkpoint_format,
    construction,
    optimization_diverged,
    io,
};

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

[[noreturn]] inline void raise(ErrorCode code, const std::string& msg) { throw Error(code, msg); }

}  // namespace obslab
