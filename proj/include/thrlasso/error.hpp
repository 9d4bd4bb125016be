#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace thrlasso {

enum class ErrorCode {
    InvalidArgument,
    LengthMismatch,
    NonFinite,
    ZeroColumn,
    DuplicateQ,
    ParseError,
    AllZeroDesign,
    DegenerateRn,
    BudgetExceeded,
    EmptyWindow,
    SingularDesign,
    ConfigError,
};

std::string_view to_string(ErrorCode code);

/// Exception carrying a machine-readable code; the CLI maps codes to exit statuses.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(what), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

}  // namespace thrlasso
