#pragma once
#include <stdexcept>
#include <string>
#include <string_view>

namespace dcglasso {

enum class ErrorCode {
    OverlapInNonOverlapMode,
    UncoveredFeature,
    EmptyGroup,
    IndexOutOfRange,
    DuplicateIndex,
    InvalidArgument,
    NonFiniteInput,
    DimensionMismatch,
    ModeMismatch,
    NonFiniteEncountered,
    AllPathsFailed,
    ShardTooSmall,
    AllShardsFailed,
    DegenerateColumn,
    ParseError,
};

std::string_view to_string(ErrorCode code);

// Fatal errors. Recoverable conditions (non-convergence, rank deficiency,
// separable data, ...) are reported through flags on the result types.
class Error : public std::runtime_error
{
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code)
    {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

} // namespace dcglasso
