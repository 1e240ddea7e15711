#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace toolcheck {

enum class ErrorKind {
    MalformedSpec,
    UnreadableFile,
    EmptyDataset,
    InvariantViolation,
    FormatError,
    MissingReference,
    NoEntriesParsed,
    Inapplicable,
    TokenOutOfRange,
    PairNotMinimal,
    NonFiniteLoss,
    ClientError,
    BudgetExceeded,
    InvalidArgument,
};

std::string_view error_kind_name(ErrorKind kind);

// Every failure the library reports is an Error carrying its kind, so callers
// (the CLI in particular) can map kinds onto exit codes without string matching.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(std::string(error_kind_name(kind)) + ": " + what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

}  // namespace toolcheck
