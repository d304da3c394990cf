#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace spikeopt {

enum class ErrorKind {
    DimensionMismatch,
    InvalidArgument,
    NonConvergence,
    OutOfRange,
    Divergence,
    Degeneracy,
    CapExceeded,
    Infeasible,
    Parse,
    MissingDiagnostics,
};

[[nodiscard]] const char* to_string(ErrorKind kind) noexcept;

/// Every failure raised by the library carries a kind so callers (and the CLI's
/// exit-code mapping) can dispatch without parsing messages.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(what), kind_(kind) {}

    [[nodiscard]] ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

class ParseError : public Error {
public:
    ParseError(std::string source, std::size_t line, const std::string& what)
        : Error(ErrorKind::Parse, source + ":" + std::to_string(line) + ": " + what),
          source_(std::move(source)), line_(line) {}

    [[nodiscard]] const std::string& source() const noexcept { return source_; }
    [[nodiscard]] std::size_t line() const noexcept { return line_; }

private:
    std::string source_;
    std::size_t line_;
};

}  // namespace spikeopt
