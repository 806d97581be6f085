#pragma once

#include <stdexcept>
#include <string>

namespace vlmlab {

// Exit codes used by the CLI. Each error class maps to exactly one code so
// scripted callers can tell failure modes apart.
enum class ExitCode : int {
    ok = 0,
    usage = 1,
    config = 2,
    shape = 3,
    degenerate_input = 4,
    io = 5,
    format = 6,
};

class Error : public std::runtime_error {
  public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
    virtual ExitCode exit_code() const { return ExitCode::usage; }
};

// Dimension or length mismatch between operands.
class ShapeError : public Error {
  public:
    using Error::Error;
    ExitCode exit_code() const override { return ExitCode::shape; }
};

// Invalid configuration value, unknown scheme name, inconsistent dims.
class ConfigError : public Error {
  public:
    using Error::Error;
    ExitCode exit_code() const override { return ExitCode::config; }
};

// Mathematically degenerate input (zero norm, non-finite values).
class DegenerateInputError : public Error {
  public:
    using Error::Error;
    ExitCode exit_code() const override { return ExitCode::degenerate_input; }
};

// Filesystem-level failure (missing file, unreadable path).
class IoError : public Error {
  public:
    using Error::Error;
    ExitCode exit_code() const override { return ExitCode::io; }
};

// File exists but its contents are wrong: bad magic, unsupported version,
// checksum mismatch, tampered manifest.
class FormatError : public Error {
  public:
    using Error::Error;
    ExitCode exit_code() const override { return ExitCode::format; }
};

}  // namespace vlmlab
