#pragma once

#include <stdexcept>
#include <string>

namespace cadet {

// Caller-side problems (bad shapes, bad config values, malformed files) derive
// from UserError; the CLI maps them to exit code 1. Everything else is internal.
class UserError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ShapeError : public UserError {
public:
    using UserError::UserError;
};

class ConfigError : public UserError {
public:
    using UserError::UserError;
};

class ParseError : public UserError {
public:
    ParseError(const std::string& msg, std::size_t line)
        : UserError(line ? "line " + std::to_string(line) + ": " + msg : msg), line_(line)
    {
    }
    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

class NumericError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace cadet
