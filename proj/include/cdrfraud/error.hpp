#pragma once

#include <stdexcept>
#include <string>

namespace cdrfraud {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed CSV or schema text. `line` is the 1-based physical line, 0 if unknown.
class ParseError : public Error {
public:
    ParseError(const std::string& what, std::size_t line = 0) : Error(what), line_(line) {}
    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

class SchemaError : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

class DimensionError : public Error {
public:
    using Error::Error;
};

class ModelFormatError : public Error {
public:
    using Error::Error;
};

/// Raised by the pipeline; wraps the failing stage's error with the stage name.
class StageError : public Error {
public:
    StageError(std::string stage, const std::string& cause)
        : Error(stage + ": " + cause), stage_(std::move(stage)) {}
    const std::string& stage() const noexcept { return stage_; }

private:
    std::string stage_;
};

}  // namespace cdrfraud
