#pragma once

#include <stdexcept>
#include <string>

namespace medloc {

// Base for every error the library raises on purpose. The api layer maps the
// concrete type to an HTTP status.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ValidationError : public Error {
public:
    using Error::Error;
};

class ConflictError : public Error {
public:
    using Error::Error;
};

class NotFoundError : public Error {
public:
    using Error::Error;
};

class ForbiddenError : public Error {
public:
    using Error::Error;
};

class InvalidTransition : public Error {
public:
    using Error::Error;
};

class InvalidTrace : public Error {
public:
    using Error::Error;
};

class DomainError : public Error {
public:
    using Error::Error;
};

// Carries the 1-based line of the offending record.
class ParseError : public Error {
public:
    ParseError(std::string source, std::size_t line, const std::string& what)
        : Error(source + ":" + std::to_string(line) + ": " + what),
          source_(std::move(source)),
          line_(line) {}

    const std::string& source() const noexcept { return source_; }
    std::size_t line() const noexcept { return line_; }

private:
    std::string source_;
    std::size_t line_;
};

}  // namespace medloc
