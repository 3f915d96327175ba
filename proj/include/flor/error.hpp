#pragma once

#include <stdexcept>
#include <string>

namespace flor {

// Every failure the engine reports derives from Error. The CLI maps
// UsageError to exit code 2 and everything else to exit code 1.
class Error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

class NotFound : public Error {
  public:
    using Error::Error;
};

class UsageError : public Error {
  public:
    using Error::Error;
};

class TypeError : public Error {
  public:
    using Error::Error;
};

class IntegrityError : public Error {
  public:
    using Error::Error;
};

class IoError : public Error {
  public:
    using Error::Error;
};

class DataError : public Error {
  public:
    using Error::Error;
};

class RepositoryError : public Error {
  public:
    using Error::Error;
};

// Makefile parse failure; line is 1-based, 0 when not attributable.
class ParseError : public Error {
  public:
    ParseError(std::size_t line, const std::string& what)
        : Error(line ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}
    std::size_t line() const noexcept { return line_; }

  private:
    std::size_t line_;
};

class CycleError : public ParseError {
  public:
    explicit CycleError(const std::string& cycle)
        : ParseError(0, "dependency cycle: " + cycle), cycle_(cycle) {}
    const std::string& cycle() const noexcept { return cycle_; }

  private:
    std::string cycle_;
};

class UnsupportedConstruct : public ParseError {
  public:
    using ParseError::ParseError;
};

// Event stream violation; ordinal is the 1-based event number.
class ProtocolError : public Error {
  public:
    ProtocolError(std::size_t ordinal, const std::string& what)
        : Error("event " + std::to_string(ordinal) + ": " + what), ordinal_(ordinal) {}
    std::size_t ordinal() const noexcept { return ordinal_; }

  private:
    std::size_t ordinal_;
};

} // namespace flor
