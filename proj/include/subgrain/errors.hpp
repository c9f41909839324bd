#pragma once

#include <stdexcept>
#include <string>

namespace subgrain {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed input that can be pinned to a line of a text file.
class ParseError : public Error {
public:
    ParseError(const std::string& msg, int line)
        : Error(msg + " (line " + std::to_string(line) + ")"), line_(line) {}
    int line() const { return line_; }

private:
    int line_;
};

/// Well-formed input violating a domain invariant (e.g. end < start).
class ValidationError : public Error {
public:
    explicit ValidationError(const std::string& msg, int line = 0)
        : Error(line > 0 ? msg + " (line " + std::to_string(line) + ")" : msg),
          line_(line) {}
    int line() const { return line_; }

private:
    int line_;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

/// Structured data file with bad shape (duplicate keys, unknown enum value, ...).
class FormatError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

class EmptyCorpusError : public Error {
public:
    using Error::Error;
};

/// Model backend failure. Retriable failures (transport, timeout) may be
/// attempted again per the profile retry policy; hard failures may not.
class BackendError : public Error {
public:
    BackendError(const std::string& msg, bool retriable)
        : Error(msg), retriable_(retriable) {}
    bool retriable() const { return retriable_; }

private:
    bool retriable_;
};

} // namespace subgrain
