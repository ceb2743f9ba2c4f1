#pragma once

#include <stdexcept>
#include <string>

namespace coldstart {

/// Group or item index outside the model's range.
class IndexError : public std::out_of_range {
public:
    using std::out_of_range::out_of_range;
};

/// A call violated an operation's precondition (duplicate item, bad config, ...).
class PreconditionError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Every item has already been rated.
class ExhaustedError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A policy asked for an item the user has already rated.
class ProtocolError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

/// Decision tree with dangling children, cycles or repeated path items.
class StructuralError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Input file could not be parsed. `line()` is 1-based, 0 when unknown.
class ParseError : public std::runtime_error {
public:
    ParseError(const std::string& what, std::size_t line = 0)
        : std::runtime_error(line ? "line " + std::to_string(line) + ": " + what : what)
        , line_(line)
    {
    }
    std::size_t line() const { return line_; }

private:
    std::size_t line_;
};

class NotImplementedError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace coldstart
