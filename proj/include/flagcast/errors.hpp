#pragma once

#include <stdexcept>
#include <string>

namespace flagcast {

// Base for everything thrown by this library.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Bad user input: config files, CLI values, window layouts, out-of-range knobs.
class ConfigError : public Error {
public:
    explicit ConfigError(const std::string& msg) : Error(msg) {}
};

// A malformed input file. Carries the location so operators can fix the line.
class ParseError : public Error {
public:
    ParseError(std::string path, std::size_t line, std::size_t column, const std::string& what_failed)
        : Error(path + ":" + std::to_string(line) + ":" + std::to_string(column) + ": " + what_failed),
          path_(std::move(path)),
          line_(line),
          column_(column) {}

    const std::string& path() const { return path_; }
    std::size_t line() const { return line_; }
    std::size_t column() const { return column_; }

private:
    std::string path_;
    std::size_t line_;
    std::size_t column_;
};

// A query window fell outside the ledger's covered interval.
class CoverageError : public Error {
public:
    explicit CoverageError(const std::string& msg) : Error(msg) {}
};

// API preconditions violated by the caller (mixed account/day batches, subset
// violations, feature-order mismatches).
class ContractError : public Error {
public:
    explicit ContractError(const std::string& msg) : Error(msg) {}
};

// Training cannot proceed: single-class input, no positives to keep.
class DegenerateTrainingError : public Error {
public:
    explicit DegenerateTrainingError(const std::string& msg) : Error(msg) {}
};

// AUC is undefined for the given truth/universe pair.
class UndefinedAucError : public Error {
public:
    explicit UndefinedAucError(const std::string& msg) : Error(msg) {}
};

// Infeasible synthetic-trace specification.
class SpecError : public Error {
public:
    explicit SpecError(const std::string& msg) : Error(msg) {}
};

// An empirical distribution was requested over zero qualifying samples.
class EmptyDistributionError : public Error {
public:
    explicit EmptyDistributionError(const std::string& msg) : Error(msg) {}
};

}  // namespace flagcast
