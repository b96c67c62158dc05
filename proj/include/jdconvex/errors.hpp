#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace jdconvex {

/// Base class of every error thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed coefficient expression; `offset` is the byte offset into the source.
class ParseError : public Error {
public:
    ParseError(const std::string& what, std::size_t offset)
        : Error(what + " at offset " + std::to_string(offset)), offset_(offset) {}
    std::size_t offset() const noexcept { return offset_; }

private:
    std::size_t offset_;
};

/// Arithmetic domain violation during evaluation (sqrt of negative, log of
/// non-positive, division by zero). Carries the offending sub-expression.
class DomainError : public Error {
public:
    DomainError(const std::string& what, std::size_t offset, std::string subexpr)
        : Error(what + " in '" + subexpr + "' at offset " + std::to_string(offset)),
          offset_(offset), subexpr_(std::move(subexpr)) {}
    std::size_t offset() const noexcept { return offset_; }
    const std::string& subexpression() const noexcept { return subexpr_; }

private:
    std::size_t offset_;
    std::string subexpr_;
};

/// Derivative requested at a kink of abs/min/max or an infinite-slope point.
class NonDifferentiableError : public DomainError {
public:
    using DomainError::DomainError;
};

/// Invalid model or experiment file; `field` is the JSON path of the offending entry.
class SchemaError : public Error {
public:
    SchemaError(const std::string& field, const std::string& what)
        : Error("schema error at '" + field + "': " + what), field_(field) {}
    const std::string& field() const noexcept { return field_; }

private:
    std::string field_;
};

class ModelError : public Error {
public:
    using Error::Error;
};

class SimulationError : public Error {
public:
    SimulationError(const std::string& what, std::size_t path, std::size_t step)
        : Error(what + " (path " + std::to_string(path) + ", step " + std::to_string(step) + ")"),
          path_(path), step_(step) {}
    std::size_t path() const noexcept { return path_; }
    std::size_t step() const noexcept { return step_; }

private:
    std::size_t path_;
    std::size_t step_;
};

class SolverError : public Error {
public:
    using Error::Error;
};

}  // namespace jdconvex
