#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace sshchain {

/// Bad input: wrong dimensions, out-of-domain values, malformed files.
class ValidationError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// The input was well formed but the numerics could not produce an answer.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class DegenerateMidgapError : public NumericalError {
public:
    DegenerateMidgapError(const std::string& what, std::vector<std::size_t> indices)
        : NumericalError(what), indices_(std::move(indices)) {}

    [[nodiscard]] const std::vector<std::size_t>& indices() const noexcept { return indices_; }

private:
    std::vector<std::size_t> indices_;
};

class GapClosingError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

class FitUnsupportedError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

class ExtrapolationError : public ValidationError {
public:
    using ValidationError::ValidationError;
};

class SingularElementError : public ValidationError {
public:
    using ValidationError::ValidationError;
};

}  // namespace sshchain
