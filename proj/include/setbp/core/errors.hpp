#pragma once

#include <stdexcept>
#include <string>

namespace setbp {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Singular matrices, non-finite weights, degenerate particle sets.
class NumericalFailure : public Error {
public:
    using Error::Error;
};

class DimensionError : public Error {
public:
    using Error::Error;
};

/// Auxiliary-variable label violations (negative labels, non-zero PPP labels where 0 is required).
class LabelError : public Error {
public:
    using Error::Error;
};

/// Enumeration would exceed the configured state-space budget.
class CapacityError : public Error {
public:
    CapacityError(const std::string& what, double required_size)
        : Error(what), required_size_(required_size) {}

    double required_size() const noexcept { return required_size_; }

private:
    double required_size_;
};

/// A target row of the association problem carries no positive evidence.
class DegenerateEvidence : public Error {
public:
    DegenerateEvidence(const std::string& what, std::size_t target)
        : Error(what), target_(target) {}

    std::size_t target() const noexcept { return target_; }

private:
    std::size_t target_;
};

/// Caller supplied invalid input (negative evidence, empty set where one is required, ...).
class InputError : public Error {
public:
    using Error::Error;
};

}  // namespace setbp
