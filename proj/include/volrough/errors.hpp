#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace volrough {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Bad or insufficient input. The CLI maps these to exit code 2.
class DataError : public Error {
public:
    using Error::Error;
};

class SchemaError : public DataError {
public:
    using DataError::DataError;
};

class InsufficientDataError : public DataError {
public:
    using DataError::DataError;
};

class DuplicateDateError : public DataError {
public:
    using DataError::DataError;
};

class DomainError : public DataError {
public:
    DomainError(const std::string& what, std::size_t index = 0)
        : DataError(what), index_(index) {}
    std::size_t index() const noexcept { return index_; }

private:
    std::size_t index_;
};

class SizeError : public DataError {
public:
    using DataError::DataError;
};

class ConfigError : public DataError {
public:
    using DataError::DataError;
};

// Numerical failure on otherwise valid input. Exit code 3.
class NumericalError : public Error {
public:
    using Error::Error;
};

class DegenerateBlockError : public NumericalError {
public:
    explicit DegenerateBlockError(std::size_t block)
        : NumericalError("degenerate block " + std::to_string(block) +
                         ": all fine increments are zero"),
          block_(block) {}
    std::size_t block() const noexcept { return block_; }

private:
    std::size_t block_;
};

class NoRootError : public NumericalError {
public:
    NoRootError(double p_lo, double w_lo, double p_hi, double w_hi, double target)
        : NumericalError("no root of W(p) = T in [" + std::to_string(p_lo) + ", " +
                         std::to_string(p_hi) + "]: W(lo) = " + std::to_string(w_lo) +
                         ", W(hi) = " + std::to_string(w_hi) +
                         ", T = " + std::to_string(target)),
          w_lo_(w_lo), w_hi_(w_hi) {}
    double w_lo() const noexcept { return w_lo_; }
    double w_hi() const noexcept { return w_hi_; }

private:
    double w_lo_;
    double w_hi_;
};

class FactorizationError : public NumericalError {
public:
    explicit FactorizationError(std::size_t pivot)
        : NumericalError("covariance matrix not positive definite at pivot " +
                         std::to_string(pivot)),
          pivot_(pivot) {}
    std::size_t pivot() const noexcept { return pivot_; }

private:
    std::size_t pivot_;
};

class InversionError : public NumericalError {
public:
    InversionError(double price, double se)
        : NumericalError("cannot invert ATM price " + std::to_string(price) +
                         " (standard error " + std::to_string(se) + ")"),
          price_(price), se_(se) {}
    double price() const noexcept { return price_; }
    double se() const noexcept { return se_; }

private:
    double price_;
    double se_;
};

class DegenerateMomentError : public NumericalError {
public:
    DegenerateMomentError(double q, std::size_t lag)
        : NumericalError("zero moment at q = " + std::to_string(q) +
                         ", lag = " + std::to_string(lag)) {}
};

class EmptySummaryError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

}  // namespace volrough
