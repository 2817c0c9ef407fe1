#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace nmg {

// Caller broke a precondition (mismatched grids, even kernel size, ...).
class ContractError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

class NumericError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class SingularMatrixError : public NumericError {
public:
    SingularMatrixError(const std::string& what, std::size_t pivot)
        : NumericError(what + " (pivot " + std::to_string(pivot) + ")"), pivot_(pivot) {}
    std::size_t pivot() const noexcept { return pivot_; }

private:
    std::size_t pivot_;
};

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class UnsupportedOperation : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class DivergenceError : public NumericError {
public:
    DivergenceError(const std::string& what, int iteration)
        : NumericError(what), iteration_(iteration) {}
    int iteration() const noexcept { return iteration_; }

private:
    int iteration_;
};

class TrainingError : public NumericError {
public:
    TrainingError(const std::string& what, int epoch)
        : NumericError(what + " at epoch " + std::to_string(epoch)), epoch_(epoch) {}
    int epoch() const noexcept { return epoch_; }

private:
    int epoch_;
};

} // namespace nmg
