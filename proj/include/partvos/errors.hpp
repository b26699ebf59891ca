#pragma once

#include <stdexcept>
#include <string>

namespace partvos {

// Base for every recoverable failure raised by the library. Precondition
// violations on plain arguments use std::invalid_argument instead.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class IoError : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

// Too few parts survived filtering for the object to be tracked.
class PartGenerationError : public Error {
public:
    PartGenerationError(const std::string& what, std::size_t survivors)
        : Error(what), survivors_(survivors) {}
    std::size_t survivors() const noexcept { return survivors_; }

private:
    std::size_t survivors_;
};

class TrackingLostError : public Error {
public:
    using Error::Error;
};

class TrainingDivergedError : public Error {
public:
    TrainingDivergedError(const std::string& what, double last_finite_loss)
        : Error(what), last_finite_loss_(last_finite_loss) {}
    double last_finite_loss() const noexcept { return last_finite_loss_; }

private:
    double last_finite_loss_;
};

}  // namespace partvos
