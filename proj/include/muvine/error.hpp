#pragma once

#include <stdexcept>
#include <string>

namespace muvine {

/// Requested CPU/memory is not available on the target substrate node.
class AllocationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A release would push availability above capacity. Always a caller bug.
class AccountingError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

/// A path reservation could not be made on every link of the path.
class PathReservationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed text input (topology, VN stream, model or config files).
class FormatError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A random generator could not produce a valid instance within its retry budget.
class GenerationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A learner could not be trained on the data it was given.
class TrainingError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Feature vector length does not match the model.
class DimensionError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Invalid generator or experiment configuration.
class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// A pipeline stage failed; carries the stage name for structured reporting.
class StageError : public std::runtime_error {
public:
    StageError(std::string stage, const std::string& cause)
        : std::runtime_error(stage + ": " + cause), stage_(std::move(stage)), cause_(cause) {}

    [[nodiscard]] const std::string& stage() const noexcept { return stage_; }
    [[nodiscard]] const std::string& cause() const noexcept { return cause_; }

private:
    std::string stage_;
    std::string cause_;
};

}  // namespace muvine
