#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace blockstat {

/// Base class for all library errors.  Carries the process exit code the CLI
/// maps the error to (1 = configuration / input, 2 = degenerate kernel,
/// 3 = domain violation inside a statistic evaluation).
class Error : public std::runtime_error {
public:
    explicit Error(std::string message, int exit_code = 1)
        : std::runtime_error(std::move(message)), exit_code_(exit_code) {}

    [[nodiscard]] int exit_code() const noexcept { return exit_code_; }

private:
    int exit_code_;
};

/// Input series has no observations.
class EmptySeriesError : public Error {
public:
    explicit EmptySeriesError(std::string message = "series is empty")
        : Error(std::move(message), 1) {}
};

/// Requested block length exceeds the series length.
class BlockTooLongError : public Error {
public:
    BlockTooLongError(std::size_t block_length, std::size_t n)
        : Error("block length " + std::to_string(block_length) +
                    " exceeds series length " + std::to_string(n),
                1) {}
};

/// A moment functional was evaluated outside its domain (non-finite result).
/// Remembers which block triggered the failure so the CLI can report it.
class DomainViolationError : public Error {
public:
    DomainViolationError(std::string message, std::size_t block_index)
        : Error(std::move(message) + " (block " + std::to_string(block_index) + ")", 3),
          block_index_(block_index) {}

    explicit DomainViolationError(std::string message)
        : Error(std::move(message), 3), block_index_(SIZE_MAX) {}

    [[nodiscard]] std::size_t block_index() const noexcept { return block_index_; }

private:
    std::size_t block_index_;
};

/// Reference moment vector does not admit the functional (for example a
/// non-positive central second moment).
class DegenerateMomentsError : public Error {
public:
    explicit DegenerateMomentsError(std::string message)
        : Error(std::move(message), 1) {}
};

/// Fewer than two blocks: no pair statistic can be formed.
class TooFewBlocksError : public Error {
public:
    explicit TooFewBlocksError(std::size_t block_count)
        : Error("need at least 2 blocks, got " + std::to_string(block_count), 1) {}
};

/// The projection variance of the kernel vanishes; the pair statistic carries
/// no first-order signal and standardization is refused.
class DegenerateKernelError : public Error {
public:
    explicit DegenerateKernelError(std::string message)
        : Error(std::move(message), 2) {}
};

/// Coefficient description of a process is malformed.
class InvalidCoefficientsError : public Error {
public:
    explicit InvalidCoefficientsError(std::string message)
        : Error(std::move(message), 1) {}
};

/// A transform handed to the orthogonal-expansion routine has no finite
/// second moment under the reference distribution.
class NonSquareIntegrableError : public Error {
public:
    explicit NonSquareIntegrableError(std::string message)
        : Error(std::move(message), 1) {}
};

/// A centering method was requested for inputs it does not support.
class MethodUnavailableError : public Error {
public:
    explicit MethodUnavailableError(std::string message)
        : Error(std::move(message), 1) {}
};

/// Simulated centering value is too noisy for the requested standardization.
class CenteringTooNoisyError : public Error {
public:
    explicit CenteringTooNoisyError(std::string message)
        : Error(std::move(message), 1) {}
};

/// Malformed configuration, CSV, or JSON input.
class IoError : public Error {
public:
    explicit IoError(std::string message) : Error(std::move(message), 1) {}
};

}  // namespace blockstat
