#pragma once

#include <stdexcept>
#include <string>

namespace chameleon {

// Base for all library failures. The CLI maps ConfigError and ParseError to
// exit code 1 (caller mistake), everything else to exit code 2.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Invalid configuration: bad flag combinations, malformed config documents,
// schedules that do not partition the trial range, equal choice seeds, ...
struct ConfigError : Error {
    using Error::Error;
};

// Malformed textual input: record files, angle or seed strings.
struct ParseError : Error {
    using Error::Error;
};

// Stored artifacts disagree with their own metadata (hash mismatch,
// non-monotone trial indices, record-count mismatch).
struct IntegrityError : Error {
    using Error::Error;
};

// A trial index fell outside every range of a schedule policy.
struct ScheduleError : Error {
    using Error::Error;
};

// Two record sets do not carry identical trial indices.
struct PairingError : Error {
    using Error::Error;
};

// A selection mixes more than one setting per station.
struct GroupingError : Error {
    using Error::Error;
};

// An estimator was asked to work on an empty selection.
struct InsufficientDataError : Error {
    using Error::Error;
};

// A quadrature integrand produced a non-finite value or failed to converge.
struct EvaluationError : Error {
    using Error::Error;
};

// An argument outside the mathematical domain of an operation.
struct DomainError : Error {
    using Error::Error;
};

// Non-finite input where a finite statistic is required.
struct ArgumentError : Error {
    using Error::Error;
};

// Wire-level failures: framing, handshake, version mismatch, timeouts.
struct ProtocolError : Error {
    using Error::Error;
};

}  // namespace chameleon
