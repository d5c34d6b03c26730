#pragma once

#include <stdexcept>
#include <string>

namespace sgic {

// Precondition violation on an operation's arguments.
struct InvalidInputError : std::invalid_argument {
    explicit InvalidInputError(const std::string& msg) : std::invalid_argument(msg) {}
};

// Answer-score scaling divides by the corpus mean and by (1 - mean);
// a mean of exactly 0 or 1 leaves the scale undefined.
struct DegenerateMeanError : std::domain_error {
    explicit DegenerateMeanError(const std::string& msg) : std::domain_error(msg) {}
};

// Metric is undefined for the given inputs (e.g. AUROC with one class).
struct UndefinedMetricError : std::domain_error {
    explicit UndefinedMetricError(const std::string& msg) : std::domain_error(msg) {}
};

struct GatewayError : std::runtime_error {
    bool retryable;
    explicit GatewayError(const std::string& msg, bool retryable_ = false)
        : std::runtime_error(msg), retryable(retryable_) {}
};

struct EndpointUnreachableError : GatewayError {
    explicit EndpointUnreachableError(const std::string& msg) : GatewayError(msg, true) {}
};

// The backend answered without per-token logprobs. Fatal: every score in the
// pipeline derives from them, so there is nothing useful to retry.
struct LogprobsUnavailableError : GatewayError {
    explicit LogprobsUnavailableError(const std::string& msg) : GatewayError(msg, false) {}
};

struct MockScriptExhaustedError : GatewayError {
    explicit MockScriptExhaustedError(const std::string& msg) : GatewayError(msg, false) {}
};

}  // namespace sgic
