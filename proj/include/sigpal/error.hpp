#pragma once

#include <stdexcept>
#include <string>

namespace sigpal {

/// Input that violates a documented precondition (bad CSV, bad flag, wrong label set).
class InvalidInput : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Data that cannot support the statistic: zero total variance, constant entries.
class DegenerateData : public InvalidInput {
public:
    using InvalidInput::InvalidInput;
};

/// A numerical routine failed at run time (infeasible restarts, replicate failure).
class EngineFailure : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace sigpal
