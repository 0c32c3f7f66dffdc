#pragma once

#include <stdexcept>
#include <string>

namespace causal {

// Malformed input, violated precondition or bad configuration.
class ValidationError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// A numerical procedure failed on otherwise valid input.
class RuntimeError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace causal
