#pragma once

#include <stdexcept>
#include <string>

namespace geosense {

// Bad arguments or a request that contradicts the data it operates on.
class UsageError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Physically invalid parameters, e.g. pulses that would overlap.
class PhysicsError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace geosense
