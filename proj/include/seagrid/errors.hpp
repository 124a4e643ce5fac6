#pragma once

#include <stdexcept>
#include <string>

namespace seagrid {

// Bad or inconsistent input data (files, shapes, labels).
class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Non-finite values, exploded training, degenerate vectors.
class NumericError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Malformed command line or configuration.
class UsageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace seagrid
