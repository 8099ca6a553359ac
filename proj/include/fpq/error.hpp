#pragma once

#include <stdexcept>
#include <string>

namespace fpq {

// Malformed or unreadable input: bad container files, unknown format tokens,
// empty calibration sets, shape mismatches surfaced from user data.
class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Non-finite values where finite values are required (calibration data,
// activations during calibration).
class NumericError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace fpq
