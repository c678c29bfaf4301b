#pragma once

#include <stdexcept>
#include <string>

namespace usf {

/// Invalid configuration: bad dimensions, unknown keys, impossible goal sets.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// An API was called out of order (step after done, backward without a tape).
class UsageError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

/// A loss, gradient or parameter became NaN or infinite.
class NumericError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// The requested operation is not available for this object.
class Unsupported : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

} // namespace usf
