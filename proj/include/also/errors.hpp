#pragma once

#include <stdexcept>
#include <string>

namespace also {

// Base class for all library errors.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Bad configuration, unparsable file, inconsistent options.
class ConfigError : public Error {
public:
    using Error::Error;
};

// Duplicate strategy id in a pool (whole file rejected).
class DuplicateIdError : public ConfigError {
public:
    using ConfigError::ConfigError;
};

// Vector lengths or network dimensions do not line up.
class DimensionMismatchError : public Error {
public:
    using Error::Error;
};

// NaN/Inf where a finite value is required.
class NumericError : public Error {
public:
    using Error::Error;
};

// Value outside its declared range (reward, dimension score, epsilon...).
class RangeError : public Error {
public:
    using Error::Error;
};

// step() called after turns_per_episode turns.
class EpisodeExhaustedError : public Error {
public:
    using Error::Error;
};

// Remote provider/environment transport or protocol failure.
class TransportError : public Error {
public:
    using Error::Error;
};

// Checkpoint version mismatch or corrupt file.
class CheckpointError : public Error {
public:
    using Error::Error;
};

} // namespace also
