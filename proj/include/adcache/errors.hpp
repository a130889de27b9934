#pragma once

#include <stdexcept>
#include <string>

namespace adcache {

/// Base class for all library errors.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A value outside the supported universe (e.g. an opaque handle) was
/// passed to canonicalize(); the call must not be tracked.
class UnsupportedValueError : public Error {
public:
    using Error::Error;
};

/// A canonical repr string failed to parse back into a value.
class ValueParseError : public Error {
public:
    using Error::Error;
};

/// A trace-log line is not a valid record.
class MalformedRecordError : public Error {
public:
    using Error::Error;
};

/// More than one tracking hint was supplied for the same method.
class DuplicateHintError : public Error {
public:
    using Error::Error;
};

/// A statistic was requested for a method with no observed calls.
class NoDataError : public Error {
public:
    using Error::Error;
};

/// A result is at least as large as the whole cache and can never be admitted.
class OversizedItemError : public Error {
public:
    using Error::Error;
};

/// Engine configuration file is missing or invalid.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Simulation scenario file is missing or invalid.
class ScenarioError : public Error {
public:
    using Error::Error;
};

} // namespace adcache
