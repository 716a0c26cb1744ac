#pragma once

#include <stdexcept>
#include <string>

namespace adaer {

// Bad shapes, out-of-range labels, malformed arguments.
class InvalidArgument : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Malformed on-disk data (IDX files, cache files, buffer dumps).
class FormatError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class EmptyBufferError : public std::runtime_error {
public:
    EmptyBufferError() : std::runtime_error("memory buffer is empty") {}
    using std::runtime_error::runtime_error;
};

// A metric was requested before the result matrix holds the rows it needs.
class IncompleteRunError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Metric has no meaning for the given shape (e.g. transfer metrics with T = 1).
class UndefinedMetricError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Benchmark data could not be loaded or split as configured.
class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Loss or parameters became NaN/Inf during training.
class NumericError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace adaer
