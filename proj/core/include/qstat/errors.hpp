#ifndef QSTAT_ERRORS_HPP
#define QSTAT_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace qstat {

/// Base class for all toolkit errors.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Truncated basis too small for the requested state or operation.
class CutoffError : public Error {
public:
    explicit CutoffError(const std::string& msg) : Error(msg) {}
};

/// Probability or trace mass escaped the working Fock box beyond tolerance.
class LeakageError : public Error {
public:
    explicit LeakageError(const std::string& msg) : Error(msg) {}
};

/// A scaled model parameter violates a Fock-layer precondition.
class OverflowError : public Error {
public:
    explicit OverflowError(const std::string& msg) : Error(msg) {}
};

/// Estimator input with a vanishing denominator (no usable events).
class DegenerateRecordError : public Error {
public:
    explicit DegenerateRecordError(const std::string& msg) : Error(msg) {}
};

/// Division by a vanishing probability or rate.
class DivisionError : public Error {
public:
    explicit DivisionError(const std::string& msg) : Error(msg) {}
};

/// Malformed input file (CSV, params or config).
class SchemaError : public Error {
public:
    explicit SchemaError(const std::string& msg) : Error(msg) {}
};

} // namespace qstat

#endif
