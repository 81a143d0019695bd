#pragma once

#include <stdexcept>
#include <string>

namespace symmcomp {

// Base of all library errors; carries a short category tag for CLI reporting.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class DomainError : public Error {
public:
    using Error::Error;
};

class PartitionError : public Error {
public:
    using Error::Error;
};

class PreconditionError : public Error {
public:
    PreconditionError(const std::string& what, long index = -1) : Error(what), index_(index) {}
    long index() const { return index_; }

private:
    long index_;
};

class InsufficientDataError : public Error {
public:
    using Error::Error;
};

class ThresholdError : public Error {
public:
    ThresholdError(const std::string& what, double value, double threshold)
        : Error(what), value_(value), threshold_(threshold) {}
    double value() const { return value_; }
    double threshold() const { return threshold_; }

private:
    double value_;
    double threshold_;
};

class UnsupportedCase : public Error {
public:
    using Error::Error;
};

class ConvergenceError : public Error {
public:
    ConvergenceError(const std::string& what, int iterations, double last_update)
        : Error(what), iterations_(iterations), last_update_(last_update) {}
    int iterations() const { return iterations_; }
    double last_update() const { return last_update_; }

private:
    int iterations_;
    double last_update_;
};

class ConfigError : public Error {
public:
    ConfigError(const std::string& what, int line = 0) : Error(what), line_(line) {}
    int line() const { return line_; }

private:
    int line_;
};

class IoError : public Error {
public:
    using Error::Error;
};

}  // namespace symmcomp
