#pragma once

#include <stdexcept>
#include <string>

namespace covest {

/// Base class for all errors raised by this library.
class error : public std::runtime_error {
public:
    explicit error(const std::string& msg) : std::runtime_error(msg) {}
};

class invalid_input_error : public error {
public:
    using error::error;
};

class invalid_parameter_error : public error {
public:
    using error::error;
};

class degenerate_input_error : public error {
public:
    using error::error;
};

class dimension_mismatch_error : public error {
public:
    using error::error;
};

class insufficient_data_error : public error {
public:
    using error::error;
};

class not_psd_error : public error {
public:
    using error::error;
};

class unsupported_dimension_error : public error {
public:
    using error::error;
};

class io_error : public error {
public:
    using error::error;
};

/// Wraps a failure inside a multi-stage pipeline with the stage it came
/// from.
class stage_error : public error {
public:
    stage_error(int stage, const std::string& label, const std::string& what)
        : error("stage " + std::to_string(stage) + " (" + label + "): " + what),
          stage_(stage) {}
    int stage() const noexcept { return stage_; }

private:
    int stage_;
};

/// Raised when an iterative solver hits its sweep cap; carries the residual
/// that was left when iteration stopped.
class convergence_error : public error {
public:
    convergence_error(const std::string& msg, double residual)
        : error(msg), residual_(residual) {}
    double residual() const noexcept { return residual_; }

private:
    double residual_;
};

} // namespace covest
