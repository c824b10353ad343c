// Copyright (C) 2026 FusionEdit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace fusionedit {

// Input/usage errors map to CLI exit code 2, everything else to 1.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
    virtual bool is_usage_error() const { return false; }
};

class UsageError : public Error {
public:
    using Error::Error;
    bool is_usage_error() const override { return true; }
};

class ShapeError : public UsageError {
public:
    using UsageError::UsageError;
};

class FormatError : public UsageError {
public:
    using UsageError::UsageError;
};

class DataError : public UsageError {
public:
    using UsageError::UsageError;
};

class ConfigError : public UsageError {
public:
    using UsageError::UsageError;
};

class IoError : public UsageError {
public:
    using UsageError::UsageError;
};

class OptimizationError : public Error {
public:
    OptimizationError(const std::string& what, int iteration)
        : Error(what + " (iteration " + std::to_string(iteration) + ")"), m_iteration(iteration) {}

    int iteration() const { return m_iteration; }

private:
    int m_iteration;
};

}  // namespace fusionedit
