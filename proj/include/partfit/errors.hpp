/*
 * partfit - joint part localization, pose and shape estimation.
 *
 * File: errors.hpp
 *
 * Copyright 2026 The partfit Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <stdexcept>
#include <string>

namespace partfit {

/// Base class of every error thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Arguments violate a documented precondition (sizes, ranges).
class ContractError : public Error {
public:
    using Error::Error;
};

/// A motion matrix too small to carry a rotation.
class DegenerateMotionError : public Error {
public:
    using Error::Error;
};

/// Procrustes alignment with a rank-deficient cross-covariance.
class AlignmentError : public Error {
public:
    using Error::Error;
};

/// A localization covariance that is not symmetric positive definite.
class CovarianceError : public Error {
public:
    using Error::Error;
};

/// Bad configuration values or malformed input files.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Numerical failure inside an iterative routine.
class NumericalError : public Error {
public:
    using Error::Error;
};

namespace detail {
inline void require(bool condition, const std::string& message)
{
    if (!condition) {
        throw ContractError(message);
    }
}
} // namespace detail

} // namespace partfit
