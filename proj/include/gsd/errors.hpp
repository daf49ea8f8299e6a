// Copyright 2026 The gsdlab Authors
//
//    Licensed under the Apache License, Version 2.0 (the "License");
//    you may not use this file except in compliance with the License.
//    You may obtain a copy of the License at
//
//        http://www.apache.org/licenses/LICENSE-2.0
//
//    Unless required by applicable law or agreed to in writing, software
//    distributed under the License is distributed on an "AS IS" BASIS,
//    WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
//    See the License for the specific language governing permissions and
//    limitations under the License.

#pragma once

#include <stdexcept>
#include <string>

namespace gsd {

// Error taxonomy. Each class maps onto one CLI exit code (see exit_code()).

struct InputError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ResourceError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Random-walk loop construction ran out of retries.
struct GenerationError : ResourceError {
    using ResourceError::ResourceError;
};

struct NumericalError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct UnresolvedDegeneracy : NumericalError {
    using NumericalError::NumericalError;
};

struct IntegrityError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

inline int exit_code(const std::exception& e) {
    if (dynamic_cast<const InputError*>(&e)) return 2;
    if (dynamic_cast<const ResourceError*>(&e)) return 3;
    if (dynamic_cast<const NumericalError*>(&e)) return 4;
    if (dynamic_cast<const IntegrityError*>(&e)) return 5;
    return 1;
}

}  // namespace gsd
