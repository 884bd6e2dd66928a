// Copyright 2026 The Augment Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef AUGMENT_ERROR_H_
#define AUGMENT_ERROR_H_

#include <stdexcept>
#include <string>

namespace augment {

// Base for all errors raised by the pipeline modules.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Input that does not follow a documented file format.
class FormatError : public Error {
 public:
  using Error::Error;
};

}  // namespace augment

#endif  // AUGMENT_ERROR_H_
