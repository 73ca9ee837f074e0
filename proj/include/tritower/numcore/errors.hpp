// Copyright 2026 The Tritower Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef TRITOWER_NUMCORE_ERRORS_HPP_
#define TRITOWER_NUMCORE_ERRORS_HPP_

#include <stdexcept>
#include <string>

namespace tritower {

// Root of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Operand shapes are incompatible.
class DimensionError : public Error {
 public:
  using Error::Error;
};

// A hyperparameter or argument is outside its valid range.
class ParameterError : public Error {
 public:
  using Error::Error;
};

// Input is structurally valid but mathematically degenerate (zero norm, ...).
class DegenerateInputError : public Error {
 public:
  using Error::Error;
};

// A caller violated a documented precondition on values.
class ContractError : public Error {
 public:
  using Error::Error;
};

class VocabularyError : public Error {
 public:
  using Error::Error;
};

class LengthError : public Error {
 public:
  using Error::Error;
};

class FormatError : public Error {
 public:
  using Error::Error;
};

// A loss component became NaN or infinite.
class TrainingDivergenceError : public Error {
 public:
  TrainingDivergenceError(std::string component, const std::string& what)
      : Error(what), component_(std::move(component)) {}
  const std::string& component() const { return component_; }

 private:
  std::string component_;
};

}  // namespace tritower

#endif  // TRITOWER_NUMCORE_ERRORS_HPP_
