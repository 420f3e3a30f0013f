// Copyright 2026 The pfnas Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef PFNAS_COMMON_ERROR_H_
#define PFNAS_COMMON_ERROR_H_

#include <stdexcept>
#include <string>

namespace pfnas {

// Base of every error thrown by the library. Callers that only need to know
// "something failed" catch this; the subclasses carry the category the CLI
// maps onto exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

class ShapeError : public Error {
 public:
  using Error::Error;
};

class NonFiniteError : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  using Error::Error;
};

// A constraint (privacy budget, learning-rate bound, search space) admits no
// solution.
class InfeasibleError : public Error {
 public:
  using Error::Error;
};

class BudgetExhausted : public InfeasibleError {
 public:
  using InfeasibleError::InfeasibleError;
};

}  // namespace pfnas

#endif  // PFNAS_COMMON_ERROR_H_
