// Copyright 2026 The Kerbwatch Authors
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

#ifndef KERBWATCH__ERROR_HPP_
#define KERBWATCH__ERROR_HPP_

#include <stdexcept>
#include <string>

namespace kerbwatch
{

/// Base of every error raised by the library.
class Error : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

/// A value object was constructed or used in violation of its invariants.
class InvariantViolation : public Error
{
public:
  using Error::Error;
};

/// An argument lies outside the mathematical domain of an operation.
class DomainError : public Error
{
public:
  using Error::Error;
};

}  // namespace kerbwatch

#endif  // KERBWATCH__ERROR_HPP_
