// Copyright 2026 The ipa Authors
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

#pragma once

#include <stdexcept>
#include <string>

namespace ipa {

// An argument value lies outside the operation's domain.
class ParameterError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Two containers that must agree in size do not.
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A value-type invariant failed at construction.
class InvariantError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// Protocol misuse of a stateful type (e.g. committing a round that was
// never begun, or restoring a snapshot of the wrong kind).
class StateError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// A numeric routine could not meet its accuracy contract, or a run
// produced non-finite intermediate values.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace ipa
