// Copyright 2026 The glsim Authors.
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

namespace glsim {

// Base of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Shape mismatch or out-of-range index in caller-provided data.
class InputError : public Error {
 public:
  using Error::Error;
};

// Invalid DP, round or model configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Secure-aggregation failure; the round is aborted.
class ProtocolError : public Error {
 public:
  using Error::Error;
};

// The attacker cannot build the requested plan.
class PlanningError : public Error {
 public:
  using Error::Error;
};

// Malformed command line or config file value.
class UsageError : public Error {
 public:
  using Error::Error;
};

// Dataset or artifact file problems. The message carries the path.
class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace glsim
