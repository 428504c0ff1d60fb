// Copyright 2026 The vqp Authors
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

#pragma once

#include <stdexcept>
#include <string>

namespace vqp {

/// Base class for all errors thrown by this library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input file or JSON document. Message carries location context.
class ParseError : public Error {
 public:
  using Error::Error;
};

/// A domain invariant was violated. Message names the offending field.
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// Gate lookup failed. Message lists the supported set.
class UnsupportedGateError : public Error {
 public:
  using Error::Error;
};

class UnknownChannelError : public Error {
 public:
  using Error::Error;
};

/// Parameter-vector anchors do not match the target schedule.
class ProvenanceError : public Error {
 public:
  using Error::Error;
};

class BoundsError : public Error {
 public:
  using Error::Error;
};

/// Simulator failure (dimension mismatch, non-finite sample, ...).
class SimError : public Error {
 public:
  using Error::Error;
};

}  // namespace vqp
