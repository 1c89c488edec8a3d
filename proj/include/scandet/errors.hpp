/*
    Licensed under the Apache License, Version 2.0 (the "License");
    you may not use this file except in compliance with the License.
    You may obtain a copy of the License at

        https://www.apache.org/licenses/LICENSE-2.0

    Unless required by applicable law or agreed to in writing, software
    distributed under the License is distributed on an "AS IS" BASIS,
    WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
    See the License for the specific language governing permissions and
    limitations under the License.
*/
#pragma once

#include <stdexcept>
#include <string>

namespace scandet {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// A value fell outside its valid domain (e.g. a flow that precedes the trace start).
class RangeError : public Error {
  public:
    using Error::Error;
};

/// Missing or unreadable input, or an output that could not be written.
class IoError : public Error {
  public:
    using Error::Error;
};

/// Malformed flow file, packet stream or textual value.
class ParseError : public Error {
  public:
    using Error::Error;
};

/// Ground-truth XML could not be parsed or contained rejected entries in strict mode.
class GroundTruthError : public Error {
  public:
    using Error::Error;
};

/// Invalid configuration value. `field()` names the offending key.
class ConfigError : public Error {
  public:
    ConfigError(std::string field, const std::string& message)
        : Error(field + ": " + message), field_(std::move(field)) {}

    const std::string& field() const noexcept { return field_; }

  private:
    std::string field_;
};

/// A worker or an emission callback failed during an engine run.
class EngineError : public Error {
  public:
    using Error::Error;
};

}// namespace scandet
