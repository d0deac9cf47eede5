// Copyright 2026 The basinlab Authors
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

#include <cstdint>
#include <stdexcept>
#include <string>

namespace basinlab {

// Root of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Precondition violation: wrong shape, empty set, out-of-range argument.
class InvalidInput : public Error {
 public:
  using Error::Error;
};

// A numeric routine produced NaN/Inf where a finite value was required.
class NumericError : public Error {
 public:
  using Error::Error;
};

// Pearson-type statistic requested on data with zero variance.
class UndefinedCorrelation : public Error {
 public:
  using Error::Error;
};

class DivergedTraining : public Error {
 public:
  DivergedTraining(std::int64_t step, double loss)
      : Error("training diverged at step " + std::to_string(step) +
              " (loss=" + std::to_string(loss) + ")"),
        step_(step) {}
  std::int64_t step() const noexcept { return step_; }

 private:
  std::int64_t step_;
};

// Configuration or schema problem; `path` is a JSON-pointer-like location.
class ConfigError : public Error {
 public:
  ConfigError(const std::string& path, const std::string& what)
      : Error(path + ": " + what), path_(path) {}
  const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
};

inline void require(bool condition, const std::string& message) {
  if (!condition) throw InvalidInput(message);
}

}  // namespace basinlab
