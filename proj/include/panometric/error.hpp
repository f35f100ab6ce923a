// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace panometric {

// File access / parse problems. CLI maps these to exit code 3.
class FileError : public std::runtime_error {
 public:
  explicit FileError(const std::string& what) : std::runtime_error(what) {}
};

// Numeric or format validation failures. CLI maps these to exit code 4.
class ValidationError : public std::runtime_error {
 public:
  explicit ValidationError(const std::string& what) : std::runtime_error(what) {}
};

// Training loop hit a non-finite loss; carries the step it happened at.
class TrainingDiverged : public std::runtime_error {
 public:
  TrainingDiverged(const std::string& what, long step)
      : std::runtime_error(what + " at step " + std::to_string(step)), step_(step) {}
  long step() const { return step_; }

 private:
  long step_;
};

}  // namespace panometric
