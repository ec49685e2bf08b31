// dtgvae/errors.h

// Copyright 2026  The dtgvae authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#ifndef DTGVAE_ERRORS_H_
#define DTGVAE_ERRORS_H_

#include <stdexcept>
#include <string>

namespace dtgvae {

/// Shape or dimension disagreement between operands.
class DimensionError : public std::invalid_argument {
 public:
  explicit DimensionError(const std::string &what)
      : std::invalid_argument(what) {}
};

/// Numeric failure: non-finite values, non-PD factorization, degenerate
/// inputs that make a computation meaningless.
class NumericError : public std::runtime_error {
 public:
  explicit NumericError(const std::string &what) : std::runtime_error(what) {}
};

/// Malformed input data: CSV parse errors, label problems, id mismatches.
class DataError : public std::runtime_error {
 public:
  explicit DataError(const std::string &what) : std::runtime_error(what) {}
};

/// Checkpoint file problems, with the failure kind kept machine-readable so
/// callers can distinguish a truncated file from a wrong-format one.
class CheckpointError : public std::runtime_error {
 public:
  enum class Kind { kBadMagic, kTruncated, kVersionMismatch, kNameShapeMismatch, kIo };

  CheckpointError(Kind kind, const std::string &what)
      : std::runtime_error(what), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

}  // namespace dtgvae

#endif  // DTGVAE_ERRORS_H_
