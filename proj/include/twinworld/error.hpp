// Copyright 2026 The Twinworld Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
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

namespace twinworld {

enum class ErrorCode {
  address_collision,
  invalid_weight_increment,
  type_mismatch,
  invalid_parameter,
  unobservable_procedure,
  implicit_noise,
  already_intervened,
  duplicate_label,
  stale_trace,
  no_surviving_samples,
  impossible_evidence,
  degenerate_graph,
  unknown_node,
  schema_violation,
  invalid_query,
  program_error,
};

// All engine failures surface as this type; `code()` lets callers branch
// without parsing messages.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

// A program failure raised while producing one sample.
class SampleError : public Error {
 public:
  SampleError(ErrorCode code, std::uint64_t sample_index,
              const std::string& message)
      : Error(code, "sample " + std::to_string(sample_index) + ": " + message),
        sample_index_(sample_index) {}

  std::uint64_t sample_index() const noexcept { return sample_index_; }

 private:
  std::uint64_t sample_index_;
};

}  // namespace twinworld
