/*
 * Copyright 2026 The SoundMLM Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef SOUNDMLM_COMMON_H_
#define SOUNDMLM_COMMON_H_

#include <cstddef>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace soundmlm {

enum class ErrorCode {
  kCorpusEmpty,
  kTargetTooSmall,
  kUnknownId,
  kEmptyAfterTruncation,
  kShapeMismatch,
  kNoMaskedPositions,
  kDivergenceDetected,
  kCorruptCheckpoint,
  kVersionMismatch,
  kEmptySentence,
  kEmptyDataset,
  kEmptyInput,
  kInsufficientSamples,
  kZeroVariance,
  kTooManyWords,
  kMalformedLine,
  kRatioInvalid,
  kConfigError,
  kIoError,
  kInvalidArgument,
};

std::string_view error_code_name(ErrorCode code);

// Single exception type for the library; callers branch on code().
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message);

  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

// xoshiro256** with hand-written distributions; identical streams on every
// platform.
class Rng {
 public:
  explicit Rng(uint64_t seed);

  uint64_t next_u64();
  // Uniform integer in [0, bound). bound must be > 0.
  uint64_t uniform_int(uint64_t bound);
  // Uniform double in [0, 1).
  double uniform();
  double normal();

 private:
  uint64_t state_[4];
  bool has_spare_ = false;
  double spare_ = 0.0;
};

// Mixes several integers into one seed (splitmix64 chain).
uint64_t derive_seed(uint64_t base, uint64_t a, uint64_t b = 0);

uint64_t fnv1a64(std::string_view data, uint64_t seed = 1469598103934665603ULL);
std::string hex64(uint64_t value);

// Runs body(i) for i in [0, n) over up to `threads` workers. Callers keep
// results index-addressed so the outcome never depends on scheduling.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body,
                  int threads = 0);

int default_thread_count();

}  // namespace soundmlm

#endif  // SOUNDMLM_COMMON_H_
