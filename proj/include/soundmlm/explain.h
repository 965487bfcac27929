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

#ifndef SOUNDMLM_EXPLAIN_H_
#define SOUNDMLM_EXPLAIN_H_

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "soundmlm/classifier.h"
#include "soundmlm/encoding.h"

namespace soundmlm {

// Which words are visible (true) in a masked variant of a sentence.
class Coalition {
 public:
  Coalition() = default;
  explicit Coalition(std::vector<bool> visible) : visible_(std::move(visible)) {}

  static Coalition full(std::size_t n) { return Coalition(std::vector<bool>(n, true)); }
  static Coalition none(std::size_t n) { return Coalition(std::vector<bool>(n, false)); }
  // Bit i of `mask` is word i. Requires n <= 64.
  static Coalition from_mask(std::size_t n, uint64_t mask);

  std::size_t size() const { return visible_.size(); }
  bool visible(std::size_t i) const { return visible_[i]; }
  void set(std::size_t i, bool value) { visible_[i] = value; }
  std::size_t count() const;
  // The visible words, in sentence order.
  std::vector<std::string> select(std::span<const std::string> words) const;
  std::string key() const;

 private:
  std::vector<bool> visible_;
};

struct AttributionReport {
  std::vector<std::string> words;
  std::vector<double> shap_values;
  std::vector<double> standard_errors;  // empty for exact attributions
  double base_value = 0.0;  // f(empty coalition)
  double full_value = 0.0;  // f(all words)
  int target_class = 0;
  bool exact = true;
  long evaluations = 0;  // distinct coalitions evaluated

  nlohmann::json to_json() const;
};

// Model input for one coalition: hidden words (and their SOUNDEX codes) are
// deleted, the visible ones laid out for `flavor`. The empty coalition gives
// the bare [CLS] scaffolding.
EncodedInput build_masked_input(const Vocab& vocab, std::span<const std::string> words,
                                const Coalition& coalition, Flavor flavor,
                                const SequenceOptions& options = {.max_len = kDefaultMaxLen,
                                                                  .pad = true});

// Value of a coalition (e.g. the target-class probability).
using CoalitionValue = std::function<double(const Coalition&)>;

// Target-class probability of `model` on the visible words.
CoalitionValue classifier_value(const TextClassifier& model,
                                std::span<const std::string> words, int target_class);

struct ExactShapOptions {
  int max_words = 12;
  int threads = 1;
};

// Enumerates all 2^n coalitions, each evaluated once. Throws kTooManyWords.
AttributionReport shap_exact(const CoalitionValue& value,
                             std::span<const std::string> words, int target_class,
                             const ExactShapOptions& options = {});
AttributionReport shap_exact(const TextClassifier& model,
                             std::span<const std::string> words, int target_class,
                             const ExactShapOptions& options = {});

// Permutation-sampling estimate with per-word standard errors. Coalitions
// seen more than once are served from a cache.
AttributionReport shap_sampled(const CoalitionValue& value,
                               std::span<const std::string> words, int target_class,
                               int num_permutations, uint64_t seed);
AttributionReport shap_sampled(const TextClassifier& model,
                               std::span<const std::string> words, int target_class,
                               int num_permutations, uint64_t seed);

enum class RenderFormat { kAnsi, kHtml };

// Positive attributions red, negative blue, intensity |phi| / max |phi|.
std::string render_report(const AttributionReport& report, RenderFormat format);

}  // namespace soundmlm

#endif  // SOUNDMLM_EXPLAIN_H_
