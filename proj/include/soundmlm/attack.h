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

#ifndef SOUNDMLM_ATTACK_H_
#define SOUNDMLM_ATTACK_H_

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "json.hpp"
#include "soundmlm/classifier.h"

namespace soundmlm {

// Character groups (1-3 lowercase Latin letters) mapped to phonetically
// similar replacement groups, in file order.
class SubstitutionDictionary {
 public:
  SubstitutionDictionary() = default;

  // Parses the "#phondict v1" format: `group<TAB>alt1,alt2,...` per line,
  // '#' starts a comment. Throws kInvalidArgument on malformed entries.
  static SubstitutionDictionary parse(std::string_view text);
  static SubstitutionDictionary load(const std::string& path);
  // The bundled Romanized-Hindi dictionary.
  static SubstitutionDictionary default_dictionary();
  static std::string_view default_dictionary_text();

  // Appends alternatives for `group` (duplicates are dropped).
  void add(const std::string& group, const std::vector<std::string>& alternatives);

  const std::vector<std::string>* find(std::string_view group) const;
  std::size_t max_key_length() const { return max_key_length_; }
  bool empty() const { return entries_.empty(); }
  const std::map<std::string, std::vector<std::string>>& entries() const {
    return entries_;
  }

 private:
  std::map<std::string, std::vector<std::string>> entries_;
  std::size_t max_key_length_ = 0;
};

// Single-occurrence substitutions of `word`, ordered by position, then key
// length (longest first), then dictionary order. No duplicates and never
// the word itself.
std::vector<std::string> perturb_word(std::string_view word,
                                      const SubstitutionDictionary& dict);

struct AttackConfig {
  int max_words_perturbed = 0;  // 0 = no limit
  int candidate_budget = 16;    // candidates scored per word
  // Picks which candidates survive when a word has more than the budget.
  uint64_t seed = 0;
  int threads = 1;
};

struct ImportanceResult {
  // (word index, importance), sorted by descending importance then index.
  std::vector<std::pair<int, double>> ranking;
  std::vector<double> full_probs;
  long queries = 0;
};

// Leave-one-out importance: P(class | S) - P(class | S without word i).
// Uses exactly 1 + n classifier calls. Throws kEmptySentence.
ImportanceResult token_importance(const TextClassifier& model,
                                  std::span<const std::string> words,
                                  int true_class);

struct AttackResult {
  std::vector<std::string> original_words;
  std::vector<std::string> adversarial_words;
  bool success = false;
  std::vector<int> perturbed_indices;  // ascending
  long queries = 0;
  double perturbation_ratio = 0.0;
  int original_label = -1;
  int final_label = -1;
  std::vector<double> final_probs;

  std::string original() const;
  std::string adversarial() const;
};

// Greedy un-targeted attack: words in importance order, each replaced by the
// candidate that most lowers the originally predicted class, until the label
// flips or the words (or budget) run out. Throws kEmptySentence.
AttackResult attack(const TextClassifier& model, std::span<const std::string> words,
                    const SubstitutionDictionary& dict, const AttackConfig& config);

struct EvalExample {
  std::vector<std::string> words;
  int label = 0;
};

struct ExampleOutcome {
  int label = 0;
  int clean_prediction = 0;
  int adversarial_prediction = 0;
  bool attacked = false;
  std::optional<AttackResult> attack;
};

struct RobustnessReport {
  double ba = 0.0;
  double aa = 0.0;
  double bf1 = 0.0;
  double af1 = 0.0;
  double mean_pr = 0.0;  // over successful attacks; 0 when none succeed
  double pda = 0.0;      // percent; 0 when ba == 0
  int num_examples = 0;
  int num_attacked = 0;
  int num_successful = 0;
  std::vector<ExampleOutcome> per_example;

  nlohmann::json to_json() const;
};

// Clean accuracy/F1, then the attack on every correctly classified example;
// misclassified examples are not attacked and stay wrong in both columns.
// Throws kEmptyDataset.
RobustnessReport evaluate_robustness(const TextClassifier& model,
                                     std::span<const EvalExample> test_set,
                                     const SubstitutionDictionary& dict,
                                     const AttackConfig& config);

}  // namespace soundmlm

#endif  // SOUNDMLM_ATTACK_H_
