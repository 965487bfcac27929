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

#ifndef SOUNDMLM_TESTS_ATTACK_FIXTURES_H_
#define SOUNDMLM_TESTS_ATTACK_FIXTURES_H_

#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "soundmlm/attack.h"
#include "soundmlm/classifier.h"
#include "soundmlm/common.h"

namespace soundmlm::testing {

// Two-class logistic model over a fixed word lexicon: class 1 when the
// summed word weights are positive. Unknown words weigh nothing.
class KeywordClassifier : public TextClassifier {
 public:
  explicit KeywordClassifier(std::map<std::string, double> weights, double bias = 0.0)
      : weights_(std::move(weights)), bias_(bias) {}

  int num_classes() const override { return 2; }
  std::vector<double> predict(std::span<const std::string> words) const override {
    double z = bias_;
    for (const auto& w : words) {
      auto it = weights_.find(w);
      if (it != weights_.end()) z += it->second;
    }
    const double p1 = 1.0 / (1.0 + std::exp(-z));
    return {1.0 - p1, p1};
  }

 private:
  std::map<std::string, double> weights_;
  double bias_;
};

// Keyword lexicon shared by the attack fixtures.
inline KeywordClassifier sentiment_keyword_model() {
  return KeywordClassifier({{"nice", 3.0}, {"acha", 2.5}, {"mast", 2.0}, {"bura", -3.0},
                            {"bekaar", -2.5}, {"ganda", -2.0}, {"movie", 0.1}},
                           -0.05);
}

// Fixture dictionary that can respell every keyword out of the lexicon.
inline SubstitutionDictionary fixture_dictionary() {
  return SubstitutionDictionary::parse(
      "#phondict v1\n"
      "ce\tse\n"
      "ch\tchh\n"
      "a\taa\n"
      "st\tsst\n"
      "r\trr\n"
      "k\tq\n"
      "nd\tnnd\n");
}

// Random sentences over keywords and fillers, labeled by the model itself
// except for a few deliberately wrong labels.
inline std::vector<EvalExample> keyword_eval_set(int n, uint64_t seed) {
  static const std::vector<std::string> keywords = {"nice", "acha", "mast", "bura", "bekaar",
                                                    "ganda"};
  static const std::vector<std::string> filler = {"yeh", "movie", "bhai", "hai", "tha",
                                                  "kya", "film", "yaar", "ekdum"};
  const KeywordClassifier model = sentiment_keyword_model();
  Rng rng(seed);
  std::vector<EvalExample> out;
  for (int i = 0; i < n; ++i) {
    EvalExample e;
    const auto len = 3 + rng.uniform_int(6);
    for (uint64_t k = 0; k < len; ++k) e.words.push_back(filler[rng.uniform_int(filler.size())]);
    const auto kw = 1 + rng.uniform_int(2);
    for (uint64_t k = 0; k < kw; ++k) {
      e.words[rng.uniform_int(e.words.size())] = keywords[rng.uniform_int(keywords.size())];
    }
    e.label = argmax(model.predict(e.words));
    if (rng.uniform() < 0.1) e.label = 1 - e.label;
    out.push_back(std::move(e));
  }
  return out;
}

}  // namespace soundmlm::testing

#endif  // SOUNDMLM_TESTS_ATTACK_FIXTURES_H_
