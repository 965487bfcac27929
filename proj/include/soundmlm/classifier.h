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

#ifndef SOUNDMLM_CLASSIFIER_H_
#define SOUNDMLM_CLASSIFIER_H_

#include <atomic>
#include <span>
#include <string>
#include <vector>

#include "soundmlm/encoding.h"
#include "soundmlm/model.h"
#include "soundmlm/tokenizer.h"

namespace soundmlm {

// Black-box view of a trained model: class probabilities for a sentence
// given as words. Implementations must be safe for concurrent calls and
// must accept an empty word list.
class TextClassifier {
 public:
  virtual ~TextClassifier() = default;
  virtual int num_classes() const = 0;
  virtual std::vector<double> predict(std::span<const std::string> words) const = 0;
};

// Index of the largest probability; ties go to the lower index.
int argmax(std::span<const double> probs);

// The encoder behind a classifier head, fed with the fine-tuning layout of
// the given flavor.
class EncoderClassifier : public TextClassifier {
 public:
  EncoderClassifier(const Parameters& params, const Vocab& vocab, Flavor flavor);

  int num_classes() const override { return params_.config.num_classes; }
  std::vector<double> predict(std::span<const std::string> words) const override;

  EncodedInput encode(std::span<const std::string> words) const;
  Flavor flavor() const { return flavor_; }

 private:
  const Parameters& params_;
  const Vocab& vocab_;
  Flavor flavor_;
};

// Forwards to another classifier and counts every call.
class CountingClassifier : public TextClassifier {
 public:
  explicit CountingClassifier(const TextClassifier& inner) : inner_(inner) {}

  int num_classes() const override { return inner_.num_classes(); }
  std::vector<double> predict(std::span<const std::string> words) const override;

  long calls() const { return calls_.load(); }
  void reset() { calls_.store(0); }

 private:
  const TextClassifier& inner_;
  mutable std::atomic<long> calls_{0};
};

}  // namespace soundmlm

#endif  // SOUNDMLM_CLASSIFIER_H_
