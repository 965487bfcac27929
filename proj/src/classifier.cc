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

#include "soundmlm/classifier.h"

namespace soundmlm {

int argmax(std::span<const double> probs) {
  if (probs.empty()) throw Error(ErrorCode::kEmptyInput, "argmax of empty vector");
  int best = 0;
  for (std::size_t i = 1; i < probs.size(); ++i) {
    if (probs[i] > probs[static_cast<std::size_t>(best)]) best = static_cast<int>(i);
  }
  return best;
}

EncoderClassifier::EncoderClassifier(const Parameters& params, const Vocab& vocab,
                                     Flavor flavor)
    : params_(params), vocab_(vocab), flavor_(flavor) {
  if (params.config.num_classes <= 0) {
    throw Error(ErrorCode::kShapeMismatch, "model has no classification head");
  }
  if (params.config.vocab_size != vocab.size()) {
    throw Error(ErrorCode::kShapeMismatch, "model and vocabulary sizes differ");
  }
}

EncodedInput EncoderClassifier::encode(std::span<const std::string> words) const {
  // Unpadded: padding is masked out of attention and only costs time.
  return build_sequence(vocab_, words, flavor_, /*with_cls=*/true,
                        {.max_len = params_.config.max_len, .pad = false});
}

std::vector<double> EncoderClassifier::predict(
    std::span<const std::string> words) const {
  return classify(params_, encode(words));
}

std::vector<double> CountingClassifier::predict(
    std::span<const std::string> words) const {
  calls_.fetch_add(1);
  return inner_.predict(words);
}

}  // namespace soundmlm
