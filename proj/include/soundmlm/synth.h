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

#ifndef SOUNDMLM_SYNTH_H_
#define SOUNDMLM_SYNTH_H_

#include <cstdint>
#include <string>
#include <vector>

#include "soundmlm/dataset.h"

namespace soundmlm {

// A canonical keyword and spelling variants that share its SOUNDEX code.
struct KeywordFamily {
  std::string canonical;
  std::vector<std::string> variants;
};

struct SyntheticLexicon {
  std::vector<std::string> labels;                       // class names
  std::vector<std::vector<KeywordFamily>> keywords;      // per label
  std::vector<std::string> filler;                       // label-neutral words
};

// The built-in Romanized-Hindi-like lexicon.
const SyntheticLexicon& synthetic_lexicon();

struct SynthOptions {
  uint64_t seed = 1;
  int size = 2000;           // labeled examples
  int pretrain_size = -1;    // unlabeled sentences; -1 = same as size
  double variant_rate = 0.3; // fraction of keyword occurrences respelled
  int min_words = 5;
  int max_words = 9;
};

struct InjectedVariant {
  std::string original;
  std::string variant;
};

struct SyntheticCorpus {
  std::vector<LabeledExample> labeled;
  std::vector<std::string> pretrain;
  std::vector<InjectedVariant> injected;
  // The same sentences before any respelling (same order as `labeled`).
  std::vector<std::string> canonical_texts;
};

// Throws kInvalidArgument for size < 10 or a rate outside [0, 1].
SyntheticCorpus generate_synthetic_corpus(const SynthOptions& options);

// Writes train.jsonl / dev.jsonl / test.jsonl (0.8/0.1/0.1 split) and
// pretrain.txt into `out_dir`, creating it if needed.
SyntheticCorpus make_synthetic_corpus(const SynthOptions& options,
                                      const std::string& out_dir);

}  // namespace soundmlm

#endif  // SOUNDMLM_SYNTH_H_
