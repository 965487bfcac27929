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

#ifndef SOUNDMLM_ENCODING_H_
#define SOUNDMLM_ENCODING_H_

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "soundmlm/tokenizer.h"

namespace soundmlm {

// Input construction scheme. kVC feeds word tokens only; kSMLM appends the
// SOUNDEX code tokens after a [SEP]; kSAMLM interleaves each word's code
// tokens directly after the word's own tokens.
enum class Flavor { kVC, kSMLM, kSAMLM };

std::string_view flavor_name(Flavor flavor);
// Accepts "vc", "smlm", "samlm" in any case; throws kConfigError otherwise.
Flavor parse_flavor(std::string_view name);

inline constexpr int kDefaultMaxLen = 128;
inline constexpr TokenId kIgnoreLabel = -1;

struct WordAlignment {
  int word_index = 0;
  TokenSpan tokens;
  std::optional<TokenSpan> code;  // absent for words SOUNDEX cannot encode
};

struct EncodedInput {
  Flavor flavor = Flavor::kVC;
  bool has_cls = false;
  std::vector<TokenId> ids;
  std::vector<int> segments;
  std::vector<int> attention_mask;
  std::vector<WordAlignment> alignment;

  int length() const { return static_cast<int>(ids.size()); }
  // Number of positions with attention_mask == 1.
  int unpadded_length() const;
};

struct SequenceOptions {
  int max_len = kDefaultMaxLen;
  // Pad with [PAD] up to max_len (attention 0 on the padding).
  bool pad = false;
};

// Pre-training sequences (no [CLS]).
EncodedInput build_smlm_pretrain(const Vocab& vocab, std::string_view sentence,
                                 const SequenceOptions& options = {});
EncodedInput build_samlm_pretrain(const Vocab& vocab, std::string_view sentence,
                                  const SequenceOptions& options = {});

// Fine-tuning sequence: [CLS] + flavor layout, padded to max_len by default.
EncodedInput build_finetune(const Vocab& vocab, std::string_view sentence,
                            Flavor flavor,
                            const SequenceOptions& options = {.max_len = kDefaultMaxLen,
                                                              .pad = true});

// General builder over pre-split words. With `with_cls` an empty word list
// is allowed and yields the bare scaffolding ([CLS], plus [SEP] for SMLM);
// without it an empty list throws kEmptyAfterTruncation.
EncodedInput build_sequence(const Vocab& vocab,
                            std::span<const std::string> words, Flavor flavor,
                            bool with_cls, const SequenceOptions& options);

// Drops trailing whole words (with their code spans) until the unpadded
// length fits in max_len. Padding is re-applied when the input was padded.
EncodedInput truncate(const EncodedInput& input, int max_len);

struct MaskingOptions {
  double rate = 0.15;
  double mask_token_fraction = 0.8;
  double random_token_fraction = 0.1;
};

// Rows share one length; labels hold the original id at selected positions
// and kIgnoreLabel elsewhere.
struct MaskedBatch {
  std::vector<std::vector<TokenId>> input_ids;
  std::vector<std::vector<TokenId>> labels;
  std::vector<std::vector<int>> segments;
  std::vector<std::vector<int>> attention_mask;

  int batch_size() const { return static_cast<int>(input_ids.size()); }
  int row_length() const {
    return input_ids.empty() ? 0 : static_cast<int>(input_ids[0].size());
  }
  int num_masked() const;
};

// Positions that may be selected for prediction: attended, non-special.
std::vector<int> eligible_positions(const EncodedInput& input);

MaskedBatch apply_mlm_mask(const EncodedInput& input, int vocab_size,
                           const MaskingOptions& options, uint64_t seed);

// Masks each input with a per-row seed derived from `seed` and pads rows to
// a common length.
MaskedBatch mask_batch(std::span<const EncodedInput> inputs, int vocab_size,
                       const MaskingOptions& options, uint64_t seed);

}  // namespace soundmlm

#endif  // SOUNDMLM_ENCODING_H_
