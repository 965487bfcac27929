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

#include "soundmlm/encoding.h"

#include <algorithm>
#include <cmath>

#include "soundmlm/common.h"
#include "soundmlm/phonetics.h"

namespace soundmlm {
namespace {

struct WordPieces {
  std::vector<TokenId> tokens;
  std::optional<std::vector<TokenId>> code;
};

std::vector<WordPieces> encode_words(const Vocab& vocab,
                                     std::span<const std::string> words) {
  std::vector<WordPieces> out;
  out.reserve(words.size());
  for (const auto& word : words) {
    WordPieces pieces{vocab.encode_word(word), std::nullopt};
    if (auto code = soundex(word)) {
      pieces.code = vocab.encode_word(code->token_text());
    }
    out.push_back(std::move(pieces));
  }
  return out;
}

// Lays out the first `count` words; never pads.
EncodedInput layout(const std::vector<WordPieces>& words, std::size_t count,
                    Flavor flavor, bool with_cls) {
  EncodedInput out;
  out.flavor = flavor;
  out.has_cls = with_cls;
  auto push = [&out](TokenId id, int segment) {
    out.ids.push_back(id);
    out.segments.push_back(segment);
    out.attention_mask.push_back(1);
  };
  auto push_span = [&](const std::vector<TokenId>& ids, int segment) {
    const int begin = out.length();
    for (TokenId id : ids) push(id, segment);
    return TokenSpan{begin, out.length()};
  };
  if (with_cls) push(Vocab::kCls, 0);
  out.alignment.resize(count);
  for (std::size_t w = 0; w < count; ++w) {
    out.alignment[w].word_index = static_cast<int>(w);
    out.alignment[w].tokens = push_span(words[w].tokens, 0);
    if (flavor == Flavor::kSAMLM && words[w].code) {
      out.alignment[w].code = push_span(*words[w].code, 0);
    }
  }
  if (flavor == Flavor::kSMLM) {
    push(Vocab::kSep, 0);
    for (std::size_t w = 0; w < count; ++w) {
      if (words[w].code) out.alignment[w].code = push_span(*words[w].code, 1);
    }
  }
  return out;
}

void pad_to(EncodedInput& input, int max_len) {
  while (input.length() < max_len) {
    input.ids.push_back(Vocab::kPad);
    input.segments.push_back(0);
    input.attention_mask.push_back(0);
  }
}

EncodedInput build_fitting(const Vocab& vocab,
                           std::span<const std::string> words, Flavor flavor,
                           bool with_cls, const SequenceOptions& options) {
  if (words.empty() && !with_cls) {
    throw Error(ErrorCode::kEmptyAfterTruncation, "sentence has no words");
  }
  const auto pieces = encode_words(vocab, words);
  std::size_t count = pieces.size();
  EncodedInput out = layout(pieces, count, flavor, with_cls);
  while (out.length() > options.max_len && count > 0) {
    --count;
    out = layout(pieces, count, flavor, with_cls);
  }
  if ((count == 0 && !words.empty()) || out.length() > options.max_len) {
    throw Error(ErrorCode::kEmptyAfterTruncation,
                "no word fits in max_len " + std::to_string(options.max_len));
  }
  if (options.pad) pad_to(out, options.max_len);
  return out;
}

}  // namespace

std::string_view flavor_name(Flavor flavor) {
  switch (flavor) {
    case Flavor::kVC: return "vc";
    case Flavor::kSMLM: return "smlm";
    case Flavor::kSAMLM: return "samlm";
  }
  return "vc";
}

Flavor parse_flavor(std::string_view name) {
  const std::string lower = to_lower_ascii(name);
  if (lower == "vc") return Flavor::kVC;
  if (lower == "smlm") return Flavor::kSMLM;
  if (lower == "samlm") return Flavor::kSAMLM;
  throw Error(ErrorCode::kConfigError,
              "unknown flavor '" + std::string(name) + "'");
}

int EncodedInput::unpadded_length() const {
  return static_cast<int>(
      std::count(attention_mask.begin(), attention_mask.end(), 1));
}

int MaskedBatch::num_masked() const {
  int n = 0;
  for (const auto& row : labels) {
    for (TokenId l : row) n += l != kIgnoreLabel;
  }
  return n;
}

EncodedInput build_sequence(const Vocab& vocab,
                            std::span<const std::string> words, Flavor flavor,
                            bool with_cls, const SequenceOptions& options) {
  return build_fitting(vocab, words, flavor, with_cls, options);
}

EncodedInput build_smlm_pretrain(const Vocab& vocab, std::string_view sentence,
                                 const SequenceOptions& options) {
  const auto words = split_whitespace(sentence);
  return build_fitting(vocab, words, Flavor::kSMLM, false, options);
}

EncodedInput build_samlm_pretrain(const Vocab& vocab, std::string_view sentence,
                                  const SequenceOptions& options) {
  const auto words = split_whitespace(sentence);
  return build_fitting(vocab, words, Flavor::kSAMLM, false, options);
}

EncodedInput build_finetune(const Vocab& vocab, std::string_view sentence,
                            Flavor flavor, const SequenceOptions& options) {
  const auto words = split_whitespace(sentence);
  if (words.empty()) {
    throw Error(ErrorCode::kEmptyAfterTruncation, "sentence has no words");
  }
  return build_fitting(vocab, words, flavor, true, options);
}

EncodedInput truncate(const EncodedInput& input, int max_len) {
  const bool padded = input.unpadded_length() < input.length();
  // Recover each word's pieces from the existing layout.
  std::vector<WordPieces> pieces;
  pieces.reserve(input.alignment.size());
  auto slice = [&input](TokenSpan span) {
    return std::vector<TokenId>(input.ids.begin() + span.begin,
                                input.ids.begin() + span.end);
  };
  for (const auto& a : input.alignment) {
    WordPieces wp{slice(a.tokens), std::nullopt};
    if (a.code) wp.code = slice(*a.code);
    pieces.push_back(std::move(wp));
  }
  std::size_t count = pieces.size();
  EncodedInput out = layout(pieces, count, input.flavor, input.has_cls);
  while (out.length() > max_len && count > 0) {
    --count;
    out = layout(pieces, count, input.flavor, input.has_cls);
  }
  if (count == 0 || out.length() > max_len) {
    throw Error(ErrorCode::kEmptyAfterTruncation,
                "no word fits in max_len " + std::to_string(max_len));
  }
  if (padded) pad_to(out, max_len);
  return out;
}

std::vector<int> eligible_positions(const EncodedInput& input) {
  std::vector<int> out;
  for (int i = 0; i < input.length(); ++i) {
    if (input.attention_mask[i] == 1 && !Vocab::is_special(input.ids[i])) {
      out.push_back(i);
    }
  }
  return out;
}

MaskedBatch apply_mlm_mask(const EncodedInput& input, int vocab_size,
                           const MaskingOptions& options, uint64_t seed) {
  if (!(options.rate >= 0.0 && options.rate <= 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "mask rate outside [0, 1]");
  }
  MaskedBatch batch;
  batch.input_ids.push_back(input.ids);
  batch.labels.emplace_back(input.ids.size(), kIgnoreLabel);
  batch.segments.push_back(input.segments);
  batch.attention_mask.push_back(input.attention_mask);

  std::vector<int> eligible = eligible_positions(input);
  const auto target = static_cast<std::size_t>(
      std::llround(options.rate * static_cast<double>(eligible.size())));
  Rng rng(seed);
  // Partial Fisher-Yates: the first `target` slots are a uniform sample.
  for (std::size_t i = 0; i < target; ++i) {
    const std::size_t j = i + rng.uniform_int(eligible.size() - i);
    std::swap(eligible[i], eligible[j]);
  }
  std::vector<int> selected(eligible.begin(), eligible.begin() + target);
  std::sort(selected.begin(), selected.end());

  auto& ids = batch.input_ids[0];
  auto& labels = batch.labels[0];
  const int random_pool = vocab_size - Vocab::kNumSpecials;
  for (int pos : selected) {
    labels[pos] = ids[pos];
    const double u = rng.uniform();
    if (u < options.mask_token_fraction) {
      ids[pos] = Vocab::kMask;
    } else if (u < options.mask_token_fraction + options.random_token_fraction) {
      if (random_pool > 0) {
        ids[pos] = Vocab::kNumSpecials +
                   static_cast<TokenId>(rng.uniform_int(random_pool));
      }
    }
  }
  return batch;
}

MaskedBatch mask_batch(std::span<const EncodedInput> inputs, int vocab_size,
                       const MaskingOptions& options, uint64_t seed) {
  MaskedBatch batch;
  int width = 0;
  for (const auto& in : inputs) width = std::max(width, in.length());
  for (std::size_t r = 0; r < inputs.size(); ++r) {
    MaskedBatch row =
        apply_mlm_mask(inputs[r], vocab_size, options, derive_seed(seed, r));
    row.input_ids[0].resize(width, Vocab::kPad);
    row.labels[0].resize(width, kIgnoreLabel);
    row.segments[0].resize(width, 0);
    row.attention_mask[0].resize(width, 0);
    batch.input_ids.push_back(std::move(row.input_ids[0]));
    batch.labels.push_back(std::move(row.labels[0]));
    batch.segments.push_back(std::move(row.segments[0]));
    batch.attention_mask.push_back(std::move(row.attention_mask[0]));
  }
  return batch;
}

}  // namespace soundmlm
