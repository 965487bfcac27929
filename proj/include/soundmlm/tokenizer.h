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

#ifndef SOUNDMLM_TOKENIZER_H_
#define SOUNDMLM_TOKENIZER_H_

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

namespace soundmlm {

using TokenId = int32_t;

// Half-open range [begin, end) of token positions.
struct TokenSpan {
  int begin = 0;
  int end = 0;

  int size() const { return end - begin; }
  friend bool operator==(const TokenSpan&, const TokenSpan&) = default;
};

struct TextEncoding {
  std::vector<TokenId> tokens;
  std::vector<TokenSpan> word_spans;  // one per whitespace-separated word
};

struct VocabBuildOptions {
  // Seed the vocabulary with every Latin letter and digit in both the
  // word-initial and "##" forms, so only non-Latin characters can fall back
  // to [UNK]. When false only characters present in the corpus are seeded.
  bool full_alphabet = true;
};

// WordPiece vocabulary. Immutable once built.
class Vocab {
 public:
  static constexpr TokenId kPad = 0;
  static constexpr TokenId kUnk = 1;
  static constexpr TokenId kCls = 2;
  static constexpr TokenId kSep = 3;
  static constexpr TokenId kMask = 4;
  static constexpr int kNumSpecials = 5;

  // Builds a vocabulary of at most `target_size` entries by frequency pair
  // merging. Throws kCorpusEmpty or kTargetTooSmall.
  static Vocab build(std::span<const std::string> corpus, int target_size,
                     const VocabBuildOptions& options = {});

  // Reads / writes the "#wpvocab v1" text format (line index == id).
  static Vocab load(const std::string& path);
  static Vocab from_tokens(std::vector<std::string> tokens);
  void save(const std::string& path) const;
  std::string serialize() const;

  int size() const { return static_cast<int>(tokens_.size()); }
  bool contains(std::string_view token) const;
  // Returns kUnk for unknown tokens.
  TokenId id_of(std::string_view token) const;
  // Throws kUnknownId.
  const std::string& token_of(TokenId id) const;
  const std::vector<std::string>& tokens() const { return tokens_; }

  static bool is_special(TokenId id) { return id >= 0 && id < kNumSpecials; }

  // Greedy longest-match encoding of one whitespace-free word (lowercased
  // first). Any unmatched position turns the whole word into [UNK].
  std::vector<TokenId> encode_word(std::string_view word) const;
  TextEncoding encode_text(std::string_view text) const;
  // Joins "##" pieces onto the previous token; throws kUnknownId.
  std::string decode(std::span<const TokenId> ids) const;

 private:
  explicit Vocab(std::vector<std::string> tokens);

  std::vector<std::string> tokens_;
  std::unordered_map<std::string, TokenId> index_;
};

// ASCII lowercasing; bytes >= 0x80 pass through untouched.
std::string to_lower_ascii(std::string_view text);
std::vector<std::string> split_whitespace(std::string_view text);
// Splits a UTF-8 string into code points (invalid bytes become singletons).
std::vector<std::string> utf8_chars(std::string_view text);

}  // namespace soundmlm

#endif  // SOUNDMLM_TOKENIZER_H_
