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

#include "soundmlm/tokenizer.h"

#include <algorithm>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "soundmlm/common.h"

namespace soundmlm {
namespace {

constexpr std::string_view kVocabHeader = "#wpvocab v1";
constexpr std::string_view kContinuation = "##";
constexpr std::size_t kMaxCharsPerWord = 100;

const char* const kSpecials[Vocab::kNumSpecials] = {"[PAD]", "[UNK]", "[CLS]",
                                                    "[SEP]", "[MASK]"};

bool is_space(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' ||
         c == '\v';
}

std::string strip_continuation(const std::string& token) {
  if (token.rfind(kContinuation, 0) == 0) return token.substr(2);
  return token;
}

}  // namespace

std::string to_lower_ascii(std::string_view text) {
  std::string out(text);
  for (char& c : out) {
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
  }
  return out;
}

std::vector<std::string> split_whitespace(std::string_view text) {
  std::vector<std::string> words;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && is_space(text[i])) ++i;
    std::size_t j = i;
    while (j < text.size() && !is_space(text[j])) ++j;
    if (j > i) words.emplace_back(text.substr(i, j - i));
    i = j;
  }
  return words;
}

std::vector<std::string> utf8_chars(std::string_view text) {
  std::vector<std::string> chars;
  std::size_t i = 0;
  while (i < text.size()) {
    const auto lead = static_cast<unsigned char>(text[i]);
    std::size_t len = 1;
    if (lead >= 0xF0) {
      len = 4;
    } else if (lead >= 0xE0) {
      len = 3;
    } else if (lead >= 0xC0) {
      len = 2;
    }
    bool valid = i + len <= text.size();
    for (std::size_t k = 1; valid && k < len; ++k) {
      valid = (static_cast<unsigned char>(text[i + k]) & 0xC0) == 0x80;
    }
    if (!valid) len = 1;
    chars.emplace_back(text.substr(i, len));
    i += len;
  }
  return chars;
}

Vocab::Vocab(std::vector<std::string> tokens) : tokens_(std::move(tokens)) {
  index_.reserve(tokens_.size());
  for (std::size_t i = 0; i < tokens_.size(); ++i) {
    auto [it, inserted] =
        index_.emplace(tokens_[i], static_cast<TokenId>(i));
    if (!inserted) {
      throw Error(ErrorCode::kInvalidArgument,
                  "duplicate vocabulary token '" + tokens_[i] + "'");
    }
  }
}

Vocab Vocab::from_tokens(std::vector<std::string> tokens) {
  if (tokens.size() < kNumSpecials) {
    throw Error(ErrorCode::kInvalidArgument, "vocabulary lacks special tokens");
  }
  for (int i = 0; i < kNumSpecials; ++i) {
    if (tokens[i] != kSpecials[i]) {
      throw Error(ErrorCode::kInvalidArgument,
                  std::string("expected ") + kSpecials[i] + " at id " +
                      std::to_string(i));
    }
  }
  return Vocab(std::move(tokens));
}

Vocab Vocab::build(std::span<const std::string> corpus, int target_size,
                   const VocabBuildOptions& options) {
  if (target_size < kNumSpecials) {
    throw Error(ErrorCode::kTargetTooSmall,
                "target size " + std::to_string(target_size) +
                    " is below the special-token count");
  }
  // Word frequencies; std::map keeps every later pass deterministic.
  std::map<std::string, long> word_counts;
  for (const auto& sentence : corpus) {
    for (const auto& word : split_whitespace(to_lower_ascii(sentence))) {
      ++word_counts[word];
    }
  }
  if (word_counts.empty()) {
    throw Error(ErrorCode::kCorpusEmpty, "corpus has no words");
  }

  std::set<std::string> initial;
  std::set<std::string> continuation;
  if (options.full_alphabet) {
    for (char c = 'a'; c <= 'z'; ++c) initial.insert(std::string(1, c));
    for (char c = '0'; c <= '9'; ++c) initial.insert(std::string(1, c));
    continuation = initial;
  }
  struct WordState {
    std::vector<std::string> symbols;
    long count;
  };
  std::vector<WordState> words;
  words.reserve(word_counts.size());
  for (const auto& [word, count] : word_counts) {
    const auto chars = utf8_chars(word);
    if (chars.size() > kMaxCharsPerWord) continue;
    WordState state{{}, count};
    for (std::size_t i = 0; i < chars.size(); ++i) {
      if (i == 0) {
        initial.insert(chars[i]);
        state.symbols.push_back(chars[i]);
      } else {
        continuation.insert(chars[i]);
        state.symbols.push_back(std::string(kContinuation) + chars[i]);
      }
    }
    words.push_back(std::move(state));
  }

  std::vector<std::string> tokens(std::begin(kSpecials), std::end(kSpecials));
  tokens.insert(tokens.end(), initial.begin(), initial.end());
  for (const auto& c : continuation) {
    tokens.push_back(std::string(kContinuation) + c);
  }
  if (static_cast<int>(tokens.size()) > target_size) {
    throw Error(ErrorCode::kTargetTooSmall,
                "target size " + std::to_string(target_size) +
                    " is below specials + base alphabet (" +
                    std::to_string(tokens.size()) + ")");
  }
  std::set<std::string> present(tokens.begin(), tokens.end());

  while (static_cast<int>(tokens.size()) < target_size) {
    std::map<std::pair<std::string, std::string>, long> pair_counts;
    for (const auto& w : words) {
      for (std::size_t i = 0; i + 1 < w.symbols.size(); ++i) {
        pair_counts[{w.symbols[i], w.symbols[i + 1]}] += w.count;
      }
    }
    // Highest count wins; map order gives the lexicographic tie-break.
    const std::pair<std::string, std::string>* best = nullptr;
    long best_count = 1;
    for (const auto& [pair, count] : pair_counts) {
      if (count > best_count) {
        best = &pair;
        best_count = count;
      }
    }
    if (best == nullptr) break;
    const std::string left = best->first;
    const std::string right = best->second;
    const std::string merged = left + strip_continuation(right);
    for (auto& w : words) {
      std::vector<std::string> next;
      next.reserve(w.symbols.size());
      for (std::size_t i = 0; i < w.symbols.size(); ++i) {
        if (i + 1 < w.symbols.size() && w.symbols[i] == left &&
            w.symbols[i + 1] == right) {
          next.push_back(merged);
          ++i;
        } else {
          next.push_back(w.symbols[i]);
        }
      }
      w.symbols = std::move(next);
    }
    if (present.insert(merged).second) tokens.push_back(merged);
  }
  return Vocab(std::move(tokens));
}

Vocab Vocab::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIoError, "cannot open vocabulary " + path);
  std::string line;
  if (!std::getline(in, line) || line != kVocabHeader) {
    throw Error(ErrorCode::kInvalidArgument,
                "missing '#wpvocab v1' header in " + path);
  }
  std::vector<std::string> tokens;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    tokens.push_back(line);
  }
  return from_tokens(std::move(tokens));
}

std::string Vocab::serialize() const {
  std::string out(kVocabHeader);
  out.push_back('\n');
  for (const auto& t : tokens_) {
    out += t;
    out.push_back('\n');
  }
  return out;
}

void Vocab::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIoError, "cannot write vocabulary " + path);
  out << serialize();
}

bool Vocab::contains(std::string_view token) const {
  return index_.find(std::string(token)) != index_.end();
}

TokenId Vocab::id_of(std::string_view token) const {
  auto it = index_.find(std::string(token));
  return it == index_.end() ? kUnk : it->second;
}

const std::string& Vocab::token_of(TokenId id) const {
  if (id < 0 || id >= size()) {
    throw Error(ErrorCode::kUnknownId, "token id " + std::to_string(id));
  }
  return tokens_[static_cast<std::size_t>(id)];
}

std::vector<TokenId> Vocab::encode_word(std::string_view word) const {
  const auto chars = utf8_chars(to_lower_ascii(word));
  if (chars.empty() || chars.size() > kMaxCharsPerWord) return {kUnk};
  std::vector<TokenId> pieces;
  std::size_t start = 0;
  while (start < chars.size()) {
    TokenId found = -1;
    std::size_t end = chars.size();
    for (; end > start; --end) {
      std::string candidate = start > 0 ? std::string(kContinuation) : "";
      for (std::size_t k = start; k < end; ++k) candidate += chars[k];
      auto it = index_.find(candidate);
      if (it != index_.end() && !is_special(it->second)) {
        found = it->second;
        break;
      }
    }
    if (found < 0) return {kUnk};
    pieces.push_back(found);
    start = end;
  }
  return pieces;
}

TextEncoding Vocab::encode_text(std::string_view text) const {
  TextEncoding out;
  for (const auto& word : split_whitespace(text)) {
    const auto pieces = encode_word(word);
    const int begin = static_cast<int>(out.tokens.size());
    out.tokens.insert(out.tokens.end(), pieces.begin(), pieces.end());
    out.word_spans.push_back({begin, static_cast<int>(out.tokens.size())});
  }
  return out;
}

std::string Vocab::decode(std::span<const TokenId> ids) const {
  std::string out;
  for (const TokenId id : ids) {
    const std::string& token = token_of(id);
    if (!is_special(id) && token.rfind(kContinuation, 0) == 0 &&
        !out.empty()) {
      out += token.substr(2);
    } else {
      if (!out.empty()) out.push_back(' ');
      out += token;
    }
  }
  return out;
}

}  // namespace soundmlm
