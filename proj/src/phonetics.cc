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

#include "soundmlm/phonetics.h"

#include <cctype>

#include "soundmlm/common.h"

namespace soundmlm {
namespace {

constexpr char kVowel = '0';
constexpr char kTransparent = '-';

// Digit class of a lowercase Latin letter.
char letter_class(char c) {
  switch (c) {
    case 'b': case 'f': case 'p': case 'v':
      return '1';
    case 'c': case 'g': case 'j': case 'k':
    case 'q': case 's': case 'x': case 'z':
      return '2';
    case 'd': case 't':
      return '3';
    case 'l':
      return '4';
    case 'm': case 'n':
      return '5';
    case 'r':
      return '6';
    case 'h': case 'w':
      return kTransparent;
    default:
      return kVowel;
  }
}

bool is_latin_letter(unsigned char c) {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z');
}

}  // namespace

PhoneticCode::PhoneticCode(std::string value) : value_(std::move(value)) {
  if (!is_valid(value_)) {
    throw Error(ErrorCode::kInvalidArgument,
                "not a SOUNDEX code: '" + value_ + "'");
  }
}

bool PhoneticCode::is_valid(std::string_view value) {
  if (value.size() != 4) return false;
  if (value[0] < 'A' || value[0] > 'Z') return false;
  for (std::size_t i = 1; i < 4; ++i) {
    if (value[i] < '0' || value[i] > '9') return false;
  }
  return true;
}

std::string PhoneticCode::token_text() const {
  std::string out = value_;
  out[0] = static_cast<char>(std::tolower(static_cast<unsigned char>(out[0])));
  return out;
}

std::optional<PhoneticCode> soundex(std::string_view word) {
  std::string letters;
  letters.reserve(word.size());
  for (unsigned char c : word) {
    // Bytes >= 0x80 belong to non-Latin code points and are never letters
    // here, so multi-byte UTF-8 sequences drop out byte by byte.
    if (is_latin_letter(c)) {
      letters.push_back(static_cast<char>(std::tolower(c)));
    }
  }
  if (letters.empty()) return std::nullopt;

  std::string code(1, static_cast<char>(std::toupper(
                          static_cast<unsigned char>(letters[0]))));
  char last = letter_class(letters[0]);
  for (std::size_t i = 1; i < letters.size() && code.size() < 4; ++i) {
    const char cls = letter_class(letters[i]);
    if (cls == kTransparent) continue;
    if (cls == kVowel) {
      last = kVowel;
      continue;
    }
    if (cls != last) code.push_back(cls);
    last = cls;
  }
  code.resize(4, '0');
  return PhoneticCode(std::move(code));
}

}  // namespace soundmlm
