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

#include <gtest/gtest.h>

#include <cctype>
#include <string>
#include <utility>
#include <vector>

#include "soundmlm/common.h"
#include "soundmlm/phonetics.h"

namespace soundmlm {
namespace {

std::string code_of(const std::string& w) {
  auto c = soundex(w);
  return c ? c->str() : "-";
}

// Textbook formulation written independently: keep the first letter, code
// the rest, drop vowels after collapsing, with h/w not breaking a run.
std::string reference_soundex(const std::string& raw) {
  std::string w;
  for (char c : raw) {
    if (std::isalpha(static_cast<unsigned char>(c))) w.push_back(static_cast<char>(std::tolower(c)));
  }
  if (w.empty()) return "-";
  auto digit = [](char c) -> char {
    const std::string groups[] = {"bfpv", "cgjkqsxz", "dt", "l", "mn", "r"};
    for (int g = 0; g < 6; ++g) {
      if (groups[g].find(c) != std::string::npos) return static_cast<char>('1' + g);
    }
    if (c == 'h' || c == 'w') return 'H';
    return '0';  // vowel-like separator
  };
  std::string out(1, static_cast<char>(std::toupper(w[0])));
  char prev = digit(w[0]);
  for (std::size_t i = 1; i < w.size() && out.size() < 4; ++i) {
    const char d = digit(w[i]);
    if (d == 'H') continue;
    if (d != '0' && d != prev) out.push_back(d);
    prev = d;
  }
  while (out.size() < 4) out.push_back('0');
  return out;
}

TEST(Soundex, CitedCodes) {
  const std::vector<std::pair<std::string, std::string>> cases = {
      {"acha", "A200"},     {"achha", "A200"},    {"acchha", "A200"}, {"yar", "Y600"},
      {"year", "Y600"},     {"movie", "M100"},    {"moovee", "M100"}, {"nice", "N200"},
      {"nyc", "N200"},      {"musalman", "M245"}, {"mushalan", "M245"}, {"nahi", "N000"},
      {"nai", "N000"},      {"mai", "M000"},      {"mee", "M000"},    {"W8", "W000"},
      {"challage", "C420"}, {"a", "A000"}};
  for (const auto& [word, code] : cases) EXPECT_EQ(code_of(word), code) << word;
}

TEST(Soundex, StandardRulesForChallenge) { EXPECT_EQ(code_of("challenge"), "C452"); }

TEST(Soundex, NotEncodable) {
  EXPECT_FALSE(soundex("").has_value());
  EXPECT_FALSE(soundex("1234").has_value());
  EXPECT_FALSE(soundex("\xE0\xA6\xAC\xE0\xA6\xBE\xE0\xA6\x82").has_value());  // Bengali
}

TEST(Soundex, HwRuleAndFirstLetterCollapse) {
  EXPECT_EQ(code_of("ashcraft"), "A261");
  EXPECT_EQ(code_of("pfister"), "P236");
  EXPECT_EQ(code_of("tymczak"), "T522");
  EXPECT_EQ(code_of("honeyman"), "H555");
}

TEST(Soundex, MatchesReferenceOnRandomWords) {
  Rng rng(7);
  const std::string alphabet = "abcdefghijklmnopqrstuvwxyzHW019-";
  for (int i = 0; i < 5000; ++i) {
    std::string w;
    const auto len = 1 + rng.uniform_int(10);
    for (uint64_t k = 0; k < len; ++k) w.push_back(alphabet[rng.uniform_int(alphabet.size())]);
    ASSERT_EQ(code_of(w), reference_soundex(w)) << w;
  }
}

TEST(Soundex, GrammarCaseAndDigitInvariants) {
  Rng rng(11);
  for (int i = 0; i < 2000; ++i) {
    std::string w;
    const auto len = 1 + rng.uniform_int(9);
    for (uint64_t k = 0; k < len; ++k) {
      const auto r = rng.uniform_int(36);
      w.push_back(r < 26 ? static_cast<char>('a' + r) : static_cast<char>('0' + (r - 26)));
    }
    std::string upper = w, no_digits;
    for (char& c : upper) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    for (char c : w) {
      if (!std::isdigit(static_cast<unsigned char>(c))) no_digits.push_back(c);
    }
    const auto code = soundex(w);
    ASSERT_EQ(code.has_value(), !no_digits.empty());
    if (!code) continue;
    EXPECT_TRUE(PhoneticCode::is_valid(code->str()));
    EXPECT_EQ(code, soundex(upper));
    EXPECT_EQ(code, soundex(no_digits));
    EXPECT_EQ(code, soundex(w));
  }
}

TEST(PhoneticCode, Validation) {
  EXPECT_NO_THROW(PhoneticCode("A200"));
  EXPECT_THROW(PhoneticCode("a200"), Error);
  EXPECT_THROW(PhoneticCode("A20"), Error);
  EXPECT_THROW(PhoneticCode("AB00"), Error);
  EXPECT_EQ(PhoneticCode("M100").token_text(), "m100");
}

}  // namespace
}  // namespace soundmlm
