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

#include <string>
#include <vector>

#include "soundmlm/common.h"
#include "soundmlm/tokenizer.h"
#include "test_support.h"

namespace soundmlm {
namespace {

const VocabBuildOptions kCorpusOnly{.full_alphabet = false};

TEST(VocabBuild, MergesRepeatedPair) {
  const std::vector<std::string> corpus = {"aa aa aa"};
  const Vocab v = Vocab::build(corpus, 8, kCorpusOnly);
  EXPECT_TRUE(v.contains("aa"));
  EXPECT_LE(v.size(), 8);
  EXPECT_EQ(v.encode_word("aa"), std::vector<TokenId>{v.id_of("aa")});
}

TEST(VocabBuild, SingleLetterCorpus) {
  const std::vector<std::string> corpus = {"a"};
  const Vocab v = Vocab::build(corpus, 7, kCorpusOnly);
  EXPECT_EQ(v.size(), 6);
  EXPECT_EQ(v.token_of(5), "a");
  EXPECT_FALSE(v.contains("##a"));
}

TEST(VocabBuild, Errors) {
  const std::vector<std::string> corpus = {"acha movie"};
  try {
    Vocab::build(corpus, 3);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kTargetTooSmall);
  }
  try {
    Vocab::build(std::vector<std::string>{}, 100);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kCorpusEmpty);
  }
}

TEST(VocabBuild, FixedSpecialsAndFullAlphabet) {
  const Vocab v = testing::toy_vocab();
  EXPECT_EQ(v.token_of(Vocab::kPad), "[PAD]");
  EXPECT_EQ(v.token_of(Vocab::kUnk), "[UNK]");
  EXPECT_EQ(v.token_of(Vocab::kCls), "[CLS]");
  EXPECT_EQ(v.token_of(Vocab::kSep), "[SEP]");
  EXPECT_EQ(v.token_of(Vocab::kMask), "[MASK]");
  for (char c : std::string("abcdefghijklmnopqrstuvwxyz0123456789")) {
    EXPECT_TRUE(v.contains(std::string(1, c))) << c;
    EXPECT_TRUE(v.contains("##" + std::string(1, c))) << c;
  }
  for (TokenId id = 0; id < v.size(); ++id) EXPECT_EQ(v.id_of(v.token_of(id)), id);
}

TEST(VocabBuild, Deterministic) {
  const std::vector<std::string> corpus = {"acha achha acchha movie moovee", "nice nyc nice"};
  EXPECT_EQ(Vocab::build(corpus, 90).serialize(), Vocab::build(corpus, 90).serialize());
}

TEST(VocabIo, SaveLoadRoundTrip) {
  const Vocab v = testing::toy_vocab();
  const std::string path = testing::scratch_dir("vocab_io") + "/vocab.txt";
  v.save(path);
  EXPECT_EQ(testing::read_file(path).rfind("#wpvocab v1\n", 0), 0u);
  EXPECT_EQ(Vocab::load(path).tokens(), v.tokens());
}

Vocab movie_vocab() {
  return Vocab::from_tokens({"[PAD]", "[UNK]", "[CLS]", "[SEP]", "[MASK]", "mov", "##ie", "m",
                             "##o", "##v", "##i", "##e", "acha", "yaar", "##aar", "y"});
}

TEST(EncodeWord, GreedyLongestMatch) {
  const Vocab v = movie_vocab();
  EXPECT_EQ(v.encode_word("movie"), (std::vector<TokenId>{v.id_of("mov"), v.id_of("##ie")}));
  EXPECT_EQ(v.encode_word("MOVIE"), v.encode_word("movie"));
  EXPECT_EQ(v.encode_word("acha"), std::vector<TokenId>{v.id_of("acha")});
  EXPECT_EQ(v.encode_word("yaar"), std::vector<TokenId>{v.id_of("yaar")});
}

TEST(EncodeWord, WholeWordUnknownFallback) {
  const Vocab v = testing::toy_vocab();
  EXPECT_EQ(v.encode_word("\xE0\xA6\xAC\xE0\xA6\xBE"), std::vector<TokenId>{Vocab::kUnk});
  EXPECT_EQ(v.encode_word("ab\xE0\xA6\xAC"), std::vector<TokenId>{Vocab::kUnk});
}

TEST(EncodeText, SpansPartitionTokens) {
  const Vocab v = movie_vocab();
  EXPECT_TRUE(v.encode_text("").tokens.empty());
  EXPECT_TRUE(v.encode_text("").word_spans.empty());
  const TextEncoding one = v.encode_text("acha");
  EXPECT_EQ(one.tokens.size(), 1u);
  EXPECT_EQ(one.word_spans, (std::vector<TokenSpan>{{0, 1}}));
  const TextEncoding two = v.encode_text("acha movie");
  EXPECT_EQ(two.word_spans, (std::vector<TokenSpan>{{0, 1}, {1, 3}}));
}

TEST(EncodeText, RoundTripAndSpanProperties) {
  const Vocab v = testing::toy_vocab();
  Rng rng(3);
  const std::string letters = "abcdefghijklmnopqrstuvwxyz0123456789";
  for (int i = 0; i < 300; ++i) {
    std::string text;
    const auto words = 1 + rng.uniform_int(6);
    for (uint64_t w = 0; w < words; ++w) {
      if (w) text.push_back(' ');
      const auto len = 1 + rng.uniform_int(8);
      for (uint64_t k = 0; k < len; ++k) text.push_back(letters[rng.uniform_int(letters.size())]);
    }
    const TextEncoding enc = v.encode_text(text);
    EXPECT_EQ(v.decode(enc.tokens), text);
    ASSERT_EQ(enc.word_spans.size(), words);
    int expected_begin = 0;
    for (const auto& s : enc.word_spans) {
      EXPECT_EQ(s.begin, expected_begin);
      EXPECT_GT(s.end, s.begin);
      expected_begin = s.end;
    }
    EXPECT_EQ(expected_begin, static_cast<int>(enc.tokens.size()));
  }
}

TEST(Decode, SpecialsAndUnknownIds) {
  const Vocab v = movie_vocab();
  const std::vector<TokenId> ids = {Vocab::kCls, v.id_of("mov"), v.id_of("##ie"), Vocab::kSep};
  EXPECT_EQ(v.decode(ids), "[CLS] movie [SEP]");
  const std::vector<TokenId> bad = {999};
  try {
    v.decode(bad);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kUnknownId);
  }
}

}  // namespace
}  // namespace soundmlm
