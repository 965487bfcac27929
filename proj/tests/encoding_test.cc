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

#include "encoding_properties.h"
#include "soundmlm/common.h"
#include "soundmlm/encoding.h"
#include "test_support.h"

namespace soundmlm {
namespace {

std::vector<TokenId> concat(std::initializer_list<std::vector<TokenId>> parts) {
  std::vector<TokenId> out;
  for (const auto& p : parts) out.insert(out.end(), p.begin(), p.end());
  return out;
}

class EncodingTest : public ::testing::Test {
 protected:
  Vocab vocab = testing::toy_vocab();
  std::vector<TokenId> enc(const std::string& w) const { return vocab.encode_word(w); }
};

const std::string kBengali = "\xE0\xA6\xAC\xE0\xA6\xBE";

TEST_F(EncodingTest, SmlmPretrainLayout) {
  const EncodedInput in = build_smlm_pretrain(vocab, "acha movie");
  EXPECT_EQ(in.ids, concat({enc("acha"), enc("movie"), {Vocab::kSep}, enc("a200"), enc("m100")}));
  const int sep = static_cast<int>(enc("acha").size() + enc("movie").size());
  for (int i = 0; i < in.length(); ++i) EXPECT_EQ(in.segments[i], i <= sep ? 0 : 1);
  ASSERT_EQ(in.alignment.size(), 2u);
  EXPECT_EQ(in.alignment[1].code->begin, in.alignment[0].code->end);
  EXPECT_FALSE(in.has_cls);
}

TEST_F(EncodingTest, SmlmNonEncodableWordHasNoCode) {
  const EncodedInput in = build_smlm_pretrain(vocab, kBengali);
  EXPECT_EQ(in.ids, (std::vector<TokenId>{Vocab::kUnk, Vocab::kSep}));
  EXPECT_FALSE(in.alignment[0].code.has_value());
}

TEST_F(EncodingTest, EmptySentence) {
  for (auto build : {&build_smlm_pretrain, &build_samlm_pretrain}) {
    try {
      build(vocab, "", {});
      FAIL();
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::kEmptyAfterTruncation);
    }
  }
  EXPECT_THROW(build_finetune(vocab, "  ", Flavor::kVC), Error);
}

TEST_F(EncodingTest, SamlmPretrainInterleaves) {
  const EncodedInput in = build_samlm_pretrain(vocab, "acha movie");
  EXPECT_EQ(in.ids, concat({enc("acha"), enc("a200"), enc("movie"), enc("m100")}));
  const EncodedInput one = build_samlm_pretrain(vocab, "nice");
  EXPECT_EQ(one.length(), static_cast<int>(enc("nice").size() + enc("n200").size()));
  const EncodedInput none = build_samlm_pretrain(vocab, kBengali + " " + kBengali);
  EXPECT_EQ(none.ids, vocab.encode_text(kBengali + " " + kBengali).tokens);
}

TEST_F(EncodingTest, FinetunePrependsClsAndPads) {
  const SequenceOptions opts{.max_len = 32, .pad = true};
  const EncodedInput vc = build_finetune(vocab, "acha movie", Flavor::kVC, opts);
  const auto body = concat({enc("acha"), enc("movie")});
  EXPECT_EQ(vc.length(), 32);
  EXPECT_EQ(std::vector<TokenId>(vc.ids.begin(), vc.ids.begin() + vc.unpadded_length()),
            concat({{Vocab::kCls}, body}));
  for (int i = vc.unpadded_length(); i < 32; ++i) {
    EXPECT_EQ(vc.ids[i], Vocab::kPad);
    EXPECT_EQ(vc.attention_mask[i], 0);
  }
  const EncodedInput smlm = build_finetune(vocab, "acha movie", Flavor::kSMLM, opts);
  EXPECT_EQ(std::vector<TokenId>(smlm.ids.begin(), smlm.ids.begin() + smlm.unpadded_length()),
            concat({{Vocab::kCls}, build_smlm_pretrain(vocab, "acha movie").ids}));
  const EncodedInput samlm = build_finetune(vocab, "acha movie", Flavor::kSAMLM, opts);
  EXPECT_EQ(std::vector<TokenId>(samlm.ids.begin(), samlm.ids.begin() + samlm.unpadded_length()),
            concat({{Vocab::kCls}, build_samlm_pretrain(vocab, "acha movie").ids}));
}

TEST_F(EncodingTest, TruncationDropsWholeWordsWithCodes) {
  const EncodedInput full = build_samlm_pretrain(vocab, "acha movie nice yaar");
  const int keep = full.alignment[1].code->end;
  const EncodedInput cut = truncate(full, keep + 1);
  EXPECT_EQ(cut.alignment.size(), 2u);
  EXPECT_EQ(cut.ids, std::vector<TokenId>(full.ids.begin(), full.ids.begin() + keep));
  EXPECT_THROW(truncate(full, 1), Error);
  const EncodedInput fitted =
      build_sequence(vocab, split_whitespace("acha movie nice yaar"), Flavor::kSAMLM, false,
                     {.max_len = keep + 1});
  EXPECT_EQ(fitted.ids, cut.ids);
}

TEST_F(EncodingTest, MaskRateExtremes) {
  const EncodedInput in = build_finetune(vocab, "acha movie nice", Flavor::kSAMLM);
  const int eligible = static_cast<int>(eligible_positions(in).size());
  const MaskedBatch none = apply_mlm_mask(in, vocab.size(), {.rate = 0.0}, 1);
  EXPECT_EQ(none.num_masked(), 0);
  EXPECT_EQ(none.input_ids[0], in.ids);
  const MaskedBatch all = apply_mlm_mask(in, vocab.size(), {.rate = 1.0}, 1);
  EXPECT_EQ(all.num_masked(), eligible);
}

TEST_F(EncodingTest, TwentyEligibleSelectsThreeDeterministically) {
  std::vector<std::string> words;
  for (int i = 0; i < 20; ++i) words.push_back("a");
  const EncodedInput in = build_sequence(vocab, words, Flavor::kVC, true, {});
  ASSERT_EQ(eligible_positions(in).size(), 20u);
  const MaskedBatch a = apply_mlm_mask(in, vocab.size(), {}, 42);
  const MaskedBatch b = apply_mlm_mask(in, vocab.size(), {}, 42);
  EXPECT_EQ(a.num_masked(), 3);
  EXPECT_EQ(a.labels, b.labels);
  EXPECT_EQ(a.input_ids, b.input_ids);
}

TEST_F(EncodingTest, ReplacementSplitIsRoughlyEightyTenTen) {
  std::vector<std::string> words(200, "movie");
  const EncodedInput in = build_sequence(vocab, words, Flavor::kVC, false, {.max_len = 1000});
  long masked = 0, mask_token = 0, unchanged = 0;
  for (uint64_t seed = 0; seed < 50; ++seed) {
    const MaskedBatch b = apply_mlm_mask(in, vocab.size(), {}, seed);
    for (int i = 0; i < in.length(); ++i) {
      if (b.labels[0][i] == kIgnoreLabel) continue;
      ++masked;
      mask_token += b.input_ids[0][i] == Vocab::kMask;
      unchanged += b.input_ids[0][i] == in.ids[i];
    }
  }
  EXPECT_NEAR(static_cast<double>(mask_token) / masked, 0.8, 0.03);
  EXPECT_NEAR(static_cast<double>(unchanged) / masked, 0.1, 0.03);
}

TEST_F(EncodingTest, MaskBatchPadsRows) {
  const std::vector<EncodedInput> inputs = {build_smlm_pretrain(vocab, "acha"),
                                            build_smlm_pretrain(vocab, "acha movie nice")};
  const MaskedBatch b = mask_batch(inputs, vocab.size(), {}, 9);
  EXPECT_EQ(b.batch_size(), 2);
  EXPECT_EQ(b.input_ids[0].size(), b.input_ids[1].size());
  EXPECT_EQ(b.attention_mask[0].back(), 0);
}

TEST_F(EncodingTest, RandomizedSequenceProperties) {
  testing::PropertyTally tally;
  for (uint64_t seed = 1; seed <= 1000; ++seed) testing::check_sequence_properties(vocab, seed, tally);
  EXPECT_EQ(tally.cases, 1000);
  EXPECT_GT(tally.swaps, 1000);
  EXPECT_EQ(tally.failures, 0) << tally.first_failure;
}

TEST(Flavor, ParseAndName) {
  EXPECT_EQ(parse_flavor("SAMLM"), Flavor::kSAMLM);
  EXPECT_EQ(flavor_name(Flavor::kSMLM), "smlm");
  EXPECT_THROW(parse_flavor("bert"), Error);
}

}  // namespace
}  // namespace soundmlm
