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

#include <atomic>
#include <cctype>
#include <cmath>
#include <numeric>
#include <set>
#include <string>
#include <vector>

#include "attack_fixtures.h"
#include "shapley_fixtures.h"
#include "soundmlm/common.h"
#include "soundmlm/encoding.h"
#include "soundmlm/explain.h"
#include "test_support.h"

namespace soundmlm {
namespace {

using testing::placeholder_words;
using testing::RandomGame;

// Minimal structural XML/HTML checker: balanced tags, quoted attributes,
// no stray '<' or unescaped '&' in text.
bool well_formed(const std::string& doc, std::string* why) {
  std::vector<std::string> stack;
  std::size_t i = 0;
  auto fail = [&](const std::string& msg) {
    *why = msg + " at " + std::to_string(i);
    return false;
  };
  while (i < doc.size()) {
    if (doc[i] == '&') {
      const std::size_t semi = doc.find(';', i);
      if (semi == std::string::npos || semi - i > 8) return fail("bare '&'");
      i = semi + 1;
      continue;
    }
    if (doc[i] != '<') {
      if (doc[i] == '>') return fail("stray '>'");
      ++i;
      continue;
    }
    if (doc.compare(i, 2, "<!") == 0) {
      const std::size_t end = doc.find('>', i);
      if (end == std::string::npos) return fail("unterminated declaration");
      i = end + 1;
      continue;
    }
    const bool closing = doc.compare(i, 2, "</") == 0;
    std::size_t j = i + (closing ? 2 : 1);
    std::string name;
    while (j < doc.size() && std::isalnum(static_cast<unsigned char>(doc[j]))) name += doc[j++];
    if (name.empty()) return fail("empty tag name");
    bool self_closing = false;
    while (j < doc.size() && doc[j] != '>') {
      if (doc[j] == '"') {
        const std::size_t q = doc.find('"', j + 1);
        if (q == std::string::npos) return fail("unterminated attribute");
        if (doc.substr(j + 1, q - j - 1).find('<') != std::string::npos) return fail("'<' in attribute");
        j = q + 1;
        continue;
      }
      if (doc[j] == '<') return fail("'<' inside tag");
      if (doc[j] == '/' && j + 1 < doc.size() && doc[j + 1] == '>') self_closing = true;
      ++j;
    }
    if (j >= doc.size()) return fail("unterminated tag");
    if (closing) {
      if (stack.empty() || stack.back() != name) return fail("mismatched </" + name + ">");
      stack.pop_back();
    } else if (!self_closing) {
      stack.push_back(name);
    }
    i = j + 1;
    if (!closing && (name == "style" || name == "script")) {
      const std::size_t end = doc.find("</" + name, i);
      if (end == std::string::npos) return fail("unterminated " + name);
      i = end;
    }
  }
  if (!stack.empty()) return fail("unclosed <" + stack.back() + ">");
  return true;
}

TEST(HtmlChecker, DetectsBrokenMarkup) {
  std::string why;
  EXPECT_TRUE(well_formed("<a><b x=\"1\"/>t &amp; u</a>", &why)) << why;
  EXPECT_FALSE(well_formed("<a><b></a>", &why));
  EXPECT_FALSE(well_formed("<a>x < y</a>", &why));
  EXPECT_FALSE(well_formed("<a>R&D</a>", &why));
}

TEST(ShapExact, TwoWordHandCase) {
  const auto words = placeholder_words(2);
  const AttributionReport r = shap_exact(testing::two_word_game(), words, 1);
  EXPECT_NEAR(r.shap_values[0], 0.3, 1e-12);
  EXPECT_NEAR(r.shap_values[1], 0.1, 1e-12);
  EXPECT_DOUBLE_EQ(r.base_value, 0.5);
  EXPECT_DOUBLE_EQ(r.full_value, 0.9);
  EXPECT_TRUE(r.exact);
  EXPECT_EQ(r.evaluations, 4);
}

TEST(ShapExact, ConstantModel) {
  const auto words = placeholder_words(5);
  const AttributionReport r = shap_exact([](const Coalition&) { return 0.42; }, words, 0);
  for (double v : r.shap_values) EXPECT_EQ(v, 0.0);
  EXPECT_EQ(r.base_value, 0.42);
}

TEST(ShapExact, EfficiencyNullPlayerSymmetry) {
  for (uint64_t seed = 1; seed <= 10; ++seed) {
    const std::size_t n = 3 + seed % 6;
    const RandomGame game(n, seed, 0, 1, 2);
    const auto words = placeholder_words(n);
    const AttributionReport r = shap_exact(game.value(), words, 0);
    const double sum = std::accumulate(r.shap_values.begin(), r.shap_values.end(), 0.0);
    EXPECT_NEAR(r.base_value + sum, r.full_value, 1e-9);
    EXPECT_EQ(r.shap_values[0], 0.0);
    EXPECT_NEAR(r.shap_values[1], r.shap_values[2], 1e-12);
  }
}

TEST(ShapExact, EachCoalitionEvaluatedOnce) {
  const std::size_t n = 7;
  const RandomGame game(n, 3);
  const auto inner = game.value();
  std::atomic<long> calls{0};
  std::set<std::string> seen;
  std::mutex mu;
  bool repeated = false;
  auto counted = [&](const Coalition& c) {
    ++calls;
    std::lock_guard<std::mutex> lock(mu);
    repeated |= !seen.insert(c.key()).second;
    return inner(c);
  };
  const auto words = placeholder_words(n);
  const AttributionReport r = shap_exact(counted, words, 0, {.max_words = 12, .threads = 3});
  EXPECT_EQ(calls.load(), 1L << n);
  EXPECT_FALSE(repeated);
  EXPECT_EQ(r.evaluations, 1L << n);
}

TEST(ShapExact, ThreadCountDoesNotChangeValues) {
  const RandomGame game(9, 5);
  const auto words = placeholder_words(9);
  const auto a = shap_exact(game.value(), words, 0, {.max_words = 12, .threads = 1});
  const auto b = shap_exact(game.value(), words, 0, {.max_words = 12, .threads = 4});
  EXPECT_EQ(a.shap_values, b.shap_values);
}

TEST(ShapExact, TooManyWords) {
  const auto words = placeholder_words(13);
  try {
    shap_exact([](const Coalition&) { return 0.0; }, words, 0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kTooManyWords);
  }
}

TEST(ShapSampled, MatchesExactOnSmallGames) {
  for (uint64_t seed = 1; seed <= 4; ++seed) {
    const std::size_t n = 4 + seed;
    const RandomGame game(n, seed * 13);
    const auto words = placeholder_words(n);
    const auto exact = shap_exact(game.value(), words, 0);
    const auto sampled = shap_sampled(game.value(), words, 0, 5000, seed);
    EXPECT_FALSE(sampled.exact);
    ASSERT_EQ(sampled.standard_errors.size(), n);
    for (std::size_t i = 0; i < n; ++i) {
      EXPECT_LT(std::abs(sampled.shap_values[i] - exact.shap_values[i]), 0.05);
    }
  }
}

TEST(ShapSampled, ConstantModelAndDeterminism) {
  const auto words = placeholder_words(10);
  const auto c = shap_sampled([](const Coalition&) { return 0.7; }, words, 0, 50, 3);
  for (double v : c.shap_values) EXPECT_EQ(v, 0.0);
  const RandomGame game(10, 2);
  const auto a = shap_sampled(game.value(), words, 0, 200, 8);
  const auto b = shap_sampled(game.value(), words, 0, 200, 8);
  EXPECT_EQ(a.shap_values, b.shap_values);
  EXPECT_EQ(a.standard_errors, b.standard_errors);
}

TEST(ShapSampled, CachesRepeatedCoalitions) {
  const std::size_t n = 4;
  const RandomGame game(n, 4);
  const auto inner = game.value();
  long calls = 0;
  auto counted = [&](const Coalition& c) {
    ++calls;
    return inner(c);
  };
  const auto r = shap_sampled(counted, placeholder_words(n), 0, 500, 1);
  EXPECT_LE(calls, 1L << n);
  EXPECT_EQ(r.evaluations, calls);
}

TEST(MaskedInput, DeletesHiddenWordsAndCodes) {
  const Vocab vocab = testing::toy_vocab();
  const auto words = split_whitespace("acha movie nice");
  for (Flavor f : {Flavor::kVC, Flavor::kSMLM, Flavor::kSAMLM}) {
    EXPECT_EQ(build_masked_input(vocab, words, Coalition::full(3), f).ids,
              build_finetune(vocab, "acha movie nice", f).ids);
    const std::vector<std::string> kept = {"acha", "nice"};
    EXPECT_EQ(build_masked_input(vocab, words, Coalition({true, false, true}), f).ids,
              build_sequence(vocab, kept, f, true, {.max_len = kDefaultMaxLen, .pad = true}).ids);
  }
  const EncodedInput empty = build_masked_input(vocab, words, Coalition::none(3), Flavor::kVC);
  EXPECT_EQ(empty.unpadded_length(), 1);
  EXPECT_EQ(empty.ids[0], Vocab::kCls);
  const EncodedInput smlm_empty =
      build_masked_input(vocab, words, Coalition::none(3), Flavor::kSMLM, {.max_len = 8, .pad = false});
  EXPECT_EQ(smlm_empty.ids, (std::vector<TokenId>{Vocab::kCls, Vocab::kSep}));
}

TEST(ShapOnClassifier, KeywordDominates) {
  const auto model = testing::sentiment_keyword_model();
  const auto words = split_whitespace("yeh movie nice hai");
  const auto r = shap_exact(model, words, 1);
  EXPECT_GT(r.shap_values[2], 0.3);
  EXPECT_EQ(r.shap_values[0], 0.0);
  EXPECT_NEAR(r.full_value, model.predict(words)[1], 1e-12);
}

TEST(Render, ColorsAndNeutrality) {
  AttributionReport r;
  r.words = {"good", "bad", "meh"};
  r.shap_values = {0.4, -0.2, 0.0};
  const std::string html = render_report(r, RenderFormat::kHtml);
  EXPECT_NE(html.find("rgb(255,0,0)"), std::string::npos);    // full red
  EXPECT_NE(html.find("rgb(128,128,255)"), std::string::npos);  // half blue
  EXPECT_NE(html.find("transparent\" title=\"+0.0000\">meh"), std::string::npos);
  const std::string ansi = render_report(r, RenderFormat::kAnsi);
  EXPECT_NE(ansi.find("48;2;255;0;0m"), std::string::npos);
  EXPECT_NE(ansi.find("meh(+0.0000)"), std::string::npos);

  AttributionReport zero;
  zero.words = {"a", "b"};
  zero.shap_values = {0.0, 0.0};
  EXPECT_EQ(render_report(zero, RenderFormat::kAnsi).find("\x1b["), std::string::npos);
  EXPECT_EQ(render_report(zero, RenderFormat::kHtml).find("rgb("), std::string::npos);
}

TEST(Render, HtmlIsWellFormedAndEscaped) {
  AttributionReport r;
  r.words = {"<b>", "R&D", "\"q\"", "ok"};
  r.shap_values = {0.1, -0.3, 0.2, 0.0};
  const std::string html = render_report(r, RenderFormat::kHtml);
  std::string why;
  EXPECT_TRUE(well_formed(html, &why)) << why;
  EXPECT_NE(html.find("&lt;b&gt;"), std::string::npos);
  EXPECT_NE(html.find("R&amp;D"), std::string::npos);
}

TEST(Report, JsonSidecar) {
  const auto r = shap_exact(testing::two_word_game(), placeholder_words(2), 1);
  const auto j = r.to_json();
  EXPECT_EQ(j.at("words").size(), 2u);
  EXPECT_DOUBLE_EQ(j.at("base_value").get<double>(), 0.5);
  EXPECT_EQ(j.at("values").size(), 2u);
}

}  // namespace
}  // namespace soundmlm
