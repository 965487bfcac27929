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

#include "soundmlm/synth.h"

#include <filesystem>
#include <set>

#include "soundmlm/common.h"
#include "soundmlm/phonetics.h"

namespace soundmlm {
namespace {

SyntheticLexicon build_lexicon() {
  SyntheticLexicon lex;
  lex.labels = {"negative", "neutral", "positive"};
  lex.keywords = {
      // negative
      {{"bura", {"buraa", "burra"}},
       {"bekaar", {"bekar", "bekaarr"}},
       {"ganda", {"gandaa", "gnda"}},
       {"bakwas", {"bakwaas", "bakwass"}},
       {"ghatiya", {"ghatiyaa", "ghatia"}},
       {"faltu", {"faaltu", "faltoo"}},
       {"nafrat", {"nafraat", "nafratt"}},
       {"dukhi", {"dukhee", "dukhii"}}},
      // neutral
      {{"theek", {"thik", "theekk"}},
       {"normal", {"normall", "noraml"}},
       {"average", {"avrage", "averaj"}},
       {"chalega", {"chalegaa", "chalga"}}},
      // positive
      {{"acha", {"achha", "acchha", "accha"}},
       {"nice", {"nyc", "nise"}},
       {"mast", {"masst", "maast"}},
       {"badhiya", {"badiya", "badhiyaa", "badhia"}},
       {"pyaar", {"pyar", "pyaarr"}},
       {"khush", {"khus", "khushh"}},
       {"sundar", {"sundarr", "sundr"}},
       {"mazedaar", {"majedar", "mazedar"}}},
  };
  lex.filler = {"yeh",   "movie", "bhai",  "hai",   "tha",    "ekdum", "kya",
                "hum",   "log",   "wala",  "film",  "gaana",  "khana", "din",
                "sab",   "mera",  "tera",  "yaar",  "kal",    "raat",  "ghar",
                "dost",  "pehle", "abhi",  "sach",  "picture", "show", "song",
                "episode", "trailer", "series", "aur", "toh", "bhi"};
  return lex;
}

// Variants must share the canonical SOUNDEX code, and keyword codes must not
// collide across classes or with filler words.
void check_lexicon(const SyntheticLexicon& lex) {
  std::set<std::string> filler_codes;
  for (const auto& w : lex.filler) filler_codes.insert(soundex(w)->str());
  std::set<std::string> seen;
  for (const auto& families : lex.keywords) {
    for (const auto& f : families) {
      const std::string code = soundex(f.canonical)->str();
      for (const auto& v : f.variants) {
        if (soundex(v)->str() != code) {
          throw Error(ErrorCode::kInvalidArgument,
                      "lexicon variant " + v + " changes the code of " + f.canonical);
        }
      }
      if (filler_codes.count(code) || !seen.insert(code).second) {
        throw Error(ErrorCode::kInvalidArgument, "lexicon code collision at " + f.canonical);
      }
    }
  }
}

}  // namespace

const SyntheticLexicon& synthetic_lexicon() {
  static const SyntheticLexicon lex = [] {
    SyntheticLexicon l = build_lexicon();
    check_lexicon(l);
    return l;
  }();
  return lex;
}

namespace {

struct Sentence {
  std::string text;
  std::string canonical;
  int label;
};

Sentence make_sentence(const SynthOptions& o, Rng& rng,
                       std::vector<InjectedVariant>* injected) {
  const SyntheticLexicon& lex = synthetic_lexicon();
  const int label = static_cast<int>(rng.uniform_int(lex.labels.size()));
  const int length = o.min_words +
                     static_cast<int>(rng.uniform_int(static_cast<uint64_t>(o.max_words - o.min_words + 1)));
  const int keywords = 1 + static_cast<int>(rng.uniform_int(2));
  std::vector<std::string> canonical(static_cast<std::size_t>(length));
  std::vector<std::string> words(static_cast<std::size_t>(length));
  std::vector<bool> is_keyword(static_cast<std::size_t>(length), false);
  for (int k = 0; k < keywords; ++k) {
    std::size_t pos;
    do {
      pos = rng.uniform_int(static_cast<uint64_t>(length));
    } while (is_keyword[pos]);
    is_keyword[pos] = true;
  }
  const auto& families = lex.keywords[static_cast<std::size_t>(label)];
  for (std::size_t i = 0; i < words.size(); ++i) {
    if (!is_keyword[i]) {
      words[i] = canonical[i] = lex.filler[rng.uniform_int(lex.filler.size())];
      continue;
    }
    const KeywordFamily& fam = families[rng.uniform_int(families.size())];
    canonical[i] = fam.canonical;
    words[i] = fam.canonical;
    if (rng.uniform() < o.variant_rate) {
      words[i] = fam.variants[rng.uniform_int(fam.variants.size())];
      if (injected) injected->push_back({fam.canonical, words[i]});
    }
  }
  auto join = [](const std::vector<std::string>& ws) {
    std::string s;
    for (const auto& w : ws) {
      if (!s.empty()) s.push_back(' ');
      s += w;
    }
    return s;
  };
  return {join(words), join(canonical), label};
}

}  // namespace

SyntheticCorpus generate_synthetic_corpus(const SynthOptions& options) {
  if (options.size < 10) {
    throw Error(ErrorCode::kInvalidArgument, "synthetic corpus size must be >= 10");
  }
  if (!(options.variant_rate >= 0.0 && options.variant_rate <= 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "variant_rate must be in [0, 1]");
  }
  if (options.min_words < 2 || options.max_words < options.min_words) {
    throw Error(ErrorCode::kInvalidArgument, "bad sentence length range");
  }
  const SyntheticLexicon& lex = synthetic_lexicon();
  SyntheticCorpus corpus;
  Rng labeled_rng(derive_seed(options.seed, 1));
  for (int i = 0; i < options.size; ++i) {
    Sentence s = make_sentence(options, labeled_rng, &corpus.injected);
    corpus.labeled.push_back({s.text, lex.labels[static_cast<std::size_t>(s.label)]});
    corpus.canonical_texts.push_back(std::move(s.canonical));
  }
  Rng pretrain_rng(derive_seed(options.seed, 2));
  const int pretrain = options.pretrain_size < 0 ? options.size : options.pretrain_size;
  for (int i = 0; i < pretrain; ++i) {
    corpus.pretrain.push_back(make_sentence(options, pretrain_rng, nullptr).text);
  }
  return corpus;
}

SyntheticCorpus make_synthetic_corpus(const SynthOptions& options,
                                      const std::string& out_dir) {
  namespace fs = std::filesystem;
  SyntheticCorpus corpus = generate_synthetic_corpus(options);
  fs::create_directories(out_dir);
  const DatasetSplit split =
      split_dataset(corpus.labeled, {0.8, 0.1, 0.1}, derive_seed(options.seed, 3));
  const fs::path dir(out_dir);
  save_dataset((dir / "train.jsonl").string(), split.train);
  save_dataset((dir / "dev.jsonl").string(), split.dev);
  save_dataset((dir / "test.jsonl").string(), split.test);
  save_text_lines((dir / "pretrain.txt").string(), corpus.pretrain);
  return corpus;
}

}  // namespace soundmlm
