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

#include "soundmlm/attack.h"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include "soundmlm/metrics.h"

namespace soundmlm {
namespace {

constexpr std::string_view kDictHeader = "#phondict v1";

constexpr std::string_view kDefaultDictionary = R"(
#phondict v1
# Romanized-Hindi phonetic substitutions: each group may be replaced by any
# listed alternative. Vowel lengthening/shortening and aspiration changes keep
# the SOUNDEX code; w/v, ph/f and k/q/c swaps can move it.
aa	a
a	aa
ee	i
i	ee,y
oo	u
u	oo
y	i
e	ee
ph	f
f	ph
w	v
v	w
sh	s
s	sh
chh	ch
ch	chh
j	z
z	j
q	k
k	q,c
c	k
kh	k
gh	g
th	t
dh	d
bh	b
n	nn
r	rr
)";

bool is_lower_group(std::string_view s, std::size_t max_len) {
  if (s.empty() || s.size() > max_len) return false;
  return std::all_of(s.begin(), s.end(), [](char c) { return c >= 'a' && c <= 'z'; });
}

std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && (s[b] == ' ' || s[b] == '\t' || s[b] == '\r')) ++b;
  while (e > b && (s[e - 1] == ' ' || s[e - 1] == '\t' || s[e - 1] == '\r')) --e;
  return std::string(s.substr(b, e - b));
}

std::string join_words(const std::vector<std::string>& words) {
  std::string out;
  for (const auto& w : words) {
    if (!out.empty()) out.push_back(' ');
    out += w;
  }
  return out;
}

}  // namespace

void SubstitutionDictionary::add(const std::string& group,
                                 const std::vector<std::string>& alternatives) {
  if (!is_lower_group(group, 3)) {
    throw Error(ErrorCode::kInvalidArgument,
                "dictionary key must be 1-3 lowercase letters: '" + group + "'");
  }
  auto& list = entries_[group];
  for (const auto& alt : alternatives) {
    if (!is_lower_group(alt, 8)) {
      throw Error(ErrorCode::kInvalidArgument,
                  "dictionary value must be lowercase letters: '" + alt + "'");
    }
    if (alt == group) {
      throw Error(ErrorCode::kInvalidArgument,
                  "dictionary value equals its key: '" + alt + "'");
    }
    if (std::find(list.begin(), list.end(), alt) == list.end()) list.push_back(alt);
  }
  max_key_length_ = std::max(max_key_length_, group.size());
}

SubstitutionDictionary SubstitutionDictionary::parse(std::string_view text) {
  SubstitutionDictionary dict;
  std::istringstream in{std::string(text)};
  std::string line;
  bool seen_header = false;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string trimmed = trim(line);
    if (!seen_header) {
      if (trimmed.empty()) continue;
      if (trimmed != kDictHeader) {
        throw Error(ErrorCode::kInvalidArgument, "missing '#phondict v1' header");
      }
      seen_header = true;
      continue;
    }
    if (trimmed.empty() || trimmed[0] == '#') continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos) {
      throw Error(ErrorCode::kInvalidArgument,
                  "dictionary line " + std::to_string(line_no) + " has no TAB");
    }
    const std::string key = trim(std::string_view(line).substr(0, tab));
    std::vector<std::string> alts;
    std::stringstream rest(line.substr(tab + 1));
    std::string alt;
    while (std::getline(rest, alt, ',')) {
      alt = trim(alt);
      if (!alt.empty()) alts.push_back(alt);
    }
    if (alts.empty()) {
      throw Error(ErrorCode::kInvalidArgument,
                  "dictionary line " + std::to_string(line_no) + " has no alternatives");
    }
    dict.add(key, alts);
  }
  if (!seen_header) {
    throw Error(ErrorCode::kInvalidArgument, "missing '#phondict v1' header");
  }
  return dict;
}

SubstitutionDictionary SubstitutionDictionary::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIoError, "cannot open dictionary " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return parse(buf.str());
}

std::string_view SubstitutionDictionary::default_dictionary_text() {
  return kDefaultDictionary.substr(1);  // drop the leading newline
}

SubstitutionDictionary SubstitutionDictionary::default_dictionary() {
  return parse(default_dictionary_text());
}

const std::vector<std::string>* SubstitutionDictionary::find(
    std::string_view group) const {
  auto it = entries_.find(std::string(group));
  return it == entries_.end() ? nullptr : &it->second;
}

std::vector<std::string> perturb_word(std::string_view word,
                                      const SubstitutionDictionary& dict) {
  const std::string lower = to_lower_ascii(word);
  std::vector<std::string> out;
  std::set<std::string> seen{lower};
  for (std::size_t pos = 0; pos < lower.size(); ++pos) {
    const std::size_t longest = std::min(dict.max_key_length(), lower.size() - pos);
    for (std::size_t len = longest; len >= 1; --len) {
      const auto* alts = dict.find(std::string_view(lower).substr(pos, len));
      if (alts == nullptr) continue;
      for (const auto& alt : *alts) {
        std::string candidate = lower.substr(0, pos) + alt + lower.substr(pos + len);
        if (seen.insert(candidate).second) out.push_back(std::move(candidate));
      }
    }
  }
  return out;
}

namespace {

// Leave-one-out scores given the already computed full-sentence probabilities.
ImportanceResult rank_by_deletion(const TextClassifier& model,
                                  std::span<const std::string> words,
                                  std::vector<double> full_probs, int true_class) {
  if (true_class < 0 || true_class >= static_cast<int>(full_probs.size())) {
    throw Error(ErrorCode::kInvalidArgument, "class index out of range");
  }
  ImportanceResult result;
  result.full_probs = std::move(full_probs);
  const double base = result.full_probs[static_cast<std::size_t>(true_class)];
  std::vector<std::string> reduced;
  reduced.reserve(words.size());
  for (std::size_t i = 0; i < words.size(); ++i) {
    reduced.clear();
    for (std::size_t j = 0; j < words.size(); ++j) {
      if (j != i) reduced.push_back(words[j]);
    }
    const auto probs = model.predict(reduced);
    ++result.queries;
    result.ranking.emplace_back(static_cast<int>(i),
                                base - probs[static_cast<std::size_t>(true_class)]);
  }
  std::stable_sort(result.ranking.begin(), result.ranking.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  return result;
}

}  // namespace

ImportanceResult token_importance(const TextClassifier& model,
                                  std::span<const std::string> words,
                                  int true_class) {
  if (words.empty()) throw Error(ErrorCode::kEmptySentence, "no words to rank");
  ImportanceResult result =
      rank_by_deletion(model, words, model.predict(words), true_class);
  ++result.queries;
  return result;
}

std::string AttackResult::original() const { return join_words(original_words); }
std::string AttackResult::adversarial() const { return join_words(adversarial_words); }

AttackResult attack(const TextClassifier& model, std::span<const std::string> words,
                    const SubstitutionDictionary& dict, const AttackConfig& config) {
  if (words.empty()) throw Error(ErrorCode::kEmptySentence, "no words to attack");
  if (config.candidate_budget <= 0 || config.max_words_perturbed < 0) {
    throw Error(ErrorCode::kInvalidArgument, "attack budgets must be positive");
  }
  AttackResult result;
  result.original_words.assign(words.begin(), words.end());
  result.adversarial_words = result.original_words;

  // Leave-one-out ranking against the model's own prediction.
  auto first = model.predict(words);
  const int original = argmax(first);
  ImportanceResult importance = rank_by_deletion(model, words, std::move(first), original);
  result.queries = 1 + importance.queries;
  result.original_label = original;
  result.final_label = original;
  result.final_probs = importance.full_probs;
  double current = importance.full_probs[static_cast<std::size_t>(original)];

  const int limit = config.max_words_perturbed == 0
                        ? static_cast<int>(words.size())
                        : config.max_words_perturbed;
  for (const auto& [index, score] : importance.ranking) {
    if (static_cast<int>(result.perturbed_indices.size()) >= limit) break;
    std::vector<std::string> candidates =
        perturb_word(result.adversarial_words[static_cast<std::size_t>(index)], dict);
    if (candidates.empty()) continue;
    if (static_cast<int>(candidates.size()) > config.candidate_budget) {
      Rng rng(derive_seed(config.seed, static_cast<uint64_t>(index),
                          fnv1a64(result.adversarial_words[static_cast<std::size_t>(index)])));
      std::vector<std::size_t> picks(candidates.size());
      std::iota(picks.begin(), picks.end(), 0);
      const auto budget = static_cast<std::size_t>(config.candidate_budget);
      for (std::size_t i = 0; i < budget; ++i) {
        std::swap(picks[i], picks[i + rng.uniform_int(picks.size() - i)]);
      }
      picks.resize(budget);
      std::sort(picks.begin(), picks.end());
      std::vector<std::string> kept;
      for (std::size_t p : picks) kept.push_back(std::move(candidates[p]));
      candidates = std::move(kept);
    }

    std::vector<std::vector<double>> scores(candidates.size());
    parallel_for(
        candidates.size(),
        [&](std::size_t c) {
          std::vector<std::string> trial = result.adversarial_words;
          trial[static_cast<std::size_t>(index)] = candidates[c];
          scores[c] = model.predict(trial);
        },
        config.threads);
    result.queries += static_cast<long>(candidates.size());

    // Deterministic argmin: lowest probability, then generation order.
    std::size_t best = 0;
    for (std::size_t c = 1; c < candidates.size(); ++c) {
      if (scores[c][static_cast<std::size_t>(original)] <
          scores[best][static_cast<std::size_t>(original)]) {
        best = c;
      }
    }
    const double best_p = scores[best][static_cast<std::size_t>(original)];
    if (!(best_p < current)) continue;
    current = best_p;
    result.adversarial_words[static_cast<std::size_t>(index)] = candidates[best];
    result.perturbed_indices.push_back(index);
    result.final_probs = scores[best];
    result.final_label = argmax(scores[best]);
    if (result.final_label != original) {
      result.success = true;
      break;
    }
  }
  std::sort(result.perturbed_indices.begin(), result.perturbed_indices.end());
  result.perturbation_ratio = static_cast<double>(result.perturbed_indices.size()) /
                              static_cast<double>(words.size());
  return result;
}

nlohmann::json RobustnessReport::to_json() const {
  nlohmann::json examples = nlohmann::json::array();
  for (const auto& e : per_example) {
    nlohmann::json j = {{"label", e.label},
                        {"clean_prediction", e.clean_prediction},
                        {"adversarial_prediction", e.adversarial_prediction},
                        {"attacked", e.attacked}};
    if (e.attack) {
      j["original"] = e.attack->original();
      j["adversarial"] = e.attack->adversarial();
      j["success"] = e.attack->success;
      j["perturbed_indices"] = e.attack->perturbed_indices;
      j["queries"] = e.attack->queries;
      j["pr"] = e.attack->perturbation_ratio;
    }
    examples.push_back(std::move(j));
  }
  return {{"ba", ba},
          {"aa", aa},
          {"bf1", bf1},
          {"af1", af1},
          {"mean_pr", mean_pr},
          {"pda", pda},
          {"num_examples", num_examples},
          {"num_attacked", num_attacked},
          {"num_successful", num_successful},
          {"per_example", std::move(examples)}};
}

RobustnessReport evaluate_robustness(const TextClassifier& model,
                                     std::span<const EvalExample> test_set,
                                     const SubstitutionDictionary& dict,
                                     const AttackConfig& config) {
  if (test_set.empty()) throw Error(ErrorCode::kEmptyDataset, "empty test set");
  RobustnessReport report;
  report.num_examples = static_cast<int>(test_set.size());
  report.per_example.resize(test_set.size());
  AttackConfig inner = config;
  inner.threads = 1;
  parallel_for(
      test_set.size(),
      [&](std::size_t i) {
        const EvalExample& ex = test_set[i];
        ExampleOutcome& out = report.per_example[i];
        out.label = ex.label;
        out.clean_prediction = argmax(model.predict(ex.words));
        out.adversarial_prediction = out.clean_prediction;
        if (out.clean_prediction != ex.label || ex.words.empty()) return;
        out.attacked = true;
        out.attack = attack(model, ex.words, dict, inner);
        out.adversarial_prediction = out.attack->final_label;
      },
      config.threads);

  std::vector<int> labels, clean, adversarial;
  double pr_sum = 0.0;
  for (const auto& e : report.per_example) {
    labels.push_back(e.label);
    clean.push_back(e.clean_prediction);
    adversarial.push_back(e.adversarial_prediction);
    if (e.attacked) ++report.num_attacked;
    if (e.attack && e.attack->success) {
      ++report.num_successful;
      pr_sum += e.attack->perturbation_ratio;
    }
  }
  report.ba = accuracy(clean, labels);
  report.aa = accuracy(adversarial, labels);
  report.bf1 = macro_f1(clean, labels);
  report.af1 = macro_f1(adversarial, labels);
  report.mean_pr = report.num_successful > 0 ? pr_sum / report.num_successful : 0.0;
  report.pda = percentage_drop(report.ba, report.aa);
  return report;
}

}  // namespace soundmlm
