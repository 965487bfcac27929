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

#include "soundmlm/explain.h"

#include <cmath>
#include <unordered_map>

#include "soundmlm/common.h"

namespace soundmlm {

Coalition Coalition::from_mask(std::size_t n, uint64_t mask) {
  if (n > 64) throw Error(ErrorCode::kInvalidArgument, "mask coalitions need n <= 64");
  std::vector<bool> v(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = (mask >> i) & 1U;
  return Coalition(std::move(v));
}

std::size_t Coalition::count() const {
  std::size_t c = 0;
  for (bool b : visible_) c += b;
  return c;
}

std::vector<std::string> Coalition::select(std::span<const std::string> words) const {
  if (words.size() != visible_.size()) {
    throw Error(ErrorCode::kShapeMismatch, "coalition length differs from word count");
  }
  std::vector<std::string> out;
  for (std::size_t i = 0; i < words.size(); ++i) {
    if (visible_[i]) out.push_back(words[i]);
  }
  return out;
}

std::string Coalition::key() const {
  std::string k(visible_.size(), '0');
  for (std::size_t i = 0; i < visible_.size(); ++i) {
    if (visible_[i]) k[i] = '1';
  }
  return k;
}

nlohmann::json AttributionReport::to_json() const {
  nlohmann::json j = {{"words", words},
                      {"values", shap_values},
                      {"base_value", base_value},
                      {"full_value", full_value},
                      {"target_class", target_class},
                      {"exact", exact},
                      {"evaluations", evaluations}};
  if (!standard_errors.empty()) j["standard_errors"] = standard_errors;
  return j;
}

EncodedInput build_masked_input(const Vocab& vocab, std::span<const std::string> words,
                                const Coalition& coalition, Flavor flavor,
                                const SequenceOptions& options) {
  const auto visible = coalition.select(words);
  return build_sequence(vocab, visible, flavor, /*with_cls=*/true, options);
}

CoalitionValue classifier_value(const TextClassifier& model,
                                std::span<const std::string> words, int target_class) {
  if (target_class < 0 || target_class >= model.num_classes()) {
    throw Error(ErrorCode::kInvalidArgument, "target class out of range");
  }
  return [&model, words, target_class](const Coalition& c) {
    return model.predict(c.select(words))[static_cast<std::size_t>(target_class)];
  };
}

AttributionReport shap_exact(const CoalitionValue& value,
                             std::span<const std::string> words, int target_class,
                             const ExactShapOptions& options) {
  const std::size_t n = words.size();
  if (static_cast<int>(n) > options.max_words || n > 30) {
    throw Error(ErrorCode::kTooManyWords,
                std::to_string(n) + " words exceed the exact threshold of " +
                    std::to_string(options.max_words));
  }
  const std::size_t total = std::size_t{1} << n;
  std::vector<double> v(total);
  parallel_for(
      total, [&](std::size_t mask) { v[mask] = value(Coalition::from_mask(n, mask)); },
      options.threads);

  // weight[s] = s! (n-s-1)! / n! = 1 / (n * C(n-1, s))
  std::vector<double> weight(n);
  for (std::size_t s = 0; s < n; ++s) {
    double binom = 1.0;
    for (std::size_t k = 1; k <= s; ++k) {
      binom = binom * static_cast<double>(n - 1 - s + k) / static_cast<double>(k);
    }
    weight[s] = 1.0 / (static_cast<double>(n) * binom);
  }

  AttributionReport report;
  report.words.assign(words.begin(), words.end());
  report.target_class = target_class;
  report.exact = true;
  report.evaluations = static_cast<long>(total);
  report.base_value = v[0];
  report.full_value = v[total - 1];
  report.shap_values.assign(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t bit = std::size_t{1} << i;
    double phi = 0.0;
    for (std::size_t mask = 0; mask < total; ++mask) {
      if (mask & bit) continue;
      phi += weight[static_cast<std::size_t>(__builtin_popcountll(mask))] *
             (v[mask | bit] - v[mask]);
    }
    report.shap_values[i] = phi;
  }
  return report;
}

AttributionReport shap_exact(const TextClassifier& model,
                             std::span<const std::string> words, int target_class,
                             const ExactShapOptions& options) {
  return shap_exact(classifier_value(model, words, target_class), words, target_class,
                    options);
}

AttributionReport shap_sampled(const CoalitionValue& value,
                               std::span<const std::string> words, int target_class,
                               int num_permutations, uint64_t seed) {
  if (num_permutations < 1) {
    throw Error(ErrorCode::kInvalidArgument, "num_permutations must be >= 1");
  }
  const std::size_t n = words.size();
  std::unordered_map<std::string, double> cache;
  auto eval = [&](const Coalition& c) {
    auto [it, inserted] = cache.try_emplace(c.key(), 0.0);
    if (inserted) it->second = value(c);
    return it->second;
  };

  AttributionReport report;
  report.words.assign(words.begin(), words.end());
  report.target_class = target_class;
  report.exact = false;
  report.base_value = eval(Coalition::none(n));
  report.full_value = eval(Coalition::full(n));
  report.shap_values.assign(n, 0.0);
  report.standard_errors.assign(n, 0.0);

  // Welford accumulators per word.
  std::vector<double> mean(n, 0.0), m2(n, 0.0);
  std::vector<std::size_t> order(n);
  Rng rng(seed);
  for (int p = 0; p < num_permutations; ++p) {
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[rng.uniform_int(i)]);
    Coalition c = Coalition::none(n);
    double prev = report.base_value;
    for (std::size_t i : order) {
      c.set(i, true);
      const double cur = eval(c);
      const double x = cur - prev;
      const double delta = x - mean[i];
      mean[i] += delta / static_cast<double>(p + 1);
      m2[i] += delta * (x - mean[i]);
      prev = cur;
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    report.shap_values[i] = mean[i];
    report.standard_errors[i] =
        num_permutations > 1
            ? std::sqrt(m2[i] / static_cast<double>(num_permutations - 1) /
                        static_cast<double>(num_permutations))
            : 0.0;
  }
  report.evaluations = static_cast<long>(cache.size());
  return report;
}

AttributionReport shap_sampled(const TextClassifier& model,
                               std::span<const std::string> words, int target_class,
                               int num_permutations, uint64_t seed) {
  return shap_sampled(classifier_value(model, words, target_class), words, target_class,
                      num_permutations, seed);
}

}  // namespace soundmlm
