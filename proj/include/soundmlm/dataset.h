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

#ifndef SOUNDMLM_DATASET_H_
#define SOUNDMLM_DATASET_H_

#include <array>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace soundmlm {

struct LabeledExample {
  std::string text;
  std::string label;

  friend bool operator==(const LabeledExample&, const LabeledExample&) = default;
};

// JSON lines: {"text": ..., "label": ...} per line; blank lines skipped.
// Throws kMalformedLine (message carries the line number) or kEmptyDataset.
std::vector<LabeledExample> load_dataset(const std::string& path);
std::vector<LabeledExample> parse_dataset(const std::string& text);
void save_dataset(const std::string& path, std::span<const LabeledExample> examples);

// Non-empty lines of a plain-text corpus.
std::vector<std::string> load_text_lines(const std::string& path);
void save_text_lines(const std::string& path, std::span<const std::string> lines);

// Label names mapped to dense class indices in sorted order.
class LabelSet {
 public:
  LabelSet() = default;
  explicit LabelSet(std::vector<std::string> names);
  static LabelSet from_examples(std::span<const LabeledExample> examples);

  int size() const { return static_cast<int>(names_.size()); }
  // Throws kMalformedLine for labels outside the set.
  int index_of(const std::string& name) const;
  const std::string& name_of(int index) const { return names_.at(static_cast<std::size_t>(index)); }
  const std::vector<std::string>& names() const { return names_; }

 private:
  std::vector<std::string> names_;
  std::map<std::string, int> index_;
};

struct DatasetSplit {
  std::vector<LabeledExample> train;
  std::vector<LabeledExample> dev;
  std::vector<LabeledExample> test;
};

// Seeded shuffle, then train = floor(r0 * n), dev = floor(r1 * n), test =
// the remainder. Ratios must be positive and sum to 1 (kRatioInvalid).
DatasetSplit split_dataset(std::span<const LabeledExample> examples,
                           const std::array<double, 3>& ratios, uint64_t seed);

}  // namespace soundmlm

#endif  // SOUNDMLM_DATASET_H_
