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

#include "soundmlm/dataset.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"
#include "soundmlm/common.h"

namespace soundmlm {
namespace {

bool is_blank(std::string_view s) {
  return std::all_of(s.begin(), s.end(), [](char c) {
    return c == ' ' || c == '\t' || c == '\r' || c == '\n';
  });
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIoError, "cannot open " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

[[noreturn]] void malformed(int line, const std::string& why) {
  throw Error(ErrorCode::kMalformedLine, "line " + std::to_string(line) + ": " + why);
}

}  // namespace

std::vector<LabeledExample> parse_dataset(const std::string& text) {
  std::vector<LabeledExample> out;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (is_blank(line)) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception&) {
      malformed(line_no, "not valid JSON");
    }
    if (!j.is_object()) malformed(line_no, "expected a JSON object");
    if (!j.contains("text") || !j["text"].is_string()) {
      malformed(line_no, "missing string field \"text\"");
    }
    if (!j.contains("label") || !j["label"].is_string()) {
      malformed(line_no, "missing string field \"label\"");
    }
    LabeledExample ex{j["text"].get<std::string>(), j["label"].get<std::string>()};
    if (is_blank(ex.text)) malformed(line_no, "empty text");
    if (ex.label.empty()) malformed(line_no, "empty label");
    out.push_back(std::move(ex));
  }
  if (out.empty()) throw Error(ErrorCode::kEmptyDataset, "dataset has no examples");
  return out;
}

std::vector<LabeledExample> load_dataset(const std::string& path) {
  try {
    return parse_dataset(read_file(path));
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kIoError) throw;
    throw Error(e.code(), path + ": " + e.what());
  }
}

void save_dataset(const std::string& path, std::span<const LabeledExample> examples) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIoError, "cannot write " + path);
  for (const auto& ex : examples) {
    out << nlohmann::json{{"text", ex.text}, {"label", ex.label}}.dump() << '\n';
  }
}

std::vector<std::string> load_text_lines(const std::string& path) {
  std::istringstream in(read_file(path));
  std::vector<std::string> out;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!is_blank(line)) out.push_back(line);
  }
  return out;
}

void save_text_lines(const std::string& path, std::span<const std::string> lines) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIoError, "cannot write " + path);
  for (const auto& l : lines) out << l << '\n';
}

LabelSet::LabelSet(std::vector<std::string> names) : names_(std::move(names)) {
  std::sort(names_.begin(), names_.end());
  names_.erase(std::unique(names_.begin(), names_.end()), names_.end());
  for (std::size_t i = 0; i < names_.size(); ++i) index_[names_[i]] = static_cast<int>(i);
}

LabelSet LabelSet::from_examples(std::span<const LabeledExample> examples) {
  std::vector<std::string> names;
  for (const auto& ex : examples) names.push_back(ex.label);
  return LabelSet(std::move(names));
}

int LabelSet::index_of(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) {
    throw Error(ErrorCode::kMalformedLine, "label '" + name + "' not in the label set");
  }
  return it->second;
}

DatasetSplit split_dataset(std::span<const LabeledExample> examples,
                           const std::array<double, 3>& ratios, uint64_t seed) {
  double sum = 0.0;
  for (double r : ratios) {
    if (!(r > 0.0)) throw Error(ErrorCode::kRatioInvalid, "ratios must be positive");
    sum += r;
  }
  if (std::abs(sum - 1.0) > 1e-9) {
    throw Error(ErrorCode::kRatioInvalid, "ratios must sum to 1");
  }
  std::vector<LabeledExample> shuffled(examples.begin(), examples.end());
  Rng rng(seed);
  for (std::size_t i = shuffled.size(); i > 1; --i) {
    std::swap(shuffled[i - 1], shuffled[rng.uniform_int(i)]);
  }
  const auto n = static_cast<double>(shuffled.size());
  // The epsilon absorbs representation error such as 0.1 * 100 = 10.000...02.
  const auto n_train = static_cast<std::size_t>(std::floor(ratios[0] * n + 1e-9));
  const auto n_dev = std::min(shuffled.size() - n_train,
                              static_cast<std::size_t>(std::floor(ratios[1] * n + 1e-9)));
  DatasetSplit split;
  split.train.assign(shuffled.begin(), shuffled.begin() + static_cast<long>(n_train));
  split.dev.assign(shuffled.begin() + static_cast<long>(n_train),
                   shuffled.begin() + static_cast<long>(n_train + n_dev));
  split.test.assign(shuffled.begin() + static_cast<long>(n_train + n_dev), shuffled.end());
  return split;
}

}  // namespace soundmlm
