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

#ifndef SOUNDMLM_CONFIG_H_
#define SOUNDMLM_CONFIG_H_

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "soundmlm/encoding.h"
#include "soundmlm/model.h"

namespace soundmlm {

// Everything one experiment needs. Serialized as flat `key=value` lines.
struct ExperimentConfig {
  std::string task = "sentiment";
  Flavor flavor = Flavor::kSAMLM;
  std::string output_dir = "out";
  std::string train_path;
  std::string dev_path;
  std::string test_path;
  std::string pretrain_corpus_path;  // empty: pre-train on the training texts
  std::string dict_path;             // empty: bundled dictionary
  std::string vocab_path;            // empty: <output_dir>/vocab.txt
  bool build_vocab = true;
  int vocab_size = 1000;

  int hidden_dim = 64;
  int num_layers = 2;
  int num_heads = 4;
  int ff_dim = 128;
  int max_len = kDefaultMaxLen;
  double dropout = 0.1;

  bool pretrain = true;  // SOUNDEX MLM stage; never runs for the vc flavor
  int pretrain_epochs = 3;
  int finetune_epochs = 5;
  double pretrain_learning_rate = 3e-4;
  double finetune_learning_rate = 3e-4;
  int batch_size = 16;
  double weight_decay = 0.0;
  double clip_norm = 1.0;
  double mask_rate = 0.15;
  bool select_best_dev = true;
  uint64_t seed = 1;

  bool attack = true;
  int candidate_budget = 16;
  int max_words_perturbed = 0;

  bool explain = false;
  int explain_count = 3;
  int shap_permutations = 2000;
  int exact_threshold = 12;

  int threads = 0;

  // Parses `key=value` lines ('#' comments). Throws kConfigError.
  static ExperimentConfig parse(std::string_view text);
  static ExperimentConfig load(const std::string& path);
  // Applies one override; throws kConfigError for unknown keys/bad values.
  void set(const std::string& key, const std::string& value);
  std::string get(const std::string& key) const;
  static const std::vector<std::string>& keys();

  // Sorted key=value text; the basis of the manifest's config hash.
  std::string canonical_text() const;
  std::string resolved_vocab_path() const;

  EncoderConfig encoder_config(int vocab_size, int num_classes) const;
  OptimizerConfig optimizer_config(bool pretraining) const;

  // Semantic checks plus existence of referenced input files.
  void validate() const;
};

}  // namespace soundmlm

#endif  // SOUNDMLM_CONFIG_H_
