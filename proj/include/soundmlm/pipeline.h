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

#ifndef SOUNDMLM_PIPELINE_H_
#define SOUNDMLM_PIPELINE_H_

#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "soundmlm/common.h"
#include "soundmlm/config.h"
#include "soundmlm/tokenizer.h"

namespace soundmlm {

inline constexpr char kSoundmlmVersion[] = "1.0.0";

// File names inside the output directory.
struct ArtifactPaths {
  std::string vocab;
  std::string pretrain_checkpoint;
  std::string pretrain_metrics;
  std::string finetune_checkpoint;
  std::string finetune_metrics;
  std::string metrics;
  std::string report_html;
  std::string explanations;
  std::string manifest;

  static ArtifactPaths for_config(const ExperimentConfig& config);
};

// A library error tagged with the pipeline stage that raised it.
class StageError : public Error {
 public:
  StageError(std::string stage, const Error& cause);
  const std::string& stage() const { return stage_; }

 private:
  std::string stage_;
};

// Lowercased whitespace tokens.
std::vector<std::string> sentence_words(std::string_view text);

// Each stage reads its inputs from disk, writes its outputs into
// `config.output_dir` and returns the JSON it wrote.
nlohmann::json run_build_vocab(const ExperimentConfig& config);
nlohmann::json run_pretrain(const ExperimentConfig& config, const std::string& dump_batch_path = "");
nlohmann::json run_finetune(const ExperimentConfig& config);
// Clean metrics, plus the attack when `with_attack`.
nlohmann::json run_eval(const ExperimentConfig& config, bool with_attack);
nlohmann::json run_explain(const ExperimentConfig& config);

// Validates, then runs every stage in order. The returned JSON is the
// content of metrics.json.
nlohmann::json run_pipeline(const ExperimentConfig& config);

// Config hash, seeds, and content hashes of every input and output file.
nlohmann::json write_manifest(const ExperimentConfig& config, const std::string& command);

std::string file_hash(const std::string& path);

// 0 success, 2 config error, 3 data error, 4 divergence, 1 anything else.
int exit_code_for(ErrorCode code);

}  // namespace soundmlm

#endif  // SOUNDMLM_PIPELINE_H_
