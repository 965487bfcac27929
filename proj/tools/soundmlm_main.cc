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

// soundmlm command-line driver.

#include <cstdio>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "soundmlm/common.h"
#include "soundmlm/config.h"
#include "soundmlm/phonetics.h"
#include "soundmlm/pipeline.h"
#include "soundmlm/synth.h"

namespace {

using soundmlm::ExperimentConfig;

// One --<key> flag per config key, applied after the --config file.
struct ConfigFlags {
  std::string config_path;
  std::map<std::string, std::optional<std::string>> overrides;

  void attach(CLI::App* app) {
    app->add_option("--config", config_path, "key=value configuration file");
    for (const auto& key : ExperimentConfig::keys()) {
      std::string flag = "--" + key;
      for (char& c : flag) {
        if (c == '_') c = '-';
      }
      app->add_option(flag, overrides[key], "override '" + key + "'");
    }
  }

  ExperimentConfig resolve() const {
    ExperimentConfig config =
        config_path.empty() ? ExperimentConfig{} : ExperimentConfig::load(config_path);
    for (const auto& [key, value] : overrides) {
      if (value) config.set(key, *value);
    }
    return config;
  }
};

void print(const nlohmann::json& j) { std::cout << j.dump(2) << '\n'; }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"SOUNDEX-aware masked language models: training, attack and attribution"};
  app.require_subcommand(1);

  std::vector<std::string> words;
  auto* soundex_cmd = app.add_subcommand("soundex", "print the SOUNDEX code of each word");
  soundex_cmd->add_option("words", words, "words to encode")->required();

  soundmlm::SynthOptions synth;
  std::string synth_out = "synthetic";
  auto* synth_cmd = app.add_subcommand("synth", "write a synthetic labeled corpus");
  synth_cmd->add_option("--seed", synth.seed);
  synth_cmd->add_option("--size", synth.size, "labeled examples");
  synth_cmd->add_option("--pretrain-size", synth.pretrain_size, "unlabeled sentences");
  synth_cmd->add_option("--variant-rate", synth.variant_rate);
  synth_cmd->add_option("--out", synth_out, "output directory");

  const std::vector<std::pair<std::string, std::string>> stage_commands = {
      {"build-vocab", "build the WordPiece vocabulary"},
      {"pretrain", "SOUNDEX masked-language-model pre-training"},
      {"finetune", "classification fine-tuning"},
      {"eval", "clean test metrics"},
      {"attack", "adversarial robustness metrics"},
      {"explain", "Shapley attributions and HTML report"},
      {"pipeline", "all stages in order"}};
  std::map<std::string, ConfigFlags> flags;
  std::map<std::string, CLI::App*> commands;
  std::string dump_batch;
  for (const auto& [name, help] : stage_commands) {
    CLI::App* cmd = app.add_subcommand(name, help);
    flags[name].attach(cmd);
    commands[name] = cmd;
  }
  commands["pretrain"]->add_option("--dump-batch", dump_batch,
                                   "also write a masked batch to this file");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*soundex_cmd) {
      for (const auto& w : words) {
        const auto code = soundmlm::soundex(w);
        std::cout << w << '\t' << (code ? code->str() : "-") << '\n';
      }
      return 0;
    }
    if (*synth_cmd) {
      const auto corpus = soundmlm::make_synthetic_corpus(synth, synth_out);
      print({{"labeled", corpus.labeled.size()},
             {"pretrain", corpus.pretrain.size()},
             {"injected_variants", corpus.injected.size()},
             {"out", synth_out}});
      return 0;
    }
    for (const auto& [name, cmd] : commands) {
      if (!*cmd) continue;
      const ExperimentConfig config = flags[name].resolve();
      if (name == "pipeline") {
        const auto metrics = soundmlm::run_pipeline(config);
        nlohmann::json summary = metrics;
        summary.erase("per_example");
        summary.erase("pretrain");
        summary.erase("finetune");
        print(summary);
        return 0;
      }
      config.validate();
      nlohmann::json result;
      if (name == "build-vocab") result = soundmlm::run_build_vocab(config);
      if (name == "pretrain") result = soundmlm::run_pretrain(config, dump_batch);
      if (name == "finetune") result = soundmlm::run_finetune(config);
      if (name == "eval") result = soundmlm::run_eval(config, false);
      if (name == "attack") result = soundmlm::run_eval(config, true);
      if (name == "explain") result = soundmlm::run_explain(config);
      soundmlm::write_manifest(config, name);
      result.erase("per_example");
      result.erase("predictions");
      print(result);
      return 0;
    }
  } catch (const soundmlm::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return soundmlm::exit_code_for(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}
