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

#include "soundmlm/pipeline.h"

#include <filesystem>
#include <fstream>
#include <iterator>
#include <optional>
#include <set>
#include <sstream>

#include "soundmlm/attack.h"
#include "soundmlm/checkpoint.h"
#include "soundmlm/classifier.h"
#include "soundmlm/dataset.h"
#include "soundmlm/encoding.h"
#include "soundmlm/explain.h"
#include "soundmlm/metrics.h"
#include "soundmlm/model.h"
#include "soundmlm/phonetics.h"

namespace soundmlm {
namespace fs = std::filesystem;

ArtifactPaths ArtifactPaths::for_config(const ExperimentConfig& config) {
  const fs::path dir(config.output_dir);
  ArtifactPaths p;
  p.vocab = config.resolved_vocab_path();
  p.pretrain_checkpoint = (dir / "pretrain.pfck").string();
  p.pretrain_metrics = (dir / "pretrain_metrics.json").string();
  p.finetune_checkpoint = (dir / "finetune.pfck").string();
  p.finetune_metrics = (dir / "finetune_metrics.json").string();
  p.metrics = (dir / "metrics.json").string();
  p.report_html = (dir / "report.html").string();
  p.explanations = (dir / "explanations.json").string();
  p.manifest = (dir / "manifest.json").string();
  return p;
}

StageError::StageError(std::string stage, const Error& cause)
    : Error(cause.code(), "stage " + stage + ": " + cause.what()), stage_(std::move(stage)) {}

std::vector<std::string> sentence_words(std::string_view text) {
  return split_whitespace(to_lower_ascii(text));
}

namespace {

// Converts library errors into stage-tagged ones; other exceptions pass.
template <typename F>
auto in_stage(const std::string& stage, F&& body) {
  try {
    return body();
  } catch (const StageError&) {
    throw;
  } catch (const Error& e) {
    throw StageError(stage, e);
  } catch (const fs::filesystem_error& e) {
    throw StageError(stage, Error(ErrorCode::kIoError, e.what()));
  }
}

void write_json(const std::string& path, const nlohmann::json& j) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIoError, "cannot write " + path);
  out << j.dump(2) << '\n';
}

void ensure_output_dir(const ExperimentConfig& config) {
  fs::create_directories(config.output_dir);
}

bool pretraining_enabled(const ExperimentConfig& config) {
  return config.pretrain && config.flavor != Flavor::kVC;
}

Vocab load_vocab(const ExperimentConfig& config) {
  const std::string path = config.resolved_vocab_path();
  if (!fs::is_regular_file(path)) {
    throw Error(ErrorCode::kConfigError, "vocabulary not found: " + path);
  }
  return Vocab::load(path);
}

SubstitutionDictionary load_dictionary(const ExperimentConfig& config) {
  return config.dict_path.empty() ? SubstitutionDictionary::default_dictionary()
                                  : SubstitutionDictionary::load(config.dict_path);
}

std::vector<std::string> pretrain_sentences(const ExperimentConfig& config) {
  if (!config.pretrain_corpus_path.empty()) return load_text_lines(config.pretrain_corpus_path);
  std::vector<std::string> out;
  for (const auto& e : load_dataset(config.train_path)) out.push_back(e.text);
  return out;
}

EncodedInput encode_for_classification(const Vocab& vocab, const std::string& text,
                                       const ExperimentConfig& config) {
  const auto words = sentence_words(text);
  if (words.empty()) throw Error(ErrorCode::kEmptySentence, "empty text in dataset");
  return build_sequence(vocab, words, config.flavor, true, {.max_len = config.max_len, .pad = false});
}

double dev_accuracy(const Parameters& params, const Vocab& vocab,
                    const std::vector<EncodedInput>& inputs, const std::vector<int>& labels,
                    int threads) {
  std::vector<int> predictions(inputs.size());
  parallel_for(
      inputs.size(),
      [&](std::size_t i) { predictions[i] = argmax(classify(params, inputs[i])); },
      threads);
  (void)vocab;
  return accuracy(predictions, labels);
}

struct FineTuned {
  Parameters params;
  LabelSet labels;
  Flavor flavor;
};

FineTuned load_finetuned(const ExperimentConfig& config) {
  const ArtifactPaths paths = ArtifactPaths::for_config(config);
  if (!fs::is_regular_file(paths.finetune_checkpoint)) {
    throw Error(ErrorCode::kConfigError,
                "fine-tuned checkpoint not found: " + paths.finetune_checkpoint);
  }
  LoadedCheckpoint loaded = load_checkpoint(paths.finetune_checkpoint);
  std::vector<std::string> names = loaded.extra.at("labels").get<std::vector<std::string>>();
  const Flavor flavor = parse_flavor(loaded.extra.at("flavor").get<std::string>());
  if (flavor != config.flavor) {
    throw Error(ErrorCode::kConfigError,
                "checkpoint flavor " + std::string(flavor_name(flavor)) +
                    " differs from configured " + std::string(flavor_name(config.flavor)));
  }
  return {std::move(loaded.params), LabelSet(std::move(names)), flavor};
}

std::vector<EvalExample> eval_examples(const std::vector<LabeledExample>& data,
                                       const LabelSet& labels) {
  std::vector<EvalExample> out;
  out.reserve(data.size());
  for (const auto& e : data) out.push_back({sentence_words(e.text), labels.index_of(e.label)});
  return out;
}

}  // namespace

nlohmann::json run_build_vocab(const ExperimentConfig& config) {
  return in_stage("build-vocab", [&] {
    ensure_output_dir(config);
    // Word texts plus the code token of every word, so both layouts share it.
    std::vector<std::string> corpus;
    auto add = [&corpus](const std::string& text) {
      const auto words = sentence_words(text);
      if (words.empty()) return;
      std::string codes;
      for (const auto& w : words) {
        if (auto c = soundex(w)) {
          if (!codes.empty()) codes.push_back(' ');
          codes += c->token_text();
        }
      }
      corpus.push_back(to_lower_ascii(text));
      if (!codes.empty()) corpus.push_back(std::move(codes));
    };
    for (const auto& e : load_dataset(config.train_path)) add(e.text);
    if (!config.pretrain_corpus_path.empty()) {
      for (const auto& line : load_text_lines(config.pretrain_corpus_path)) add(line);
    }
    const Vocab vocab = Vocab::build(corpus, config.vocab_size);
    const std::string path = config.resolved_vocab_path();
    if (fs::path(path).has_parent_path()) fs::create_directories(fs::path(path).parent_path());
    vocab.save(path);
    return nlohmann::json{{"stage", "build-vocab"},
                          {"vocab_size", vocab.size()},
                          {"corpus_lines", corpus.size()},
                          {"vocab_hash", file_hash(path)}};
  });
}

nlohmann::json run_pretrain(const ExperimentConfig& config, const std::string& dump_batch_path) {
  return in_stage("pretrain", [&] {
    ensure_output_dir(config);
    const ArtifactPaths paths = ArtifactPaths::for_config(config);
    nlohmann::json metrics = {{"stage", "pretrain"},
                              {"flavor", flavor_name(config.flavor)}};
    if (!pretraining_enabled(config)) {
      metrics["skipped"] = true;
      write_json(paths.pretrain_metrics, metrics);
      return metrics;
    }
    const Vocab vocab = load_vocab(config);
    const std::vector<std::string> sentences = pretrain_sentences(config);
    if (sentences.empty()) throw Error(ErrorCode::kEmptyDataset, "pre-training corpus is empty");

    const SequenceOptions seq{.max_len = config.max_len, .pad = false};
    const MaskingOptions masking{.rate = config.mask_rate};
    std::vector<TrainingExample> examples;
    std::vector<EncodedInput> dumped;
    long masked = 0;
    for (std::size_t i = 0; i < sentences.size(); ++i) {
      const std::string text = to_lower_ascii(sentences[i]);
      if (sentence_words(text).empty()) continue;
      const EncodedInput input = config.flavor == Flavor::kSMLM
                                     ? build_smlm_pretrain(vocab, text, seq)
                                     : build_samlm_pretrain(vocab, text, seq);
      const MaskedBatch batch =
          apply_mlm_mask(input, vocab.size(), masking, derive_seed(config.seed, 20, i));
      if (batch.num_masked() == 0) continue;
      masked += batch.num_masked();
      if (dumped.size() < 16) dumped.push_back(input);
      for (auto& e : TrainingExample::from_masked_batch(batch)) examples.push_back(std::move(e));
    }
    if (examples.empty()) {
      throw Error(ErrorCode::kNoMaskedPositions, "no pre-training sequence has a masked position");
    }
    if (!dump_batch_path.empty()) {
      dump_batch(mask_batch(dumped, vocab.size(), masking, derive_seed(config.seed, 20)),
                 dump_batch_path);
    }

    Parameters params =
        Parameters::initialize(config.encoder_config(vocab.size(), 0), derive_seed(config.seed, 10));
    const TrainResult result =
        train(params, examples, Objective::kMaskedLm, config.optimizer_config(true));
    save_checkpoint(params, paths.pretrain_checkpoint,
                    {{"stage", "pretrain"},
                     {"flavor", flavor_name(config.flavor)},
                     {"vocab_hash", file_hash(paths.vocab)}});
    metrics["sequences"] = examples.size();
    metrics["masked_positions"] = masked;
    metrics["steps"] = result.steps;
    metrics["epoch_losses"] = result.epoch_losses;
    metrics["checkpoint_hash"] = file_hash(paths.pretrain_checkpoint);
    write_json(paths.pretrain_metrics, metrics);
    return metrics;
  });
}

nlohmann::json run_finetune(const ExperimentConfig& config) {
  return in_stage("finetune", [&] {
    ensure_output_dir(config);
    const ArtifactPaths paths = ArtifactPaths::for_config(config);
    const Vocab vocab = load_vocab(config);
    const auto train_set = load_dataset(config.train_path);
    const auto dev_set = load_dataset(config.dev_path);
    const LabelSet labels = LabelSet::from_examples(train_set);

    std::vector<TrainingExample> examples;
    examples.reserve(train_set.size());
    for (const auto& e : train_set) {
      examples.push_back(TrainingExample::for_classification(
          encode_for_classification(vocab, e.text, config), labels.index_of(e.label)));
    }
    std::vector<EncodedInput> dev_inputs;
    std::vector<int> dev_labels;
    for (const auto& e : dev_set) {
      dev_inputs.push_back(encode_for_classification(vocab, e.text, config));
      dev_labels.push_back(labels.index_of(e.label));
    }

    Parameters params;
    bool from_pretrained = false;
    if (pretraining_enabled(config)) {
      if (!fs::is_regular_file(paths.pretrain_checkpoint)) {
        throw Error(ErrorCode::kConfigError,
                    "pre-trained checkpoint not found: " + paths.pretrain_checkpoint);
      }
      params = load_checkpoint(paths.pretrain_checkpoint).params;
      if (params.config.vocab_size != vocab.size()) {
        throw Error(ErrorCode::kShapeMismatch, "checkpoint vocabulary differs from " + paths.vocab);
      }
      params.config.dropout_rate = config.dropout;
      params.reset_classifier(labels.size(), derive_seed(config.seed, 30));
      from_pretrained = true;
    } else {
      params = Parameters::initialize(config.encoder_config(vocab.size(), labels.size()),
                                      derive_seed(config.seed, 10));
    }

    std::vector<double> dev_accuracies;
    std::optional<Parameters> best;
    int best_epoch = -1;
    double best_acc = -1.0;
    auto on_epoch = [&](int epoch, const Parameters& p) {
      const double acc = dev_accuracy(p, vocab, dev_inputs, dev_labels, config.threads);
      dev_accuracies.push_back(acc);
      if (acc > best_acc) {
        best_acc = acc;
        best_epoch = epoch;
        if (config.select_best_dev) best = p;
      }
    };
    const TrainResult result = train(params, examples, Objective::kClassify,
                                     config.optimizer_config(false),
                                     dev_inputs.empty() ? EpochCallback{} : EpochCallback(on_epoch));
    if (config.select_best_dev && best) params = std::move(*best);

    save_checkpoint(params, paths.finetune_checkpoint,
                    {{"stage", "finetune"},
                     {"flavor", flavor_name(config.flavor)},
                     {"labels", labels.names()},
                     {"best_epoch", best_epoch},
                     {"vocab_hash", file_hash(paths.vocab)}});
    nlohmann::json metrics = {{"stage", "finetune"},
                              {"flavor", flavor_name(config.flavor)},
                              {"from_pretrained", from_pretrained},
                              {"train_examples", examples.size()},
                              {"steps", result.steps},
                              {"epoch_losses", result.epoch_losses},
                              {"dev_accuracies", dev_accuracies},
                              {"best_epoch", best_epoch},
                              {"checkpoint_hash", file_hash(paths.finetune_checkpoint)}};
    write_json(paths.finetune_metrics, metrics);
    return metrics;
  });
}

nlohmann::json run_eval(const ExperimentConfig& config, bool with_attack) {
  return in_stage(with_attack ? "attack" : "eval", [&] {
    ensure_output_dir(config);
    const ArtifactPaths paths = ArtifactPaths::for_config(config);
    const Vocab vocab = load_vocab(config);
    const FineTuned model = load_finetuned(config);
    const auto test = eval_examples(load_dataset(config.test_path), model.labels);
    const EncoderClassifier classifier(model.params, vocab, model.flavor);

    nlohmann::json metrics;
    if (with_attack) {
      AttackConfig ac;
      ac.max_words_perturbed = config.max_words_perturbed;
      ac.candidate_budget = config.candidate_budget;
      ac.seed = derive_seed(config.seed, 40);
      ac.threads = config.threads;
      metrics = evaluate_robustness(classifier, test, load_dictionary(config), ac).to_json();
    } else {
      std::vector<int> predictions(test.size()), gold(test.size());
      parallel_for(
          test.size(),
          [&](std::size_t i) { predictions[i] = argmax(classifier.predict(test[i].words)); },
          config.threads);
      for (std::size_t i = 0; i < test.size(); ++i) gold[i] = test[i].label;
      metrics = {{"ba", accuracy(predictions, gold)},
                 {"bf1", macro_f1(predictions, gold)},
                 {"num_examples", test.size()},
                 {"predictions", predictions}};
    }
    metrics["stage"] = with_attack ? "attack" : "eval";
    metrics["flavor"] = flavor_name(config.flavor);
    metrics["seed"] = config.seed;
    metrics["labels"] = model.labels.names();
    write_json(paths.metrics, metrics);
    return metrics;
  });
}

nlohmann::json run_explain(const ExperimentConfig& config) {
  return in_stage("explain", [&] {
    ensure_output_dir(config);
    const ArtifactPaths paths = ArtifactPaths::for_config(config);
    const Vocab vocab = load_vocab(config);
    const FineTuned model = load_finetuned(config);
    const auto test = load_dataset(config.test_path);
    const EncoderClassifier classifier(model.params, vocab, model.flavor);

    nlohmann::json reports = nlohmann::json::array();
    const std::size_t count = std::min<std::size_t>(test.size(), static_cast<std::size_t>(config.explain_count));
    for (std::size_t i = 0; i < count; ++i) {
      const auto words = sentence_words(test[i].text);
      const int target = argmax(classifier.predict(words));
      const AttributionReport report =
          static_cast<int>(words.size()) <= config.exact_threshold
              ? shap_exact(classifier, words, target,
                           {.max_words = config.exact_threshold, .threads = config.threads})
              : shap_sampled(classifier, words, target, config.shap_permutations,
                             derive_seed(config.seed, 50, i));
      nlohmann::json j = report.to_json();
      j["target_label"] = model.labels.name_of(target);
      j["gold_label"] = test[i].label;
      reports.push_back(std::move(j));
      const std::string html = render_report(report, RenderFormat::kHtml);
      const std::string path =
          i == 0 ? paths.report_html
                 : (fs::path(config.output_dir) / ("report_" + std::to_string(i) + ".html")).string();
      std::ofstream out(path, std::ios::binary);
      if (!out) throw Error(ErrorCode::kIoError, "cannot write " + path);
      out << html;
    }
    nlohmann::json result = {{"stage", "explain"}, {"reports", std::move(reports)}};
    write_json(paths.explanations, result);
    return result;
  });
}

nlohmann::json run_pipeline(const ExperimentConfig& config) {
  in_stage("config", [&] {
    config.validate();
    return 0;
  });
  if (config.build_vocab) run_build_vocab(config);
  const nlohmann::json pretrain = run_pretrain(config);
  const nlohmann::json finetune = run_finetune(config);
  nlohmann::json metrics = run_eval(config, config.attack);
  if (config.explain) run_explain(config);
  metrics["pretrain"] = pretrain;
  metrics["finetune"] = finetune;
  write_json(ArtifactPaths::for_config(config).metrics, metrics);
  write_manifest(config, "pipeline");
  return metrics;
}

std::string file_hash(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIoError, "cannot read " + path);
  const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return hex64(fnv1a64(bytes));
}

nlohmann::json write_manifest(const ExperimentConfig& config, const std::string& command) {
  ensure_output_dir(config);
  const ArtifactPaths paths = ArtifactPaths::for_config(config);
  auto describe = [](const std::string& path) {
    nlohmann::json j = {{"path", path}};
    if (fs::is_regular_file(path)) {
      j["fnv1a64"] = file_hash(path);
      j["bytes"] = fs::file_size(path);
    } else {
      j["missing"] = true;
    }
    return j;
  };
  nlohmann::json inputs = nlohmann::json::object();
  inputs["train"] = describe(config.train_path);
  inputs["dev"] = describe(config.dev_path);
  inputs["test"] = describe(config.test_path);
  if (!config.pretrain_corpus_path.empty()) inputs["pretrain_corpus"] = describe(config.pretrain_corpus_path);
  inputs["dictionary"] = config.dict_path.empty()
                             ? nlohmann::json{{"bundled", hex64(fnv1a64(
                                                  SubstitutionDictionary::default_dictionary_text()))}}
                             : describe(config.dict_path);
  if (!config.build_vocab) inputs["vocab"] = describe(paths.vocab);

  nlohmann::json outputs = nlohmann::json::object();
  for (const std::string& p : {paths.vocab, paths.pretrain_checkpoint, paths.pretrain_metrics,
                               paths.finetune_checkpoint, paths.finetune_metrics, paths.metrics,
                               paths.report_html, paths.explanations}) {
    if (fs::is_regular_file(p)) outputs[fs::path(p).filename().string()] = file_hash(p);
  }
  const std::string canonical = config.canonical_text();
  nlohmann::json manifest = {
      {"version", kSoundmlmVersion},
      {"command", command},
      {"config_hash", hex64(fnv1a64(canonical))},
      {"config", canonical},
      {"seeds",
       {{"seed", config.seed},
        {"init", derive_seed(config.seed, 10)},
        {"pretrain_optimizer", derive_seed(config.seed, 1)},
        {"finetune_optimizer", derive_seed(config.seed, 2)},
        {"masking", derive_seed(config.seed, 20)},
        {"classifier_head", derive_seed(config.seed, 30)},
        {"attack", derive_seed(config.seed, 40)},
        {"explain", derive_seed(config.seed, 50)}}},
      {"inputs", std::move(inputs)},
      {"outputs", std::move(outputs)}};
  write_json(paths.manifest, manifest);
  return manifest;
}

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::kConfigError:
      return 2;
    case ErrorCode::kMalformedLine:
    case ErrorCode::kEmptyDataset:
    case ErrorCode::kRatioInvalid:
    case ErrorCode::kEmptySentence:
    case ErrorCode::kCorpusEmpty:
      return 3;
    case ErrorCode::kDivergenceDetected:
      return 4;
    default:
      return 1;
  }
}

}  // namespace soundmlm
