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

#include "soundmlm/config.h"

#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>

#include "soundmlm/common.h"

namespace soundmlm {
namespace {

[[noreturn]] void config_error(const std::string& msg) {
  throw Error(ErrorCode::kConfigError, msg);
}

std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

int parse_int(const std::string& key, const std::string& v) {
  int out = 0;
  auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size()) {
    config_error(key + ": expected an integer, got '" + v + "'");
  }
  return out;
}

uint64_t parse_u64(const std::string& key, const std::string& v) {
  uint64_t out = 0;
  auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size()) {
    config_error(key + ": expected an unsigned integer, got '" + v + "'");
  }
  return out;
}

double parse_double(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const double out = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return out;
  } catch (const std::exception&) {
    config_error(key + ": expected a number, got '" + v + "'");
  }
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  config_error(key + ": expected true/false, got '" + v + "'");
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

struct Field {
  std::function<std::string(const ExperimentConfig&)> get;
  std::function<void(ExperimentConfig&, const std::string&, const std::string&)> set;
};

template <typename M>
Field string_field(M ExperimentConfig::*member) {
  return {[member](const ExperimentConfig& c) { return c.*member; },
          [member](ExperimentConfig& c, const std::string&, const std::string& v) {
            c.*member = v;
          }};
}

Field int_field(int ExperimentConfig::*member) {
  return {[member](const ExperimentConfig& c) { return std::to_string(c.*member); },
          [member](ExperimentConfig& c, const std::string& k, const std::string& v) {
            c.*member = parse_int(k, v);
          }};
}

Field double_field(double ExperimentConfig::*member) {
  return {[member](const ExperimentConfig& c) { return format_double(c.*member); },
          [member](ExperimentConfig& c, const std::string& k, const std::string& v) {
            c.*member = parse_double(k, v);
          }};
}

Field bool_field(bool ExperimentConfig::*member) {
  return {[member](const ExperimentConfig& c) { return std::string(c.*member ? "true" : "false"); },
          [member](ExperimentConfig& c, const std::string& k, const std::string& v) {
            c.*member = parse_bool(k, v);
          }};
}

const std::map<std::string, Field>& fields() {
  static const std::map<std::string, Field> table = [] {
    std::map<std::string, Field> t;
    t["task"] = string_field(&ExperimentConfig::task);
    t["flavor"] = {[](const ExperimentConfig& c) { return std::string(flavor_name(c.flavor)); },
                   [](ExperimentConfig& c, const std::string&, const std::string& v) {
                     c.flavor = parse_flavor(v);
                   }};
    t["output_dir"] = string_field(&ExperimentConfig::output_dir);
    t["train_path"] = string_field(&ExperimentConfig::train_path);
    t["dev_path"] = string_field(&ExperimentConfig::dev_path);
    t["test_path"] = string_field(&ExperimentConfig::test_path);
    t["pretrain_corpus_path"] = string_field(&ExperimentConfig::pretrain_corpus_path);
    t["dict_path"] = string_field(&ExperimentConfig::dict_path);
    t["vocab_path"] = string_field(&ExperimentConfig::vocab_path);
    t["build_vocab"] = bool_field(&ExperimentConfig::build_vocab);
    t["vocab_size"] = int_field(&ExperimentConfig::vocab_size);
    t["hidden_dim"] = int_field(&ExperimentConfig::hidden_dim);
    t["num_layers"] = int_field(&ExperimentConfig::num_layers);
    t["num_heads"] = int_field(&ExperimentConfig::num_heads);
    t["ff_dim"] = int_field(&ExperimentConfig::ff_dim);
    t["max_len"] = int_field(&ExperimentConfig::max_len);
    t["dropout"] = double_field(&ExperimentConfig::dropout);
    t["pretrain"] = bool_field(&ExperimentConfig::pretrain);
    t["pretrain_epochs"] = int_field(&ExperimentConfig::pretrain_epochs);
    t["finetune_epochs"] = int_field(&ExperimentConfig::finetune_epochs);
    t["pretrain_learning_rate"] = double_field(&ExperimentConfig::pretrain_learning_rate);
    t["finetune_learning_rate"] = double_field(&ExperimentConfig::finetune_learning_rate);
    t["batch_size"] = int_field(&ExperimentConfig::batch_size);
    t["weight_decay"] = double_field(&ExperimentConfig::weight_decay);
    t["clip_norm"] = double_field(&ExperimentConfig::clip_norm);
    t["mask_rate"] = double_field(&ExperimentConfig::mask_rate);
    t["select_best_dev"] = bool_field(&ExperimentConfig::select_best_dev);
    t["seed"] = {[](const ExperimentConfig& c) { return std::to_string(c.seed); },
                 [](ExperimentConfig& c, const std::string& k, const std::string& v) {
                   c.seed = parse_u64(k, v);
                 }};
    t["attack"] = bool_field(&ExperimentConfig::attack);
    t["candidate_budget"] = int_field(&ExperimentConfig::candidate_budget);
    t["max_words_perturbed"] = int_field(&ExperimentConfig::max_words_perturbed);
    t["explain"] = bool_field(&ExperimentConfig::explain);
    t["explain_count"] = int_field(&ExperimentConfig::explain_count);
    t["shap_permutations"] = int_field(&ExperimentConfig::shap_permutations);
    t["exact_threshold"] = int_field(&ExperimentConfig::exact_threshold);
    t["threads"] = int_field(&ExperimentConfig::threads);
    return t;
  }();
  return table;
}

}  // namespace

const std::vector<std::string>& ExperimentConfig::keys() {
  static const std::vector<std::string> k = [] {
    std::vector<std::string> out;
    for (const auto& [name, field] : fields()) out.push_back(name);
    return out;
  }();
  return k;
}

void ExperimentConfig::set(const std::string& key, const std::string& value) {
  auto it = fields().find(key);
  if (it == fields().end()) config_error("unknown config key '" + key + "'");
  try {
    it->second.set(*this, key, value);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kConfigError) throw;
    config_error(key + ": " + e.what());
  }
}

std::string ExperimentConfig::get(const std::string& key) const {
  auto it = fields().find(key);
  if (it == fields().end()) config_error("unknown config key '" + key + "'");
  return it->second.get(*this);
}

ExperimentConfig ExperimentConfig::parse(std::string_view text) {
  ExperimentConfig config;
  std::istringstream in{std::string(text)};
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) {
      config_error("config line " + std::to_string(line_no) + ": expected key=value");
    }
    config.set(trim(t.substr(0, eq)), trim(t.substr(eq + 1)));
  }
  return config;
}

ExperimentConfig ExperimentConfig::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) config_error("cannot open config file " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return parse(buf.str());
}

std::string ExperimentConfig::canonical_text() const {
  std::string out;
  for (const auto& [name, field] : fields()) out += name + "=" + field.get(*this) + "\n";
  return out;
}

std::string ExperimentConfig::resolved_vocab_path() const {
  if (!vocab_path.empty()) return vocab_path;
  return (std::filesystem::path(output_dir) / "vocab.txt").string();
}

EncoderConfig ExperimentConfig::encoder_config(int vocab, int num_classes) const {
  EncoderConfig c;
  c.vocab_size = vocab;
  c.hidden_dim = hidden_dim;
  c.num_layers = num_layers;
  c.num_heads = num_heads;
  c.ff_dim = ff_dim;
  c.max_len = max_len;
  c.dropout_rate = dropout;
  c.num_classes = num_classes;
  return c;
}

OptimizerConfig ExperimentConfig::optimizer_config(bool pretraining) const {
  OptimizerConfig o;
  o.learning_rate = pretraining ? pretrain_learning_rate : finetune_learning_rate;
  o.weight_decay = weight_decay;
  o.clip_norm = clip_norm;
  o.batch_size = batch_size;
  o.epochs = pretraining ? pretrain_epochs : finetune_epochs;
  o.seed = derive_seed(seed, pretraining ? 1 : 2);
  o.threads = threads;
  return o;
}

void ExperimentConfig::validate() const {
  namespace fs = std::filesystem;
  if (!(mask_rate >= 0.0 && mask_rate <= 1.0)) config_error("mask_rate must be in [0, 1]");
  if (!(dropout >= 0.0 && dropout < 1.0)) config_error("dropout must be in [0, 1)");
  if (hidden_dim <= 0 || num_heads <= 0 || hidden_dim % num_heads != 0) {
    config_error("hidden_dim must be a positive multiple of num_heads");
  }
  if (num_layers < 0 || ff_dim <= 0 || max_len <= 2 || batch_size <= 0 ||
      pretrain_epochs < 0 || finetune_epochs < 0 || candidate_budget <= 0 ||
      max_words_perturbed < 0 || shap_permutations <= 0 || exact_threshold < 0 ||
      explain_count < 0) {
    config_error("sizes, epochs and budgets must be positive");
  }
  if (!std::isfinite(pretrain_learning_rate) || !std::isfinite(finetune_learning_rate)) {
    config_error("learning rates must be finite");
  }
  auto require_file = [](const std::string& key, const std::string& path) {
    if (path.empty()) config_error(key + " is required");
    if (!fs::is_regular_file(path)) config_error(key + ": file not found: " + path);
  };
  require_file("train_path", train_path);
  require_file("dev_path", dev_path);
  require_file("test_path", test_path);
  if (!pretrain_corpus_path.empty()) require_file("pretrain_corpus_path", pretrain_corpus_path);
  if (!dict_path.empty()) require_file("dict_path", dict_path);
  if (!build_vocab) require_file("vocab_path", resolved_vocab_path());
}

}  // namespace soundmlm
