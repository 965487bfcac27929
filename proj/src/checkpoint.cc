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

#include "soundmlm/checkpoint.h"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>

namespace soundmlm {
namespace {

constexpr std::size_t kMagicLen = 5;

void put_u32(std::string& out, uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

void put_u64(std::string& out, uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

uint32_t get_u32(const std::string& in, std::size_t pos) {
  uint32_t v = 0;
  for (int i = 0; i < 4; ++i) {
    v |= static_cast<uint32_t>(static_cast<unsigned char>(in[pos + i])) << (8 * i);
  }
  return v;
}

uint64_t get_u64(const std::string& in, std::size_t pos) {
  uint64_t v = 0;
  for (int i = 0; i < 8; ++i) {
    v |= static_cast<uint64_t>(static_cast<unsigned char>(in[pos + i])) << (8 * i);
  }
  return v;
}

[[noreturn]] void corrupt(const std::string& why) {
  throw Error(ErrorCode::kCorruptCheckpoint, why);
}

}  // namespace

std::string encode_container(const Container& container) {
  std::string data;
  nlohmann::json directory = nlohmann::json::array();
  for (const auto& t : container.tensors) {
    if (static_cast<std::size_t>(t.rows) * static_cast<std::size_t>(t.cols) !=
        t.values.size()) {
      throw Error(ErrorCode::kShapeMismatch, "tensor " + t.name + " shape/size");
    }
    directory.push_back({{"name", t.name},
                         {"shape", {t.rows, t.cols}},
                         {"offset", data.size()}});
    for (float f : t.values) put_u32(data, std::bit_cast<uint32_t>(f));
  }
  nlohmann::json meta = container.metadata;
  meta["format_version"] = kCheckpointVersion;
  meta["tensors"] = std::move(directory);
  meta["data_bytes"] = data.size();
  meta["data_checksum"] = hex64(fnv1a64(data));
  const std::string text = meta.dump();

  std::string out(kCheckpointMagic, kMagicLen);
  put_u64(out, text.size());
  out += text;
  out += data;
  return out;
}

Container decode_container(const std::string& bytes) {
  if (bytes.size() < kMagicLen + 8) corrupt("file too short");
  if (bytes.compare(0, 4, "PFCK") != 0) corrupt("bad magic");
  if (bytes.compare(0, kMagicLen, kCheckpointMagic, kMagicLen) != 0) {
    throw Error(ErrorCode::kVersionMismatch,
                "unsupported container version '" + bytes.substr(0, kMagicLen) + "'");
  }
  const uint64_t meta_len = get_u64(bytes, kMagicLen);
  const std::size_t data_start = kMagicLen + 8 + meta_len;
  if (meta_len > bytes.size() || data_start > bytes.size()) corrupt("truncated metadata");
  nlohmann::json meta;
  try {
    meta = nlohmann::json::parse(bytes.substr(kMagicLen + 8, meta_len));
  } catch (const nlohmann::json::exception& e) {
    corrupt(std::string("metadata is not JSON: ") + e.what());
  }
  try {
    if (meta.at("format_version").get<int>() != kCheckpointVersion) {
      throw Error(ErrorCode::kVersionMismatch,
                  "format_version " + meta.at("format_version").dump());
    }
    const std::string data = bytes.substr(data_start);
    if (data.size() != meta.at("data_bytes").get<std::size_t>()) {
      corrupt("tensor data length mismatch");
    }
    if (hex64(fnv1a64(data)) != meta.at("data_checksum").get<std::string>()) {
      corrupt("tensor data checksum mismatch");
    }
    Container out;
    for (const auto& entry : meta.at("tensors")) {
      NamedTensor t;
      t.name = entry.at("name").get<std::string>();
      t.rows = entry.at("shape").at(0).get<int>();
      t.cols = entry.at("shape").at(1).get<int>();
      const auto offset = entry.at("offset").get<std::size_t>();
      const std::size_t count =
          static_cast<std::size_t>(t.rows) * static_cast<std::size_t>(t.cols);
      if (t.rows < 0 || t.cols < 0 || offset + 4 * count > data.size()) {
        corrupt("tensor " + t.name + " out of bounds");
      }
      t.values.resize(count);
      for (std::size_t i = 0; i < count; ++i) {
        t.values[i] = std::bit_cast<float>(get_u32(data, offset + 4 * i));
      }
      out.tensors.push_back(std::move(t));
    }
    meta.erase("tensors");
    meta.erase("data_bytes");
    meta.erase("data_checksum");
    meta.erase("format_version");
    out.metadata = std::move(meta);
    return out;
  } catch (const nlohmann::json::exception& e) {
    corrupt(std::string("malformed metadata: ") + e.what());
  }
}

void write_container(const std::string& path, const Container& container) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIoError, "cannot write " + path);
  const std::string bytes = encode_container(container);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCode::kIoError, "write failed for " + path);
}

Container read_container(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIoError, "cannot open " + path);
  std::string bytes((std::istreambuf_iterator<char>(in)),
                    std::istreambuf_iterator<char>());
  return decode_container(bytes);
}

nlohmann::json config_to_json(const EncoderConfig& c) {
  return {{"vocab_size", c.vocab_size},     {"hidden_dim", c.hidden_dim},
          {"num_layers", c.num_layers},     {"num_heads", c.num_heads},
          {"ff_dim", c.ff_dim},             {"max_len", c.max_len},
          {"num_segments", c.num_segments}, {"dropout_rate", c.dropout_rate},
          {"num_classes", c.num_classes},   {"tie_mlm_weights", c.tie_mlm_weights}};
}

EncoderConfig config_from_json(const nlohmann::json& j) {
  EncoderConfig c;
  c.vocab_size = j.at("vocab_size").get<int>();
  c.hidden_dim = j.at("hidden_dim").get<int>();
  c.num_layers = j.at("num_layers").get<int>();
  c.num_heads = j.at("num_heads").get<int>();
  c.ff_dim = j.at("ff_dim").get<int>();
  c.max_len = j.at("max_len").get<int>();
  c.num_segments = j.at("num_segments").get<int>();
  c.dropout_rate = j.at("dropout_rate").get<double>();
  c.num_classes = j.at("num_classes").get<int>();
  c.tie_mlm_weights = j.at("tie_mlm_weights").get<bool>();
  return c;
}

void save_checkpoint(const Parameters& params, const std::string& path,
                     const nlohmann::json& extra) {
  Container c;
  c.metadata = {{"kind", "model"},
                {"config", config_to_json(params.config)},
                {"extra", extra}};
  params.for_each([&c](const std::string& name, const Matrix<float>& m) {
    NamedTensor t{name, static_cast<int>(m.rows()), static_cast<int>(m.cols()),
                  std::vector<float>(m.data(), m.data() + m.size())};
    c.tensors.push_back(std::move(t));
  });
  write_container(path, c);
}

LoadedCheckpoint load_checkpoint(const std::string& path) {
  Container c = read_container(path);
  EncoderConfig config;
  try {
    if (c.metadata.at("kind").get<std::string>() != "model") {
      corrupt("container does not hold a model");
    }
    config = config_from_json(c.metadata.at("config"));
    config.validate();
  } catch (const nlohmann::json::exception& e) {
    corrupt(std::string("bad model metadata: ") + e.what());
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kInvalidArgument) corrupt(e.what());
    throw;
  }
  LoadedCheckpoint out{Parameters::zeros(config),
                       c.metadata.value("extra", nlohmann::json::object())};
  std::size_t index = 0;
  out.params.for_each([&](const std::string& name, Matrix<float>& m) {
    if (index >= c.tensors.size()) corrupt("missing tensor " + name);
    const NamedTensor& t = c.tensors[index++];
    if (t.name != name || t.rows != m.rows() || t.cols != m.cols()) {
      corrupt("tensor directory mismatch at " + name);
    }
    std::memcpy(m.data(), t.values.data(), t.values.size() * sizeof(float));
  });
  if (index != c.tensors.size()) corrupt("unexpected extra tensors");
  return out;
}

void dump_batch(const MaskedBatch& batch, const std::string& path) {
  Container c;
  c.metadata = {{"kind", "masked_batch"},
                {"batch_size", batch.batch_size()},
                {"row_length", batch.row_length()}};
  auto add = [&](const std::string& name, const auto& rows) {
    NamedTensor t{name, batch.batch_size(), batch.row_length(), {}};
    for (const auto& row : rows) {
      for (auto v : row) t.values.push_back(static_cast<float>(v));
    }
    c.tensors.push_back(std::move(t));
  };
  add("input_ids", batch.input_ids);
  add("labels", batch.labels);
  add("segments", batch.segments);
  add("attention_mask", batch.attention_mask);
  write_container(path, c);
}

}  // namespace soundmlm
