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

#ifndef SOUNDMLM_CHECKPOINT_H_
#define SOUNDMLM_CHECKPOINT_H_

#include <string>
#include <vector>

#include "json.hpp"
#include "soundmlm/model.h"

namespace soundmlm {

// Container layout: the 5 magic bytes "PFCK1", a little-endian uint64 byte
// length, that many bytes of UTF-8 JSON metadata (including a tensor
// directory with name/shape/byte offset), then raw little-endian float32
// tensor data in directory order.
inline constexpr char kCheckpointMagic[] = "PFCK1";
inline constexpr int kCheckpointVersion = 1;

struct NamedTensor {
  std::string name;
  int rows = 0;
  int cols = 0;
  std::vector<float> values;  // row-major
};

struct Container {
  nlohmann::json metadata;  // user metadata ("kind", "config", "extra", ...)
  std::vector<NamedTensor> tensors;
};

std::string encode_container(const Container& container);
// Throws kCorruptCheckpoint or kVersionMismatch.
Container decode_container(const std::string& bytes);

void write_container(const std::string& path, const Container& container);
Container read_container(const std::string& path);

nlohmann::json config_to_json(const EncoderConfig& config);
EncoderConfig config_from_json(const nlohmann::json& j);

struct LoadedCheckpoint {
  Parameters params;
  nlohmann::json extra;
};

void save_checkpoint(const Parameters& params, const std::string& path,
                     const nlohmann::json& extra = nlohmann::json::object());
LoadedCheckpoint load_checkpoint(const std::string& path);

// Debug dump of a masked batch (ids, labels, segments, mask as float32).
void dump_batch(const MaskedBatch& batch, const std::string& path);

}  // namespace soundmlm

#endif  // SOUNDMLM_CHECKPOINT_H_
