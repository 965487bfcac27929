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

#ifndef SOUNDMLM_PHONETICS_H_
#define SOUNDMLM_PHONETICS_H_

#include <optional>
#include <string>
#include <string_view>

namespace soundmlm {

// A SOUNDEX code: one uppercase Latin letter followed by three digits.
class PhoneticCode {
 public:
  // Throws Error(kInvalidArgument) unless `value` matches [A-Z][0-9]{3}.
  explicit PhoneticCode(std::string value);

  const std::string& str() const { return value_; }
  // Lowercased form, as fed to the subword tokenizer ("a200").
  std::string token_text() const;

  static bool is_valid(std::string_view value);

  friend bool operator==(const PhoneticCode&, const PhoneticCode&) = default;

 private:
  std::string value_;
};

// American SOUNDEX with the h/w rule. Non-letters are skipped; returns
// nullopt (not encodable) when the word has no Latin letter at all, e.g. a
// word written entirely in a native script.
std::optional<PhoneticCode> soundex(std::string_view word);

}  // namespace soundmlm

#endif  // SOUNDMLM_PHONETICS_H_
