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

#ifndef SOUNDMLM_METRICS_H_
#define SOUNDMLM_METRICS_H_

#include <span>

namespace soundmlm {

// Fraction of equal entries. Throws kEmptyInput / kShapeMismatch.
double accuracy(std::span<const int> predictions, std::span<const int> labels);

// Unweighted mean of per-class F1 over classes that occur in either the
// predictions or the labels.
double macro_f1(std::span<const int> predictions, std::span<const int> labels);

// 100 * (before - after) / before; 0 when before == 0.
double percentage_drop(double before, double after);

struct TTestResult {
  double t = 0.0;
  int degrees_of_freedom = 0;
  double p_value = 1.0;  // two-sided
  bool significant = false;  // p < 0.05
};

// Paired t-test on a - b. Throws kInsufficientSamples (n < 2 or unequal
// lengths) and kZeroVariance (all differences equal).
TTestResult paired_t_test(std::span<const double> a, std::span<const double> b);

}  // namespace soundmlm

#endif  // SOUNDMLM_METRICS_H_
