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

#include "soundmlm/metrics.h"

#include <boost/math/distributions/students_t.hpp>
#include <cmath>
#include <map>

#include "soundmlm/common.h"

namespace soundmlm {
namespace {

void check_pair(std::span<const int> predictions, std::span<const int> labels) {
  if (predictions.empty()) throw Error(ErrorCode::kEmptyInput, "no predictions");
  if (predictions.size() != labels.size()) {
    throw Error(ErrorCode::kShapeMismatch, "predictions/labels length differ");
  }
}

}  // namespace

double accuracy(std::span<const int> predictions, std::span<const int> labels) {
  check_pair(predictions, labels);
  std::size_t hits = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) hits += predictions[i] == labels[i];
  return static_cast<double>(hits) / static_cast<double>(labels.size());
}

double macro_f1(std::span<const int> predictions, std::span<const int> labels) {
  check_pair(predictions, labels);
  struct Counts {
    long tp = 0, fp = 0, fn = 0;
  };
  std::map<int, Counts> per_class;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (predictions[i] == labels[i]) {
      ++per_class[labels[i]].tp;
    } else {
      ++per_class[predictions[i]].fp;
      ++per_class[labels[i]].fn;
    }
  }
  double sum = 0.0;
  for (const auto& [cls, c] : per_class) {
    sum += 2.0 * c.tp / static_cast<double>(2 * c.tp + c.fp + c.fn);
  }
  return sum / static_cast<double>(per_class.size());
}

double percentage_drop(double before, double after) {
  if (before == 0.0) return 0.0;
  return 100.0 * (before - after) / before;
}

TTestResult paired_t_test(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size() || a.size() < 2) {
    throw Error(ErrorCode::kInsufficientSamples,
                "paired t-test needs two equal-length samples of size >= 2");
  }
  const auto n = static_cast<double>(a.size());
  double mean = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) mean += a[i] - b[i];
  mean /= n;
  double ss = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i] - mean;
    ss += d * d;
  }
  const double sd = std::sqrt(ss / (n - 1.0));
  if (sd == 0.0 || sd <= 1e-15 * std::max(1.0, std::abs(mean))) {
    throw Error(ErrorCode::kZeroVariance, "all paired differences are equal");
  }
  TTestResult r;
  r.t = mean / (sd / std::sqrt(n));
  r.degrees_of_freedom = static_cast<int>(a.size()) - 1;
  boost::math::students_t dist(static_cast<double>(r.degrees_of_freedom));
  r.p_value = 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(r.t)));
  r.significant = r.p_value < 0.05;
  return r;
}

}  // namespace soundmlm
