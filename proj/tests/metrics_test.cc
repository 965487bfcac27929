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

#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "soundmlm/common.h"
#include "soundmlm/metrics.h"

namespace soundmlm {
namespace {

ErrorCode error_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::kInvalidArgument;
}

// Two-sided tail of Student's t by Simpson integration of the density.
double reference_two_sided_p(double t, int df) {
  const double v = df;
  const double c = std::tgamma((v + 1) / 2) / (std::sqrt(v * M_PI) * std::tgamma(v / 2));
  auto f = [&](double x) { return c * std::pow(1 + x * x / v, -(v + 1) / 2); };
  const int n = 20000;
  const double h = std::abs(t) / n;
  double s = f(0) + f(std::abs(t));
  for (int i = 1; i < n; ++i) s += (i % 2 ? 4 : 2) * f(i * h);
  return 1.0 - 2.0 * s * h / 3.0;
}

TEST(Accuracy, Basics) {
  const std::vector<int> p = {0, 1, 1, 2}, y = {0, 1, 2, 2};
  EXPECT_DOUBLE_EQ(accuracy(p, y), 0.75);
  EXPECT_EQ(error_of([] { accuracy(std::vector<int>{}, std::vector<int>{}); }), ErrorCode::kEmptyInput);
  EXPECT_EQ(error_of([] { accuracy(std::vector<int>{1}, std::vector<int>{1, 2}); }),
            ErrorCode::kShapeMismatch);
}

TEST(MacroF1, PerfectAndDegenerate) {
  const std::vector<int> y = {0, 1, 2, 1};
  EXPECT_DOUBLE_EQ(macro_f1(y, y), 1.0);
  const std::vector<int> single = {1, 1, 1};
  EXPECT_DOUBLE_EQ(macro_f1(single, single), 1.0);
  EXPECT_EQ(error_of([] { macro_f1(std::vector<int>{}, std::vector<int>{}); }), ErrorCode::kEmptyInput);
}

TEST(MacroF1, ThreeClassHandCase) {
  // Per-class F1: 2/3, 2/3, 1/2.
  const std::vector<int> p = {0, 0, 1, 1, 2, 2, 0, 1};
  const std::vector<int> y = {0, 1, 1, 1, 2, 0, 0, 2};
  EXPECT_NEAR(macro_f1(p, y), 11.0 / 18.0, 1e-12);
}

TEST(MacroF1, ClassOnlyInPredictionsCounts) {
  const std::vector<int> p = {0, 2}, y = {0, 0};
  // Class 0: P=1, R=1/2, F1=2/3; class 2: F1=0.
  EXPECT_NEAR(macro_f1(p, y), (2.0 / 3.0) / 2.0, 1e-12);
}

TEST(PercentageDrop, TableRow) {
  EXPECT_NEAR(percentage_drop(0.6787, 0.3793), 44.11, 0.01);
  EXPECT_EQ(percentage_drop(0.0, 0.0), 0.0);
  EXPECT_DOUBLE_EQ(percentage_drop(0.5, 0.5), 0.0);
}

TEST(PairedTTest, FivePairHandCase) {
  const std::vector<double> a = {5, 7, 6, 9, 8}, b = {3, 6, 6, 6, 5};
  // d = [2,1,0,3,3]: mean 1.8, sample variance 1.7.
  const double t = 1.8 / std::sqrt(1.7 / 5.0);
  const TTestResult r = paired_t_test(a, b);
  EXPECT_NEAR(r.t, t, 1e-12);
  EXPECT_EQ(r.degrees_of_freedom, 4);
  EXPECT_NEAR(r.p_value, reference_two_sided_p(t, 4), 1e-6);
  EXPECT_TRUE(r.significant);
  const TTestResult swapped = paired_t_test(b, a);
  EXPECT_NEAR(swapped.t, -t, 1e-12);
  EXPECT_NEAR(swapped.p_value, r.p_value, 1e-12);
}

TEST(PairedTTest, NotSignificant) {
  const std::vector<double> a = {1.0, 2.0, 3.0, 4.0}, b = {1.5, 1.5, 3.5, 3.5};
  const TTestResult r = paired_t_test(a, b);
  EXPECT_NEAR(r.p_value, reference_two_sided_p(r.t, 3), 1e-6);
  EXPECT_FALSE(r.significant);
}

TEST(PairedTTest, Errors) {
  const std::vector<double> a = {1, 2, 3, 4};
  EXPECT_EQ(error_of([&] { paired_t_test(a, a); }), ErrorCode::kZeroVariance);
  const std::vector<double> b = {0, 1, 2, 3};
  EXPECT_EQ(error_of([&] { paired_t_test(a, b); }), ErrorCode::kZeroVariance);
  EXPECT_EQ(error_of([] { paired_t_test(std::vector<double>{1}, std::vector<double>{2}); }),
            ErrorCode::kInsufficientSamples);
  EXPECT_EQ(error_of([&] { paired_t_test(a, std::vector<double>{1, 2}); }),
            ErrorCode::kInsufficientSamples);
}

}  // namespace
}  // namespace soundmlm
