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

#ifndef SOUNDMLM_TESTS_GRADIENT_CHECK_H_
#define SOUNDMLM_TESTS_GRADIENT_CHECK_H_

#include <algorithm>
#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "soundmlm/model.h"

namespace soundmlm::testing {

// Micro encoder used by the finite-difference checks.
inline EncoderConfig micro_config(bool tied = true) {
  EncoderConfig c;
  c.vocab_size = 20;
  c.hidden_dim = 8;
  c.num_layers = 1;
  c.num_heads = 1;
  c.ff_dim = 16;
  c.max_len = 6;
  c.dropout_rate = 0.0;
  c.num_classes = 3;
  c.tie_mlm_weights = tied;
  return c;
}

// Random non-degenerate values everywhere, including biases and norms.
inline BasicParameters<double> random_micro_params(const EncoderConfig& c,
                                                   uint64_t seed) {
  auto p = BasicParameters<double>::initialize(c, seed);
  Rng rng(seed + 1);
  p.for_each([&rng](const std::string& name, Matrix<double>& m) {
    const bool is_gamma = name.find("gamma") != std::string::npos;
    for (Eigen::Index i = 0; i < m.size(); ++i) {
      m.data()[i] = (is_gamma ? 1.0 : 0.0) + 0.3 * rng.normal();
    }
  });
  return p;
}

// Two examples sharing the parameters: one MLM row, one classification row.
struct GradCheckData {
  TrainingExample mlm;
  TrainingExample cls;
};

inline GradCheckData micro_examples(bool with_padding) {
  GradCheckData d;
  d.mlm.ids = {7, 4, 12, 3, 4, 19};
  d.mlm.segments = {0, 0, 0, 0, 1, 1};
  d.mlm.attention_mask = {1, 1, 1, 1, 1, with_padding ? 0 : 1};
  d.mlm.labels = {kIgnoreLabel, 9, kIgnoreLabel, kIgnoreLabel, 15, kIgnoreLabel};
  d.cls.ids = {2, 8, 11, 3, 6, 0};
  d.cls.segments = {0, 0, 0, 0, 1, 1};
  d.cls.attention_mask = {1, 1, 1, 1, 1, with_padding ? 0 : 1};
  d.cls.class_label = 1;
  return d;
}

struct GradCheckReport {
  // Worst relative error per tensor name.
  std::map<std::string, double> max_rel_error;
  double overall = 0.0;
};

// Central finite differences against the analytic gradient of
// (sum of MLM NLL) + (classification NLL). Denominators are floored at
// `floor` so elements whose true gradient is ~0 compare absolutely.
inline GradCheckReport check_gradients(BasicParameters<double> params,
                                       const GradCheckData& data, double eps,
                                       double floor, uint64_t dropout_seed = 0,
                                       double dropout_rate = 0.0) {
  auto loss = [&](const BasicParameters<double>& p,
                  BasicParameters<double>* grads) {
    Rng rng_a(dropout_seed), rng_b(dropout_seed + 7);
    DropoutContext da{dropout_rate, dropout_rate > 0 ? &rng_a : nullptr};
    DropoutContext db{dropout_rate, dropout_rate > 0 ? &rng_b : nullptr};
    const double a = example_loss_and_gradient<double>(
                         p, data.mlm, Objective::kMaskedLm, grads, 1.0, da)
                         .loss_sum;
    const double b = example_loss_and_gradient<double>(
                         p, data.cls, Objective::kClassify, grads, 1.0, db)
                         .loss_sum;
    return a + b;
  };
  auto analytic = BasicParameters<double>::zeros(params.config);
  loss(params, &analytic);

  std::vector<Matrix<double>*> values;
  std::vector<std::string> names;
  params.for_each([&](const std::string& name, Matrix<double>& m) {
    values.push_back(&m);
    names.push_back(name);
  });
  std::vector<const Matrix<double>*> grads;
  analytic.for_each([&](const std::string&, const Matrix<double>& m) {
    grads.push_back(&m);
  });

  GradCheckReport report;
  for (std::size_t t = 0; t < values.size(); ++t) {
    double worst = 0.0;
    for (Eigen::Index i = 0; i < values[t]->size(); ++i) {
      double& x = values[t]->data()[i];
      const double saved = x;
      x = saved + eps;
      const double up = loss(params, nullptr);
      x = saved - eps;
      const double down = loss(params, nullptr);
      x = saved;
      const double numeric = (up - down) / (2.0 * eps);
      const double a = grads[t]->data()[i];
      const double denom = std::max({std::abs(a), std::abs(numeric), floor});
      worst = std::max(worst, std::abs(a - numeric) / denom);
    }
    report.max_rel_error[names[t]] = worst;
    report.overall = std::max(report.overall, worst);
  }
  return report;
}

}  // namespace soundmlm::testing

#endif  // SOUNDMLM_TESTS_GRADIENT_CHECK_H_
