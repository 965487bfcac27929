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

#ifndef SOUNDMLM_MODEL_H_
#define SOUNDMLM_MODEL_H_

#include <Eigen/Core>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "soundmlm/common.h"
#include "soundmlm/encoding.h"

namespace soundmlm {

template <typename T>
using Matrix = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct EncoderConfig {
  int vocab_size = 0;
  int hidden_dim = 64;
  int num_layers = 2;
  int num_heads = 4;
  int ff_dim = 128;
  int max_len = kDefaultMaxLen;
  int num_segments = 2;
  double dropout_rate = 0.1;
  // 0 means no classification head.
  int num_classes = 0;
  // Share the MLM output projection with the token embedding table.
  bool tie_mlm_weights = true;

  // Throws kInvalidArgument.
  void validate() const;
  friend bool operator==(const EncoderConfig&, const EncoderConfig&) = default;
};

template <typename T>
struct LayerParams {
  Matrix<T> wq, wk, wv, wo;  // hidden x hidden
  Matrix<T> bq, bk, bv, bo;  // 1 x hidden
  Matrix<T> ln1_gamma, ln1_beta;
  Matrix<T> w1;  // hidden x ff
  Matrix<T> b1;
  Matrix<T> w2;  // ff x hidden
  Matrix<T> b2;
  Matrix<T> ln2_gamma, ln2_beta;
};

// All trainable tensors. Gradients use the same type.
template <typename T>
struct BasicParameters {
  EncoderConfig config;
  Matrix<T> token_embedding;     // vocab x hidden
  Matrix<T> position_embedding;  // max_len x hidden
  Matrix<T> segment_embedding;   // segments x hidden
  Matrix<T> embedding_ln_gamma, embedding_ln_beta;
  std::vector<LayerParams<T>> layers;
  Matrix<T> mlm_weight;  // hidden x vocab; empty when tied
  Matrix<T> mlm_bias;    // 1 x vocab
  Matrix<T> classifier_weight;  // hidden x classes; empty without a head
  Matrix<T> classifier_bias;

  // Zero tensors with the shapes implied by `config`.
  static BasicParameters zeros(const EncoderConfig& config);
  // Seeded normal initialisation; layer-norm scales start at 1.
  static BasicParameters initialize(const EncoderConfig& config, uint64_t seed);

  // Visits (name, tensor) in a fixed order. Empty tensors are skipped.
  void for_each(const std::function<void(const std::string&, Matrix<T>&)>& f);
  void for_each(
      const std::function<void(const std::string&, const Matrix<T>&)>& f) const;

  void set_zero();
  std::size_t num_values() const;
  bool all_finite() const;

  // Adds or replaces the classification head (seeded init).
  void reset_classifier(int num_classes, uint64_t seed);

  template <typename U>
  BasicParameters<U> cast() const;
};

using Parameters = BasicParameters<float>;

// Read-only view of one sequence.
struct SequenceView {
  std::span<const TokenId> ids;
  std::span<const int> segments;
  std::span<const int> attention_mask;

  static SequenceView of(const EncodedInput& input) {
    return {input.ids, input.segments, input.attention_mask};
  }
};

// Hidden states (seq_len x hidden) in eval mode. Throws kShapeMismatch.
template <typename T>
Matrix<T> forward(const BasicParameters<T>& params, const SequenceView& input);

template <typename T>
Matrix<T> forward(const BasicParameters<T>& params, const EncodedInput& input) {
  return forward(params, SequenceView::of(input));
}

// Full-vocabulary logits for every position of every row.
template <typename T>
std::vector<Matrix<T>> mlm_logits(const BasicParameters<T>& params,
                                  const MaskedBatch& batch);

// Mean negative log-likelihood over all non-ignored labels of the batch.
// Throws kNoMaskedPositions.
template <typename T>
double mlm_loss(const BasicParameters<T>& params, const MaskedBatch& batch);

// Same reduction applied to precomputed logits (rows x vocab per sequence).
template <typename T>
double mlm_loss_from_logits(std::span<const Matrix<T>> logits,
                            const std::vector<std::vector<TokenId>>& labels);

// Class probabilities from the position-0 hidden state.
template <typename T>
std::vector<double> classify(const BasicParameters<T>& params,
                             const SequenceView& input);

template <typename T>
std::vector<double> classify(const BasicParameters<T>& params,
                             const EncodedInput& input) {
  return classify(params, SequenceView::of(input));
}

// One example for either objective: MLM uses `labels`, classification uses
// `class_label` and reads position 0.
struct TrainingExample {
  std::vector<TokenId> ids;
  std::vector<int> segments;
  std::vector<int> attention_mask;
  std::vector<TokenId> labels;
  int class_label = -1;

  static TrainingExample for_classification(const EncodedInput& input,
                                            int label);
  // Splits every row of a masked batch into its own example.
  static std::vector<TrainingExample> from_masked_batch(const MaskedBatch& batch);
};

enum class Objective { kMaskedLm, kClassify };

// Dropout randomness for one training pass; nullptr means eval mode.
struct DropoutContext {
  double rate = 0.0;
  Rng* rng = nullptr;
};

struct LossTerms {
  double loss_sum = 0.0;  // summed NLL over the predicted positions
  int count = 0;          // number of predicted positions
};

// Loss of one example and, when `grads` is non-null, accumulation of
// d(loss_sum * grad_scale)/d(params) into `grads`.
template <typename T>
LossTerms example_loss_and_gradient(const BasicParameters<T>& params,
                                    const TrainingExample& example,
                                    Objective objective,
                                    BasicParameters<T>* grads, T grad_scale,
                                    DropoutContext dropout = {});

struct OptimizerConfig {
  double learning_rate = 3e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double weight_decay = 0.0;
  double clip_norm = 1.0;  // global gradient norm; 0 disables
  int batch_size = 16;
  int epochs = 1;
  uint64_t seed = 0;
  int threads = 0;  // 0 = hardware concurrency
};

struct TrainResult {
  std::vector<double> step_losses;
  std::vector<double> epoch_losses;
  int steps = 0;
};

using EpochCallback = std::function<void(int epoch, const Parameters& params)>;

// Adam with bias correction over shuffled mini-batches. Per-example
// gradients are summed in example order, so results do not depend on the
// thread count. Throws kDivergenceDetected on a non-finite loss.
TrainResult train(Parameters& params, std::span<const TrainingExample> data,
                  Objective objective, const OptimizerConfig& config,
                  const EpochCallback& on_epoch_end = {});

// Adam state that survives between calls to `step`.
class AdamOptimizer {
 public:
  AdamOptimizer(const Parameters& params, const OptimizerConfig& config);

  void step(Parameters& params, Parameters& grads);
  long steps_taken() const { return t_; }

 private:
  OptimizerConfig config_;
  Parameters m_;
  Parameters v_;
  long t_ = 0;
};

}  // namespace soundmlm

#endif  // SOUNDMLM_MODEL_H_
