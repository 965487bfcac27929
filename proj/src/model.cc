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

#include "soundmlm/model.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace soundmlm {
namespace {

constexpr double kLayerNormEps = 1e-5;

template <typename T>
using RowVector = Eigen::Matrix<T, 1, Eigen::Dynamic>;

template <typename T>
void fill_normal(Matrix<T>& m, Rng& rng, double stddev) {
  for (Eigen::Index i = 0; i < m.size(); ++i) {
    m.data()[i] = static_cast<T>(rng.normal() * stddev);
  }
}

double xavier(Eigen::Index fan_in, Eigen::Index fan_out) {
  return std::sqrt(2.0 / static_cast<double>(fan_in + fan_out));
}

// Visits tensors of a (possibly const) parameter set in canonical order.
template <typename P, typename F>
void visit_tensors(P& p, F&& f) {
  auto visit = [&f](const std::string& name, auto& m) {
    if (m.size() > 0) f(name, m);
  };
  visit("embeddings.token", p.token_embedding);
  visit("embeddings.position", p.position_embedding);
  visit("embeddings.segment", p.segment_embedding);
  visit("embeddings.ln_gamma", p.embedding_ln_gamma);
  visit("embeddings.ln_beta", p.embedding_ln_beta);
  for (std::size_t l = 0; l < p.layers.size(); ++l) {
    auto& layer = p.layers[l];
    const std::string prefix = "layer" + std::to_string(l) + ".";
    visit(prefix + "attention.wq", layer.wq);
    visit(prefix + "attention.bq", layer.bq);
    visit(prefix + "attention.wk", layer.wk);
    visit(prefix + "attention.bk", layer.bk);
    visit(prefix + "attention.wv", layer.wv);
    visit(prefix + "attention.bv", layer.bv);
    visit(prefix + "attention.wo", layer.wo);
    visit(prefix + "attention.bo", layer.bo);
    visit(prefix + "ln1_gamma", layer.ln1_gamma);
    visit(prefix + "ln1_beta", layer.ln1_beta);
    visit(prefix + "ffn.w1", layer.w1);
    visit(prefix + "ffn.b1", layer.b1);
    visit(prefix + "ffn.w2", layer.w2);
    visit(prefix + "ffn.b2", layer.b2);
    visit(prefix + "ln2_gamma", layer.ln2_gamma);
    visit(prefix + "ln2_beta", layer.ln2_beta);
  }
  visit("mlm.weight", p.mlm_weight);
  visit("mlm.bias", p.mlm_bias);
  visit("classifier.weight", p.classifier_weight);
  visit("classifier.bias", p.classifier_bias);
}

template <typename T>
std::vector<Matrix<T>*> tensor_list(BasicParameters<T>& p) {
  std::vector<Matrix<T>*> out;
  visit_tensors(p, [&out](const std::string&, Matrix<T>& m) { out.push_back(&m); });
  return out;
}

template <typename T>
std::vector<const Matrix<T>*> tensor_list(const BasicParameters<T>& p) {
  std::vector<const Matrix<T>*> out;
  visit_tensors(p, [&out](const std::string&, const Matrix<T>& m) {
    out.push_back(&m);
  });
  return out;
}

// ---------------------------------------------------------------------------
// Layer norm

template <typename T>
struct LayerNormCache {
  Matrix<T> xhat;
  std::vector<T> inv_std;
};

template <typename T>
Matrix<T> layer_norm(const Matrix<T>& x, const Matrix<T>& gamma,
                     const Matrix<T>& beta, LayerNormCache<T>* cache) {
  const Eigen::Index n = x.rows();
  const Eigen::Index h = x.cols();
  Matrix<T> xhat(n, h);
  std::vector<T> inv(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) {
    const T mean = x.row(i).mean();
    const T var = (x.row(i).array() - mean).square().mean();
    const T inv_std = T(1) / std::sqrt(var + static_cast<T>(kLayerNormEps));
    xhat.row(i) = (x.row(i).array() - mean) * inv_std;
    inv[static_cast<std::size_t>(i)] = inv_std;
  }
  Matrix<T> y = (xhat.array().rowwise() * gamma.row(0).array()).rowwise() +
                beta.row(0).array();
  if (cache != nullptr) {
    cache->xhat = std::move(xhat);
    cache->inv_std = std::move(inv);
  }
  return y;
}

// Returns d(input); accumulates d(gamma), d(beta).
template <typename T>
Matrix<T> layer_norm_backward(const Matrix<T>& dy, const Matrix<T>& gamma,
                              const LayerNormCache<T>& cache,
                              Matrix<T>& dgamma, Matrix<T>& dbeta) {
  dgamma.row(0) += (dy.array() * cache.xhat.array()).colwise().sum().matrix();
  dbeta.row(0) += dy.colwise().sum();
  const Matrix<T> dxhat = dy.array().rowwise() * gamma.row(0).array();
  Matrix<T> dx(dy.rows(), dy.cols());
  const T inv_h = T(1) / static_cast<T>(dy.cols());
  for (Eigen::Index i = 0; i < dy.rows(); ++i) {
    const T mean_d = dxhat.row(i).sum() * inv_h;
    const T mean_dx = dxhat.row(i).dot(cache.xhat.row(i)) * inv_h;
    dx.row(i) = (dxhat.row(i).array() - mean_d -
                 cache.xhat.row(i).array() * mean_dx) *
                cache.inv_std[static_cast<std::size_t>(i)];
  }
  return dx;
}

// ---------------------------------------------------------------------------
// GELU (erf form)

template <typename T>
T gelu(T x) {
  return static_cast<T>(0.5) * x *
         (T(1) + std::erf(x * static_cast<T>(M_SQRT1_2)));
}

template <typename T>
T gelu_grad(T x) {
  const T cdf = static_cast<T>(0.5) * (T(1) + std::erf(x * static_cast<T>(M_SQRT1_2)));
  const T pdf = std::exp(static_cast<T>(-0.5) * x * x) *
                static_cast<T>(0.3989422804014327);
  return cdf + x * pdf;
}

// ---------------------------------------------------------------------------
// Dropout

template <typename T>
Matrix<T> dropout_mask(Eigen::Index rows, Eigen::Index cols,
                       const DropoutContext& dropout) {
  if (dropout.rng == nullptr || dropout.rate <= 0.0) return {};
  Matrix<T> mask(rows, cols);
  const T keep_scale = static_cast<T>(1.0 / (1.0 - dropout.rate));
  for (Eigen::Index i = 0; i < mask.size(); ++i) {
    mask.data()[i] = dropout.rng->uniform() < dropout.rate ? T(0) : keep_scale;
  }
  return mask;
}

template <typename T>
void apply_mask(Matrix<T>& x, const Matrix<T>& mask) {
  if (mask.size() > 0) x.array() *= mask.array();
}

// ---------------------------------------------------------------------------
// Encoder forward / backward

template <typename T>
struct LayerCache {
  Matrix<T> input;
  Matrix<T> q, k, v;
  std::vector<Matrix<T>> probs;  // per head, n x n
  Matrix<T> context;
  Matrix<T> attn_mask;
  LayerNormCache<T> ln1;
  Matrix<T> x1;
  Matrix<T> ff_pre;
  Matrix<T> ff_act;
  Matrix<T> ff_mask;
  LayerNormCache<T> ln2;
};

template <typename T>
struct ForwardCache {
  Matrix<T> embedding_mask;
  LayerNormCache<T> embedding_ln;
  std::vector<LayerCache<T>> layers;
};

template <typename T>
void check_input(const BasicParameters<T>& params, const SequenceView& in) {
  const auto& c = params.config;
  const std::size_t n = in.ids.size();
  if (n == 0 || in.segments.size() != n || in.attention_mask.size() != n) {
    throw Error(ErrorCode::kShapeMismatch,
                "ids/segments/attention_mask lengths disagree or are empty");
  }
  if (static_cast<int>(n) > c.max_len) {
    throw Error(ErrorCode::kShapeMismatch,
                "sequence length " + std::to_string(n) + " exceeds max_len " +
                    std::to_string(c.max_len));
  }
  bool any_attended = false;
  for (std::size_t i = 0; i < n; ++i) {
    if (in.ids[i] < 0 || in.ids[i] >= c.vocab_size) {
      throw Error(ErrorCode::kShapeMismatch,
                  "token id " + std::to_string(in.ids[i]) + " out of range");
    }
    if (in.segments[i] < 0 || in.segments[i] >= c.num_segments) {
      throw Error(ErrorCode::kShapeMismatch, "segment id out of range");
    }
    any_attended |= in.attention_mask[i] != 0;
  }
  if (!any_attended) {
    throw Error(ErrorCode::kShapeMismatch, "attention mask is all zero");
  }
}

template <typename T>
Matrix<T> encoder_forward(const BasicParameters<T>& p, const SequenceView& in,
                          ForwardCache<T>* cache,
                          const DropoutContext& dropout) {
  check_input(p, in);
  const auto& c = p.config;
  const Eigen::Index n = static_cast<Eigen::Index>(in.ids.size());
  const Eigen::Index h = c.hidden_dim;
  const int heads = c.num_heads;
  const Eigen::Index d = h / heads;
  const T scale = T(1) / std::sqrt(static_cast<T>(d));

  Matrix<T> emb(n, h);
  for (Eigen::Index i = 0; i < n; ++i) {
    emb.row(i) = p.token_embedding.row(in.ids[i]) + p.position_embedding.row(i) +
                 p.segment_embedding.row(in.segments[i]);
  }
  LayerNormCache<T> ln0;
  Matrix<T> x = layer_norm(emb, p.embedding_ln_gamma, p.embedding_ln_beta,
                           cache ? &ln0 : nullptr);
  Matrix<T> emb_mask = dropout_mask<T>(n, h, dropout);
  apply_mask(x, emb_mask);
  if (cache != nullptr) {
    cache->embedding_ln = std::move(ln0);
    cache->embedding_mask = std::move(emb_mask);
    cache->layers.resize(p.layers.size());
  }

  for (std::size_t l = 0; l < p.layers.size(); ++l) {
    const auto& layer = p.layers[l];
    Matrix<T> q = x * layer.wq;
    q.rowwise() += layer.bq.row(0);
    Matrix<T> k = x * layer.wk;
    k.rowwise() += layer.bk.row(0);
    Matrix<T> v = x * layer.wv;
    v.rowwise() += layer.bv.row(0);

    Matrix<T> context(n, h);
    std::vector<Matrix<T>> probs(static_cast<std::size_t>(heads));
    for (int hd = 0; hd < heads; ++hd) {
      Matrix<T> s = (q.middleCols(hd * d, d) * k.middleCols(hd * d, d).transpose()) * scale;
      for (Eigen::Index i = 0; i < n; ++i) {
        T mx = -std::numeric_limits<T>::infinity();
        for (Eigen::Index j = 0; j < n; ++j) {
          if (in.attention_mask[j] != 0) mx = std::max(mx, s(i, j));
        }
        T sum = 0;
        for (Eigen::Index j = 0; j < n; ++j) {
          const T e = in.attention_mask[j] != 0 ? std::exp(s(i, j) - mx) : T(0);
          s(i, j) = e;
          sum += e;
        }
        s.row(i) /= sum;
      }
      context.middleCols(hd * d, d).noalias() = s * v.middleCols(hd * d, d);
      probs[static_cast<std::size_t>(hd)] = std::move(s);
    }
    Matrix<T> attn = context * layer.wo;
    attn.rowwise() += layer.bo.row(0);
    Matrix<T> attn_mask = dropout_mask<T>(n, h, dropout);
    apply_mask(attn, attn_mask);

    LayerNormCache<T> ln1;
    Matrix<T> x1 = layer_norm<T>(x + attn, layer.ln1_gamma, layer.ln1_beta,
                                 cache ? &ln1 : nullptr);
    Matrix<T> ff_pre = x1 * layer.w1;
    ff_pre.rowwise() += layer.b1.row(0);
    Matrix<T> ff_act = ff_pre.unaryExpr([](T z) { return gelu(z); });
    Matrix<T> ff = ff_act * layer.w2;
    ff.rowwise() += layer.b2.row(0);
    Matrix<T> ff_mask = dropout_mask<T>(n, h, dropout);
    apply_mask(ff, ff_mask);
    LayerNormCache<T> ln2;
    Matrix<T> x2 = layer_norm<T>(x1 + ff, layer.ln2_gamma, layer.ln2_beta,
                                 cache ? &ln2 : nullptr);
    if (cache != nullptr) {
      auto& lc = cache->layers[l];
      lc.input = std::move(x);
      lc.q = std::move(q);
      lc.k = std::move(k);
      lc.v = std::move(v);
      lc.probs = std::move(probs);
      lc.context = std::move(context);
      lc.attn_mask = std::move(attn_mask);
      lc.ln1 = std::move(ln1);
      lc.x1 = std::move(x1);
      lc.ff_pre = std::move(ff_pre);
      lc.ff_act = std::move(ff_act);
      lc.ff_mask = std::move(ff_mask);
      lc.ln2 = std::move(ln2);
    }
    x = std::move(x2);
  }
  return x;
}

template <typename T>
void encoder_backward(const BasicParameters<T>& p, const SequenceView& in,
                      const ForwardCache<T>& cache, Matrix<T> dx,
                      BasicParameters<T>& g) {
  const auto& c = p.config;
  const Eigen::Index n = dx.rows();
  const Eigen::Index d = c.hidden_dim / c.num_heads;
  const T scale = T(1) / std::sqrt(static_cast<T>(d));

  for (std::size_t li = p.layers.size(); li-- > 0;) {
    const auto& layer = p.layers[li];
    const auto& lc = cache.layers[li];
    auto& gl = g.layers[li];

    // x2 = LN(x1 + dropout(ff))
    Matrix<T> dr2 = layer_norm_backward<T>(dx, layer.ln2_gamma, lc.ln2,
                                           gl.ln2_gamma, gl.ln2_beta);
    Matrix<T> dff = dr2;
    apply_mask(dff, lc.ff_mask);
    gl.w2.noalias() += lc.ff_act.transpose() * dff;
    gl.b2.row(0) += dff.colwise().sum();
    Matrix<T> dact = dff * layer.w2.transpose();
    Matrix<T> dpre =
        dact.array() * lc.ff_pre.unaryExpr([](T z) { return gelu_grad(z); }).array();
    gl.w1.noalias() += lc.x1.transpose() * dpre;
    gl.b1.row(0) += dpre.colwise().sum();
    Matrix<T> dx1 = dr2;
    dx1.noalias() += dpre * layer.w1.transpose();

    // x1 = LN(x + dropout(attn))
    Matrix<T> dr1 = layer_norm_backward<T>(dx1, layer.ln1_gamma, lc.ln1,
                                           gl.ln1_gamma, gl.ln1_beta);
    Matrix<T> dattn = dr1;
    apply_mask(dattn, lc.attn_mask);
    gl.wo.noalias() += lc.context.transpose() * dattn;
    gl.bo.row(0) += dattn.colwise().sum();
    Matrix<T> dcontext = dattn * layer.wo.transpose();

    Matrix<T> dq(n, c.hidden_dim), dk(n, c.hidden_dim), dv(n, c.hidden_dim);
    for (int hd = 0; hd < c.num_heads; ++hd) {
      const Matrix<T>& prob = lc.probs[static_cast<std::size_t>(hd)];
      const auto dctx = dcontext.middleCols(hd * d, d);
      dv.middleCols(hd * d, d).noalias() = prob.transpose() * dctx;
      Matrix<T> dprob = dctx * lc.v.middleCols(hd * d, d).transpose();
      Matrix<T> ds(n, n);
      for (Eigen::Index i = 0; i < n; ++i) {
        const T dotp = dprob.row(i).dot(prob.row(i));
        ds.row(i) = prob.row(i).array() * (dprob.row(i).array() - dotp);
      }
      ds *= scale;
      dq.middleCols(hd * d, d).noalias() = ds * lc.k.middleCols(hd * d, d);
      dk.middleCols(hd * d, d).noalias() = ds.transpose() * lc.q.middleCols(hd * d, d);
    }
    gl.wq.noalias() += lc.input.transpose() * dq;
    gl.bq.row(0) += dq.colwise().sum();
    gl.wk.noalias() += lc.input.transpose() * dk;
    gl.bk.row(0) += dk.colwise().sum();
    gl.wv.noalias() += lc.input.transpose() * dv;
    gl.bv.row(0) += dv.colwise().sum();
    Matrix<T> dinput = dr1;
    dinput.noalias() += dq * layer.wq.transpose();
    dinput.noalias() += dk * layer.wk.transpose();
    dinput.noalias() += dv * layer.wv.transpose();
    dx = std::move(dinput);
  }

  apply_mask(dx, cache.embedding_mask);
  Matrix<T> demb = layer_norm_backward<T>(dx, p.embedding_ln_gamma,
                                          cache.embedding_ln,
                                          g.embedding_ln_gamma,
                                          g.embedding_ln_beta);
  for (Eigen::Index i = 0; i < n; ++i) {
    g.token_embedding.row(in.ids[i]) += demb.row(i);
    g.position_embedding.row(i) += demb.row(i);
    g.segment_embedding.row(in.segments[i]) += demb.row(i);
  }
}

// Output projection of the MLM head applied to `hidden` rows.
template <typename T>
Matrix<T> mlm_project(const BasicParameters<T>& p, const Matrix<T>& hidden) {
  Matrix<T> logits = p.config.tie_mlm_weights
                         ? Matrix<T>(hidden * p.token_embedding.transpose())
                         : Matrix<T>(hidden * p.mlm_weight);
  logits.rowwise() += p.mlm_bias.row(0);
  return logits;
}

// Softmax cross-entropy of one logit row computed in double. Writes
// softmax(z) - onehot(label) into `dlogits` when non-null.
template <typename Row>
double softmax_nll(const Row& logits, int label, std::vector<double>* dlogits) {
  const Eigen::Index v = logits.size();
  double mx = -std::numeric_limits<double>::infinity();
  for (Eigen::Index j = 0; j < v; ++j) mx = std::max(mx, static_cast<double>(logits(j)));
  double sum = 0.0;
  for (Eigen::Index j = 0; j < v; ++j) sum += std::exp(static_cast<double>(logits(j)) - mx);
  const double log_z = mx + std::log(sum);
  if (dlogits != nullptr) {
    dlogits->resize(static_cast<std::size_t>(v));
    for (Eigen::Index j = 0; j < v; ++j) {
      (*dlogits)[static_cast<std::size_t>(j)] =
          std::exp(static_cast<double>(logits(j)) - log_z) - (j == label ? 1.0 : 0.0);
    }
  }
  return log_z - static_cast<double>(logits(label));
}

}  // namespace

// ---------------------------------------------------------------------------
// EncoderConfig / parameters

void EncoderConfig::validate() const {
  auto fail = [](const std::string& msg) {
    throw Error(ErrorCode::kInvalidArgument, "encoder config: " + msg);
  };
  if (vocab_size <= Vocab::kNumSpecials) fail("vocab_size too small");
  if (hidden_dim <= 0 || num_layers < 0 || num_heads <= 0 || ff_dim <= 0 ||
      max_len <= 0 || num_segments <= 0) {
    fail("dimensions must be positive");
  }
  if (hidden_dim % num_heads != 0) fail("hidden_dim not divisible by num_heads");
  if (num_classes < 0) fail("num_classes negative");
  if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) fail("dropout_rate outside [0, 1)");
}

template <typename T>
BasicParameters<T> BasicParameters<T>::zeros(const EncoderConfig& config) {
  config.validate();
  BasicParameters<T> p;
  p.config = config;
  const int h = config.hidden_dim;
  const int f = config.ff_dim;
  auto z = [](int r, int c) { return Matrix<T>::Zero(r, c).eval(); };
  p.token_embedding = z(config.vocab_size, h);
  p.position_embedding = z(config.max_len, h);
  p.segment_embedding = z(config.num_segments, h);
  p.embedding_ln_gamma = z(1, h);
  p.embedding_ln_beta = z(1, h);
  p.layers.resize(static_cast<std::size_t>(config.num_layers));
  for (auto& layer : p.layers) {
    layer.wq = z(h, h);
    layer.wk = z(h, h);
    layer.wv = z(h, h);
    layer.wo = z(h, h);
    layer.bq = z(1, h);
    layer.bk = z(1, h);
    layer.bv = z(1, h);
    layer.bo = z(1, h);
    layer.ln1_gamma = z(1, h);
    layer.ln1_beta = z(1, h);
    layer.w1 = z(h, f);
    layer.b1 = z(1, f);
    layer.w2 = z(f, h);
    layer.b2 = z(1, h);
    layer.ln2_gamma = z(1, h);
    layer.ln2_beta = z(1, h);
  }
  if (!config.tie_mlm_weights) p.mlm_weight = z(h, config.vocab_size);
  p.mlm_bias = z(1, config.vocab_size);
  if (config.num_classes > 0) {
    p.classifier_weight = z(h, config.num_classes);
    p.classifier_bias = z(1, config.num_classes);
  }
  return p;
}

template <typename T>
BasicParameters<T> BasicParameters<T>::initialize(const EncoderConfig& config,
                                                  uint64_t seed) {
  BasicParameters<T> p = zeros(config);
  Rng rng(seed);
  constexpr double kEmbeddingStd = 0.02;
  fill_normal(p.token_embedding, rng, kEmbeddingStd);
  fill_normal(p.position_embedding, rng, kEmbeddingStd);
  fill_normal(p.segment_embedding, rng, kEmbeddingStd);
  p.embedding_ln_gamma.setOnes();
  for (auto& layer : p.layers) {
    for (Matrix<T>* w : {&layer.wq, &layer.wk, &layer.wv, &layer.wo, &layer.w1,
                         &layer.w2}) {
      fill_normal(*w, rng, xavier(w->rows(), w->cols()));
    }
    layer.ln1_gamma.setOnes();
    layer.ln2_gamma.setOnes();
  }
  if (p.mlm_weight.size() > 0) fill_normal(p.mlm_weight, rng, kEmbeddingStd);
  if (p.classifier_weight.size() > 0) {
    fill_normal(p.classifier_weight, rng,
                xavier(p.classifier_weight.rows(), p.classifier_weight.cols()));
  }
  return p;
}

template <typename T>
void BasicParameters<T>::reset_classifier(int num_classes, uint64_t seed) {
  if (num_classes <= 0) {
    throw Error(ErrorCode::kInvalidArgument, "num_classes must be positive");
  }
  config.num_classes = num_classes;
  classifier_weight.resize(config.hidden_dim, num_classes);
  classifier_bias = Matrix<T>::Zero(1, num_classes);
  Rng rng(seed);
  fill_normal(classifier_weight, rng,
              xavier(classifier_weight.rows(), classifier_weight.cols()));
}

template <typename T>
void BasicParameters<T>::for_each(
    const std::function<void(const std::string&, Matrix<T>&)>& f) {
  visit_tensors(*this, f);
}

template <typename T>
void BasicParameters<T>::for_each(
    const std::function<void(const std::string&, const Matrix<T>&)>& f) const {
  visit_tensors(*this, f);
}

template <typename T>
void BasicParameters<T>::set_zero() {
  for (Matrix<T>* m : tensor_list(*this)) m->setZero();
}

template <typename T>
std::size_t BasicParameters<T>::num_values() const {
  std::size_t n = 0;
  for (const Matrix<T>* m : tensor_list(*this)) n += static_cast<std::size_t>(m->size());
  return n;
}

template <typename T>
bool BasicParameters<T>::all_finite() const {
  for (const Matrix<T>* m : tensor_list(*this)) {
    if (!m->allFinite()) return false;
  }
  return true;
}

template <typename T>
template <typename U>
BasicParameters<U> BasicParameters<T>::cast() const {
  BasicParameters<U> out = BasicParameters<U>::zeros(config);
  auto src = tensor_list(*this);
  auto dst = tensor_list(out);
  for (std::size_t i = 0; i < src.size(); ++i) *dst[i] = src[i]->template cast<U>();
  return out;
}

// ---------------------------------------------------------------------------
// Public forward API

template <typename T>
Matrix<T> forward(const BasicParameters<T>& params, const SequenceView& input) {
  return encoder_forward<T>(params, input, nullptr, DropoutContext{});
}

template <typename T>
std::vector<Matrix<T>> mlm_logits(const BasicParameters<T>& params,
                                  const MaskedBatch& batch) {
  std::vector<Matrix<T>> out;
  out.reserve(static_cast<std::size_t>(batch.batch_size()));
  for (int r = 0; r < batch.batch_size(); ++r) {
    const SequenceView view{batch.input_ids[r], batch.segments[r],
                            batch.attention_mask[r]};
    out.push_back(mlm_project(params, forward(params, view)));
  }
  return out;
}

template <typename T>
double mlm_loss_from_logits(std::span<const Matrix<T>> logits,
                            const std::vector<std::vector<TokenId>>& labels) {
  if (logits.size() != labels.size()) {
    throw Error(ErrorCode::kShapeMismatch, "logits/labels batch size differ");
  }
  double total = 0.0;
  long count = 0;
  for (std::size_t r = 0; r < logits.size(); ++r) {
    if (static_cast<std::size_t>(logits[r].rows()) != labels[r].size()) {
      throw Error(ErrorCode::kShapeMismatch, "logits/labels length differ");
    }
    for (std::size_t i = 0; i < labels[r].size(); ++i) {
      const TokenId label = labels[r][i];
      if (label == kIgnoreLabel) continue;
      if (label < 0 || label >= logits[r].cols()) {
        throw Error(ErrorCode::kShapeMismatch, "label id out of range");
      }
      total += softmax_nll(logits[r].row(static_cast<Eigen::Index>(i)), label, nullptr);
      ++count;
    }
  }
  if (count == 0) {
    throw Error(ErrorCode::kNoMaskedPositions, "batch has no masked positions");
  }
  return total / static_cast<double>(count);
}

template <typename T>
double mlm_loss(const BasicParameters<T>& params, const MaskedBatch& batch) {
  if (batch.num_masked() == 0) {
    throw Error(ErrorCode::kNoMaskedPositions, "batch has no masked positions");
  }
  const auto logits = mlm_logits(params, batch);
  return mlm_loss_from_logits<T>(logits, batch.labels);
}

template <typename T>
std::vector<double> classify(const BasicParameters<T>& params,
                             const SequenceView& input) {
  if (params.config.num_classes <= 0 || params.classifier_weight.size() == 0) {
    throw Error(ErrorCode::kShapeMismatch, "model has no classification head");
  }
  const Matrix<T> hidden = forward(params, input);
  RowVector<T> logits = hidden.row(0) * params.classifier_weight;
  logits += params.classifier_bias.row(0);
  std::vector<double> probs(static_cast<std::size_t>(logits.size()));
  double mx = -std::numeric_limits<double>::infinity();
  for (Eigen::Index j = 0; j < logits.size(); ++j) mx = std::max(mx, static_cast<double>(logits(j)));
  double sum = 0.0;
  for (Eigen::Index j = 0; j < logits.size(); ++j) {
    probs[static_cast<std::size_t>(j)] = std::exp(static_cast<double>(logits(j)) - mx);
    sum += probs[static_cast<std::size_t>(j)];
  }
  for (double& pr : probs) pr /= sum;
  return probs;
}

// ---------------------------------------------------------------------------
// Training

TrainingExample TrainingExample::for_classification(const EncodedInput& input,
                                                    int label) {
  TrainingExample ex;
  ex.ids = input.ids;
  ex.segments = input.segments;
  ex.attention_mask = input.attention_mask;
  ex.class_label = label;
  return ex;
}

std::vector<TrainingExample> TrainingExample::from_masked_batch(
    const MaskedBatch& batch) {
  std::vector<TrainingExample> out;
  out.reserve(static_cast<std::size_t>(batch.batch_size()));
  for (int r = 0; r < batch.batch_size(); ++r) {
    TrainingExample ex;
    ex.ids = batch.input_ids[r];
    ex.segments = batch.segments[r];
    ex.attention_mask = batch.attention_mask[r];
    ex.labels = batch.labels[r];
    out.push_back(std::move(ex));
  }
  return out;
}

template <typename T>
LossTerms example_loss_and_gradient(const BasicParameters<T>& params,
                                    const TrainingExample& example,
                                    Objective objective,
                                    BasicParameters<T>* grads, T grad_scale,
                                    DropoutContext dropout) {
  const SequenceView view{example.ids, example.segments, example.attention_mask};
  ForwardCache<T> cache;
  const Matrix<T> hidden =
      encoder_forward<T>(params, view, grads ? &cache : nullptr, dropout);
  const Eigen::Index hdim = params.config.hidden_dim;
  LossTerms terms;
  Matrix<T> dhidden;
  if (grads != nullptr) dhidden = Matrix<T>::Zero(hidden.rows(), hdim);

  if (objective == Objective::kMaskedLm) {
    if (example.labels.size() != example.ids.size()) {
      throw Error(ErrorCode::kShapeMismatch, "labels length differs from ids");
    }
    std::vector<Eigen::Index> positions;
    for (std::size_t i = 0; i < example.labels.size(); ++i) {
      if (example.labels[i] != kIgnoreLabel) positions.push_back(static_cast<Eigen::Index>(i));
    }
    if (positions.empty()) return terms;
    Matrix<T> gathered(static_cast<Eigen::Index>(positions.size()), hdim);
    for (std::size_t k = 0; k < positions.size(); ++k) {
      gathered.row(static_cast<Eigen::Index>(k)) = hidden.row(positions[k]);
    }
    const Matrix<T> logits = mlm_project(params, gathered);
    Matrix<T> dlogits(logits.rows(), logits.cols());
    std::vector<double> drow;
    for (std::size_t k = 0; k < positions.size(); ++k) {
      const TokenId label = example.labels[static_cast<std::size_t>(positions[k])];
      if (label < 0 || label >= params.config.vocab_size) {
        throw Error(ErrorCode::kShapeMismatch, "label id out of range");
      }
      const auto row = static_cast<Eigen::Index>(k);
      terms.loss_sum += softmax_nll(logits.row(row), label, grads ? &drow : nullptr);
      ++terms.count;
      if (grads != nullptr) {
        for (Eigen::Index j = 0; j < logits.cols(); ++j) {
          dlogits(row, j) = static_cast<T>(drow[static_cast<std::size_t>(j)]) * grad_scale;
        }
      }
    }
    if (grads == nullptr) return terms;
    grads->mlm_bias.row(0) += dlogits.colwise().sum();
    Matrix<T> dgathered;
    if (params.config.tie_mlm_weights) {
      grads->token_embedding.noalias() += dlogits.transpose() * gathered;
      dgathered = dlogits * params.token_embedding;
    } else {
      grads->mlm_weight.noalias() += gathered.transpose() * dlogits;
      dgathered = dlogits * params.mlm_weight.transpose();
    }
    for (std::size_t k = 0; k < positions.size(); ++k) {
      dhidden.row(positions[k]) += dgathered.row(static_cast<Eigen::Index>(k));
    }
  } else {
    if (params.config.num_classes <= 0) {
      throw Error(ErrorCode::kShapeMismatch, "model has no classification head");
    }
    if (example.class_label < 0 || example.class_label >= params.config.num_classes) {
      throw Error(ErrorCode::kShapeMismatch, "class label out of range");
    }
    RowVector<T> logits = hidden.row(0) * params.classifier_weight;
    logits += params.classifier_bias.row(0);
    std::vector<double> drow;
    terms.loss_sum = softmax_nll(logits, example.class_label, grads ? &drow : nullptr);
    terms.count = 1;
    if (grads == nullptr) return terms;
    RowVector<T> dlogits(logits.size());
    for (Eigen::Index j = 0; j < logits.size(); ++j) {
      dlogits(j) = static_cast<T>(drow[static_cast<std::size_t>(j)]) * grad_scale;
    }
    grads->classifier_weight.noalias() += hidden.row(0).transpose() * dlogits;
    grads->classifier_bias.row(0) += dlogits;
    dhidden.row(0) += dlogits * params.classifier_weight.transpose();
  }
  encoder_backward<T>(params, view, cache, std::move(dhidden), *grads);
  return terms;
}

AdamOptimizer::AdamOptimizer(const Parameters& params,
                             const OptimizerConfig& config)
    : config_(config),
      m_(Parameters::zeros(params.config)),
      v_(Parameters::zeros(params.config)) {}

void AdamOptimizer::step(Parameters& params, Parameters& grads) {
  ++t_;
  const double bc1 = 1.0 - std::pow(config_.beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(config_.beta2, static_cast<double>(t_));
  const float b1 = static_cast<float>(config_.beta1);
  const float b2 = static_cast<float>(config_.beta2);
  const float step = static_cast<float>(config_.learning_rate / bc1);
  const float inv_bc2 = static_cast<float>(1.0 / bc2);
  const float eps = static_cast<float>(config_.epsilon);
  const float wd = static_cast<float>(config_.weight_decay * config_.learning_rate);
  auto p = tensor_list(params);
  auto g = tensor_list(grads);
  auto m = tensor_list(m_);
  auto v = tensor_list(v_);
  if (p.size() != m.size()) {
    throw Error(ErrorCode::kShapeMismatch, "optimizer state does not match parameters");
  }
  for (std::size_t i = 0; i < p.size(); ++i) {
    auto pa = p[i]->array();
    auto ga = g[i]->array();
    m[i]->array() = b1 * m[i]->array() + (1.0f - b1) * ga;
    v[i]->array() = b2 * v[i]->array() + (1.0f - b2) * ga.square();
    if (wd != 0.0f) pa -= wd * pa;
    pa -= step * m[i]->array() / ((v[i]->array() * inv_bc2).sqrt() + eps);
  }
}

TrainResult train(Parameters& params, std::span<const TrainingExample> data,
                  Objective objective, const OptimizerConfig& config,
                  const EpochCallback& on_epoch_end) {
  if (!std::isfinite(config.learning_rate)) {
    throw Error(ErrorCode::kInvalidArgument, "learning rate is not finite");
  }
  if (config.batch_size <= 0 || config.epochs < 0) {
    throw Error(ErrorCode::kInvalidArgument, "batch_size/epochs invalid");
  }
  if (objective == Objective::kClassify && params.config.num_classes <= 0) {
    throw Error(ErrorCode::kShapeMismatch, "model has no classification head");
  }
  TrainResult result;
  if (data.empty()) return result;
  AdamOptimizer adam(params, config);
  const std::size_t bs = static_cast<std::size_t>(config.batch_size);
  std::vector<Parameters> buffers;
  buffers.reserve(bs);
  for (std::size_t i = 0; i < std::min(bs, data.size()); ++i) {
    buffers.push_back(Parameters::zeros(params.config));
  }
  Parameters total = Parameters::zeros(params.config);
  std::vector<std::size_t> order(data.size());

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), 0);
    Rng shuffle_rng(derive_seed(config.seed, 0x5eed, static_cast<uint64_t>(epoch)));
    for (std::size_t i = order.size(); i > 1; --i) {
      std::swap(order[i - 1], order[shuffle_rng.uniform_int(i)]);
    }
    double epoch_loss = 0.0;
    long epoch_count = 0;
    for (std::size_t start = 0; start < order.size(); start += bs) {
      const std::size_t len = std::min(bs, order.size() - start);
      std::vector<LossTerms> terms(len);
      const uint64_t step_seed =
          derive_seed(config.seed, static_cast<uint64_t>(epoch), start);
      parallel_for(
          len,
          [&](std::size_t k) {
            buffers[k].set_zero();
            Rng rng(derive_seed(step_seed, k));
            DropoutContext dropout{params.config.dropout_rate, &rng};
            terms[k] = example_loss_and_gradient<float>(
                params, data[order[start + k]], objective, &buffers[k], 1.0f,
                dropout);
          },
          config.threads);
      double loss_sum = 0.0;
      long count = 0;
      for (const auto& t : terms) {
        loss_sum += t.loss_sum;
        count += t.count;
      }
      if (count == 0) continue;
      if (!std::isfinite(loss_sum)) {
        throw Error(ErrorCode::kDivergenceDetected,
                    "non-finite loss at epoch " + std::to_string(epoch));
      }
      auto tot = tensor_list(total);
      for (Matrix<float>* m : tot) m->setZero();
      for (std::size_t k = 0; k < len; ++k) {
        auto b = tensor_list(buffers[k]);
        for (std::size_t i = 0; i < tot.size(); ++i) *tot[i] += *b[i];
      }
      const float inv = 1.0f / static_cast<float>(count);
      double norm_sq = 0.0;
      for (Matrix<float>* m : tot) {
        *m *= inv;
        norm_sq += m->template cast<double>().squaredNorm();
      }
      if (!std::isfinite(norm_sq)) {
        throw Error(ErrorCode::kDivergenceDetected, "non-finite gradient");
      }
      const double norm = std::sqrt(norm_sq);
      if (config.clip_norm > 0.0 && norm > config.clip_norm) {
        const float s = static_cast<float>(config.clip_norm / norm);
        for (Matrix<float>* m : tot) *m *= s;
      }
      adam.step(params, total);
      const double step_loss = loss_sum / static_cast<double>(count);
      result.step_losses.push_back(step_loss);
      ++result.steps;
      epoch_loss += loss_sum;
      epoch_count += count;
    }
    result.epoch_losses.push_back(
        epoch_count > 0 ? epoch_loss / static_cast<double>(epoch_count) : 0.0);
    if (on_epoch_end) on_epoch_end(epoch, params);
  }
  if (!params.all_finite()) {
    throw Error(ErrorCode::kDivergenceDetected, "parameters became non-finite");
  }
  return result;
}

// ---------------------------------------------------------------------------
// Explicit instantiations

#define SOUNDMLM_INSTANTIATE(T)                                                \
  template struct BasicParameters<T>;                                          \
  template Matrix<T> forward<T>(const BasicParameters<T>&, const SequenceView&); \
  template std::vector<Matrix<T>> mlm_logits<T>(const BasicParameters<T>&,     \
                                                const MaskedBatch&);           \
  template double mlm_loss<T>(const BasicParameters<T>&, const MaskedBatch&);  \
  template double mlm_loss_from_logits<T>(                                     \
      std::span<const Matrix<T>>, const std::vector<std::vector<TokenId>>&);   \
  template std::vector<double> classify<T>(const BasicParameters<T>&,          \
                                           const SequenceView&);               \
  template LossTerms example_loss_and_gradient<T>(                             \
      const BasicParameters<T>&, const TrainingExample&, Objective,            \
      BasicParameters<T>*, T, DropoutContext);

SOUNDMLM_INSTANTIATE(float)
SOUNDMLM_INSTANTIATE(double)
#undef SOUNDMLM_INSTANTIATE

template BasicParameters<double> BasicParameters<float>::cast<double>() const;
template BasicParameters<float> BasicParameters<double>::cast<float>() const;
template BasicParameters<float> BasicParameters<float>::cast<float>() const;
template BasicParameters<double> BasicParameters<double>::cast<double>() const;

}  // namespace soundmlm
