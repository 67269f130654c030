#pragma once

#include <cmath>
#include <deque>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "emu/rng.hpp"
#include "emu/tensor.hpp"
#include "emu/tokenizer.hpp"

namespace emu::nn {

// Learnable tensor with its gradient accumulator.
struct Parameter {
  std::string name;
  Tensor value;
  Tensor grad;

  Parameter(std::string n, std::vector<int> shape)
      : name(std::move(n)), value(shape), grad(std::move(shape)) {}
};

// Owns parameters in creation order (the checkpoint order). Names are unique.
class ParamStore {
 public:
  Parameter& create(const std::string& name, std::vector<int> shape) {
    if (by_name_.count(name)) throw std::logic_error("duplicate parameter name " + name);
    params_.emplace_back(name, std::move(shape));
    by_name_[name] = params_.size() - 1;
    return params_.back();
  }

  Parameter& get(const std::string& name) {
    auto it = by_name_.find(name);
    if (it == by_name_.end()) throw std::logic_error("unknown parameter " + name);
    return params_[it->second];
  }

  std::vector<Parameter*> all() {
    std::vector<Parameter*> out;
    out.reserve(params_.size());
    for (Parameter& p : params_) out.push_back(&p);
    return out;
  }
  std::vector<const Parameter*> all() const {
    std::vector<const Parameter*> out;
    out.reserve(params_.size());
    for (const Parameter& p : params_) out.push_back(&p);
    return out;
  }

  void zero_grads() {
    for (Parameter& p : params_) p.grad.zero();
  }

  size_t count() const { return params_.size(); }

 private:
  std::deque<Parameter> params_;  // deque: stable addresses
  std::map<std::string, size_t> by_name_;
};

inline constexpr double kInitStd = 0.02;

inline void init_gaussian(Parameter& p, Rng& rng, double std_dev = kInitStd) {
  for (double& v : p.value.data) v = std_dev * rng.next_gaussian();
}
inline void init_constant(Parameter& p, double c) {
  std::fill(p.value.data.begin(), p.value.data.end(), c);
}

// ---------------------------------------------------------------------------
// Model configuration
// ---------------------------------------------------------------------------

struct ModelConfig {
  int d_model = 64;
  int n_heads = 4;
  int n_layers = 2;
  int max_regions = 16;  // per image
  int max_tokens = 48;
  int vocab_size = tok::kVocabSize;

  int head_dim() const { return d_model / n_heads; }

  void validate() const {
    if (d_model <= 0 || n_heads <= 0 || n_layers <= 0)
      throw std::invalid_argument("model config: extents must be positive");
    if (d_model % n_heads != 0)
      throw std::invalid_argument("model config: d_model must be divisible by n_heads");
    if (max_regions < 1 || max_tokens < 1)
      throw std::invalid_argument("model config: max_regions and max_tokens must be >= 1");
    if (vocab_size < tok::kVocabSize)
      throw std::invalid_argument("model config: vocab smaller than tokenizer vocabulary");
  }
};

// ---------------------------------------------------------------------------
// Attention mask
// ---------------------------------------------------------------------------

// allowed[i*n_keys + j] != 0 when query position i may attend key position j.
struct AttnMask {
  int n_queries = 0;
  int n_keys = 0;
  std::vector<uint8_t> allowed;

  bool at(int i, int j) const { return allowed[static_cast<size_t>(i) * n_keys + j] != 0; }
};

inline constexpr double kMaskFill = -1e30;

// ---------------------------------------------------------------------------
// Multi-head attention
// ---------------------------------------------------------------------------

struct MhaParams {
  Parameter* wq;
  Parameter* wk;
  Parameter* wv;
  Parameter* wo;
};

struct MhaCache {
  Tensor q, k, v;              // full projections
  std::vector<Tensor> attn;    // per-head softmax outputs
  Tensor ctx;                  // concatenated head outputs
};

inline Tensor head_slice(const Tensor& x, int head, int head_dim) {
  Tensor out({x.rows(), head_dim});
  for (int i = 0; i < x.rows(); ++i)
    for (int j = 0; j < head_dim; ++j) out.at(i, j) = x.at(i, head * head_dim + j);
  return out;
}

inline void head_slice_add(Tensor& x, const Tensor& part, int head, int head_dim) {
  for (int i = 0; i < part.rows(); ++i)
    for (int j = 0; j < head_dim; ++j) x.at(i, head * head_dim + j) += part.at(i, j);
}

// Scaled dot-product attention with n_heads heads; the mask is applied over
// score positions before the row softmax.
inline Tensor multi_head_attention(const Tensor& q_in, const Tensor& kv_in, const MhaParams& p,
                                   int n_heads, const AttnMask& mask, MhaCache& cache) {
  int d = q_in.cols();
  if (d % n_heads != 0) throw std::invalid_argument("attention: d_model not divisible by heads");
  if (mask.n_queries != q_in.rows() || mask.n_keys != kv_in.rows())
    throw std::invalid_argument("attention: mask shape mismatch");
  int hd = d / n_heads;
  double scale = 1.0 / std::sqrt(static_cast<double>(hd));

  cache.q = matmul(q_in, p.wq->value);
  cache.k = matmul(kv_in, p.wk->value);
  cache.v = matmul(kv_in, p.wv->value);
  cache.attn.assign(n_heads, Tensor());
  cache.ctx = Tensor({q_in.rows(), d});

  for (int h = 0; h < n_heads; ++h) {
    Tensor qh = head_slice(cache.q, h, hd);
    Tensor kh = head_slice(cache.k, h, hd);
    Tensor vh = head_slice(cache.v, h, hd);
    Tensor scores({qh.rows(), kh.rows()});
    for (int i = 0; i < qh.rows(); ++i)
      for (int j = 0; j < kh.rows(); ++j) {
        if (!mask.at(i, j)) {
          scores.at(i, j) = kMaskFill;
          continue;
        }
        double acc = 0.0;
        for (int e = 0; e < hd; ++e) acc += qh.at(i, e) * kh.at(j, e);
        scores.at(i, j) = acc * scale;
      }
    Tensor attn = softmax_rows(scores);
    Tensor ctx_h = matmul(attn, vh);
    head_slice_add(cache.ctx, ctx_h, h, hd);
    cache.attn[h] = std::move(attn);
  }
  return matmul(cache.ctx, p.wo->value);
}

// Accumulates parameter gradients and the gradients w.r.t. both inputs.
// For self-attention pass the same tensor for d_q_in and d_kv_in.
inline void multi_head_attention_backward(const Tensor& q_in, const Tensor& kv_in,
                                          const MhaParams& p, int n_heads, const AttnMask& mask,
                                          const MhaCache& cache, const Tensor& d_out,
                                          Tensor& d_q_in, Tensor& d_kv_in) {
  int d = q_in.cols();
  int hd = d / n_heads;
  double scale = 1.0 / std::sqrt(static_cast<double>(hd));

  Tensor d_ctx({q_in.rows(), d});
  matmul_backward(cache.ctx, p.wo->value, d_out, d_ctx, p.wo->grad);

  Tensor d_q({q_in.rows(), d});
  Tensor d_k({kv_in.rows(), d});
  Tensor d_v({kv_in.rows(), d});

  for (int h = 0; h < n_heads; ++h) {
    Tensor d_ctx_h = head_slice(d_ctx, h, hd);
    Tensor vh = head_slice(cache.v, h, hd);
    Tensor qh = head_slice(cache.q, h, hd);
    Tensor kh = head_slice(cache.k, h, hd);
    const Tensor& attn = cache.attn[h];

    Tensor d_attn({attn.rows(), attn.cols()});
    Tensor d_vh({vh.rows(), hd});
    matmul_backward(attn, vh, d_ctx_h, d_attn, d_vh);

    Tensor d_scores({attn.rows(), attn.cols()});
    softmax_rows_backward(attn, d_attn, d_scores);

    Tensor d_qh({qh.rows(), hd});
    Tensor d_kh({kh.rows(), hd});
    for (int i = 0; i < attn.rows(); ++i)
      for (int j = 0; j < attn.cols(); ++j) {
        if (!mask.at(i, j)) continue;
        double ds = d_scores.at(i, j) * scale;
        for (int e = 0; e < hd; ++e) {
          d_qh.at(i, e) += ds * kh.at(j, e);
          d_kh.at(j, e) += ds * qh.at(i, e);
        }
      }
    head_slice_add(d_q, d_qh, h, hd);
    head_slice_add(d_k, d_kh, h, hd);
    head_slice_add(d_v, d_vh, h, hd);
  }

  matmul_backward(q_in, p.wq->value, d_q, d_q_in, p.wq->grad);
  matmul_backward(kv_in, p.wk->value, d_k, d_kv_in, p.wk->grad);
  matmul_backward(kv_in, p.wv->value, d_v, d_kv_in, p.wv->grad);
}

// ---------------------------------------------------------------------------
// Transformer block (pre-norm)
// ---------------------------------------------------------------------------

struct BlockParams {
  Parameter *ln1_g, *ln1_b;
  MhaParams attn;
  Parameter *ln2_g, *ln2_b;
  Parameter *w1, *b1, *w2, *b2;
};

struct BlockCache {
  Tensor x_in;
  LayerNormCache ln1;
  Tensor h1;  // ln1 output
  MhaCache mha;
  Tensor x_mid;  // after attention residual
  LayerNormCache ln2;
  Tensor h2;       // ln2 output
  Tensor ffn_pre;  // h2*w1 + b1
  Tensor ffn_act;  // gelu(ffn_pre)
};

inline Tensor block_forward(const Tensor& x, const BlockParams& p, int n_heads,
                            const AttnMask& mask, BlockCache& cache) {
  cache.x_in = x;
  cache.h1 = layer_norm(x, p.ln1_g->value, p.ln1_b->value, &cache.ln1);
  Tensor attn_out = multi_head_attention(cache.h1, cache.h1, p.attn, n_heads, mask, cache.mha);
  cache.x_mid = add(x, attn_out);
  cache.h2 = layer_norm(cache.x_mid, p.ln2_g->value, p.ln2_b->value, &cache.ln2);
  cache.ffn_pre = add_row(matmul(cache.h2, p.w1->value), p.b1->value);
  cache.ffn_act = gelu(cache.ffn_pre);
  Tensor ffn_out = add_row(matmul(cache.ffn_act, p.w2->value), p.b2->value);
  return add(cache.x_mid, ffn_out);
}

inline Tensor block_backward(const Tensor& d_out, const BlockParams& p, int n_heads,
                             const AttnMask& mask, const BlockCache& cache) {
  // FFN path
  Tensor d_ffn_out = d_out;
  Tensor d_act({cache.ffn_act.rows(), cache.ffn_act.cols()});
  {
    Tensor d_mm = d_ffn_out;  // add_row: gradient passes through to matmul and bias
    for (int i = 0; i < d_mm.rows(); ++i)
      for (int j = 0; j < d_mm.cols(); ++j) p.b2->grad.at(0, j) += d_mm.at(i, j);
    matmul_backward(cache.ffn_act, p.w2->value, d_mm, d_act, p.w2->grad);
  }
  Tensor d_pre({cache.ffn_pre.rows(), cache.ffn_pre.cols()});
  gelu_backward(cache.ffn_pre, d_act, d_pre);
  Tensor d_h2({cache.h2.rows(), cache.h2.cols()});
  {
    for (int i = 0; i < d_pre.rows(); ++i)
      for (int j = 0; j < d_pre.cols(); ++j) p.b1->grad.at(0, j) += d_pre.at(i, j);
    matmul_backward(cache.h2, p.w1->value, d_pre, d_h2, p.w1->grad);
  }
  Tensor d_x_mid = d_out;  // residual branch
  layer_norm_backward(cache.ln2, p.ln2_g->value, d_h2, d_x_mid, p.ln2_g->grad, p.ln2_b->grad);

  // Attention path
  Tensor d_h1({cache.h1.rows(), cache.h1.cols()});
  multi_head_attention_backward(cache.h1, cache.h1, p.attn, n_heads, mask, cache.mha, d_x_mid,
                                d_h1, d_h1);
  Tensor d_x = d_x_mid;  // residual branch
  layer_norm_backward(cache.ln1, p.ln1_g->value, d_h1, d_x, p.ln1_g->grad, p.ln1_b->grad);
  return d_x;
}

// ---------------------------------------------------------------------------
// Adam
// ---------------------------------------------------------------------------

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.0;  // decoupled
};

// Bias-corrected adaptive-moment optimizer. Deterministic: state is keyed by
// the parameter order given at construction, which step() must repeat.
class Adam {
 public:
  Adam(AdamConfig cfg, const std::vector<Parameter*>& params) : cfg_(cfg) {
    for (Parameter* p : params) {
      m_.emplace_back(p->value.shape);
      v_.emplace_back(p->value.shape);
    }
  }

  void step(const std::vector<Parameter*>& params) {
    if (params.size() != m_.size()) throw std::logic_error("adam: parameter set changed");
    ++t_;
    double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
    double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
    for (size_t pi = 0; pi < params.size(); ++pi) {
      Parameter& p = *params[pi];
      for (size_t i = 0; i < p.value.size(); ++i) {
        double g = p.grad.data[i];
        double m = m_[pi].data[i] = cfg_.beta1 * m_[pi].data[i] + (1.0 - cfg_.beta1) * g;
        double v = v_[pi].data[i] = cfg_.beta2 * v_[pi].data[i] + (1.0 - cfg_.beta2) * g * g;
        double update = (m / bc1) / (std::sqrt(v / bc2) + cfg_.eps);
        p.value.data[i] -= cfg_.lr * (update + cfg_.weight_decay * p.value.data[i]);
      }
    }
  }

  int64_t steps() const { return t_; }

 private:
  AdamConfig cfg_;
  int64_t t_ = 0;
  std::vector<Tensor> m_, v_;
};

// ---------------------------------------------------------------------------
// Finite-difference gradient verification
// ---------------------------------------------------------------------------

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::string worst_param;
};

// loss(with_grad): evaluates the scalar loss; when with_grad, also fills the
// parameters' gradient accumulators (after zeroing them). Compares those
// analytic gradients against central finite differences element by element.
// Relative error uses denominator max(1, |analytic|, |numeric|).
inline GradCheckResult grad_check(const std::function<double(bool)>& loss,
                                  const std::vector<Parameter*>& params, double epsilon) {
  if (!(epsilon >= 1e-6 && epsilon <= 1e-3))
    throw std::invalid_argument("grad_check: epsilon must be in [1e-6, 1e-3]");

  double base = loss(true);
  if (!std::isfinite(base)) throw std::invalid_argument("grad_check: non-finite loss");

  std::vector<Tensor> analytic;
  analytic.reserve(params.size());
  for (Parameter* p : params) analytic.push_back(p->grad);

  GradCheckResult res;
  for (size_t pi = 0; pi < params.size(); ++pi) {
    Parameter& p = *params[pi];
    for (size_t i = 0; i < p.value.size(); ++i) {
      double keep = p.value.data[i];
      p.value.data[i] = keep + epsilon;
      double up = loss(false);
      p.value.data[i] = keep - epsilon;
      double down = loss(false);
      p.value.data[i] = keep;
      if (!std::isfinite(up) || !std::isfinite(down))
        throw std::invalid_argument("grad_check: non-finite loss during perturbation");
      double numeric = (up - down) / (2.0 * epsilon);
      double a = analytic[pi].data[i];
      double rel = std::abs(a - numeric) / std::max({1.0, std::abs(a), std::abs(numeric)});
      if (rel > res.max_rel_error) {
        res.max_rel_error = rel;
        res.worst_param = p.name + "[" + std::to_string(i) + "]";
      }
    }
  }
  return res;
}

}  // namespace emu::nn
