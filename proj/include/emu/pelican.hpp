#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "emu/edit_graph.hpp"
#include "emu/feature_store.hpp"
#include "emu/nn.hpp"
#include "emu/rng.hpp"
#include "emu/tokenizer.hpp"
#include "emu/types.hpp"

namespace emu {

// Ablation axes. Flags are independent; from_scratch only tags logs at this
// scale since there are no pretrained weights to drop.
struct AblationConfig {
  bool use_priority_graph = true;
  bool use_annotated_features = true;
  bool use_source_image = true;
  bool from_scratch = false;

  std::string flags_string() const {
    std::string s;
    s += "priority_graph=" + std::to_string(use_priority_graph ? 1 : 0);
    s += ";annotated_features=" + std::to_string(use_annotated_features ? 1 : 0);
    s += ";source_image=" + std::to_string(use_source_image ? 1 : 0);
    s += ";from_scratch=" + std::to_string(from_scratch ? 1 : 0);
    return s;
  }

  bool operator==(const AblationConfig&) const = default;
};

// One model invocation: both feature tables, the DAG priorities for the
// edited regions, the question, and (for training) the answer span tokens
// [label token, answer text..., EOS].
struct PelicanInput {
  FeatureTable source;  // zero rows when absent
  FeatureTable edited;
  PriorityAssignment priorities;
  QuestionType qtype = QuestionType::intent;
  std::vector<int> question_tokens;
  std::vector<int> target_tokens;

  bool gold_positive() const {
    if (target_tokens.empty()) throw std::logic_error("input has no target");
    return target_tokens.front() == tok::YES;
  }
};

struct Classification {
  bool positive = false;
  double probability = 0.5;  // two-way softmax mass of the predicted label
};

namespace detail_model {

struct RowInfo {
  bool is_source = false;
  int priority = -1;  // topo position, -1 = unreachable / not applicable
  int label_code = 0;
};

struct EmbedPlan {
  nn::Tensor features;  // (n_src + n_edit) x D, source rows first
  std::vector<RowInfo> rows;
  std::vector<int> tokens;  // full stream: BOS question SEP [target]
  int n_src = 0;
  int n_edit = 0;
  int first_target_pos = 0;  // stream index of the first answer token
  bool use_priority = true;  // ablation flags captured at plan time
  bool use_labels = true;
};

struct ForwardCache {
  EmbedPlan plan;
  nn::Tensor proj;  // projected features
  nn::Tensor x0;    // embedded sequence
  nn::AttnMask mask;
  std::vector<nn::BlockCache> blocks;
  nn::LayerNormCache final_ln;
  nn::Tensor states;
  nn::Tensor token_states;
  nn::Tensor ce_dlogits;
};

}  // namespace detail_model

// The assembled model: [source regions] ++ [edited regions] ++ [tokens] runs
// through a transformer whose region positions attend bidirectionally among
// themselves while token positions attend causally over tokens and fully
// over regions. Source regions carry a distinct marker embedding; edited
// regions carry priority embeddings indexed by their topological position
// (exact zero when unreachable) plus edit-label embeddings. The LM head is
// weight-tied to the token embedding table.
class PelicanModel {
 public:
  PelicanModel(nn::ModelConfig cfg, int feature_dim, uint64_t init_seed)
      : cfg_(cfg), feature_dim_(feature_dim) {
    cfg_.validate();
    if (feature_dim < 1) throw std::invalid_argument("feature_dim must be positive");
    int d = cfg_.d_model;
    feat_proj_ = &store_.create("embed.feat_proj", {feature_dim, d});
    tok_embed_ = &store_.create("embed.token", {cfg_.vocab_size, d});
    tok_pos_ = &store_.create("embed.token_pos", {cfg_.max_tokens, d});
    region_base_ = &store_.create("embed.region_base", {1, d});
    src_marker_ = &store_.create("embed.source_marker", {1, d});
    prio_embed_ = &store_.create("embed.priority", {cfg_.max_regions, d});
    label_embed_ = &store_.create("embed.edit_label", {4, d});
    blocks_.resize(cfg_.n_layers);
    for (int l = 0; l < cfg_.n_layers; ++l) {
      std::string b = "block" + std::to_string(l) + ".";
      auto& bp = blocks_[l];
      bp.ln1_g = &store_.create(b + "ln1.gamma", {1, d});
      bp.ln1_b = &store_.create(b + "ln1.beta", {1, d});
      bp.attn.wq = &store_.create(b + "attn.wq", {d, d});
      bp.attn.wk = &store_.create(b + "attn.wk", {d, d});
      bp.attn.wv = &store_.create(b + "attn.wv", {d, d});
      bp.attn.wo = &store_.create(b + "attn.wo", {d, d});
      bp.ln2_g = &store_.create(b + "ln2.gamma", {1, d});
      bp.ln2_b = &store_.create(b + "ln2.beta", {1, d});
      bp.w1 = &store_.create(b + "ffn.w1", {d, 4 * d});
      bp.b1 = &store_.create(b + "ffn.b1", {1, 4 * d});
      bp.w2 = &store_.create(b + "ffn.w2", {4 * d, d});
      bp.b2 = &store_.create(b + "ffn.b2", {1, d});
    }
    final_ln_g_ = &store_.create("final_ln.gamma", {1, d});
    final_ln_b_ = &store_.create("final_ln.beta", {1, d});
    init(init_seed);
  }

  PelicanModel(const PelicanModel&) = delete;
  PelicanModel& operator=(const PelicanModel&) = delete;
  PelicanModel(PelicanModel&&) = default;
  PelicanModel& operator=(PelicanModel&&) = default;

  const nn::ModelConfig& config() const { return cfg_; }
  int feature_dim() const { return feature_dim_; }
  nn::ParamStore& params() { return store_; }
  const nn::ParamStore& params() const { return store_; }

  // ------------------------------------------------------------------
  // Forward
  // ------------------------------------------------------------------

  nn::Tensor forward_states(const PelicanInput& input, const AblationConfig& ablation,
                            bool with_target, detail_model::ForwardCache* cache = nullptr) const {
    detail_model::ForwardCache local;
    detail_model::ForwardCache& c = cache ? *cache : local;
    c.plan = make_plan(input, ablation, with_target);
    embed(c);
    build_mask(c);
    c.blocks.assign(cfg_.n_layers, nn::BlockCache{});
    nn::Tensor x = c.x0;
    for (int l = 0; l < cfg_.n_layers; ++l)
      x = nn::block_forward(x, blocks_[l], cfg_.n_heads, c.mask, c.blocks[l]);
    c.states = nn::layer_norm(x, final_ln_g_->value, final_ln_b_->value, &c.final_ln);
    return c.states;
  }

  // LM logits at every token position of a computed state sequence (tied head).
  nn::Tensor token_logits(const nn::Tensor& states, int n_tokens) const {
    int total = states.rows();
    int d = cfg_.d_model;
    nn::Tensor logits({n_tokens, cfg_.vocab_size});
    for (int t = 0; t < n_tokens; ++t) {
      int row = total - n_tokens + t;
      for (int v = 0; v < cfg_.vocab_size; ++v) {
        double acc = 0.0;
        for (int e = 0; e < d; ++e) acc += states.at(row, e) * tok_embed_->value.at(v, e);
        logits.at(t, v) = acc;
      }
    }
    return logits;
  }

  // Logits for the next token after the final position of the stream.
  std::vector<double> next_token_logits(const PelicanInput& input,
                                        const AblationConfig& ablation) const {
    detail_model::ForwardCache c;
    forward_states(input, ablation, /*with_target=*/!input.target_tokens.empty(), &c);
    int last = c.states.rows() - 1;
    std::vector<double> out(cfg_.vocab_size);
    for (int v = 0; v < cfg_.vocab_size; ++v) {
      double acc = 0.0;
      for (int e = 0; e < cfg_.d_model; ++e) acc += c.states.at(last, e) * tok_embed_->value.at(v, e);
      out[v] = acc;
    }
    return out;
  }

  // ------------------------------------------------------------------
  // Classification and generation
  // ------------------------------------------------------------------

  // Binary decision from the YES/NO logits at the first answer position
  // (the stream ends at SEP here). Ties go to the negative label.
  Classification classify_yes_no(const PelicanInput& input, const AblationConfig& ablation) const {
    PelicanInput probe = input;
    probe.target_tokens.clear();
    std::vector<double> logits = next_token_logits(probe, ablation);
    double ly = logits[tok::YES];
    double ln = logits[tok::NO];
    Classification c;
    c.positive = ly > ln;
    double chosen = c.positive ? ly : ln;
    double other = c.positive ? ln : ly;
    c.probability = 1.0 / (1.0 + std::exp(other - chosen));
    return c;
  }

  // Greedy decoding. The first answer token is the classified label; the
  // fixed per-question-type prefix follows as the first text tokens; greedy
  // continuation runs until EOS or max_len extra tokens. Returns prefix plus
  // continuation (label and EOS excluded).
  std::vector<int> generate(const PelicanInput& input, const AblationConfig& ablation,
                            const std::vector<int>& prefix_tokens, int max_len) const {
    Classification cls = classify_yes_no(input, ablation);
    PelicanInput work = input;
    work.target_tokens.clear();
    work.target_tokens.push_back(cls.positive ? tok::YES : tok::NO);
    for (int t : prefix_tokens) work.target_tokens.push_back(t);

    int stream_len = 2 + static_cast<int>(input.question_tokens.size()) +
                     static_cast<int>(work.target_tokens.size());
    if (stream_len + max_len > cfg_.max_tokens)
      throw std::invalid_argument("generate: prefix plus max_len exceeds the token budget");

    std::vector<int> out = prefix_tokens;
    for (int step = 0; step < max_len; ++step) {
      std::vector<double> logits = next_token_logits(work, ablation);
      int best = 0;
      for (int v = 1; v < cfg_.vocab_size; ++v)
        if (logits[v] > logits[best]) best = v;
      if (best == tok::EOS) break;
      out.push_back(best);
      work.target_tokens.push_back(best);
    }
    return out;
  }

  // ------------------------------------------------------------------
  // Loss / backward
  // ------------------------------------------------------------------

  // Mean next-token NLL over the answer span; accumulates parameter grads.
  double loss_and_grads(const PelicanInput& input, const AblationConfig& ablation) {
    detail_model::ForwardCache c;
    double loss = token_loss(input, ablation, &c);
    backward(c);
    return loss;
  }

  // Forward-only loss (used by grad_check, perplexity and the trainer).
  double token_loss(const PelicanInput& input, const AblationConfig& ablation,
                    detail_model::ForwardCache* cache = nullptr,
                    size_t* supervised = nullptr) const {
    detail_model::ForwardCache local;
    detail_model::ForwardCache& c = cache ? *cache : local;
    if (input.target_tokens.empty()) throw std::invalid_argument("token_loss: input has no target");
    forward_states(input, ablation, /*with_target=*/true, &c);
    int n_tok = static_cast<int>(c.plan.tokens.size());
    c.token_states = nn::Tensor({n_tok, cfg_.d_model});
    int base = c.states.rows() - n_tok;
    for (int t = 0; t < n_tok; ++t)
      for (int e = 0; e < cfg_.d_model; ++e) c.token_states.at(t, e) = c.states.at(base + t, e);
    nn::Tensor logits = token_logits(c.states, n_tok);

    std::vector<int> targets(n_tok, 0);
    std::vector<uint8_t> mask(n_tok, 0);
    for (int t = 0; t + 1 < n_tok; ++t) {
      targets[t] = c.plan.tokens[t + 1];
      mask[t] = (t + 1 >= c.plan.first_target_pos) ? 1 : 0;
    }
    auto ce = nn::cross_entropy(logits, targets, mask);
    c.ce_dlogits = std::move(ce.d_logits);
    if (supervised) {
      size_t n = 0;
      for (uint8_t m : mask)
        if (m) ++n;
      *supervised = n;
    }
    return ce.loss;
  }

  // exp(mean per-token NLL over the answer spans of the dataset)
  double perplexity(std::span<const PelicanInput> dataset, const AblationConfig& ablation) const {
    if (dataset.empty()) throw std::invalid_argument("perplexity: empty dataset");
    double total_nll = 0.0;
    size_t total_tokens = 0;
    for (const PelicanInput& input : dataset) {
      size_t n = 0;
      double mean_nll = token_loss(input, ablation, nullptr, &n);
      total_nll += mean_nll * static_cast<double>(n);
      total_tokens += n;
    }
    return std::exp(total_nll / static_cast<double>(total_tokens));
  }

 private:
  void init(uint64_t seed) {
    Rng rng(mix_keys(seed, fnv1a64("pelican-init")));
    for (nn::Parameter* p : store_.all()) {
      if (p->name.find("ln") != std::string::npos && p->name.ends_with("gamma"))
        nn::init_constant(*p, 1.0);
      else if (p->name.ends_with("beta") || p->name.ends_with(".b1") || p->name.ends_with(".b2"))
        nn::init_constant(*p, 0.0);
      else
        nn::init_gaussian(*p, rng);
    }
  }

  detail_model::EmbedPlan make_plan(const PelicanInput& input, const AblationConfig& ablation,
                                    bool with_target) const {
    const FeatureTable& src = input.source;
    const FeatureTable& edt = input.edited;
    if (edt.row_count() > 0 && edt.dim != feature_dim_)
      throw std::invalid_argument("edited feature dim does not match model");
    if (src.row_count() > 0 && src.dim != feature_dim_)
      throw std::invalid_argument("source feature dim does not match model");
    if (static_cast<int>(src.row_count()) > cfg_.max_regions ||
        static_cast<int>(edt.row_count()) > cfg_.max_regions)
      throw std::invalid_argument("region count exceeds model limit");

    detail_model::EmbedPlan plan;
    plan.use_priority = ablation.use_priority_graph;
    plan.use_labels = ablation.use_annotated_features;
    bool with_source = ablation.use_source_image && src.row_count() > 0;
    plan.n_src = with_source ? static_cast<int>(src.row_count()) : 0;
    plan.n_edit = static_cast<int>(edt.row_count());

    int n_regions = plan.n_src + plan.n_edit;
    if (n_regions > 0) {
      plan.features = nn::Tensor({n_regions, feature_dim_});
      int row = 0;
      for (int i = 0; i < plan.n_src; ++i, ++row) {
        for (int e = 0; e < feature_dim_; ++e) plan.features.at(row, e) = src.at(i, e);
        plan.rows.push_back({true, -1, 0});
      }
      for (int i = 0; i < plan.n_edit; ++i, ++row) {
        for (int e = 0; e < feature_dim_; ++e) plan.features.at(row, e) = edt.at(i, e);
        detail_model::RowInfo info;
        info.is_source = false;
        const Region& reg = edt.regions[i];
        auto pos = input.priorities.position_of(reg.index);
        info.priority = pos.has_value() ? *pos : -1;
        if (info.priority >= cfg_.max_regions)
          throw std::invalid_argument("priority index exceeds model limit");
        info.label_code = static_cast<int>(reg.edit_label);
        plan.rows.push_back(info);
      }
    }

    plan.tokens.push_back(tok::BOS);
    for (int t : input.question_tokens) plan.tokens.push_back(t);
    plan.tokens.push_back(tok::SEP);
    plan.first_target_pos = static_cast<int>(plan.tokens.size());
    if (with_target)
      for (int t : input.target_tokens) plan.tokens.push_back(t);
    if (static_cast<int>(plan.tokens.size()) > cfg_.max_tokens)
      throw std::invalid_argument("token stream exceeds model limit (" +
                                  std::to_string(plan.tokens.size()) + " > " +
                                  std::to_string(cfg_.max_tokens) + ")");
    for (int t : plan.tokens)
      if (t < 0 || t >= cfg_.vocab_size) throw std::invalid_argument("token id outside vocab");
    return plan;
  }

  void embed(detail_model::ForwardCache& c) const {
    const auto& plan = c.plan;
    int n_regions = plan.n_src + plan.n_edit;
    int n_tok = static_cast<int>(plan.tokens.size());
    int d = cfg_.d_model;
    c.x0 = nn::Tensor({n_regions + n_tok, d});

    if (n_regions > 0) {
      c.proj = nn::matmul(plan.features, feat_proj_->value);
      for (int r = 0; r < n_regions; ++r) {
        const auto& info = plan.rows[r];
        for (int e = 0; e < d; ++e) {
          double v = c.proj.at(r, e) + region_base_->value.at(0, e);
          if (info.is_source) {
            v += src_marker_->value.at(0, e);
          } else {
            if (plan.use_priority && info.priority >= 0)
              v += prio_embed_->value.at(info.priority, e);
            if (plan.use_labels) v += label_embed_->value.at(info.label_code, e);
          }
          c.x0.at(r, e) = v;
        }
      }
    }
    for (int t = 0; t < n_tok; ++t) {
      int id = plan.tokens[t];
      for (int e = 0; e < d; ++e)
        c.x0.at(n_regions + t, e) = tok_embed_->value.at(id, e) + tok_pos_->value.at(t, e);
    }
  }

  void build_mask(detail_model::ForwardCache& c) const {
    int n_regions = c.plan.n_src + c.plan.n_edit;
    int n_tok = static_cast<int>(c.plan.tokens.size());
    int n = n_regions + n_tok;
    c.mask.n_queries = n;
    c.mask.n_keys = n;
    c.mask.allowed.assign(static_cast<size_t>(n) * n, 0);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        bool ok;
        if (i < n_regions)
          ok = j < n_regions;  // regions attend bidirectionally among regions
        else
          ok = j < n_regions || j <= i;  // tokens: all regions + causal over tokens
        c.mask.allowed[static_cast<size_t>(i) * n + j] = ok ? 1 : 0;
      }
  }

  void backward(detail_model::ForwardCache& c) {
    const auto& plan = c.plan;
    int n_tok = static_cast<int>(plan.tokens.size());
    int n_regions = plan.n_src + plan.n_edit;
    int d = cfg_.d_model;
    int total = n_regions + n_tok;

    // LM head (tied): gradients flow to both the token states and the table.
    nn::Tensor d_states({total, d});
    for (int t = 0; t < n_tok; ++t) {
      for (int v = 0; v < cfg_.vocab_size; ++v) {
        double g = c.ce_dlogits.at(t, v);
        if (g == 0.0) continue;
        for (int e = 0; e < d; ++e) {
          d_states.at(n_regions + t, e) += g * tok_embed_->value.at(v, e);
          tok_embed_->grad.at(v, e) += g * c.token_states.at(t, e);
        }
      }
    }

    nn::Tensor d_x({total, d});
    nn::layer_norm_backward(c.final_ln, final_ln_g_->value, d_states, d_x, final_ln_g_->grad,
                            final_ln_b_->grad);

    for (int l = cfg_.n_layers - 1; l >= 0; --l)
      d_x = nn::block_backward(d_x, blocks_[l], cfg_.n_heads, c.mask, c.blocks[l]);

    for (int t = 0; t < n_tok; ++t) {
      int id = plan.tokens[t];
      for (int e = 0; e < d; ++e) {
        double g = d_x.at(n_regions + t, e);
        tok_embed_->grad.at(id, e) += g;
        tok_pos_->grad.at(t, e) += g;
      }
    }
    if (n_regions > 0) {
      nn::Tensor d_proj({n_regions, d});
      for (int r = 0; r < n_regions; ++r) {
        const auto& info = plan.rows[r];
        for (int e = 0; e < d; ++e) {
          double g = d_x.at(r, e);
          d_proj.at(r, e) = g;
          region_base_->grad.at(0, e) += g;
          if (info.is_source) {
            src_marker_->grad.at(0, e) += g;
          } else {
            if (plan.use_priority && info.priority >= 0) prio_embed_->grad.at(info.priority, e) += g;
            if (plan.use_labels) label_embed_->grad.at(info.label_code, e) += g;
          }
        }
      }
      nn::Tensor d_features({n_regions, feature_dim_});  // discarded; features are data
      nn::matmul_backward(c.plan.features, feat_proj_->value, d_proj, d_features, feat_proj_->grad);
    }
  }

  nn::ModelConfig cfg_;
  int feature_dim_;
  nn::ParamStore store_;
  nn::Parameter *feat_proj_, *tok_embed_, *tok_pos_, *region_base_, *src_marker_, *prio_embed_,
      *label_embed_;
  std::vector<nn::BlockParams> blocks_;
  nn::Parameter *final_ln_g_, *final_ln_b_;
};

// ---------------------------------------------------------------------------
// Input assembly
// ---------------------------------------------------------------------------

// Answer span tokens: label token, answer text, EOS.
inline std::vector<int> make_target_tokens(const Answer& answer) {
  std::vector<int> out;
  out.push_back(answer.positive ? tok::YES : tok::NO);
  for (int t : answer.text_tokens.empty() ? tok::encode(answer.text) : answer.text_tokens)
    out.push_back(t);
  out.push_back(tok::EOS);
  return out;
}

// Builds the model input for one (record, qa entry) pair: selects the seed,
// builds the DAG over the record's regions, and attaches the question and
// (optionally) the answer span. The edited table's metadata is replaced by
// the record's regions, which are authoritative.
inline PelicanInput make_input(const AnnotationRecord& rec, size_t qa_index, FeatureTable source,
                               FeatureTable edited, const OverlapConfig& ocfg, bool with_target) {
  if (qa_index >= rec.qa.size()) throw std::invalid_argument("make_input: qa index out of range");
  std::vector<Region> regions = cap_regions(rec.regions);
  if (edited.row_count() != regions.size())
    throw ValidationError("record " + rec.image_id + ": edited feature rows (" +
                          std::to_string(edited.row_count()) + ") do not match regions (" +
                          std::to_string(regions.size()) + ")");
  edited.regions = regions;

  const Question& q = rec.qa[qa_index].first;
  const Answer& a = rec.qa[qa_index].second;

  PelicanInput input;
  input.qtype = q.qtype;
  input.question_tokens = q.tokens.empty() ? tok::encode(q.text) : q.tokens;
  if (!regions.empty()) {
    int seed = select_seed(regions, q);
    EditGraph g = build_graph(regions, seed, ocfg);
    input.priorities = priority_indices(g);
  }
  input.source = std::move(source);
  input.edited = std::move(edited);
  if (with_target) input.target_tokens = make_target_tokens(a);
  return input;
}

// Per-question-type generation prefixes; overridable through the run config.
inline std::map<QuestionType, std::string> default_prefixes() {
  return {
      {QuestionType::intent, "this edit was made to"},
      {QuestionType::implication, "this edit could"},
      {QuestionType::disinformation, "as news this edit would"},
      {QuestionType::subject_implication, "the public could see"},
      {QuestionType::subject_emotion, "seeing this edit would feel"},
  };
}

}  // namespace emu
