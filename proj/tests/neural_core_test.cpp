#include "emu/nn.hpp"

#include <gtest/gtest.h>

#include <functional>

#include "emu/checkpoint.hpp"
#include "emu/rng.hpp"
#include "emu/tensor.hpp"
#include "emu/tokenizer.hpp"

namespace {

using emu::nn::AttnMask;
using emu::nn::Parameter;
using emu::nn::Tensor;

Tensor random_tensor(emu::Rng& rng, std::vector<int> shape, double scale = 1.0) {
  Tensor t(std::move(shape));
  for (double& v : t.data) v = scale * rng.next_gaussian();
  return t;
}

// Test-side finite-difference oracle, independent of nn::grad_check.
double fd(const std::function<double()>& f, double& x, double eps = 1e-5) {
  double keep = x;
  x = keep + eps;
  double up = f();
  x = keep - eps;
  double down = f();
  x = keep;
  return (up - down) / (2.0 * eps);
}

double weighted_sum(const Tensor& t, const Tensor& w) {
  double acc = 0.0;
  for (size_t i = 0; i < t.size(); ++i) acc += t.data[i] * w.data[i];
  return acc;
}

constexpr double kTol = 1e-6;  // FD per-op tolerance at eps 1e-5

TEST(Ops, SoftmaxUniformRow) {
  Tensor x({1, 4});
  Tensor y = emu::nn::softmax_rows(x);
  for (int j = 0; j < 4; ++j) EXPECT_NEAR(y.at(0, j), 0.25, 1e-12);
}

TEST(Ops, SoftmaxRowsSumToOneAndShiftInvariant) {
  emu::Rng rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    Tensor x = random_tensor(rng, {3, 7}, 3.0);
    Tensor y = emu::nn::softmax_rows(x);
    for (int i = 0; i < 3; ++i) {
      double sum = 0.0;
      for (int j = 0; j < 7; ++j) sum += y.at(i, j);
      EXPECT_NEAR(sum, 1.0, 1e-9);
    }
    Tensor shifted = x;
    double c = rng.next_range(-5.0, 5.0);
    for (int j = 0; j < 7; ++j) shifted.at(1, j) += c;
    Tensor y2 = emu::nn::softmax_rows(shifted);
    for (int j = 0; j < 7; ++j) EXPECT_NEAR(y2.at(1, j), y.at(1, j), 1e-12);
  }
}

TEST(Ops, LayerNormConstantRowIsZeroPreAffine) {
  Tensor x({1, 8});
  for (double& v : x.data) v = 3.25;
  Tensor gamma({1, 8}), beta({1, 8});
  for (double& v : gamma.data) v = 1.0;
  Tensor y = emu::nn::layer_norm(x, gamma, beta);
  for (double v : y.data) EXPECT_NEAR(v, 0.0, 1e-9);
}

TEST(Ops, LayerNormRowsAreStandardized) {
  emu::Rng rng(12);
  Tensor x = random_tensor(rng, {4, 16}, 2.0);
  Tensor gamma({1, 16}), beta({1, 16});
  for (double& v : gamma.data) v = 1.0;
  Tensor y = emu::nn::layer_norm(x, gamma, beta);
  for (int i = 0; i < 4; ++i) {
    double mean = 0.0, var = 0.0;
    for (int j = 0; j < 16; ++j) mean += y.at(i, j);
    mean /= 16;
    for (int j = 0; j < 16; ++j) var += (y.at(i, j) - mean) * (y.at(i, j) - mean);
    var /= 16;
    EXPECT_NEAR(mean, 0.0, 1e-9);
    EXPECT_NEAR(var, 1.0, 1e-3);  // up to the epsilon in the denominator
  }
}

TEST(Ops, MatmulAgainstIdentity) {
  emu::Rng rng(13);
  Tensor x = random_tensor(rng, {3, 5});
  Tensor eye({5, 5});
  for (int i = 0; i < 5; ++i) eye.at(i, i) = 1.0;
  EXPECT_EQ(emu::nn::matmul(x, eye), x);
}

TEST(Ops, MatmulShapeMismatchThrows) {
  Tensor a({2, 3}), b({4, 2});
  EXPECT_THROW(emu::nn::matmul(a, b), std::invalid_argument);
}

TEST(OpBackward, MatmulMatchesFiniteDifferences) {
  emu::Rng rng(14);
  for (int seed = 0; seed < 20; ++seed) {
    Tensor a = random_tensor(rng, {3, 4});
    Tensor b = random_tensor(rng, {4, 2});
    Tensor w = random_tensor(rng, {3, 2});
    auto loss = [&] { return weighted_sum(emu::nn::matmul(a, b), w); };
    Tensor da({3, 4}), db({4, 2});
    emu::nn::matmul_backward(a, b, w, da, db);
    for (size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(da.data[i], fd(loss, a.data[i]), kTol);
    for (size_t i = 0; i < b.size(); ++i) EXPECT_NEAR(db.data[i], fd(loss, b.data[i]), kTol);
  }
}

TEST(OpBackward, GeluMatchesFiniteDifferences) {
  emu::Rng rng(15);
  for (int seed = 0; seed < 20; ++seed) {
    Tensor x = random_tensor(rng, {2, 5}, 2.0);
    Tensor w = random_tensor(rng, {2, 5});
    auto loss = [&] { return weighted_sum(emu::nn::gelu(x), w); };
    Tensor dx({2, 5});
    emu::nn::gelu_backward(x, w, dx);
    for (size_t i = 0; i < x.size(); ++i) EXPECT_NEAR(dx.data[i], fd(loss, x.data[i]), kTol);
  }
}

TEST(OpBackward, SoftmaxMatchesFiniteDifferences) {
  emu::Rng rng(16);
  for (int seed = 0; seed < 20; ++seed) {
    Tensor x = random_tensor(rng, {3, 6}, 2.0);
    Tensor w = random_tensor(rng, {3, 6});
    auto loss = [&] { return weighted_sum(emu::nn::softmax_rows(x), w); };
    Tensor y = emu::nn::softmax_rows(x);
    Tensor dx({3, 6});
    emu::nn::softmax_rows_backward(y, w, dx);
    for (size_t i = 0; i < x.size(); ++i) EXPECT_NEAR(dx.data[i], fd(loss, x.data[i]), kTol);
  }
}

TEST(OpBackward, LayerNormMatchesFiniteDifferences) {
  emu::Rng rng(17);
  for (int seed = 0; seed < 20; ++seed) {
    Tensor x = random_tensor(rng, {3, 8}, 2.0);
    Tensor gamma = random_tensor(rng, {1, 8});
    Tensor beta = random_tensor(rng, {1, 8});
    Tensor w = random_tensor(rng, {3, 8});
    auto loss = [&] { return weighted_sum(emu::nn::layer_norm(x, gamma, beta), w); };
    emu::nn::LayerNormCache cache;
    emu::nn::layer_norm(x, gamma, beta, &cache);
    Tensor dx({3, 8}), dgamma({1, 8}), dbeta({1, 8});
    emu::nn::layer_norm_backward(cache, gamma, w, dx, dgamma, dbeta);
    for (size_t i = 0; i < x.size(); ++i) EXPECT_NEAR(dx.data[i], fd(loss, x.data[i]), kTol);
    for (size_t i = 0; i < gamma.size(); ++i)
      EXPECT_NEAR(dgamma.data[i], fd(loss, gamma.data[i]), kTol);
    for (size_t i = 0; i < beta.size(); ++i) EXPECT_NEAR(dbeta.data[i], fd(loss, beta.data[i]), kTol);
  }
}

// ---------------------------------------------------------------------------
// Attention
// ---------------------------------------------------------------------------

AttnMask full_mask(int q, int k) {
  AttnMask m;
  m.n_queries = q;
  m.n_keys = k;
  m.allowed.assign(static_cast<size_t>(q) * k, 1);
  return m;
}

struct MhaFixture {
  emu::nn::ParamStore store;
  emu::nn::MhaParams params;

  MhaFixture(emu::Rng& rng, int d) {
    params.wq = &store.create("wq", {d, d});
    params.wk = &store.create("wk", {d, d});
    params.wv = &store.create("wv", {d, d});
    params.wo = &store.create("wo", {d, d});
    for (Parameter* p : store.all())
      for (double& v : p->value.data) v = 0.3 * rng.next_gaussian();
  }
};

TEST(Attention, SinglePositionIsValueProjection) {
  emu::Rng rng(18);
  MhaFixture fx(rng, 8);
  Tensor x = random_tensor(rng, {1, 8});
  emu::nn::MhaCache cache;
  Tensor out = emu::nn::multi_head_attention(x, x, fx.params, 2, full_mask(1, 1), cache);
  Tensor expected = emu::nn::matmul(emu::nn::matmul(x, fx.params.wv->value), fx.params.wo->value);
  for (size_t i = 0; i < out.size(); ++i) EXPECT_NEAR(out.data[i], expected.data[i], 1e-12);
}

TEST(Attention, UniformKeysGiveUniformWeights) {
  emu::Rng rng(19);
  MhaFixture fx(rng, 8);
  Tensor kv({3, 8});
  Tensor row = random_tensor(rng, {1, 8});
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 8; ++j) kv.at(i, j) = row.at(0, j);
  Tensor q = random_tensor(rng, {2, 8});
  emu::nn::MhaCache cache;
  emu::nn::multi_head_attention(q, kv, fx.params, 2, full_mask(2, 3), cache);
  for (const Tensor& attn : cache.attn)
    for (double v : attn.data) EXPECT_NEAR(v, 1.0 / 3.0, 1e-12);
}

TEST(Attention, ThreePositionCaseMatchesHandComputation) {
  emu::Rng rng(20);
  int d = 8, heads = 2, hd = d / heads;
  MhaFixture fx(rng, d);
  Tensor x = random_tensor(rng, {3, d});
  emu::nn::MhaCache cache;
  Tensor out = emu::nn::multi_head_attention(x, x, fx.params, heads, full_mask(3, 3), cache);

  // Direct dense evaluation, written from the definition.
  auto proj = [&](const Tensor& w) {
    Tensor r({3, d});
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < d; ++j) {
        double acc = 0.0;
        for (int k = 0; k < d; ++k) acc += x.at(i, k) * w.at(k, j);
        r.at(i, j) = acc;
      }
    return r;
  };
  Tensor q = proj(fx.params.wq->value), k = proj(fx.params.wk->value), v = proj(fx.params.wv->value);
  Tensor ctx({3, d});
  for (int h = 0; h < heads; ++h) {
    for (int i = 0; i < 3; ++i) {
      double scores[3];
      for (int j = 0; j < 3; ++j) {
        double acc = 0.0;
        for (int e = 0; e < hd; ++e) acc += q.at(i, h * hd + e) * k.at(j, h * hd + e);
        scores[j] = acc / std::sqrt(static_cast<double>(hd));
      }
      double mx = std::max({scores[0], scores[1], scores[2]});
      double z = 0.0;
      for (double s : scores) z += std::exp(s - mx);
      for (int j = 0; j < 3; ++j) {
        double w = std::exp(scores[j] - mx) / z;
        for (int e = 0; e < hd; ++e) ctx.at(i, h * hd + e) += w * v.at(j, h * hd + e);
      }
    }
  }
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < d; ++j) {
      double acc = 0.0;
      for (int e = 0; e < d; ++e) acc += ctx.at(i, e) * fx.params.wo->value.at(e, j);
      EXPECT_NEAR(out.at(i, j), acc, 1e-10);
    }
}

TEST(Attention, BackwardMatchesFiniteDifferences) {
  emu::Rng rng(21);
  for (int seed = 0; seed < 5; ++seed) {
    int d = 4, heads = 2;
    MhaFixture fx(rng, d);
    Tensor x = random_tensor(rng, {3, d});
    Tensor w = random_tensor(rng, {3, d});
    AttnMask mask = full_mask(3, 3);
    // Causal-ish mask with one blocked pair to exercise masking in backward.
    mask.allowed[1] = 0;

    auto loss = [&] {
      emu::nn::MhaCache cache;
      return weighted_sum(emu::nn::multi_head_attention(x, x, fx.params, heads, mask, cache), w);
    };
    emu::nn::MhaCache cache;
    emu::nn::multi_head_attention(x, x, fx.params, heads, mask, cache);
    Tensor dx({3, d});
    fx.store.zero_grads();
    emu::nn::multi_head_attention_backward(x, x, fx.params, heads, mask, cache, w, dx, dx);
    for (size_t i = 0; i < x.size(); ++i) EXPECT_NEAR(dx.data[i], fd(loss, x.data[i]), kTol);
    for (Parameter* p : fx.store.all())
      for (size_t i = 0; i < p->value.size(); ++i)
        EXPECT_NEAR(p->grad.data[i], fd(loss, p->value.data[i]), kTol) << p->name;
  }
}

// ---------------------------------------------------------------------------
// Cross entropy
// ---------------------------------------------------------------------------

TEST(CrossEntropy, UniformLogitsGiveLogVocab) {
  Tensor logits({3, 10});
  auto res = emu::nn::cross_entropy(logits, {1, 5, 9}, {1, 1, 1});
  EXPECT_NEAR(res.loss, std::log(10.0), 1e-12);
}

TEST(CrossEntropy, ConfidentCorrectApproachesZero) {
  Tensor logits({1, 4});
  logits.at(0, 2) = 50.0;
  auto res = emu::nn::cross_entropy(logits, {2}, {1});
  EXPECT_LT(res.loss, 1e-9);
}

TEST(CrossEntropy, MatchesDirectSummationOracle) {
  emu::Rng rng(22);
  for (int seed = 0; seed < 20; ++seed) {
    Tensor logits = random_tensor(rng, {5, 7}, 2.0);
    std::vector<int> targets = {0, 3, 6, 2, 1};
    std::vector<uint8_t> mask = {1, 0, 1, 1, 0};
    auto res = emu::nn::cross_entropy(logits, targets, mask);

    double total = 0.0;
    int n = 0;
    for (int i = 0; i < 5; ++i) {
      if (!mask[i]) continue;
      double z = 0.0;
      for (int j = 0; j < 7; ++j) z += std::exp(logits.at(i, j));
      total += -std::log(std::exp(logits.at(i, targets[i])) / z);
      ++n;
    }
    EXPECT_NEAR(res.loss, total / n, 1e-9);

    auto loss = [&] { return emu::nn::cross_entropy(logits, targets, mask).loss; };
    for (size_t i = 0; i < logits.size(); ++i)
      EXPECT_NEAR(res.d_logits.data[i], fd(loss, logits.data[i]), kTol);
  }
}

TEST(CrossEntropy, EmptyMaskRejected) {
  Tensor logits({2, 4});
  EXPECT_THROW(emu::nn::cross_entropy(logits, {0, 1}, {0, 0}), std::invalid_argument);
}

// ---------------------------------------------------------------------------
// grad_check
// ---------------------------------------------------------------------------

TEST(GradCheck, ConstantFunctionHasZeroError) {
  emu::nn::ParamStore store;
  Parameter& p = store.create("p", {2, 2});
  auto loss = [&](bool with_grad) {
    if (with_grad) store.zero_grads();
    return 7.5;
  };
  auto res = emu::nn::grad_check(loss, store.all(), 1e-4);
  EXPECT_EQ(res.max_rel_error, 0.0);
  (void)p;
}

TEST(GradCheck, LinearFunctionIsExact) {
  emu::nn::ParamStore store;
  Parameter& p = store.create("x", {1, 3});
  p.value.data = {1.0, -2.0, 0.5};
  const std::vector<double> a = {2.0, 3.0, -1.0};
  auto loss = [&](bool with_grad) {
    double acc = 0.0;
    for (int i = 0; i < 3; ++i) acc += a[i] * p.value.data[i];
    if (with_grad) {
      store.zero_grads();
      for (int i = 0; i < 3; ++i) p.grad.data[i] = a[i];
    }
    return acc;
  };
  auto res = emu::nn::grad_check(loss, store.all(), 1e-4);
  EXPECT_LT(res.max_rel_error, 1e-9);
}

TEST(GradCheck, TwoLayerTransformerFragment) {
  // d_model 8, two blocks, random input, weighted-sum readout.
  emu::Rng rng(23);
  int d = 8, heads = 2;
  emu::nn::ParamStore store;
  std::vector<emu::nn::BlockParams> blocks(2);
  for (int l = 0; l < 2; ++l) {
    std::string b = "block" + std::to_string(l) + ".";
    auto& bp = blocks[l];
    bp.ln1_g = &store.create(b + "ln1g", {1, d});
    bp.ln1_b = &store.create(b + "ln1b", {1, d});
    bp.attn.wq = &store.create(b + "wq", {d, d});
    bp.attn.wk = &store.create(b + "wk", {d, d});
    bp.attn.wv = &store.create(b + "wv", {d, d});
    bp.attn.wo = &store.create(b + "wo", {d, d});
    bp.ln2_g = &store.create(b + "ln2g", {1, d});
    bp.ln2_b = &store.create(b + "ln2b", {1, d});
    bp.w1 = &store.create(b + "w1", {d, 4 * d});
    bp.b1 = &store.create(b + "b1", {1, 4 * d});
    bp.w2 = &store.create(b + "w2", {4 * d, d});
    bp.b2 = &store.create(b + "b2", {1, d});
  }
  for (Parameter* p : store.all()) {
    if (p->name.ends_with("1g") || p->name.ends_with("2g"))
      emu::nn::init_constant(*p, 1.0);
    else
      for (double& v : p->value.data) v = 0.2 * rng.next_gaussian();
  }
  Tensor x = random_tensor(rng, {4, d});
  Tensor w = random_tensor(rng, {4, d});
  AttnMask mask = full_mask(4, 4);

  auto loss = [&](bool with_grad) {
    std::vector<emu::nn::BlockCache> caches(2);
    Tensor h = x;
    for (int l = 0; l < 2; ++l) h = emu::nn::block_forward(h, blocks[l], heads, mask, caches[l]);
    double out = weighted_sum(h, w);
    if (with_grad) {
      store.zero_grads();
      Tensor dh = w;
      for (int l = 1; l >= 0; --l) dh = emu::nn::block_backward(dh, blocks[l], heads, mask, caches[l]);
    }
    return out;
  };
  auto res = emu::nn::grad_check(loss, store.all(), 1e-4);
  EXPECT_LT(res.max_rel_error, 1e-4) << res.worst_param;
}

TEST(GradCheck, EpsilonRangeEnforced) {
  emu::nn::ParamStore store;
  store.create("p", {1, 1});
  auto loss = [&](bool) { return 0.0; };
  EXPECT_THROW(emu::nn::grad_check(loss, store.all(), 1e-7), std::invalid_argument);
  EXPECT_THROW(emu::nn::grad_check(loss, store.all(), 1e-2), std::invalid_argument);
}

// ---------------------------------------------------------------------------
// Adam
// ---------------------------------------------------------------------------

TEST(Adam, ZeroGradientsLeaveParamsUnchanged) {
  emu::nn::ParamStore store;
  Parameter& p = store.create("p", {1, 3});
  p.value.data = {1.0, 2.0, 3.0};
  std::vector<double> before = p.value.data;
  emu::nn::Adam adam({}, store.all());
  store.zero_grads();
  adam.step(store.all());
  EXPECT_EQ(p.value.data, before);
}

TEST(Adam, DescendsOnQuadratic) {
  emu::nn::ParamStore store;
  Parameter& p = store.create("x", {1, 1});
  p.value.data = {1.0};
  emu::nn::AdamConfig cfg;
  cfg.lr = 1e-2;
  emu::nn::Adam adam(cfg, store.all());
  p.grad.data = {2.0 * p.value.data[0]};
  adam.step(store.all());
  EXPECT_LT(p.value.data[0], 1.0);
}

TEST(Adam, TwoDQuadraticConvergesBelowTolerance) {
  emu::nn::ParamStore store;
  Parameter& p = store.create("x", {1, 2});
  p.value.data = {1.5, -2.0};
  emu::nn::AdamConfig cfg;
  cfg.lr = 5e-2;
  emu::nn::Adam adam(cfg, store.all());
  double loss = 0.0;
  for (int step = 0; step < 200; ++step) {
    // f(x) = x0^2 + 4 x1^2, minimum 0
    loss = p.value.data[0] * p.value.data[0] + 4.0 * p.value.data[1] * p.value.data[1];
    p.grad.data[0] = 2.0 * p.value.data[0];
    p.grad.data[1] = 8.0 * p.value.data[1];
    adam.step(store.all());
  }
  loss = p.value.data[0] * p.value.data[0] + 4.0 * p.value.data[1] * p.value.data[1];
  EXPECT_LT(loss, 1e-6);
}

// ---------------------------------------------------------------------------
// Tokenizer
// ---------------------------------------------------------------------------

TEST(Tokenizer, VocabularySize) { EXPECT_EQ(emu::tok::kVocabSize, 265); }

TEST(Tokenizer, SubjectTagsAreAtomic) {
  auto ids = emu::tok::encode("for subject1 near subject3");
  int subj_count = 0;
  for (int id : ids) {
    if (id == emu::tok::SUBJ1 || id == emu::tok::SUBJ3) ++subj_count;
    EXPECT_NE(id, 's');  // "subject" never appears as loose bytes here
  }
  EXPECT_EQ(subj_count, 2);
  EXPECT_EQ(emu::tok::decode(ids), "for subject1 near subject3");
}

TEST(Tokenizer, DecodeEncodeIdentityOnRandomBytes) {
  emu::Rng rng(31);
  for (int trial = 0; trial < 200; ++trial) {
    std::string text;
    int len = rng.next_int(40);
    for (int i = 0; i < len; ++i) text.push_back(static_cast<char>(rng.next_int(256)));
    EXPECT_EQ(emu::tok::decode(emu::tok::encode(text)), text);
  }
}

TEST(Tokenizer, EncodeDecodeIdentityOnSpecialSequences) {
  emu::Rng rng(32);
  const int specials[] = {emu::tok::PAD,  emu::tok::BOS,   emu::tok::EOS,
                          emu::tok::SEP,  emu::tok::YES,   emu::tok::NO,
                          emu::tok::SUBJ1, emu::tok::SUBJ2, emu::tok::SUBJ3};
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<int> seq;
    int len = rng.next_int(12);
    for (int i = 0; i < len; ++i) seq.push_back(specials[rng.next_int(9)]);
    EXPECT_EQ(emu::tok::encode(emu::tok::decode(seq)), seq);
  }
}

TEST(Tokenizer, SubjectTokenHelper) {
  EXPECT_EQ(emu::tok::subject_token(1), emu::tok::SUBJ1);
  EXPECT_EQ(emu::tok::subject_token(3), emu::tok::SUBJ3);
  EXPECT_THROW(emu::tok::subject_token(4), std::out_of_range);
}

TEST(Tokenizer, SubjectPrefixDoesNotOvermatch) {
  // "subject12" is subject1 followed by the byte '2'
  auto ids = emu::tok::encode("subject12");
  ASSERT_EQ(ids.size(), 2u);
  EXPECT_EQ(ids[0], emu::tok::SUBJ1);
  EXPECT_EQ(ids[1], '2');
  EXPECT_EQ(emu::tok::decode(ids), "subject12");
}

// ---------------------------------------------------------------------------
// Checkpoints
// ---------------------------------------------------------------------------

TEST(Checkpoint, RoundTripAndMismatchDetection) {
  emu::Rng rng(33);
  emu::nn::ParamStore store;
  Parameter& a = store.create("a", {2, 3});
  Parameter& b = store.create("b", {1, 4});
  for (double& v : a.value.data) v = static_cast<float>(rng.next_gaussian());
  for (double& v : b.value.data) v = static_cast<float>(rng.next_gaussian());

  std::string bytes = emu::nn::save_params(store);
  EXPECT_EQ(bytes, emu::nn::save_params(store));  // deterministic

  emu::nn::ParamStore other;
  other.create("a", {2, 3});
  other.create("b", {1, 4});
  emu::nn::load_params(other, bytes);
  EXPECT_EQ(other.get("a").value, a.value);
  EXPECT_EQ(other.get("b").value, b.value);

  emu::nn::ParamStore wrong;
  wrong.create("a", {2, 3});
  EXPECT_THROW(emu::nn::load_params(wrong, bytes), emu::ValidationError);

  emu::nn::ParamStore wrong_shape;
  wrong_shape.create("a", {2, 3});
  wrong_shape.create("b", {4, 1});
  EXPECT_THROW(emu::nn::load_params(wrong_shape, bytes), emu::ValidationError);

  std::string corrupted = bytes;
  corrupted[0] = 'X';
  EXPECT_THROW(emu::nn::load_params(other, corrupted), emu::ValidationError);
}

}  // namespace
