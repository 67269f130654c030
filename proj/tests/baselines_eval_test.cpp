#include "emu/baselines.hpp"
#include "emu/eval.hpp"

#include <gtest/gtest.h>

#include <algorithm>

#include "emu/rng.hpp"
#include "emu/synth.hpp"

namespace {

using emu::FeatureTable;
using emu::RetrievalIndex;

FeatureTable table_from_rows(const std::vector<std::vector<double>>& rows) {
  FeatureTable t;
  t.dim = static_cast<int>(rows.empty() ? 0 : rows[0].size());
  for (size_t i = 0; i < rows.size(); ++i) {
    emu::Region r;
    r.index = static_cast<int>(i);
    r.box = {0, 0, 1, 1};
    t.regions.push_back(r);
    t.values.insert(t.values.end(), rows[i].begin(), rows[i].end());
  }
  return t;
}

TEST(PoolFeatures, SingleRowIsIdentity) {
  FeatureTable t = table_from_rows({{1.0, 2.0, 3.0}});
  EXPECT_EQ(emu::pool_features(t), (std::vector<double>{1.0, 2.0, 3.0}));
}

TEST(PoolFeatures, MeanIsIdempotentOnEqualRows) {
  FeatureTable t = table_from_rows({{1.0, -2.0}, {1.0, -2.0}});
  EXPECT_EQ(emu::pool_features(t), (std::vector<double>{1.0, -2.0}));
}

TEST(PoolFeatures, MatchesDirectMeanOracle) {
  emu::Rng rng(61);
  for (int trial = 0; trial < 20; ++trial) {
    int n = 1 + rng.next_int(6), d = 1 + rng.next_int(8);
    std::vector<std::vector<double>> rows(n, std::vector<double>(d));
    for (auto& row : rows)
      for (double& v : row) v = rng.next_gaussian();
    std::vector<double> expected(d, 0.0);
    for (int c = 0; c < d; ++c) {
      for (int r = 0; r < n; ++r) expected[c] += rows[r][c];
      expected[c] /= n;
    }
    auto got = emu::pool_features(table_from_rows(rows));
    for (int c = 0; c < d; ++c) EXPECT_NEAR(got[c], expected[c], 1e-12);
  }
}

TEST(PoolFeatures, EmptyTableRejected) {
  FeatureTable t;
  t.dim = 4;
  EXPECT_THROW(emu::pool_features(t), emu::ValidationError);
}

RetrievalIndex random_index(emu::Rng& rng, int rows, int dim) {
  RetrievalIndex index;
  for (int i = 0; i < rows; ++i) {
    std::vector<double> v(dim);
    for (double& x : v) x = rng.next_gaussian();
    index.add("img_" + std::to_string(i), v, {});
  }
  return index;
}

TEST(Retrieval, ExactRowHasCosineOne) {
  emu::Rng rng(62);
  RetrievalIndex index = random_index(rng, 10, 6);
  std::vector<double> query = index.row(4).vec;
  EXPECT_EQ(emu::retrieval_predict(query, index).image_id, "img_4");
}

TEST(Retrieval, ScaleInvariantArgmax) {
  emu::Rng rng(63);
  RetrievalIndex index = random_index(rng, 20, 5);
  std::vector<double> query(5);
  for (double& v : query) v = rng.next_gaussian();
  size_t base = index.nearest(query);
  std::vector<double> scaled = query;
  for (double& v : scaled) v *= 37.5;
  EXPECT_EQ(index.nearest(scaled), base);
}

TEST(Retrieval, MatchesExhaustiveOracle) {
  emu::Rng rng(64);
  for (int trial = 0; trial < 50; ++trial) {
    int dim = 2 + rng.next_int(10);
    RetrievalIndex index = random_index(rng, 100, dim);
    std::vector<double> query(dim);
    for (double& v : query) v = rng.next_gaussian();

    // Independent exhaustive argmax in double precision.
    size_t best = 0;
    double best_sim = -2.0;
    for (size_t i = 0; i < index.size(); ++i) {
      double dot = 0.0, nq = 0.0, nr = 0.0;
      for (int e = 0; e < dim; ++e) {
        dot += query[e] * index.row(i).vec[e];
        nq += query[e] * query[e];
        nr += index.row(i).vec[e] * index.row(i).vec[e];
      }
      double sim = dot / (std::sqrt(nq) * std::sqrt(nr));
      if (sim > best_sim) {
        best_sim = sim;
        best = i;
      }
    }
    EXPECT_EQ(index.nearest(query), best);
  }
}

TEST(Retrieval, PerRowScalingLeavesEveryArgmaxUnchanged) {
  emu::Rng rng(65);
  RetrievalIndex index = random_index(rng, 30, 4);
  RetrievalIndex scaled;
  for (size_t i = 0; i < index.size(); ++i) {
    std::vector<double> v = index.row(i).vec;
    double s = 0.1 + rng.next_unit() * 10.0;
    for (double& x : v) x *= s;
    scaled.add(index.row(i).image_id, v, {});
  }
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> query(4);
    for (double& v : query) v = rng.next_gaussian();
    EXPECT_EQ(index.nearest(query), scaled.nearest(query));
  }
}

TEST(Retrieval, ZeroVectorsExcludedAndErrors) {
  RetrievalIndex index;
  EXPECT_FALSE(index.add("zero", {0.0, 0.0}, {}));
  EXPECT_EQ(index.size(), 0u);
  EXPECT_EQ(index.excluded_count(), 1u);
  EXPECT_THROW(index.nearest({1.0, 0.0}), emu::ValidationError);
  EXPECT_TRUE(index.add("ok", {1.0, 0.0}, {}));
  EXPECT_THROW(index.nearest({1.0, 0.0, 0.0}), emu::ValidationError);
  EXPECT_THROW(index.nearest({0.0, 0.0}), emu::ValidationError);
}

TEST(Retrieval, TieBreaksToLowestInsertionOrder) {
  RetrievalIndex index;
  index.add("first", {2.0, 0.0}, {});
  index.add("second", {4.0, 0.0}, {});  // same direction, same cosine
  EXPECT_EQ(emu::retrieval_predict({1.0, 0.0}, index).image_id, "first");
}

// ---------------------------------------------------------------------------
// Text-only and cross-modal baselines
// ---------------------------------------------------------------------------

TEST(TextOnly, OutputIgnoresImages) {
  emu::SynthConfig cfg;
  cfg.n_train = 4;
  cfg.n_val = 2;
  cfg.n_test = 2;
  auto ds = emu::synth_dataset(cfg, 88);
  auto inputs = emu::synth_inputs(ds.train, cfg.overlap, false);

  emu::nn::ModelConfig mc;
  mc.d_model = 16;
  mc.n_heads = 2;
  mc.n_layers = 1;
  mc.max_regions = 8;
  mc.max_tokens = 72;
  emu::PelicanModel model(mc, cfg.feature_dim, 5);

  emu::AblationConfig ab;
  ab.use_source_image = false;
  auto a = emu::strip_images(inputs[0]);
  auto b = emu::strip_images(inputs[1]);
  ASSERT_EQ(a.question_tokens, b.question_tokens);  // same question type
  auto prefix = emu::tok::encode(emu::synth_prefix());
  EXPECT_EQ(model.generate(a, ab, prefix, 8), model.generate(b, ab, prefix, 8));
  EXPECT_EQ(model.classify_yes_no(a, ab).positive, model.classify_yes_no(b, ab).positive);
}

TEST(CrossModal, SubjectQuestionAppendsRegionVector) {
  emu::SynthConfig cfg;
  cfg.n_train = 2;
  cfg.n_val = 2;
  cfg.n_test = 2;
  auto ds = emu::synth_dataset(cfg, 89);
  auto input = emu::make_input(ds.train[0].record, 0, ds.train[0].source, ds.train[0].edited,
                               cfg.overlap, false);
  size_t before = input.edited.row_count();
  int subject_index = emu::select_seed(ds.train[0].record.regions, ds.train[0].record.qa[0].first);
  auto appended = emu::cross_modal_input(input, subject_index);
  EXPECT_EQ(appended.edited.row_count(), before + 1);
  for (int e = 0; e < appended.edited.dim; ++e)
    EXPECT_EQ(appended.edited.at(before, e),
              appended.edited.at(static_cast<size_t>(subject_index), e));
  // Non-subject questions append nothing.
  EXPECT_EQ(emu::cross_modal_input(input, std::nullopt).edited.row_count(), before);
}

TEST(CrossModal, OutputsInvariantToDagContents) {
  emu::Rng rng(90);
  emu::nn::ModelConfig mc;
  mc.d_model = 16;
  mc.n_heads = 2;
  mc.n_layers = 1;
  mc.max_regions = 8;
  mc.max_tokens = 72;
  emu::SynthConfig cfg;
  cfg.n_train = 2;
  cfg.n_val = 2;
  cfg.n_test = 2;
  auto ds = emu::synth_dataset(cfg, 91);
  auto input = emu::make_input(ds.train[0].record, 0, ds.train[0].source, ds.train[0].edited,
                               cfg.overlap, false);
  emu::PelicanModel model(mc, cfg.feature_dim, 5);

  auto mutated = input;
  mutated.priorities.reachable.clear();  // a completely different DAG
  auto ab = emu::cross_modal_ablation();
  EXPECT_EQ(model.forward_states(input, ab, false), model.forward_states(mutated, ab, false));
}

// ---------------------------------------------------------------------------
// Metrics
// ---------------------------------------------------------------------------

TEST(BalancedAccuracy, BasicCases) {
  EXPECT_DOUBLE_EQ(emu::balanced_accuracy({true, false}, {true, false}).accuracy, 1.0);
  EXPECT_DOUBLE_EQ(
      emu::balanced_accuracy({true, true, false, false}, {true, false, false, true}).accuracy, 0.5);
  auto r = emu::balanced_accuracy({true, true, true, false}, {true, true, true, true});
  EXPECT_DOUBLE_EQ(r.accuracy, 0.75);
  EXPECT_TRUE(r.balance_warning);  // all-positive golds
  EXPECT_THROW(emu::balanced_accuracy({}, {}), emu::ValidationError);
}

TEST(BalancedAccuracy, SelfComparisonIsPerfect) {
  emu::Rng rng(71);
  std::vector<bool> p;
  for (int i = 0; i < 50; ++i) p.push_back(rng.next_bool());
  EXPECT_DOUBLE_EQ(emu::balanced_accuracy(p, p).accuracy, 1.0);
}

TEST(BalancedAccuracy, CoinFlipIsNearChance) {
  emu::Rng rng(72);
  std::vector<bool> preds, golds;
  for (int i = 0; i < 10000; ++i) {
    preds.push_back(rng.next_bool());
    golds.push_back(i % 2 == 0);
  }
  auto r = emu::balanced_accuracy(preds, golds);
  EXPECT_GE(r.accuracy, 0.48);
  EXPECT_LE(r.accuracy, 0.52);
  EXPECT_FALSE(r.balance_warning);
}

TEST(Bleu, IdenticalCorporaScoreOne) {
  std::vector<std::string> corpus = {"the cat sat on the mat", "a dog barks at strangers loudly"};
  std::vector<std::vector<std::string>> refs = {{corpus[0]}, {corpus[1]}};
  EXPECT_DOUBLE_EQ(emu::bleu4_text(corpus, refs), 1.0);
}

TEST(Bleu, NoSharedUnigramsScoreZero) {
  EXPECT_DOUBLE_EQ(emu::bleu4_text({"aa bb cc dd"}, {{"ee ff gg hh"}}), 0.0);
}

TEST(Bleu, HandComputedBrevityCase) {
  // precisions 4/4, 3/3, 2/2, 1/1; BP = exp(1 - 5/4)
  double score = emu::bleu4_text({"a b c d"}, {{"a b c d e"}});
  EXPECT_NEAR(score, 0.7788, 1e-4);
}

TEST(Bleu, ClosestReferenceLengthControlsPenalty) {
  // An exact-length extra reference removes the brevity penalty entirely.
  double score = emu::bleu4_text({"a b c d"}, {{"a b c d e", "a b c d"}});
  EXPECT_DOUBLE_EQ(score, 1.0);
}

TEST(Bleu, MultiReferenceClippingUsesMaxCounts) {
  // "a b c d a b c d" against two partial references: every 1-4 gram of the
  // hypothesis appears in some reference often enough except the overlap
  // 4-grams crossing the repetition.
  double multi = emu::bleu4_text({"a b c d a b c d"}, {{"a b c d a b c d"}});
  double single = emu::bleu4_text({"a b c d a b c d"}, {{"a b c d"}});
  EXPECT_DOUBLE_EQ(multi, 1.0);
  EXPECT_LT(single, 1.0);
  EXPECT_GT(single, 0.0);
}

TEST(Bleu, PermutationInvariantOverAlignedPairs) {
  std::vector<std::string> hyps = {"one two three four", "five six seven eight nine",
                                   "ten eleven twelve thirteen"};
  std::vector<std::vector<std::string>> refs = {{"one two three four five"},
                                                {"five six seven eight nine"},
                                                {"ten twelve eleven thirteen"}};
  double base = emu::bleu4_text(hyps, refs);
  std::vector<size_t> order = {2, 0, 1};
  std::vector<std::string> hyps2;
  std::vector<std::vector<std::string>> refs2;
  for (size_t i : order) {
    hyps2.push_back(hyps[i]);
    refs2.push_back(refs[i]);
  }
  EXPECT_DOUBLE_EQ(emu::bleu4_text(hyps2, refs2), base);
}

TEST(Bleu, RangeAndErrors) {
  emu::Rng rng(73);
  for (int trial = 0; trial < 30; ++trial) {
    auto sentence = [&](int len) {
      std::string s;
      for (int i = 0; i < len; ++i) s += std::string(1, static_cast<char>('a' + rng.next_int(6))) + " ";
      return s;
    };
    std::vector<std::string> hyps = {sentence(4 + rng.next_int(6)), sentence(4 + rng.next_int(6))};
    std::vector<std::vector<std::string>> refs = {{sentence(4 + rng.next_int(6))},
                                                  {sentence(4 + rng.next_int(6))}};
    double b = emu::bleu4_text(hyps, refs);
    EXPECT_GE(b, 0.0);
    EXPECT_LE(b, 1.0);
  }
  EXPECT_THROW(emu::bleu4_text({}, {}), emu::ValidationError);
  EXPECT_THROW(emu::bleu4_text({"a"}, {}), emu::ValidationError);
}

TEST(Bleu, PunctuationSplitsIntoTokens) {
  auto toks = emu::bleu_tokenize("hello, world! it's fine");
  std::vector<std::string> expected = {"hello", ",", "world", "!", "it", "'", "s", "fine"};
  EXPECT_EQ(toks, expected);
}

TEST(Report, DeterministicAndRefusesEmpty) {
  emu::EvalReport report;
  report.manifest = {{"seed", "7"}, {"tau", "0.100000"}};
  emu::MetricRow row;
  row.model = "pelican";
  row.ablation_flags = "priority_graph=1";
  row.qtype = "overall";
  row.n = 500;
  row.accuracy = 0.98;
  row.bleu = 0.8123;
  row.perplexity = 1.37;
  report.rows.push_back(row);
  emu::MetricRow na = row;
  na.model = "retrieval";
  na.perplexity.reset();
  report.rows.push_back(na);
  report.curves.push_back({1, 2.5, 0.6, 9.0});

  auto a = emu::emit_report(report);
  auto b = emu::emit_report(report);
  EXPECT_EQ(a.report_csv, b.report_csv);
  EXPECT_EQ(a.table_txt, b.table_txt);
  EXPECT_EQ(a.plot_csv, b.plot_csv);
  EXPECT_NE(a.report_csv.find("model,ablation_flags,qtype,n,accuracy,bleu4,perplexity"),
            std::string::npos);
  EXPECT_NE(a.report_csv.find("retrieval"), std::string::npos);
  EXPECT_NE(a.report_csv.find("n/a"), std::string::npos);
  EXPECT_NE(a.plot_csv.find("epoch,loss,accuracy,perplexity"), std::string::npos);

  emu::EvalReport empty;
  EXPECT_THROW(emu::emit_report(empty), emu::ValidationError);
}

}  // namespace
