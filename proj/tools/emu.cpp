// emu: ingest, split, graph, synth, train, eval, retrieve, ablate, report.
//
// Exit codes: 0 success, 1 validation/usage error, 2 internal invariant
// failure. All outputs are written atomically (temp file + rename) and are
// byte-identical across repeated runs with the same config and seed.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "emu/annotations.hpp"
#include "emu/baselines.hpp"
#include "emu/checkpoint.hpp"
#include "emu/config.hpp"
#include "emu/edit_graph.hpp"
#include "emu/eval.hpp"
#include "emu/io.hpp"
#include "emu/pelican.hpp"
#include "emu/synth.hpp"
#include "emu/trainer.hpp"

namespace fs = std::filesystem;

namespace {

std::string fmt_g(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

std::vector<emu::AnnotationRecord> load_annotations(const std::string& path) {
  return emu::parse_annotations(emu::read_file(path));
}

// ---------------------------------------------------------------------------
// Common config plumbing
// ---------------------------------------------------------------------------

struct CommonFlags {
  std::string config_path;
  std::optional<int64_t> seed;
  std::string ablation;
  std::optional<double> tau;
  std::string overlap_mode;
  std::string out;
  std::string in;
};

void add_common_flags(CLI::App* cmd, CommonFlags& flags, bool with_in) {
  cmd->add_option("--config", flags.config_path, "run configuration file (key = value lines)");
  cmd->add_option("--seed", flags.seed, "seed override");
  cmd->add_option("--ablation", flags.ablation,
                  "comma list of no_priority_graph,no_annotated_features,no_source_image,from_scratch");
  cmd->add_option("--tau", flags.tau, "overlap threshold override");
  cmd->add_option("--overlap-mode", flags.overlap_mode, "standard|paper");
  cmd->add_option("--out", flags.out, "output directory");
  if (with_in) cmd->add_option("--in", flags.in, "input file");
}

emu::RunConfig merge_config(const CommonFlags& flags) {
  emu::RunConfig cfg;
  if (!flags.config_path.empty()) cfg = emu::RunConfig::from_file(flags.config_path);
  if (flags.seed) cfg.set("seed", std::to_string(*flags.seed));
  if (flags.tau) cfg.set("overlap.tau", fmt_g(*flags.tau));
  if (!flags.overlap_mode.empty()) cfg.set("overlap.mode", flags.overlap_mode);
  if (!flags.out.empty()) cfg.set("out", flags.out);
  if (!flags.in.empty()) cfg.set("in", flags.in);
  if (!flags.ablation.empty()) {
    std::string rest = flags.ablation;
    while (!rest.empty()) {
      size_t comma = rest.find(',');
      std::string tokn = rest.substr(0, comma);
      rest = comma == std::string::npos ? "" : rest.substr(comma + 1);
      if (tokn == "full") continue;
      if (tokn == "no_priority_graph")
        cfg.set("ablation.use_priority_graph", "false");
      else if (tokn == "no_annotated_features")
        cfg.set("ablation.use_annotated_features", "false");
      else if (tokn == "no_source_image")
        cfg.set("ablation.use_source_image", "false");
      else if (tokn == "from_scratch")
        cfg.set("ablation.from_scratch", "true");
      else
        throw emu::ValidationError("unknown ablation token '" + tokn + "'");
    }
  }
  emu::validate_config_keys(cfg);
  return cfg;
}

fs::path out_dir(const emu::RunConfig& cfg) {
  fs::path dir = cfg.get_string("out");
  emu::ensure_dir(dir);
  return dir;
}

// Output location is invocation detail, not run configuration; keep the
// manifest identical across re-runs into different directories.
std::vector<std::pair<std::string, std::string>> manifest_of(const emu::RunConfig& cfg) {
  std::vector<std::pair<std::string, std::string>> m;
  for (const auto& [k, v] : cfg.entries())
    if (k != "out") m.emplace_back(k, v);
  return m;
}

// ---------------------------------------------------------------------------
// Feature loading and input assembly
// ---------------------------------------------------------------------------

struct ImageFeatures {
  emu::FeatureTable source;
  emu::FeatureTable edited;
};

ImageFeatures load_image_features(const fs::path& dir, const std::string& image_id) {
  ImageFeatures f;
  fs::path edit_path = dir / (image_id + ".edit.emuf");
  fs::path src_path = dir / (image_id + ".src.emuf");
  f.edited = emu::read_features(emu::read_file(edit_path), image_id);
  if (fs::exists(src_path)) f.source = emu::read_features(emu::read_file(src_path), image_id);
  return f;
}

struct EvalItem {
  emu::PelicanInput input;
  emu::QuestionType qtype;
  bool gold = false;
  std::string image_id;
  size_t group = 0;  // hypothesis group: one generation per (image, qtype, subject)
};

struct Variant {
  enum Kind { pelican, text_only, cross_modal } kind = pelican;

  static Variant parse(const std::string& s) {
    Variant v;
    if (s == "pelican")
      v.kind = pelican;
    else if (s == "text_only")
      v.kind = text_only;
    else if (s == "cross_modal")
      v.kind = cross_modal;
    else
      throw emu::ValidationError("unknown variant '" + s + "'");
    return v;
  }

  const char* name() const {
    switch (kind) {
      case pelican: return "pelican";
      case text_only: return "text_only";
      case cross_modal: return "cross_modal";
    }
    return "?";
  }

  emu::AblationConfig apply(emu::AblationConfig ab) const {
    if (kind == text_only) ab.use_source_image = false;
    if (kind == cross_modal) {
      ab.use_priority_graph = false;
      ab.use_annotated_features = false;
    }
    return ab;
  }
};

std::vector<EvalItem> build_items(const std::vector<emu::AnnotationRecord>& records,
                                  const fs::path& features_dir, const emu::OverlapConfig& ocfg,
                                  const Variant& variant, bool with_target) {
  std::vector<EvalItem> items;
  std::map<std::string, size_t> group_ids;
  for (const emu::AnnotationRecord& rec : records) {
    ImageFeatures feats = load_image_features(features_dir, rec.image_id);
    for (size_t qi = 0; qi < rec.qa.size(); ++qi) {
      EvalItem item;
      item.input = emu::make_input(rec, qi, feats.source, feats.edited, ocfg, with_target);
      if (variant.kind == Variant::text_only) item.input = emu::strip_images(item.input);
      if (variant.kind == Variant::cross_modal)
        item.input = emu::cross_modal_input(item.input, rec.qa[qi].first.subject_index);
      item.qtype = rec.qa[qi].first.qtype;
      item.gold = rec.qa[qi].second.positive;
      item.image_id = rec.image_id;
      std::string group_key = rec.image_id + "\x1f" + emu::to_string(item.qtype) + "\x1f" +
                              std::to_string(rec.qa[qi].first.subject_index.value_or(-1));
      auto [it, inserted] = group_ids.emplace(group_key, group_ids.size());
      item.group = it->second;
      items.push_back(std::move(item));
    }
  }
  return items;
}

std::string training_log_csv(const std::vector<emu::EpochStats>& log) {
  std::string out = "epoch,loss,accuracy,perplexity\n";
  char buf[128];
  for (const emu::EpochStats& e : log) {
    std::snprintf(buf, sizeof(buf), "%d,%.6f,%.6f,%.6f\n", e.epoch, e.loss, e.accuracy,
                  e.perplexity);
    out += buf;
  }
  return out;
}

// ---------------------------------------------------------------------------
// graph output format (golden-file stable)
// ---------------------------------------------------------------------------

std::string graph_text(const emu::AnnotationRecord& rec, const emu::OverlapConfig& ocfg) {
  std::vector<emu::Region> regions = emu::cap_regions(rec.regions);
  std::string out = "image " + rec.image_id + "\n";
  if (regions.empty()) return out + "empty\n";
  emu::Question probe = rec.qa.empty() ? emu::Question{} : rec.qa.front().first;
  int seed = emu::select_seed(regions, probe);
  emu::EditGraph g = emu::build_graph(regions, seed, ocfg);
  emu::PriorityAssignment pa = emu::priority_indices(g);

  out += "seed " + std::to_string(seed) + "\n";
  for (const emu::Region& r : g.nodes) {
    out += "node " + std::to_string(r.index) + " " + fmt_g(r.box.x1) + " " + fmt_g(r.box.y1) + " " +
           fmt_g(r.box.x2) + " " + fmt_g(r.box.y2) + " subject=" + (r.is_subject ? "1" : "0") +
           " label=" + emu::to_string(r.edit_label) +
           " class=" + (r.detector_class.empty() ? "-" : r.detector_class) + "\n";
  }
  for (const emu::GraphEdge& e : g.edges)
    out += "edge " + std::to_string(e.from) + " " + std::to_string(e.to) + " " +
           emu::to_string(e.rule) + "\n";
  for (const emu::Region& r : g.nodes) {
    auto pos = pa.position_of(r.index);
    out += "priority " + std::to_string(r.index) + " " +
           (pos.has_value() ? std::to_string(*pos) : "unreachable") + "\n";
  }
  return out;
}

// ---------------------------------------------------------------------------
// Subcommands
// ---------------------------------------------------------------------------

int cmd_ingest(const emu::RunConfig& cfg) {
  auto records = load_annotations(cfg.get_string("in"));
  fs::path dir = out_dir(cfg);

  emu::write_file_atomic(dir / "validated.emu.jsonl", emu::serialize_annotations(records));

  auto dist = emu::question_type_distribution(records);
  std::string stats = "metric,value\nrecords," + std::to_string(records.size()) + "\n";
  size_t questions = 0;
  for (const auto& rec : records) questions += rec.qa.size();
  stats += "questions," + std::to_string(questions) + "\n";
  for (const auto& [t, f] : dist) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6f", f);
    stats += std::string("fraction_") + emu::to_string(t) + "," + buf + "\n";
  }
  emu::write_file_atomic(dir / "stats.csv", stats);
  std::cout << "ingested " << records.size() << " records, " << questions << " questions\n";
  return 0;
}

int cmd_split(const emu::RunConfig& cfg) {
  auto records = load_annotations(cfg.get_string("in"));
  auto ratios = emu::split_ratios_from_config(cfg);
  uint64_t seed = cfg.seed();
  fs::path dir = out_dir(cfg);

  auto split = emu::split_dataset(records, ratios, seed);
  emu::write_file_atomic(dir / "train.emu.jsonl", emu::serialize_annotations(split.train));
  emu::write_file_atomic(dir / "val.emu.jsonl", emu::serialize_annotations(split.val));
  emu::write_file_atomic(dir / "test.emu.jsonl", emu::serialize_annotations(split.test));
  std::cout << "split " << records.size() << " records into " << split.train.size() << "/"
            << split.val.size() << "/" << split.test.size() << "\n";
  return 0;
}

int cmd_graph(const emu::RunConfig& cfg) {
  auto records = load_annotations(cfg.get_string("in"));
  emu::OverlapConfig ocfg = emu::overlap_from_config(cfg);
  bool to_stdout = !cfg.has("out");
  fs::path dir;
  if (!to_stdout) dir = out_dir(cfg);

  std::string out;
  for (size_t i = 0; i < records.size(); ++i) {
    if (i) out += "\n";
    out += graph_text(records[i], ocfg);
  }
  if (to_stdout)
    std::cout << out;
  else
    emu::write_file_atomic(dir / "graphs.txt", out);
  return 0;
}

// Writes the dataset plus a ready-to-run config whose prefixes match the
// synthetic answer templates.
int cmd_synth(const emu::RunConfig& cfg) {
  emu::SynthConfig sc;
  sc.n_train = static_cast<size_t>(cfg.get_int("synth.train", 2000));
  sc.n_val = static_cast<size_t>(cfg.get_int("synth.val", 250));
  sc.n_test = static_cast<size_t>(cfg.get_int("synth.test", 500));
  sc.feature_dim = static_cast<int>(cfg.get_int("synth.feature_dim", 64));
  sc.overlap = emu::overlap_from_config(cfg);
  uint64_t seed = cfg.seed();
  fs::path dir = out_dir(cfg);

  emu::SynthDataset ds = emu::synth_dataset(sc, seed);
  emu::ensure_dir(dir / "features");

  auto dump_split = [&](const char* name, const std::vector<emu::SynthExample>& examples) {
    std::vector<emu::AnnotationRecord> records;
    for (const emu::SynthExample& ex : examples) {
      records.push_back(ex.record);
      emu::write_file_atomic(dir / "features" / (ex.record.image_id + ".edit.emuf"),
                             emu::write_features(ex.edited));
      emu::write_file_atomic(dir / "features" / (ex.record.image_id + ".src.emuf"),
                             emu::write_features(ex.source));
    }
    emu::write_file_atomic(dir / (std::string(name) + ".emu.jsonl"),
                           emu::serialize_annotations(records));
  };
  dump_split("train", ds.train);
  dump_split("val", ds.val);
  dump_split("test", ds.test);

  std::string run_cfg;
  run_cfg += "# generated by emu synth\n";
  run_cfg += "seed = " + std::to_string(seed) + "\n";
  run_cfg += "paths.annotations = " + (dir / "train.emu.jsonl").string() + "\n";
  run_cfg += "paths.test_annotations = " + (dir / "test.emu.jsonl").string() + "\n";
  run_cfg += "paths.features = " + (dir / "features").string() + "\n";
  run_cfg += "model.d_model = 32\n";
  run_cfg += "model.n_heads = 4\n";
  run_cfg += "model.n_layers = 2\n";
  run_cfg += "model.max_regions = 8\n";
  run_cfg += "model.max_tokens = 72\n";
  run_cfg += "model.feature_dim = " + std::to_string(sc.feature_dim) + "\n";
  run_cfg += "overlap.mode = " + std::string(emu::to_string(sc.overlap.mode)) + "\n";
  run_cfg += "overlap.tau = " + fmt_g(sc.overlap.tau) + "\n";
  run_cfg += "prefix.intent = " + emu::synth_prefix() + "\n";
  run_cfg += "train.epochs = 5\n";
  run_cfg += "train.batch = 16\n";
  run_cfg += "train.lr = 0.003\n";
  emu::write_file_atomic(dir / "run.config", run_cfg);

  std::cout << "synthesized " << ds.train.size() << "/" << ds.val.size() << "/" << ds.test.size()
            << " balanced examples\n";
  return 0;
}

int cmd_train(const emu::RunConfig& cfg) {
  auto records = load_annotations(cfg.get_string("paths.annotations"));
  fs::path features_dir = cfg.get_string("paths.features");
  emu::OverlapConfig ocfg = emu::overlap_from_config(cfg);
  emu::nn::ModelConfig mc = emu::model_from_config(cfg);
  emu::TrainConfig tc = emu::train_from_config(cfg);
  Variant variant = Variant::parse(cfg.get_string("train.variant", "pelican"));
  emu::AblationConfig ab = variant.apply(emu::ablation_from_config(cfg));
  uint64_t seed = cfg.seed();
  int feature_dim = static_cast<int>(cfg.get_int("model.feature_dim", 64));
  fs::path dir = out_dir(cfg);

  auto items = build_items(records, features_dir, ocfg, variant, /*with_target=*/true);
  if (items.empty()) throw emu::ValidationError("train: no training examples");
  std::vector<emu::PelicanInput> inputs;
  inputs.reserve(items.size());
  for (EvalItem& item : items) inputs.push_back(std::move(item.input));
  if (inputs.front().edited.row_count() > 0) feature_dim = inputs.front().edited.dim;

  emu::TrainResult result = emu::train_pelican(inputs, mc, feature_dim, ab, tc, seed);

  emu::write_file_atomic(dir / "checkpoint.emup", emu::nn::save_params(result.model->params()));
  emu::write_file_atomic(dir / "train_log.csv", training_log_csv(result.log));

  std::string manifest = "key,value\n";
  manifest += "variant," + std::string(variant.name()) + "\n";
  manifest += "ablation," + ab.flags_string() + "\n";
  for (const auto& [k, v] : manifest_of(cfg)) manifest += k + "," + v + "\n";
  emu::write_file_atomic(dir / "run_manifest.csv", manifest);

  const emu::EpochStats& last = result.log.back();
  std::cout << "trained " << variant.name() << " for " << tc.epochs << " epochs: loss "
            << fmt_g(last.loss) << ", train accuracy " << fmt_g(last.accuracy) << ", perplexity "
            << fmt_g(last.perplexity) << "\n";
  return 0;
}

struct EvalOutcome {
  emu::MetricRow overall;
  std::vector<emu::MetricRow> per_qtype;
};

EvalOutcome evaluate_model(const emu::PelicanModel& model, std::vector<EvalItem>& items,
                           const emu::AblationConfig& ab,
                           const std::map<emu::QuestionType, std::string>& prefixes,
                           int max_new_tokens, const std::string& model_name) {
  // Classification and per-item NLL use the target-bearing inputs; token
  // NLL is aggregated once and re-weighted per question type.
  std::vector<bool> preds, golds;
  std::vector<emu::QuestionType> qtypes;
  double nll_total = 0.0;
  size_t tokens_total = 0;
  std::map<emu::QuestionType, std::pair<double, size_t>> nll_by_type;
  for (EvalItem& item : items) {
    emu::Classification c = model.classify_yes_no(item.input, ab);
    preds.push_back(c.positive);
    golds.push_back(item.gold);
    qtypes.push_back(item.qtype);
    size_t n = 0;
    double mean_nll = model.token_loss(item.input, ab, nullptr, &n);
    nll_total += mean_nll * static_cast<double>(n);
    tokens_total += n;
    auto& acc = nll_by_type[item.qtype];
    acc.first += mean_nll * static_cast<double>(n);
    acc.second += n;
  }
  double ppl = std::exp(nll_total / static_cast<double>(tokens_total));

  // One hypothesis per group; references are every answer in the group.
  std::map<size_t, std::pair<std::string, std::vector<std::string>>> groups;
  std::map<size_t, emu::QuestionType> group_qtype;
  for (EvalItem& item : items) {
    auto& entry = groups[item.group];
    group_qtype[item.group] = item.qtype;
    if (entry.first.empty()) {
      emu::PelicanInput probe = item.input;
      probe.target_tokens.clear();
      std::vector<int> prefix = emu::tok::encode(prefixes.at(item.qtype));
      std::vector<int> generated = model.generate(probe, ab, prefix, max_new_tokens);
      entry.first = emu::tok::decode(generated);
    }
    entry.second.push_back(emu::tok::decode(
        item.input.target_tokens.empty()
            ? std::vector<int>{}
            : std::vector<int>(item.input.target_tokens.begin() + 1,
                               item.input.target_tokens.end() - 1)));
  }
  std::vector<std::string> hyps;
  std::vector<std::vector<std::string>> refs;
  std::map<emu::QuestionType, std::pair<std::vector<std::string>, std::vector<std::vector<std::string>>>>
      per_type_corpora;
  for (auto& [gid, entry] : groups) {
    hyps.push_back(entry.first);
    refs.push_back(entry.second);
    auto& tc = per_type_corpora[group_qtype[gid]];
    tc.first.push_back(entry.first);
    tc.second.push_back(entry.second);
  }

  EvalOutcome out;
  auto acc = emu::balanced_accuracy(preds, golds);
  if (acc.balance_warning)
    std::cerr << "warning: gold labels are " << fmt_g(100.0 * acc.positive_fraction)
              << "% positive, more than 5 points from a 50/50 balance\n";
  out.overall.model = model_name;
  out.overall.qtype = "overall";
  out.overall.n = items.size();
  out.overall.accuracy = acc.accuracy;
  out.overall.bleu = emu::bleu4_text(hyps, refs);
  out.overall.perplexity = ppl;

  for (emu::QuestionType t : emu::kAllQuestionTypes) {
    std::vector<bool> tp, tg;
    for (size_t i = 0; i < preds.size(); ++i)
      if (qtypes[i] == t) {
        tp.push_back(preds[i]);
        tg.push_back(golds[i]);
      }
    if (tp.empty()) continue;
    emu::MetricRow row;
    row.model = model_name;
    row.qtype = emu::to_string(t);
    row.n = tp.size();
    row.accuracy = emu::balanced_accuracy(tp, tg).accuracy;
    auto& tcorp = per_type_corpora[t];
    row.bleu = emu::bleu4_text(tcorp.first, tcorp.second);
    const auto& acc_nll = nll_by_type[t];
    row.perplexity = std::exp(acc_nll.first / static_cast<double>(acc_nll.second));
    out.per_qtype.push_back(row);
  }
  return out;
}

int cmd_eval(const emu::RunConfig& cfg) {
  auto records = load_annotations(cfg.get_string("paths.test_annotations"));
  fs::path features_dir = cfg.get_string("paths.features");
  emu::OverlapConfig ocfg = emu::overlap_from_config(cfg);
  emu::nn::ModelConfig mc = emu::model_from_config(cfg);
  Variant variant = Variant::parse(cfg.get_string("train.variant", "pelican"));
  emu::AblationConfig ab = variant.apply(emu::ablation_from_config(cfg));
  auto prefixes = emu::prefixes_from_config(cfg);
  int max_new_tokens = static_cast<int>(cfg.get_int("eval.max_new_tokens", 30));
  std::string checkpoint_path = cfg.get_string("paths.checkpoint");
  std::string model_name = cfg.get_string("eval.model_name", variant.name());
  int feature_dim = static_cast<int>(cfg.get_int("model.feature_dim", 64));
  fs::path dir = out_dir(cfg);

  auto items = build_items(records, features_dir, ocfg, variant, /*with_target=*/true);
  if (items.empty()) throw emu::ValidationError("eval: no examples");
  if (items.front().input.edited.row_count() > 0) feature_dim = items.front().input.edited.dim;

  emu::PelicanModel model(mc, feature_dim, 0);
  emu::nn::load_params(model.params(), emu::read_file(checkpoint_path));

  EvalOutcome outcome =
      evaluate_model(model, items, ab, prefixes, max_new_tokens, model_name);

  emu::EvalReport report;
  report.manifest = manifest_of(cfg);
  report.rows.push_back(outcome.overall);
  for (auto& row : outcome.per_qtype) report.rows.push_back(row);
  for (auto& row : report.rows) row.ablation_flags = ab.flags_string();
  auto files = emu::emit_report(report);
  emu::write_file_atomic(dir / "report.csv", files.report_csv);
  emu::write_file_atomic(dir / "report.txt", files.table_txt);

  std::cout << files.table_txt;
  return 0;
}

int cmd_retrieve(const emu::RunConfig& cfg) {
  auto train_records = load_annotations(cfg.get_string("paths.annotations"));
  auto test_records = load_annotations(cfg.get_string("paths.test_annotations"));
  fs::path features_dir = cfg.get_string("paths.features");
  fs::path dir = out_dir(cfg);

  emu::RetrievalIndex index;
  std::vector<emu::AnnotationRecord> sidecar;
  for (const emu::AnnotationRecord& rec : train_records) {
    ImageFeatures feats = load_image_features(features_dir, rec.image_id);
    if (feats.edited.row_count() == 0) continue;
    if (index.add(rec.image_id, emu::pool_features(feats.edited), rec.qa)) sidecar.push_back(rec);
  }
  if (index.size() == 0) throw emu::ValidationError("retrieve: empty index");

  // Persist the index: one row per image in the EMUF container plus the
  // answer sidecar in the annotation format, aligned by row order.
  emu::FeatureTable index_table;
  index_table.dim = static_cast<int>(index.row(0).vec.size());
  for (size_t i = 0; i < index.size(); ++i) {
    emu::Region r;
    r.index = static_cast<int>(i);
    r.box = {0, 0, 1, 1};
    index_table.regions.push_back(r);
    for (double v : index.row(i).vec) index_table.values.push_back(static_cast<float>(v));
  }
  emu::write_file_atomic(dir / "index.emuf", emu::write_features(index_table));
  emu::write_file_atomic(dir / "index_answers.emu.jsonl", emu::serialize_annotations(sidecar));

  // Predict: copy the nearest neighbor's answers.
  std::vector<bool> preds, golds;
  std::vector<std::string> hyps;
  std::vector<std::vector<std::string>> refs;
  for (const emu::AnnotationRecord& rec : test_records) {
    ImageFeatures feats = load_image_features(features_dir, rec.image_id);
    if (feats.edited.row_count() == 0) continue;
    const auto& nearest = emu::retrieval_predict(emu::pool_features(feats.edited), index);
    for (const auto& [q, a] : rec.qa) {
      const emu::Answer* guess = nullptr;
      for (const auto& [nq, na] : nearest.answers)
        if (nq.qtype == q.qtype && !guess) guess = &na;
      preds.push_back(guess ? guess->positive : false);
      golds.push_back(a.positive);
      hyps.push_back(guess ? guess->text : "");
      refs.push_back({a.text});
    }
  }
  if (preds.empty()) throw emu::ValidationError("retrieve: no test questions");

  emu::EvalReport report;
  report.manifest = manifest_of(cfg);
  emu::MetricRow row;
  row.model = "retrieval";
  row.ablation_flags = "-";
  row.qtype = "overall";
  row.n = preds.size();
  row.accuracy = emu::balanced_accuracy(preds, golds).accuracy;
  row.bleu = emu::bleu4_text(hyps, refs);
  report.rows.push_back(row);
  auto files = emu::emit_report(report);
  emu::write_file_atomic(dir / "report.csv", files.report_csv);
  emu::write_file_atomic(dir / "report.txt", files.table_txt);
  std::cout << files.table_txt;
  return 0;
}

int cmd_ablate(const emu::RunConfig& cfg) {
  auto train_records = load_annotations(cfg.get_string("paths.annotations"));
  auto test_records = load_annotations(cfg.get_string("paths.test_annotations"));
  fs::path features_dir = cfg.get_string("paths.features");
  emu::OverlapConfig ocfg = emu::overlap_from_config(cfg);
  emu::nn::ModelConfig mc = emu::model_from_config(cfg);
  emu::TrainConfig tc = emu::train_from_config(cfg);
  auto prefixes = emu::prefixes_from_config(cfg);
  int max_new_tokens = static_cast<int>(cfg.get_int("eval.max_new_tokens", 30));
  uint64_t seed = cfg.seed();
  int feature_dim = static_cast<int>(cfg.get_int("model.feature_dim", 64));
  fs::path dir = out_dir(cfg);

  Variant variant;  // full engine for every ablation axis
  auto train_items = build_items(train_records, features_dir, ocfg, variant, true);
  std::vector<emu::PelicanInput> train_inputs;
  for (EvalItem& item : train_items) train_inputs.push_back(std::move(item.input));
  if (train_inputs.empty()) throw emu::ValidationError("ablate: no training examples");
  if (train_inputs.front().edited.row_count() > 0)
    feature_dim = train_inputs.front().edited.dim;

  struct Axis {
    std::string name;
    emu::AblationConfig ab;
    bool retrain;
  };
  emu::AblationConfig full;
  emu::AblationConfig scratch = full;
  scratch.from_scratch = true;
  emu::AblationConfig no_feats = full;
  no_feats.use_annotated_features = false;
  emu::AblationConfig no_graph = full;
  no_graph.use_priority_graph = false;
  emu::AblationConfig no_source = full;
  no_source.use_source_image = false;
  std::vector<Axis> axes = {
      {"pelican", full, true},
      {"without_pretraining", scratch, false},  // identical run at this scale; tag only
      {"without_annotated_features", no_feats, true},
      {"without_directed_graph", no_graph, true},
      {"without_source_image", no_source, true},
  };

  emu::EvalReport report;
  report.manifest = manifest_of(cfg);
  std::string last_trained;
  for (Axis& axis : axes) {
    emu::MetricRow row;
    if (axis.retrain) {
      emu::TrainResult result =
          emu::train_pelican(train_inputs, mc, feature_dim, axis.ab, tc, seed);
      emu::write_file_atomic(dir / ("train_log_" + axis.name + ".csv"),
                             training_log_csv(result.log));
      emu::write_file_atomic(dir / ("checkpoint_" + axis.name + ".emup"),
                             emu::nn::save_params(result.model->params()));
      auto test_items = build_items(test_records, features_dir, ocfg, variant, true);
      EvalOutcome outcome =
          evaluate_model(*result.model, test_items, axis.ab, prefixes, max_new_tokens, axis.name);
      row = outcome.overall;
      if (axis.name == "pelican")
        for (const emu::EpochStats& e : result.log) report.curves.push_back(e);
      last_trained = axis.name;
    } else {
      // Re-report the previous row under the tag.
      row = report.rows.back();
    }
    row.model = axis.name;
    row.ablation_flags = axis.ab.flags_string();
    report.rows.push_back(row);
  }

  auto files = emu::emit_report(report);
  emu::write_file_atomic(dir / "ablation_report.csv", files.report_csv);
  emu::write_file_atomic(dir / "ablation_report.txt", files.table_txt);
  emu::write_file_atomic(dir / "ablation_curves.csv", files.plot_csv);
  std::cout << files.table_txt;
  return 0;
}

int cmd_report(const emu::RunConfig& cfg, const std::vector<std::string>& inputs) {
  if (inputs.empty()) throw emu::ValidationError("report: at least one input report.csv required");
  fs::path dir = out_dir(cfg);

  std::string merged;
  std::string header;
  for (const std::string& path : inputs) {
    std::string text = emu::read_file(path);
    size_t pos = 0;
    while (pos < text.size()) {
      size_t eol = text.find('\n', pos);
      std::string line = text.substr(pos, eol == std::string::npos ? std::string::npos : eol - pos);
      pos = eol == std::string::npos ? text.size() : eol + 1;
      if (line.empty() || line[0] == '#') continue;
      if (line.rfind("model,", 0) == 0) {
        if (header.empty()) {
          header = line;
          merged += line + "\n";
        } else if (line != header) {
          throw emu::ValidationError("report: incompatible headers in " + path);
        }
        continue;
      }
      merged += line + "\n";
    }
  }
  emu::write_file_atomic(dir / "merged_report.csv", merged);
  std::cout << merged;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"edited-image understanding pipeline"};
  app.require_subcommand(1);

  std::map<std::string, CommonFlags> flags;
  std::vector<std::string> report_inputs;

  auto* ingest = app.add_subcommand("ingest", "validate and normalize an annotation file");
  add_common_flags(ingest, flags["ingest"], true);
  auto* split = app.add_subcommand("split", "image-level train/val/test split");
  add_common_flags(split, flags["split"], true);
  auto* graph = app.add_subcommand("graph", "emit region DAGs as structured text");
  add_common_flags(graph, flags["graph"], true);
  auto* synth = app.add_subcommand("synth", "generate the balanced synthetic dataset");
  add_common_flags(synth, flags["synth"], false);
  auto* train = app.add_subcommand("train", "train a model variant");
  add_common_flags(train, flags["train"], false);
  auto* eval = app.add_subcommand("eval", "evaluate a checkpoint on a test split");
  add_common_flags(eval, flags["eval"], false);
  auto* retrieve = app.add_subcommand("retrieve", "nearest-neighbor retrieval baseline");
  add_common_flags(retrieve, flags["retrieve"], false);
  auto* ablate = app.add_subcommand("ablate", "train and evaluate every ablation axis");
  add_common_flags(ablate, flags["ablate"], false);
  auto* report = app.add_subcommand("report", "merge report files");
  add_common_flags(report, flags["report"], false);
  report->add_option("--in", report_inputs, "report.csv files to merge");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  try {
    if (ingest->parsed()) return cmd_ingest(merge_config(flags["ingest"]));
    if (split->parsed()) return cmd_split(merge_config(flags["split"]));
    if (graph->parsed()) return cmd_graph(merge_config(flags["graph"]));
    if (synth->parsed()) return cmd_synth(merge_config(flags["synth"]));
    if (train->parsed()) return cmd_train(merge_config(flags["train"]));
    if (eval->parsed()) return cmd_eval(merge_config(flags["eval"]));
    if (retrieve->parsed()) return cmd_retrieve(merge_config(flags["retrieve"]));
    if (ablate->parsed()) return cmd_ablate(merge_config(flags["ablate"]));
    if (report->parsed()) {
      CommonFlags f = flags["report"];
      return cmd_report(merge_config(f), report_inputs);
    }
  } catch (const emu::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::logic_error& e) {
    std::cerr << "internal invariant failure: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
