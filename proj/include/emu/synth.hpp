#pragma once

#include <cstdio>
#include <optional>
#include <string>
#include <vector>

#include "emu/annotations.hpp"
#include "emu/edit_graph.hpp"
#include "emu/feature_store.hpp"
#include "emu/pelican.hpp"
#include "emu/rng.hpp"
#include "emu/types.hpp"

namespace emu {

// Desk-scale labeled task. Every scene has one subject region and six
// candidates, some of which overlap the subject; the DAG rooted at the
// subject picks the maximum-overlap one as its first topological neighbor,
// and the gold label is negative exactly when that neighbor is introduced.
// The other candidates' labels are sampled with probability 0.5 +- bias of
// being introduced, conditioned on the gold label: the label bag therefore
// carries a partial signal any region-reading model can use, while only the
// neighbor itself decides the answer, so the graph stays decisive. Splits
// are balanced 50/50 by construction.
struct SynthConfig {
  size_t n_train = 2000;
  size_t n_val = 250;
  size_t n_test = 500;
  int candidate_count = 6;
  int source_regions = 4;
  int feature_dim = 16;
  double iou_lo = 0.15;     // band for candidate-subject overlaps
  double iou_hi = 0.40;
  double label_bias = 0.1;  // bag-signal strength for non-neighbor candidates
  OverlapConfig overlap;

  void validate() const {
    overlap.validate();
    if (n_train % 2 || n_val % 2 || n_test % 2)
      throw ValidationError("synth: split sizes must be even for a 50/50 balance");
    if (candidate_count < 2 || feature_dim < kSynthAttributeDims)
      throw ValidationError("synth: bad candidate_count or feature_dim");
    if (!(iou_lo > overlap.tau && iou_hi > iou_lo && iou_hi < 1.0))
      throw ValidationError("synth: overlap band must satisfy tau < lo < hi < 1");
    if (!(label_bias >= 0.0 && label_bias < 0.5))
      throw ValidationError("synth: label_bias must be in [0, 0.5)");
  }
};

struct SynthExample {
  AnnotationRecord record;
  FeatureTable source;
  FeatureTable edited;
  bool positive = false;
};

struct SynthDataset {
  std::vector<SynthExample> train, val, test;
};

inline const std::vector<std::string>& synth_class_vocab() {
  static const std::vector<std::string> vocab = {"flag", "gun",  "hat",  "sign",
                                                 "mask", "toy",  "bird", "book"};
  return vocab;
}

inline std::string synth_answer_text(bool positive, const std::string& neighbor_class) {
  if (positive) return "to make a playful scene for subject1";
  return "to add a fake " + neighbor_class + " near subject1";
}

inline std::string synth_rationale(bool positive, const std::string& neighbor_class) {
  if (positive) return "because subject1 stays in a harmless scene";
  return "because the " + neighbor_class + " was introduced next to subject1";
}

// Generation prefix shared by both answer templates.
inline std::string synth_prefix() { return "to"; }

namespace detail_synth {

inline BBox random_box_in(Rng& rng, double lo, double hi, double wmin, double wmax) {
  double w = rng.next_range(wmin, wmax);
  double h = rng.next_range(wmin, wmax);
  double x = rng.next_range(lo, hi - w);
  double y = rng.next_range(lo, hi - h);
  return {x, y, x + w, y + h};
}

// Box overlapping `anchor` with IoU inside [lo,hi]; deterministic retries.
inline bool place_overlapping(Rng& rng, const BBox& anchor, double lo, double hi, BBox& out) {
  for (int attempt = 0; attempt < 200; ++attempt) {
    double w = anchor.width() * rng.next_range(0.7, 1.3);
    double h = anchor.height() * rng.next_range(0.7, 1.3);
    double dx = rng.next_range(-0.8, 0.8) * anchor.width();
    double dy = rng.next_range(-0.8, 0.8) * anchor.height();
    BBox b{anchor.x1 + dx, anchor.y1 + dy, anchor.x1 + dx + w, anchor.y1 + dy + h};
    if (b.x1 < 0 || b.y1 < 0 || b.x2 > kSynthCoordScale || b.y2 > kSynthCoordScale) continue;
    double v = iou(anchor, b);
    if (v >= lo && v <= hi) {
      out = b;
      return true;
    }
  }
  return false;
}

// Box disjoint from `anchor`, tucked into the far corner area.
inline bool place_disjoint(Rng& rng, const BBox& anchor, BBox& out) {
  for (int attempt = 0; attempt < 200; ++attempt) {
    BBox b = random_box_in(rng, 2.0, kSynthCoordScale - 2.0, 40.0, 120.0);
    if (iou(anchor, b) == 0.0) {
      out = b;
      return true;
    }
  }
  return false;
}

struct Scene {
  std::vector<Region> regions;
  bool positive = false;
  std::string neighbor_class;
};

// One candidate scene; nullopt when placement failed (caller skips it).
inline std::optional<Scene> make_scene(const SynthConfig& cfg, uint64_t scene_key) {
  Rng rng(scene_key);

  BBox subject_box = random_box_in(rng, 250.0, 800.0, 150.0, 260.0);

  int m = cfg.candidate_count;
  int n_overlap = 2 + rng.next_int(std::min(3, m - 1));
  std::vector<BBox> boxes(m);
  for (int i = 0; i < m; ++i) {
    bool ok = i < n_overlap ? place_overlapping(rng, subject_box, cfg.iou_lo, cfg.iou_hi, boxes[i])
                            : place_disjoint(rng, subject_box, boxes[i]);
    if (!ok) return std::nullopt;
  }

  // The seed's edges use the overlap rule only (single subject, label none),
  // so its first topological neighbor is the maximum-overlap eligible
  // candidate under the configured measure.
  int winner = -1;
  for (int i = 0; i < m; ++i) {
    if (!overlaps(subject_box, boxes[i], cfg.overlap)) continue;
    if (winner < 0 || effective_overlap(subject_box, boxes[i], cfg.overlap) >
                          effective_overlap(subject_box, boxes[winner], cfg.overlap))
      winner = i;
  }
  if (winner < 0) return std::nullopt;

  bool gold_negative = rng.next_bool();
  std::vector<EditLabel> labels(m);
  for (int i = 0; i < m; ++i) {
    if (i == winner) {
      labels[i] = gold_negative ? EditLabel::introduced : EditLabel::altered;
    } else {
      double p_introduced = gold_negative ? 0.5 + cfg.label_bias : 0.5 - cfg.label_bias;
      labels[i] = rng.next_unit() < p_introduced ? EditLabel::introduced : EditLabel::altered;
    }
  }

  const auto& vocab = synth_class_vocab();
  std::vector<Region> regions;
  Region subj;
  subj.box = subject_box;
  subj.is_subject = true;
  subj.edit_label = EditLabel::none;
  subj.detector_class = "person";
  regions.push_back(subj);
  for (int i = 0; i < m; ++i) {
    Region r;
    r.box = boxes[i];
    r.is_subject = false;
    r.edit_label = labels[i];
    r.detector_class = vocab[rng.next_int(static_cast<int>(vocab.size()))];
    regions.push_back(r);
  }
  std::string winner_class = regions[1 + winner].detector_class;
  const BBox winner_box = boxes[winner];
  // Shuffle list order; indices follow position so the subject's index varies.
  for (size_t i = regions.size(); i > 1; --i) std::swap(regions[i - 1], regions[rng.next_u64() % i]);
  for (size_t i = 0; i < regions.size(); ++i) regions[i].index = static_cast<int>(i);

  Question probe;
  probe.qtype = QuestionType::intent;
  int seed_region = select_seed(regions, probe);
  EditGraph g = build_graph(regions, seed_region, cfg.overlap);
  PriorityAssignment pa = priority_indices(g);

  const Region* neighbor = nullptr;
  for (const Region& r : regions)
    if (pa.position_of(r.index) == 1) neighbor = &r;
  if (!neighbor) return std::nullopt;  // no overlapping candidate resolved
  if (!(neighbor->box == winner_box))
    throw std::logic_error("synth: first topological neighbor is not the max-overlap candidate");

  Scene scene;
  scene.regions = std::move(regions);
  scene.positive = !gold_negative;
  scene.neighbor_class = winner_class;
  return scene;
}

inline SynthExample scene_to_example(const SynthConfig& cfg, const Scene& scene, uint64_t seed,
                                     size_t image_counter) {
  char idbuf[32];
  std::snprintf(idbuf, sizeof(idbuf), "synth_%06zu", image_counter);
  std::string image_id = idbuf;

  SynthExample ex;
  ex.positive = scene.positive;
  ex.record.image_id = image_id;
  ex.record.source_path = image_id + "_src.png";
  ex.record.edited_path = image_id + "_edit.png";
  ex.record.regions = scene.regions;
  ex.record.source_region_count = cfg.source_regions;

  Question q;
  q.qtype = QuestionType::intent;
  q.text = question_text(QuestionType::intent);
  Answer a;
  a.positive = scene.positive;
  a.text = synth_answer_text(scene.positive, scene.neighbor_class);
  a.rationale = synth_rationale(scene.positive, scene.neighbor_class);
  ex.record.qa.emplace_back(std::move(q), std::move(a));
  tokenize_record(ex.record);
  validate_record(ex.record);

  uint64_t feat_key = mix_keys(seed, fnv1a64("features"));
  ex.edited = synth_features(ex.record.regions, mix_keys(feat_key, image_counter),
                             cfg.feature_dim, image_id);

  Rng src_rng(mix_keys(mix_keys(seed, fnv1a64("source")), image_counter));
  std::vector<Region> src_regions;
  for (int i = 0; i < cfg.source_regions; ++i) {
    Region r;
    r.index = i;
    r.box = random_box_in(src_rng, 2.0, kSynthCoordScale - 2.0, 60.0, 300.0);
    src_regions.push_back(r);
  }
  ex.source = synth_features(src_regions, mix_keys(mix_keys(feat_key, fnv1a64("src")), image_counter),
                             cfg.feature_dim, image_id);
  return ex;
}

}  // namespace detail_synth

// Deterministic in (cfg, seed). Scenes are generated from a counter stream
// and assigned to the first split still short of the scene's label, so every
// split ends up exactly half positive.
inline SynthDataset synth_dataset(const SynthConfig& cfg, uint64_t seed) {
  cfg.validate();
  SynthDataset ds;
  struct Quota {
    std::vector<SynthExample>* out;
    size_t pos_left, neg_left;
  };
  std::vector<Quota> quotas = {
      {&ds.train, cfg.n_train / 2, cfg.n_train / 2},
      {&ds.val, cfg.n_val / 2, cfg.n_val / 2},
      {&ds.test, cfg.n_test / 2, cfg.n_test / 2},
  };

  uint64_t scene_stream = mix_keys(seed, fnv1a64("scenes"));
  size_t counter = 0;
  size_t accepted = 0;
  size_t want = cfg.n_train + cfg.n_val + cfg.n_test;
  while (accepted < want) {
    if (counter > want * 100 + 100000)
      throw std::logic_error("synth: scene generation failed to converge");
    auto scene = detail_synth::make_scene(cfg, mix_keys(scene_stream, counter));
    ++counter;
    if (!scene) continue;
    for (Quota& q : quotas) {
      size_t& left = scene->positive ? q.pos_left : q.neg_left;
      if (left == 0) continue;
      --left;
      q.out->push_back(detail_synth::scene_to_example(cfg, *scene, seed, counter - 1));
      ++accepted;
      break;
    }
  }
  return ds;
}

// Model inputs for a synthetic split.
inline std::vector<PelicanInput> synth_inputs(const std::vector<SynthExample>& examples,
                                              const OverlapConfig& ocfg, bool with_target) {
  std::vector<PelicanInput> out;
  out.reserve(examples.size());
  for (const SynthExample& ex : examples)
    out.push_back(make_input(ex.record, 0, ex.source, ex.edited, ocfg, with_target));
  return out;
}

}  // namespace emu
