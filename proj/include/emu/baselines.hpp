#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "emu/feature_store.hpp"
#include "emu/pelican.hpp"
#include "emu/trainer.hpp"
#include "emu/types.hpp"

namespace emu {

// Mean over region rows; the desk-scale stand-in for a whole-image vector.
inline std::vector<double> pool_features(const FeatureTable& t) {
  if (t.row_count() == 0) throw ValidationError("pool_features: empty table");
  std::vector<double> out(t.dim, 0.0);
  for (size_t r = 0; r < t.row_count(); ++r)
    for (int c = 0; c < t.dim; ++c) out[c] += t.at(r, c);
  for (double& v : out) v /= static_cast<double>(t.row_count());
  return out;
}

// Nearest-neighbor store over pooled image vectors. Rows keep insertion
// order; zero vectors are excluded at build time.
class RetrievalIndex {
 public:
  struct Row {
    std::string image_id;
    std::vector<double> vec;
    std::vector<std::pair<Question, Answer>> answers;
  };

  // Returns false when the vector is zero and therefore excluded.
  bool add(std::string image_id, std::vector<double> vec,
           std::vector<std::pair<Question, Answer>> answers) {
    if (!rows_.empty() && vec.size() != rows_.front().vec.size())
      throw ValidationError("retrieval index: dimension mismatch");
    double norm2 = 0.0;
    for (double v : vec) norm2 += v * v;
    if (norm2 == 0.0) {
      ++excluded_;
      return false;
    }
    rows_.push_back({std::move(image_id), std::move(vec), std::move(answers)});
    norms_.push_back(std::sqrt(norm2));
    return true;
  }

  size_t size() const { return rows_.size(); }
  size_t excluded_count() const { return excluded_; }
  const Row& row(size_t i) const { return rows_[i]; }

  // Argmax of cosine similarity; ties resolve to the lowest insertion order.
  size_t nearest(const std::vector<double>& query) const {
    if (rows_.empty()) throw ValidationError("retrieval index: empty");
    if (query.size() != rows_.front().vec.size())
      throw ValidationError("retrieval index: query dimension mismatch");
    double qn = 0.0;
    for (double v : query) qn += v * v;
    qn = std::sqrt(qn);
    if (qn == 0.0) throw ValidationError("retrieval index: zero query vector");

    size_t best = 0;
    double best_sim = -2.0;
    for (size_t i = 0; i < rows_.size(); ++i) {
      double dot = 0.0;
      for (size_t e = 0; e < query.size(); ++e) dot += query[e] * rows_[i].vec[e];
      double sim = dot / (qn * norms_[i]);
      if (sim > best_sim) {
        best_sim = sim;
        best = i;
      }
    }
    return best;
  }

 private:
  std::vector<Row> rows_;
  std::vector<double> norms_;
  size_t excluded_ = 0;
};

inline const RetrievalIndex::Row& retrieval_predict(const std::vector<double>& query,
                                                    const RetrievalIndex& index) {
  return index.row(index.nearest(query));
}

// Text-only baseline: the same engine with both region blocks removed, so
// its output is a pure function of the question tokens.
inline PelicanInput strip_images(PelicanInput input) {
  input.source = FeatureTable{};
  input.edited = FeatureTable{};
  input.priorities = PriorityAssignment{};
  return input;
}

inline std::vector<PelicanInput> strip_images(const std::vector<PelicanInput>& inputs) {
  std::vector<PelicanInput> out;
  out.reserve(inputs.size());
  for (const PelicanInput& in : inputs) out.push_back(strip_images(in));
  return out;
}

inline TrainResult text_only_lm(const std::vector<PelicanInput>& dataset,
                                const nn::ModelConfig& model_cfg, int feature_dim,
                                const TrainConfig& cfg, uint64_t seed) {
  AblationConfig ab;
  ab.use_source_image = false;
  return train_pelican(strip_images(dataset), model_cfg, feature_dim, ab, cfg, seed);
}

// Cross-modal prefix baseline: regions enter as a flat prefix (no priority
// or label embeddings); subject-conditioned questions append one extra copy
// of the subject's region vector.
inline AblationConfig cross_modal_ablation() {
  AblationConfig ab;
  ab.use_priority_graph = false;
  ab.use_annotated_features = false;
  ab.use_source_image = true;
  return ab;
}

inline PelicanInput cross_modal_input(PelicanInput input, std::optional<int> subject_index) {
  if (subject_index.has_value()) {
    for (size_t i = 0; i < input.edited.row_count(); ++i) {
      if (input.edited.regions[i].index != *subject_index) continue;
      Region extra = input.edited.regions[i];
      std::vector<double> row(input.edited.dim);
      for (int e = 0; e < input.edited.dim; ++e) row[e] = input.edited.at(i, e);
      input.edited.regions.push_back(extra);
      input.edited.values.insert(input.edited.values.end(), row.begin(), row.end());
      break;
    }
  }
  return input;
}

inline TrainResult cross_modal_lm(const std::vector<PelicanInput>& dataset,
                                  const nn::ModelConfig& model_cfg, int feature_dim,
                                  const TrainConfig& cfg, uint64_t seed) {
  return train_pelican(dataset, model_cfg, feature_dim, cross_modal_ablation(), cfg, seed);
}

}  // namespace emu
