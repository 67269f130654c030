#pragma once

#include <memory>
#include <string>
#include <vector>

#include "emu/pelican.hpp"
#include "emu/rng.hpp"

namespace emu {

struct TrainConfig {
  int epochs = 6;
  int batch_size = 16;
  double lr = 3e-3;
  double weight_decay = 0.0;
};

struct EpochStats {
  int epoch = 0;  // 1-based
  double loss = 0.0;
  double accuracy = 0.0;
  double perplexity = 0.0;
};

struct TrainResult {
  std::unique_ptr<PelicanModel> model;
  std::vector<EpochStats> log;
};

// Deterministic Fisher-Yates keyed by the given stream.
inline void shuffle_indices(std::vector<size_t>& idx, Rng& rng) {
  for (size_t i = idx.size(); i > 1; --i) {
    size_t j = rng.next_u64() % i;
    std::swap(idx[i - 1], idx[j]);
  }
}

// Left-to-right language modeling over the answer spans (labels are the
// YES/NO tokens). Gradients are averaged per batch in a fixed order, so a
// repeated run with the same seed reproduces the checkpoint bit for bit.
inline TrainResult train_pelican(const std::vector<PelicanInput>& dataset,
                                 const nn::ModelConfig& model_cfg, int feature_dim,
                                 const AblationConfig& ablation, const TrainConfig& cfg,
                                 uint64_t seed) {
  if (dataset.empty()) throw ValidationError("train: empty dataset");
  if (cfg.epochs < 1 || cfg.batch_size < 1) throw ValidationError("train: bad epochs/batch size");

  TrainResult res;
  res.model = std::make_unique<PelicanModel>(model_cfg, feature_dim, mix_keys(seed, fnv1a64("init")));
  PelicanModel& model = *res.model;

  nn::AdamConfig adam_cfg;
  adam_cfg.lr = cfg.lr;
  adam_cfg.weight_decay = cfg.weight_decay;
  auto param_ptrs = model.params().all();
  nn::Adam adam(adam_cfg, param_ptrs);

  Rng order_rng(mix_keys(seed, fnv1a64("order")));
  std::vector<size_t> idx(dataset.size());
  for (size_t i = 0; i < idx.size(); ++i) idx[i] = i;

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    shuffle_indices(idx, order_rng);
    double loss_sum = 0.0;
    size_t seen = 0;
    for (size_t start = 0; start < idx.size(); start += cfg.batch_size) {
      size_t stop = std::min(idx.size(), start + cfg.batch_size);
      model.params().zero_grads();
      for (size_t k = start; k < stop; ++k) {
        loss_sum += model.loss_and_grads(dataset[idx[k]], ablation);
        ++seen;
      }
      double inv = 1.0 / static_cast<double>(stop - start);
      for (nn::Parameter* p : param_ptrs)
        for (double& g : p->grad.data) g *= inv;
      adam.step(param_ptrs);
    }

    EpochStats stats;
    stats.epoch = epoch;
    stats.loss = loss_sum / static_cast<double>(seen);
    size_t correct = 0;
    for (const PelicanInput& input : dataset) {
      Classification c = model.classify_yes_no(input, ablation);
      if (c.positive == input.gold_positive()) ++correct;
    }
    stats.accuracy = static_cast<double>(correct) / static_cast<double>(dataset.size());
    stats.perplexity = model.perplexity(dataset, ablation);
    res.log.push_back(stats);
  }
  return res;
}

}  // namespace emu
