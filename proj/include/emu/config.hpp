#pragma once

#include <array>
#include <map>
#include <set>
#include <string>

#include "emu/geometry.hpp"
#include "emu/io.hpp"
#include "emu/nn.hpp"
#include "emu/pelican.hpp"
#include "emu/trainer.hpp"
#include "emu/types.hpp"

namespace emu {

// Flat key-value run configuration with dotted section prefixes, e.g.
//   model.d_model = 32
//   prefix.intent = this edit was made to
// '#' starts a comment. Flags override file values. Accessed keys are
// tracked so each command can reject unknown keys afterwards.
class RunConfig {
 public:
  RunConfig() = default;

  static RunConfig from_string(const std::string& text) {
    RunConfig cfg;
    size_t line_no = 0;
    size_t pos = 0;
    while (pos <= text.size()) {
      size_t eol = text.find('\n', pos);
      std::string line = text.substr(pos, eol == std::string::npos ? std::string::npos : eol - pos);
      pos = eol == std::string::npos ? text.size() + 1 : eol + 1;
      ++line_no;
      size_t hash = line.find('#');
      if (hash != std::string::npos) line = line.substr(0, hash);
      line = trim(line);
      if (line.empty()) continue;
      size_t eq = line.find('=');
      if (eq == std::string::npos)
        throw ValidationError("config line " + std::to_string(line_no) + ": expected key = value");
      std::string key = trim(line.substr(0, eq));
      std::string value = trim(line.substr(eq + 1));
      if (key.empty()) throw ValidationError("config line " + std::to_string(line_no) + ": empty key");
      cfg.kv_[key] = value;
    }
    return cfg;
  }

  static RunConfig from_file(const std::string& path) { return from_string(read_file(path)); }

  void set(const std::string& key, const std::string& value) { kv_[key] = value; }
  bool has(const std::string& key) const { return kv_.count(key) != 0; }

  std::string get_string(const std::string& key) const {
    auto it = kv_.find(key);
    if (it == kv_.end()) throw ValidationError("config: missing required key '" + key + "'");
    return it->second;
  }
  std::string get_string(const std::string& key, const std::string& dflt) const {
    auto it = kv_.find(key);
    return it == kv_.end() ? dflt : it->second;
  }

  int64_t get_int(const std::string& key, int64_t dflt) const {
    return has(key) ? parse_int(key, get_string(key)) : dflt;
  }
  int64_t get_int(const std::string& key) const { return parse_int(key, get_string(key)); }

  double get_double(const std::string& key, double dflt) const {
    return has(key) ? parse_double(key, get_string(key)) : dflt;
  }

  bool get_bool(const std::string& key, bool dflt) const {
    if (!has(key)) return dflt;
    std::string v = get_string(key);
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw ValidationError("config: key '" + key + "' must be a boolean, got '" + v + "'");
  }

  // Seeds must be explicit: no wall-clock fallback anywhere.
  uint64_t seed(const std::string& key = "seed") const {
    return static_cast<uint64_t>(parse_int(key, get_string(key)));
  }

  const std::map<std::string, std::string>& entries() const { return kv_; }

 private:
  static std::string trim(const std::string& s) {
    size_t a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    size_t b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
  }
  static int64_t parse_int(const std::string& key, const std::string& v) {
    try {
      size_t used = 0;
      int64_t out = std::stoll(v, &used);
      if (used != v.size()) throw std::invalid_argument("");
      return out;
    } catch (...) {
      throw ValidationError("config: key '" + key + "' must be an integer, got '" + v + "'");
    }
  }
  static double parse_double(const std::string& key, const std::string& v) {
    try {
      size_t used = 0;
      double out = std::stod(v, &used);
      if (used != v.size()) throw std::invalid_argument("");
      return out;
    } catch (...) {
      throw ValidationError("config: key '" + key + "' must be a number, got '" + v + "'");
    }
  }
  std::map<std::string, std::string> kv_;
};

// Every key any command understands. Commands validate against this after
// merging flags so shared config files work across subcommands while typos
// are still rejected.
inline void validate_config_keys(const RunConfig& cfg) {
  static const std::set<std::string> known = {
      "seed", "in", "out",
      "paths.annotations", "paths.test_annotations", "paths.features", "paths.checkpoint",
      "model.d_model", "model.n_heads", "model.n_layers", "model.max_regions",
      "model.max_tokens", "model.vocab", "model.feature_dim",
      "overlap.mode", "overlap.tau",
      "ablation.use_priority_graph", "ablation.use_annotated_features",
      "ablation.use_source_image", "ablation.from_scratch",
      "train.epochs", "train.batch", "train.lr", "train.weight_decay", "train.variant",
      "eval.max_new_tokens", "eval.model_name",
      "synth.train", "synth.val", "synth.test", "synth.feature_dim",
      "split.train", "split.val", "split.test",
      "prefix.intent", "prefix.implication", "prefix.disinformation",
      "prefix.subject_implication", "prefix.subject_emotion",
  };
  for (const auto& [k, v] : cfg.entries())
    if (!known.count(k)) throw ValidationError("config: unknown key '" + k + "'");
}

// ---------------------------------------------------------------------------
// Section assemblers
// ---------------------------------------------------------------------------

inline OverlapConfig overlap_from_config(const RunConfig& cfg) {
  OverlapConfig oc;
  oc.mode = overlap_mode_from_string(cfg.get_string("overlap.mode", "standard"));
  oc.tau = cfg.get_double("overlap.tau", 0.1);
  oc.validate();
  return oc;
}

inline nn::ModelConfig model_from_config(const RunConfig& cfg) {
  nn::ModelConfig mc;
  mc.d_model = static_cast<int>(cfg.get_int("model.d_model", 64));
  mc.n_heads = static_cast<int>(cfg.get_int("model.n_heads", 4));
  mc.n_layers = static_cast<int>(cfg.get_int("model.n_layers", 2));
  mc.max_regions = static_cast<int>(cfg.get_int("model.max_regions", 16));
  mc.max_tokens = static_cast<int>(cfg.get_int("model.max_tokens", 48));
  mc.vocab_size = static_cast<int>(cfg.get_int("model.vocab", tok::kVocabSize));
  mc.validate();
  return mc;
}

inline AblationConfig ablation_from_config(const RunConfig& cfg) {
  AblationConfig ab;
  ab.use_priority_graph = cfg.get_bool("ablation.use_priority_graph", true);
  ab.use_annotated_features = cfg.get_bool("ablation.use_annotated_features", true);
  ab.use_source_image = cfg.get_bool("ablation.use_source_image", true);
  ab.from_scratch = cfg.get_bool("ablation.from_scratch", false);
  return ab;
}

inline TrainConfig train_from_config(const RunConfig& cfg) {
  TrainConfig tc;
  tc.epochs = static_cast<int>(cfg.get_int("train.epochs", 6));
  tc.batch_size = static_cast<int>(cfg.get_int("train.batch", 16));
  tc.lr = cfg.get_double("train.lr", 3e-3);
  tc.weight_decay = cfg.get_double("train.weight_decay", 0.0);
  if (tc.epochs < 1 || tc.batch_size < 1) throw ValidationError("config: bad train.epochs/train.batch");
  return tc;
}

inline std::map<QuestionType, std::string> prefixes_from_config(const RunConfig& cfg) {
  auto prefixes = default_prefixes();
  for (auto& [qt, text] : prefixes)
    text = cfg.get_string(std::string("prefix.") + to_string(qt), text);
  return prefixes;
}

inline std::array<double, 3> split_ratios_from_config(const RunConfig& cfg) {
  return {cfg.get_double("split.train", 0.8), cfg.get_double("split.val", 0.1),
          cfg.get_double("split.test", 0.1)};
}

}  // namespace emu
