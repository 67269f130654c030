#pragma once

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "emu/trainer.hpp"
#include "emu/types.hpp"

namespace emu {

// ---------------------------------------------------------------------------
// Balanced classification accuracy
// ---------------------------------------------------------------------------

struct BalancedAccuracy {
  double accuracy = 0.0;
  double positive_fraction = 0.0;  // of the gold labels
  bool balance_warning = false;    // gold split off 50/50 by more than 5 points
};

inline BalancedAccuracy balanced_accuracy(const std::vector<bool>& preds,
                                          const std::vector<bool>& golds) {
  if (preds.empty() || preds.size() != golds.size())
    throw ValidationError("balanced_accuracy: empty or misaligned inputs");
  size_t correct = 0, positives = 0;
  for (size_t i = 0; i < preds.size(); ++i) {
    if (preds[i] == golds[i]) ++correct;
    if (golds[i]) ++positives;
  }
  BalancedAccuracy out;
  out.accuracy = static_cast<double>(correct) / static_cast<double>(preds.size());
  out.positive_fraction = static_cast<double>(positives) / static_cast<double>(golds.size());
  out.balance_warning = std::abs(out.positive_fraction - 0.5) > 0.05;
  return out;
}

// ---------------------------------------------------------------------------
// Corpus BLEU@4
// ---------------------------------------------------------------------------

// Text-level tokens for BLEU: whitespace split with punctuation characters
// broken out as their own tokens.
inline std::vector<std::string> bleu_tokenize(const std::string& text) {
  std::vector<std::string> out;
  std::string cur;
  auto flush = [&] {
    if (!cur.empty()) {
      out.push_back(cur);
      cur.clear();
    }
  };
  for (unsigned char ch : text) {
    if (std::isspace(ch)) {
      flush();
    } else if (std::ispunct(ch)) {
      flush();
      out.push_back(std::string(1, static_cast<char>(ch)));
    } else {
      cur.push_back(static_cast<char>(ch));
    }
  }
  flush();
  return out;
}

namespace detail_bleu {

inline std::map<std::string, int> ngram_counts(const std::vector<std::string>& tokens, int n) {
  std::map<std::string, int> counts;
  if (static_cast<int>(tokens.size()) < n) return counts;
  for (size_t i = 0; i + n <= tokens.size(); ++i) {
    std::string key;
    for (int k = 0; k < n; ++k) {
      key += tokens[i + k];
      key.push_back('\x1f');
    }
    ++counts[key];
  }
  return counts;
}

}  // namespace detail_bleu

// Corpus-level BLEU@4: geometric mean of clipped modified n-gram precisions
// (n=1..4) with brevity penalty, pooled over the corpus without sentence
// smoothing. Multiple references use standard clipped counts and the
// closest reference length (ties to the shorter) for the penalty.
inline double bleu4(const std::vector<std::vector<std::string>>& hypotheses,
                    const std::vector<std::vector<std::vector<std::string>>>& references) {
  if (hypotheses.empty() || hypotheses.size() != references.size())
    throw ValidationError("bleu4: empty or misaligned corpora");

  long long matched[4] = {0, 0, 0, 0};
  long long total[4] = {0, 0, 0, 0};
  long long hyp_len = 0, ref_len = 0;

  for (size_t s = 0; s < hypotheses.size(); ++s) {
    const auto& hyp = hypotheses[s];
    const auto& refs = references[s];
    if (refs.empty()) throw ValidationError("bleu4: sentence without references");

    hyp_len += static_cast<long long>(hyp.size());
    long long closest = static_cast<long long>(refs[0].size());
    for (const auto& r : refs) {
      auto rl = static_cast<long long>(r.size());
      auto better = std::llabs(rl - static_cast<long long>(hyp.size())) <
                        std::llabs(closest - static_cast<long long>(hyp.size())) ||
                    (std::llabs(rl - static_cast<long long>(hyp.size())) ==
                         std::llabs(closest - static_cast<long long>(hyp.size())) &&
                     rl < closest);
      if (better) closest = rl;
    }
    ref_len += closest;

    for (int n = 1; n <= 4; ++n) {
      auto hyp_counts = detail_bleu::ngram_counts(hyp, n);
      std::map<std::string, int> max_ref;
      for (const auto& r : refs)
        for (const auto& [g, c] : detail_bleu::ngram_counts(r, n))
          max_ref[g] = std::max(max_ref[g], c);
      for (const auto& [g, c] : hyp_counts) {
        total[n - 1] += c;
        auto it = max_ref.find(g);
        if (it != max_ref.end()) matched[n - 1] += std::min(c, it->second);
      }
    }
  }

  double log_precision = 0.0;
  for (int n = 0; n < 4; ++n) {
    if (matched[n] == 0 || total[n] == 0) return 0.0;
    log_precision += std::log(static_cast<double>(matched[n]) / static_cast<double>(total[n]));
  }
  double bp = 1.0;
  if (hyp_len == 0) return 0.0;
  if (hyp_len < ref_len)
    bp = std::exp(1.0 - static_cast<double>(ref_len) / static_cast<double>(hyp_len));
  return bp * std::exp(log_precision / 4.0);
}

inline double bleu4_text(const std::vector<std::string>& hypotheses,
                         const std::vector<std::vector<std::string>>& references) {
  std::vector<std::vector<std::string>> hyps;
  std::vector<std::vector<std::vector<std::string>>> refs;
  hyps.reserve(hypotheses.size());
  refs.reserve(references.size());
  for (const auto& h : hypotheses) hyps.push_back(bleu_tokenize(h));
  for (const auto& rs : references) {
    std::vector<std::vector<std::string>> group;
    group.reserve(rs.size());
    for (const auto& r : rs) group.push_back(bleu_tokenize(r));
    refs.push_back(std::move(group));
  }
  return bleu4(hyps, refs);
}

// ---------------------------------------------------------------------------
// Reports
// ---------------------------------------------------------------------------

struct MetricRow {
  std::string model;
  std::string ablation_flags;
  std::string qtype;  // "overall" or a question type tag
  size_t n = 0;
  std::optional<double> accuracy;
  std::optional<double> bleu;
  std::optional<double> perplexity;
};

struct EvalReport {
  std::vector<std::pair<std::string, std::string>> manifest;  // key, value
  std::vector<MetricRow> rows;
  std::vector<EpochStats> curves;
};

namespace detail_report {

inline std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

inline std::string fmt_opt(const std::optional<double>& v) { return v ? fmt(*v) : "n/a"; }

}  // namespace detail_report

struct ReportFiles {
  std::string report_csv;
  std::string table_txt;
  std::string plot_csv;
};

// Deterministic CSV plus an aligned human-readable table, and a plot-data
// file of the per-epoch curves. Refuses to emit an empty report.
inline ReportFiles emit_report(const EvalReport& report) {
  if (report.rows.empty()) throw ValidationError("emit_report: no metric rows");

  ReportFiles out;
  for (const auto& [k, v] : report.manifest) out.report_csv += "# " + k + "=" + v + "\n";
  out.report_csv += "model,ablation_flags,qtype,n,accuracy,bleu4,perplexity\n";
  for (const MetricRow& r : report.rows) {
    out.report_csv += r.model + "," + r.ablation_flags + "," + r.qtype + "," + std::to_string(r.n) +
                      "," + detail_report::fmt_opt(r.accuracy) + "," +
                      detail_report::fmt_opt(r.bleu) + "," + detail_report::fmt_opt(r.perplexity) +
                      "\n";
  }

  std::vector<std::array<std::string, 7>> cells;
  cells.push_back({"model", "flags", "qtype", "n", "accuracy", "bleu4", "perplexity"});
  for (const MetricRow& r : report.rows)
    cells.push_back({r.model, r.ablation_flags, r.qtype, std::to_string(r.n),
                     detail_report::fmt_opt(r.accuracy), detail_report::fmt_opt(r.bleu),
                     detail_report::fmt_opt(r.perplexity)});
  std::array<size_t, 7> widths{};
  for (const auto& row : cells)
    for (size_t c = 0; c < 7; ++c) widths[c] = std::max(widths[c], row[c].size());
  for (const auto& row : cells) {
    std::string line;
    for (size_t c = 0; c < 7; ++c) {
      line += row[c];
      line.append(widths[c] - row[c].size() + 2, ' ');
    }
    while (!line.empty() && line.back() == ' ') line.pop_back();
    out.table_txt += line + "\n";
  }

  out.plot_csv = "epoch,loss,accuracy,perplexity\n";
  for (const EpochStats& e : report.curves)
    out.plot_csv += std::to_string(e.epoch) + "," + detail_report::fmt(e.loss) + "," +
                    detail_report::fmt(e.accuracy) + "," + detail_report::fmt(e.perplexity) + "\n";
  return out;
}

}  // namespace emu
