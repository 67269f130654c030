#pragma once

#include <algorithm>
#include <array>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "emu/rng.hpp"
#include "emu/tokenizer.hpp"
#include "emu/types.hpp"

namespace emu {

namespace detail {

inline void reject_unknown_fields(const nlohmann::json& obj, std::initializer_list<const char*> known,
                                  const std::string& where) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    bool ok = false;
    for (const char* k : known)
      if (it.key() == k) ok = true;
    if (!ok) throw ValidationError(where + ": unknown field '" + it.key() + "'");
  }
}

}  // namespace detail

// Fills the derived token fields from the raw text. Parsing calls this, so
// tokens never need to appear in the file.
inline void tokenize_record(AnnotationRecord& rec) {
  for (auto& [q, a] : rec.qa) {
    q.tokens = tok::encode(q.text);
    a.text_tokens = tok::encode(a.text);
    a.rationale_tokens = tok::encode(a.rationale);
    a.tokenizer_version = std::string(tok::version());
  }
}

// One newline-delimited JSON record per line. Unknown fields are rejected;
// every record is validated against the schema invariants.
inline std::vector<AnnotationRecord> parse_annotations(std::istream& in) {
  std::vector<AnnotationRecord> out;
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw ValidationError("line " + std::to_string(line_no) + ": malformed record: " + e.what());
    }
    const std::string where = "line " + std::to_string(line_no);
    try {
      if (!j.is_object()) throw ValidationError("record is not an object");
      detail::reject_unknown_fields(
          j, {"image_id", "source_path", "edited_path", "regions", "source_region_count", "qa"}, where);

      AnnotationRecord rec;
      rec.image_id = j.at("image_id").get<std::string>();
      rec.source_path = j.at("source_path").get<std::string>();
      rec.edited_path = j.at("edited_path").get<std::string>();
      rec.source_region_count = j.value("source_region_count", 0);

      for (const auto& jr : j.at("regions")) {
        detail::reject_unknown_fields(jr, {"index", "box", "is_subject", "edit_label", "class"},
                                      where + ": region");
        Region r;
        r.index = jr.at("index").get<int>();
        const auto& box = jr.at("box");
        if (!box.is_array() || box.size() != 4)
          throw ValidationError("region box must be [x1,y1,x2,y2]");
        r.box = {box[0].get<double>(), box[1].get<double>(), box[2].get<double>(),
                 box[3].get<double>()};
        r.is_subject = jr.at("is_subject").get<bool>();
        r.edit_label = edit_label_from_string(jr.at("edit_label").get<std::string>());
        if (jr.contains("class")) r.detector_class = jr.at("class").get<std::string>();
        rec.regions.push_back(std::move(r));
      }

      for (const auto& jq : j.at("qa")) {
        detail::reject_unknown_fields(
            jq, {"type", "subject_index", "question", "label", "answer", "rationale"}, where + ": qa");
        Question q;
        Answer a;
        q.qtype = question_type_from_string(jq.at("type").get<std::string>());
        if (jq.contains("subject_index")) q.subject_index = jq.at("subject_index").get<int>();
        q.text = jq.at("question").get<std::string>();
        std::string label = jq.at("label").get<std::string>();
        if (label == "positive")
          a.positive = true;
        else if (label == "negative")
          a.positive = false;
        else
          throw ValidationError("label must be 'positive' or 'negative', got '" + label + "'");
        a.text = jq.at("answer").get<std::string>();
        a.rationale = jq.at("rationale").get<std::string>();
        rec.qa.emplace_back(std::move(q), std::move(a));
      }

      validate_record(rec);
      tokenize_record(rec);
      out.push_back(std::move(rec));
    } catch (const nlohmann::json::exception& e) {
      throw ValidationError(where + ": malformed record: " + e.what());
    } catch (const ValidationError& e) {
      throw ValidationError(where + ": " + e.what());
    }
  }
  return out;
}

inline std::vector<AnnotationRecord> parse_annotations(const std::string& bytes) {
  std::istringstream in(bytes);
  return parse_annotations(in);
}

// Canonical, byte-stable serialization; parse(serialize(r)) == r.
inline std::string serialize_annotations(const std::vector<AnnotationRecord>& records) {
  std::string out;
  for (const AnnotationRecord& rec : records) {
    nlohmann::ordered_json j;
    j["image_id"] = rec.image_id;
    j["source_path"] = rec.source_path;
    j["edited_path"] = rec.edited_path;
    j["source_region_count"] = rec.source_region_count;
    j["regions"] = nlohmann::ordered_json::array();
    for (const Region& r : rec.regions) {
      nlohmann::ordered_json jr;
      jr["index"] = r.index;
      jr["box"] = {r.box.x1, r.box.y1, r.box.x2, r.box.y2};
      jr["is_subject"] = r.is_subject;
      jr["edit_label"] = to_string(r.edit_label);
      if (!r.detector_class.empty()) jr["class"] = r.detector_class;
      j["regions"].push_back(std::move(jr));
    }
    j["qa"] = nlohmann::ordered_json::array();
    for (const auto& [q, a] : rec.qa) {
      nlohmann::ordered_json jq;
      jq["type"] = to_string(q.qtype);
      if (q.subject_index.has_value()) jq["subject_index"] = *q.subject_index;
      jq["question"] = q.text;
      jq["label"] = a.positive ? "positive" : "negative";
      jq["answer"] = a.text;
      jq["rationale"] = a.rationale;
      j["qa"].push_back(std::move(jq));
    }
    out += j.dump();
    out += '\n';
  }
  return out;
}

struct DatasetSplit {
  std::vector<AnnotationRecord> train, val, test;
};

// Image-level split: image_ids are ordered by a seeded stable hash and cut at
// the ratio boundaries, so records sharing an image never straddle splits and
// the assignment is independent of record order.
inline DatasetSplit split_dataset(const std::vector<AnnotationRecord>& records,
                                  std::array<double, 3> ratios, uint64_t seed) {
  for (double r : ratios)
    if (!(r > 0.0)) throw ValidationError("split ratios must be positive");
  double sum = ratios[0] + ratios[1] + ratios[2];
  if (std::abs(sum - 1.0) > 1e-9) throw ValidationError("split ratios must sum to 1");

  std::vector<std::string> ids;
  for (const AnnotationRecord& rec : records)
    if (std::find(ids.begin(), ids.end(), rec.image_id) == ids.end()) ids.push_back(rec.image_id);

  std::sort(ids.begin(), ids.end(), [&](const std::string& a, const std::string& b) {
    uint64_t ha = mix_keys(seed, fnv1a64(a));
    uint64_t hb = mix_keys(seed, fnv1a64(b));
    if (ha != hb) return ha < hb;
    return a < b;
  });

  size_t n = ids.size();
  auto cut = [&](double frac) {
    auto c = static_cast<size_t>(std::llround(frac * static_cast<double>(n)));
    return std::min(c, n);
  };
  size_t c1 = cut(ratios[0]);
  size_t c2 = std::max(c1, cut(ratios[0] + ratios[1]));

  std::map<std::string, int> bucket;
  for (size_t i = 0; i < n; ++i) bucket[ids[i]] = i < c1 ? 0 : (i < c2 ? 1 : 2);

  DatasetSplit split;
  for (const AnnotationRecord& rec : records) {
    switch (bucket[rec.image_id]) {
      case 0: split.train.push_back(rec); break;
      case 1: split.val.push_back(rec); break;
      default: split.test.push_back(rec); break;
    }
  }
  return split;
}

// Fraction of questions per type; all five keys always present.
inline std::map<QuestionType, double> question_type_distribution(
    const std::vector<AnnotationRecord>& records) {
  std::map<QuestionType, double> counts;
  for (QuestionType t : kAllQuestionTypes) counts[t] = 0.0;
  size_t total = 0;
  for (const AnnotationRecord& rec : records)
    for (const auto& [q, a] : rec.qa) {
      counts[q.qtype] += 1.0;
      ++total;
    }
  if (total > 0)
    for (auto& [t, c] : counts) c /= static_cast<double>(total);
  return counts;
}

}  // namespace emu
