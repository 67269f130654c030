#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace emu {

// User-facing validation failure (bad file, bad config, violated schema).
// The CLI maps this to exit code 1; internal invariant breaks use
// std::logic_error and map to exit code 2.
class ValidationError : public std::runtime_error {
 public:
  explicit ValidationError(const std::string& msg) : std::runtime_error(msg) {}
};

// ---------------------------------------------------------------------------
// Core domain types
// ---------------------------------------------------------------------------

struct BBox {
  double x1 = 0, y1 = 0, x2 = 0, y2 = 0;

  double width() const { return x2 - x1; }
  double height() const { return y2 - y1; }
  double area() const { return width() * height(); }

  bool valid() const {
    return std::isfinite(x1) && std::isfinite(y1) && std::isfinite(x2) && std::isfinite(y2) &&
           x1 >= 0 && y1 >= 0 && x1 < x2 && y1 < y2;
  }

  bool operator==(const BBox&) const = default;
};

enum class EditLabel { none, introduced, altered, missing };

inline const char* to_string(EditLabel l) {
  switch (l) {
    case EditLabel::none: return "none";
    case EditLabel::introduced: return "introduced";
    case EditLabel::altered: return "altered";
    case EditLabel::missing: return "missing";
  }
  throw std::logic_error("unknown EditLabel");
}

inline EditLabel edit_label_from_string(const std::string& s) {
  if (s == "none") return EditLabel::none;
  if (s == "introduced") return EditLabel::introduced;
  if (s == "altered") return EditLabel::altered;
  if (s == "missing") return EditLabel::missing;
  throw ValidationError("unknown edit_label '" + s + "'");
}

struct Region {
  int index = 0;
  BBox box;
  bool is_subject = false;
  EditLabel edit_label = EditLabel::none;
  std::string detector_class;  // optional short tag, "" when absent

  bool operator==(const Region&) const = default;
};

enum class QuestionType { intent, implication, disinformation, subject_implication, subject_emotion };

inline constexpr QuestionType kAllQuestionTypes[] = {
    QuestionType::intent, QuestionType::implication, QuestionType::disinformation,
    QuestionType::subject_implication, QuestionType::subject_emotion};

inline const char* to_string(QuestionType t) {
  switch (t) {
    case QuestionType::intent: return "intent";
    case QuestionType::implication: return "implication";
    case QuestionType::disinformation: return "disinformation";
    case QuestionType::subject_implication: return "subject_implication";
    case QuestionType::subject_emotion: return "subject_emotion";
  }
  throw std::logic_error("unknown QuestionType");
}

inline QuestionType question_type_from_string(const std::string& s) {
  for (QuestionType t : kAllQuestionTypes)
    if (s == to_string(t)) return t;
  throw ValidationError("unknown question type '" + s + "'");
}

// subject_implication / subject_emotion are asked about a specific subject;
// the other three are about the edit as a whole.
inline bool requires_subject(QuestionType t) {
  return t == QuestionType::subject_implication || t == QuestionType::subject_emotion;
}

struct Question {
  QuestionType qtype = QuestionType::intent;
  std::optional<int> subject_index;  // region index of the referenced subject
  std::string text;
  std::vector<int> tokens;  // derived from text; see tokenizer.hpp

  bool operator==(const Question&) const = default;
};

struct Answer {
  bool positive = true;  // binary label; file values "positive"/"negative"
  std::string text;
  std::string rationale;
  std::vector<int> text_tokens;
  std::vector<int> rationale_tokens;
  std::string tokenizer_version;

  bool operator==(const Answer&) const = default;
};

struct AnnotationRecord {
  std::string image_id;
  std::string source_path;
  std::string edited_path;
  std::vector<Region> regions;  // regions of the edited image
  int source_region_count = 0;
  std::vector<std::pair<Question, Answer>> qa;

  bool operator==(const AnnotationRecord&) const = default;
};

inline constexpr int kMaxSubjects = 3;

// Canonical question wording per type. Subject-specific types substitute the
// atomic subjectK tag.
inline std::string question_text(QuestionType t, std::optional<int> subject_ordinal = std::nullopt) {
  auto subj = [&]() -> std::string {
    int k = subject_ordinal.value_or(1);
    return "subject" + std::to_string(k);
  };
  switch (t) {
    case QuestionType::intent: return "Why would someone create this edit?";
    case QuestionType::implication: return "What are the potential implications of this edit?";
    case QuestionType::disinformation:
      return "If the edit was portrayed as real news, how might it mislead the viewer?";
    case QuestionType::subject_implication:
      return "How could this edit mislead public perception of " + subj() + "?";
    case QuestionType::subject_emotion: return "How might this image edit make " + subj() + " feel?";
  }
  throw std::logic_error("unknown QuestionType");
}

// ---------------------------------------------------------------------------
// Record validation
// ---------------------------------------------------------------------------

// Throws ValidationError naming the offending record.
inline void validate_record(const AnnotationRecord& rec) {
  auto fail = [&](const std::string& what) {
    throw ValidationError("record " + (rec.image_id.empty() ? std::string("<no id>") : rec.image_id) +
                          ": " + what);
  };
  if (rec.image_id.empty()) fail("empty image_id");

  int subjects = 0;
  std::vector<int> seen;
  for (const Region& r : rec.regions) {
    if (!r.box.valid()) fail("invalid box on region " + std::to_string(r.index));
    for (int s : seen)
      if (s == r.index) fail("duplicate region index " + std::to_string(r.index));
    seen.push_back(r.index);
    if (r.is_subject) ++subjects;
  }
  if (subjects > kMaxSubjects)
    fail("more than " + std::to_string(kMaxSubjects) + " subject regions (" + std::to_string(subjects) + ")");
  if (rec.source_region_count < 0) fail("negative source_region_count");

  for (const auto& [q, a] : rec.qa) {
    if (requires_subject(q.qtype)) {
      if (!q.subject_index.has_value())
        fail(std::string(to_string(q.qtype)) + " question missing subject_index");
    } else if (q.subject_index.has_value()) {
      fail(std::string(to_string(q.qtype)) + " question must not carry subject_index");
    }
    if (q.subject_index.has_value()) {
      bool resolved = false;
      for (const Region& r : rec.regions)
        if (r.index == *q.subject_index && r.is_subject) resolved = true;
      if (!resolved)
        fail("unresolved subject: subject_index " + std::to_string(*q.subject_index) +
             " does not name a subject region");
    }
    if (q.text.empty()) fail("empty question text");
    if (a.rationale.empty()) fail("empty rationale");
  }
}

}  // namespace emu
