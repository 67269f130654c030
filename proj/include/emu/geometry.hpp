#pragma once

#include <algorithm>
#include <optional>
#include <stdexcept>

#include "emu/types.hpp"

namespace emu {

enum class OverlapMode { standard_iou, paper_literal };

inline const char* to_string(OverlapMode m) {
  return m == OverlapMode::standard_iou ? "standard" : "paper";
}

inline OverlapMode overlap_mode_from_string(const std::string& s) {
  if (s == "standard" || s == "standard_iou") return OverlapMode::standard_iou;
  if (s == "paper" || s == "paper_literal") return OverlapMode::paper_literal;
  throw ValidationError("unknown overlap mode '" + s + "'");
}

// standard_iou is the default measure; paper_literal evaluates the literal
// x-extent over y-extent ratio and is kept for fidelity experiments.
struct OverlapConfig {
  OverlapMode mode = OverlapMode::standard_iou;
  double tau = 0.1;

  void validate() const {
    if (!(tau >= 0.0 && tau <= 1.0)) throw ValidationError("overlap tau must be in [0,1]");
  }
};

// Intersection-over-union. Symmetric, in [0,1], 0 for disjoint boxes.
inline double iou(const BBox& a, const BBox& b) {
  double iw = std::min(a.x2, b.x2) - std::max(a.x1, b.x1);
  double ih = std::min(a.y2, b.y2) - std::max(a.y1, b.y1);
  if (iw <= 0.0 || ih <= 0.0) return 0.0;
  double inter = iw * ih;
  double uni = a.area() + b.area() - inter;
  return inter / uni;
}

// The ratio (min{x4,x2} - max{x3,x1}) / (min{y4,y2} - max{y3,y1}). Not an
// IoU: the value may be negative or exceed 1. A zero denominator is a
// degenerate overlap, reported as nullopt so callers can fall back.
inline std::optional<double> overlap_paper(const BBox& a, const BBox& b) {
  double num = std::min(b.x2, a.x2) - std::max(b.x1, a.x1);
  double den = std::min(b.y2, a.y2) - std::max(b.y1, a.y1);
  if (den == 0.0) return std::nullopt;
  return num / den;
}

// Overlap value under the configured mode. Degenerate paper_literal cases
// fall back to standard_iou.
inline double effective_overlap(const BBox& a, const BBox& b, const OverlapConfig& cfg) {
  if (cfg.mode == OverlapMode::paper_literal) {
    if (auto v = overlap_paper(a, b)) return *v;
  }
  return iou(a, b);
}

inline bool overlaps(const BBox& a, const BBox& b, const OverlapConfig& cfg) {
  return effective_overlap(a, b, cfg) >= cfg.tau;
}

}  // namespace emu
