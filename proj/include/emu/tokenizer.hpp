#pragma once

#include <array>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace emu::tok {

// Byte-level vocabulary: ids 0..255 are raw bytes, then nine specials.
// subjectK tags are atomic so the model sees one token per subject mention.
constexpr int PAD = 256;
constexpr int BOS = 257;
constexpr int EOS = 258;
constexpr int SEP = 259;
constexpr int YES = 260;
constexpr int NO = 261;
constexpr int SUBJ1 = 262;
constexpr int SUBJ2 = 263;
constexpr int SUBJ3 = 264;
constexpr int kVocabSize = 265;

inline std::string_view version() { return "emu-bytes-1"; }

struct SpecialToken {
  std::string_view surface;
  int id;
};

inline constexpr std::array<SpecialToken, 9> kSpecials = {{
    {"<pad>", PAD},
    {"<s>", BOS},
    {"</s>", EOS},
    {"<sep>", SEP},
    {"<yes>", YES},
    {"<no>", NO},
    {"subject1", SUBJ1},
    {"subject2", SUBJ2},
    {"subject3", SUBJ3},
}};

inline int subject_token(int ordinal) {
  if (ordinal < 1 || ordinal > 3) throw std::out_of_range("subject ordinal must be 1..3");
  return SUBJ1 + (ordinal - 1);
}

// Greedy longest-match over the special surfaces, raw bytes otherwise.
inline std::vector<int> encode(std::string_view text) {
  std::vector<int> out;
  out.reserve(text.size());
  size_t i = 0;
  while (i < text.size()) {
    int matched_id = -1;
    size_t matched_len = 0;
    for (const SpecialToken& sp : kSpecials) {
      if (sp.surface.size() > matched_len && text.substr(i, sp.surface.size()) == sp.surface) {
        matched_id = sp.id;
        matched_len = sp.surface.size();
      }
    }
    if (matched_id >= 0) {
      out.push_back(matched_id);
      i += matched_len;
    } else {
      out.push_back(static_cast<unsigned char>(text[i]));
      ++i;
    }
  }
  return out;
}

inline std::string decode(std::span<const int> ids) {
  std::string out;
  for (int id : ids) {
    if (id >= 0 && id < 256) {
      out.push_back(static_cast<char>(id));
    } else {
      bool found = false;
      for (const SpecialToken& sp : kSpecials) {
        if (sp.id == id) {
          out.append(sp.surface);
          found = true;
          break;
        }
      }
      if (!found) throw std::out_of_range("token id " + std::to_string(id) + " outside vocabulary");
    }
  }
  return out;
}

}  // namespace emu::tok
