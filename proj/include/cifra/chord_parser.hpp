#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>

namespace cifra {

// Semitone class 0..11 (C=0, C#/Db=1, ..., B=11) plus the spelling it
// was parsed from. Enharmonic spellings share the same index.
struct PitchClass {
  int index = 0;
  std::string spelled;

  friend bool operator==(const PitchClass& a, const PitchClass& b) {
    return a.index == b.index;
  }
};

// Structured decomposition of one cifra chord symbol.
struct ParsedChord {
  PitchClass root;
  bool minor_third = false;
  bool diminished = false;
  bool augmented = false;
  bool suspended = false;
  bool has_fourth = false;
  bool has_sixth = false;
  bool has_seventh = false;
  bool has_major_seventh = false;
  bool has_ninth = false;
  bool dim_fifth = false;
  bool aug_fifth = false;
  std::optional<PitchClass> bass;
  std::string raw;

  // Major in the triad sense: no minor third, not diminished, not augmented.
  bool isMajor() const { return !minor_third && !diminished && !augmented; }
};

// Maps a note spelling (letter A-G plus optional # or b) to its pitch
// class. Throws MalformedChord on anything else.
PitchClass normalizeRoot(std::string_view text);

// Parses one chord token.
//
// Grammar: ROOT ACCIDENTAL? QUALITY* ( "/" BASS )?. Quality atoms:
//   m (not before "aj")  -> minor third        maj7, 7+ -> major seventh
//   dim, º, °            -> diminished          7       -> seventh
//   aug                  -> augmented           6       -> sixth
//   sus, sus2, sus4      -> suspended           9       -> ninth
//   4                    -> fourth              5-, 5b  -> diminished fifth
//                                               5+, 5#  -> augmented fifth
//
// Unrecognized trailing characters are ignored in lenient mode (reported
// through `ignored` when non-null) and raise MalformedChord when strict.
// A root letter outside A-G raises MalformedChord in both modes.
ParsedChord parseChord(std::string_view token, bool strict = false,
                       std::string* ignored = nullptr);

// Per-chord boolean indicators, in the fixed column order used by the
// feature summarizer.
inline constexpr int kIndicatorCount = 12;

enum class Indicator : int {
  kSuspended = 0,
  kSeventh = 1,
  kMinorSeventh = 2,  // minor third AND seventh
  kMinor = 3,
  kDiminished = 4,
  kAugmented = 5,
  kFourth = 6,
  kSixth = 7,
  kNinth = 8,
  kMajorSeventh = 9,
  kDimFifth = 10,
  kAugFifth = 11,
};

std::array<bool, kIndicatorCount> indicatorRow(const ParsedChord& chord);

// Column names for indicator output, indexed like Indicator.
const std::array<std::string_view, kIndicatorCount>& indicatorNames();

}  // namespace cifra
