#include "cifra/chord_parser.hpp"

#include <cstddef>

#include "cifra/errors.hpp"

namespace cifra {

namespace {

// C=0, D=2, E=4, F=5, G=7, A=9, B=11
constexpr int kLetterSemitone[7] = {9, 11, 0, 2, 4, 5, 7};  // A..G

bool isRootLetter(char c) { return c >= 'A' && c <= 'G'; }

bool startsWith(std::string_view s, std::string_view prefix) {
  return s.substr(0, prefix.size()) == prefix;
}

// Consumes a note spelling at the head of `s`; returns the pitch class
// and advances `pos`. Returns nullopt if `s[pos]` is not a root letter.
std::optional<PitchClass> takeNote(std::string_view s, std::size_t& pos) {
  if (pos >= s.size() || !isRootLetter(s[pos])) return std::nullopt;
  std::size_t start = pos;
  int semis = kLetterSemitone[s[pos] - 'A'];
  ++pos;
  if (pos < s.size() && (s[pos] == '#' || s[pos] == 'b')) {
    semis += (s[pos] == '#') ? 1 : -1;
    ++pos;
  }
  PitchClass pc;
  pc.index = ((semis % 12) + 12) % 12;
  pc.spelled = std::string(s.substr(start, pos - start));
  return pc;
}

}  // namespace

PitchClass normalizeRoot(std::string_view text) {
  std::size_t pos = 0;
  auto pc = takeNote(text, pos);
  if (!pc || pos != text.size()) {
    throw MalformedChord("not a note spelling: \"" + std::string(text) + "\"");
  }
  return *pc;
}

ParsedChord parseChord(std::string_view token, bool strict, std::string* ignored) {
  if (ignored) ignored->clear();
  if (token.empty()) throw MalformedChord("empty token");

  ParsedChord chord;
  chord.raw = std::string(token);

  std::size_t pos = 0;
  auto root = takeNote(token, pos);
  if (!root) {
    throw MalformedChord("root letter not in A-G: \"" + std::string(token) + "\"");
  }
  chord.root = *root;

  // Quality atoms, consumed greedily left to right. The loop stalls at
  // the first position where no atom matches.
  while (pos < token.size()) {
    std::string_view rest = token.substr(pos);
    if (startsWith(rest, "maj7")) {
      chord.has_major_seventh = true;
      pos += 4;
    } else if (startsWith(rest, "dim") && !chord.augmented) {
      chord.diminished = true;
      pos += 3;
    } else if ((startsWith(rest, "\xc2\xba") || startsWith(rest, "\xc2\xb0")) &&
               !chord.augmented) {
      // º (U+00BA) and ° (U+00B0), both seen in scraped cifras
      chord.diminished = true;
      pos += 2;
    } else if (startsWith(rest, "aug") && !chord.diminished) {
      chord.augmented = true;
      pos += 3;
    } else if (startsWith(rest, "sus")) {
      chord.suspended = true;
      pos += 3;
      // sus2/sus4 keep the bare digit out of the fourth/ninth atoms
      if (pos < token.size() && (token[pos] == '2' || token[pos] == '4')) ++pos;
    } else if (startsWith(rest, "7+")) {
      chord.has_major_seventh = true;
      pos += 2;
    } else if (startsWith(rest, "7")) {
      chord.has_seventh = true;
      pos += 1;
    } else if (startsWith(rest, "6")) {
      chord.has_sixth = true;
      pos += 1;
    } else if (startsWith(rest, "9")) {
      chord.has_ninth = true;
      pos += 1;
    } else if (startsWith(rest, "5-") || startsWith(rest, "5b")) {
      chord.dim_fifth = true;
      pos += 2;
    } else if (startsWith(rest, "5+") || startsWith(rest, "5#")) {
      chord.aug_fifth = true;
      pos += 2;
    } else if (startsWith(rest, "4")) {
      chord.has_fourth = true;
      pos += 1;
    } else if (rest[0] == 'm' && !startsWith(rest.substr(1), "aj")) {
      chord.minor_third = true;
      pos += 1;
    } else {
      break;
    }
  }

  // 7+ and maj7 denote the major seventh interval; a plain 7 atom on the
  // same symbol is subsumed by it.
  if (chord.has_major_seventh) chord.has_seventh = false;

  // Slash bass. Anything between the stall point and the last viable
  // slash (and any unparseable remainder) is corpus noise.
  std::string_view leftover = token.substr(pos);
  if (!leftover.empty()) {
    std::size_t slash = leftover.rfind('/');
    if (slash != std::string_view::npos) {
      std::string_view after = leftover.substr(slash + 1);
      std::size_t bass_pos = 0;
      auto bass = takeNote(after, bass_pos);
      if (bass && bass_pos == after.size()) {
        chord.bass = *bass;
        leftover = leftover.substr(0, slash);
      }
    }
  }
  if (!leftover.empty()) {
    if (strict) {
      throw MalformedChord("unrecognized trailing \"" + std::string(leftover) +
                           "\" in \"" + std::string(token) + "\"");
    }
    if (ignored) *ignored = std::string(leftover);
  }

  return chord;
}

std::array<bool, kIndicatorCount> indicatorRow(const ParsedChord& c) {
  return {
      c.suspended,
      c.has_seventh,
      c.minor_third && c.has_seventh,
      c.minor_third,
      c.diminished,
      c.augmented,
      c.has_fourth,
      c.has_sixth,
      c.has_ninth,
      c.has_major_seventh,
      c.dim_fifth,
      c.aug_fifth,
  };
}

const std::array<std::string_view, kIndicatorCount>& indicatorNames() {
  static const std::array<std::string_view, kIndicatorCount> kNames = {
      "suspended",  "seventh", "minor_seventh", "minor",
      "diminished", "augmented", "fourth",      "sixth",
      "ninth",      "major_seventh", "dim_fifth", "aug_fifth",
  };
  return kNames;
}

}  // namespace cifra
