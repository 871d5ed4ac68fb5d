#pragma once

#include <array>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include "cifra/chord_parser.hpp"
#include "cifra/song.hpp"

namespace cifra {

inline constexpr int kFeatureCount = 23;

// Canonical feature order: group 1 (triads and simple tetrads), group 2
// (dissonant tetrads), group 3 (main chord transitions), group 4
// (miscellany). Nested models take prefixes of this order.
enum class Feature : int {
  kPctSus = 0,
  kPct7th = 1,
  kPctMin7 = 2,
  kPctMinor = 3,
  kPctDim = 4,
  kPctAug = 5,
  kPct4th = 6,
  kPct6th = 7,
  kPct9th = 8,
  kPctMaj7 = 9,
  kPctDim5 = 10,
  kPctAug5 = 11,
  kPctTrans1 = 12,
  kPctTrans2 = 13,
  kPctTrans3 = 14,
  kPopularity = 15,
  kTotalChords = 16,
  kYear = 17,
  kKeyIsModeChord = 18,
  kPctVaryingBass = 19,
  kMeanFifthsDistToC = 20,
  kMeanSemitoneDistToC = 21,
  kModeChordCount = 22,
};

inline constexpr std::array<int, 4> kGroupSizes = {6, 6, 3, 8};

const std::array<std::string_view, kFeatureCount>& featureNames();

// The 23 engineered features of one song plus its genre label. Missing
// popularity/year are NaN until imputation.
struct FeatureVector {
  std::array<double, kFeatureCount> values{};
  std::string genre;

  double get(Feature f) const { return values[static_cast<int>(f)]; }
  void set(Feature f, double v) { values[static_cast<int>(f)] = v; }
};

// Feature rows for a whole corpus, ids kept alongside for the split
// manifest. The CSV export carries the 23 features plus genre only.
struct FeatureTable {
  std::vector<std::string> ids;
  std::vector<std::string> genres;
  std::vector<std::array<double, kFeatureCount>> rows;

  std::size_t size() const { return rows.size(); }
};

// Percentages of the three most common ordered bigrams over the raw
// token sequence. Self-transitions count; fewer than three distinct
// bigrams pad with zero; a single chord yields (0, 0, 0).
std::tuple<double, double, double> transitionPercentages(
    std::span<const ParsedChord> chords);

// 1 iff the most common raw token (ties broken by lexicographically
// smaller token text) shares root pitch class and minor/major polarity
// with the declared key. An unparseable key yields 0 in lenient mode and
// propagates MalformedChord when strict.
int keyMatchIndicator(std::string_view song_key,
                      std::span<const ParsedChord> chords, bool strict = false,
                      HygieneCounters* counters = nullptr);

// Reduces one song to its FeatureVector. Malformed tokens are skipped
// (counted) in lenient mode; EmptySong when nothing parses.
FeatureVector featurizeSong(const SongRecord& song, bool strict = false,
                            HygieneCounters* counters = nullptr);

// Featurizes a corpus, dropping EmptySong records with a counter.
FeatureTable featurizeCorpus(std::span<const SongRecord> songs,
                             bool strict = false,
                             HygieneCounters* counters = nullptr);

// 24-column CSV: the 23 features then genre; missing values as empty
// fields.
void writeFeaturesCsv(const FeatureTable& table,
                      const std::filesystem::path& path);

}  // namespace cifra
