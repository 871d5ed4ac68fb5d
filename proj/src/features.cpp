#include "cifra/features.hpp"

#include <algorithm>
#include <fstream>
#include <limits>
#include <map>

#include "cifra/csv.hpp"
#include "cifra/errors.hpp"
#include "cifra/music_theory.hpp"

namespace cifra {

namespace {

constexpr double kMissing = std::numeric_limits<double>::quiet_NaN();

const PitchClass& pitchC() {
  static const PitchClass c{0, "C"};
  return c;
}

// Most common raw token: highest count, ties to the lexicographically
// smaller text. std::map iterates in text order, so the first maximum
// wins both criteria.
std::pair<std::string, int> modeToken(std::span<const ParsedChord> chords) {
  std::map<std::string, int> counts;
  for (const auto& c : chords) ++counts[c.raw];
  std::pair<std::string, int> best{"", 0};
  for (const auto& [token, n] : counts) {
    if (n > best.second) best = {token, n};
  }
  return best;
}

}  // namespace

const std::array<std::string_view, kFeatureCount>& featureNames() {
  static const std::array<std::string_view, kFeatureCount> kNames = {
      "pct_sus",        "pct_7th",
      "pct_min7",       "pct_minor",
      "pct_dim",        "pct_aug",
      "pct_4th",        "pct_6th",
      "pct_9th",        "pct_maj7",
      "pct_dim5",       "pct_aug5",
      "pct_trans_1",    "pct_trans_2",
      "pct_trans_3",    "popularity",
      "total_chords",   "year",
      "key_is_mode_chord", "pct_varying_bass",
      "mean_fifths_dist_to_C", "mean_semitone_dist_to_C",
      "mode_chord_count",
  };
  return kNames;
}

std::tuple<double, double, double> transitionPercentages(
    std::span<const ParsedChord> chords) {
  if (chords.size() < 2) return {0.0, 0.0, 0.0};
  std::map<std::pair<std::string_view, std::string_view>, int> bigrams;
  for (std::size_t i = 0; i + 1 < chords.size(); ++i) {
    ++bigrams[{chords[i].raw, chords[i + 1].raw}];
  }
  std::vector<int> counts;
  counts.reserve(bigrams.size());
  for (const auto& [bigram, n] : bigrams) counts.push_back(n);
  std::sort(counts.begin(), counts.end(), std::greater<int>());
  counts.resize(3, 0);
  const double denom = static_cast<double>(chords.size() - 1);
  return {counts[0] / denom, counts[1] / denom, counts[2] / denom};
}

int keyMatchIndicator(std::string_view song_key,
                      std::span<const ParsedChord> chords, bool strict,
                      HygieneCounters* counters) {
  ParsedChord key;
  try {
    key = parseChord(song_key, strict);
  } catch (const MalformedChord&) {
    if (strict) throw;
    if (counters) ++counters->bad_keys;
    return 0;
  }
  if (chords.empty()) return 0;
  auto [token, n] = modeToken(chords);
  ParsedChord mode = parseChord(token);
  return (mode.root.index == key.root.index &&
          mode.minor_third == key.minor_third)
             ? 1
             : 0;
}

FeatureVector featurizeSong(const SongRecord& song, bool strict,
                            HygieneCounters* counters) {
  std::vector<ParsedChord> parsed;
  parsed.reserve(song.chords.size());
  std::string ignored;
  for (const auto& token : song.chords) {
    try {
      parsed.push_back(parseChord(token, strict, &ignored));
      if (!ignored.empty() && counters) ++counters->ignored_suffixes;
    } catch (const MalformedChord&) {
      if (strict) throw;
      if (counters) ++counters->malformed_tokens;
    }
  }
  if (parsed.empty()) {
    throw EmptySong("song \"" + song.song_id + "\" has no parseable chords");
  }

  const double n = static_cast<double>(parsed.size());
  FeatureVector fv;
  fv.genre = song.genre;

  // Groups 1-2: means of the per-chord indicator columns.
  std::array<int, kIndicatorCount> sums{};
  int varying_bass = 0;
  int fifths_sum = 0;
  int semitone_sum = 0;
  for (const auto& chord : parsed) {
    auto row = indicatorRow(chord);
    for (int i = 0; i < kIndicatorCount; ++i) sums[i] += row[i] ? 1 : 0;
    if (chord.bass && chord.bass->index != chord.root.index) ++varying_bass;
    fifths_sum += fifthsDistance(chord.root, pitchC());
    semitone_sum += semitoneDistance(chord.root, pitchC());
  }
  for (int i = 0; i < kIndicatorCount; ++i) {
    fv.values[i] = sums[i] / n;
  }

  auto [p1, p2, p3] = transitionPercentages(parsed);
  fv.set(Feature::kPctTrans1, p1);
  fv.set(Feature::kPctTrans2, p2);
  fv.set(Feature::kPctTrans3, p3);

  fv.set(Feature::kPopularity,
         song.popularity ? *song.popularity : kMissing);
  fv.set(Feature::kTotalChords, n);
  fv.set(Feature::kYear, song.year ? static_cast<double>(*song.year) : kMissing);
  fv.set(Feature::kKeyIsModeChord,
         static_cast<double>(keyMatchIndicator(song.key, parsed, strict, counters)));
  fv.set(Feature::kPctVaryingBass, varying_bass / n);
  fv.set(Feature::kMeanFifthsDistToC, fifths_sum / n);
  fv.set(Feature::kMeanSemitoneDistToC, semitone_sum / n);
  fv.set(Feature::kModeChordCount,
         static_cast<double>(modeToken(parsed).second));
  return fv;
}

FeatureTable featurizeCorpus(std::span<const SongRecord> songs, bool strict,
                             HygieneCounters* counters) {
  FeatureTable table;
  table.ids.reserve(songs.size());
  table.genres.reserve(songs.size());
  table.rows.reserve(songs.size());
  for (const auto& song : songs) {
    try {
      FeatureVector fv = featurizeSong(song, strict, counters);
      table.ids.push_back(song.song_id);
      table.genres.push_back(fv.genre);
      table.rows.push_back(fv.values);
    } catch (const EmptySong&) {
      if (counters) ++counters->empty_songs;
    }
  }
  return table;
}

void writeFeaturesCsv(const FeatureTable& table,
                      const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw CifraError("features: cannot write \"" + path.string() + "\"");
  }
  std::vector<std::string> header;
  for (auto name : featureNames()) header.emplace_back(name);
  header.emplace_back("genre");
  out << csvJoin(header) << "\n";
  for (std::size_t r = 0; r < table.size(); ++r) {
    std::vector<std::string> fields;
    fields.reserve(kFeatureCount + 1);
    for (double v : table.rows[r]) fields.push_back(formatDouble(v));
    fields.push_back(table.genres[r]);
    out << csvJoin(fields) << "\n";
  }
}

}  // namespace cifra
