#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "cifra/features.hpp"
#include "cifra/song.hpp"

namespace cifra {

// Loads the long-format chords CSV (song_id,artist,genre,key,chord,seq_no;
// one row per chord occurrence). Rows are grouped by song_id and ordered
// by seq_no; songs keep their first-appearance order. Throws SchemaError
// on a bad header or non-integer seq_no, OrderError on a duplicate
// (song_id, seq_no).
std::vector<SongRecord> loadChordsCsv(const std::filesystem::path& path);

struct JoinStats {
  std::size_t matched = 0;
  std::size_t total = 0;
};

// Left join of popularity/year metadata (song_id,popularity,year) onto
// the songs. Unmatched songs keep missing fields; a duplicate metadata
// key is a SchemaError.
JoinStats joinMetadata(std::vector<SongRecord>& songs,
                       const std::filesystem::path& metadata_csv);

struct SplitIndices {
  std::set<std::string> train_ids;
  std::set<std::string> test_ids;
  std::uint64_t seed = 0;
  double fraction = 0.0;
};

// Genre-stratified split: within each genre, round-half-up of
// fraction*n_g ids go to train (clamped so both splits are non-empty)
// via a seeded shuffle. Depends only on the id set per genre, the
// fraction and the seed. DegenerateGenre when a genre has < 2 songs.
SplitIndices stratifiedSplit(const FeatureTable& table, double fraction,
                             std::uint64_t seed);

// Rows of `table` whose id is in `ids`, keeping table order.
FeatureTable selectRows(const FeatureTable& table,
                        const std::set<std::string>& ids);

// Replaces missing values by the train-split median of the column.
// Returns feature name -> median for every column that is imputable
// (popularity and year always, anything else only if it had gaps).
// AllMissing when a column that needs filling has no train values.
std::map<std::string, double> imputeMissing(FeatureTable& train,
                                            FeatureTable& test);

// Reads a feature CSV as written by writeFeaturesCsv. The file carries
// no ids, so rows are named row_0, row_1, ...
FeatureTable readFeaturesCsv(const std::filesystem::path& path);

void writeSplitManifest(const SplitIndices& split,
                        const std::vector<std::string>& ordered_ids,
                        const std::filesystem::path& path);

struct SplitManifest {
  std::vector<std::pair<std::string, bool>> rows;  // (song_id, is_train) in file order
};

SplitManifest readSplitManifest(const std::filesystem::path& path);

// Turns a manifest into indices against `table`. Matches by id when the
// manifest ids appear in the table; otherwise, when the row counts line
// up, matches by position (the feature CSV carries no ids, so a manifest
// written next to it aligns row for row). Anything else is a SchemaError.
SplitIndices resolveManifest(const SplitManifest& manifest,
                             const FeatureTable& table);

}  // namespace cifra
