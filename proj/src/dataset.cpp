#include "cifra/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <unordered_map>
#include <unordered_set>

#include "cifra/csv.hpp"
#include "cifra/errors.hpp"
#include "cifra/rng.hpp"

namespace cifra {

namespace {

void requireHeader(const std::vector<std::string>& header,
                   const std::vector<std::string>& expected,
                   const std::string& what) {
  if (header != expected) {
    std::string want;
    for (const auto& h : expected) {
      if (!want.empty()) want += ',';
      want += h;
    }
    std::string got;
    for (const auto& h : header) {
      if (!got.empty()) got += ',';
      got += h;
    }
    throw SchemaError(what + " header must be \"" + want + "\", got \"" + got +
                      "\"");
  }
}

long parseInt(const std::string& text, const std::string& context) {
  long value = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || ptr != text.data() + text.size()) {
    throw SchemaError(context + ": not an integer: \"" + text + "\"");
  }
  return value;
}

double parseReal(const std::string& text, const std::string& context) {
  try {
    std::size_t used = 0;
    double v = std::stod(text, &used);
    if (used != text.size()) throw std::invalid_argument(text);
    return v;
  } catch (const std::exception&) {
    throw SchemaError(context + ": not a number: \"" + text + "\"");
  }
}

double medianOf(std::vector<double> values) {
  std::sort(values.begin(), values.end());
  std::size_t n = values.size();
  if (n % 2 == 1) return values[n / 2];
  return (values[n / 2 - 1] + values[n / 2]) / 2.0;
}

}  // namespace

std::vector<SongRecord> loadChordsCsv(const std::filesystem::path& path) {
  CsvTable csv = readCsv(path);
  requireHeader(csv.header,
                {"song_id", "artist", "genre", "key", "chord", "seq_no"},
                "chords CSV");

  struct Pending {
    SongRecord record;
    std::vector<std::pair<long, std::string>> sequenced;
    std::unordered_set<long> seen_seq;
  };
  std::vector<std::string> order;
  std::unordered_map<std::string, Pending> songs;

  for (std::size_t r = 0; r < csv.rows.size(); ++r) {
    const auto& row = csv.rows[r];
    if (row.size() != 6) {
      throw SchemaError("chords CSV row " + std::to_string(r + 2) + " has " +
                        std::to_string(row.size()) + " fields, expected 6");
    }
    const std::string& id = row[0];
    long seq = parseInt(row[5], "chords CSV row " + std::to_string(r + 2));
    auto [it, inserted] = songs.try_emplace(id);
    if (inserted) {
      order.push_back(id);
      it->second.record.song_id = id;
      it->second.record.artist = row[1];
      it->second.record.genre = row[2];
      it->second.record.key = row[3];
    }
    if (!it->second.seen_seq.insert(seq).second) {
      throw OrderError("duplicate seq_no " + std::to_string(seq) +
                       " for song \"" + id + "\"");
    }
    it->second.sequenced.emplace_back(seq, row[4]);
  }

  std::vector<SongRecord> out;
  out.reserve(order.size());
  for (const auto& id : order) {
    Pending& p = songs.at(id);
    std::sort(p.sequenced.begin(), p.sequenced.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    p.record.chords.reserve(p.sequenced.size());
    for (auto& [seq, token] : p.sequenced) {
      p.record.chords.push_back(std::move(token));
    }
    out.push_back(std::move(p.record));
  }
  return out;
}

JoinStats joinMetadata(std::vector<SongRecord>& songs,
                       const std::filesystem::path& metadata_csv) {
  CsvTable csv = readCsv(metadata_csv);
  requireHeader(csv.header, {"song_id", "popularity", "year"}, "metadata CSV");

  struct Meta {
    std::optional<double> popularity;
    std::optional<int> year;
  };
  std::unordered_map<std::string, Meta> meta;
  for (std::size_t r = 0; r < csv.rows.size(); ++r) {
    const auto& row = csv.rows[r];
    if (row.size() != 3) {
      throw SchemaError("metadata CSV row " + std::to_string(r + 2) + " has " +
                        std::to_string(row.size()) + " fields, expected 3");
    }
    Meta m;
    std::string context = "metadata CSV row " + std::to_string(r + 2);
    if (!row[1].empty()) m.popularity = parseReal(row[1], context);
    if (!row[2].empty()) m.year = static_cast<int>(parseInt(row[2], context));
    if (!meta.emplace(row[0], m).second) {
      throw SchemaError("duplicate metadata key \"" + row[0] + "\"");
    }
  }

  JoinStats stats;
  stats.total = songs.size();
  for (auto& song : songs) {
    auto it = meta.find(song.song_id);
    if (it == meta.end()) continue;
    song.popularity = it->second.popularity;
    song.year = it->second.year;
    ++stats.matched;
  }
  return stats;
}

SplitIndices stratifiedSplit(const FeatureTable& table, double fraction,
                             std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction < 1.0)) {
    throw CifraError("dataset: split fraction must be in (0, 1)");
  }
  std::map<std::string, std::vector<std::string>> by_genre;
  for (std::size_t r = 0; r < table.size(); ++r) {
    by_genre[table.genres[r]].push_back(table.ids[r]);
  }

  SplitIndices split;
  split.seed = seed;
  split.fraction = fraction;
  for (auto& [genre, ids] : by_genre) {
    if (ids.size() < 2) {
      throw DegenerateGenre("genre \"" + genre + "\" has " +
                            std::to_string(ids.size()) +
                            " song(s); need at least 2 to split");
    }
    // Sorted before shuffling so the outcome depends only on the id set.
    std::sort(ids.begin(), ids.end());
    std::mt19937_64 rng(mixSeed(seed, genre));
    deterministicShuffle(ids, rng);

    double want = fraction * static_cast<double>(ids.size());
    auto k = static_cast<std::size_t>(std::floor(want + 0.5));
    k = std::clamp<std::size_t>(k, 1, ids.size() - 1);
    for (std::size_t i = 0; i < ids.size(); ++i) {
      (i < k ? split.train_ids : split.test_ids).insert(ids[i]);
    }
  }
  return split;
}

FeatureTable selectRows(const FeatureTable& table,
                        const std::set<std::string>& ids) {
  FeatureTable out;
  for (std::size_t r = 0; r < table.size(); ++r) {
    if (!ids.count(table.ids[r])) continue;
    out.ids.push_back(table.ids[r]);
    out.genres.push_back(table.genres[r]);
    out.rows.push_back(table.rows[r]);
  }
  return out;
}

std::map<std::string, double> imputeMissing(FeatureTable& train,
                                            FeatureTable& test) {
  std::map<std::string, double> medians;
  for (int col = 0; col < kFeatureCount; ++col) {
    bool has_gap = false;
    for (const auto& row : train.rows) has_gap |= std::isnan(row[col]);
    for (const auto& row : test.rows) has_gap |= std::isnan(row[col]);
    bool always = col == static_cast<int>(Feature::kPopularity) ||
                  col == static_cast<int>(Feature::kYear);
    if (!has_gap && !always) continue;

    std::vector<double> present;
    for (const auto& row : train.rows) {
      if (!std::isnan(row[col])) present.push_back(row[col]);
    }
    if (present.empty()) {
      if (!has_gap) continue;  // no train rows at all and nothing to fill
      throw AllMissing("column \"" + std::string(featureNames()[col]) +
                       "\" has no observed train values to impute from");
    }
    double med = medianOf(std::move(present));
    medians.emplace(std::string(featureNames()[col]), med);
    if (has_gap) {
      for (auto& row : train.rows) {
        if (std::isnan(row[col])) row[col] = med;
      }
      for (auto& row : test.rows) {
        if (std::isnan(row[col])) row[col] = med;
      }
    }
  }
  return medians;
}

FeatureTable readFeaturesCsv(const std::filesystem::path& path) {
  CsvTable csv = readCsv(path);
  std::vector<std::string> expected;
  for (auto name : featureNames()) expected.emplace_back(name);
  expected.emplace_back("genre");
  requireHeader(csv.header, expected, "features CSV");

  FeatureTable table;
  for (std::size_t r = 0; r < csv.rows.size(); ++r) {
    const auto& row = csv.rows[r];
    if (row.size() != expected.size()) {
      throw SchemaError("features CSV row " + std::to_string(r + 2) + " has " +
                        std::to_string(row.size()) + " fields, expected " +
                        std::to_string(expected.size()));
    }
    std::array<double, kFeatureCount> values{};
    for (int c = 0; c < kFeatureCount; ++c) {
      values[c] = row[c].empty()
                      ? std::numeric_limits<double>::quiet_NaN()
                      : parseReal(row[c], "features CSV row " +
                                              std::to_string(r + 2));
    }
    table.ids.push_back("row_" + std::to_string(r));
    table.genres.push_back(row[kFeatureCount]);
    table.rows.push_back(values);
  }
  return table;
}

void writeSplitManifest(const SplitIndices& split,
                        const std::vector<std::string>& ordered_ids,
                        const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw CifraError("dataset: cannot write \"" + path.string() + "\"");
  }
  out << "song_id,split\n";
  for (const auto& id : ordered_ids) {
    const char* where = split.train_ids.count(id) ? "train" : "test";
    out << csvEscape(id) << ',' << where << "\n";
  }
}

SplitManifest readSplitManifest(const std::filesystem::path& path) {
  CsvTable csv = readCsv(path);
  requireHeader(csv.header, {"song_id", "split"}, "split manifest");
  SplitManifest manifest;
  for (std::size_t r = 0; r < csv.rows.size(); ++r) {
    const auto& row = csv.rows[r];
    if (row.size() != 2 || (row[1] != "train" && row[1] != "test")) {
      throw SchemaError("split manifest row " + std::to_string(r + 2) +
                        " must be song_id,(train|test)");
    }
    manifest.rows.emplace_back(row[0], row[1] == "train");
  }
  return manifest;
}

SplitIndices resolveManifest(const SplitManifest& manifest,
                             const FeatureTable& table) {
  std::set<std::string> table_ids(table.ids.begin(), table.ids.end());
  bool ids_match = !manifest.rows.empty();
  for (const auto& [id, is_train] : manifest.rows) {
    if (!table_ids.count(id)) {
      ids_match = false;
      break;
    }
  }

  SplitIndices split;
  if (ids_match) {
    for (const auto& [id, is_train] : manifest.rows) {
      (is_train ? split.train_ids : split.test_ids).insert(id);
    }
    return split;
  }
  if (manifest.rows.size() == table.size()) {
    for (std::size_t i = 0; i < table.size(); ++i) {
      (manifest.rows[i].second ? split.train_ids : split.test_ids)
          .insert(table.ids[i]);
    }
    return split;
  }
  throw SchemaError("split manifest ids match neither the table ids nor its "
                    "row count");
}

}  // namespace cifra
