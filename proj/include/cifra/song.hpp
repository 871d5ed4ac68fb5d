#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace cifra {

// One song in the corpus: ordered chord tokens plus joined metadata.
// popularity and year stay empty until joinMetadata finds them.
struct SongRecord {
  std::string song_id;
  std::string artist;
  std::string genre;
  std::string key;
  std::vector<std::string> chords;
  std::optional<double> popularity;
  std::optional<int> year;
};

// Counters for corpus noise observed while parsing and featurizing.
struct HygieneCounters {
  std::uint64_t malformed_tokens = 0;
  std::uint64_t ignored_suffixes = 0;
  std::uint64_t empty_songs = 0;
  std::uint64_t bad_keys = 0;
};

}  // namespace cifra
