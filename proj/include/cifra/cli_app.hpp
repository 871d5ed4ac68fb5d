#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace cifra::cli {

// Everything a run needs; one seed feeds every derived substream.
struct RunConfig {
  std::string chords_csv;
  std::string metadata_csv;
  std::string features_csv;
  std::string model_file;
  std::string manifest_csv;
  std::string out;
  std::uint64_t seed = 42;
  int trees = 500;
  int mtry = 0;  // 0: floor(sqrt(p))
  int min_leaf = 1;
  double fraction = 0.7;
  bool strict = false;
  int threads = 1;
  std::vector<std::string> genres;
};

// Runs one CLI invocation (args exclude the program name). Returns the
// process exit code; all failures print a module-tagged message to err.
int run(const std::vector<std::string>& args, std::ostream& out,
        std::ostream& err);

}  // namespace cifra::cli
