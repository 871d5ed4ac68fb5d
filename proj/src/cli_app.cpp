#include "cifra/cli_app.hpp"

#include <algorithm>
#include <fstream>
#include <ostream>
#include <set>

#include <CLI11.hpp>

#include "cifra/csv.hpp"
#include "cifra/dataset.hpp"
#include "cifra/errors.hpp"
#include "cifra/eval.hpp"
#include "cifra/features.hpp"
#include "cifra/forest.hpp"
#include "cifra/rng.hpp"

namespace cifra::cli {

namespace {

namespace fs = std::filesystem;

std::vector<SongRecord> loadCorpus(const RunConfig& cfg, std::ostream& out) {
  std::vector<SongRecord> songs = loadChordsCsv(cfg.chords_csv);
  if (!cfg.metadata_csv.empty()) {
    JoinStats stats = joinMetadata(songs, cfg.metadata_csv);
    out << "metadata join: " << stats.matched << "/" << stats.total
        << " songs matched\n";
  }
  return songs;
}

std::vector<std::string> resolveLabels(const RunConfig& cfg,
                                       const FeatureTable& table) {
  if (!cfg.genres.empty()) {
    std::set<std::string> allowed(cfg.genres.begin(), cfg.genres.end());
    for (const auto& genre : table.genres) {
      if (!allowed.count(genre)) {
        throw SchemaError("genre \"" + genre +
                          "\" not in the configured label set");
      }
    }
    return {allowed.begin(), allowed.end()};
  }
  std::set<std::string> observed(table.genres.begin(), table.genres.end());
  return {observed.begin(), observed.end()};
}

void logHygiene(const HygieneCounters& hygiene, std::ostream& out) {
  out << "malformed tokens skipped: " << hygiene.malformed_tokens << "\n";
  out << "tokens with ignored trailing symbols: " << hygiene.ignored_suffixes
      << "\n";
  if (hygiene.empty_songs > 0) {
    out << "songs excluded (no parseable chords): " << hygiene.empty_songs
        << "\n";
  }
  if (hygiene.bad_keys > 0) {
    out << "unparseable song keys treated as non-matching: "
        << hygiene.bad_keys << "\n";
  }
}

void writeJson(const nlohmann::ordered_json& j, const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw CifraError("cli: cannot write \"" + path.string() + "\"");
  out << j.dump(2) << "\n";
}

int cmdParse(const RunConfig& cfg, std::ostream& out) {
  std::vector<SongRecord> songs = loadChordsCsv(cfg.chords_csv);
  std::ofstream file(cfg.out, std::ios::binary);
  if (!file) throw CifraError("cli: cannot write \"" + cfg.out + "\"");

  std::vector<std::string> header{"song_id", "chord", "root_pc", "bass_pc"};
  for (auto name : indicatorNames()) header.emplace_back(name);
  file << csvJoin(header) << "\n";

  HygieneCounters hygiene;
  std::string ignored;
  for (const auto& song : songs) {
    for (const auto& token : song.chords) {
      ParsedChord chord;
      try {
        chord = parseChord(token, cfg.strict, &ignored);
      } catch (const MalformedChord&) {
        if (cfg.strict) throw;
        ++hygiene.malformed_tokens;
        continue;
      }
      if (!ignored.empty()) ++hygiene.ignored_suffixes;
      std::vector<std::string> fields{
          song.song_id, token, std::to_string(chord.root.index),
          chord.bass ? std::to_string(chord.bass->index) : ""};
      for (bool flag : indicatorRow(chord)) fields.push_back(flag ? "1" : "0");
      file << csvJoin(fields) << "\n";
    }
  }
  logHygiene(hygiene, out);
  return 0;
}

int cmdFeaturize(const RunConfig& cfg, std::ostream& out) {
  std::vector<SongRecord> songs = loadCorpus(cfg, out);
  HygieneCounters hygiene;
  FeatureTable table = featurizeCorpus(songs, cfg.strict, &hygiene);
  writeFeaturesCsv(table, cfg.out);
  logHygiene(hygiene, out);
  out << "featurized " << table.size() << " songs\n";
  return 0;
}

int cmdSplit(const RunConfig& cfg, std::ostream& out) {
  FeatureTable table = readFeaturesCsv(cfg.features_csv);
  SplitIndices split = stratifiedSplit(table, cfg.fraction,
                                       mixSeed(cfg.seed, "split"));
  writeSplitManifest(split, table.ids, cfg.out);
  out << "split " << split.train_ids.size() << " train / "
      << split.test_ids.size() << " test\n";
  return 0;
}

int cmdTrain(const RunConfig& cfg, std::ostream& out) {
  FeatureTable table = readFeaturesCsv(cfg.features_csv);
  std::vector<std::string> labels = resolveLabels(cfg, table);

  FeatureTable train = table;
  FeatureTable test;
  if (!cfg.manifest_csv.empty()) {
    SplitIndices split = resolveManifest(readSplitManifest(cfg.manifest_csv),
                                         table);
    train = selectRows(table, split.train_ids);
    test = selectRows(table, split.test_ids);
  }
  auto medians = imputeMissing(train, test);

  std::set<std::string> label_set(labels.begin(), labels.end());
  std::unordered_map<std::string, int> index;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    index[labels[i]] = static_cast<int>(i);
  }

  TrainData data;
  data.n = train.size();
  data.p = kFeatureCount;
  data.x.reserve(data.n * kFeatureCount);
  for (std::size_t r = 0; r < train.size(); ++r) {
    for (double v : train.rows[r]) data.x.push_back(v);
    data.y.push_back(index.at(train.genres[r]));
  }
  std::vector<std::string> names;
  for (auto name : featureNames()) names.emplace_back(name);

  TrainOptions options;
  options.trees = cfg.trees;
  options.mtry = cfg.mtry;
  options.min_leaf = cfg.min_leaf;
  options.seed = cfg.seed;
  options.threads = cfg.threads;

  Forest forest = trainForest(data, labels, names, options);
  forest.imputation_medians = medians;
  forest.save(cfg.out);
  out << "trained " << forest.trees.size() << " trees on " << data.n
      << " songs (mtry " << forest.mtry << ")\n";
  return 0;
}

int cmdEvaluate(const RunConfig& cfg, std::ostream& out) {
  Forest forest = Forest::load(cfg.model_file);
  FeatureTable table = readFeaturesCsv(cfg.features_csv);
  FeatureTable rows = table;
  if (!cfg.manifest_csv.empty()) {
    SplitIndices split = resolveManifest(readSplitManifest(cfg.manifest_csv),
                                         table);
    rows = selectRows(table, split.test_ids);
  }
  if (rows.size() == 0) throw CifraError("cli: no rows to evaluate");

  // Fill missing values from the medians stored in the model.
  const int p = forest.featureCount();
  if (p > kFeatureCount) {
    throw DimensionMismatch("model expects more features than the table has");
  }
  for (auto& row : rows.rows) {
    for (int c = 0; c < p; ++c) {
      if (!std::isnan(row[c])) continue;
      auto it = forest.imputation_medians.find(
          std::string(featureNames()[c]));
      if (it == forest.imputation_medians.end()) {
        throw AllMissing("missing value in column \"" +
                         std::string(featureNames()[c]) +
                         "\" and the model stores no median for it");
      }
      row[c] = it->second;
    }
  }

  std::vector<std::string> predictions;
  predictions.reserve(rows.size());
  for (const auto& row : rows.rows) {
    predictions.push_back(
        forest.predict(std::span<const double>(row.data(),
                                               static_cast<std::size_t>(p))));
  }
  EvalReport report =
      evaluatePredictions(0, forest.feature_names, predictions, rows.genres,
                          forest.classes, forest.importanceRanking());

  fs::path out_dir(cfg.out);
  fs::create_directories(out_dir);
  writeJson(report.toJson(), out_dir / "report.json");
  writeConfusionCsv(report.confusion, out_dir / "confusion.csv");
  writeImportanceCsv(report.importance, out_dir / "importance.csv");
  out << "accuracy " << formatDouble(report.accuracy) << " on "
      << report.n_test << " songs (nir " << formatDouble(report.nir) << ")\n";
  return 0;
}

int cmdExperiment(const RunConfig& cfg, std::ostream& out) {
  std::vector<SongRecord> songs = loadCorpus(cfg, out);
  HygieneCounters hygiene;
  FeatureTable table = featurizeCorpus(songs, cfg.strict, &hygiene);
  if (table.size() == 0) throw CifraError("cli: no featurizable songs");
  std::vector<std::string> labels = resolveLabels(cfg, table);

  fs::path out_dir(cfg.out);
  fs::create_directories(out_dir);

  SplitIndices split = stratifiedSplit(table, cfg.fraction,
                                       mixSeed(cfg.seed, "split"));
  writeFeaturesCsv(table, out_dir / "features.csv");
  writeSplitManifest(split, table.ids, out_dir / "split_manifest.csv");

  TrainOptions options;
  options.trees = cfg.trees;
  options.mtry = cfg.mtry;
  options.min_leaf = cfg.min_leaf;
  options.seed = cfg.seed;
  options.threads = cfg.threads;

  NestedResult nested = runNestedExperiment(table, split, options, labels);
  for (std::size_t i = 0; i < nested.reports.size(); ++i) {
    std::string suffix = std::to_string(i + 1);
    nested.forests[i].save(out_dir / ("model_" + suffix + ".json"));
    writeJson(nested.reports[i].toJson(),
              out_dir / ("report_" + suffix + ".json"));
    writeConfusionCsv(nested.reports[i].confusion,
                      out_dir / ("confusion_" + suffix + ".csv"));
    writeImportanceCsv(nested.reports[i].importance,
                       out_dir / ("importance_" + suffix + ".csv"));
  }

  std::size_t no_year = 0;
  auto diversity = yearlyDiversity(songs, &no_year);
  writeDiversityCsv(diversity, out_dir / "diversity.csv");

  logHygiene(hygiene, out);
  if (no_year > 0) {
    out << "songs without year excluded from diversity report: " << no_year
        << "\n";
  }
  for (const auto& report : nested.reports) {
    out << "model " << report.model_id << " ("
        << report.feature_names.size() << " features): accuracy "
        << formatDouble(report.accuracy) << " [" << formatDouble(report.ci_low)
        << ", " << formatDouble(report.ci_high) << "], kappa "
        << formatDouble(report.kappa_marginal) << ", p-value vs nir "
        << formatDouble(report.pvalue_vs_nir) << "\n";
  }
  return 0;
}

int cmdReportDiversity(const RunConfig& cfg, std::ostream& out) {
  std::vector<SongRecord> songs = loadCorpus(cfg, out);
  std::size_t no_year = 0;
  auto diversity = yearlyDiversity(songs, &no_year);
  writeDiversityCsv(diversity, cfg.out);
  out << "diversity rows: " << diversity.size()
      << " (songs without year: " << no_year << ")\n";
  return 0;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out,
        std::ostream& err) {
  CLI::App app{"Cifra chord corpus analysis and genre classification"};
  app.require_subcommand(1);

  RunConfig cfg;

  auto addSeed = [&](CLI::App* cmd) {
    cmd->add_option("--seed", cfg.seed, "Top-level RNG seed");
  };
  auto addForestFlags = [&](CLI::App* cmd) {
    cmd->add_option("--trees", cfg.trees, "Number of trees");
    cmd->add_option("--mtry", cfg.mtry,
                    "Features per split (0 = floor(sqrt(p)))");
    cmd->add_option("--min-leaf", cfg.min_leaf, "Minimum rows per leaf");
    cmd->add_option("--threads", cfg.threads, "Worker threads");
  };
  auto addGenres = [&](CLI::App* cmd) {
    cmd->add_option("--genres", cfg.genres,
                    "Restrict the genre label set (default: observed)");
  };

  CLI::App* parse_cmd =
      app.add_subcommand("parse", "Parse chords and write per-chord flags");
  parse_cmd->add_option("chords_csv", cfg.chords_csv)->required();
  parse_cmd->add_option("--out", cfg.out, "Output CSV")->required();
  parse_cmd->add_flag("--strict", cfg.strict, "Abort on malformed tokens");

  CLI::App* feat_cmd =
      app.add_subcommand("featurize", "Write the 23-feature table");
  feat_cmd->add_option("chords_csv", cfg.chords_csv)->required();
  feat_cmd->add_option("--metadata", cfg.metadata_csv, "Metadata CSV");
  feat_cmd->add_option("--out", cfg.out, "Output CSV")->required();
  feat_cmd->add_flag("--strict", cfg.strict, "Abort on malformed tokens");

  CLI::App* split_cmd =
      app.add_subcommand("split", "Genre-stratified train/test manifest");
  split_cmd->add_option("features_csv", cfg.features_csv)->required();
  split_cmd->add_option("--fraction", cfg.fraction, "Train fraction");
  split_cmd->add_option("--out", cfg.out, "Manifest CSV")->required();
  addSeed(split_cmd);

  CLI::App* train_cmd = app.add_subcommand("train", "Train one forest");
  train_cmd->add_option("features_csv", cfg.features_csv)->required();
  train_cmd->add_option("--manifest", cfg.manifest_csv,
                        "Train on the manifest's train rows");
  train_cmd->add_option("--out", cfg.out, "Model JSON")->required();
  addSeed(train_cmd);
  addForestFlags(train_cmd);
  addGenres(train_cmd);

  CLI::App* eval_cmd =
      app.add_subcommand("evaluate", "Evaluate a saved model");
  eval_cmd->add_option("model", cfg.model_file)->required();
  eval_cmd->add_option("features_csv", cfg.features_csv)->required();
  eval_cmd->add_option("--manifest", cfg.manifest_csv,
                       "Evaluate on the manifest's test rows");
  eval_cmd->add_option("--out", cfg.out, "Report directory")->required();

  CLI::App* exp_cmd = app.add_subcommand(
      "experiment", "Full nested four-model protocol, end to end");
  exp_cmd->add_option("chords_csv", cfg.chords_csv)->required();
  exp_cmd->add_option("--metadata", cfg.metadata_csv, "Metadata CSV");
  exp_cmd->add_option("--out", cfg.out, "Output directory")->required();
  exp_cmd->add_option("--fraction", cfg.fraction, "Train fraction");
  exp_cmd->add_flag("--strict", cfg.strict, "Abort on malformed tokens");
  addSeed(exp_cmd);
  addForestFlags(exp_cmd);
  addGenres(exp_cmd);

  CLI::App* div_cmd = app.add_subcommand(
      "report-diversity", "Mean distinct chords per (genre, year)");
  div_cmd->add_option("chords_csv", cfg.chords_csv)->required();
  div_cmd->add_option("--metadata", cfg.metadata_csv, "Metadata CSV");
  div_cmd->add_option("--out", cfg.out, "Output CSV")->required();

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(std::move(reversed));
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err);
  }

  try {
    if (cfg.fraction <= 0.0 || cfg.fraction >= 1.0) {
      throw CifraError("cli: --fraction must be in (0, 1)");
    }
    if (cfg.trees < 1 || cfg.mtry < 0 || cfg.min_leaf < 1 ||
        cfg.threads < 1) {
      throw CifraError("cli: --trees/--min-leaf/--threads must be positive");
    }
    if (parse_cmd->parsed()) return cmdParse(cfg, out);
    if (feat_cmd->parsed()) return cmdFeaturize(cfg, out);
    if (split_cmd->parsed()) return cmdSplit(cfg, out);
    if (train_cmd->parsed()) return cmdTrain(cfg, out);
    if (eval_cmd->parsed()) return cmdEvaluate(cfg, out);
    if (exp_cmd->parsed()) return cmdExperiment(cfg, out);
    if (div_cmd->parsed()) return cmdReportDiversity(cfg, out);
    err << "error: no subcommand\n";
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace cifra::cli
