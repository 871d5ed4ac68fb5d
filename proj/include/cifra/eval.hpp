#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "cifra/dataset.hpp"
#include "cifra/features.hpp"
#include "cifra/forest.hpp"
#include "cifra/song.hpp"

namespace cifra {

// Proportion of equal positions. Throws LengthMismatch.
double accuracy(std::span<const std::string> predictions,
                std::span<const std::string> truths);

// Exact complement of accuracy.
double errorRate(std::span<const std::string> predictions,
                 std::span<const std::string> truths);

// No-information rate: proportion of the most frequent label.
double nir(std::span<const std::string> truths);

enum class KappaMode { kMarginal, kNir };

// (p0 - pe) / (1 - pe). Throws DegenerateKappa when pe == 1.
double kappaFromRates(double p0, double pe);

// mode kMarginal: pe is Cohen's chance agreement from the confusion
// marginals; mode kNir: pe = nir(truths).
double kappa(std::span<const std::string> predictions,
             std::span<const std::string> truths, KappaMode mode);

// P[X >= k] for X ~ Binomial(n, p).
double binomialUpperTail(long k, long n, double p);
// P[X <= k].
double binomialLowerTail(long k, long n, double p);

// One-sided exact binomial test of accuracy against the NIR.
double pvalueVsNir(long correct_count, long n, double nir_rate);

struct BinomialCi {
  double low = 0.0;
  double high = 1.0;
};

// Exact (Clopper-Pearson) two-sided interval for a binomial proportion.
BinomialCi exactBinomialCi(long correct_count, long n,
                           double confidence = 0.95);

struct ConfusionMatrix {
  std::vector<std::string> labels;
  std::vector<std::vector<std::uint64_t>> counts;  // [true][predicted]
  std::vector<std::vector<double>> normalized;     // rows sum to 1; zero-support rows all zero
  std::vector<std::string> zero_support;           // labels with no true rows
};

// Rows are true labels, columns predicted; rows normalized by row sum so
// the diagonal is per-class recall. Labels outside `labels` throw
// LengthMismatch naming the stray label.
ConfusionMatrix confusionMatrix(std::span<const std::string> predictions,
                                std::span<const std::string> truths,
                                const std::vector<std::string>& labels);

struct EvalReport {
  int model_id = 0;
  std::vector<std::string> feature_names;
  std::size_t n_test = 0;
  std::size_t n_correct = 0;
  double accuracy = 0.0;
  double error_rate = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  double ci_level = 0.95;
  double nir = 0.0;
  double pvalue_vs_nir = 1.0;
  double kappa_marginal = 0.0;
  double kappa_nir = 0.0;
  ConfusionMatrix confusion;
  std::vector<std::pair<std::string, double>> importance;

  nlohmann::ordered_json toJson() const;
};

EvalReport evaluatePredictions(int model_id,
                               std::vector<std::string> feature_names,
                               std::span<const std::string> predictions,
                               std::span<const std::string> truths,
                               const std::vector<std::string>& labels,
                               std::vector<std::pair<std::string, double>>
                                   importance);

// Feature counts of the four nested models: prefixes of the canonical
// feature order, one thematic group added at a time.
inline constexpr std::array<int, 4> kNestedFeatureCounts = {6, 12, 15, 23};

struct NestedResult {
  std::vector<Forest> forests;
  std::vector<EvalReport> reports;
};

// The four-model protocol: one split, train-median imputation, then one
// forest per feature prefix (6/12/15/23 columns), each trained with a
// substream seed derived from (options.seed, model index). Labels fix
// the class order for every model.
NestedResult runNestedExperiment(const FeatureTable& table,
                                 const SplitIndices& split,
                                 const TrainOptions& options,
                                 const std::vector<std::string>& labels);

struct DiversityRow {
  std::string genre;
  int year = 0;
  double mean_distinct_chords = 0.0;
};

// Mean count of distinct chord tokens per song, by (genre, year). Songs
// without a year are excluded and counted in *excluded.
std::vector<DiversityRow> yearlyDiversity(std::span<const SongRecord> songs,
                                          std::size_t* excluded = nullptr);

void writeConfusionCsv(const ConfusionMatrix& confusion,
                       const std::filesystem::path& path);
void writeImportanceCsv(
    const std::vector<std::pair<std::string, double>>& importance,
    const std::filesystem::path& path);
void writeDiversityCsv(const std::vector<DiversityRow>& rows,
                       const std::filesystem::path& path);

}  // namespace cifra
