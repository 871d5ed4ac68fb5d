#include "cifra/eval.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <unordered_map>

#include "cifra/csv.hpp"
#include "cifra/errors.hpp"
#include "cifra/rng.hpp"

namespace cifra {

namespace {

void requireSameLength(std::span<const std::string> a,
                       std::span<const std::string> b) {
  if (a.size() != b.size()) {
    throw LengthMismatch("prediction and truth vectors differ: " +
                         std::to_string(a.size()) + " vs " +
                         std::to_string(b.size()));
  }
  if (a.empty()) {
    throw LengthMismatch("empty prediction/truth vectors");
  }
}

std::size_t matches(std::span<const std::string> a,
                    std::span<const std::string> b) {
  std::size_t m = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i] == b[i]) ++m;
  }
  return m;
}

std::vector<std::string> observedLabels(std::span<const std::string> a,
                                        std::span<const std::string> b) {
  std::set<std::string> labels(a.begin(), a.end());
  labels.insert(b.begin(), b.end());
  return {labels.begin(), labels.end()};
}

}  // namespace

double accuracy(std::span<const std::string> predictions,
                std::span<const std::string> truths) {
  requireSameLength(predictions, truths);
  return static_cast<double>(matches(predictions, truths)) /
         static_cast<double>(truths.size());
}

double errorRate(std::span<const std::string> predictions,
                 std::span<const std::string> truths) {
  return 1.0 - accuracy(predictions, truths);
}

double nir(std::span<const std::string> truths) {
  if (truths.empty()) throw LengthMismatch("nir of an empty vector");
  std::map<std::string_view, std::size_t> counts;
  for (const auto& t : truths) ++counts[t];
  std::size_t best = 0;
  for (const auto& [label, n] : counts) best = std::max(best, n);
  return static_cast<double>(best) / static_cast<double>(truths.size());
}

double kappaFromRates(double p0, double pe) {
  if (pe >= 1.0) {
    throw DegenerateKappa("expected accuracy is 1; kappa undefined");
  }
  return (p0 - pe) / (1.0 - pe);
}

double kappa(std::span<const std::string> predictions,
             std::span<const std::string> truths, KappaMode mode) {
  requireSameLength(predictions, truths);
  double p0 = accuracy(predictions, truths);
  if (mode == KappaMode::kNir) {
    return kappaFromRates(p0, nir(truths));
  }
  ConfusionMatrix cm =
      confusionMatrix(predictions, truths, observedLabels(predictions, truths));
  const double n = static_cast<double>(truths.size());
  double pe = 0.0;
  for (std::size_t g = 0; g < cm.labels.size(); ++g) {
    std::uint64_t row_sum = 0;
    std::uint64_t col_sum = 0;
    for (std::size_t j = 0; j < cm.labels.size(); ++j) {
      row_sum += cm.counts[g][j];
      col_sum += cm.counts[j][g];
    }
    pe += (static_cast<double>(row_sum) / n) * (static_cast<double>(col_sum) / n);
  }
  return kappaFromRates(p0, pe);
}

double binomialUpperTail(long k, long n, double p) {
  if (k <= 0) return 1.0;
  if (k > n) return 0.0;
  if (p <= 0.0) return 0.0;
  if (p >= 1.0) return 1.0;
  double log_pmf = std::lgamma(static_cast<double>(n) + 1.0) -
                   std::lgamma(static_cast<double>(k) + 1.0) -
                   std::lgamma(static_cast<double>(n - k) + 1.0) +
                   static_cast<double>(k) * std::log(p) +
                   static_cast<double>(n - k) * std::log1p(-p);
  double term = std::exp(log_pmf);
  double sum = 0.0;
  const double odds = p / (1.0 - p);
  for (long i = k; i <= n; ++i) {
    sum += term;
    term *= (static_cast<double>(n - i) / static_cast<double>(i + 1)) * odds;
  }
  return std::min(sum, 1.0);
}

double binomialLowerTail(long k, long n, double p) {
  if (k < 0) return 0.0;
  if (k >= n) return 1.0;
  // P[X <= k] = P[n - X >= n - k] with n - X ~ Binomial(n, 1-p)
  return binomialUpperTail(n - k, n, 1.0 - p);
}

double pvalueVsNir(long correct_count, long n, double nir_rate) {
  if (correct_count < 0 || correct_count > n) {
    throw CifraError("eval: correct_count out of range");
  }
  return binomialUpperTail(correct_count, n, nir_rate);
}

namespace {

// Bisection against a monotone tail function.
double solveTail(long x, long n, double target, bool upper_tail) {
  double lo = 0.0;
  double hi = 1.0;
  for (int iter = 0; iter < 200 && hi - lo > 1e-15; ++iter) {
    double mid = 0.5 * (lo + hi);
    double tail = upper_tail ? binomialUpperTail(x, n, mid)
                             : binomialLowerTail(x, n, mid);
    bool go_right = upper_tail ? tail < target : tail > target;
    if (go_right) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

}  // namespace

BinomialCi exactBinomialCi(long correct_count, long n, double confidence) {
  if (n <= 0 || correct_count < 0 || correct_count > n) {
    throw CifraError("eval: invalid CI arguments");
  }
  const double alpha = 1.0 - confidence;
  BinomialCi ci;
  // lower: P[X >= x; p] = alpha/2, increasing in p
  ci.low = correct_count == 0 ? 0.0
                              : solveTail(correct_count, n, alpha / 2.0, true);
  // upper: P[X <= x; p] = alpha/2, decreasing in p
  ci.high = correct_count == n
                ? 1.0
                : solveTail(correct_count, n, alpha / 2.0, false);
  return ci;
}

ConfusionMatrix confusionMatrix(std::span<const std::string> predictions,
                                std::span<const std::string> truths,
                                const std::vector<std::string>& labels) {
  requireSameLength(predictions, truths);
  std::unordered_map<std::string_view, std::size_t> index;
  for (std::size_t i = 0; i < labels.size(); ++i) index[labels[i]] = i;

  ConfusionMatrix cm;
  cm.labels = labels;
  cm.counts.assign(labels.size(), std::vector<std::uint64_t>(labels.size(), 0));
  for (std::size_t i = 0; i < truths.size(); ++i) {
    auto t = index.find(truths[i]);
    auto p = index.find(predictions[i]);
    if (t == index.end()) {
      throw LengthMismatch("true label \"" + truths[i] + "\" not in label set");
    }
    if (p == index.end()) {
      throw LengthMismatch("predicted label \"" + predictions[i] +
                           "\" not in label set");
    }
    ++cm.counts[t->second][p->second];
  }

  cm.normalized.assign(labels.size(), std::vector<double>(labels.size(), 0.0));
  for (std::size_t r = 0; r < labels.size(); ++r) {
    std::uint64_t row_sum = 0;
    for (auto c : cm.counts[r]) row_sum += c;
    if (row_sum == 0) {
      cm.zero_support.push_back(labels[r]);
      continue;
    }
    for (std::size_t c = 0; c < labels.size(); ++c) {
      cm.normalized[r][c] =
          static_cast<double>(cm.counts[r][c]) / static_cast<double>(row_sum);
    }
  }
  return cm;
}

EvalReport evaluatePredictions(
    int model_id, std::vector<std::string> feature_names,
    std::span<const std::string> predictions,
    std::span<const std::string> truths,
    const std::vector<std::string>& labels,
    std::vector<std::pair<std::string, double>> importance) {
  EvalReport report;
  report.model_id = model_id;
  report.feature_names = std::move(feature_names);
  report.n_test = truths.size();
  report.n_correct = matches(predictions, truths);
  report.accuracy = accuracy(predictions, truths);
  report.error_rate = 1.0 - report.accuracy;
  BinomialCi ci = exactBinomialCi(static_cast<long>(report.n_correct),
                                  static_cast<long>(report.n_test));
  report.ci_low = ci.low;
  report.ci_high = ci.high;
  report.nir = nir(truths);
  report.pvalue_vs_nir =
      pvalueVsNir(static_cast<long>(report.n_correct),
                  static_cast<long>(report.n_test), report.nir);
  report.kappa_marginal = kappa(predictions, truths, KappaMode::kMarginal);
  report.kappa_nir = kappa(predictions, truths, KappaMode::kNir);
  report.confusion = confusionMatrix(predictions, truths, labels);
  report.importance = std::move(importance);
  return report;
}

nlohmann::ordered_json EvalReport::toJson() const {
  nlohmann::ordered_json j;
  j["model_id"] = model_id;
  j["feature_names"] = feature_names;
  j["n_test"] = n_test;
  j["n_correct"] = n_correct;
  j["accuracy"] = accuracy;
  j["error_rate"] = error_rate;
  j["ci_level"] = ci_level;
  j["ci_low"] = ci_low;
  j["ci_high"] = ci_high;
  j["nir"] = nir;
  j["pvalue_vs_nir"] = pvalue_vs_nir;
  j["kappa_marginal"] = kappa_marginal;
  j["kappa_nir"] = kappa_nir;
  j["labels"] = confusion.labels;
  j["confusion_counts"] = confusion.counts;
  j["confusion_normalized"] = confusion.normalized;
  j["zero_support_rows"] = confusion.zero_support;
  nlohmann::ordered_json imp = nlohmann::ordered_json::array();
  for (const auto& [feature, value] : importance) {
    imp.push_back({{"feature", feature}, {"importance", value}});
  }
  j["importance"] = std::move(imp);
  return j;
}

NestedResult runNestedExperiment(const FeatureTable& table,
                                 const SplitIndices& split,
                                 const TrainOptions& options,
                                 const std::vector<std::string>& labels) {
  FeatureTable train = selectRows(table, split.train_ids);
  FeatureTable test = selectRows(table, split.test_ids);
  if (train.size() == 0 || test.size() == 0) {
    throw CifraError("eval: empty train or test split");
  }
  auto medians = imputeMissing(train, test);

  std::unordered_map<std::string_view, int> label_index;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    label_index[labels[i]] = static_cast<int>(i);
  }
  auto encode = [&](const std::string& genre) {
    auto it = label_index.find(genre);
    if (it == label_index.end()) {
      throw SchemaError("genre \"" + genre + "\" not in the label set");
    }
    return it->second;
  };

  NestedResult result;
  for (int model = 0; model < 4; ++model) {
    const int p = kNestedFeatureCounts[static_cast<std::size_t>(model)];

    TrainData data;
    data.n = train.size();
    data.p = p;
    data.x.reserve(data.n * static_cast<std::size_t>(p));
    data.y.reserve(data.n);
    for (std::size_t r = 0; r < train.size(); ++r) {
      for (int c = 0; c < p; ++c) data.x.push_back(train.rows[r][c]);
      data.y.push_back(encode(train.genres[r]));
    }

    std::vector<std::string> names;
    names.reserve(static_cast<std::size_t>(p));
    for (int c = 0; c < p; ++c) names.emplace_back(featureNames()[c]);

    TrainOptions model_options = options;
    model_options.seed =
        mixSeed(options.seed, "model" + std::to_string(model + 1));
    if (model_options.mtry > 0) {
      model_options.mtry = std::min(model_options.mtry, p);
    }

    Forest forest = trainForest(data, labels, names, model_options);
    for (const auto& [name, median] : medians) {
      for (int c = 0; c < p; ++c) {
        if (featureNames()[c] == name) forest.imputation_medians[name] = median;
      }
    }

    std::vector<std::string> predictions;
    predictions.reserve(test.size());
    for (std::size_t r = 0; r < test.size(); ++r) {
      std::span<const double> x(test.rows[r].data(), static_cast<std::size_t>(p));
      predictions.push_back(forest.predict(x));
    }

    result.reports.push_back(evaluatePredictions(
        model + 1, names, predictions, test.genres, labels,
        forest.importanceRanking()));
    result.forests.push_back(std::move(forest));
  }
  return result;
}

std::vector<DiversityRow> yearlyDiversity(std::span<const SongRecord> songs,
                                          std::size_t* excluded) {
  if (excluded) *excluded = 0;
  std::map<std::pair<std::string, int>, std::pair<std::uint64_t, std::uint64_t>>
      acc;  // (genre, year) -> (distinct-count sum, song count)
  for (const auto& song : songs) {
    if (!song.year) {
      if (excluded) ++*excluded;
      continue;
    }
    std::set<std::string_view> distinct(song.chords.begin(), song.chords.end());
    auto& slot = acc[{song.genre, *song.year}];
    slot.first += distinct.size();
    slot.second += 1;
  }
  std::vector<DiversityRow> rows;
  rows.reserve(acc.size());
  for (const auto& [key, sums] : acc) {
    rows.push_back({key.first, key.second,
                    static_cast<double>(sums.first) /
                        static_cast<double>(sums.second)});
  }
  return rows;
}

void writeConfusionCsv(const ConfusionMatrix& confusion,
                       const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw CifraError("eval: cannot write \"" + path.string() + "\"");
  std::vector<std::string> header{"true_genre"};
  header.insert(header.end(), confusion.labels.begin(), confusion.labels.end());
  out << csvJoin(header) << "\n";
  for (std::size_t r = 0; r < confusion.labels.size(); ++r) {
    std::vector<std::string> fields{confusion.labels[r]};
    for (double v : confusion.normalized[r]) fields.push_back(formatFixed2(v));
    out << csvJoin(fields) << "\n";
  }
}

void writeImportanceCsv(
    const std::vector<std::pair<std::string, double>>& importance,
    const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw CifraError("eval: cannot write \"" + path.string() + "\"");
  out << "feature,importance\n";
  for (const auto& [feature, value] : importance) {
    out << csvEscape(feature) << ',' << formatDouble(value) << "\n";
  }
}

void writeDiversityCsv(const std::vector<DiversityRow>& rows,
                       const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw CifraError("eval: cannot write \"" + path.string() + "\"");
  out << "genre,year,mean_distinct_chords\n";
  for (const auto& row : rows) {
    out << csvEscape(row.genre) << ',' << row.year << ','
        << formatDouble(row.mean_distinct_chords) << "\n";
  }
}

}  // namespace cifra
