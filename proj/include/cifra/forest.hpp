#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

namespace cifra {

// Gini impurity 1 - sum(p_c^2) over observed class proportions.
// Throws EmptyNode on a zero total.
double gini(std::span<const std::uint32_t> counts);

// A binary threshold node. Routes x left iff x[feature_index] <= threshold.
// Leaves have no children and carry the class counts of the rows that
// reached them.
struct TreeNode {
  int feature_index = -1;
  double threshold = 0.0;
  double impurity_decrease = 0.0;
  std::uint32_t node_size = 0;
  std::vector<std::uint32_t> class_counts;
  std::unique_ptr<TreeNode> left;
  std::unique_ptr<TreeNode> right;

  bool isLeaf() const { return left == nullptr; }
};

// Dense row-major training matrix with integer-encoded labels.
struct TrainData {
  std::size_t n = 0;
  int p = 0;
  std::vector<double> x;
  std::vector<int> y;

  double at(std::size_t row, int col) const {
    return x[row * static_cast<std::size_t>(p) + static_cast<std::size_t>(col)];
  }
};

struct SplitCandidate {
  int feature_index = -1;
  double threshold = 0.0;
  double impurity_decrease = 0.0;
};

// Exhausts midpoints between consecutive distinct sorted values of each
// candidate feature and returns the split maximizing
//   dImp = gini(parent) - (n1/n * gini(left) + n2/n * gini(right)),
// or nullopt when no split is positive or respects min_leaf. Ties break
// to the lower feature index, then the smaller threshold.
std::optional<SplitCandidate> bestSplit(const TrainData& data,
                                        std::span<const std::uint32_t> rows,
                                        std::span<const int> features,
                                        int num_classes, int min_leaf);

struct TrainOptions {
  int trees = 500;
  int mtry = 0;  // 0: floor(sqrt(p))
  int min_leaf = 1;
  std::uint64_t seed = 42;
  bool bootstrap = true;  // test hook; the protocol always bootstraps
  int threads = 1;
};

// Recursive partitioning over `rows`: at each node draws `mtry` features
// without replacement from `rng`, asks bestSplit, and stops on purity,
// fewer than 2*min_leaf rows, or no positive split. No pruning.
std::unique_ptr<TreeNode> growTree(const TrainData& data,
                                   std::vector<std::uint32_t> rows, int mtry,
                                   int min_leaf, int num_classes,
                                   std::mt19937_64& rng);

// Bagged ensemble. Tree k's randomness comes from a substream derived
// from (seed, k), so results do not depend on the worker thread count.
struct Forest {
  std::vector<std::unique_ptr<TreeNode>> trees;
  int mtry = 0;
  int min_leaf = 1;
  bool bootstrap = true;
  std::uint64_t seed = 0;
  std::vector<std::string> feature_names;
  std::vector<std::string> classes;  // alphabetical; fixes vote tie-breaks
  std::map<std::string, double> imputation_medians;
  std::size_t n_train = 0;
  bool degenerate_input = false;
  bool oob_available = false;
  std::vector<std::vector<std::uint32_t>> oob_rows;  // per tree, sorted

  int featureCount() const { return static_cast<int>(feature_names.size()); }

  // Majority vote over the trees; each tree votes its leaf's plurality
  // class. All ties break to the lowest class index. Throws
  // DimensionMismatch when x has the wrong width.
  int predictIndex(std::span<const double> x) const;
  const std::string& predict(std::span<const double> x) const;

  // Mean over trees of sum (node_size/n) * dImp per feature.
  std::vector<double> importance() const;
  // The same, named and sorted descending (ties keep feature order).
  std::vector<std::pair<std::string, double>> importanceRanking() const;

  nlohmann::ordered_json toJson() const;
  static Forest fromJson(const nlohmann::json& j);
  void save(const std::filesystem::path& path) const;
  static Forest load(const std::filesystem::path& path);
};

Forest trainForest(const TrainData& data, std::vector<std::string> classes,
                   std::vector<std::string> feature_names,
                   const TrainOptions& options);

}  // namespace cifra
