#include "cifra/forest.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <thread>

#include "cifra/errors.hpp"
#include "cifra/rng.hpp"

namespace cifra {

double gini(std::span<const std::uint32_t> counts) {
  std::uint64_t total = 0;
  for (auto c : counts) total += c;
  if (total == 0) throw EmptyNode("gini of zero-total class counts");
  double sum_sq = 0.0;
  for (auto c : counts) {
    double p = static_cast<double>(c) / static_cast<double>(total);
    sum_sq += p * p;
  }
  return 1.0 - sum_sq;
}

namespace {

std::vector<std::uint32_t> classCounts(const TrainData& data,
                                       std::span<const std::uint32_t> rows,
                                       int num_classes) {
  std::vector<std::uint32_t> counts(static_cast<std::size_t>(num_classes), 0);
  for (auto r : rows) ++counts[static_cast<std::size_t>(data.y[r])];
  return counts;
}

bool isPure(std::span<const std::uint32_t> counts, std::uint64_t total) {
  for (auto c : counts) {
    if (c == total) return true;
  }
  return false;
}

// Candidate comparison shared with the brute-force oracle in the tests:
// larger decrease wins, then lower feature index, then smaller threshold.
bool betterCandidate(const SplitCandidate& a, const SplitCandidate& b) {
  if (a.impurity_decrease != b.impurity_decrease) {
    return a.impurity_decrease > b.impurity_decrease;
  }
  if (a.feature_index != b.feature_index) {
    return a.feature_index < b.feature_index;
  }
  return a.threshold < b.threshold;
}

std::unique_ptr<TreeNode> makeLeaf(std::vector<std::uint32_t> counts,
                                   std::uint32_t size) {
  auto leaf = std::make_unique<TreeNode>();
  leaf->node_size = size;
  leaf->class_counts = std::move(counts);
  return leaf;
}

int pluralityClass(std::span<const std::uint32_t> counts) {
  int best = 0;
  for (int c = 1; c < static_cast<int>(counts.size()); ++c) {
    if (counts[static_cast<std::size_t>(c)] >
        counts[static_cast<std::size_t>(best)]) {
      best = c;
    }
  }
  return best;
}

void accumulateImportance(const TreeNode* node, double inv_root_size,
                          std::vector<double>& acc) {
  if (node == nullptr || node->isLeaf()) return;
  acc[static_cast<std::size_t>(node->feature_index)] +=
      static_cast<double>(node->node_size) * inv_root_size *
      node->impurity_decrease;
  accumulateImportance(node->left.get(), inv_root_size, acc);
  accumulateImportance(node->right.get(), inv_root_size, acc);
}

nlohmann::ordered_json nodeToJson(const TreeNode& node) {
  nlohmann::ordered_json j;
  if (node.isLeaf()) {
    j["n"] = node.node_size;
    j["counts"] = node.class_counts;
  } else {
    j["f"] = node.feature_index;
    j["t"] = node.threshold;
    j["d"] = node.impurity_decrease;
    j["n"] = node.node_size;
    j["l"] = nodeToJson(*node.left);
    j["r"] = nodeToJson(*node.right);
  }
  return j;
}

std::unique_ptr<TreeNode> nodeFromJson(const nlohmann::json& j) {
  auto node = std::make_unique<TreeNode>();
  node->node_size = j.at("n").get<std::uint32_t>();
  if (j.contains("f")) {
    node->feature_index = j.at("f").get<int>();
    node->threshold = j.at("t").get<double>();
    node->impurity_decrease = j.at("d").get<double>();
    node->left = nodeFromJson(j.at("l"));
    node->right = nodeFromJson(j.at("r"));
  } else {
    node->class_counts = j.at("counts").get<std::vector<std::uint32_t>>();
  }
  return node;
}

void validateNode(const TreeNode& node, int p, std::size_t num_classes) {
  if (node.isLeaf()) {
    if (node.class_counts.size() != num_classes) {
      throw CifraError("forest: leaf class_counts width mismatch");
    }
    return;
  }
  if (node.feature_index < 0 || node.feature_index >= p) {
    throw CifraError("forest: node references feature index " +
                     std::to_string(node.feature_index) + " outside p=" +
                     std::to_string(p));
  }
  if (node.impurity_decrease < 0.0) {
    throw CifraError("forest: negative impurity decrease in model file");
  }
  validateNode(*node.left, p, num_classes);
  validateNode(*node.right, p, num_classes);
}

}  // namespace

std::optional<SplitCandidate> bestSplit(const TrainData& data,
                                        std::span<const std::uint32_t> rows,
                                        std::span<const int> features,
                                        int num_classes, int min_leaf) {
  const auto n = static_cast<std::uint32_t>(rows.size());
  std::vector<std::uint32_t> total = classCounts(data, rows, num_classes);
  if (isPure(total, n)) return std::nullopt;
  const double parent_gini = gini(total);
  const double n_total = static_cast<double>(n);

  std::optional<SplitCandidate> best;
  std::vector<std::uint32_t> sorted(rows.begin(), rows.end());
  std::vector<std::uint32_t> left(static_cast<std::size_t>(num_classes));
  std::vector<std::uint32_t> right(static_cast<std::size_t>(num_classes));

  for (int f : features) {
    std::sort(sorted.begin(), sorted.end(),
              [&](std::uint32_t a, std::uint32_t b) {
                double va = data.at(a, f);
                double vb = data.at(b, f);
                if (va != vb) return va < vb;
                return a < b;
              });
    std::fill(left.begin(), left.end(), 0u);
    right = total;

    std::uint32_t moved = 0;
    std::size_t i = 0;
    while (i < sorted.size()) {
      // move the whole run of equal values to the left side
      double value = data.at(sorted[i], f);
      while (i < sorted.size() && data.at(sorted[i], f) == value) {
        int cls = data.y[sorted[i]];
        ++left[static_cast<std::size_t>(cls)];
        --right[static_cast<std::size_t>(cls)];
        ++moved;
        ++i;
      }
      if (i == sorted.size()) break;  // no distinct value follows
      std::uint32_t n_left = moved;
      std::uint32_t n_right = n - moved;
      if (n_left < static_cast<std::uint32_t>(min_leaf) ||
          n_right < static_cast<std::uint32_t>(min_leaf)) {
        continue;
      }
      double next = data.at(sorted[i], f);
      double threshold = (value + next) / 2.0;
      if (!(value < threshold && threshold < next)) threshold = value;
      double wl = static_cast<double>(n_left) / n_total;
      double wr = static_cast<double>(n_right) / n_total;
      double decrease = parent_gini - (wl * gini(left) + wr * gini(right));
      SplitCandidate cand{f, threshold, decrease};
      if (decrease > 0.0 && (!best || betterCandidate(cand, *best))) {
        best = cand;
      }
    }
  }
  return best;
}

std::unique_ptr<TreeNode> growTree(const TrainData& data,
                                   std::vector<std::uint32_t> rows, int mtry,
                                   int min_leaf, int num_classes,
                                   std::mt19937_64& rng) {
  auto counts = classCounts(data, rows, num_classes);
  const auto size = static_cast<std::uint32_t>(rows.size());
  if (isPure(counts, size) || rows.size() < 2 * static_cast<std::size_t>(min_leaf)) {
    return makeLeaf(std::move(counts), size);
  }

  std::vector<int> features = sampleWithoutReplacement(rng, data.p, mtry);
  auto split = bestSplit(data, rows, features, num_classes, min_leaf);
  if (!split) return makeLeaf(std::move(counts), size);

  std::vector<std::uint32_t> left_rows;
  std::vector<std::uint32_t> right_rows;
  for (auto r : rows) {
    if (data.at(r, split->feature_index) <= split->threshold) {
      left_rows.push_back(r);
    } else {
      right_rows.push_back(r);
    }
  }

  auto node = std::make_unique<TreeNode>();
  node->feature_index = split->feature_index;
  node->threshold = split->threshold;
  node->impurity_decrease = split->impurity_decrease;
  node->node_size = size;
  node->left = growTree(data, std::move(left_rows), mtry, min_leaf,
                        num_classes, rng);
  node->right = growTree(data, std::move(right_rows), mtry, min_leaf,
                         num_classes, rng);
  return node;
}

Forest trainForest(const TrainData& data, std::vector<std::string> classes,
                   std::vector<std::string> feature_names,
                   const TrainOptions& options) {
  if (data.n == 0 || data.p < 1) {
    throw CifraError("forest: empty training data");
  }
  if (static_cast<int>(feature_names.size()) != data.p) {
    throw DimensionMismatch("feature_names size does not match p");
  }
  if (!std::is_sorted(classes.begin(), classes.end())) {
    throw CifraError("forest: class labels must be sorted");
  }

  Forest forest;
  forest.seed = options.seed;
  forest.min_leaf = options.min_leaf;
  forest.bootstrap = options.bootstrap;
  forest.feature_names = std::move(feature_names);
  forest.classes = std::move(classes);
  forest.n_train = data.n;
  forest.mtry = options.mtry > 0
                    ? std::min(options.mtry, data.p)
                    : std::max(1, static_cast<int>(std::floor(
                                      std::sqrt(static_cast<double>(data.p)))));

  bool single_class = true;
  for (std::size_t i = 1; i < data.n; ++i) {
    if (data.y[i] != data.y[0]) {
      single_class = false;
      break;
    }
  }
  forest.degenerate_input = data.n == 1 || single_class;

  const int num_trees = std::max(1, options.trees);
  const int num_classes = static_cast<int>(forest.classes.size());
  forest.trees.resize(static_cast<std::size_t>(num_trees));
  forest.oob_available = options.bootstrap;
  if (forest.oob_available) {
    forest.oob_rows.resize(static_cast<std::size_t>(num_trees));
  }

  auto buildTree = [&](int k) {
    std::mt19937_64 rng(mixSeed(options.seed, static_cast<std::uint64_t>(k)));
    std::vector<std::uint32_t> rows(data.n);
    if (options.bootstrap) {
      std::vector<bool> in_bag(data.n, false);
      for (std::size_t i = 0; i < data.n; ++i) {
        auto r = static_cast<std::uint32_t>(boundedDraw(rng, data.n));
        rows[i] = r;
        in_bag[r] = true;
      }
      auto& oob = forest.oob_rows[static_cast<std::size_t>(k)];
      for (std::uint32_t r = 0; r < data.n; ++r) {
        if (!in_bag[r]) oob.push_back(r);
      }
    } else {
      for (std::size_t i = 0; i < data.n; ++i) {
        rows[i] = static_cast<std::uint32_t>(i);
      }
    }
    forest.trees[static_cast<std::size_t>(k)] =
        growTree(data, std::move(rows), forest.mtry, forest.min_leaf,
                 num_classes, rng);
  };

  const int threads = std::max(1, options.threads);
  if (threads == 1) {
    for (int k = 0; k < num_trees; ++k) buildTree(k);
  } else {
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(threads));
    for (int t = 0; t < threads; ++t) {
      pool.emplace_back([&] {
        for (int k = next.fetch_add(1); k < num_trees; k = next.fetch_add(1)) {
          buildTree(k);
        }
      });
    }
    for (auto& th : pool) th.join();
  }
  return forest;
}

int Forest::predictIndex(std::span<const double> x) const {
  if (static_cast<int>(x.size()) != featureCount()) {
    throw DimensionMismatch("predict input has " + std::to_string(x.size()) +
                            " features, forest expects " +
                            std::to_string(featureCount()));
  }
  std::vector<std::uint32_t> votes(classes.size(), 0);
  for (const auto& tree : trees) {
    const TreeNode* node = tree.get();
    while (!node->isLeaf()) {
      node = x[static_cast<std::size_t>(node->feature_index)] <= node->threshold
                 ? node->left.get()
                 : node->right.get();
    }
    ++votes[static_cast<std::size_t>(pluralityClass(node->class_counts))];
  }
  return pluralityClass(votes);
}

const std::string& Forest::predict(std::span<const double> x) const {
  return classes[static_cast<std::size_t>(predictIndex(x))];
}

std::vector<double> Forest::importance() const {
  std::vector<double> acc(feature_names.size(), 0.0);
  for (const auto& tree : trees) {
    if (!tree) continue;
    double inv_root = 1.0 / static_cast<double>(tree->node_size);
    accumulateImportance(tree.get(), inv_root, acc);
  }
  double inv_trees = trees.empty() ? 0.0 : 1.0 / static_cast<double>(trees.size());
  for (auto& v : acc) v *= inv_trees;
  return acc;
}

std::vector<std::pair<std::string, double>> Forest::importanceRanking() const {
  std::vector<double> values = importance();
  std::vector<int> order(values.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return values[static_cast<std::size_t>(a)] > values[static_cast<std::size_t>(b)];
  });
  std::vector<std::pair<std::string, double>> out;
  out.reserve(order.size());
  for (int i : order) {
    out.emplace_back(feature_names[static_cast<std::size_t>(i)],
                     values[static_cast<std::size_t>(i)]);
  }
  return out;
}

nlohmann::ordered_json Forest::toJson() const {
  nlohmann::ordered_json j;
  j["format"] = "cifra-forest";
  j["version"] = 1;
  j["seed"] = seed;
  j["params"] = {{"trees", trees.size()},
                 {"mtry", mtry},
                 {"min_leaf", min_leaf},
                 {"bootstrap", bootstrap}};
  j["feature_names"] = feature_names;
  j["classes"] = classes;
  j["imputation_medians"] = imputation_medians;
  j["n_train"] = n_train;
  j["degenerate_input"] = degenerate_input;
  j["oob_available"] = oob_available;
  if (oob_available) j["oob_rows"] = oob_rows;
  nlohmann::ordered_json trees_json = nlohmann::ordered_json::array();
  for (const auto& tree : trees) trees_json.push_back(nodeToJson(*tree));
  j["trees"] = std::move(trees_json);
  return j;
}

Forest Forest::fromJson(const nlohmann::json& j) {
  if (j.value("format", "") != std::string("cifra-forest")) {
    throw CifraError("forest: not a cifra-forest document");
  }
  Forest forest;
  forest.seed = j.at("seed").get<std::uint64_t>();
  forest.mtry = j.at("params").at("mtry").get<int>();
  forest.min_leaf = j.at("params").at("min_leaf").get<int>();
  forest.bootstrap = j.at("params").at("bootstrap").get<bool>();
  forest.feature_names = j.at("feature_names").get<std::vector<std::string>>();
  forest.classes = j.at("classes").get<std::vector<std::string>>();
  forest.imputation_medians =
      j.at("imputation_medians").get<std::map<std::string, double>>();
  forest.n_train = j.at("n_train").get<std::size_t>();
  forest.degenerate_input = j.at("degenerate_input").get<bool>();
  forest.oob_available = j.at("oob_available").get<bool>();
  if (forest.oob_available) {
    forest.oob_rows =
        j.at("oob_rows").get<std::vector<std::vector<std::uint32_t>>>();
  }
  for (const auto& tree : j.at("trees")) {
    forest.trees.push_back(nodeFromJson(tree));
    validateNode(*forest.trees.back(), forest.featureCount(),
                 forest.classes.size());
  }
  return forest;
}

void Forest::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw CifraError("forest: cannot write \"" + path.string() + "\"");
  out << toJson().dump(2) << "\n";
}

Forest Forest::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CifraError("forest: cannot open \"" + path.string() + "\"");
  nlohmann::json j = nlohmann::json::parse(in);
  return fromJson(j);
}

}  // namespace cifra
