#include <doctest.h>

#include <cmath>
#include <map>
#include <random>
#include <set>

#include "cifra/errors.hpp"
#include "cifra/forest.hpp"
#include "cifra/rng.hpp"

using namespace cifra;

namespace {

TrainData makeData(const std::vector<std::vector<double>>& x,
                   const std::vector<int>& y) {
  TrainData data;
  data.n = x.size();
  data.p = static_cast<int>(x[0].size());
  for (const auto& row : x) {
    for (double v : row) data.x.push_back(v);
  }
  data.y = y;
  return data;
}

std::vector<std::uint32_t> allRows(const TrainData& data) {
  std::vector<std::uint32_t> rows(data.n);
  for (std::size_t i = 0; i < data.n; ++i) {
    rows[i] = static_cast<std::uint32_t>(i);
  }
  return rows;
}

// Independent brute-force oracle: enumerates every (feature, midpoint)
// pair and recounts both sides from scratch.
std::optional<SplitCandidate> bruteForceSplit(const TrainData& data,
                                              const std::vector<std::uint32_t>& rows,
                                              const std::vector<int>& features,
                                              int num_classes, int min_leaf) {
  auto giniOf = [](const std::vector<std::uint32_t>& counts) {
    std::uint64_t total = 0;
    for (auto c : counts) total += c;
    double sum_sq = 0.0;
    for (auto c : counts) {
      double p = static_cast<double>(c) / static_cast<double>(total);
      sum_sq += p * p;
    }
    return 1.0 - sum_sq;
  };

  std::vector<std::uint32_t> parent(static_cast<std::size_t>(num_classes), 0);
  for (auto r : rows) ++parent[static_cast<std::size_t>(data.y[r])];
  const double parent_gini = giniOf(parent);
  const double n_total = static_cast<double>(rows.size());

  std::optional<SplitCandidate> best;
  for (int f : features) {
    std::set<double> values;
    for (auto r : rows) values.insert(data.at(r, f));
    std::vector<double> sorted(values.begin(), values.end());
    for (std::size_t i = 0; i + 1 < sorted.size(); ++i) {
      double threshold = (sorted[i] + sorted[i + 1]) / 2.0;
      if (!(sorted[i] < threshold && threshold < sorted[i + 1])) {
        threshold = sorted[i];
      }
      std::vector<std::uint32_t> left(static_cast<std::size_t>(num_classes), 0);
      std::vector<std::uint32_t> right(static_cast<std::size_t>(num_classes), 0);
      std::uint32_t n_left = 0;
      for (auto r : rows) {
        if (data.at(r, f) <= threshold) {
          ++left[static_cast<std::size_t>(data.y[r])];
          ++n_left;
        } else {
          ++right[static_cast<std::size_t>(data.y[r])];
        }
      }
      std::uint32_t n_right = static_cast<std::uint32_t>(rows.size()) - n_left;
      if (n_left < static_cast<std::uint32_t>(min_leaf) ||
          n_right < static_cast<std::uint32_t>(min_leaf)) {
        continue;
      }
      double wl = static_cast<double>(n_left) / n_total;
      double wr = static_cast<double>(n_right) / n_total;
      double decrease = parent_gini - (wl * giniOf(left) + wr * giniOf(right));
      if (decrease <= 0.0) continue;
      bool better = false;
      if (!best) {
        better = true;
      } else if (decrease != best->impurity_decrease) {
        better = decrease > best->impurity_decrease;
      } else if (f != best->feature_index) {
        better = f < best->feature_index;
      } else {
        better = threshold < best->threshold;
      }
      if (better) best = SplitCandidate{f, threshold, decrease};
    }
  }
  return best;
}

}  // namespace

TEST_CASE("gini") {
  CHECK(gini(std::vector<std::uint32_t>{10, 0}) == 0.0);
  CHECK(gini(std::vector<std::uint32_t>{5, 5}) == 0.5);
  CHECK(gini(std::vector<std::uint32_t>{1, 1, 1, 1}) == 0.75);
  CHECK_THROWS_AS(gini(std::vector<std::uint32_t>{0, 0}), EmptyNode);

  // bounds: 0 iff pure, at most 1 - 1/r
  std::mt19937_64 rng(1);
  for (int rep = 0; rep < 500; ++rep) {
    int r = 2 + static_cast<int>(boundedDraw(rng, 5));
    std::vector<std::uint32_t> counts;
    std::uint32_t nonzero = 0;
    for (int c = 0; c < r; ++c) {
      auto v = static_cast<std::uint32_t>(boundedDraw(rng, 20));
      counts.push_back(v);
      if (v > 0) ++nonzero;
    }
    if (nonzero == 0) counts[0] = 1, nonzero = 1;
    double g = gini(counts);
    CHECK(g >= 0.0);
    CHECK(g <= 1.0 - 1.0 / static_cast<double>(r) + 1e-12);
    CHECK((g == 0.0) == (nonzero == 1));
  }
}

TEST_CASE("bestSplit on the 4-row example") {
  TrainData data = makeData({{0}, {1}, {10}, {11}}, {0, 0, 1, 1});
  auto split = bestSplit(data, allRows(data), std::vector<int>{0}, 2, 1);
  REQUIRE(split.has_value());
  CHECK(split->feature_index == 0);
  CHECK(split->threshold == 5.5);
  CHECK(split->impurity_decrease == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("bestSplit degenerate cases") {
  // one class only: nothing to gain
  TrainData pure = makeData({{0}, {1}, {2}}, {0, 0, 0});
  CHECK(!bestSplit(pure, allRows(pure), std::vector<int>{0}, 2, 1));

  // constant feature with mixed classes: no candidate threshold
  TrainData constant = makeData({{3}, {3}, {3}}, {0, 1, 0});
  CHECK(!bestSplit(constant, allRows(constant), std::vector<int>{0}, 2, 1));

  // min_leaf too big for any candidate
  TrainData four = makeData({{0}, {1}, {10}, {11}}, {0, 0, 1, 1});
  CHECK(!bestSplit(four, allRows(four), std::vector<int>{0}, 2, 3));
}

TEST_CASE("bestSplit matches the brute-force oracle on random instances") {
  std::mt19937_64 rng(20250811);
  for (int rep = 0; rep < 300; ++rep) {
    int n = 2 + static_cast<int>(boundedDraw(rng, 49));
    int p = 1 + static_cast<int>(boundedDraw(rng, 4));
    int classes = 2 + static_cast<int>(boundedDraw(rng, 3));
    int min_leaf = 1 + static_cast<int>(boundedDraw(rng, 3));
    std::vector<std::vector<double>> x;
    std::vector<int> y;
    for (int i = 0; i < n; ++i) {
      std::vector<double> row;
      for (int j = 0; j < p; ++j) {
        // small integer grid provokes duplicate values and ties
        row.push_back(static_cast<double>(boundedDraw(rng, 5)));
      }
      x.push_back(row);
      y.push_back(static_cast<int>(boundedDraw(rng, classes)));
    }
    TrainData data = makeData(x, y);
    std::vector<int> features;
    for (int j = 0; j < p; ++j) features.push_back(j);

    auto mine = bestSplit(data, allRows(data), features, classes, min_leaf);
    auto oracle = bruteForceSplit(data, allRows(data), features, classes, min_leaf);
    CAPTURE(rep);
    REQUIRE(mine.has_value() == oracle.has_value());
    if (mine) {
      CHECK(mine->feature_index == oracle->feature_index);
      CHECK(mine->threshold == oracle->threshold);
      CHECK(std::abs(mine->impurity_decrease - oracle->impurity_decrease) <=
            1e-12);
    }
  }
}

TEST_CASE("growTree basics") {
  std::mt19937_64 rng(4);

  // single class collapses to one leaf
  TrainData pure = makeData({{0}, {5}, {9}}, {1, 1, 1});
  auto leaf = growTree(pure, allRows(pure), 1, 1, 2, rng);
  CHECK(leaf->isLeaf());
  CHECK(leaf->node_size == 3);
  CHECK(leaf->class_counts == std::vector<std::uint32_t>{0, 3});

  // the 4-row example becomes a depth-1 tree with the oracle's threshold
  TrainData four = makeData({{0}, {1}, {10}, {11}}, {0, 0, 1, 1});
  auto tree = growTree(four, allRows(four), 1, 1, 2, rng);
  REQUIRE(!tree->isLeaf());
  CHECK(tree->feature_index == 0);
  CHECK(tree->threshold == 5.5);
  CHECK(tree->impurity_decrease == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(tree->left->isLeaf());
  CHECK(tree->right->isLeaf());
  CHECK(tree->left->class_counts == std::vector<std::uint32_t>{2, 0});
  CHECK(tree->right->class_counts == std::vector<std::uint32_t>{0, 2});
}

TEST_CASE("per-node feature draws are uniform (chi-square, m = 1)") {
  std::mt19937_64 rng(7);
  const int draws = 1000;
  const int p = 4;
  std::vector<int> counts(p, 0);
  for (int i = 0; i < draws; ++i) {
    auto sample = sampleWithoutReplacement(rng, p, 1);
    ++counts[static_cast<std::size_t>(sample[0])];
  }
  double expected = static_cast<double>(draws) / p;
  double stat = 0.0;
  for (int c : counts) {
    double d = static_cast<double>(c) - expected;
    stat += d * d / expected;
  }
  CHECK(stat < 16.266);  // chi-square critical value, df = 3, alpha = 0.001
}

TEST_CASE("single unlimited tree fits training data exactly") {
  std::mt19937_64 gen(12);
  std::vector<std::vector<double>> x;
  std::vector<int> y;
  for (int i = 0; i < 60; ++i) {
    // feature 0 is the row index, so no two rows collide
    x.push_back({static_cast<double>(i),
                 static_cast<double>(boundedDraw(gen, 3))});
    y.push_back(static_cast<int>(boundedDraw(gen, 3)));
  }
  TrainData data = makeData(x, y);
  TrainOptions options;
  options.trees = 1;
  options.bootstrap = false;
  options.mtry = 2;
  options.seed = 5;
  Forest forest = trainForest(data, {"a", "b", "c"}, {"f0", "f1"}, options);
  for (int i = 0; i < 60; ++i) {
    CHECK(forest.predictIndex(x[static_cast<std::size_t>(i)]) == y[i]);
  }
}

TEST_CASE("defaults: p = 23 gives mtry 4") {
  std::vector<std::vector<double>> x;
  std::vector<int> y;
  for (int i = 0; i < 10; ++i) {
    std::vector<double> row(23, 0.0);
    row[0] = i;
    x.push_back(row);
    y.push_back(i % 2);
  }
  std::vector<std::string> names;
  for (int i = 0; i < 23; ++i) names.push_back("f" + std::to_string(i));
  TrainOptions options;
  options.trees = 1;
  Forest forest = trainForest(makeData(x, y), {"a", "b"}, names, options);
  CHECK(forest.mtry == 4);
}

TEST_CASE("training is deterministic and thread-count independent") {
  std::mt19937_64 gen(9);
  std::vector<std::vector<double>> x;
  std::vector<int> y;
  for (int i = 0; i < 80; ++i) {
    x.push_back({uniformReal(gen), uniformReal(gen), uniformReal(gen)});
    y.push_back(static_cast<int>(boundedDraw(gen, 3)));
  }
  TrainData data = makeData(x, y);
  TrainOptions options;
  options.trees = 40;
  options.seed = 77;

  options.threads = 1;
  Forest single = trainForest(data, {"a", "b", "c"}, {"f0", "f1", "f2"}, options);
  options.threads = 8;
  Forest threaded = trainForest(data, {"a", "b", "c"}, {"f0", "f1", "f2"}, options);
  CHECK(single.toJson().dump() == threaded.toJson().dump());
}

TEST_CASE("prediction: plurality leaves and alphabetical tie-breaks") {
  auto leaf = [](std::vector<std::uint32_t> counts) {
    auto node = std::make_unique<TreeNode>();
    node->node_size = 0;
    for (auto c : counts) node->node_size += c;
    node->class_counts = std::move(counts);
    return node;
  };

  Forest forest;
  forest.classes = {"MPB", "Rock"};
  forest.feature_names = {"f0"};
  forest.trees.push_back(leaf({3, 1}));
  CHECK(forest.predict(std::vector<double>{0.0}) == "MPB");

  Forest tied;
  tied.classes = {"Rock", "Samba"};
  tied.feature_names = {"f0"};
  tied.trees.push_back(leaf({1, 0}));  // votes Rock
  tied.trees.push_back(leaf({0, 1}));  // votes Samba
  CHECK(tied.predict(std::vector<double>{0.0}) == "Rock");

  CHECK_THROWS_AS(forest.predict(std::vector<double>{0.0, 1.0}),
                  DimensionMismatch);
}

TEST_CASE("a forest separates a separable toy set") {
  std::mt19937_64 gen(21);
  std::vector<std::vector<double>> x;
  std::vector<int> y;
  for (int i = 0; i < 90; ++i) {
    int cls = i % 3;
    x.push_back({static_cast<double>(cls) * 10.0 + uniformReal(gen),
                 uniformReal(gen)});
    y.push_back(cls);
  }
  TrainData data = makeData(x, y);
  TrainOptions options;
  options.trees = 100;
  options.seed = 3;
  Forest forest = trainForest(data, {"a", "b", "c"}, {"f0", "f1"}, options);
  for (std::size_t i = 0; i < x.size(); ++i) {
    CHECK(forest.predictIndex(x[i]) == y[i]);
  }
}

TEST_CASE("degenerate input is flagged, not fatal") {
  TrainData single_class = makeData({{0}, {1}}, {0, 0});
  TrainOptions options;
  options.trees = 2;
  Forest forest = trainForest(single_class, {"a", "b"}, {"f0"}, options);
  CHECK(forest.degenerate_input);
  CHECK(forest.predictIndex(std::vector<double>{0.5}) == 0);

  TrainData fine = makeData({{0}, {1}}, {0, 1});
  Forest ok = trainForest(fine, {"a", "b"}, {"f0"}, options);
  CHECK(!ok.degenerate_input);
}

TEST_CASE("importance") {
  // single-tree, single-split forest: importance is the weighted decrease
  TrainData four = makeData({{0, 7}, {1, 7}, {10, 7}, {11, 7}}, {0, 0, 1, 1});
  TrainOptions options;
  options.trees = 1;
  options.bootstrap = false;
  options.mtry = 2;
  Forest forest = trainForest(four, {"a", "b"}, {"f0", "f1"}, options);
  auto imp = forest.importance();
  REQUIRE(imp.size() == 2);
  CHECK(imp[0] == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(imp[1] == 0.0);  // constant feature is never used

  auto ranking = forest.importanceRanking();
  CHECK(ranking[0].first == "f0");
  CHECK(ranking[0].second == imp[0]);
  CHECK(ranking[1].first == "f1");

  // a feature that alone determines the class ranks first
  std::mt19937_64 gen(31);
  std::vector<std::vector<double>> x;
  std::vector<int> y;
  for (int i = 0; i < 100; ++i) {
    int cls = static_cast<int>(boundedDraw(gen, 2));
    x.push_back({uniformReal(gen), static_cast<double>(cls)});
    y.push_back(cls);
  }
  TrainOptions rf;
  rf.trees = 60;
  rf.seed = 8;
  Forest strong = trainForest(makeData(x, y), {"a", "b"}, {"noise", "signal"}, rf);
  CHECK(strong.importanceRanking()[0].first == "signal");
}

TEST_CASE("forest behaves identically after a JSON round trip") {
  std::mt19937_64 gen(41);
  std::vector<std::vector<double>> x;
  std::vector<int> y;
  for (int i = 0; i < 50; ++i) {
    x.push_back({uniformReal(gen) * 13.0, uniformReal(gen), uniformReal(gen)});
    y.push_back(static_cast<int>(boundedDraw(gen, 3)));
  }
  TrainData data = makeData(x, y);
  TrainOptions options;
  options.trees = 20;
  options.seed = 123;
  Forest forest = trainForest(data, {"a", "b", "c"}, {"f0", "f1", "f2"}, options);
  forest.imputation_medians = {{"f1", 0.5}};

  Forest loaded = Forest::fromJson(forest.toJson());
  CHECK(forest.toJson().dump() == loaded.toJson().dump());
  std::mt19937_64 probe(5);
  for (int i = 0; i < 200; ++i) {
    std::vector<double> row{uniformReal(probe) * 13.0, uniformReal(probe),
                            uniformReal(probe)};
    CHECK(forest.predictIndex(row) == loaded.predictIndex(row));
  }
  CHECK(loaded.imputation_medians.at("f1") == 0.5);
  CHECK(loaded.oob_available);
  CHECK(loaded.oob_rows.size() == 20);
}

TEST_CASE("forest is invariant to strictly monotone feature transforms") {
  // Splits depend only on value order, so a tree routes any x whose value
  // sits outside the split gap identically before and after the
  // transform. Rows the trees were grown on satisfy that at every node;
  // bootstrap is off so every training row qualifies in every tree.
  std::mt19937_64 gen(55);
  std::vector<std::vector<double>> x;
  std::vector<int> y;
  for (int i = 0; i < 120; ++i) {
    int cls = static_cast<int>(boundedDraw(gen, 3));
    x.push_back({static_cast<double>(cls) * 3.0 + uniformReal(gen) * 4.0,
                 uniformReal(gen) * 100.0, 1950.0 + uniformReal(gen) * 70.0});
    y.push_back(cls);
  }
  auto transform = [](const std::vector<double>& row) {
    std::vector<double> out;
    for (double v : row) out.push_back(std::log1p(v));
    return out;
  };
  std::vector<std::vector<double>> tx;
  for (const auto& row : x) tx.push_back(transform(row));

  TrainOptions options;
  options.trees = 30;
  options.seed = 99;
  options.bootstrap = false;
  options.mtry = 2;
  Forest plain = trainForest(makeData(x, y), {"a", "b", "c"},
                             {"f0", "f1", "f2"}, options);
  Forest warped = trainForest(makeData(tx, y), {"a", "b", "c"},
                              {"f0", "f1", "f2"}, options);

  for (std::size_t i = 0; i < x.size(); ++i) {
    CHECK(plain.predictIndex(x[i]) == warped.predictIndex(tx[i]));
  }
}

TEST_CASE("bootstrap records out-of-bag rows") {
  std::mt19937_64 gen(61);
  std::vector<std::vector<double>> x;
  std::vector<int> y;
  for (int i = 0; i < 50; ++i) {
    x.push_back({uniformReal(gen)});
    y.push_back(i % 2);
  }
  TrainOptions options;
  options.trees = 5;
  Forest forest = trainForest(makeData(x, y), {"a", "b"}, {"f0"}, options);
  REQUIRE(forest.oob_available);
  REQUIRE(forest.oob_rows.size() == 5);
  for (const auto& oob : forest.oob_rows) {
    CHECK(!oob.empty());  // P(all 50 rows drawn) is negligible
    CHECK(std::is_sorted(oob.begin(), oob.end()));
    for (auto r : oob) CHECK(r < 50);
  }

  TrainOptions no_bootstrap = options;
  no_bootstrap.bootstrap = false;
  Forest plain = trainForest(makeData(x, y), {"a", "b"}, {"f0"}, no_bootstrap);
  CHECK(!plain.oob_available);
}
