#include <doctest.h>

#include <random>

#include "sbc/sml.hpp"
#include "support/oracles.hpp"

using namespace sbc;

namespace {

Dataset make_dataset(const Eigen::MatrixXd& x, std::vector<std::vector<int>> labels,
                     int n_classes, Task task) {
  Dataset d;
  d.features = x;
  d.labels = std::move(labels);
  d.task = task;
  for (int k = 0; k < n_classes; ++k) d.label_names.push_back("c" + std::to_string(k));
  for (Eigen::Index j = 0; j < x.cols(); ++j) d.feature_names.push_back("f" + std::to_string(j));
  return d;
}

Dataset random_mlc(std::mt19937_64& rng, int n, int dims, int n_classes) {
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  std::bernoulli_distribution member(0.4);
  Eigen::MatrixXd x(n, dims);
  std::vector<std::vector<int>> labels;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < dims; ++j) x(i, j) = unit(rng);
    std::vector<int> set;
    for (int k = 0; k < n_classes; ++k) {
      if (member(rng)) set.push_back(k);
    }
    if (set.empty()) set.push_back(i % n_classes);
    labels.push_back(set);
  }
  // every class needs at least one member
  for (int k = 0; k < n_classes; ++k) {
    bool seen = false;
    for (const auto& set : labels) {
      if (std::binary_search(set.begin(), set.end(), k)) seen = true;
    }
    if (!seen) {
      labels[static_cast<std::size_t>(k % n)].push_back(k);
      std::sort(labels[static_cast<std::size_t>(k % n)].begin(),
                labels[static_cast<std::size_t>(k % n)].end());
    }
  }
  return make_dataset(x, labels, n_classes, Task::MultiLabel);
}

}  // namespace

TEST_SUITE_BEGIN("sml");

TEST_CASE("multi-class models carry no size transform") {
  Eigen::MatrixXd x(4, 1);
  x << 0.0, 0.1, 0.9, 1.0;
  const Dataset d = make_dataset(x, {{0}, {0}, {1}, {1}}, 2, Task::MultiClass);
  const SmlModel m = sml_fit(d, {KernelKind::Rbf, 1.0});
  CHECK_FALSE(m.size_evidence.has_value());
  CHECK(m.size_values.empty());
}

TEST_CASE("set sizes become the transformed label space") {
  Eigen::MatrixXd x(4, 1);
  x << 0.0, 0.3, 0.6, 1.0;
  const Dataset d = make_dataset(x, {{0}, {0, 1}, {1, 2}, {2}}, 3, Task::MultiLabel);
  const SmlModel m = sml_fit(d, {KernelKind::Rbf, 1.0});
  REQUIRE(m.size_evidence.has_value());
  CHECK(m.size_values == std::vector<int>{1, 2});
  // the size transform groups instances 0,3 (size 1) and 1,2 (size 2)
  CHECK(m.size_evidence->class_index ==
        std::vector<std::vector<int>>{{0, 3}, {1, 2}});
}

TEST_CASE("uniform singleton label sets force size 1") {
  Eigen::MatrixXd x(3, 1);
  x << -0.5, 0.0, 0.5;
  const Dataset d = make_dataset(x, {{1}, {0}, {1}}, 2, Task::MultiLabel);
  const SmlModel m = sml_fit(d, {KernelKind::Rbf, 1.0});
  CHECK(m.size_values == std::vector<int>{1});
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    CHECK(sml_predict(m, x.row(i)).size() == 1);
  }
}

TEST_CASE("multi-class prediction picks the dominant far cluster") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> jitter(-0.1, 0.1);
  Eigen::MatrixXd x(9, 2);
  std::vector<std::vector<int>> labels;
  for (int i = 0; i < 9; ++i) {
    const int cls = i / 3;
    x(i, 0) = 15.0 * cls + jitter(rng);
    x(i, 1) = jitter(rng);
    labels.push_back({cls});
  }
  const Dataset d = make_dataset(x, labels, 3, Task::MultiClass);
  const SmlModel m = sml_fit(d, {KernelKind::Rbf, 1.0});
  Eigen::VectorXd q(2);
  q << 30.0, 0.0;  // centroid of class 2
  CHECK(sml_predict(m, q) == std::vector<int>{2});
}

TEST_CASE("top-xi selection follows hand-computed evidence") {
  Eigen::VectorXd evidence(3);
  evidence << 3.1, 0.2, 2.7;
  CHECK(top_classes(evidence, 2) == std::vector<int>{0, 2});

  Eigen::VectorXd two(2);
  two << 0.5, 0.9;
  CHECK(top_classes(two, 1) == std::vector<int>{1});

  SUBCASE("boundary ties resolve to the lowest class index") {
    Eigen::VectorXd tied(4);
    tied << 1.0, 0.5, 0.5, 0.1;
    CHECK(top_classes(tied, 2) == std::vector<int>{0, 1});
  }
  SUBCASE("argmax ties resolve to the lowest index") {
    Eigen::VectorXd tied(3);
    tied << 0.7, 0.7, 0.1;
    CHECK(argmax_lowest(tied) == 0);
  }
}

TEST_CASE("prediction agrees with the brute-force implementation") {
  std::mt19937_64 rng(41);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);

  SUBCASE("multi-label fixtures") {
    for (int trial = 0; trial < 10; ++trial) {
      const Dataset d = random_mlc(rng, 12, 3, 4);
      const double gamma = trial % 2 == 0 ? 1.0 : 0.25;
      const SmlModel m = sml_fit(d, {KernelKind::Rbf, gamma});
      for (int q = 0; q < 8; ++q) {
        Eigen::VectorXd query(3);
        query << unit(rng), unit(rng), unit(rng);
        CHECK(sml_predict(m, query) ==
              oracle::sml_predict_mlc(d.features, d.labels, 4, query, gamma));
      }
    }
  }
  SUBCASE("multi-class fixtures") {
    for (int trial = 0; trial < 10; ++trial) {
      Eigen::MatrixXd x(10, 2);
      std::vector<std::vector<int>> labels;
      for (int i = 0; i < 10; ++i) {
        x(i, 0) = unit(rng);
        x(i, 1) = unit(rng);
        labels.push_back({i % 3});
      }
      const Dataset d = make_dataset(x, labels, 3, Task::MultiClass);
      const SmlModel m = sml_fit(d, {KernelKind::Rbf, 0.8});
      for (int q = 0; q < 8; ++q) {
        Eigen::VectorXd query(2);
        query << unit(rng), unit(rng);
        CHECK(sml_predict(m, query) ==
              std::vector<int>{oracle::sml_predict_mcc(d.features, d.labels, 3, query, 0.8)});
      }
    }
  }
}

TEST_CASE("predicted set size always comes from the observed sizes") {
  std::mt19937_64 rng(57);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  const Dataset d = random_mlc(rng, 15, 2, 5);
  const SmlModel m = sml_fit(d, {KernelKind::Rbf, 1.0});
  for (int q = 0; q < 30; ++q) {
    Eigen::VectorXd query(2);
    query << unit(rng), unit(rng);
    const auto prediction = sml_predict(m, query);
    CHECK(std::binary_search(m.size_values.begin(), m.size_values.end(),
                             static_cast<int>(prediction.size())));
  }
}

TEST_CASE("decisions are invariant to positive scaling of the evidence") {
  std::mt19937_64 rng(71);
  std::uniform_real_distribution<double> unit(0.0, 5.0);
  for (int trial = 0; trial < 50; ++trial) {
    Eigen::VectorXd evidence(5);
    for (int k = 0; k < 5; ++k) evidence(k) = unit(rng);
    const double c = 0.1 + unit(rng);
    for (int xi = 1; xi <= 5; ++xi) {
      CHECK(top_classes(evidence, xi) == top_classes((c * evidence).eval(), xi));
    }
    CHECK(argmax_lowest(evidence) == argmax_lowest((c * evidence).eval()));
  }
}

TEST_SUITE_END();
