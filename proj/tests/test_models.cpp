#include <doctest.h>

#include <cmath>
#include <random>

#include "sbc/errors.hpp"
#include "sbc/models.hpp"
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

// Two tight clusters far apart, one class each.
Dataset blob_pair(std::mt19937_64& rng, int per_class) {
  std::uniform_real_distribution<double> jitter(-0.05, 0.05);
  Eigen::MatrixXd x(2 * per_class, 2);
  std::vector<std::vector<int>> labels;
  for (int i = 0; i < 2 * per_class; ++i) {
    const int cls = i < per_class ? 0 : 1;
    x(i, 0) = (cls == 0 ? -0.8 : 0.8) + jitter(rng);
    x(i, 1) = (cls == 0 ? -0.8 : 0.8) + jitter(rng);
    labels.push_back({cls});
  }
  return make_dataset(x, labels, 2, Task::MultiClass);
}

// A model with handcrafted coefficients over a trivial evidence transform,
// to drive the decision rules directly.
SblrModel crafted_model(const Eigen::MatrixXd& betas, Task task) {
  const int m = static_cast<int>(betas.rows());
  SblrModel model;
  model.task = task;
  model.coefficients.betas = betas;
  model.evidence.kernel = {KernelKind::Rbf, 1.0};
  model.evidence.train_features = Eigen::MatrixXd::Zero(m, 1);
  for (int k = 0; k < m; ++k) {
    model.evidence.train_features(k, 0) = static_cast<double>(k);
    model.evidence.class_index.push_back({k});
  }
  model.evidence.evidence_min = Eigen::VectorXd::Zero(m);
  model.evidence.evidence_max = Eigen::VectorXd::Ones(m);
  return model;
}

}  // namespace

TEST_SUITE_BEGIN("models");

TEST_CASE("posteriors follow the sigmoid link") {
  SUBCASE("zero coefficients give one half") {
    const SblrModel m = crafted_model(Eigen::MatrixXd::Zero(3, 4), Task::MultiLabel);
    const Eigen::VectorXd p = sblr_posteriors(m, Eigen::VectorXd::Zero(1));
    for (int k = 0; k < 3; ++k) CHECK(p(k) == doctest::Approx(0.5));
  }
  SUBCASE("intercept-only row gives sigma(2) everywhere") {
    Eigen::MatrixXd betas = Eigen::MatrixXd::Zero(2, 3);
    betas(0, 0) = 2.0;
    const SblrModel m = crafted_model(betas, Task::MultiLabel);
    for (double q : {-0.5, 0.0, 0.9}) {
      Eigen::VectorXd x(1);
      x << q;
      CHECK(sblr_posteriors(m, x)(0) == doctest::Approx(0.8808).epsilon(1e-4));
    }
  }
  SUBCASE("random models match a direct dot-product oracle") {
    std::mt19937_64 rng(13);
    std::uniform_real_distribution<double> unit(-2.0, 2.0);
    Eigen::MatrixXd betas(3, 4);
    for (int i = 0; i < betas.size(); ++i) betas(i / 4, i % 4) = unit(rng);
    const SblrModel m = crafted_model(betas, Task::MultiLabel);
    for (int trial = 0; trial < 20; ++trial) {
      Eigen::VectorXd x(1);
      x << unit(rng);
      const Eigen::VectorXd evidence = evidence_for(m.evidence, x, true);
      const Eigen::VectorXd p = sblr_posteriors(m, x);
      for (int k = 0; k < 3; ++k) {
        double a = betas(k, 0);
        for (int t = 0; t < 3; ++t) a += betas(k, t + 1) * evidence(t);
        CHECK(p(k) == doctest::Approx(1.0 / (1.0 + std::exp(-a))).epsilon(1e-12));
      }
    }
  }
  SUBCASE("monotone link: larger activation, larger posterior") {
    Eigen::MatrixXd lo = Eigen::MatrixXd::Zero(1, 2);
    Eigen::MatrixXd hi = lo;
    lo(0, 0) = 0.3;
    hi(0, 0) = 0.9;
    const Eigen::VectorXd x = Eigen::VectorXd::Zero(1);
    CHECK(sblr_posteriors(crafted_model(hi, Task::MultiLabel), x)(0) >
          sblr_posteriors(crafted_model(lo, Task::MultiLabel), x)(0));
  }
}

TEST_CASE("decision rules") {
  // posteriors (0.7, 0.2, 0.6): craft intercept-only rows with those values
  auto intercepts = [](std::initializer_list<double> posteriors) {
    Eigen::MatrixXd betas = Eigen::MatrixXd::Zero(
        static_cast<Eigen::Index>(posteriors.size()),
        static_cast<Eigen::Index>(posteriors.size()) + 1);
    int k = 0;
    for (double p : posteriors) betas(k++, 0) = std::log(p / (1.0 - p));
    return betas;
  };
  const Eigen::VectorXd x = Eigen::VectorXd::Zero(1);

  SUBCASE("multi-label threshold at one half") {
    const SblrModel m = crafted_model(intercepts({0.7, 0.2, 0.6}), Task::MultiLabel);
    const SetPrediction pred = sblr_predict(m, x);
    CHECK(pred.labels == std::vector<int>{0, 2});
    CHECK_FALSE(pred.used_fallback);
  }
  SUBCASE("all-below-threshold falls back to the top posterior") {
    const SblrModel m = crafted_model(intercepts({0.4, 0.3, 0.2}), Task::MultiLabel);
    const SetPrediction pred = sblr_predict(m, x);
    CHECK(pred.labels == std::vector<int>{0});
    CHECK(pred.used_fallback);
  }
  SUBCASE("multi-class takes the argmax") {
    const SblrModel m = crafted_model(intercepts({0.4, 0.9, 0.1}), Task::MultiClass);
    const SetPrediction pred = sblr_predict(m, x);
    CHECK(pred.labels == std::vector<int>{1});
    CHECK_FALSE(pred.used_fallback);
  }
  SUBCASE("the multi-label prediction is never empty") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> unit(-3.0, 3.0);
    for (int trial = 0; trial < 30; ++trial) {
      Eigen::MatrixXd betas(3, 4);
      for (int i = 0; i < 12; ++i) betas(i / 4, i % 4) = unit(rng);
      const SblrModel m = crafted_model(betas, Task::MultiLabel);
      Eigen::VectorXd q(1);
      q << unit(rng);
      CHECK_FALSE(sblr_predict(m, q).labels.empty());
    }
  }
}

TEST_CASE("well-separated blobs train to perfect accuracy") {
  std::mt19937_64 rng(29);
  const Dataset d = blob_pair(rng, 8);
  const SolverConfig solver;
  const SblrModel m = sblr_fit(d, {KernelKind::Rbf, 1.0}, 0.0, solver);
  int correct = 0;
  for (Eigen::Index i = 0; i < d.n_instances(); ++i) {
    const SetPrediction pred = sblr_predict(m, d.features.row(i));
    if (pred.labels == d.labels[static_cast<std::size_t>(i)]) ++correct;
  }
  CHECK(correct == d.n_instances());
}

TEST_CASE("prediction is a pure function of model and query") {
  std::mt19937_64 rng(31);
  const Dataset d = blob_pair(rng, 5);
  const SblrModel m = sblr_fit(d, {KernelKind::Rbf, 1.0}, 0.01, {});
  Eigen::VectorXd q(2);
  q << 0.2, -0.4;
  const Eigen::VectorXd p1 = sblr_posteriors(m, q);
  const Eigen::VectorXd p2 = sblr_posteriors(m, q);
  CHECK((p1 - p2).cwiseAbs().maxCoeff() == 0.0);
  CHECK(sblr_predict(m, q).labels == sblr_predict(m, q).labels);
}

TEST_CASE("vanishing penalty agrees with the unpenalized model") {
  std::mt19937_64 rng(37);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  SolverConfig tight;
  tight.grad_tol = 1e-9;
  tight.max_iters = 20000;
  std::bernoulli_distribution flip(0.3);  // label noise keeps the optimum finite
  for (int trial = 0; trial < 3; ++trial) {
    Eigen::MatrixXd x(14, 2);
    std::vector<std::vector<int>> labels;
    for (int i = 0; i < 14; ++i) {
      x(i, 0) = unit(rng);
      x(i, 1) = unit(rng);
      std::vector<int> set;
      for (int k = 0; k < 2; ++k) {
        const bool member = x(i, k) > 0;
        if (member != flip(rng)) set.push_back(k);
      }
      if (set.empty()) set.push_back(i % 2);
      labels.push_back(set);
    }
    const Dataset d = make_dataset(x, labels, 2, Task::MultiLabel);
    const SblrModel plain = sblr_fit(d, {KernelKind::Rbf, 1.0}, 0.0, tight);
    const SblrModel sparse = sblr_fit(d, {KernelKind::Rbf, 1.0}, 1e-12, tight);
    for (Eigen::Index i = 0; i < d.n_instances(); ++i) {
      CHECK(sblr_predict(plain, d.features.row(i)).labels ==
            sblr_predict(sparse, d.features.row(i)).labels);
    }
  }
}

TEST_CASE("total support at the largest grid penalty is no larger than at the smallest") {
  std::mt19937_64 rng(43);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  for (int trial = 0; trial < 3; ++trial) {
    Eigen::MatrixXd x(20, 2);
    std::vector<std::vector<int>> labels;
    std::bernoulli_distribution coin(0.5);
    for (int i = 0; i < 20; ++i) {
      x(i, 0) = unit(rng);
      x(i, 1) = unit(rng);
      std::vector<int> set;
      for (int k = 0; k < 3; ++k) {
        if (coin(rng)) set.push_back(k);
      }
      if (set.empty()) set.push_back(i % 3);
      labels.push_back(set);
    }
    const Dataset d = make_dataset(x, labels, 3, Task::MultiLabel);
    auto nonzeros = [](const SblrModel& m) {
      int count = 0;
      for (Eigen::Index r = 0; r < m.coefficients.betas.rows(); ++r) {
        for (Eigen::Index c = 1; c < m.coefficients.betas.cols(); ++c) {
          if (m.coefficients.betas(r, c) != 0.0) ++count;
        }
      }
      return count;
    };
    const int wide = nonzeros(sblr_fit(d, {KernelKind::Rbf, 1.0}, 1e-5, {}));
    const int narrow = nonzeros(sblr_fit(d, {KernelKind::Rbf, 1.0}, 10.0, {}));
    CHECK(narrow <= wide);
  }
}

TEST_CASE("multi-class prediction equals an argmax over recomputed posteriors") {
  std::mt19937_64 rng(47);
  const Dataset d = blob_pair(rng, 6);
  const SblrModel m = sblr_fit(d, {KernelKind::Rbf, 1.0}, 0.0, {});
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    Eigen::VectorXd q(2);
    q << unit(rng), unit(rng);
    const Eigen::VectorXd p = sblr_posteriors(m, q);
    int best = 0;
    for (int k = 1; k < p.size(); ++k) {
      if (p(k) > p(best)) best = k;
    }
    CHECK(sblr_predict(m, q).labels == std::vector<int>{best});
  }
}

TEST_CASE("baselines") {
  SUBCASE("nearest class mean on two singleton classes") {
    Eigen::MatrixXd x(2, 2);
    x << 0, 0, 10, 10;
    const Dataset d = make_dataset(x, {{0}, {1}}, 2, Task::MultiClass);
    const BaselineModel m = baseline_fit(d, BaselineKind::Ncm, {});
    Eigen::VectorXd q(2);
    q << 1, 1;
    CHECK(baseline_predict(m, q) == std::vector<int>{0});
  }

  SUBCASE("one neighbor reproduces the training point's class") {
    Eigen::MatrixXd x(4, 1);
    x << 0.0, 0.4, 0.6, 1.0;
    const Dataset d = make_dataset(x, {{0}, {0}, {1}, {1}}, 2, Task::MultiClass);
    const BaselineModel m = baseline_fit(d, BaselineKind::Knn, {}, 1);
    for (Eigen::Index i = 0; i < 4; ++i) {
      CHECK(baseline_predict(m, x.row(i)) == d.labels[static_cast<std::size_t>(i)]);
    }
  }

  SUBCASE("three-neighbor vote matches the exhaustive oracle") {
    Eigen::MatrixXd x(5, 2);
    x << 0.0, 0.0, 0.1, 0.0, 0.0, 0.1, 0.9, 0.9, 1.0, 1.0;
    const std::vector<std::vector<int>> labels{{0}, {0}, {1}, {1}, {1}};
    const Dataset d = make_dataset(x, labels, 2, Task::MultiClass);
    const BaselineModel m = baseline_fit(d, BaselineKind::Knn, {}, 3);
    std::vector<int> flat;
    for (const auto& set : labels) flat.push_back(set[0]);
    std::mt19937_64 rng(53);
    std::uniform_real_distribution<double> unit(-0.2, 1.2);
    for (int trial = 0; trial < 25; ++trial) {
      Eigen::VectorXd q(2);
      q << unit(rng), unit(rng);
      CHECK(baseline_predict(m, q) ==
            std::vector<int>{oracle::knn_predict(x, flat, 2, q, 3)});
    }
  }

  SUBCASE("logistic baseline separates blobs") {
    std::mt19937_64 rng(59);
    const Dataset d = blob_pair(rng, 6);
    const BaselineModel m = baseline_fit(d, BaselineKind::Lr, {});
    int correct = 0;
    for (Eigen::Index i = 0; i < d.n_instances(); ++i) {
      if (baseline_predict(m, d.features.row(i)) == d.labels[static_cast<std::size_t>(i)]) {
        ++correct;
      }
    }
    CHECK(correct == d.n_instances());
  }

  SUBCASE("baselines reject multi-label datasets") {
    Eigen::MatrixXd x(2, 1);
    x << 0, 1;
    const Dataset d = make_dataset(x, {{0, 1}, {1}}, 2, Task::MultiLabel);
    CHECK_THROWS_AS(baseline_fit(d, BaselineKind::Ncm, {}), DataError);
  }

  SUBCASE("knn requires a positive neighbor count") {
    Eigen::MatrixXd x(2, 1);
    x << 0, 1;
    const Dataset d = make_dataset(x, {{0}, {1}}, 2, Task::MultiClass);
    CHECK_THROWS_AS(baseline_fit(d, BaselineKind::Knn, {}, 0), DataError);
  }
}

TEST_SUITE_END();
