#include <doctest.h>

#include <random>

#include "sbc/errors.hpp"
#include "sbc/metrics.hpp"
#include "support/oracles.hpp"

using namespace sbc;

namespace {

PredictionBatch single(const Eigen::VectorXd& scores, std::vector<int> predicted,
                       std::vector<int> truth) {
  PredictionBatch b;
  b.n_classes = static_cast<int>(scores.size());
  b.scores = scores.transpose();
  b.predicted = {std::move(predicted)};
  b.truth = {std::move(truth)};
  return b;
}

PredictionBatch from_oracle(const oracle::RandomBatch& rb) {
  PredictionBatch b;
  b.scores = rb.scores;
  b.predicted = rb.predicted;
  b.truth = rb.truth;
  b.n_classes = rb.n_classes;
  return b;
}

Eigen::VectorXd vec3(double a, double b, double c) {
  Eigen::VectorXd v(3);
  v << a, b, c;
  return v;
}

}  // namespace

TEST_SUITE_BEGIN("metrics");

TEST_CASE("hamming loss") {
  Eigen::VectorXd s(4);
  s << 0.9, 0.8, 0.2, 0.1;

  PredictionBatch exact = single(s, {0, 1}, {0, 1});
  CHECK(hamming_loss(exact) == 0.0);

  PredictionBatch b = single(s, {1, 2}, {0, 1});
  CHECK(hamming_loss(b) == doctest::Approx(0.5));  // |{0,2}| / 4

  CHECK_THROWS_AS(hamming_loss(PredictionBatch{}), DataError);
}

TEST_CASE("one error") {
  CHECK(one_error(single(vec3(0.9, 0.5, 0.1), {0}, {0})) == 0.0);

  Eigen::VectorXd two(2);
  two << 0.9, 0.1;
  CHECK(one_error(single(two, {0}, {1})) == 1.0);

  PredictionBatch empty_truth = single(two, {0}, {});
  CHECK_THROWS_AS(one_error(empty_truth), DataError);
}

TEST_CASE("coverage") {
  CHECK(coverage(single(vec3(0.9, 0.5, 0.1), {0}, {0})) == 0.0);
  // worst relevant label sits at rank 3
  CHECK(coverage(single(vec3(0.9, 0.5, 0.1), {0, 2}, {0, 2})) == doctest::Approx(2.0));
}

TEST_CASE("rank loss") {
  CHECK(rank_loss(single(vec3(0.9, 0.5, 0.1), {0}, {0, 1})) == 0.0);

  Eigen::VectorXd two(2);
  two << 0.2, 0.8;
  CHECK(rank_loss(single(two, {1}, {0})) == 1.0);  // the only pair is inverted

  SUBCASE("ties count half") {
    Eigen::VectorXd tied(2);
    tied << 0.4, 0.4;
    CHECK(rank_loss(single(tied, {0}, {0})) == doctest::Approx(0.5));
  }
  SUBCASE("degenerate instance rejected") {
    CHECK_THROWS_AS(rank_loss(single(vec3(1, 2, 3), {0}, {0, 1, 2})), DataError);
  }
}

TEST_CASE("average precision") {
  // all relevant labels at the top ranks
  CHECK(average_precision(single(vec3(0.9, 0.8, 0.1), {0, 1}, {0, 1})) == doctest::Approx(1.0));
  // one relevant label at rank 2
  CHECK(average_precision(single(vec3(0.9, 0.5, 0.1), {0}, {1})) == doctest::Approx(0.5));
}

TEST_CASE("accuracy") {
  Eigen::MatrixXd scores = Eigen::MatrixXd::Zero(10, 3);
  PredictionBatch b;
  b.n_classes = 3;
  b.scores = scores;
  for (int i = 0; i < 10; ++i) {
    b.truth.push_back({i % 3});
    b.predicted.push_back({i < 7 ? i % 3 : (i + 1) % 3});
  }
  CHECK(accuracy(b) == doctest::Approx(0.7));

  for (auto& p : b.predicted) p = b.truth[0];
  b.truth.assign(10, b.truth[0]);
  CHECK(accuracy(b) == 1.0);

  for (auto& p : b.predicted) p = {(b.truth[0][0] + 1) % 3};
  CHECK(accuracy(b) == 0.0);

  SUBCASE("non-singleton sets rejected") {
    b.truth[0] = {0, 1};
    CHECK_THROWS_AS(accuracy(b), DataError);
  }
}

TEST_CASE("every metric equals its definitional oracle on 200 random batches") {
  std::mt19937_64 rng(123);
  for (int trial = 0; trial < 200; ++trial) {
    const oracle::RandomBatch rb = oracle::random_batch(rng, 10, 6, false);
    const PredictionBatch b = from_oracle(rb);
    CHECK(hamming_loss(b) ==
          doctest::Approx(oracle::hamming_loss(rb.predicted, rb.truth, rb.n_classes))
              .epsilon(1e-12));
    CHECK(one_error(b) == doctest::Approx(oracle::one_error(rb.scores, rb.truth)).epsilon(1e-12));
    CHECK(coverage(b) == doctest::Approx(oracle::coverage(rb.scores, rb.truth)).epsilon(1e-12));
    CHECK(rank_loss(b) ==
          doctest::Approx(oracle::rank_loss(rb.scores, rb.truth, rb.n_classes)).epsilon(1e-12));
    CHECK(average_precision(b) ==
          doctest::Approx(oracle::average_precision(rb.scores, rb.truth)).epsilon(1e-12));
  }
}

TEST_CASE("ranking metrics are invariant under monotone score transforms") {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 30; ++trial) {
    const oracle::RandomBatch rb = oracle::random_batch(rng, 8, 5, false);
    PredictionBatch b = from_oracle(rb);
    PredictionBatch warped = b;
    warped.scores = (3.0 * b.scores.array() + 1.0).exp();
    CHECK(one_error(b) == doctest::Approx(one_error(warped)).epsilon(1e-12));
    CHECK(coverage(b) == doctest::Approx(coverage(warped)).epsilon(1e-12));
    CHECK(rank_loss(b) == doctest::Approx(rank_loss(warped)).epsilon(1e-12));
    CHECK(average_precision(b) == doctest::Approx(average_precision(warped)).epsilon(1e-12));
  }
}

TEST_CASE("hamming loss is invariant to joint label permutation") {
  std::mt19937_64 rng(77);
  for (int trial = 0; trial < 20; ++trial) {
    const oracle::RandomBatch rb = oracle::random_batch(rng, 8, 5, true);
    PredictionBatch b = from_oracle(rb);
    std::vector<int> perm(static_cast<std::size_t>(b.n_classes));
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);

    PredictionBatch permuted = b;
    auto apply = [&](std::vector<std::vector<int>>& sets) {
      for (auto& set : sets) {
        for (int& c : set) c = perm[static_cast<std::size_t>(c)];
        std::sort(set.begin(), set.end());
      }
    };
    apply(permuted.predicted);
    apply(permuted.truth);
    CHECK(hamming_loss(b) == doctest::Approx(hamming_loss(permuted)).epsilon(1e-12));
  }
}

TEST_CASE("rank loss plus concordant fraction is one without ties") {
  std::mt19937_64 rng(99);
  for (int trial = 0; trial < 20; ++trial) {
    const oracle::RandomBatch rb = oracle::random_batch(rng, 6, 5, false);
    const PredictionBatch b = from_oracle(rb);
    // continuous scores: ties have probability zero
    PredictionBatch flipped = b;
    flipped.scores = -b.scores;
    CHECK(rank_loss(b) + rank_loss(flipped) == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("evaluate_batch applies the empty-truth exclusion policy") {
  Eigen::MatrixXd scores(3, 3);
  scores << 0.9, 0.5, 0.1, 0.2, 0.8, 0.3, 0.5, 0.5, 0.5;
  PredictionBatch b;
  b.n_classes = 3;
  b.scores = scores;
  b.predicted = {{0}, {1}, {}};
  b.truth = {{0}, {}, {0, 1, 2}};

  const MetricReport report = evaluate_batch(b, Task::MultiLabel);
  CHECK(report.excluded_empty_truth == 1);
  CHECK(report.excluded_rank_degenerate == 1);
  REQUIRE(report.hamming_loss.has_value());
  // hamming counts all three instances
  CHECK(*report.hamming_loss == doctest::Approx((0.0 + 1.0 / 3.0 + 1.0) / 3.0));
  REQUIRE(report.one_error.has_value());
  CHECK(*report.one_error == doctest::Approx(0.0));
  REQUIRE(report.rank_loss.has_value());
  CHECK(*report.rank_loss == doctest::Approx(0.0));
  CHECK_FALSE(report.accuracy.has_value());

  SUBCASE("multi-class reports carry accuracy only") {
    PredictionBatch mcc;
    mcc.n_classes = 3;
    mcc.scores = scores;
    mcc.predicted = {{0}, {1}, {2}};
    mcc.truth = {{0}, {1}, {0}};
    const MetricReport r = evaluate_batch(mcc, Task::MultiClass);
    REQUIRE(r.accuracy.has_value());
    CHECK(*r.accuracy == doctest::Approx(2.0 / 3.0));
    CHECK_FALSE(r.hamming_loss.has_value());
  }
}

TEST_SUITE_END();
