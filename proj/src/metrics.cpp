#include "sbc/metrics.hpp"

#include <algorithm>
#include <numeric>

#include "sbc/errors.hpp"
#include "sbc/sml.hpp"

namespace sbc {

namespace {

void check_batch(const PredictionBatch& b) {
  const std::size_t n = b.truth.size();
  if (n == 0) throw DataError("empty prediction batch");
  if (b.predicted.size() != n || static_cast<std::size_t>(b.scores.rows()) != n) {
    throw DataError("prediction batch fields have inconsistent instance counts");
  }
  if (b.scores.cols() != b.n_classes) {
    throw DataError("score rows do not match the class count");
  }
  for (std::size_t i = 0; i < n; ++i) {
    for (int c : b.truth[i]) {
      if (c < 0 || c >= b.n_classes) throw DataError("truth label index out of range");
    }
    for (int c : b.predicted[i]) {
      if (c < 0 || c >= b.n_classes) throw DataError("predicted label index out of range");
    }
  }
}

bool contains(const std::vector<int>& sorted_set, int v) {
  return std::binary_search(sorted_set.begin(), sorted_set.end(), v);
}

// Positions of all classes under descending score order, ties toward the
// lower class index; rank of class c is position + 1.
std::vector<int> score_ranks(const Eigen::VectorXd& scores) {
  std::vector<int> order(static_cast<std::size_t>(scores.size()));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int bb) {
    if (scores(a) != scores(bb)) return scores(a) > scores(bb);
    return a < bb;
  });
  std::vector<int> rank(order.size());
  for (std::size_t pos = 0; pos < order.size(); ++pos) {
    rank[static_cast<std::size_t>(order[pos])] = static_cast<int>(pos) + 1;
  }
  return rank;
}

}  // namespace

const char* metric_name(Metric m) {
  switch (m) {
    case Metric::HammingLoss: return "hamming_loss";
    case Metric::OneError: return "one_error";
    case Metric::Coverage: return "coverage";
    case Metric::RankLoss: return "rank_loss";
    case Metric::AveragePrecision: return "average_precision";
    case Metric::Accuracy: return "accuracy";
  }
  return "?";
}

Metric metric_from_name(const std::string& name) {
  for (Metric m : {Metric::HammingLoss, Metric::OneError, Metric::Coverage, Metric::RankLoss,
                   Metric::AveragePrecision, Metric::Accuracy}) {
    if (name == metric_name(m)) return m;
  }
  throw DataError("unknown metric: " + name);
}

bool metric_higher_is_better(Metric m) {
  return m == Metric::AveragePrecision || m == Metric::Accuracy;
}

std::vector<Metric> metrics_for_task(Task task) {
  if (task == Task::MultiLabel) {
    return {Metric::HammingLoss, Metric::OneError, Metric::Coverage, Metric::RankLoss,
            Metric::AveragePrecision};
  }
  return {Metric::Accuracy};
}

double metric_value(const MetricReport& r, Metric m) {
  const std::optional<double>* slot = nullptr;
  switch (m) {
    case Metric::HammingLoss: slot = &r.hamming_loss; break;
    case Metric::OneError: slot = &r.one_error; break;
    case Metric::Coverage: slot = &r.coverage; break;
    case Metric::RankLoss: slot = &r.rank_loss; break;
    case Metric::AveragePrecision: slot = &r.avg_precision; break;
    case Metric::Accuracy: slot = &r.accuracy; break;
  }
  if (!slot->has_value()) {
    throw DataError(std::string("metric not present in report: ") + metric_name(m));
  }
  return slot->value();
}

double hamming_loss(const PredictionBatch& b) {
  check_batch(b);
  double total = 0.0;
  for (std::size_t i = 0; i < b.truth.size(); ++i) {
    std::vector<int> sym;
    std::set_symmetric_difference(b.predicted[i].begin(), b.predicted[i].end(),
                                  b.truth[i].begin(), b.truth[i].end(), std::back_inserter(sym));
    total += static_cast<double>(sym.size()) / static_cast<double>(b.n_classes);
  }
  return total / static_cast<double>(b.truth.size());
}

double one_error(const PredictionBatch& b) {
  check_batch(b);
  double wrong = 0.0;
  for (std::size_t i = 0; i < b.truth.size(); ++i) {
    if (b.truth[i].empty()) throw DataError("one_error: empty truth set");
    const int top = argmax_lowest(b.scores.row(static_cast<Eigen::Index>(i)));
    if (!contains(b.truth[i], top)) wrong += 1.0;
  }
  return wrong / static_cast<double>(b.truth.size());
}

double coverage(const PredictionBatch& b) {
  check_batch(b);
  double total = 0.0;
  for (std::size_t i = 0; i < b.truth.size(); ++i) {
    if (b.truth[i].empty()) throw DataError("coverage: empty truth set");
    const std::vector<int> rank = score_ranks(b.scores.row(static_cast<Eigen::Index>(i)));
    int worst = 1;
    for (int c : b.truth[i]) worst = std::max(worst, rank[static_cast<std::size_t>(c)]);
    total += static_cast<double>(worst - 1);
  }
  return total / static_cast<double>(b.truth.size());
}

double rank_loss(const PredictionBatch& b) {
  check_batch(b);
  double total = 0.0;
  for (std::size_t i = 0; i < b.truth.size(); ++i) {
    const std::size_t n_rel = b.truth[i].size();
    const std::size_t n_irr = static_cast<std::size_t>(b.n_classes) - n_rel;
    if (n_rel == 0 || n_irr == 0) {
      throw DataError("rank_loss: instance with no relevant or no irrelevant label");
    }
    const Eigen::VectorXd s = b.scores.row(static_cast<Eigen::Index>(i));
    double bad = 0.0;
    for (int rel : b.truth[i]) {
      for (int c = 0; c < b.n_classes; ++c) {
        if (contains(b.truth[i], c)) continue;
        if (s(rel) < s(c)) bad += 1.0;
        else if (s(rel) == s(c)) bad += 0.5;
      }
    }
    total += bad / static_cast<double>(n_rel * n_irr);
  }
  return total / static_cast<double>(b.truth.size());
}

double average_precision(const PredictionBatch& b) {
  check_batch(b);
  double total = 0.0;
  for (std::size_t i = 0; i < b.truth.size(); ++i) {
    if (b.truth[i].empty()) throw DataError("average_precision: empty truth set");
    const std::vector<int> rank = score_ranks(b.scores.row(static_cast<Eigen::Index>(i)));
    double inst = 0.0;
    for (int c : b.truth[i]) {
      const int rank_c = rank[static_cast<std::size_t>(c)];
      int better = 0;
      for (int c2 : b.truth[i]) {
        if (rank[static_cast<std::size_t>(c2)] <= rank_c) ++better;
      }
      inst += static_cast<double>(better) / static_cast<double>(rank_c);
    }
    total += inst / static_cast<double>(b.truth[i].size());
  }
  return total / static_cast<double>(b.truth.size());
}

double accuracy(const PredictionBatch& b) {
  check_batch(b);
  double correct = 0.0;
  for (std::size_t i = 0; i < b.truth.size(); ++i) {
    if (b.truth[i].size() != 1 || b.predicted[i].size() != 1) {
      throw DataError("accuracy requires singleton truth and prediction sets");
    }
    if (b.truth[i][0] == b.predicted[i][0]) correct += 1.0;
  }
  return correct / static_cast<double>(b.truth.size());
}

MetricReport evaluate_batch(const PredictionBatch& b, Task task) {
  check_batch(b);
  MetricReport report;
  if (task == Task::MultiClass) {
    report.accuracy = accuracy(b);
    return report;
  }

  report.hamming_loss = hamming_loss(b);

  // ranking metrics skip instances with empty truth sets (and rank_loss also
  // those relevant to every class); hamming_loss above counted everything
  std::vector<int> ranked_rows;
  std::vector<int> pairable_rows;
  for (std::size_t i = 0; i < b.truth.size(); ++i) {
    if (b.truth[i].empty()) {
      ++report.excluded_empty_truth;
      continue;
    }
    ranked_rows.push_back(static_cast<int>(i));
    if (b.truth[i].size() == static_cast<std::size_t>(b.n_classes)) {
      ++report.excluded_rank_degenerate;
    } else {
      pairable_rows.push_back(static_cast<int>(i));
    }
  }
  auto take_rows = [&](const std::vector<int>& rows) {
    PredictionBatch out;
    out.n_classes = b.n_classes;
    out.scores.resize(static_cast<Eigen::Index>(rows.size()), b.n_classes);
    for (std::size_t r = 0; r < rows.size(); ++r) {
      out.scores.row(static_cast<Eigen::Index>(r)) = b.scores.row(rows[r]);
      out.predicted.push_back(b.predicted[static_cast<std::size_t>(rows[r])]);
      out.truth.push_back(b.truth[static_cast<std::size_t>(rows[r])]);
    }
    return out;
  };
  if (!ranked_rows.empty()) {
    const PredictionBatch ranked = take_rows(ranked_rows);
    report.one_error = one_error(ranked);
    report.coverage = coverage(ranked);
    report.avg_precision = average_precision(ranked);
  }
  if (!pairable_rows.empty()) {
    report.rank_loss = rank_loss(take_rows(pairable_rows));
  }
  return report;
}

}  // namespace sbc
