#pragma once

#include <Eigen/Core>
#include <optional>
#include <string>
#include <vector>

#include "sbc/dataset.hpp"

namespace sbc {

// Scores feed the ranking metrics (posteriors, or raw evidence for SML);
// predicted/truth are label-index sets.
struct PredictionBatch {
  Eigen::MatrixXd scores;  // n x m
  std::vector<std::vector<int>> predicted;
  std::vector<std::vector<int>> truth;
  int n_classes = 0;
};

struct MetricReport {
  std::optional<double> hamming_loss;
  std::optional<double> one_error;
  std::optional<double> coverage;
  std::optional<double> rank_loss;
  std::optional<double> avg_precision;
  std::optional<double> accuracy;
  // instances skipped by the ranking metrics (empty truth set), and
  // additionally by rank_loss (no irrelevant label either)
  int excluded_empty_truth = 0;
  int excluded_rank_degenerate = 0;
};

enum class Metric { HammingLoss, OneError, Coverage, RankLoss, AveragePrecision, Accuracy };

const char* metric_name(Metric m);
Metric metric_from_name(const std::string& name);
bool metric_higher_is_better(Metric m);
std::vector<Metric> metrics_for_task(Task task);
double metric_value(const MetricReport& r, Metric m);

// Mean |predicted symmetric-difference truth| / m. Counts every instance.
double hamming_loss(const PredictionBatch& b);

// Fraction of instances whose top-scored class is not relevant.
double one_error(const PredictionBatch& b);

// Mean worst rank of a relevant class, minus one; ranks start at 1 in
// descending score order (ties broken toward the lower class index).
double coverage(const PredictionBatch& b);

// Mean fraction of (relevant, irrelevant) pairs ordered wrongly; score ties
// count half.
double rank_loss(const PredictionBatch& b);

double average_precision(const PredictionBatch& b);

// Exact-match fraction; requires singleton truth and prediction sets.
double accuracy(const PredictionBatch& b);

// Full report for the task: the five multi-label criteria for MultiLabel,
// accuracy for MultiClass. Instances with empty truth sets are excluded
// from the ranking metrics (counted in the report) but kept in hamming_loss.
MetricReport evaluate_batch(const PredictionBatch& b, Task task);

}  // namespace sbc
