#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "sbc/dataset.hpp"
#include "sbc/metrics.hpp"
#include "sbc/models.hpp"
#include "sbc/optim.hpp"

namespace sbc {

// Hyperparameter value set shared by the RBF width and (for the sparse
// model) the l1 strength; selection holds out validation_fraction of the
// training portion and maximizes selection_metric on it.
struct GridSpec {
  std::vector<double> values = {1e2, 1e1, 1e0, 1e-1, 1e-2, 1e-3, 1e-4, 1e-5};
  double validation_fraction = 0.1;
  std::optional<Metric> selection_metric;  // default: AP (MLC) / accuracy (MCC)
};

Metric selection_metric_for(const GridSpec& grid, Task task);

struct MethodSpec {
  enum class Kind { Sml, Sblr, SparseSblr, Knn, Ncm, Lr };
  Kind kind = Kind::Sml;
  std::string name;              // display name; empty means the kind name
  std::optional<double> gamma;   // pin instead of tuning
  std::optional<double> lambda;  // pin instead of tuning (sparse model only)
  int knn_k = 5;

  std::string display_name() const;
  bool tunes_gamma() const;
  bool tunes_lambda() const;
};

const char* method_kind_name(MethodSpec::Kind k);
MethodSpec::Kind method_kind_from_name(const std::string& name);

struct FoldOutcome {
  int fold = 0;
  bool skipped = false;
  std::string warning;
  MetricReport report;
  double gamma = 0.0;
  double lambda = 0.0;
};

struct CvResult {
  std::vector<FoldOutcome> folds;
  int n_skipped() const;
  // Mean over folds that completed and carry the metric.
  std::optional<double> mean_metric(Metric m) const;
};

// Per fold: carve a validation slice from the training portion (stratified
// by class / label-set size where possible), pick the grid point that
// maximizes the selection metric on it, refit on the whole training portion
// and score the held-out fold. Deterministic given the fold plan's seed.
CvResult run_cv(const Dataset& d, const MethodSpec& method, const FoldPlan& folds,
                const GridSpec& grid, const SolverConfig& solver = {}, int jobs = 1);

struct RankTable {
  std::vector<std::string> methods;
  std::vector<std::string> datasets;
  Eigen::MatrixXd ranks;         // datasets x methods, ties share averaged ranks
  Eigen::VectorXd average_rank;  // per method
};

// values(i, j): score of method j on dataset i. Every cell must be finite.
RankTable rank_methods(const std::vector<std::string>& datasets,
                       const std::vector<std::string>& methods, const Eigen::MatrixXd& values,
                       bool higher_is_better);

struct NemenyiResult {
  double alpha = 0.05;
  double q_alpha = 0.0;
  double critical_difference = 0.0;
  int n_datasets = 0;
  std::vector<std::string> methods;
  Eigen::VectorXd average_rank;
  std::vector<std::vector<bool>> significant;  // K x K, symmetric
  double friedman_chi2 = 0.0;  // descriptive companion statistics
  double friedman_f = 0.0;
};

// Critical difference q_alpha * sqrt(K(K+1)/(6N)); the q constants are the
// studentized-range values over sqrt(2) tabulated for the Nemenyi test
// (alpha 0.05 / 0.10, up to 10 methods).
NemenyiResult nemenyi(const RankTable& table, double alpha = 0.05);
NemenyiResult nemenyi_from_ranks(const std::vector<std::string>& methods,
                                 const Eigen::VectorXd& average_ranks, int n_datasets,
                                 double alpha);

struct CoefficientReportRow {
  int class_index = 0;
  std::string class_name;
  int co_occurrence = 0;  // training instances relevant to both classes
  double coefficient = 0.0;
};

// How every class contributes to the focus class: the focus row of the
// coefficient matrix annotated with training co-occurrence counts, sorted
// by co-occurrence descending (ties by class index).
std::vector<CoefficientReportRow> coefficient_report(const SblrModel& m, const Dataset& train,
                                                     int focus_class);

}  // namespace sbc
