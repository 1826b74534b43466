#include "sbc/eval.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <utility>

#include "sbc/errors.hpp"
#include "sbc/parallel.hpp"
#include "sbc/random.hpp"
#include "sbc/sml.hpp"

namespace sbc {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// One trained classifier behind a uniform scoring interface.
struct FittedMethod {
  std::optional<SmlModel> sml;
  std::optional<SblrModel> sblr;
  std::optional<BaselineModel> baseline;

  Eigen::VectorXd scores(const Eigen::VectorXd& x) const {
    if (sml) return sml_scores(*sml, x);
    if (sblr) return sblr_posteriors(*sblr, x);
    return baseline_scores(*baseline, x);
  }
  std::vector<int> predict(const Eigen::VectorXd& x) const {
    if (sml) return sml_predict(*sml, x);
    if (sblr) return sblr_predict(*sblr, x).labels;
    return baseline_predict(*baseline, x);
  }
};

FittedMethod fit_method(const Dataset& normalized, const MethodSpec& method, double gamma,
                        double lambda, const SolverConfig& solver) {
  FittedMethod f;
  KernelConfig kernel{KernelKind::Rbf, gamma};
  switch (method.kind) {
    case MethodSpec::Kind::Sml:
      f.sml = sml_fit(normalized, kernel);
      break;
    case MethodSpec::Kind::Sblr:
      f.sblr = sblr_fit(normalized, kernel, 0.0, solver);
      break;
    case MethodSpec::Kind::SparseSblr:
      f.sblr = sblr_fit(normalized, kernel, lambda, solver);
      break;
    case MethodSpec::Kind::Knn:
      f.baseline = baseline_fit(normalized, BaselineKind::Knn, solver, method.knn_k);
      break;
    case MethodSpec::Kind::Ncm:
      f.baseline = baseline_fit(normalized, BaselineKind::Ncm, solver);
      break;
    case MethodSpec::Kind::Lr:
      f.baseline = baseline_fit(normalized, BaselineKind::Lr, solver);
      break;
  }
  return f;
}

PredictionBatch score_batch(const FittedMethod& f, const Eigen::MatrixXd& features,
                            const std::vector<std::vector<int>>& truth, int n_classes) {
  PredictionBatch batch;
  batch.n_classes = n_classes;
  batch.truth = truth;
  batch.scores.resize(features.rows(), n_classes);
  batch.predicted.reserve(static_cast<std::size_t>(features.rows()));
  for (Eigen::Index i = 0; i < features.rows(); ++i) {
    const Eigen::VectorXd x = features.row(i);
    batch.scores.row(i) = f.scores(x).transpose();
    batch.predicted.push_back(f.predict(x));
  }
  return batch;
}

// Validation carve-out, stratified by class (MCC) or label-set size (MLC).
// Keeps at least one instance of every stratum - and, for MLC, of every
// label - in the remaining training part whenever possible.
std::pair<std::vector<int>, std::vector<int>> carve_validation(const Dataset& train,
                                                               double fraction,
                                                               std::uint64_t seed) {
  const int n = static_cast<int>(train.n_instances());
  auto rng = make_rng(seed);

  std::map<int, std::vector<int>> strata;
  for (int i = 0; i < n; ++i) {
    const auto& set = train.labels[static_cast<std::size_t>(i)];
    const int key = train.task == Task::MultiClass ? set[0] : static_cast<int>(set.size());
    strata[key].push_back(i);
  }

  const int target = std::max(1, static_cast<int>(std::lround(fraction * n)));
  std::vector<bool> in_val(static_cast<std::size_t>(n), false);
  int taken = 0;
  for (auto& [key, members] : strata) {
    deterministic_shuffle(members, rng);
    const int cap = static_cast<int>(members.size()) - 1;  // keep one behind
    const int quota = std::min(
        cap, static_cast<int>(std::lround(fraction * static_cast<double>(members.size()))));
    for (int q = 0; q < quota && taken < target; ++q, ++taken) {
      in_val[static_cast<std::size_t>(members[static_cast<std::size_t>(q)])] = true;
    }
  }
  if (taken == 0) {
    // all strata are singletons; take one instance anyway
    in_val[static_cast<std::size_t>(bounded(rng, static_cast<std::uint64_t>(n)))] = true;
  }

  if (train.task == Task::MultiLabel) {
    // no label may vanish from the remaining training part
    for (int k = 0; k < train.n_classes(); ++k) {
      int last_seen = -1;
      bool survives = false;
      for (int i = 0; i < n && !survives; ++i) {
        const auto& set = train.labels[static_cast<std::size_t>(i)];
        if (!std::binary_search(set.begin(), set.end(), k)) continue;
        last_seen = i;
        if (!in_val[static_cast<std::size_t>(i)]) survives = true;
      }
      if (!survives && last_seen >= 0) in_val[static_cast<std::size_t>(last_seen)] = false;
    }
  }

  std::vector<int> val_rows;
  std::vector<int> sub_rows;
  for (int i = 0; i < n; ++i) {
    (in_val[static_cast<std::size_t>(i)] ? val_rows : sub_rows).push_back(i);
  }
  return {std::move(val_rows), std::move(sub_rows)};
}

struct GridPoint {
  double gamma = 1.0;
  double lambda = 0.0;
};

std::vector<GridPoint> grid_points(const MethodSpec& method, const GridSpec& grid) {
  std::vector<double> gammas =
      method.tunes_gamma() ? grid.values : std::vector<double>{*method.gamma};
  std::vector<double> lambdas;
  if (method.kind == MethodSpec::Kind::SparseSblr) {
    lambdas = method.tunes_lambda() ? grid.values : std::vector<double>{*method.lambda};
  } else {
    lambdas = {0.0};
  }
  std::vector<GridPoint> points;
  points.reserve(gammas.size() * lambdas.size());
  for (double g : gammas) {
    for (double l : lambdas) points.push_back({g, l});
  }
  return points;
}

FoldOutcome run_fold(const Dataset& d, const MethodSpec& method, const FoldPlan& folds,
                     const GridSpec& grid, const SolverConfig& solver, int fold) {
  FoldOutcome outcome;
  outcome.fold = fold;

  std::vector<int> train_rows;
  std::vector<int> test_rows;
  for (std::size_t i = 0; i < folds.assignments.size(); ++i) {
    (folds.assignments[i] == fold ? test_rows : train_rows).push_back(static_cast<int>(i));
  }
  const Dataset train = d.subset(train_rows);
  const Dataset test = d.subset(test_rows);
  const Metric selection = selection_metric_for(grid, d.task);

  const std::vector<GridPoint> points = grid_points(method, grid);
  GridPoint best = points.front();

  if (points.size() > 1) {
    const auto [val_rows, sub_rows] =
        carve_validation(train, grid.validation_fraction,
                         mix_seed(folds.seed, static_cast<std::uint64_t>(fold)));
    const Dataset val = train.subset(val_rows);
    const Dataset sub = train.subset(sub_rows);
    auto [sub_norm, sub_stats] = normalize_features(sub);
    const Eigen::MatrixXd val_features = sub_stats.apply(val.features);

    const bool glm_method =
        method.kind == MethodSpec::Kind::Sblr || method.kind == MethodSpec::Kind::SparseSblr;

    double best_score = kNegInf;
    // points are gamma-outer: one evidence fit serves the whole lambda block
    std::size_t at = 0;
    while (at < points.size()) {
      std::size_t block_end = at;
      while (block_end + 1 < points.size() && points[block_end + 1].gamma == points[at].gamma) {
        ++block_end;
      }
      std::optional<EvidenceFit> evidence;
      bool gamma_usable = true;
      if (glm_method) {
        try {
          evidence = fit_evidence_detailed(sub_norm.features, sub_norm.labels,
                                           sub_norm.n_classes(),
                                           {KernelKind::Rbf, points[at].gamma});
        } catch (const DataError&) {
          gamma_usable = false;  // degenerate carve; block stays unselectable
        }
      }
      for (std::size_t idx = at; gamma_usable && idx <= block_end; ++idx) {
        const GridPoint& point = points[idx];
        double score = kNegInf;
        try {
          FittedMethod f;
          if (evidence) {
            f.sblr = sblr_fit_with_evidence(*evidence, sub_norm.labels, sub_norm.label_names,
                                            d.task, point.lambda, solver);
          } else {
            f = fit_method(sub_norm, method, point.gamma, point.lambda, solver);
          }
          const MetricReport report =
              evaluate_batch(score_batch(f, val_features, val.labels, d.n_classes()), d.task);
          const double value = metric_value(report, selection);
          score = metric_higher_is_better(selection) ? value : -value;
        } catch (const DataError&) {
        }
        if (score > best_score) {
          best_score = score;
          best = point;
        }
      }
      at = block_end + 1;
    }
  }

  outcome.gamma = best.gamma;
  outcome.lambda = best.lambda;

  try {
    auto [train_norm, train_stats] = normalize_features(train);
    const FittedMethod f = fit_method(train_norm, method, best.gamma, best.lambda, solver);
    const Eigen::MatrixXd test_features = train_stats.apply(test.features);
    outcome.report =
        evaluate_batch(score_batch(f, test_features, test.labels, d.n_classes()), d.task);
  } catch (const DataError& e) {
    outcome.skipped = true;
    outcome.warning = e.what();
  }
  return outcome;
}

struct QTableEntry {
  double alpha;
  // index 0 corresponds to K = 2
  std::array<double, 9> q;
};

// Studentized range / sqrt(2) critical values for the Nemenyi test,
// alpha in {0.05, 0.10}, K = 2..10 (Demsar, JMLR 7, 2006, Table 5a).
constexpr QTableEntry kQTable[] = {
    {0.05, {1.960, 2.343, 2.569, 2.728, 2.850, 2.949, 3.031, 3.102, 3.164}},
    {0.10, {1.645, 2.052, 2.291, 2.459, 2.589, 2.693, 2.780, 2.855, 2.920}},
};

double q_alpha_for(double alpha, int k) {
  for (const QTableEntry& entry : kQTable) {
    if (std::abs(entry.alpha - alpha) < 1e-12) {
      if (k < 2 || k > 10) {
        throw DataError("Nemenyi q constants cover 2..10 methods, got " + std::to_string(k));
      }
      return entry.q[static_cast<std::size_t>(k - 2)];
    }
  }
  throw DataError("Nemenyi q constants available for alpha 0.05 and 0.10 only");
}

}  // namespace

Metric selection_metric_for(const GridSpec& grid, Task task) {
  if (grid.selection_metric) return *grid.selection_metric;
  return task == Task::MultiLabel ? Metric::AveragePrecision : Metric::Accuracy;
}

std::string MethodSpec::display_name() const {
  return name.empty() ? method_kind_name(kind) : name;
}

bool MethodSpec::tunes_gamma() const {
  const bool kernel_based = kind == Kind::Sml || kind == Kind::Sblr || kind == Kind::SparseSblr;
  return kernel_based && !gamma.has_value();
}

bool MethodSpec::tunes_lambda() const {
  return kind == Kind::SparseSblr && !lambda.has_value();
}

const char* method_kind_name(MethodSpec::Kind k) {
  switch (k) {
    case MethodSpec::Kind::Sml: return "sml";
    case MethodSpec::Kind::Sblr: return "sblr";
    case MethodSpec::Kind::SparseSblr: return "sparsesblr";
    case MethodSpec::Kind::Knn: return "knn";
    case MethodSpec::Kind::Ncm: return "ncm";
    case MethodSpec::Kind::Lr: return "lr";
  }
  return "?";
}

MethodSpec::Kind method_kind_from_name(const std::string& name) {
  for (MethodSpec::Kind k :
       {MethodSpec::Kind::Sml, MethodSpec::Kind::Sblr, MethodSpec::Kind::SparseSblr,
        MethodSpec::Kind::Knn, MethodSpec::Kind::Ncm, MethodSpec::Kind::Lr}) {
    if (name == method_kind_name(k)) return k;
  }
  throw DataError("unknown method kind: " + name);
}

int CvResult::n_skipped() const {
  return static_cast<int>(std::count_if(folds.begin(), folds.end(),
                                        [](const FoldOutcome& f) { return f.skipped; }));
}

std::optional<double> CvResult::mean_metric(Metric m) const {
  double total = 0.0;
  int count = 0;
  for (const FoldOutcome& fold : folds) {
    if (fold.skipped) continue;
    try {
      total += metric_value(fold.report, m);
      ++count;
    } catch (const DataError&) {
    }
  }
  if (count == 0) return std::nullopt;
  return total / count;
}

CvResult run_cv(const Dataset& d, const MethodSpec& method, const FoldPlan& folds,
                const GridSpec& grid, const SolverConfig& solver, int jobs) {
  if (folds.assignments.size() != static_cast<std::size_t>(d.n_instances())) {
    throw DataError("fold plan does not match dataset size");
  }
  CvResult result;
  result.folds.resize(static_cast<std::size_t>(folds.fold_count));
  parallel_for(folds.fold_count, jobs, [&](int fold) {
    result.folds[static_cast<std::size_t>(fold)] =
        run_fold(d, method, folds, grid, solver, fold);
  });
  return result;
}

RankTable rank_methods(const std::vector<std::string>& datasets,
                       const std::vector<std::string>& methods, const Eigen::MatrixXd& values,
                       bool higher_is_better) {
  const Eigen::Index n_datasets = values.rows();
  const Eigen::Index n_methods = values.cols();
  if (n_datasets != static_cast<Eigen::Index>(datasets.size()) ||
      n_methods != static_cast<Eigen::Index>(methods.size())) {
    throw DataError("rank table dimensions do not match the name lists");
  }
  for (Eigen::Index i = 0; i < n_datasets; ++i) {
    for (Eigen::Index j = 0; j < n_methods; ++j) {
      if (!std::isfinite(values(i, j))) {
        throw DataError("missing result for dataset '" + datasets[static_cast<std::size_t>(i)] +
                        "', method '" + methods[static_cast<std::size_t>(j)] + "'");
      }
    }
  }

  RankTable table;
  table.methods = methods;
  table.datasets = datasets;
  table.ranks.resize(n_datasets, n_methods);
  for (Eigen::Index i = 0; i < n_datasets; ++i) {
    std::vector<int> order(static_cast<std::size_t>(n_methods));
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
      const double va = values(i, a);
      const double vb = values(i, b);
      if (va != vb) return higher_is_better ? va > vb : va < vb;
      return a < b;
    });
    // average ranks across tied values
    std::size_t pos = 0;
    while (pos < order.size()) {
      std::size_t end = pos;
      while (end + 1 < order.size() &&
             values(i, order[end + 1]) == values(i, order[pos])) {
        ++end;
      }
      const double shared_rank = (static_cast<double>(pos + 1) + static_cast<double>(end + 1)) / 2.0;
      for (std::size_t t = pos; t <= end; ++t) table.ranks(i, order[t]) = shared_rank;
      pos = end + 1;
    }
  }
  table.average_rank = table.ranks.colwise().mean();
  return table;
}

NemenyiResult nemenyi_from_ranks(const std::vector<std::string>& methods,
                                 const Eigen::VectorXd& average_ranks, int n_datasets,
                                 double alpha) {
  const int k = static_cast<int>(methods.size());
  if (k < 2) throw DataError("Nemenyi test needs at least two methods");
  if (n_datasets < 2) throw DataError("Nemenyi test needs at least two datasets");
  if (average_ranks.size() != k) throw DataError("average rank vector does not match methods");

  NemenyiResult result;
  result.alpha = alpha;
  result.q_alpha = q_alpha_for(alpha, k);
  result.n_datasets = n_datasets;
  result.methods = methods;
  result.average_rank = average_ranks;
  result.critical_difference =
      result.q_alpha * std::sqrt(static_cast<double>(k) * (k + 1) / (6.0 * n_datasets));
  result.significant.assign(static_cast<std::size_t>(k),
                            std::vector<bool>(static_cast<std::size_t>(k), false));
  for (int a = 0; a < k; ++a) {
    for (int b = 0; b < k; ++b) {
      if (a == b) continue;
      result.significant[static_cast<std::size_t>(a)][static_cast<std::size_t>(b)] =
          std::abs(average_ranks(a) - average_ranks(b)) > result.critical_difference;
    }
  }
  return result;
}

NemenyiResult nemenyi(const RankTable& table, double alpha) {
  NemenyiResult result = nemenyi_from_ranks(table.methods, table.average_rank,
                                            static_cast<int>(table.datasets.size()), alpha);
  // Friedman statistics, reported alongside the critical difference
  const double n = static_cast<double>(table.datasets.size());
  const double k = static_cast<double>(table.methods.size());
  double rank_sq = 0.0;
  for (Eigen::Index j = 0; j < table.average_rank.size(); ++j) {
    rank_sq += table.average_rank(j) * table.average_rank(j);
  }
  result.friedman_chi2 = 12.0 * n / (k * (k + 1.0)) * (rank_sq - k * (k + 1.0) * (k + 1.0) / 4.0);
  const double denom = n * (k - 1.0) - result.friedman_chi2;
  result.friedman_f =
      denom > 0.0 ? (n - 1.0) * result.friedman_chi2 / denom
                  : std::numeric_limits<double>::infinity();
  return result;
}

std::vector<CoefficientReportRow> coefficient_report(const SblrModel& m, const Dataset& train,
                                                     int focus_class) {
  const int n_classes = static_cast<int>(m.coefficients.betas.rows());
  if (focus_class < 0 || focus_class >= n_classes) {
    throw DataError("focus class index out of range");
  }
  if (train.n_classes() != n_classes) {
    throw DataError("dataset class count does not match the model");
  }

  std::vector<CoefficientReportRow> rows;
  rows.reserve(static_cast<std::size_t>(n_classes));
  for (int t = 0; t < n_classes; ++t) {
    CoefficientReportRow row;
    row.class_index = t;
    row.class_name = train.label_names[static_cast<std::size_t>(t)];
    row.coefficient = m.coefficients.betas(focus_class, t + 1);
    for (const auto& set : train.labels) {
      if (std::binary_search(set.begin(), set.end(), focus_class) &&
          std::binary_search(set.begin(), set.end(), t)) {
        ++row.co_occurrence;
      }
    }
    rows.push_back(std::move(row));
  }
  std::stable_sort(rows.begin(), rows.end(),
                   [](const CoefficientReportRow& a, const CoefficientReportRow& b) {
                     if (a.co_occurrence != b.co_occurrence) {
                       return a.co_occurrence > b.co_occurrence;
                     }
                     return a.class_index < b.class_index;
                   });
  return rows;
}

}  // namespace sbc
