#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace sbc {

enum class Task { MultiLabel, MultiClass };

const char* task_name(Task t);
Task task_from_name(const std::string& name);

// Feature matrix plus per-instance label-index sets. Label sets are kept
// sorted; for MultiClass every set is a singleton.
struct Dataset {
  Eigen::MatrixXd features;              // N x d
  std::vector<std::vector<int>> labels;  // N sorted index sets, indices < m
  std::vector<std::string> label_names;  // m
  std::vector<std::string> feature_names;  // d
  Task task = Task::MultiLabel;

  Eigen::Index n_instances() const { return features.rows(); }
  Eigen::Index n_features() const { return features.cols(); }
  int n_classes() const { return static_cast<int>(label_names.size()); }

  // Row-subset view used by cross-validation; label/feature names are shared.
  Dataset subset(const std::vector<int>& rows) const;
};

// Per-column affine map fitted on training features: x' = 2(x-min)/(max-min)-1.
// Constant columns map to 0. Values outside the training range clip to [-1, 1].
struct NormStats {
  Eigen::VectorXd col_min;
  Eigen::VectorXd col_max;

  Eigen::MatrixXd apply(const Eigen::MatrixXd& x) const;
  Eigen::VectorXd apply_row(const Eigen::VectorXd& x) const;
};

struct FoldPlan {
  int fold_count = 0;
  std::vector<int> assignments;  // instance index -> fold index
  std::uint64_t seed = 0;

  std::vector<std::vector<int>> fold_indices() const;
};

// MULAN multi-label distribution: ARFF data (dense or sparse rows) plus an
// XML file naming the label attributes. Nominal non-label attributes are
// one-hot expanded; '?' cells are imputed with the column mean.
Dataset load_arff_mulan(const std::string& data_path, const std::string& labels_xml_path);

// CSV with a header row; label_column is a column name or a 0-based index.
// Class indices follow first appearance order.
Dataset load_csv_mcc(const std::string& path, const std::string& label_column);

std::pair<Dataset, NormStats> normalize_features(const Dataset& d);

// Seeded shuffle followed by round-robin assignment.
FoldPlan make_folds(const Dataset& d, int k, std::uint64_t seed);

}  // namespace sbc
