#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "sbc/dataset.hpp"
#include "sbc/models.hpp"
#include "sbc/sml.hpp"

namespace sbc {

// A trained classifier plus everything needed to score raw instances:
// the feature normalization map and the label/feature naming.
struct TrainedModel {
  std::string kind;  // sml | sblr | sparsesblr | knn | ncm | lr
  Task task = Task::MultiLabel;
  std::uint64_t seed = 0;
  std::vector<std::string> label_names;
  std::vector<std::string> feature_names;
  NormStats norm;
  std::variant<SmlModel, SblrModel, BaselineModel> model;
};

struct RowPrediction {
  Eigen::VectorXd scores;  // posteriors, raw evidence, or baseline scores
  std::vector<int> labels;
  bool used_fallback = false;
};

// Applies the stored normalization, then the wrapped classifier.
RowPrediction predict_row(const TrainedModel& m, const Eigen::VectorXd& raw_features);

void save_model(const TrainedModel& m, const std::string& path);
TrainedModel load_model(const std::string& path);

void save_norm_stats(const NormStats& stats, const std::string& path);
NormStats load_norm_stats(const std::string& path);

void save_fold_plan(const FoldPlan& plan, const std::string& path);
FoldPlan load_fold_plan(const std::string& path);

// Writes via a temporary file in the same directory plus an atomic rename,
// so interrupted runs never leave truncated outputs.
void write_text_atomic(const std::string& path, const std::string& content);

}  // namespace sbc
