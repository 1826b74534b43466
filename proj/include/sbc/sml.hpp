#pragma once

#include <Eigen/Core>
#include <optional>
#include <vector>

#include "sbc/dataset.hpp"
#include "sbc/similarity.hpp"

namespace sbc {

// Lazy similarity classifier. Classes are ranked by raw evidence; for
// multi-label tasks the predicted set size comes from a second evidence
// transform over the label-set sizes seen in training.
struct SmlModel {
  EvidenceTransform class_evidence;
  Task task = Task::MultiClass;
  std::optional<EvidenceTransform> size_evidence;  // present iff MultiLabel
  std::vector<int> size_values;                    // distinct |L_i|, ascending
};

SmlModel sml_fit(const Dataset& d, const KernelConfig& cfg);

// Raw class evidence used for ranking metrics.
Eigen::VectorXd sml_scores(const SmlModel& m, const Eigen::VectorXd& x);

std::vector<int> sml_predict(const SmlModel& m, const Eigen::VectorXd& x);

// Index of the largest entry; ties resolve to the lowest index.
int argmax_lowest(const Eigen::VectorXd& v);

// The xi highest-evidence classes; ties at the boundary resolve to the
// lowest class index. Result is sorted ascending.
std::vector<int> top_classes(const Eigen::VectorXd& evidence, int xi);

}  // namespace sbc
