#pragma once

#include <Eigen/Core>
#include <string>
#include <vector>

#include "sbc/dataset.hpp"

namespace sbc {

enum class KernelKind { Rbf };

const char* kernel_name(KernelKind k);
KernelKind kernel_from_name(const std::string& name);

struct KernelConfig {
  KernelKind kind = KernelKind::Rbf;
  double gamma = 1.0;  // RBF width, must be positive
};

// exp(-gamma * ||a-b||^2); always in (0, 1].
double kernel_eval(const KernelConfig& cfg, const Eigen::VectorXd& a, const Eigen::VectorXd& b);

// Fitted similarity-evidence extractor. For a query x the raw evidence of
// class k is the summed kernel similarity to every stored training instance
// of that class; evidence_min/max hold the per-class range observed on the
// training evidence matrix and drive min-max normalization of queries.
struct EvidenceTransform {
  KernelConfig kernel;
  Eigen::MatrixXd train_features;             // normalized training instances
  std::vector<std::vector<int>> class_index;  // training rows per class
  Eigen::VectorXd evidence_min;
  Eigen::VectorXd evidence_max;

  int n_classes() const { return static_cast<int>(class_index.size()); }
  Eigen::Index n_train() const { return train_features.rows(); }
  Eigen::Index n_features() const { return train_features.cols(); }
};

// fit_evidence plus the raw N x m training evidence matrix, which model
// training reuses as its design input without recomputation.
struct EvidenceFit {
  EvidenceTransform transform;
  Eigen::MatrixXd train_evidence;
};

EvidenceFit fit_evidence_detailed(const Eigen::MatrixXd& features,
                                  const std::vector<std::vector<int>>& labels, int n_classes,
                                  const KernelConfig& cfg);
EvidenceTransform fit_evidence(const Dataset& d, const KernelConfig& cfg);

// Raw or min-max normalized evidence for one query (query must already be
// feature-normalized with the training NormStats). Normalized values clip
// to [0, 1]; constant evidence columns map to 0.
Eigen::VectorXd evidence_for(const EvidenceTransform& t, const Eigen::VectorXd& x, bool normalized);

// Batched evidence_for over the rows of x.
Eigen::MatrixXd evidence_matrix(const EvidenceTransform& t, const Eigen::MatrixXd& x,
                                bool normalized);

// Applies the stored training min-max map to raw evidence values.
Eigen::MatrixXd normalize_evidence(const EvidenceTransform& t, const Eigen::MatrixXd& raw);

}  // namespace sbc
