#pragma once

#include <Eigen/Core>
#include <string>
#include <vector>

#include "sbc/dataset.hpp"
#include "sbc/optim.hpp"
#include "sbc/similarity.hpp"

namespace sbc {

// Row k holds beta^k = [intercept, one weight per evidence column].
struct CoefficientMatrix {
  Eigen::MatrixXd betas;  // m x (m+1)
};

// Per-class logistic GLM over normalized similarity evidence. l1_lambda == 0
// is the unpenalized variant; > 0 adds the l1 penalty and 1/n scaling.
struct SblrModel {
  EvidenceTransform evidence;
  CoefficientMatrix coefficients;
  Task task = Task::MultiLabel;
  double l1_lambda = 0.0;
  std::vector<int> solver_iterations;  // per class, for training summaries
};

SblrModel sblr_fit(const Dataset& d, const KernelConfig& kernel, double l1_lambda,
                   const SolverConfig& solver);

// Variant over a prefitted evidence transform, so a hyperparameter sweep can
// reuse one transform per kernel width across the penalty grid.
SblrModel sblr_fit_with_evidence(const EvidenceFit& fit,
                                 const std::vector<std::vector<int>>& labels,
                                 const std::vector<std::string>& label_names, Task task,
                                 double l1_lambda, const SolverConfig& solver);

Eigen::VectorXd sblr_posteriors(const SblrModel& m, const Eigen::VectorXd& x);

struct SetPrediction {
  std::vector<int> labels;
  bool used_fallback = false;  // all posteriors below 1/2, top class emitted
};

// MultiLabel: classes with posterior >= 1/2, falling back to the single top
// class when that set is empty. MultiClass: the argmax class.
SetPrediction sblr_predict(const SblrModel& m, const Eigen::VectorXd& x);

enum class BaselineKind { Knn, Ncm, Lr };

const char* baseline_name(BaselineKind k);

// Multi-class reference methods: k-nearest-neighbor vote, nearest class
// mean, and one-vs-rest logistic regression on the raw (normalized) features.
struct BaselineModel {
  BaselineKind kind = BaselineKind::Knn;
  int n_classes = 0;
  int knn_k = 5;
  Eigen::MatrixXd train_features;  // Knn
  std::vector<int> train_classes;  // Knn
  Eigen::MatrixXd class_means;       // Ncm: m x d
  Eigen::MatrixXd lr_coefficients;   // Lr: m x (d+1)
};

BaselineModel baseline_fit(const Dataset& d, BaselineKind kind, const SolverConfig& solver,
                           int knn_k = 5);

// Per-class decision scores (vote counts, negated mean distances, or
// one-vs-rest activations) used for ranking.
Eigen::VectorXd baseline_scores(const BaselineModel& m, const Eigen::VectorXd& x);

std::vector<int> baseline_predict(const BaselineModel& m, const Eigen::VectorXd& x);

}  // namespace sbc
