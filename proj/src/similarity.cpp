#include "sbc/similarity.hpp"

#include <cmath>
#include <string>

#include "sbc/errors.hpp"

namespace sbc {

namespace {

// Pairwise squared distances between the rows of a and b.
Eigen::MatrixXd squared_distances(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  const Eigen::VectorXd a_sq = a.rowwise().squaredNorm();
  const Eigen::VectorXd b_sq = b.rowwise().squaredNorm();
  Eigen::MatrixXd d = (-2.0 * a * b.transpose());
  d.colwise() += a_sq;
  d.rowwise() += b_sq.transpose();
  return d.cwiseMax(0.0);  // guard tiny negative round-off
}

Eigen::MatrixXd raw_evidence(const EvidenceTransform& t, const Eigen::MatrixXd& x) {
  if (x.cols() != t.train_features.cols()) {
    throw DataError("evidence query has " + std::to_string(x.cols()) +
                    " features, transform expects " + std::to_string(t.train_features.cols()));
  }
  const Eigen::MatrixXd gram =
      (-t.kernel.gamma * squared_distances(x, t.train_features)).array().exp();
  Eigen::MatrixXd evidence(x.rows(), t.n_classes());
  for (int k = 0; k < t.n_classes(); ++k) {
    Eigen::VectorXd col = Eigen::VectorXd::Zero(x.rows());
    for (int j : t.class_index[static_cast<std::size_t>(k)]) col += gram.col(j);
    evidence.col(k) = col;
  }
  return evidence;
}

}  // namespace

const char* kernel_name(KernelKind k) {
  (void)k;
  return "rbf";
}

KernelKind kernel_from_name(const std::string& name) {
  if (name == "rbf") return KernelKind::Rbf;
  throw DataError("unknown kernel kind: " + name);
}

double kernel_eval(const KernelConfig& cfg, const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  if (a.size() != b.size()) {
    throw DataError("kernel arguments have mismatched dimensions: " + std::to_string(a.size()) +
                    " vs " + std::to_string(b.size()));
  }
  if (!(cfg.gamma > 0.0)) throw DataError("RBF gamma must be positive");
  return std::exp(-cfg.gamma * (a - b).squaredNorm());
}

EvidenceFit fit_evidence_detailed(const Eigen::MatrixXd& features,
                                  const std::vector<std::vector<int>>& labels, int n_classes,
                                  const KernelConfig& cfg) {
  if (!(cfg.gamma > 0.0)) throw DataError("RBF gamma must be positive");

  EvidenceTransform t;
  t.kernel = cfg;
  t.train_features = features;
  t.class_index.assign(static_cast<std::size_t>(n_classes), {});
  for (std::size_t i = 0; i < labels.size(); ++i) {
    for (int k : labels[i]) {
      t.class_index[static_cast<std::size_t>(k)].push_back(static_cast<int>(i));
    }
  }
  for (int k = 0; k < n_classes; ++k) {
    if (t.class_index[static_cast<std::size_t>(k)].empty()) {
      throw DataError("class " + std::to_string(k) +
                      " has no training instances (degenerate fold)");
    }
  }

  EvidenceFit fit;
  fit.train_evidence = raw_evidence(t, features);
  t.evidence_min = fit.train_evidence.colwise().minCoeff();
  t.evidence_max = fit.train_evidence.colwise().maxCoeff();
  fit.transform = std::move(t);
  return fit;
}

EvidenceTransform fit_evidence(const Dataset& d, const KernelConfig& cfg) {
  return fit_evidence_detailed(d.features, d.labels, d.n_classes(), cfg).transform;
}

Eigen::MatrixXd normalize_evidence(const EvidenceTransform& t, const Eigen::MatrixXd& raw) {
  Eigen::MatrixXd out(raw.rows(), raw.cols());
  for (Eigen::Index k = 0; k < raw.cols(); ++k) {
    const double lo = t.evidence_min(k);
    const double hi = t.evidence_max(k);
    if (hi > lo) {
      out.col(k) = ((raw.col(k).array() - lo) / (hi - lo)).cwiseMax(0.0).cwiseMin(1.0);
    } else {
      out.col(k).setZero();
    }
  }
  return out;
}

Eigen::MatrixXd evidence_matrix(const EvidenceTransform& t, const Eigen::MatrixXd& x,
                                bool normalized) {
  const Eigen::MatrixXd raw = raw_evidence(t, x);
  return normalized ? normalize_evidence(t, raw) : raw;
}

Eigen::VectorXd evidence_for(const EvidenceTransform& t, const Eigen::VectorXd& x,
                             bool normalized) {
  return evidence_matrix(t, x.transpose(), normalized).row(0);
}

}  // namespace sbc
