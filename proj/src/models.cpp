#include "sbc/models.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "sbc/errors.hpp"
#include "sbc/sml.hpp"

namespace sbc {

namespace {

double sigmoid(double a) {
  if (a >= 0.0) {
    return 1.0 / (1.0 + std::exp(-a));
  }
  const double e = std::exp(a);
  return e / (1.0 + e);
}

Eigen::MatrixXd with_intercept(const Eigen::MatrixXd& x) {
  Eigen::MatrixXd design(x.rows(), x.cols() + 1);
  design.col(0).setOnes();
  design.rightCols(x.cols()) = x;
  return design;
}

}  // namespace

SblrModel sblr_fit_with_evidence(const EvidenceFit& fit,
                                 const std::vector<std::vector<int>>& labels,
                                 const std::vector<std::string>& label_names, Task task,
                                 double l1_lambda, const SolverConfig& solver) {
  if (l1_lambda < 0.0) throw DataError("l1_lambda must be nonnegative");
  const int m = fit.transform.n_classes();
  const Eigen::Index n = fit.train_evidence.rows();

  SblrModel model;
  model.task = task;
  model.l1_lambda = l1_lambda;
  model.evidence = fit.transform;

  GlmProblem problem;
  problem.design = with_intercept(normalize_evidence(fit.transform, fit.train_evidence));
  problem.l1_lambda = l1_lambda;
  problem.penalize_intercept = false;
  problem.scale_by_n = l1_lambda > 0.0;

  model.coefficients.betas.resize(m, m + 1);
  model.solver_iterations.resize(static_cast<std::size_t>(m));
  for (int k = 0; k < m; ++k) {
    problem.targets.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      problem.targets(i) = std::binary_search(labels[static_cast<std::size_t>(i)].begin(),
                                              labels[static_cast<std::size_t>(i)].end(), k)
                               ? 1.0
                               : 0.0;
    }
    try {
      const GlmSolution sol =
          l1_lambda > 0.0 ? solve_l1(problem, solver) : solve_smooth(problem, solver);
      model.coefficients.betas.row(k) = sol.beta.transpose();
      model.solver_iterations[static_cast<std::size_t>(k)] = sol.iterations;
    } catch (const NumericError& e) {
      throw NumericError("solver failed for class " + std::to_string(k) + " ('" +
                         label_names[static_cast<std::size_t>(k)] + "'): " + e.what());
    }
  }
  return model;
}

SblrModel sblr_fit(const Dataset& d, const KernelConfig& kernel, double l1_lambda,
                   const SolverConfig& solver) {
  const EvidenceFit fit = fit_evidence_detailed(d.features, d.labels, d.n_classes(), kernel);
  return sblr_fit_with_evidence(fit, d.labels, d.label_names, d.task, l1_lambda, solver);
}

Eigen::VectorXd sblr_posteriors(const SblrModel& m, const Eigen::VectorXd& x) {
  const Eigen::VectorXd evidence = evidence_for(m.evidence, x, /*normalized=*/true);
  Eigen::VectorXd z(evidence.size() + 1);
  z(0) = 1.0;
  z.tail(evidence.size()) = evidence;
  Eigen::VectorXd posteriors(m.coefficients.betas.rows());
  for (Eigen::Index k = 0; k < posteriors.size(); ++k) {
    posteriors(k) = sigmoid(m.coefficients.betas.row(k).dot(z));
  }
  return posteriors;
}

SetPrediction sblr_predict(const SblrModel& m, const Eigen::VectorXd& x) {
  const Eigen::VectorXd posteriors = sblr_posteriors(m, x);
  SetPrediction out;
  if (m.task == Task::MultiClass) {
    out.labels = {argmax_lowest(posteriors)};
    return out;
  }
  for (int k = 0; k < posteriors.size(); ++k) {
    if (posteriors(k) >= 0.5) out.labels.push_back(k);
  }
  if (out.labels.empty()) {
    out.labels = {argmax_lowest(posteriors)};
    out.used_fallback = true;
  }
  return out;
}

const char* baseline_name(BaselineKind k) {
  switch (k) {
    case BaselineKind::Knn: return "knn";
    case BaselineKind::Ncm: return "ncm";
    case BaselineKind::Lr: return "lr";
  }
  return "?";
}

BaselineModel baseline_fit(const Dataset& d, BaselineKind kind, const SolverConfig& solver,
                           int knn_k) {
  if (d.task != Task::MultiClass) {
    throw DataError("baseline classifiers require a multi-class dataset");
  }
  BaselineModel m;
  m.kind = kind;
  m.n_classes = d.n_classes();

  switch (kind) {
    case BaselineKind::Knn: {
      if (knn_k < 1) throw DataError("knn requires k >= 1");
      m.knn_k = knn_k;
      m.train_features = d.features;
      m.train_classes.reserve(d.labels.size());
      for (const auto& set : d.labels) m.train_classes.push_back(set[0]);
      break;
    }
    case BaselineKind::Ncm: {
      m.class_means = Eigen::MatrixXd::Zero(m.n_classes, d.n_features());
      Eigen::VectorXd counts = Eigen::VectorXd::Zero(m.n_classes);
      for (Eigen::Index i = 0; i < d.n_instances(); ++i) {
        const int c = d.labels[static_cast<std::size_t>(i)][0];
        m.class_means.row(c) += d.features.row(i);
        counts(c) += 1.0;
      }
      for (int c = 0; c < m.n_classes; ++c) {
        if (counts(c) == 0.0) {
          throw DataError("class " + std::to_string(c) + " has no training instances");
        }
        m.class_means.row(c) /= counts(c);
      }
      break;
    }
    case BaselineKind::Lr: {
      GlmProblem problem;
      problem.design = with_intercept(d.features);
      problem.l1_lambda = 0.0;
      m.lr_coefficients.resize(m.n_classes, d.n_features() + 1);
      for (int c = 0; c < m.n_classes; ++c) {
        problem.targets.resize(d.n_instances());
        for (Eigen::Index i = 0; i < d.n_instances(); ++i) {
          problem.targets(i) = d.labels[static_cast<std::size_t>(i)][0] == c ? 1.0 : 0.0;
        }
        m.lr_coefficients.row(c) = solve_smooth(problem, solver).beta.transpose();
      }
      break;
    }
  }
  return m;
}

Eigen::VectorXd baseline_scores(const BaselineModel& m, const Eigen::VectorXd& x) {
  Eigen::VectorXd scores = Eigen::VectorXd::Zero(m.n_classes);
  switch (m.kind) {
    case BaselineKind::Knn: {
      if (x.size() != m.train_features.cols()) throw DataError("query dimension mismatch");
      const Eigen::Index n = m.train_features.rows();
      std::vector<int> order(static_cast<std::size_t>(n));
      std::iota(order.begin(), order.end(), 0);
      Eigen::VectorXd dist =
          (m.train_features.rowwise() - x.transpose()).rowwise().squaredNorm();
      std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
        if (dist(a) != dist(b)) return dist(a) < dist(b);
        return a < b;  // deterministic on distance ties
      });
      const int k = std::min<int>(m.knn_k, static_cast<int>(n));
      for (int i = 0; i < k; ++i) {
        scores(m.train_classes[static_cast<std::size_t>(order[static_cast<std::size_t>(i)])]) +=
            1.0;
      }
      break;
    }
    case BaselineKind::Ncm: {
      if (x.size() != m.class_means.cols()) throw DataError("query dimension mismatch");
      scores = -(m.class_means.rowwise() - x.transpose()).rowwise().norm();
      break;
    }
    case BaselineKind::Lr: {
      if (x.size() + 1 != m.lr_coefficients.cols()) throw DataError("query dimension mismatch");
      Eigen::VectorXd z(x.size() + 1);
      z(0) = 1.0;
      z.tail(x.size()) = x;
      scores = m.lr_coefficients * z;
      break;
    }
  }
  return scores;
}

std::vector<int> baseline_predict(const BaselineModel& m, const Eigen::VectorXd& x) {
  return {argmax_lowest(baseline_scores(m, x))};
}

}  // namespace sbc
