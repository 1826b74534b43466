#pragma once

#include <Eigen/Core>

namespace sbc {

// Binary logistic regression over a fixed design matrix. Column 0 of the
// design is the intercept column of ones; scale_by_n selects between the
// plain summed negative log-likelihood and its 1/n-scaled form.
struct GlmProblem {
  Eigen::MatrixXd design;   // n x p
  Eigen::VectorXd targets;  // n entries in {0, 1}
  double l1_lambda = 0.0;
  bool penalize_intercept = false;
  bool scale_by_n = false;
};

struct SolverConfig {
  int max_iters = 1000;
  double grad_tol = 1e-6;
  double step_init = 1.0;
  double backtrack_factor = 0.5;
};

struct GlmSolution {
  Eigen::VectorXd beta;
  double final_objective = 0.0;
  int iterations = 0;
  bool converged = false;
};

// sum_i (-y_i b.z_i + log(1 + exp(b.z_i))), divided by n when scale_by_n.
double nll(const GlmProblem& p, const Eigen::VectorXd& beta);

// Z^T (sigma(Z beta) - y), with the same scaling as nll.
Eigen::VectorXd nll_gradient(const GlmProblem& p, const Eigen::VectorXd& beta);

// sign(v) * max(|v| - t, 0): the proximal operator of t*|.|.
double soft_threshold(double v, double t);

// nll plus the l1 penalty over the penalized coordinates.
double l1_objective(const GlmProblem& p, const Eigen::VectorXd& beta);

// Gradient descent with Armijo backtracking from beta = 0. Requires
// l1_lambda == 0; stops when the max-norm of the gradient drops below
// grad_tol.
GlmSolution solve_smooth(const GlmProblem& p, const SolverConfig& cfg);

// FISTA (accelerated proximal gradient) with step backtracking and restart
// on objective increase, from beta = 0. Converged when the composite
// objective changes by at most grad_tol over a step.
GlmSolution solve_l1(const GlmProblem& p, const SolverConfig& cfg);

}  // namespace sbc
