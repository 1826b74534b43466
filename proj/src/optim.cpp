#include "sbc/optim.hpp"

#include <cmath>
#include <string>

#include "sbc/errors.hpp"

namespace sbc {

namespace {

// log(1 + exp(a)) without overflow: max(a, 0) + log1p(exp(-|a|)).
double log1p_exp(double a) { return std::max(a, 0.0) + std::log1p(std::exp(-std::abs(a))); }

double sigmoid(double a) {
  if (a >= 0.0) {
    return 1.0 / (1.0 + std::exp(-a));
  }
  const double e = std::exp(a);
  return e / (1.0 + e);
}

void check_dims(const GlmProblem& p, const Eigen::VectorXd& beta) {
  if (p.design.cols() != beta.size()) {
    throw DataError("beta has " + std::to_string(beta.size()) + " entries, design has " +
                    std::to_string(p.design.cols()) + " columns");
  }
  if (p.design.rows() != p.targets.size()) {
    throw DataError("targets do not match design row count");
  }
}

double penalty(const GlmProblem& p, const Eigen::VectorXd& beta) {
  if (p.l1_lambda == 0.0) return 0.0;
  double sum = beta.lpNorm<1>();
  if (!p.penalize_intercept) sum -= std::abs(beta(0));
  return p.l1_lambda * sum;
}

Eigen::VectorXd prox_l1(const GlmProblem& p, const Eigen::VectorXd& v, double step) {
  Eigen::VectorXd out(v.size());
  const double t = step * p.l1_lambda;
  for (Eigen::Index j = 0; j < v.size(); ++j) {
    const bool penalized = p.penalize_intercept || j != 0;
    out(j) = penalized ? soft_threshold(v(j), t) : v(j);
  }
  return out;
}

void check_finite(double objective) {
  if (!std::isfinite(objective)) {
    throw NumericError("objective became non-finite (bad conditioning)");
  }
}

}  // namespace

double nll(const GlmProblem& p, const Eigen::VectorXd& beta) {
  check_dims(p, beta);
  const Eigen::VectorXd activations = p.design * beta;
  double total = 0.0;
  for (Eigen::Index i = 0; i < activations.size(); ++i) {
    total += -p.targets(i) * activations(i) + log1p_exp(activations(i));
  }
  return p.scale_by_n ? total / static_cast<double>(p.design.rows()) : total;
}

Eigen::VectorXd nll_gradient(const GlmProblem& p, const Eigen::VectorXd& beta) {
  check_dims(p, beta);
  const Eigen::VectorXd activations = p.design * beta;
  Eigen::VectorXd residual(activations.size());
  for (Eigen::Index i = 0; i < activations.size(); ++i) {
    residual(i) = sigmoid(activations(i)) - p.targets(i);
  }
  Eigen::VectorXd grad = p.design.transpose() * residual;
  if (p.scale_by_n) grad /= static_cast<double>(p.design.rows());
  return grad;
}

double soft_threshold(double v, double t) {
  if (v > t) return v - t;
  if (v < -t) return v + t;
  return 0.0;
}

double l1_objective(const GlmProblem& p, const Eigen::VectorXd& beta) {
  return nll(p, beta) + penalty(p, beta);
}

GlmSolution solve_smooth(const GlmProblem& p, const SolverConfig& cfg) {
  if (p.l1_lambda != 0.0) throw DataError("solve_smooth requires l1_lambda == 0");

  constexpr double kArmijo = 1e-4;
  Eigen::VectorXd beta = Eigen::VectorXd::Zero(p.design.cols());
  double objective = nll(p, beta);
  check_finite(objective);
  double step = cfg.step_init;

  GlmSolution sol;
  for (int iter = 0; iter < cfg.max_iters; ++iter) {
    const Eigen::VectorXd grad = nll_gradient(p, beta);
    if (grad.lpNorm<Eigen::Infinity>() <= cfg.grad_tol) {
      sol.converged = true;
      break;
    }
    const double grad_sq = grad.squaredNorm();
    // warm-start the line search near the last accepted step
    step = std::min(step / cfg.backtrack_factor, cfg.step_init);
    Eigen::VectorXd candidate;
    double cand_obj;
    for (;;) {
      candidate = beta - step * grad;
      cand_obj = nll(p, candidate);
      if (std::isfinite(cand_obj) && cand_obj <= objective - kArmijo * step * grad_sq) break;
      step *= cfg.backtrack_factor;
      if (step < 1e-300) throw NumericError("line search failed (bad conditioning)");
    }
    beta = std::move(candidate);
    objective = cand_obj;
    sol.iterations = iter + 1;
  }
  check_finite(objective);
  sol.beta = std::move(beta);
  sol.final_objective = objective;
  return sol;
}

GlmSolution solve_l1(const GlmProblem& p, const SolverConfig& cfg) {
  if (p.l1_lambda < 0.0) throw DataError("l1_lambda must be nonnegative");

  Eigen::VectorXd beta = Eigen::VectorXd::Zero(p.design.cols());
  Eigen::VectorXd momentum_point = beta;
  double t_k = 1.0;
  double objective = l1_objective(p, beta);
  check_finite(objective);
  double step = cfg.step_init;

  GlmSolution sol;
  for (int iter = 0; iter < cfg.max_iters; ++iter) {
    // proximal gradient step from the extrapolated point, backtracking on the
    // quadratic upper bound of the smooth part
    auto prox_step = [&](const Eigen::VectorXd& y) {
      const double smooth_y = nll(p, y);
      const Eigen::VectorXd grad_y = nll_gradient(p, y);
      for (;;) {
        Eigen::VectorXd candidate = prox_l1(p, y - step * grad_y, step);
        const Eigen::VectorXd diff = candidate - y;
        const double bound =
            smooth_y + grad_y.dot(diff) + diff.squaredNorm() / (2.0 * step);
        const double smooth_cand = nll(p, candidate);
        if (std::isfinite(smooth_cand) && smooth_cand <= bound + 1e-12) return candidate;
        step *= cfg.backtrack_factor;
        if (step < 1e-300) throw NumericError("proximal step failed (bad conditioning)");
      }
    };

    Eigen::VectorXd next = prox_step(momentum_point);
    double next_obj = l1_objective(p, next);
    if (next_obj > objective) {
      // restart: drop momentum and take a plain proximal step from beta,
      // which cannot increase the composite objective
      t_k = 1.0;
      next = prox_step(beta);
      next_obj = l1_objective(p, next);
    }
    check_finite(next_obj);

    const double t_next = (1.0 + std::sqrt(1.0 + 4.0 * t_k * t_k)) / 2.0;
    momentum_point = next + ((t_k - 1.0) / t_next) * (next - beta);
    t_k = t_next;

    const double change = objective - next_obj;
    beta = std::move(next);
    objective = next_obj;
    sol.iterations = iter + 1;
    if (change >= 0.0 && change <= cfg.grad_tol) {
      sol.converged = true;
      break;
    }
  }
  sol.beta = std::move(beta);
  sol.final_objective = objective;
  return sol;
}

}  // namespace sbc
