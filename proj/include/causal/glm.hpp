#pragma once

#include <optional>
#include <string>

#include <Eigen/Dense>

namespace causal::glm {

double sigmoid(double t);
// log(1 + exp(t)) without overflow.
double log1pexp(double t);

struct LogisticOptions {
    double tolerance = 1e-8;     // on the max-norm of the Newton step
    int max_iterations = 100;
    double ridge_lambda = 0.0;   // penalty (lambda / 2) * ||beta||^2, intercept included
    bool ridge_fallback = true;  // retry with kFallbackRidge on divergence or separation
    double separation_bound = 30.0;
};

inline constexpr double kFallbackRidge = 1e-6;

struct LogisticFit {
    Eigen::VectorXd beta;  // aligned with the design matrix columns
    double loglik = 0.0;   // unpenalized
    int iterations = 0;
    bool converged = false;
    bool ridge_used = false;
    double lambda = 0.0;
    std::string diagnostic;
};

// Weighted Bernoulli log-likelihood sum_i w_i [y_i eta_i - log(1 + e^eta_i)].
// y may be fractional (soft targets).
double logistic_loglik(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const Eigen::VectorXd& beta,
                       const Eigen::VectorXd* weights = nullptr);
Eigen::VectorXd logistic_gradient(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const Eigen::VectorXd& beta,
                                  const Eigen::VectorXd* weights = nullptr);

// Newton/IRLS with step halving. `x` must already contain any intercept
// column. `start` warm-starts the iteration.
LogisticFit fit_logistic_irls(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                              const Eigen::VectorXd* weights = nullptr, const LogisticOptions& opts = {},
                              const std::optional<Eigen::VectorXd>& start = std::nullopt);

struct LinearFit {
    Eigen::VectorXd beta;
    double rss = 0.0;
};

LinearFit fit_ols(const Eigen::MatrixXd& x, const Eigen::VectorXd& y);

// Multinomial logistic regression with soft targets (rows of `targets` sum
// to 1). Class 0 is the reference: coef.row(0) stays zero. Performs at most
// `newton_steps` damped Newton steps from `coef`, each accepted only if the
// objective does not decrease. Returns the objective value.
double fit_softmax_soft(const Eigen::MatrixXd& x, const Eigen::MatrixXd& targets, Eigen::MatrixXd& coef,
                        int newton_steps = 25, double tolerance = 1e-10);
double softmax_objective(const Eigen::MatrixXd& x, const Eigen::MatrixXd& targets, const Eigen::MatrixXd& coef);

// Row-wise softmax of the K scores x * coef^T.
Eigen::MatrixXd softmax_rows(const Eigen::MatrixXd& scores);

}  // namespace causal::glm
