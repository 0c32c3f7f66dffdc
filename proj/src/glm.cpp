#include "causal/glm.hpp"

#include <cmath>

#include "causal/error.hpp"

namespace causal::glm {

double sigmoid(double t) {
    return t >= 0 ? 1.0 / (1.0 + std::exp(-t)) : std::exp(t) / (1.0 + std::exp(t));
}

double log1pexp(double t) {
    return t > 0 ? t + std::log1p(std::exp(-t)) : std::log1p(std::exp(t));
}

double logistic_loglik(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const Eigen::VectorXd& beta,
                       const Eigen::VectorXd* weights) {
    const Eigen::VectorXd eta = x * beta;
    double ll = 0.0;
    for (Eigen::Index i = 0; i < eta.size(); ++i) {
        const double w = weights ? (*weights)(i) : 1.0;
        if (w == 0.0) continue;
        ll += w * (y(i) * eta(i) - log1pexp(eta(i)));
    }
    return ll;
}

Eigen::VectorXd logistic_gradient(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const Eigen::VectorXd& beta,
                                  const Eigen::VectorXd* weights) {
    const Eigen::VectorXd eta = x * beta;
    Eigen::VectorXd r(eta.size());
    for (Eigen::Index i = 0; i < eta.size(); ++i) r(i) = (weights ? (*weights)(i) : 1.0) * (y(i) - sigmoid(eta(i)));
    return x.transpose() * r;
}

namespace {

LogisticFit newton(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const Eigen::VectorXd* weights,
                   const LogisticOptions& opts, double lambda, const std::optional<Eigen::VectorXd>& start) {
    const auto p = x.cols();
    LogisticFit fit;
    fit.lambda = lambda;
    fit.beta = start ? *start : Eigen::VectorXd::Zero(p);
    auto objective = [&](const Eigen::VectorXd& b) {
        return logistic_loglik(x, y, b, weights) - 0.5 * lambda * b.squaredNorm();
    };
    double obj = objective(fit.beta);
    for (int it = 1; it <= opts.max_iterations; ++it) {
        fit.iterations = it;
        const Eigen::VectorXd eta = x * fit.beta;
        Eigen::VectorXd resid(eta.size()), wts(eta.size());
        for (Eigen::Index i = 0; i < eta.size(); ++i) {
            const double w = weights ? (*weights)(i) : 1.0;
            const double mu = sigmoid(eta(i));
            resid(i) = w * (y(i) - mu);
            wts(i) = w * mu * (1.0 - mu);
        }
        const Eigen::VectorXd grad = x.transpose() * resid - lambda * fit.beta;
        Eigen::MatrixXd hess = x.transpose() * wts.asDiagonal() * x;
        hess.diagonal().array() += lambda;
        Eigen::LDLT<Eigen::MatrixXd> ldlt(hess);
        Eigen::VectorXd step;
        if (ldlt.info() == Eigen::Success && ldlt.isPositive() && (ldlt.vectorD().array() > 1e-12).all()) {
            step = ldlt.solve(grad);
        } else {
            // Levenberg damping for the direction only; the objective is unchanged.
            const double damp = 1e-6 * std::max(1.0, hess.diagonal().maxCoeff());
            hess.diagonal().array() += damp;
            step = hess.ldlt().solve(grad);
        }
        if (!step.allFinite()) {
            fit.diagnostic = "non-finite Newton step";
            return fit;
        }
        double t = 1.0;
        Eigen::VectorXd next = fit.beta + step;
        double next_obj = objective(next);
        while (!(next_obj >= obj) && t > 1e-10) {
            t *= 0.5;
            next = fit.beta + t * step;
            next_obj = objective(next);
        }
        if (!(next_obj >= obj)) {
            // No ascent left at floating-point resolution.
            fit.converged = step.cwiseAbs().maxCoeff() < 1e-6;
            if (!fit.converged) fit.diagnostic = "line search failed";
            break;
        }
        const double moved = (t * step).cwiseAbs().maxCoeff();
        fit.beta = next;
        obj = next_obj;
        if (moved < opts.tolerance) {
            fit.converged = true;
            break;
        }
        if (lambda == 0.0 && fit.beta.cwiseAbs().maxCoeff() > opts.separation_bound) {
            fit.diagnostic = "coefficients diverging (separation)";
            break;
        }
    }
    if (!fit.converged && fit.diagnostic.empty()) fit.diagnostic = "iteration limit reached";
    fit.loglik = logistic_loglik(x, y, fit.beta, weights);
    return fit;
}

}  // namespace

LogisticFit fit_logistic_irls(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const Eigen::VectorXd* weights,
                              const LogisticOptions& opts, const std::optional<Eigen::VectorXd>& start) {
    if (x.rows() != y.size()) throw ValidationError("design and response lengths differ");
    auto fit = newton(x, y, weights, opts, opts.ridge_lambda, start);
    const bool bad = !fit.converged || !fit.beta.allFinite() ||
                     (opts.ridge_lambda == 0.0 && fit.beta.cwiseAbs().maxCoeff() > opts.separation_bound);
    if (bad && opts.ridge_fallback && opts.ridge_lambda == 0.0) {
        const std::string why = fit.diagnostic.empty() ? "coefficients diverging (separation)" : fit.diagnostic;
        fit = newton(x, y, weights, opts, kFallbackRidge, std::nullopt);
        fit.ridge_used = true;
        fit.diagnostic = "ridge fallback (lambda=1e-06) after: " + why +
                         (fit.converged ? "" : "; penalized fit did not converge either");
    }
    return fit;
}

LinearFit fit_ols(const Eigen::MatrixXd& x, const Eigen::VectorXd& y) {
    if (x.rows() != y.size()) throw ValidationError("design and response lengths differ");
    LinearFit f;
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(x);
    f.beta = qr.solve(y);
    f.rss = (y - x * f.beta).squaredNorm();
    return f;
}

Eigen::MatrixXd softmax_rows(const Eigen::MatrixXd& scores) {
    Eigen::MatrixXd p(scores.rows(), scores.cols());
    for (Eigen::Index i = 0; i < scores.rows(); ++i) {
        const double m = scores.row(i).maxCoeff();
        double s = 0.0;
        for (Eigen::Index k = 0; k < scores.cols(); ++k) s += (p(i, k) = std::exp(scores(i, k) - m));
        p.row(i) /= s;
    }
    return p;
}

double softmax_objective(const Eigen::MatrixXd& x, const Eigen::MatrixXd& targets, const Eigen::MatrixXd& coef) {
    const Eigen::MatrixXd scores = x * coef.transpose();
    double obj = 0.0;
    for (Eigen::Index i = 0; i < scores.rows(); ++i) {
        const double m = scores.row(i).maxCoeff();
        const double lse = m + std::log((scores.row(i).array() - m).exp().sum());
        for (Eigen::Index k = 0; k < scores.cols(); ++k)
            if (targets(i, k) != 0.0) obj += targets(i, k) * (scores(i, k) - lse);
    }
    return obj;
}

double fit_softmax_soft(const Eigen::MatrixXd& x, const Eigen::MatrixXd& targets, Eigen::MatrixXd& coef,
                        int newton_steps, double tolerance) {
    const auto k = coef.rows();
    const auto d = x.cols();
    double obj = softmax_objective(x, targets, coef);
    if (k == 1) return obj;
    const auto m = (k - 1) * d;
    for (int step = 0; step < newton_steps; ++step) {
        const Eigen::MatrixXd p = softmax_rows(x * coef.transpose());
        Eigen::VectorXd grad(m);
        Eigen::MatrixXd hess = Eigen::MatrixXd::Zero(m, m);
        for (Eigen::Index a = 1; a < k; ++a) {
            grad.segment((a - 1) * d, d) = x.transpose() * (targets.col(a) - p.col(a));
            for (Eigen::Index b = a; b < k; ++b) {
                Eigen::VectorXd w = -p.col(a).cwiseProduct(p.col(b));
                if (a == b) w += p.col(a);
                const Eigen::MatrixXd block = x.transpose() * w.asDiagonal() * x;
                hess.block((a - 1) * d, (b - 1) * d, d, d) = block;
                if (a != b) hess.block((b - 1) * d, (a - 1) * d, d, d) = block.transpose();
            }
        }
        hess.diagonal().array() += 1e-9 * std::max(1.0, hess.diagonal().maxCoeff());
        const Eigen::VectorXd dir = hess.ldlt().solve(grad);
        if (!dir.allFinite()) break;
        double t = 1.0;
        Eigen::MatrixXd next;
        double next_obj;
        for (;;) {
            next = coef;
            for (Eigen::Index a = 1; a < k; ++a) next.row(a) += t * dir.segment((a - 1) * d, d).transpose();
            next_obj = softmax_objective(x, targets, next);
            if (next_obj >= obj || t < 1e-10) break;
            t *= 0.5;
        }
        if (next_obj < obj) break;
        const double moved = t * dir.cwiseAbs().maxCoeff();
        coef = next;
        obj = next_obj;
        if (moved < tolerance) break;
    }
    return obj;
}

}  // namespace causal::glm
