#include <doctest.h>

#include <cmath>

#include "causal/glm.hpp"
#include "causal/random.hpp"

using namespace causal;

namespace {

struct Problem {
    Eigen::MatrixXd x;
    Eigen::VectorXd y;
};

Problem make_problem(std::size_t n, std::uint64_t seed) {
    Rng rng(seed);
    Problem p{Eigen::MatrixXd(n, 3), Eigen::VectorXd(n)};
    for (std::size_t i = 0; i < n; ++i) {
        const auto r = static_cast<Eigen::Index>(i);
        p.x(r, 0) = 1.0;
        p.x(r, 1) = rng.normal();
        p.x(r, 2) = rng.bernoulli(0.4) ? 1.0 : 0.0;
        p.y(r) = rng.bernoulli(glm::sigmoid(-0.5 + 0.8 * p.x(r, 1) + 1.2 * p.x(r, 2))) ? 1.0 : 0.0;
    }
    return p;
}

}  // namespace

TEST_CASE("analytic gradient matches central differences") {
    const auto p = make_problem(300, 3);
    Eigen::VectorXd beta(3);
    beta << 0.1, -0.3, 0.7;
    const auto g = glm::logistic_gradient(p.x, p.y, beta);
    const double h = 1e-5;
    for (Eigen::Index k = 0; k < 3; ++k) {
        Eigen::VectorXd up = beta, down = beta;
        up(k) += h;
        down(k) -= h;
        const double fd = (glm::logistic_loglik(p.x, p.y, up) - glm::logistic_loglik(p.x, p.y, down)) / (2 * h);
        CHECK(std::abs(fd - g(k)) <= 1e-4 * std::max(1.0, std::abs(g(k))));
    }
}

TEST_CASE("IRLS recovers coefficients and zeroes the score") {
    const auto p = make_problem(20000, 5);
    const auto fit = glm::fit_logistic_irls(p.x, p.y);
    REQUIRE(fit.converged);
    CHECK_FALSE(fit.ridge_used);
    CHECK(fit.beta(1) == doctest::Approx(0.8).epsilon(0.1));
    CHECK(fit.beta(2) == doctest::Approx(1.2).epsilon(0.1));
    CHECK(glm::logistic_gradient(p.x, p.y, fit.beta).lpNorm<Eigen::Infinity>() < 1e-6);
}

TEST_CASE("intercept-only fit reproduces the event rate") {
    Eigen::MatrixXd x = Eigen::MatrixXd::Ones(5488, 1);
    Eigen::VectorXd y = Eigen::VectorXd::Zero(5488);
    y.head(63).setOnes();
    const auto fit = glm::fit_logistic_irls(x, y);
    CHECK(glm::sigmoid(fit.beta(0)) == doctest::Approx(63.0 / 5488).epsilon(1e-9));
}

TEST_CASE("perfect separation falls back to a ridge fit") {
    Eigen::MatrixXd x(6, 2);
    x << 1, -2, 1, -1, 1, -0.5, 1, 0.5, 1, 1, 1, 2;
    Eigen::VectorXd y(6);
    y << 0, 0, 0, 1, 1, 1;
    const auto fit = glm::fit_logistic_irls(x, y);
    CHECK(fit.ridge_used);
    CHECK(fit.lambda == glm::kFallbackRidge);
    CHECK_FALSE(fit.diagnostic.empty());
    CHECK(fit.beta.allFinite());
}

TEST_CASE("numerically stable helpers") {
    CHECK(glm::log1pexp(800.0) == doctest::Approx(800.0));
    CHECK(glm::log1pexp(-800.0) >= 0.0);
    CHECK(glm::sigmoid(-800.0) >= 0.0);
    CHECK(glm::sigmoid(0.0) == 0.5);
}

TEST_CASE("softmax M-step never lowers the objective") {
    const auto p = make_problem(400, 8);
    Eigen::MatrixXd targets(400, 2);
    for (Eigen::Index i = 0; i < 400; ++i) {
        const double q = glm::sigmoid(1.5 * p.x(i, 1));
        targets(i, 0) = 1 - q;
        targets(i, 1) = q;
    }
    Eigen::MatrixXd coef = Eigen::MatrixXd::Zero(2, 3);
    const double before = glm::softmax_objective(p.x, targets, coef);
    const double after = glm::fit_softmax_soft(p.x, targets, coef);
    CHECK(after >= before);
    CHECK(coef.row(0).isZero());
    CHECK(coef(1, 1) == doctest::Approx(1.5).epsilon(0.05));
}
