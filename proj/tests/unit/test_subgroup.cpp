#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "causal/error.hpp"
#include "causal/estimate.hpp"
#include "causal/subgroup.hpp"

using namespace causal;

namespace {

const std::vector<std::string> kCovariates{"x1", "x2", "x3"};

HemmConfig config(std::size_t k, std::uint64_t seed) {
    HemmConfig cfg;
    cfg.K = k;
    cfg.seed = seed;
    cfg.restarts = 2;
    return cfg;
}

}  // namespace

TEST_CASE("memberships are distributions and the trace is monotone") {
    const auto s = synthetic_subgroups(3000, 1);
    const auto m = fit_hemm(s.data, "t", "y", kCovariates, config(2, 1));
    const auto mem = m.membership(s.data);
    CHECK(mem.rows() == 3000);
    for (Eigen::Index i = 0; i < mem.rows(); ++i) CHECK(std::abs(mem.row(i).sum() - 1.0) < 1e-12);
    for (std::size_t i = 1; i < m.loglik_trace.size(); ++i)
        CHECK(m.loglik_trace[i] >= m.loglik_trace[i - 1] - 1e-9);
    CHECK(m.converged);
}

TEST_CASE("one group reduces to logistic regression") {
    const auto s = synthetic_subgroups(2000, 2);
    const auto m = fit_hemm(s.data, "t", "y", kCovariates, config(1, 2));
    auto features = kCovariates;
    features.push_back("t");
    const auto lr = fit_logistic(s.data, "y", features);
    CHECK(std::abs(m.loglik - lr.loglik) < 1e-6);
    CHECK(m.gamma(0) == doctest::Approx(lr.coefficient("t")).epsilon(1e-4));
}

TEST_CASE("label swap leaves the likelihood unchanged") {
    const auto s = synthetic_subgroups(2000, 3);
    const auto m = fit_hemm(s.data, "t", "y", kCovariates, config(2, 3));
    const auto swapped = permute_groups(m, {1, 0});
    CHECK(swapped.loglik_on(s.data) == doctest::Approx(m.loglik_on(s.data)).epsilon(1e-10));
    CHECK(swapped.gamma(1) == m.gamma(0));
    const auto a = m.membership(s.data), b = swapped.membership(s.data);
    CHECK((a.col(0) - b.col(1)).cwiseAbs().maxCoeff() < 1e-9);
    CHECK(enhanced_subgroup(m, s.data, 0.5).rows == enhanced_subgroup(swapped, s.data, 0.5).rows);
}

TEST_CASE("recovers the responsive group") {
    const auto s = synthetic_subgroups(10000, 4);
    const auto m = fit_hemm(s.data, "t", "y", kCovariates, config(2, 4));
    const auto eg = enhanced_subgroup(m, s.data, 0.5);
    CHECK(m.gamma(eg.group) == doctest::Approx(2.0).epsilon(0.15));
    const auto mem = m.membership(s.data);
    std::vector<double> score(static_cast<std::size_t>(mem.rows()));
    for (Eigen::Index i = 0; i < mem.rows(); ++i) score[static_cast<std::size_t>(i)] = mem(i, static_cast<Eigen::Index>(eg.group));
    CHECK(auc(score, s.in_group_a) >= 0.8);
}

TEST_CASE("auc and validation") {
    const double sc[] = {0.1, 0.4, 0.35, 0.8};
    const int lb[] = {0, 0, 1, 1};
    CHECK(auc(sc, lb) == 0.75);
    const double tied[] = {0.5, 0.5};
    const int lt[] = {0, 1};
    CHECK(auc(tied, lt) == 0.5);

    auto bad = config(0, 1);
    CHECK_THROWS_AS(bad.validate(), ValidationError);
    const auto s = synthetic_subgroups(100, 5);
    CHECK_THROWS_AS(fit_hemm(s.data, "t", "y", {"nope"}, config(2, 1)), ValidationError);
    CHECK_THROWS_AS(fit_hemm(s.data, "t", "y", kCovariates, config(2, 1)).membership(std::vector<double>{1.0}),
                    ValidationError);
}
