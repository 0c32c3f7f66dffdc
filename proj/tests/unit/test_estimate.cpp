#include <doctest.h>

#include <cmath>

#include "causal/dataset.hpp"
#include "causal/error.hpp"
#include "causal/estimate.hpp"
#include "causal/random.hpp"
#include "causal/scm.hpp"
#include "oracles.hpp"

using namespace causal;

#ifndef CAUSAL_FIXTURE_DIR
#error "CAUSAL_FIXTURE_DIR must be defined"
#endif

namespace {

FeatureMatrix fork_sample(std::size_t n, std::uint64_t seed) {
    return sample(load_scm(std::string(CAUSAL_FIXTURE_DIR) + "/scm_fork.json"), n, seed);
}

CausalEstimateConfig full_sample(std::size_t k) {
    CausalEstimateConfig cfg;
    cfg.estimand = Estimand::ate_risk_difference;
    cfg.mode = EstimationMode::full_sample;
    cfg.bootstrap.k = k;
    cfg.bootstrap.seed = 11;
    return cfg;
}

}  // namespace

TEST_CASE("2x2 fixture: treated rate, odds ratio and PAF") {
    const oracle::TwoByTwo t{63, 5425, 118, 53389};
    const auto fm = matrix_from_2x2(63, 5425, 118, 53389);
    const std::string tr(kTreatmentColumn), y(kOutcomeColumn);

    std::vector<std::size_t> treated;
    for (std::size_t i = 0; i < fm.rows(); ++i)
        if (fm.column(tr).values[i] == 1.0) treated.push_back(i);
    const auto crude = fit_logistic(fm.select_rows(treated), y, {});
    CHECK(std::abs(glm::sigmoid(crude.intercept) - t.treated_rate()) < 1e-9);

    const auto m = fit_logistic(fm, y, {tr});
    CHECK(std::exp(m.coefficient(tr)) == doctest::Approx(t.odds_ratio()).epsilon(1e-8));
    CHECK(paf(fm, m, tr) == doctest::Approx(t.paf()).epsilon(1e-8));
}

TEST_CASE("identity-link plug-in equals regression adjustment") {
    Rng rng(2);
    std::vector<double> z(2000), x(2000), y(2000);
    for (std::size_t i = 0; i < z.size(); ++i) {
        z[i] = rng.normal();
        x[i] = rng.bernoulli(glm::sigmoid(z[i]));
        y[i] = 0.7 * x[i] + 1.3 * z[i] + rng.normal();
    }
    const FeatureMatrix d({{"z", ColumnKind::continuous, z}, {"x", ColumnKind::binary, x},
                           {"y", ColumnKind::continuous, y}});
    const auto m = fit_linear(d, "y", {"x", "z"});
    const double effect = plugin_effect(m, d, {"x", "y"}, AdjustmentSet{{"z"}});
    CHECK(std::abs(effect - m.coefficient("x")) < 1e-9);
}

TEST_CASE("PAF vanishes with a zero treatment coefficient") {
    const auto d = fork_sample(1000, 3);
    OutcomeModel m;
    m.outcome = "y";
    m.features = {"x", "z"};
    m.coefficients = {{"x", 0.0}, {"z", 1.1}};
    m.intercept = -1.0;
    CHECK(std::abs(paf(d, m, "x")) < 1e-12);
}

TEST_CASE("interval narrows as n grows") {
    const auto small = estimate_effect(fork_sample(1000, 4), {"x", "y"}, AdjustmentSet{{"z"}}, full_sample(200));
    const auto large = estimate_effect(fork_sample(16000, 4), {"x", "y"}, AdjustmentSet{{"z"}}, full_sample(200));
    CHECK(large.effect.ci_high - large.effect.ci_low < small.effect.ci_high - small.effect.ci_low);
    CHECK(small.effect.ci_low <= small.effect.point);
    CHECK(small.effect.point <= small.effect.ci_high);
}

TEST_CASE("bootstrap is thread-count invariant") {
    const auto d = fork_sample(800, 5);
    const Estimator mean_y = [](const FeatureMatrix& s) {
        double t = 0;
        for (double v : s.column("y").values) t += v;
        return t / static_cast<double>(s.rows());
    };
    BootstrapConfig cfg;
    cfg.k = 100;
    cfg.seed = 9;
    const auto one = bootstrap_ci(mean_y, d, cfg, Estimand::causal_expectation, 1);
    const auto three = bootstrap_ci(mean_y, d, cfg, Estimand::causal_expectation, 3);
    CHECK(one.ci_low == three.ci_low);
    CHECK(one.ci_high == three.ci_high);
}

TEST_CASE("bootstrap failures beyond the budget are fatal") {
    const auto d = fork_sample(200, 6);
    int calls = 0;
    const Estimator flaky = [&calls](const FeatureMatrix&) -> double {
        if (++calls % 5 == 0) throw RuntimeError("boom");
        return 1.0;
    };
    BootstrapConfig cfg;
    cfg.k = 100;
    CHECK_THROWS_AS(bootstrap_ci(flaky, d, cfg), RuntimeError);
}

TEST_CASE("quantiles and splits") {
    CHECK(quantile_sorted({1, 2, 3, 4}, 0.5) == 2.5);
    CHECK(quantile_sorted({1, 2, 3, 4}, 0.0) == 1.0);
    const auto d = fork_sample(1000, 7);
    const auto s = stratified_split(d, "y", 0.7, 1);
    CHECK(s.train.size() + s.test.size() == 1000);
    CHECK(std::is_sorted(s.train.begin(), s.train.end()));
    CHECK(s.train.size() == doctest::Approx(700).epsilon(0.01));
}
