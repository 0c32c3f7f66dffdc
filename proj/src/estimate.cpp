#include "causal/estimate.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <numeric>

#include "causal/error.hpp"
#include "causal/random.hpp"

namespace causal {

double OutcomeModel::coefficient(const std::string& feature) const {
    auto it = coefficients.find(feature);
    return it == coefficients.end() ? 0.0 : it->second;
}

double OutcomeModel::predict_row(const FeatureMatrix& data, std::size_t row,
                                 const std::map<std::string, double>& overrides) const {
    double eta = intercept;
    for (const auto& f : features) {
        auto o = overrides.find(f);
        const double v = o != overrides.end() ? o->second : data.column(f).values[row];
        eta += coefficient(f) * v;
    }
    return link == Link::logistic ? glm::sigmoid(eta) : eta;
}

Eigen::VectorXd OutcomeModel::predict(const FeatureMatrix& data, const std::map<std::string, double>& overrides) const {
    const auto n = static_cast<Eigen::Index>(data.rows());
    Eigen::VectorXd eta = Eigen::VectorXd::Constant(n, intercept);
    for (const auto& f : features) {
        const double b = coefficient(f);
        if (auto o = overrides.find(f); o != overrides.end()) {
            eta.array() += b * o->second;
            continue;
        }
        const auto idx = data.find(f);
        if (!idx) throw ValidationError("model feature '" + f + "' is missing from the data");
        const auto& col = data.column(*idx).values;
        for (Eigen::Index i = 0; i < n; ++i) eta(i) += b * col[static_cast<std::size_t>(i)];
    }
    if (link == Link::logistic) eta = eta.unaryExpr([](double t) { return glm::sigmoid(t); });
    return eta;
}

double OutcomeModel::predict_values(const std::map<std::string, double>& values) const {
    double eta = intercept;
    for (const auto& f : features) {
        auto it = values.find(f);
        if (it == values.end()) throw ValidationError("no value supplied for model feature '" + f + "'");
        eta += coefficient(f) * it->second;
    }
    return link == Link::logistic ? glm::sigmoid(eta) : eta;
}

nlohmann::json OutcomeModel::to_json() const {
    return {{"outcome", outcome},
            {"link", link == Link::logistic ? "logistic" : "identity"},
            {"intercept", intercept},
            {"coefficients", coefficients},
            {"fitted_on", features},
            {"train_diagnostics",
             {{"loglik", loglik},
              {"iterations", iterations},
              {"converged", converged},
              {"ridge_used", ridge_used},
              {"diagnostic", diagnostic}}}};
}

namespace {

Eigen::MatrixXd design(const FeatureMatrix& data, const std::string& outcome, const std::vector<std::string>& features) {
    if (!data.find(outcome)) throw ValidationError("outcome '" + outcome + "' is not a column");
    std::vector<std::size_t> cols;
    for (const auto& f : features) {
        if (f == outcome) throw ValidationError("outcome '" + outcome + "' cannot also be a feature");
        if (!data.find(f)) throw ValidationError("feature '" + f + "' is not a column");
        cols.push_back(data.index_of(f));
    }
    if (data.rows() <= features.size() + 1)
        throw ValidationError("need more rows (" + std::to_string(data.rows()) + ") than parameters (" +
                              std::to_string(features.size() + 1) + ")");
    Eigen::MatrixXd x(static_cast<Eigen::Index>(data.rows()), static_cast<Eigen::Index>(cols.size()) + 1);
    x.col(0).setOnes();
    if (!cols.empty()) x.rightCols(static_cast<Eigen::Index>(cols.size())) = data.to_eigen(cols);
    return x;
}

Eigen::VectorXd column_vector(const FeatureMatrix& data, const std::string& name) {
    const auto& v = data.column(name).values;
    return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

double mean(const Eigen::VectorXd& v) {
    return v.size() ? v.mean() : 0.0;
}

}  // namespace

OutcomeModel fit_logistic(const FeatureMatrix& data, const std::string& outcome, const std::vector<std::string>& features,
                          const glm::LogisticOptions& opts) {
    const auto x = design(data, outcome, features);
    if (data.column(outcome).kind != ColumnKind::binary)
        throw ValidationError("logistic outcome '" + outcome + "' is not binary");
    const auto fit = glm::fit_logistic_irls(x, column_vector(data, outcome), nullptr, opts);
    if (!fit.converged || !fit.beta.allFinite())
        throw RuntimeError("logistic fit for '" + outcome + "' did not converge: " + fit.diagnostic);
    OutcomeModel m;
    m.outcome = outcome;
    m.features = features;
    m.intercept = fit.beta(0);
    for (std::size_t j = 0; j < features.size(); ++j) m.coefficients[features[j]] = fit.beta(static_cast<Eigen::Index>(j) + 1);
    m.link = Link::logistic;
    m.loglik = fit.loglik;
    m.iterations = fit.iterations;
    m.converged = fit.converged;
    m.ridge_used = fit.ridge_used;
    m.diagnostic = fit.diagnostic;
    return m;
}

OutcomeModel fit_linear(const FeatureMatrix& data, const std::string& outcome, const std::vector<std::string>& features) {
    const auto x = design(data, outcome, features);
    const auto fit = glm::fit_ols(x, column_vector(data, outcome));
    OutcomeModel m;
    m.outcome = outcome;
    m.features = features;
    m.intercept = fit.beta(0);
    for (std::size_t j = 0; j < features.size(); ++j) m.coefficients[features[j]] = fit.beta(static_cast<Eigen::Index>(j) + 1);
    m.link = Link::identity;
    m.loglik = fit.rss;
    return m;
}

std::string_view to_string(Estimand e) {
    switch (e) {
        case Estimand::ate_risk_difference: return "ate_risk_difference";
        case Estimand::causal_expectation: return "causal_expectation";
        case Estimand::risk_ratio: return "risk_ratio";
        case Estimand::paf: return "paf";
    }
    return "?";
}

Estimand estimand_from_string(std::string_view s) {
    for (auto e : {Estimand::ate_risk_difference, Estimand::causal_expectation, Estimand::risk_ratio, Estimand::paf})
        if (to_string(e) == s) return e;
    throw ValidationError("unknown estimand '" + std::string(s) + "'");
}

double paf(const FeatureMatrix& data, const OutcomeModel& model, const std::string& treatment) {
    if (auto y = data.find(model.outcome)) {
        const auto& v = data.column(*y).values;
        if (std::accumulate(v.begin(), v.end(), 0.0) == 0.0)
            throw ValidationError("PAF undefined: observed outcome rate is 0");
    }
    const double p_y = mean(model.predict(data));
    if (p_y <= 0.0) throw ValidationError("PAF undefined: expected outcome rate is 0");
    const double p0 = mean(model.predict(data, {{treatment, 0.0}}));
    return (p_y - p0) / p_y;
}

double plugin_effect(const OutcomeModel& model, const FeatureMatrix& data, const CausalQuery& query,
                     const AdjustmentSet& z, Estimand estimand) {
    auto has = [&](const std::string& f) { return std::find(model.features.begin(), model.features.end(), f) != model.features.end(); };
    if (!has(query.treatment)) throw ValidationError("model was not fitted on treatment '" + query.treatment + "'");
    for (const auto& v : z.variables)
        if (!has(v)) throw ValidationError("adjustment variable '" + v + "' is missing from the outcome model");
    if (estimand == Estimand::paf) return paf(data, model, query.treatment);
    const double m1 = mean(model.predict(data, {{query.treatment, query.x1}}));
    if (estimand == Estimand::causal_expectation) return m1;
    const double m0 = mean(model.predict(data, {{query.treatment, query.x0}}));
    if (estimand == Estimand::ate_risk_difference) return m1 - m0;
    if (m0 == 0.0) throw RuntimeError("risk ratio undefined: E[Y|do(X=x0)] is 0");
    return m1 / m0;
}

void BootstrapConfig::validate() const {
    if (k < 100) throw ValidationError("bootstrap k must be at least 100 (got " + std::to_string(k) + ")");
    if (!(resample_fraction > 0.0 && resample_fraction <= 1.0)) throw ValidationError("resample_fraction must lie in (0, 1]");
}

nlohmann::json EffectEstimate::to_json() const {
    return {{"estimand", to_string(estimand)}, {"point", point}, {"ci", {ci_low, ci_high}},
            {"k", k},     {"seed", seed},   {"failed_resamples", failures}};
}

double quantile_sorted(const std::vector<double>& sorted, double q) {
    if (sorted.empty()) throw ValidationError("quantile of an empty sample");
    const double h = (static_cast<double>(sorted.size()) - 1.0) * q;
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const auto hi = std::min(lo + 1, sorted.size() - 1);
    return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

EffectEstimate bootstrap_ci(const Estimator& estimator, const FeatureMatrix& data, const BootstrapConfig& cfg,
                            Estimand estimand, std::size_t threads) {
    cfg.validate();
    if (data.rows() == 0) throw ValidationError("cannot bootstrap an empty data set");
    EffectEstimate est;
    est.estimand = estimand;
    est.k = cfg.k;
    est.seed = cfg.seed;
    est.point = estimator(data);

    const std::size_t n = data.rows();
    const auto m = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(cfg.resample_fraction * static_cast<double>(n))));
    std::vector<double> values(cfg.k, 0.0);
    std::vector<char> ok(cfg.k, 0);
    auto run = [&](std::size_t first, std::size_t stride) {
        std::vector<std::size_t> rows(m);
        for (std::size_t i = first; i < cfg.k; i += stride) {
            Rng rng(derive_seed(cfg.seed, i));
            for (auto& r : rows) r = rng.index(n);
            try {
                const double v = estimator(data.select_rows(rows));
                if (std::isfinite(v)) {
                    values[i] = v;
                    ok[i] = 1;
                }
            } catch (const std::exception&) {
            }
        }
    };
    threads = std::max<std::size_t>(1, std::min(threads, cfg.k));
    if (threads == 1) {
        run(0, 1);
    } else {
        std::vector<std::future<void>> jobs;
        for (std::size_t t = 0; t < threads; ++t) jobs.push_back(std::async(std::launch::async, run, t, threads));
        for (auto& j : jobs) j.get();
    }
    std::vector<double> good;
    for (std::size_t i = 0; i < cfg.k; ++i)
        if (ok[i]) good.push_back(values[i]);
    est.failures = cfg.k - good.size();
    if (static_cast<double>(est.failures) > kMaxBootstrapFailureRate * static_cast<double>(cfg.k))
        throw RuntimeError("estimator failed on " + std::to_string(est.failures) + " of " + std::to_string(cfg.k) +
                           " bootstrap resamples (limit 5%)");
    std::sort(good.begin(), good.end());
    est.ci_low = quantile_sorted(good, 0.025);
    est.ci_high = quantile_sorted(good, 0.975);
    return est;
}

Split stratified_split(const FeatureMatrix& data, const std::string& outcome, double train_fraction, std::uint64_t seed) {
    if (!(train_fraction > 0.0 && train_fraction < 1.0)) throw ValidationError("train_fraction must lie in (0, 1)");
    const auto& y = data.column(outcome).values;
    Split s;
    Rng rng(seed);
    for (double cls : {0.0, 1.0}) {
        std::vector<std::size_t> rows;
        for (std::size_t i = 0; i < y.size(); ++i)
            if (y[i] == cls) rows.push_back(i);
        for (std::size_t i = rows.size(); i > 1; --i) std::swap(rows[i - 1], rows[rng.index(i)]);
        const auto n_train = static_cast<std::size_t>(std::llround(train_fraction * static_cast<double>(rows.size())));
        s.train.insert(s.train.end(), rows.begin(), rows.begin() + static_cast<std::ptrdiff_t>(n_train));
        s.test.insert(s.test.end(), rows.begin() + static_cast<std::ptrdiff_t>(n_train), rows.end());
    }
    std::sort(s.train.begin(), s.train.end());
    std::sort(s.test.begin(), s.test.end());
    return s;
}

std::string_view to_string(EstimationMode m) {
    return m == EstimationMode::split ? "split" : "full_sample";
}

EstimationMode estimation_mode_from_string(std::string_view s) {
    if (s == "split") return EstimationMode::split;
    if (s == "full_sample") return EstimationMode::full_sample;
    throw ValidationError("unknown estimation mode '" + std::string(s) + "' (expected split or full_sample)");
}

namespace {

OutcomeModel fit_outcome(const FeatureMatrix& data, const std::string& outcome, const std::vector<std::string>& features) {
    return data.column(outcome).kind == ColumnKind::binary ? fit_logistic(data, outcome, features)
                                                           : fit_linear(data, outcome, features);
}

}  // namespace

CausalEstimate estimate_effect(const FeatureMatrix& data, const CausalQuery& query, const AdjustmentSet& z,
                               const CausalEstimateConfig& cfg) {
    std::vector<std::string> features{query.treatment};
    for (const auto& v : z.variables) features.push_back(v);
    CausalEstimate out;
    Estimator estimator;
    FeatureMatrix eval = data;
    if (cfg.mode == EstimationMode::split) {
        if (data.column(query.outcome).kind != ColumnKind::binary)
            throw ValidationError("split mode stratifies on the outcome, which must be binary");
        const auto s = stratified_split(data, query.outcome, cfg.train_fraction, derive_seed(cfg.bootstrap.seed, 0x5b1172));
        out.model = fit_outcome(data.select_rows(s.train), query.outcome, features);
        eval = data.select_rows(s.test);
        estimator = [model = out.model, query, z, e = cfg.estimand](const FeatureMatrix& d) {
            return plugin_effect(model, d, query, z, e);
        };
    } else {
        out.model = fit_outcome(data, query.outcome, features);
        estimator = [features, query, z, e = cfg.estimand](const FeatureMatrix& d) {
            return plugin_effect(fit_outcome(d, query.outcome, features), d, query, z, e);
        };
    }
    out.effect = bootstrap_ci(estimator, eval, cfg.bootstrap, cfg.estimand, cfg.threads);
    for (auto e : {Estimand::ate_risk_difference, Estimand::causal_expectation, Estimand::risk_ratio, Estimand::paf}) {
        try {
            out.point_estimates[std::string(to_string(e))] = plugin_effect(out.model, eval, query, z, e);
        } catch (const std::exception&) {
            // undefined on these rows (for example a zero outcome rate); omitted
        }
    }
    return out;
}

nlohmann::json BaselineResult::to_json() const {
    return {{"or", odds_ratio},
            {"paf", paf},
            {"ci", {effect.ci_low, effect.ci_high}},
            {"associational_difference", associational_difference},
            {"model", model.to_json()}};
}

BaselineResult regression_baseline(const FeatureMatrix& data, const std::string& treatment, const std::string& outcome,
                                   const std::vector<std::string>& covariates, const BootstrapConfig& cfg,
                                   std::size_t threads) {
    std::vector<std::string> features{treatment};
    features.insert(features.end(), covariates.begin(), covariates.end());
    BaselineResult r;
    r.model = fit_logistic(data, outcome, features);
    r.odds_ratio = std::exp(r.model.coefficient(treatment));
    r.paf = paf(data, r.model, treatment);
    const auto& t = data.column(treatment).values;
    const auto& y = data.column(outcome).values;
    double s1 = 0, n1 = 0, s0 = 0, n0 = 0;
    for (std::size_t i = 0; i < t.size(); ++i) (t[i] != 0.0 ? (s1 += y[i], n1 += 1) : (s0 += y[i], n0 += 1));
    r.associational_difference = (n1 > 0 && n0 > 0) ? s1 / n1 - s0 / n0 : 0.0;
    r.effect = bootstrap_ci(
        [&](const FeatureMatrix& d) { return paf(d, fit_logistic(d, outcome, features), treatment); }, data, cfg,
        Estimand::paf, threads);
    return r;
}

}  // namespace causal
