#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "causal/dag.hpp"
#include "causal/feature_matrix.hpp"
#include "causal/glm.hpp"
#include "causal/identify.hpp"

namespace causal {

class Scm;

enum class Link { logistic, identity };

struct OutcomeModel {
    std::string outcome;
    std::vector<std::string> features;  // fitted_on, in design order
    std::map<std::string, double> coefficients;
    double intercept = 0.0;
    Link link = Link::logistic;
    double loglik = 0.0;  // logistic: unpenalized loglik; identity: residual sum of squares
    int iterations = 0;
    bool converged = true;
    bool ridge_used = false;
    std::string diagnostic;

    double coefficient(const std::string& feature) const;  // 0 when absent
    // Mean response for one row, with `overrides` replacing feature values.
    double predict_row(const FeatureMatrix& data, std::size_t row,
                       const std::map<std::string, double>& overrides = {}) const;
    Eigen::VectorXd predict(const FeatureMatrix& data, const std::map<std::string, double>& overrides = {}) const;
    double predict_values(const std::map<std::string, double>& values) const;

    nlohmann::json to_json() const;
};

// IRLS maximum likelihood; falls back to a tiny ridge on separation. Throws
// ValidationError for a non-binary outcome or too few rows, RuntimeError if
// the fallback also fails.
OutcomeModel fit_logistic(const FeatureMatrix& data, const std::string& outcome,
                          const std::vector<std::string>& features, const glm::LogisticOptions& opts = {});
OutcomeModel fit_linear(const FeatureMatrix& data, const std::string& outcome, const std::vector<std::string>& features);

enum class Estimand { ate_risk_difference, causal_expectation, risk_ratio, paf };

std::string_view to_string(Estimand e);
Estimand estimand_from_string(std::string_view s);  // throws ValidationError

// Standardization: mean over rows of m(x, z_i) at x1 (and x0).
double plugin_effect(const OutcomeModel& model, const FeatureMatrix& data, const CausalQuery& query,
                     const AdjustmentSet& z, Estimand estimand = Estimand::ate_risk_difference);

// (P(Y) - P0) / P(Y), P0 the standardized mean with treatment set to 0.
// P(Y) is the model's factual mean, which equals the observed rate at an
// unpenalized logistic MLE with an intercept. Throws if the observed rate is 0.
double paf(const FeatureMatrix& data, const OutcomeModel& model, const std::string& treatment);

struct BootstrapConfig {
    std::size_t k = 1000;
    double resample_fraction = 1.0;
    std::uint64_t seed = 0;

    void validate() const;
};

struct EffectEstimate {
    Estimand estimand = Estimand::ate_risk_difference;
    double point = 0.0;
    double ci_low = 0.0;
    double ci_high = 0.0;
    std::size_t k = 0;
    std::uint64_t seed = 0;
    std::size_t failures = 0;

    nlohmann::json to_json() const;
};

using Estimator = std::function<double(const FeatureMatrix&)>;

inline constexpr double kMaxBootstrapFailureRate = 0.05;

// Resample i draws rows with Rng(derive_seed(seed, i)); results are collected
// by index so any thread count gives the same interval.
EffectEstimate bootstrap_ci(const Estimator& estimator, const FeatureMatrix& data, const BootstrapConfig& cfg,
                            Estimand estimand = Estimand::ate_risk_difference, std::size_t threads = 1);

// Linear-interpolation quantile of sorted values (R type 7).
double quantile_sorted(const std::vector<double>& sorted, double q);

struct Split {
    std::vector<std::size_t> train;
    std::vector<std::size_t> test;
};

// Stratified by the binary outcome; both parts keep the original row order.
Split stratified_split(const FeatureMatrix& data, const std::string& outcome, double train_fraction,
                       std::uint64_t seed);

enum class EstimationMode {
    split,        // fit on the training part, bootstrap predictions on the test part
    full_sample,  // refit on every bootstrap resample of the full data
};

std::string_view to_string(EstimationMode m);
EstimationMode estimation_mode_from_string(std::string_view s);

struct CausalEstimateConfig {
    Estimand estimand = Estimand::causal_expectation;
    EstimationMode mode = EstimationMode::split;
    double train_fraction = 0.7;
    BootstrapConfig bootstrap;
    std::size_t threads = 1;
};

struct CausalEstimate {
    OutcomeModel model;
    EffectEstimate effect;
    std::map<std::string, double> point_estimates;  // every estimand on the evaluation rows
};

CausalEstimate estimate_effect(const FeatureMatrix& data, const CausalQuery& query, const AdjustmentSet& z,
                               const CausalEstimateConfig& cfg);

struct BaselineResult {
    OutcomeModel model;
    double odds_ratio = 0.0;
    double paf = 0.0;
    double associational_difference = 0.0;  // P(Y|X=1) - P(Y|X=0) observed
    EffectEstimate effect;                  // bootstrap of the PAF

    nlohmann::json to_json() const;
};

BaselineResult regression_baseline(const FeatureMatrix& data, const std::string& treatment, const std::string& outcome,
                                   const std::vector<std::string>& covariates, const BootstrapConfig& cfg,
                                   std::size_t threads = 1);

// One logistic model per binary node given its parents in `dag`.
struct ModelSet {
    Dag dag;
    std::vector<OutcomeModel> models;  // indexed like dag nodes
};

ModelSet fit_model_set(const Dag& dag, const FeatureMatrix& data);
// Exact local models of an SCM whose mechanisms are all logistic.
ModelSet model_set_from_scm(const Scm& scm);

inline constexpr std::size_t kMaxEnumeratedVariables = 20;

using Assignment = std::map<std::string, int>;

// P(target | evidence) by enumeration over the ancestral set of target and
// evidence. Throws ValidationError for unknown variables, values outside {0,1}
// or more than 20 free variables; RuntimeError for zero-probability evidence.
double conditional_query(const ModelSet& models, const Assignment& target, const Assignment& evidence = {});

// P(target | do(assignments)): incoming edges of intervened nodes dropped,
// values fixed, remaining joint enumerated.
double interventional_query(const ModelSet& models, const Assignment& intervention, const Assignment& target);

}  // namespace causal
