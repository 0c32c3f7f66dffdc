#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "causal/feature_matrix.hpp"

namespace causal {

struct HemmConfig {
    std::size_t K = 2;
    std::size_t max_em_iters = 200;
    double tol = 1e-6;  // on |delta loglik| / n
    double membership_threshold = 0.5;
    std::size_t restarts = 5;
    std::uint64_t seed = 0;

    void validate() const;
};

// Mixture of logistic experts: p(Z=k|x) is a softmax over gate * [1, x] with
// row 0 fixed at zero, and y | x, t, Z=k ~ Bernoulli(sigmoid(b_k + beta_k x + gamma_k t)).
struct SubgroupModel {
    std::size_t K = 1;
    std::string treatment;
    std::string outcome;
    std::vector<std::string> covariates;
    Eigen::MatrixXd gate;     // K x (1 + p)
    Eigen::MatrixXd experts;  // K x (2 + p): b_k, beta_k, gamma_k
    double loglik = 0.0;
    std::size_t iterations = 0;
    bool converged = false;
    std::vector<double> loglik_trace;  // after every EM iteration of the chosen restart
    std::size_t chosen_restart = 0;
    std::vector<double> restart_logliks;
    std::vector<std::string> diagnostics;

    double gamma(std::size_t k) const { return experts(static_cast<Eigen::Index>(k), experts.cols() - 1); }
    double intercept(std::size_t k) const { return experts(static_cast<Eigen::Index>(k), 0); }

    // Throws ValidationError when x has the wrong length.
    Eigen::VectorXd membership(std::span<const double> x) const;
    Eigen::MatrixXd membership(const FeatureMatrix& data) const;  // n x K
    double loglik_on(const FeatureMatrix& data) const;

    nlohmann::json to_json() const;
};

// EM with K-means initialisation for restart 0 and random Dirichlet
// responsibilities afterwards; keeps the converged restart with the best
// log-likelihood. Throws ValidationError on bad inputs and RuntimeError when
// no restart converges.
SubgroupModel fit_hemm(const FeatureMatrix& data, const std::string& treatment, const std::string& outcome,
                       const std::vector<std::string>& covariates, const HemmConfig& cfg, std::size_t threads = 1);

// The same model with group k relabelled perm[k].
SubgroupModel permute_groups(const SubgroupModel& model, const std::vector<std::size_t>& perm);

struct EnhancedSubgroup {
    std::size_t group = 0;  // argmax gamma_k
    bool tie = false;
    std::vector<std::size_t> rows;
};

EnhancedSubgroup enhanced_subgroup(const SubgroupModel& model, const FeatureMatrix& data, double threshold);

// Share of prevalence p_k / (p_k + p_other) over rows hard-assigned by
// membership; 0.5 means no difference. Requires K = 2 and binary features.
std::map<std::string, double> subgroup_feature_ratios(const SubgroupModel& model, const FeatureMatrix& data,
                                                      std::size_t k, const std::vector<std::string>& features);

// Area under the ROC curve of `score` for `label` (ties count one half).
double auc(std::span<const double> score, std::span<const int> label);

struct SyntheticSubgroups {
    FeatureMatrix data;           // x1, x2, x3, t, y
    std::vector<int> in_group_a;  // 1 iff x1 > 0
};

// Group A (x1 > 0) has treatment effect gamma_a on the log-odds scale, group
// B has gamma_b; t ~ Bernoulli(0.5).
SyntheticSubgroups synthetic_subgroups(std::size_t n, std::uint64_t seed, double gamma_a = 2.0, double gamma_b = 0.0);

}  // namespace causal
