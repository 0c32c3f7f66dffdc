#pragma once

#include <map>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "causal/feature_matrix.hpp"

namespace causal {

enum class ScoreType {
    automatic,     // per child: logistic BIC for binary columns, gaussian otherwise
    bic_gaussian,  // gaussian for every child
    bic_binary,    // logistic for every child (all columns must be binary)
};

// Decomposable BIC (higher is better): loglik - (k / 2) ln n per family.
// Local scores are memoized; an instance is not safe for concurrent use.
class BicScore {
public:
    explicit BicScore(const FeatureMatrix& data, ScoreType type = ScoreType::automatic);

    double local(int child, std::span<const int> parents) const;
    double total(const std::vector<std::vector<int>>& parent_sets) const;

    std::size_t variables() const { return static_cast<std::size_t>(cov_.rows()); }
    std::size_t evaluations() const { return evaluations_; }

private:
    double gaussian(int child, const std::vector<int>& parents) const;
    double logistic(int child, const std::vector<int>& parents) const;

    Eigen::MatrixXd data_;
    Eigen::MatrixXd cov_;  // MLE (1/n) covariance
    std::vector<bool> binary_;
    ScoreType type_;
    double n_;
    mutable std::vector<std::map<std::vector<int>, double>> cache_;
    mutable std::size_t evaluations_ = 0;
};

}  // namespace causal
