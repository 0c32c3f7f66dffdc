#include "causal/score.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "causal/error.hpp"
#include "causal/glm.hpp"

namespace causal {

BicScore::BicScore(const FeatureMatrix& data, ScoreType type)
    : data_(data.to_eigen()), type_(type), n_(static_cast<double>(data.rows())) {
    if (data.rows() < 2) throw ValidationError("scoring needs at least two rows");
    Eigen::MatrixXd centered = data_.rowwise() - data_.colwise().mean();
    cov_ = (centered.transpose() * centered) / n_;
    for (const auto& c : data.columns()) binary_.push_back(c.kind == ColumnKind::binary);
    if (type_ == ScoreType::bic_binary)
        for (std::size_t j = 0; j < binary_.size(); ++j)
            if (!binary_[j]) throw ValidationError("binary BIC requested but '" + data.column(j).name + "' is continuous");
    cache_.resize(binary_.size());
}

double BicScore::local(int child, std::span<const int> parents) const {
    std::vector<int> key(parents.begin(), parents.end());
    std::sort(key.begin(), key.end());
    auto& memo = cache_[static_cast<std::size_t>(child)];
    if (auto it = memo.find(key); it != memo.end()) return it->second;
    ++evaluations_;
    const bool use_logistic = type_ == ScoreType::bic_binary || (type_ == ScoreType::automatic && binary_[child]);
    const double s = use_logistic ? logistic(child, key) : gaussian(child, key);
    memo.emplace(std::move(key), s);
    return s;
}

double BicScore::total(const std::vector<std::vector<int>>& parent_sets) const {
    double s = 0.0;
    for (std::size_t v = 0; v < parent_sets.size(); ++v) s += local(static_cast<int>(v), parent_sets[v]);
    return s;
}

double BicScore::gaussian(int child, const std::vector<int>& parents) const {
    double var = cov_(child, child);
    if (!parents.empty()) {
        const auto k = static_cast<Eigen::Index>(parents.size());
        Eigen::MatrixXd spp(k, k);
        Eigen::VectorXd spc(k);
        for (Eigen::Index a = 0; a < k; ++a) {
            spc(a) = cov_(parents[a], child);
            for (Eigen::Index b = 0; b < k; ++b) spp(a, b) = cov_(parents[a], parents[b]);
        }
        Eigen::LDLT<Eigen::MatrixXd> ldlt(spp);
        var -= spc.dot(ldlt.solve(spc));
    }
    var = std::max(var, 1e-12 * std::max(cov_(child, child), 1e-300));
    const double loglik = -0.5 * n_ * (std::log(2.0 * std::numbers::pi * var) + 1.0);
    const double n_params = static_cast<double>(parents.size()) + 2.0;
    return loglik - 0.5 * n_params * std::log(n_);
}

double BicScore::logistic(int child, const std::vector<int>& parents) const {
    const auto rows = data_.rows();
    Eigen::MatrixXd x(rows, static_cast<Eigen::Index>(parents.size()) + 1);
    x.col(0).setOnes();
    for (std::size_t k = 0; k < parents.size(); ++k) x.col(static_cast<Eigen::Index>(k) + 1) = data_.col(parents[k]);
    const Eigen::VectorXd y = data_.col(child);
    glm::LogisticOptions opts;
    opts.max_iterations = 50;
    const auto fit = glm::fit_logistic_irls(x, y, nullptr, opts);
    const double n_params = static_cast<double>(parents.size()) + 1.0;
    return fit.loglik - 0.5 * n_params * std::log(n_);
}

}  // namespace causal
