#include "causal/citest.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <unordered_map>

#include <boost/math/special_functions/gamma.hpp>

#include "causal/error.hpp"

namespace causal {

double chi2_sf(double statistic, double dof) {
    if (dof <= 0.0) return 1.0;
    if (statistic <= 0.0) return 1.0;
    return boost::math::gamma_q(dof / 2.0, statistic / 2.0);
}

double normal_two_sided_p(double z) {
    return std::erfc(std::abs(z) / std::sqrt(2.0));
}

namespace {

Eigen::MatrixXd correlation_of(const FeatureMatrix& data) {
    Eigen::MatrixXd x = data.to_eigen();
    const auto n = static_cast<double>(x.rows());
    x.rowwise() -= x.colwise().mean();
    Eigen::MatrixXd cov = (x.transpose() * x) / std::max(1.0, n - 1.0);
    Eigen::VectorXd sd = cov.diagonal().cwiseSqrt();
    Eigen::MatrixXd corr(cov.rows(), cov.cols());
    for (Eigen::Index i = 0; i < cov.rows(); ++i)
        for (Eigen::Index j = 0; j < cov.cols(); ++j)
            corr(i, j) = (sd(i) > 0 && sd(j) > 0) ? cov(i, j) / (sd(i) * sd(j)) : (i == j ? 1.0 : 0.0);
    return corr;
}

}  // namespace

FisherZ::FisherZ(const FeatureMatrix& data) : corr_(correlation_of(data)), n_(data.rows()), names_(data.names()) {}

FisherZ::FisherZ(Eigen::MatrixXd correlation, std::size_t n) : corr_(std::move(correlation)), n_(n) {
    for (Eigen::Index i = 0; i < corr_.rows(); ++i) names_.push_back("V" + std::to_string(i));
}

double FisherZ::partial_correlation(std::size_t x, std::size_t y, std::span<const std::size_t> z) const {
    if (x > y) std::swap(x, y);  // bitwise symmetry in (x, y)
    if (z.empty()) return corr_(x, y);
    std::vector<std::size_t> idx{x, y};
    idx.insert(idx.end(), z.begin(), z.end());
    const auto k = static_cast<Eigen::Index>(idx.size());
    Eigen::MatrixXd sub(k, k);
    for (Eigen::Index i = 0; i < k; ++i)
        for (Eigen::Index j = 0; j < k; ++j) sub(i, j) = corr_(idx[i], idx[j]);
    Eigen::FullPivLU<Eigen::MatrixXd> lu(sub);
    lu.setThreshold(1e-10);
    if (!lu.isInvertible()) {
        std::string set;
        for (auto v : idx) set += (set.empty() ? "" : ", ") + names_[v];
        throw RuntimeError("singular correlation submatrix over {" + set + "}");
    }
    const Eigen::MatrixXd prec = lu.inverse();
    return -prec(0, 1) / std::sqrt(prec(0, 0) * prec(1, 1));
}

CiResult FisherZ::test(std::size_t x, std::size_t y, std::span<const std::size_t> z) const {
    const double n_eff = static_cast<double>(n_) - static_cast<double>(z.size()) - 3.0;
    if (n_eff <= 0.0) throw ValidationError("Fisher z needs n > |z| + 3");
    double rho = partial_correlation(x, y, z);
    rho = std::clamp(rho, -kMaxAbsPartialCorrelation, kMaxAbsPartialCorrelation);
    CiResult r;
    r.statistic = std::sqrt(n_eff) * std::atanh(rho);
    r.p_value = normal_two_sided_p(r.statistic);
    r.dof_or_n_eff = n_eff;
    return r;
}

G2Test::G2Test(const FeatureMatrix& data) : data_(&data) {}

CiResult G2Test::test(std::size_t x, std::size_t y, std::span<const std::size_t> z) const {
    const auto& d = *data_;
    if (x > y) std::swap(x, y);
    for (auto v : {x, y})
        if (d.column(v).kind != ColumnKind::binary) throw ValidationError("G2 test needs binary columns");
    for (auto v : z)
        if (d.column(v).kind != ColumnKind::binary) throw ValidationError("G2 test needs binary columns");
    if (z.size() > 62) throw ValidationError("G2 conditioning set too large");

    // stratum key -> counts[x][y]
    std::unordered_map<std::uint64_t, std::array<double, 4>> strata;
    const auto& xs = d.column(x).values;
    const auto& ys = d.column(y).values;
    for (std::size_t i = 0; i < d.rows(); ++i) {
        std::uint64_t key = 0;
        for (std::size_t k = 0; k < z.size(); ++k)
            if (d.at(i, z[k]) != 0.0) key |= (1ULL << k);
        auto& c = strata[key];
        c[static_cast<int>(xs[i]) * 2 + static_cast<int>(ys[i])] += 1.0;
    }
    double g2 = 0.0, dof = 0.0;
    for (const auto& [key, c] : strata) {
        const double nx[2] = {c[0] + c[1], c[2] + c[3]};
        const double ny[2] = {c[0] + c[2], c[1] + c[3]};
        const double ns = nx[0] + nx[1];
        const int rx = (nx[0] > 0) + (nx[1] > 0);
        const int ry = (ny[0] > 0) + (ny[1] > 0);
        dof += static_cast<double>((rx - 1) * (ry - 1));
        for (int a = 0; a < 2; ++a)
            for (int b = 0; b < 2; ++b) {
                const double obs = c[a * 2 + b];
                if (obs <= 0.0) continue;
                const double expct = nx[a] * ny[b] / ns;
                g2 += obs * std::log(obs / expct);
            }
    }
    CiResult r;
    r.statistic = std::max(0.0, 2.0 * g2);
    r.dof_or_n_eff = dof;
    r.p_value = dof > 0 ? chi2_sf(r.statistic, dof) : 1.0;
    r.low_power = static_cast<double>(d.rows()) < 10.0 * dof;
    return r;
}

CiTester::CiTester(const FeatureMatrix& data) : data_(&data), fisher_(data), g2_(data) {
    for (const auto& c : data.columns()) binary_.push_back(c.kind == ColumnKind::binary);
}

CiResult CiTester::test(std::size_t x, std::size_t y, std::span<const std::size_t> z) const {
    ++tests_run_;
    bool all_binary = binary_[x] && binary_[y];
    for (auto v : z) all_binary = all_binary && binary_[v];
    return all_binary ? g2_.test(x, y, z) : fisher_.test(x, y, z);
}

CiResult fisher_z(const FeatureMatrix& data, std::size_t x, std::size_t y, std::span<const std::size_t> z) {
    return FisherZ(data).test(x, y, z);
}

CiResult g2_test(const FeatureMatrix& data, std::size_t x, std::size_t y, std::span<const std::size_t> z) {
    return G2Test(data).test(x, y, z);
}

}  // namespace causal
