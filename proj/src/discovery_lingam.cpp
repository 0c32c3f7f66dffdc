#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <Eigen/Dense>

#include "causal/discovery.hpp"
#include "causal/error.hpp"
#include "causal/glm.hpp"
#include "causal/random.hpp"

namespace causal::sla {

namespace {

struct IcaResult {
    Eigen::MatrixXd unmixing;  // W with s = W x (x centered)
    std::size_t max_iterations_used = 0;
    bool converged = true;
};

// Symmetric whitening followed by deflationary FastICA with the tanh contrast.
IcaResult fast_ica(const Eigen::MatrixXd& x, const SlaConfig& cfg) {
    const auto n = x.rows(), p = x.cols();
    const Eigen::MatrixXd cov = (x.transpose() * x) / static_cast<double>(n);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
    const auto& d = eig.eigenvalues();
    if (d.minCoeff() <= 1e-12 * std::max(d.maxCoeff(), 1e-300))
        throw RuntimeError("LiNGAM: covariance is singular, columns are collinear");
    const Eigen::MatrixXd k = d.cwiseSqrt().cwiseInverse().asDiagonal() * eig.eigenvectors().transpose();
    const Eigen::MatrixXd z = x * k.transpose();

    Rng rng(derive_seed(cfg.seed, 0x1ca));
    Eigen::MatrixXd w_ica(p, p);
    IcaResult res;
    for (Eigen::Index i = 0; i < p; ++i) {
        Eigen::VectorXd w(p);
        for (Eigen::Index j = 0; j < p; ++j) w(j) = rng.normal();
        auto deflate = [&](Eigen::VectorXd& v) {
            for (Eigen::Index j = 0; j < i; ++j) v -= v.dot(w_ica.row(j).transpose()) * w_ica.row(j).transpose();
            v.normalize();
        };
        deflate(w);
        std::size_t it = 0;
        bool ok = false;
        for (; it < cfg.ica_max_iters; ++it) {
            const Eigen::VectorXd u = z * w;
            const Eigen::ArrayXd g = u.array().tanh();
            const double g_prime = (1.0 - g.square()).mean();
            Eigen::VectorXd next = (z.transpose() * g.matrix()) / static_cast<double>(n) - g_prime * w;
            deflate(next);
            const double change = std::abs(1.0 - std::abs(next.dot(w)));
            w = next;
            if (change < cfg.ica_tolerance) {
                ok = true;
                break;
            }
        }
        res.max_iterations_used = std::max(res.max_iterations_used, it + 1);
        res.converged = res.converged && ok;
        w_ica.row(i) = w.transpose();
    }
    res.unmixing = w_ica * k;
    return res;
}

// Minimum-cost perfect assignment; returns col_of_row.
std::vector<int> hungarian(const Eigen::MatrixXd& cost) {
    const int n = static_cast<int>(cost.rows());
    const double inf = std::numeric_limits<double>::infinity();
    std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0), minv(n + 1);
    std::vector<int> p(n + 1, 0), way(n + 1, 0);
    std::vector<bool> used(n + 1);
    for (int i = 1; i <= n; ++i) {
        p[0] = i;
        int j0 = 0;
        std::fill(minv.begin(), minv.end(), inf);
        std::fill(used.begin(), used.end(), false);
        do {
            used[j0] = true;
            const int i0 = p[j0];
            double delta = inf;
            int j1 = 0;
            for (int j = 1; j <= n; ++j) {
                if (used[j]) continue;
                const double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
                if (cur < minv[j]) {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if (minv[j] < delta) {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for (int j = 0; j <= n; ++j) {
                if (used[j]) {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
        } while (p[j0] != 0);
        do {
            const int j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
        } while (j0 != 0);
    }
    std::vector<int> col_of_row(n);
    for (int j = 1; j <= n; ++j) col_of_row[p[j] - 1] = j - 1;
    return col_of_row;
}

// Order such that every nonzero b(i, j) has j before i, or empty.
std::vector<int> lower_triangular_order(const Eigen::MatrixXd& b) {
    const int p = static_cast<int>(b.rows());
    std::vector<bool> placed(p, false);
    std::vector<int> order;
    for (int step = 0; step < p; ++step) {
        int pick = -1;
        for (int i = 0; i < p && pick < 0; ++i) {
            if (placed[i]) continue;
            bool root = true;
            for (int j = 0; j < p && root; ++j)
                if (!placed[j] && j != i && b(i, j) != 0.0) root = false;
            if (root) pick = i;
        }
        if (pick < 0) return {};
        placed[pick] = true;
        order.push_back(pick);
    }
    return order;
}

}  // namespace

SlaOutput lingam(const FeatureMatrix& data, const SlaConfig& cfg) {
    Eigen::MatrixXd x = data.to_eigen();
    x.rowwise() -= x.colwise().mean();
    const auto p = x.cols();
    const auto ica = fast_ica(x, cfg);

    // Permute rows of W so the diagonal has no near-zero entries.
    Eigen::MatrixXd cost(p, p);
    for (Eigen::Index i = 0; i < p; ++i)
        for (Eigen::Index j = 0; j < p; ++j) cost(i, j) = 1.0 / std::max(std::abs(ica.unmixing(i, j)), 1e-300);
    const auto col_of_row = hungarian(cost);
    Eigen::MatrixXd w(p, p);
    for (Eigen::Index r = 0; r < p; ++r) w.row(col_of_row[r]) = ica.unmixing.row(r);
    for (Eigen::Index i = 0; i < p; ++i) w.row(i) /= w(i, i);
    Eigen::MatrixXd b = Eigen::MatrixXd::Identity(p, p) - w;
    b.diagonal().setZero();

    // Zero the smallest entries until B is permutable to strictly lower triangular.
    std::vector<std::pair<double, Eigen::Index>> mags;
    for (Eigen::Index i = 0; i < p; ++i)
        for (Eigen::Index j = 0; j < p; ++j)
            if (i != j) mags.emplace_back(std::abs(b(i, j)), i * p + j);
    std::sort(mags.begin(), mags.end());
    const auto forced = static_cast<std::size_t>(p * (p - 1) / 2);
    for (std::size_t k = 0; k < forced; ++k) b(mags[k].second / p, mags[k].second % p) = 0.0;
    std::vector<int> order = lower_triangular_order(b);
    for (std::size_t k = forced; order.empty() && k < mags.size(); ++k) {
        b(mags[k].second / p, mags[k].second % p) = 0.0;
        order = lower_triangular_order(b);
    }

    // Refit each variable on its predecessors, then prune small weights.
    SlaOutput out;
    std::size_t pruned = 0;
    for (std::size_t pos = 1; pos < order.size(); ++pos) {
        const int child = order[pos];
        Eigen::MatrixXd design(x.rows(), static_cast<Eigen::Index>(pos));
        for (std::size_t k = 0; k < pos; ++k) design.col(static_cast<Eigen::Index>(k)) = x.col(order[k]);
        const auto fit = glm::fit_ols(design, x.col(child));
        for (std::size_t k = 0; k < pos; ++k) {
            if (std::abs(fit.beta(static_cast<Eigen::Index>(k))) >= cfg.lingam_prune) out.directed.emplace(order[k], child);
            else ++pruned;
        }
    }
    out.diagnostics["ica_iterations"] = static_cast<double>(ica.max_iterations_used);
    out.diagnostics["ica_converged"] = ica.converged ? 1.0 : 0.0;
    out.diagnostics["pruned_weights"] = static_cast<double>(pruned);
    if (!ica.converged) out.warnings.push_back("FastICA reached the iteration limit before converging");
    for (const auto& c : data.columns())
        if (c.kind == ColumnKind::binary) {
            out.warnings.push_back("binary columns violate the continuous non-Gaussian noise assumption");
            break;
        }
    return out;
}

}  // namespace causal::sla
