#include "causal/subgroup.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <limits>
#include <numeric>

#include "causal/error.hpp"
#include "causal/glm.hpp"
#include "causal/random.hpp"

namespace causal {

void HemmConfig::validate() const {
    if (K < 1) throw ValidationError("HEMM needs K >= 1");
    if (!(membership_threshold > 0.0 && membership_threshold < 1.0))
        throw ValidationError("membership_threshold must lie in (0, 1)");
    if (!(tol > 0.0)) throw ValidationError("HEMM tol must be positive");
    if (restarts < 1) throw ValidationError("HEMM needs at least one restart");
    if (max_em_iters < 1) throw ValidationError("max_em_iters must be at least 1");
}

namespace {

constexpr double kMonotoneSlack = 1e-9;

struct Problem {
    Eigen::MatrixXd xg;  // [1, x]
    Eigen::MatrixXd xo;  // [1, x, t]
    Eigen::VectorXd y;
};

Problem make_problem(const FeatureMatrix& data, const std::string& treatment, const std::string& outcome,
                     const std::vector<std::string>& covariates) {
    const auto n = static_cast<Eigen::Index>(data.rows());
    const auto p = static_cast<Eigen::Index>(covariates.size());
    Problem pr;
    pr.xg.resize(n, p + 1);
    pr.xo.resize(n, p + 2);
    pr.xg.col(0).setOnes();
    pr.xo.col(0).setOnes();
    for (Eigen::Index j = 0; j < p; ++j) {
        const auto& c = data.column(covariates[static_cast<std::size_t>(j)]).values;
        for (Eigen::Index i = 0; i < n; ++i) pr.xg(i, j + 1) = pr.xo(i, j + 1) = c[static_cast<std::size_t>(i)];
    }
    const auto& t = data.column(treatment).values;
    const auto& y = data.column(outcome).values;
    pr.y.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        pr.xo(i, p + 1) = t[static_cast<std::size_t>(i)];
        pr.y(i) = y[static_cast<std::size_t>(i)];
    }
    return pr;
}

// log p(Z=k|x) + log p(y|x,t,Z=k)
Eigen::MatrixXd log_joint(const Problem& pr, const Eigen::MatrixXd& gate, const Eigen::MatrixXd& experts) {
    const Eigen::MatrixXd scores = pr.xg * gate.transpose();
    const Eigen::MatrixXd eta = pr.xo * experts.transpose();
    Eigen::MatrixXd out(scores.rows(), scores.cols());
    for (Eigen::Index i = 0; i < scores.rows(); ++i) {
        const double m = scores.row(i).maxCoeff();
        const double lse = m + std::log((scores.row(i).array() - m).exp().sum());
        for (Eigen::Index k = 0; k < scores.cols(); ++k)
            out(i, k) = scores(i, k) - lse + pr.y(i) * eta(i, k) - glm::log1pexp(eta(i, k));
    }
    return out;
}

double row_lse(const Eigen::MatrixXd& lj, Eigen::Index i) {
    const double m = lj.row(i).maxCoeff();
    return m + std::log((lj.row(i).array() - m).exp().sum());
}

double total_loglik(const Eigen::MatrixXd& lj) {
    double s = 0.0;
    for (Eigen::Index i = 0; i < lj.rows(); ++i) s += row_lse(lj, i);
    return s;
}

Eigen::MatrixXd responsibilities(const Eigen::MatrixXd& lj) {
    Eigen::MatrixXd r(lj.rows(), lj.cols());
    for (Eigen::Index i = 0; i < lj.rows(); ++i) r.row(i) = (lj.row(i).array() - row_lse(lj, i)).exp();
    return r;
}

// Generalised M-step: every block update is accepted only if its part of the
// expected complete-data log-likelihood does not fall, so the observed
// log-likelihood cannot fall either.
void m_step(const Problem& pr, const Eigen::MatrixXd& r, Eigen::MatrixXd& gate, Eigen::MatrixXd& experts) {
    if (gate.rows() > 1) glm::fit_softmax_soft(pr.xg, r, gate, 5);
    glm::LogisticOptions opts;
    opts.max_iterations = 10;
    opts.ridge_fallback = false;
    opts.separation_bound = std::numeric_limits<double>::infinity();
    for (Eigen::Index k = 0; k < experts.rows(); ++k) {
        const Eigen::VectorXd w = r.col(k);
        const Eigen::VectorXd start = experts.row(k).transpose();
        const auto fit = glm::fit_logistic_irls(pr.xo, pr.y, &w, opts, start);
        if (fit.beta.allFinite() && fit.loglik >= glm::logistic_loglik(pr.xo, pr.y, start, &w))
            experts.row(k) = fit.beta.transpose();
    }
}

struct RunResult {
    Eigen::MatrixXd gate, experts;
    double loglik = -std::numeric_limits<double>::infinity();
    std::vector<double> trace;
    std::size_t iterations = 0;
    bool converged = false;
    std::string error;
};

struct Params {
    Eigen::MatrixXd gate, experts;
};

Params em_step(const Problem& pr, const Params& th) {
    Params out = th;
    m_step(pr, responsibilities(log_joint(pr, th.gate, th.experts)), out.gate, out.experts);
    return out;
}

double loglik_of(const Problem& pr, const Params& th) { return total_loglik(log_joint(pr, th.gate, th.experts)); }

double sq_norm(const Params& a, const Params& b) {
    return (a.gate - b.gate).squaredNorm() + (a.experts - b.experts).squaredNorm();
}

// Each iteration is one SQUAREM cycle (Varadhan and Roland): two EM steps,
// an extrapolated point, one stabilising EM step from it. The extrapolation
// is kept only when it beats the second plain EM step, so the trace keeps
// the monotonicity of plain EM while the slow gate sharpening is accelerated.
RunResult run_em(const Problem& pr, const Eigen::MatrixXd& r0, const HemmConfig& cfg) {
    const auto k = static_cast<Eigen::Index>(cfg.K);
    const double n = static_cast<double>(pr.y.size());
    RunResult res;
    Params th{Eigen::MatrixXd::Zero(k, pr.xg.cols()), Eigen::MatrixXd::Zero(k, pr.xo.cols())};
    m_step(pr, r0, th.gate, th.experts);
    res.loglik = loglik_of(pr, th);
    res.trace.push_back(res.loglik);
    for (std::size_t it = 0; it < cfg.max_em_iters; ++it) {
        const Params t1 = em_step(pr, th);
        const Params t2 = em_step(pr, t1);
        Params next = t2;
        double next_ll = loglik_of(pr, t2);
        const double r2 = sq_norm(t1, th);
        Params v{t2.gate - 2 * t1.gate + th.gate, t2.experts - 2 * t1.experts + th.experts};
        const double v2 = v.gate.squaredNorm() + v.experts.squaredNorm();
        if (r2 > 0 && v2 > 0) {
            const double alpha = std::min(-1.0, -std::sqrt(r2 / v2));
            Params ex{th.gate - 2 * alpha * (t1.gate - th.gate) + alpha * alpha * v.gate,
                      th.experts - 2 * alpha * (t1.experts - th.experts) + alpha * alpha * v.experts};
            if (ex.gate.allFinite() && ex.experts.allFinite()) {
                const Params stab = em_step(pr, ex);
                const double ll = loglik_of(pr, stab);
                if (std::isfinite(ll) && ll > next_ll) {
                    next = stab;
                    next_ll = ll;
                }
            }
        }
        res.trace.push_back(next_ll);
        res.iterations = it + 1;
        if (next_ll < res.loglik - kMonotoneSlack) {
            res.error = "EM log-likelihood decreased from " + std::to_string(res.loglik) + " to " + std::to_string(next_ll);
            res.loglik = next_ll;
            break;
        }
        const double change = std::abs(next_ll - res.loglik) / n;
        th = std::move(next);
        res.loglik = next_ll;
        if (change < cfg.tol) {
            res.converged = true;
            break;
        }
    }
    res.gate = th.gate;
    res.experts = th.experts;
    return res;
}

// Soft responsibilities from K-means on standardised covariates.
Eigen::MatrixXd kmeans_start(const Problem& pr, std::size_t K, std::uint64_t seed) {
    const auto n = pr.xg.rows();
    const auto p = pr.xg.cols() - 1;
    const auto k = static_cast<Eigen::Index>(K);
    Eigen::MatrixXd r = Eigen::MatrixXd::Constant(n, k, 1.0 / static_cast<double>(K));
    if (K == 1 || p == 0) return r;
    Eigen::MatrixXd x = pr.xg.rightCols(p);
    x.rowwise() -= x.colwise().mean();
    for (Eigen::Index j = 0; j < p; ++j) {
        const double sd = std::sqrt(x.col(j).squaredNorm() / static_cast<double>(n));
        if (sd > 0) x.col(j) /= sd;
    }
    Rng rng(seed);
    // k-means++ seeding
    Eigen::MatrixXd centers(k, p);
    centers.row(0) = x.row(static_cast<Eigen::Index>(rng.index(static_cast<std::size_t>(n))));
    Eigen::VectorXd d2 = (x.rowwise() - centers.row(0)).rowwise().squaredNorm();
    for (Eigen::Index c = 1; c < k; ++c) {
        double target = rng.uniform() * d2.sum();
        Eigen::Index pick = n - 1;
        for (Eigen::Index i = 0; i < n; ++i) {
            target -= d2(i);
            if (target <= 0) {
                pick = i;
                break;
            }
        }
        centers.row(c) = x.row(pick);
        d2 = d2.cwiseMin((x.rowwise() - centers.row(c)).rowwise().squaredNorm());
    }
    std::vector<Eigen::Index> label(static_cast<std::size_t>(n), 0);
    for (int iter = 0; iter < 50; ++iter) {
        bool moved = false;
        for (Eigen::Index i = 0; i < n; ++i) {
            Eigen::Index best = 0;
            (centers.rowwise() - x.row(i)).rowwise().squaredNorm().minCoeff(&best);
            if (best != label[static_cast<std::size_t>(i)]) moved = true;
            label[static_cast<std::size_t>(i)] = best;
        }
        Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(k, p);
        Eigen::VectorXd count = Eigen::VectorXd::Zero(k);
        for (Eigen::Index i = 0; i < n; ++i) {
            sum.row(label[static_cast<std::size_t>(i)]) += x.row(i);
            count(label[static_cast<std::size_t>(i)]) += 1;
        }
        for (Eigen::Index c = 0; c < k; ++c)
            if (count(c) > 0) centers.row(c) = sum.row(c) / count(c);
        if (!moved && iter > 0) break;
    }
    const double hi = 0.8, lo = 0.2 / static_cast<double>(K - 1);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index c = 0; c < k; ++c) r(i, c) = c == label[static_cast<std::size_t>(i)] ? hi : lo;
    return r;
}

Eigen::MatrixXd dirichlet_start(Eigen::Index n, std::size_t K, std::uint64_t seed) {
    Rng rng(seed);
    Eigen::MatrixXd r(n, static_cast<Eigen::Index>(K));
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index c = 0; c < r.cols(); ++c) r(i, c) = rng.exponential();
        r.row(i) /= r.row(i).sum();
    }
    return r;
}

void check_binary(const FeatureMatrix& data, const std::string& name, const char* role) {
    if (!data.find(name)) throw ValidationError(std::string(role) + " '" + name + "' is not a column");
    if (data.column(name).kind != ColumnKind::binary)
        throw ValidationError(std::string(role) + " '" + name + "' must be binary");
}

}  // namespace

SubgroupModel fit_hemm(const FeatureMatrix& data, const std::string& treatment, const std::string& outcome,
                       const std::vector<std::string>& covariates, const HemmConfig& cfg, std::size_t threads) {
    cfg.validate();
    check_binary(data, treatment, "treatment");
    check_binary(data, outcome, "outcome");
    for (const auto& c : covariates) {
        if (!data.find(c)) throw ValidationError("covariate '" + c + "' is not a column");
        if (c == treatment || c == outcome) throw ValidationError("covariate '" + c + "' is the treatment or outcome");
    }
    const std::size_t need = 10 * cfg.K * (covariates.size() + 2);
    if (data.rows() <= need)
        throw ValidationError("HEMM needs more than " + std::to_string(need) + " rows for K=" + std::to_string(cfg.K) +
                              " and " + std::to_string(covariates.size()) + " covariates (got " +
                              std::to_string(data.rows()) + ")");
    const auto pr = make_problem(data, treatment, outcome, covariates);

    auto run = [&](std::size_t r) {
        const auto start = r == 0 ? kmeans_start(pr, cfg.K, derive_seed(cfg.seed, 0))
                                  : dirichlet_start(pr.y.size(), cfg.K, derive_seed(cfg.seed, r));
        return run_em(pr, start, cfg);
    };
    std::vector<RunResult> runs(cfg.restarts);
    threads = std::max<std::size_t>(1, threads);
    for (std::size_t first = 0; first < cfg.restarts; first += threads) {
        const auto last = std::min(cfg.restarts, first + threads);
        if (threads == 1) {
            runs[first] = run(first);
            continue;
        }
        std::vector<std::future<RunResult>> jobs;
        for (std::size_t r = first; r < last; ++r) jobs.push_back(std::async(std::launch::async, run, r));
        for (std::size_t r = first; r < last; ++r) runs[r] = jobs[r - first].get();
    }

    std::size_t best = cfg.restarts;
    for (std::size_t r = 0; r < cfg.restarts; ++r) {
        if (!runs[r].error.empty()) throw RuntimeError("HEMM restart " + std::to_string(r) + ": " + runs[r].error);
        if (runs[r].converged && (best == cfg.restarts || runs[r].loglik > runs[best].loglik)) best = r;
    }
    if (best == cfg.restarts) {
        std::string msg = "HEMM did not converge in any restart; final log-likelihoods:";
        for (std::size_t r = 0; r < cfg.restarts; ++r)
            msg += " [" + std::to_string(r) + "] " + std::to_string(runs[r].loglik) + " after " +
                   std::to_string(runs[r].iterations) + " iterations";
        throw RuntimeError(msg);
    }

    SubgroupModel m;
    m.K = cfg.K;
    m.treatment = treatment;
    m.outcome = outcome;
    m.covariates = covariates;
    m.gate = runs[best].gate;
    m.experts = runs[best].experts;
    m.loglik = runs[best].loglik;
    m.iterations = runs[best].iterations;
    m.converged = true;
    m.loglik_trace = runs[best].trace;
    m.chosen_restart = best;
    for (const auto& r : runs) m.restart_logliks.push_back(r.loglik);
    for (std::size_t r = 0; r < cfg.restarts; ++r)
        if (!runs[r].converged) m.diagnostics.push_back("restart " + std::to_string(r) + " hit the iteration limit");
    return m;
}

Eigen::VectorXd SubgroupModel::membership(std::span<const double> x) const {
    if (x.size() != covariates.size())
        throw ValidationError("membership expects " + std::to_string(covariates.size()) + " covariates, got " +
                              std::to_string(x.size()));
    Eigen::MatrixXd row(1, gate.cols());
    row(0, 0) = 1.0;
    for (std::size_t j = 0; j < x.size(); ++j) row(0, static_cast<Eigen::Index>(j) + 1) = x[j];
    return glm::softmax_rows(row * gate.transpose()).row(0).transpose();
}

Eigen::MatrixXd SubgroupModel::membership(const FeatureMatrix& data) const {
    Eigen::MatrixXd xg(static_cast<Eigen::Index>(data.rows()), gate.cols());
    xg.col(0).setOnes();
    for (std::size_t j = 0; j < covariates.size(); ++j) {
        const auto& c = data.column(covariates[j]).values;
        for (std::size_t i = 0; i < c.size(); ++i) xg(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j) + 1) = c[i];
    }
    return glm::softmax_rows(xg * gate.transpose());
}

double SubgroupModel::loglik_on(const FeatureMatrix& data) const {
    return total_loglik(log_joint(make_problem(data, treatment, outcome, covariates), gate, experts));
}

nlohmann::json SubgroupModel::to_json() const {
    nlohmann::json groups = nlohmann::json::array();
    for (std::size_t k = 0; k < K; ++k) {
        const auto kk = static_cast<Eigen::Index>(k);
        nlohmann::json g;
        g["gate_intercept"] = gate(kk, 0);
        nlohmann::json gw, beta;
        for (std::size_t j = 0; j < covariates.size(); ++j) {
            gw[covariates[j]] = gate(kk, static_cast<Eigen::Index>(j) + 1);
            beta[covariates[j]] = experts(kk, static_cast<Eigen::Index>(j) + 1);
        }
        g["gate_weights"] = gw.is_null() ? nlohmann::json::object() : gw;
        g["intercept"] = intercept(k);
        g["beta"] = beta.is_null() ? nlohmann::json::object() : beta;
        g["gamma"] = gamma(k);
        groups.push_back(g);
    }
    return {{"K", K},
            {"treatment", treatment},
            {"outcome", outcome},
            {"covariates", covariates},
            {"groups", groups},
            {"loglik", loglik},
            {"iterations", iterations},
            {"converged", converged},
            {"chosen_restart", chosen_restart},
            {"restart_logliks", restart_logliks},
            {"loglik_trace", loglik_trace},
            {"diagnostics", diagnostics}};
}

SubgroupModel permute_groups(const SubgroupModel& model, const std::vector<std::size_t>& perm) {
    if (perm.size() != model.K) throw ValidationError("permutation has the wrong length");
    std::vector<bool> seen(model.K, false);
    for (auto p : perm) {
        if (p >= model.K || seen[p]) throw ValidationError("not a permutation of the group indices");
        seen[p] = true;
    }
    SubgroupModel out = model;
    for (std::size_t k = 0; k < model.K; ++k) {
        out.gate.row(static_cast<Eigen::Index>(perm[k])) = model.gate.row(static_cast<Eigen::Index>(k));
        out.experts.row(static_cast<Eigen::Index>(perm[k])) = model.experts.row(static_cast<Eigen::Index>(k));
    }
    const Eigen::RowVectorXd ref = out.gate.row(0);
    out.gate.rowwise() -= ref;  // keep group 0 as the reference
    return out;
}

EnhancedSubgroup enhanced_subgroup(const SubgroupModel& model, const FeatureMatrix& data, double threshold) {
    EnhancedSubgroup e;
    for (std::size_t k = 1; k < model.K; ++k)
        if (model.gamma(k) > model.gamma(e.group)) e.group = k;
    for (std::size_t k = 0; k < model.K; ++k)
        if (k != e.group && model.gamma(k) == model.gamma(e.group)) e.tie = true;
    const auto mem = model.membership(data);
    for (Eigen::Index i = 0; i < mem.rows(); ++i)
        if (mem(i, static_cast<Eigen::Index>(e.group)) >= threshold) e.rows.push_back(static_cast<std::size_t>(i));
    return e;
}

std::map<std::string, double> subgroup_feature_ratios(const SubgroupModel& model, const FeatureMatrix& data, std::size_t k,
                                                      const std::vector<std::string>& features) {
    if (model.K != 2) throw ValidationError("feature ratios are defined for K = 2 only");
    if (k >= 2) throw ValidationError("group index out of range");
    const auto mem = model.membership(data);
    std::vector<bool> in_k(data.rows());
    double n_k = 0, n_o = 0;
    for (Eigen::Index i = 0; i < mem.rows(); ++i) {
        Eigen::Index arg = 0;
        mem.row(i).maxCoeff(&arg);
        in_k[static_cast<std::size_t>(i)] = static_cast<std::size_t>(arg) == k;
        (in_k[static_cast<std::size_t>(i)] ? n_k : n_o) += 1;
    }
    std::map<std::string, double> out;
    for (const auto& f : features) {
        check_binary(data, f, "feature");
        const auto& v = data.column(f).values;
        double s_k = 0, s_o = 0;
        for (std::size_t i = 0; i < v.size(); ++i) (in_k[i] ? s_k : s_o) += v[i];
        const double p_k = n_k > 0 ? s_k / n_k : 0.0, p_o = n_o > 0 ? s_o / n_o : 0.0;
        if (p_k + p_o > 0.0) out[f] = p_k / (p_k + p_o);
    }
    return out;
}

double auc(std::span<const double> score, std::span<const int> label) {
    if (score.size() != label.size()) throw ValidationError("score and label lengths differ");
    std::vector<std::size_t> idx(score.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return score[a] < score[b]; });
    // average ranks over ties
    double rank_sum = 0.0, n_pos = 0.0;
    for (std::size_t i = 0; i < idx.size();) {
        std::size_t j = i;
        while (j < idx.size() && score[idx[j]] == score[idx[i]]) ++j;
        const double avg = 0.5 * static_cast<double>(i + 1 + j);
        for (std::size_t t = i; t < j; ++t)
            if (label[idx[t]]) rank_sum += avg, n_pos += 1;
        i = j;
    }
    const double n_neg = static_cast<double>(score.size()) - n_pos;
    if (n_pos == 0 || n_neg == 0) throw ValidationError("AUC needs both classes");
    return (rank_sum - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg);
}

SyntheticSubgroups synthetic_subgroups(std::size_t n, std::uint64_t seed, double gamma_a, double gamma_b) {
    Rng rng(seed);
    std::vector<double> x1(n), x2(n), x3(n), t(n), y(n);
    SyntheticSubgroups s;
    s.in_group_a.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        x1[i] = rng.normal();
        x2[i] = rng.normal();
        x3[i] = rng.normal();
        t[i] = rng.bernoulli(0.5) ? 1.0 : 0.0;
        const bool a = x1[i] > 0.0;
        s.in_group_a[i] = a;
        const double eta = -0.5 + 0.4 * x2[i] - 0.3 * x3[i] + (a ? gamma_a : gamma_b) * t[i];
        y[i] = rng.bernoulli(glm::sigmoid(eta)) ? 1.0 : 0.0;
    }
    s.data = FeatureMatrix({{"x1", ColumnKind::continuous, x1},
                            {"x2", ColumnKind::continuous, x2},
                            {"x3", ColumnKind::continuous, x3},
                            {"t", ColumnKind::binary, t},
                            {"y", ColumnKind::binary, y}},
                           "t", "y");
    return s;
}

}  // namespace causal
