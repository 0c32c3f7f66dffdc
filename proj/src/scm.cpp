#include "causal/scm.hpp"

#include <cmath>
#include <fstream>

#include "causal/error.hpp"
#include "causal/random.hpp"

namespace causal {

namespace {

double sigmoid(double t) {
    return t >= 0 ? 1.0 / (1.0 + std::exp(-t)) : std::exp(t) / (1.0 + std::exp(t));
}

}  // namespace

std::string_view to_string(MechanismType t) {
    return t == MechanismType::linear ? "linear" : "logistic";
}

std::string_view to_string(NoiseDist d) {
    switch (d) {
        case NoiseDist::gaussian: return "gaussian";
        case NoiseDist::uniform: return "uniform";
        case NoiseDist::laplace: return "laplace";
        case NoiseDist::bernoulli: return "bernoulli";
    }
    return "?";
}

Scm::Scm(Dag dag, std::vector<Mechanism> mechanisms, std::vector<Noise> noise)
    : dag_(std::move(dag)), mechanisms_(std::move(mechanisms)), noise_(std::move(noise)) {
    const auto n = dag_.size();
    if (mechanisms_.size() != n || noise_.size() != n)
        throw ValidationError("SCM needs exactly one mechanism and one noise spec per node");
    parent_weights_.resize(n);
    for (std::size_t v = 0; v < n; ++v) {
        const auto& name = dag_.name(static_cast<int>(v));
        const auto& mech = mechanisms_[v];
        for (const auto& [p, w] : mech.weights) {
            auto pi = dag_.find(p);
            if (!pi || !dag_.has_edge(*pi, static_cast<int>(v)))
                throw ValidationError("mechanism of '" + name + "' references '" + p + "', which is not a parent");
            if (!std::isfinite(w)) throw ValidationError("non-finite weight in mechanism of '" + name + "'");
        }
        if (!std::isfinite(mech.intercept)) throw ValidationError("non-finite intercept for '" + name + "'");
        for (int p : dag_.parents(static_cast<int>(v))) {
            auto it = mech.weights.find(dag_.name(p));
            parent_weights_[v].push_back(it == mech.weights.end() ? 0.0 : it->second);
        }
        const auto& nz = noise_[v];
        if (mech.type == MechanismType::logistic && nz.dist != NoiseDist::bernoulli)
            throw ValidationError("logistic node '" + name + "' takes implicit bernoulli noise");
        if (mech.type == MechanismType::linear && nz.dist == NoiseDist::bernoulli)
            throw ValidationError("linear node '" + name + "' needs gaussian, uniform or laplace noise");
        if (!(nz.param >= 0.0) || !std::isfinite(nz.param))
            throw ValidationError("noise parameter of '" + name + "' must be finite and non-negative");
    }
}

double Scm::weight(int p, int v) const {
    const auto& ps = dag_.parents(v);
    for (std::size_t k = 0; k < ps.size(); ++k)
        if (ps[k] == p) return parent_weights_[static_cast<std::size_t>(v)][k];
    return 0.0;
}

Scm Scm::from_json(const nlohmann::json& j) {
    try {
        auto nodes = j.at("nodes").get<std::vector<std::string>>();
        std::vector<std::pair<std::string, std::string>> edges;
        for (const auto& e : j.value("edges", nlohmann::json::array())) {
            if (!e.is_array() || e.size() != 2) throw ValidationError("edges must be [parent, child] pairs");
            edges.emplace_back(e[0].get<std::string>(), e[1].get<std::string>());
        }
        Dag dag = Dag::from_names(nodes, edges);
        const auto mechs = j.value("mechanisms", nlohmann::json::object());
        const auto noises = j.value("noise", nlohmann::json::object());
        for (const auto& [k, _] : mechs.items())
            if (!dag.find(k)) throw ValidationError("mechanism for unknown node '" + k + "'");
        for (const auto& [k, _] : noises.items())
            if (!dag.find(k)) throw ValidationError("noise for unknown node '" + k + "'");
        std::vector<Mechanism> mv;
        std::vector<Noise> nv;
        for (const auto& name : nodes) {
            Mechanism m;
            if (mechs.contains(name)) {
                const auto& mj = mechs.at(name);
                const auto type = mj.value("type", std::string("linear"));
                if (type == "linear") m.type = MechanismType::linear;
                else if (type == "logistic") m.type = MechanismType::logistic;
                else throw ValidationError("unknown mechanism type '" + type + "' for '" + name + "'");
                m.intercept = mj.value("intercept", 0.0);
                if (mj.contains("weights")) m.weights = mj.at("weights").get<std::map<std::string, double>>();
            }
            Noise nz;
            nz.dist = m.type == MechanismType::logistic ? NoiseDist::bernoulli : NoiseDist::gaussian;
            if (noises.contains(name)) {
                const auto& nj = noises.at(name);
                const auto dist = nj.value("dist", std::string(to_string(nz.dist)));
                if (dist == "gaussian") nz.dist = NoiseDist::gaussian;
                else if (dist == "uniform") nz.dist = NoiseDist::uniform;
                else if (dist == "laplace") nz.dist = NoiseDist::laplace;
                else if (dist == "bernoulli") nz.dist = NoiseDist::bernoulli;
                else throw ValidationError("unknown noise distribution '" + dist + "' for '" + name + "'");
                nz.param = nj.value("param", 1.0);
            }
            mv.push_back(std::move(m));
            nv.push_back(nz);
        }
        return Scm(std::move(dag), std::move(mv), std::move(nv));
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("malformed SCM JSON: ") + e.what());
    }
}

nlohmann::json Scm::to_json() const {
    nlohmann::json j;
    j["nodes"] = dag_.nodes();
    auto edges = nlohmann::json::array();
    for (auto [a, b] : dag_.edges()) edges.push_back({dag_.name(a), dag_.name(b)});
    j["edges"] = edges;
    auto mechs = nlohmann::json::object();
    auto noises = nlohmann::json::object();
    for (std::size_t v = 0; v < dag_.size(); ++v) {
        const auto& name = dag_.name(static_cast<int>(v));
        const auto& m = mechanisms_[v];
        mechs[name] = {{"type", to_string(m.type)}, {"weights", m.weights}, {"intercept", m.intercept}};
        if (noise_[v].dist == NoiseDist::bernoulli)
            noises[name] = {{"dist", "bernoulli"}};
        else
            noises[name] = {{"dist", to_string(noise_[v].dist)}, {"param", noise_[v].param}};
    }
    j["mechanisms"] = mechs;
    j["noise"] = noises;
    return j;
}

Scm load_scm(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open SCM file " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError("malformed SCM JSON in " + path + ": " + e.what());
    }
    return Scm::from_json(j);
}

namespace {

FeatureMatrix sample_impl(const Scm& scm, const std::map<int, double>& fixed, std::size_t n, std::uint64_t seed) {
    if (n == 0) throw ValidationError("sample size must be at least 1");
    const auto& dag = scm.dag();
    const auto order = dag.topological_order();
    std::vector<std::vector<double>> values(dag.size());
    for (int v : order) {
        auto& col = values[v];
        col.resize(n);
        if (auto it = fixed.find(v); it != fixed.end()) {
            std::fill(col.begin(), col.end(), it->second);
            continue;
        }
        // Per-node streams: intervening on one node leaves the noise of every
        // other node untouched.
        Rng rng(derive_seed(seed, static_cast<std::uint64_t>(v)));
        const auto& mech = scm.mechanism(v);
        const auto& nz = scm.noise(v);
        const auto& ps = dag.parents(v);
        std::vector<double> w;
        for (int p : ps) w.push_back(scm.weight(p, v));
        for (std::size_t i = 0; i < n; ++i) {
            double eta = mech.intercept;
            for (std::size_t k = 0; k < ps.size(); ++k) eta += w[k] * values[ps[k]][i];
            if (mech.type == MechanismType::logistic) {
                col[i] = rng.uniform() < sigmoid(eta) ? 1.0 : 0.0;
                continue;
            }
            double u = 0.0;
            switch (nz.dist) {
                case NoiseDist::gaussian: u = nz.param * rng.normal(); break;
                case NoiseDist::uniform: u = rng.uniform(-nz.param, nz.param); break;
                case NoiseDist::laplace: u = rng.laplace(nz.param); break;
                case NoiseDist::bernoulli: break;
            }
            col[i] = eta + u;
        }
    }
    std::vector<Column> cols;
    for (std::size_t v = 0; v < dag.size(); ++v) {
        ColumnKind kind = scm.mechanism(static_cast<int>(v)).type == MechanismType::logistic ? ColumnKind::binary
                                                                                              : ColumnKind::continuous;
        if (auto it = fixed.find(static_cast<int>(v)); it != fixed.end() && it->second != 0.0 && it->second != 1.0)
            kind = ColumnKind::continuous;
        cols.push_back({dag.name(static_cast<int>(v)), kind, std::move(values[v])});
    }
    return FeatureMatrix(std::move(cols));
}

}  // namespace

FeatureMatrix sample(const Scm& scm, std::size_t n, std::uint64_t seed) {
    return sample_impl(scm, {}, n, seed);
}

FeatureMatrix sample_do(const Scm& scm, const Intervention& intervention, std::size_t n, std::uint64_t seed) {
    std::map<int, double> fixed;
    for (const auto& [name, value] : intervention.assignments) {
        auto v = scm.dag().find(name);
        if (!v) throw ValidationError("cannot intervene on undefined variable '" + name + "'");
        if (!std::isfinite(value)) throw ValidationError("intervention value for '" + name + "' is not finite");
        fixed[*v] = value;
    }
    return sample_impl(scm, fixed, n, seed);
}

namespace {

// Closed-form E[v | do(x = value)] for every node, or nullopt entries where a
// logistic mechanism makes the expectation non-linear.
std::vector<std::optional<double>> linear_means(const Scm& scm, int x, double value) {
    const auto& dag = scm.dag();
    std::vector<std::optional<double>> mean(dag.size());
    for (int v : dag.topological_order()) {
        if (v == x) {
            mean[v] = value;
            continue;
        }
        const auto& mech = scm.mechanism(v);
        if (mech.type != MechanismType::linear) continue;
        double m = mech.intercept;
        bool ok = true;
        for (int p : dag.parents(v)) {
            const double w = scm.weight(p, v);
            if (w == 0.0) continue;
            if (!mean[p]) {
                ok = false;
                break;
            }
            m += w * *mean[p];
        }
        if (ok) mean[v] = m;
    }
    return mean;
}

// Total effect per unit change of x on every node via path-coefficient sums;
// nullopt when a logistic node sits on a directed path from x.
std::vector<std::optional<double>> path_coefficients(const Scm& scm, int x) {
    const auto& dag = scm.dag();
    const auto desc = dag.descendants(x);
    std::vector<std::optional<double>> d(dag.size());
    for (int v : dag.topological_order()) {
        if (v == x) {
            d[v] = 1.0;
            continue;
        }
        if (!desc[v]) {
            d[v] = 0.0;
            continue;
        }
        if (scm.mechanism(v).type != MechanismType::linear) continue;
        double s = 0.0;
        bool ok = true;
        for (int p : dag.parents(v)) {
            const double w = scm.weight(p, v);
            if (w == 0.0) continue;
            if (!d[p]) {
                ok = false;
                break;
            }
            s += w * *d[p];
        }
        if (ok) d[v] = s;
    }
    return d;
}

TrueEffect mc_mean(const Scm& scm, const std::string& t, int y, double x, std::size_t n_mc, std::uint64_t seed) {
    Intervention iv;
    iv.assignments[t] = x;
    const auto fm = sample_do(scm, iv, n_mc, seed);
    const auto& col = fm.column(static_cast<std::size_t>(y)).values;
    double s = 0.0, s2 = 0.0;
    for (double v : col) s += v;
    const double m = s / static_cast<double>(n_mc);
    for (double v : col) s2 += (v - m) * (v - m);
    const double var = s2 / static_cast<double>(n_mc - 1);
    return {m, std::sqrt(var / static_cast<double>(n_mc)), false};
}

}  // namespace

TrueEffect true_mean(const Scm& scm, std::string_view treatment, std::string_view outcome, double x,
                     std::size_t n_mc, std::uint64_t seed) {
    const int t = scm.dag().index_of(treatment);
    const int y = scm.dag().index_of(outcome);
    const auto means = linear_means(scm, t, x);
    if (means[y]) return {*means[y], 0.0, true};
    if (n_mc < 100) throw ValidationError("Monte Carlo effect needs n_mc >= 100");
    return mc_mean(scm, std::string(treatment), y, x, n_mc, seed);
}

TrueEffect true_effect(const Scm& scm, std::string_view treatment, std::string_view outcome, double x1, double x0,
                       std::size_t n_mc, std::uint64_t seed) {
    const int t = scm.dag().index_of(treatment);
    const int y = scm.dag().index_of(outcome);
    if (t == y) throw ValidationError("treatment and outcome must differ");
    const auto d = path_coefficients(scm, t);
    if (d[y]) return {*d[y] * (x1 - x0), 0.0, true};
    if (n_mc < 100) throw ValidationError("Monte Carlo effect needs n_mc >= 100");
    const auto m1 = mc_mean(scm, std::string(treatment), y, x1, n_mc, derive_seed(seed, 1));
    const auto m0 = mc_mean(scm, std::string(treatment), y, x0, n_mc, derive_seed(seed, 0));
    return {m1.value - m0.value, std::hypot(m1.std_error, m0.std_error), false};
}

}  // namespace causal
