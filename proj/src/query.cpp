#include <cmath>

#include "causal/error.hpp"
#include "causal/estimate.hpp"
#include "causal/glm.hpp"
#include "causal/scm.hpp"

namespace causal {

ModelSet fit_model_set(const Dag& dag, const FeatureMatrix& data) {
    ModelSet ms;
    ms.dag = dag;
    for (std::size_t v = 0; v < dag.size(); ++v) {
        const auto& name = dag.name(static_cast<int>(v));
        if (!data.find(name)) throw ValidationError("graph node '" + name + "' is not a data column");
        if (data.column(name).kind != ColumnKind::binary)
            throw ValidationError("query models need binary variables; '" + name + "' is continuous");
        std::vector<std::string> parents;
        for (int p : dag.parents(static_cast<int>(v))) parents.push_back(dag.name(p));
        ms.models.push_back(fit_logistic(data, name, parents));
    }
    return ms;
}

ModelSet model_set_from_scm(const Scm& scm) {
    ModelSet ms;
    ms.dag = scm.dag();
    for (std::size_t v = 0; v < ms.dag.size(); ++v) {
        const int vi = static_cast<int>(v);
        const auto& mech = scm.mechanism(vi);
        if (mech.type != MechanismType::logistic)
            throw ValidationError("node '" + ms.dag.name(vi) + "' is not logistic; exact query models need binary nodes");
        OutcomeModel m;
        m.outcome = ms.dag.name(vi);
        m.intercept = mech.intercept;
        for (int p : ms.dag.parents(vi)) {
            m.features.push_back(ms.dag.name(p));
            m.coefficients[ms.dag.name(p)] = scm.weight(p, vi);
        }
        ms.models.push_back(std::move(m));
    }
    return ms;
}

namespace {

struct Compiled {
    const Dag* dag;
    std::vector<std::vector<int>> parents;
    std::vector<std::vector<double>> weights;
    std::vector<double> intercepts;
};

Compiled compile(const ModelSet& ms) {
    if (ms.models.size() != ms.dag.size()) throw ValidationError("model set does not cover every graph node");
    Compiled c{&ms.dag, {}, {}, {}};
    for (std::size_t v = 0; v < ms.dag.size(); ++v) {
        const auto& m = ms.models[v];
        if (m.link != Link::logistic) throw ValidationError("query models must be logistic");
        c.intercepts.push_back(m.intercept);
        std::vector<int> ps;
        std::vector<double> ws;
        for (const auto& f : m.features) {
            ps.push_back(ms.dag.index_of(f));
            ws.push_back(m.coefficient(f));
        }
        c.parents.push_back(std::move(ps));
        c.weights.push_back(std::move(ws));
    }
    return c;
}

// Sum over free binary values of the product of local probabilities of the
// nodes in `factors`. `fixed[v] >= 0` pins a value.
double mass(const Compiled& c, const std::vector<bool>& scope, const std::vector<bool>& factors, const std::vector<int>& fixed) {
    const auto n = fixed.size();
    std::vector<int> free;
    for (std::size_t v = 0; v < n; ++v)
        if (scope[v] && fixed[v] < 0) free.push_back(static_cast<int>(v));
    if (free.size() > kMaxEnumeratedVariables)
        throw ValidationError("query needs " + std::to_string(free.size()) + " free variables; at most 20 are enumerated");
    std::vector<int> values = fixed;
    double total = 0.0;
    const std::size_t combos = std::size_t{1} << free.size();
    for (std::size_t mask = 0; mask < combos; ++mask) {
        for (std::size_t i = 0; i < free.size(); ++i) values[free[i]] = static_cast<int>(mask >> i & 1);
        double prod = 1.0;
        for (std::size_t v = 0; v < n && prod > 0.0; ++v) {
            if (!factors[v]) continue;
            double eta = c.intercepts[v];
            for (std::size_t k = 0; k < c.parents[v].size(); ++k) eta += c.weights[v][k] * values[c.parents[v][k]];
            const double p1 = glm::sigmoid(eta);
            prod *= values[v] == 1 ? p1 : 1.0 - p1;
        }
        total += prod;
    }
    return total;
}

// Writes `a` into `fixed`; false on a contradiction with an existing pin.
bool pin(const Dag& dag, const Assignment& a, std::vector<int>& fixed) {
    for (const auto& [name, value] : a) {
        if (value != 0 && value != 1) throw ValidationError("value for '" + name + "' must be 0 or 1");
        const int v = dag.index_of(name);
        if (fixed[v] >= 0 && fixed[v] != value) return false;
        fixed[v] = value;
    }
    return true;
}

std::vector<int> indices(const Dag& dag, const Assignment& a) {
    std::vector<int> out;
    for (const auto& kv : a) out.push_back(dag.index_of(kv.first));
    return out;
}

}  // namespace

double conditional_query(const ModelSet& models, const Assignment& target, const Assignment& evidence) {
    const auto c = compile(models);
    const auto& dag = models.dag;
    if (target.empty()) throw ValidationError("conditional query needs a target");
    std::vector<int> ev_fixed(dag.size(), -1), joint_fixed(dag.size(), -1);
    pin(dag, evidence, ev_fixed);
    pin(dag, evidence, joint_fixed);
    const bool consistent = pin(dag, target, joint_fixed);

    auto ev_nodes = indices(dag, evidence);
    auto all_nodes = ev_nodes;
    for (int v : indices(dag, target)) all_nodes.push_back(v);
    const auto ev_scope = dag.ancestors(ev_nodes);
    const auto joint_scope = dag.ancestors(all_nodes);

    const double den = ev_nodes.empty() ? 1.0 : mass(c, ev_scope, ev_scope, ev_fixed);
    if (!(den > 0.0)) throw RuntimeError("evidence has zero probability under the fitted models");
    if (!consistent) return 0.0;
    const double num = mass(c, joint_scope, joint_scope, joint_fixed);
    return std::clamp(num / den, 0.0, 1.0);
}

double interventional_query(const ModelSet& models, const Assignment& intervention, const Assignment& target) {
    const auto c = compile(models);
    const auto& dag = models.dag;
    if (target.empty()) throw ValidationError("interventional query needs a target");
    std::vector<int> fixed(dag.size(), -1);
    pin(dag, intervention, fixed);
    const auto do_nodes = indices(dag, intervention);
    const Dag mutilated = dag.without_incoming(do_nodes);
    const bool consistent = pin(dag, target, fixed);
    if (!consistent) return 0.0;
    const auto scope = mutilated.ancestors(indices(dag, target));
    auto factors = scope;
    for (int v : do_nodes) factors[v] = false;
    return std::clamp(mass(c, scope, factors, fixed), 0.0, 1.0);
}

}  // namespace causal
