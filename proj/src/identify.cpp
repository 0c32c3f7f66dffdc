#include "causal/identify.hpp"

#include <algorithm>

#include "causal/error.hpp"

namespace causal {

void validate_query(const Dag& dag, const CausalQuery& q) {
    if (q.treatment == q.outcome) throw ValidationError("treatment and outcome must differ ('" + q.treatment + "')");
    if (!dag.find(q.treatment)) throw ValidationError("treatment '" + q.treatment + "' is not in the graph");
    if (!dag.find(q.outcome)) throw ValidationError("outcome '" + q.outcome + "' is not in the graph");
}

namespace {

std::string render_path(const Dag& dag, const std::vector<int>& path) {
    std::string s = dag.name(path.front());
    for (std::size_t i = 1; i < path.size(); ++i) {
        s += dag.has_edge(path[i - 1], path[i]) ? " -> " : " <- ";
        s += dag.name(path[i]);
    }
    return s;
}

bool valid(const Dag& mutilated, const std::vector<bool>& desc, int x, int y, const std::vector<int>& z) {
    for (int v : z)
        if (desc[v]) return false;
    return d_separated(mutilated, x, y, z);
}

std::vector<std::string> names_of(const Dag& dag, const std::vector<int>& vs) {
    std::vector<std::string> out;
    for (int v : vs) out.push_back(dag.name(v));
    std::sort(out.begin(), out.end());
    return out;
}

bool subset_of(const std::vector<int>& a, const std::vector<int>& b) {
    return std::includes(b.begin(), b.end(), a.begin(), a.end());
}

}  // namespace

std::optional<std::string> backdoor_violation(const Dag& dag, int x, int y, const std::vector<int>& z) {
    const auto desc = dag.descendants(x);
    for (int v : z)
        if (desc[v]) return "'" + dag.name(v) + "' is a descendant of treatment '" + dag.name(x) + "'";
    const std::vector<int> xs{x};
    const auto trail = active_trail(dag.without_outgoing(xs), x, y, z);
    if (trail) return "open backdoor path " + render_path(dag, *trail);
    return std::nullopt;
}

BackdoorResult backdoor_sets(const Dag& dag, const CausalQuery& q, const std::optional<std::vector<std::string>>& candidates) {
    validate_query(dag, q);
    const int x = dag.index_of(q.treatment), y = dag.index_of(q.outcome);
    const auto desc = dag.descendants(x);
    const std::vector<int> xs{x};
    const Dag mutilated = dag.without_outgoing(xs);

    std::vector<int> pool;
    if (candidates) {
        for (const auto& c : *candidates) {
            const int v = dag.index_of(c);
            if (v != x && v != y && !desc[v]) pool.push_back(v);
        }
        std::sort(pool.begin(), pool.end());
        pool.erase(std::unique(pool.begin(), pool.end()), pool.end());
    } else {
        for (int v = 0; v < static_cast<int>(dag.size()); ++v)
            if (v != x && v != y && !desc[v]) pool.push_back(v);
    }

    BackdoorResult r;
    r.candidates = names_of(dag, pool);
    std::vector<std::vector<int>> found;
    if (pool.size() <= kMaxExhaustiveCandidates) {
        const std::size_t total = std::size_t{1} << pool.size();
        std::vector<std::vector<int>> by_size(pool.size() + 1);
        for (std::size_t k = 0; k <= pool.size(); ++k) {
            for (std::size_t mask = 0; mask < total; ++mask) {
                if (static_cast<std::size_t>(__builtin_popcountll(mask)) != k) continue;
                std::vector<int> z;
                for (std::size_t i = 0; i < pool.size(); ++i)
                    if (mask >> i & 1) z.push_back(pool[i]);
                bool dominated = false;
                for (const auto& f : found)
                    if (subset_of(f, z)) {
                        dominated = true;
                        break;
                    }
                if (!dominated && valid(mutilated, desc, x, y, z)) found.push_back(std::move(z));
            }
        }
    } else {
        r.exhaustive = false;
        // Greedy backward elimination from two starting points.
        std::vector<int> parents_in_pool;
        for (int p : dag.parents(x))
            if (std::binary_search(pool.begin(), pool.end(), p)) parents_in_pool.push_back(p);
        for (auto start : {pool, parents_in_pool}) {
            if (!valid(mutilated, desc, x, y, start)) continue;
            for (std::size_t i = start.size(); i-- > 0;) {
                auto trial = start;
                trial.erase(trial.begin() + static_cast<std::ptrdiff_t>(i));
                if (valid(mutilated, desc, x, y, trial)) start = std::move(trial);
            }
            if (std::find(found.begin(), found.end(), start) == found.end()) found.push_back(start);
        }
    }
    for (const auto& f : found) r.sets.push_back({names_of(dag, f), true});
    std::sort(r.sets.begin(), r.sets.end(), [](const AdjustmentSet& a, const AdjustmentSet& b) {
        if (a.variables.size() != b.variables.size()) return a.variables.size() < b.variables.size();
        return a.variables < b.variables;
    });
    return r;
}

bool is_backdoor_identifiable(const Dag& dag, const CausalQuery& q, const std::optional<std::vector<std::string>>& candidates) {
    return !backdoor_sets(dag, q, candidates).sets.empty();
}

std::string_view to_string(VariableRole r) {
    switch (r) {
        case VariableRole::confounder: return "confounder";
        case VariableRole::mediator: return "mediator";
        case VariableRole::collider_on_path: return "collider_on_path";
        case VariableRole::descendant_of_outcome: return "descendant_of_outcome";
        case VariableRole::neutral: return "neutral";
    }
    return "?";
}

namespace {

// Nodes connected to `from` in the skeleton with `removed` deleted.
std::vector<bool> connected_without(const Dag& dag, int from, int removed) {
    std::vector<bool> seen(dag.size(), false);
    seen[from] = true;
    std::vector<int> stack{from};
    while (!stack.empty()) {
        const int u = stack.back();
        stack.pop_back();
        auto visit = [&](int w) {
            if (w != removed && !seen[w]) {
                seen[w] = true;
                stack.push_back(w);
            }
        };
        for (int w : dag.parents(u)) visit(w);
        for (int w : dag.children(u)) visit(w);
    }
    return seen;
}

}  // namespace

RoleResult classify_roles(const Dag& dag, const CausalQuery& q) {
    validate_query(dag, q);
    const int x = dag.index_of(q.treatment), y = dag.index_of(q.outcome);
    const auto desc_x = dag.descendants(x), desc_y = dag.descendants(y);
    const std::vector<int> xs{x}, ys{y};
    const auto anc_x = dag.ancestors(xs), anc_y = dag.ancestors(ys);
    // ancestors of y through paths avoiding x
    const auto anc_y_no_x = dag.without_outgoing(xs).ancestors(ys);

    RoleResult r;
    for (int v = 0; v < static_cast<int>(dag.size()); ++v) {
        if (v == x || v == y) continue;
        const bool mediator = desc_x[v] && anc_y[v];
        const bool confounder = !desc_x[v] && anc_x[v] && anc_y_no_x[v];
        bool collider = false;
        const auto& ps = dag.parents(v);
        if (ps.size() >= 2) {
            const auto from_x = connected_without(dag, x, v), from_y = connected_without(dag, y, v);
            for (int a : ps)
                for (int b : ps)
                    if (a != b && from_x[a] && from_y[b]) collider = true;
        }
        const bool below_y = desc_y[v];
        std::vector<std::string> held;
        if (mediator) held.emplace_back("mediator");
        if (confounder) held.emplace_back("confounder");
        if (collider) held.emplace_back("collider_on_path");
        if (below_y) held.emplace_back("descendant_of_outcome");
        VariableRole role = mediator     ? VariableRole::mediator
                            : confounder ? VariableRole::confounder
                            : collider   ? VariableRole::collider_on_path
                            : below_y    ? VariableRole::descendant_of_outcome
                                         : VariableRole::neutral;
        if (held.size() > 1) {
            std::string msg = "'" + dag.name(v) + "' qualifies as";
            for (std::size_t i = 0; i < held.size(); ++i) msg += (i ? ", " : " ") + held[i];
            msg += "; classified " + std::string(to_string(role));
            r.diagnostics.push_back(msg);
        }
        r.roles[dag.name(v)] = role;
    }
    return r;
}

nlohmann::json FormulaSpec::to_json() const {
    return {{"outcome", outcome},
            {"treatment", treatment},
            {"conditioning", conditioning},
            {"marginalized", marginalized},
            {"text", text}};
}

FormulaSpec adjustment_formula(const Dag& dag, const CausalQuery& q, const AdjustmentSet& z) {
    validate_query(dag, q);
    const int x = dag.index_of(q.treatment), y = dag.index_of(q.outcome);
    std::vector<int> zi;
    for (const auto& v : z.variables) {
        const int i = dag.index_of(v);
        if (i == x || i == y) throw ValidationError("adjustment set may not contain the treatment or outcome");
        zi.push_back(i);
    }
    std::sort(zi.begin(), zi.end());
    zi.erase(std::unique(zi.begin(), zi.end()), zi.end());
    if (auto why = backdoor_violation(dag, x, y, zi))
        throw ValidationError("adjustment set fails the backdoor criterion: " + *why);

    FormulaSpec f;
    f.outcome = q.outcome;
    f.treatment = q.treatment;
    f.conditioning.push_back(q.treatment);
    f.marginalized = names_of(dag, zi);
    for (const auto& v : f.marginalized) f.conditioning.push_back(v);
    const std::string lhs = "P(" + q.outcome + "|do(" + q.treatment + "=x))";
    if (f.marginalized.empty()) {
        f.text = lhs + " = P(" + q.outcome + "|" + q.treatment + "=x)";
    } else {
        std::string zs;
        for (std::size_t i = 0; i < f.marginalized.size(); ++i) zs += (i ? "," : "") + f.marginalized[i];
        f.text = lhs + " = Σ_{" + zs + "} P(" + q.outcome + "|" + q.treatment + "=x," + zs + ")P(" + zs + ")";
    }
    return f;
}

}  // namespace causal
