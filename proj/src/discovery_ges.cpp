#include <algorithm>
#include <limits>

#include "causal/discovery.hpp"
#include "causal/error.hpp"
#include "discovery_internal.hpp"

// Greedy equivalence search over CPDAGs with the insert/delete operators.

namespace causal::sla {

namespace {

constexpr double kMinGain = 1e-9;

std::vector<int> sorted_union(std::vector<int> a, const std::vector<int>& b) {
    a.insert(a.end(), b.begin(), b.end());
    std::sort(a.begin(), a.end());
    a.erase(std::unique(a.begin(), a.end()), a.end());
    return a;
}

std::vector<int> without(std::vector<int> a, int v) {
    a.erase(std::remove(a.begin(), a.end(), v), a.end());
    return a;
}

bool is_clique(const Pdag& g, const std::vector<int>& s) {
    for (std::size_t i = 0; i < s.size(); ++i)
        for (std::size_t j = i + 1; j < s.size(); ++j)
            if (!g.adjacent(s[i], s[j])) return false;
    return true;
}

// True if every semi-directed path from `from` to `to` meets `block`.
bool semi_directed_blocked(const Pdag& g, int from, int to, const std::vector<int>& block) {
    const int n = static_cast<int>(g.size());
    std::vector<bool> seen(g.size(), false);
    for (int b : block) seen[b] = true;
    seen[from] = true;
    std::vector<int> stack{from};
    while (!stack.empty()) {
        int u = stack.back();
        stack.pop_back();
        for (int v = 0; v < n; ++v) {
            if (!(g.directed(u, v) || g.undirected(u, v))) continue;
            if (v == to) return false;
            if (!seen[v]) {
                seen[v] = true;
                stack.push_back(v);
            }
        }
    }
    return true;
}

// All subsets, or only those of size <= 2 when the pool is large.
std::vector<std::vector<int>> subsets(const std::vector<int>& pool, std::size_t max_full) {
    std::vector<std::vector<int>> out;
    const std::size_t max_k = pool.size() <= max_full ? pool.size() : std::min<std::size_t>(2, pool.size());
    std::vector<std::size_t> idx(pool.size());
    for (std::size_t i = 0; i < pool.size(); ++i) idx[i] = i;
    for (std::size_t k = 0; k <= max_k; ++k)
        detail::for_each_subset(idx, k, [&](const std::vector<std::size_t>& sel) {
            std::vector<int> s;
            for (auto i : sel) s.push_back(pool[i]);
            out.push_back(std::move(s));
            return true;
        });
    return out;
}

std::vector<std::vector<int>> parents_of(std::size_t n, const std::set<Edge>& dag) {
    std::vector<std::vector<int>> ps(n);
    for (auto [a, b] : dag) ps[b].push_back(a);
    for (auto& p : ps) std::sort(p.begin(), p.end());
    return ps;
}

struct Operator {
    int x = -1, y = -1;
    std::vector<int> set;  // T for insert, H for delete
    double delta = -std::numeric_limits<double>::infinity();
};

// Neighbours of y that are adjacent to x.
std::vector<int> na_yx(const Pdag& g, int y, int x) {
    std::vector<int> out;
    for (int t : g.neighbours(y))
        if (g.adjacent(t, x)) out.push_back(t);
    return out;
}

Operator best_insert(const Pdag& g, const BicScore& score, std::size_t max_subset) {
    Operator best;
    const int n = static_cast<int>(g.size());
    for (int x = 0; x < n; ++x)
        for (int y = 0; y < n; ++y) {
            if (x == y || g.adjacent(x, y)) continue;
            const auto na = na_yx(g, y, x);
            std::vector<int> t0;
            for (int t : g.neighbours(y))
                if (!g.adjacent(t, x)) t0.push_back(t);
            const auto pa = g.parents(y);
            for (const auto& t : subsets(t0, max_subset)) {
                const auto cond = sorted_union(na, t);
                if (!is_clique(g, cond)) continue;
                if (!semi_directed_blocked(g, y, x, cond)) continue;
                const auto base = sorted_union(pa, cond);
                const double delta = score.local(y, sorted_union(base, {x})) - score.local(y, base);
                if (delta > best.delta) best = {x, y, t, delta};
            }
        }
    return best;
}

Operator best_delete(const Pdag& g, const BicScore& score, std::size_t max_subset) {
    Operator best;
    const int n = static_cast<int>(g.size());
    for (int x = 0; x < n; ++x)
        for (int y = 0; y < n; ++y) {
            if (x == y || !(g.directed(x, y) || g.undirected(x, y))) continue;
            const auto na = na_yx(g, y, x);
            const auto pa = g.parents(y);
            for (const auto& h : subsets(na, max_subset)) {
                std::vector<int> rest;
                for (int v : na)
                    if (std::find(h.begin(), h.end(), v) == h.end()) rest.push_back(v);
                if (!is_clique(g, rest)) continue;
                const auto base = without(sorted_union(pa, rest), x);
                const double delta = score.local(y, base) - score.local(y, sorted_union(base, {x}));
                if (delta > best.delta) best = {x, y, h, delta};
            }
        }
    return best;
}

// Re-derives the CPDAG of the modified PDAG; nullopt if it admits no extension.
std::optional<Pdag> complete(const Pdag& g) {
    auto ext = dag_extension(g);
    if (!ext) return std::nullopt;
    return cpdag_of(g.size(), *ext);
}

}  // namespace

SlaOutput ges(const FeatureMatrix& data, const SlaConfig& cfg) {
    BicScore score(data, cfg.score);
    const auto n = data.cols();
    Pdag g(n);
    SlaOutput out;
    std::size_t inserts = 0, deletes = 0, rejected = 0;
    auto total = [&](const Pdag& p) { return score.total(parents_of(n, *dag_extension(p))); };

    for (std::size_t iter = 0; iter < cfg.max_iters; ++iter) {
        const auto op = best_insert(g, score, cfg.ges_max_subset);
        if (op.x < 0 || op.delta <= kMinGain) break;
        Pdag next = g;
        next.add_directed(op.x, op.y);
        for (int t : op.set) next.add_directed(t, op.y);
        auto done = complete(next);
        if (!done) {
            ++rejected;
            break;
        }
        g = std::move(*done);
        ++inserts;
        out.score_trace.push_back(total(g));
    }
    for (std::size_t iter = 0; iter < cfg.max_iters; ++iter) {
        const auto op = best_delete(g, score, cfg.ges_max_subset);
        if (op.x < 0 || op.delta <= kMinGain) break;
        Pdag next = g;
        next.remove(op.x, op.y);
        for (int h : op.set) {
            next.add_directed(op.y, h);
            if (next.undirected(op.x, h)) next.add_directed(op.x, h);
        }
        auto done = complete(next);
        if (!done) {
            ++rejected;
            break;
        }
        g = std::move(*done);
        ++deletes;
        out.score_trace.push_back(total(g));
    }
    g.split(out.directed, out.undirected);
    out.diagnostics["inserts"] = static_cast<double>(inserts);
    out.diagnostics["deletes"] = static_cast<double>(deletes);
    out.diagnostics["score"] = total(g);
    if (rejected) out.warnings.push_back("an operator produced a PDAG without a consistent extension; search stopped early");
    return out;
}

}  // namespace causal::sla
