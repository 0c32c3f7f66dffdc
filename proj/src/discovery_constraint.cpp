#include <algorithm>
#include <cmath>
#include <limits>

#include "causal/discovery.hpp"
#include "causal/error.hpp"
#include "discovery_internal.hpp"

namespace causal {

namespace detail {

const std::vector<std::size_t>* Skeleton::separating_set(int a, int b) const {
    auto it = sepset.find({std::min(a, b), std::max(a, b)});
    return it == sepset.end() ? nullptr : &it->second;
}

void for_each_subset(const std::vector<std::size_t>& pool, std::size_t k,
                     const std::function<bool(const std::vector<std::size_t>&)>& visit) {
    if (k > pool.size()) return;
    std::vector<std::size_t> idx(k);
    for (std::size_t i = 0; i < k; ++i) idx[i] = i;
    std::vector<std::size_t> subset(k);
    for (;;) {
        for (std::size_t i = 0; i < k; ++i) subset[i] = pool[idx[i]];
        if (!visit(subset)) return;
        // next combination
        std::size_t i = k;
        while (i > 0 && idx[i - 1] == pool.size() - k + (i - 1)) --i;
        if (i == 0) return;
        ++idx[i - 1];
        for (std::size_t j = i; j < k; ++j) idx[j] = idx[j - 1] + 1;
    }
}

Skeleton stable_skeleton(const CiTester& tester, const SlaConfig& cfg) {
    Skeleton s;
    s.n = tester.data().cols();
    const auto n = s.n;
    s.adj.assign(n, std::vector<bool>(n, true));
    for (std::size_t i = 0; i < n; ++i) s.adj[i][i] = false;

    for (std::size_t level = 0; level <= cfg.max_cond_set; ++level) {
        std::vector<std::vector<std::size_t>> frozen(n);
        for (std::size_t a = 0; a < n; ++a)
            for (std::size_t b = 0; b < n; ++b)
                if (s.adj[a][b]) frozen[a].push_back(b);
        bool any_testable = false;
        for (std::size_t a = 0; a < n; ++a)
            for (std::size_t b = a + 1; b < n; ++b) {
                if (!s.adj[a][b]) continue;
                bool removed = false;
                for (auto [x, y] : {std::pair{a, b}, std::pair{b, a}}) {
                    if (removed) break;
                    std::vector<std::size_t> pool;
                    for (auto v : frozen[x])
                        if (v != y) pool.push_back(v);
                    if (pool.size() < level) continue;
                    any_testable = true;
                    for_each_subset(pool, level, [&](const std::vector<std::size_t>& cond) {
                        ++s.tests;
                        if (tester.test(a, b, cond).independent_at(cfg.alpha)) {
                            s.adj[a][b] = s.adj[b][a] = false;
                            s.sepset[{static_cast<int>(a), static_cast<int>(b)}] = cond;
                            removed = true;
                            return false;
                        }
                        return true;
                    });
                }
            }
        if (!any_testable) break;
    }
    return s;
}

namespace {

// Larger is stronger dependence. -log p, continued by |statistic| once p
// underflows so ordering stays informative.
double association(const CiResult& r) {
    if (r.p_value > 1e-300) return -std::log(r.p_value);
    return 690.0 + std::abs(r.statistic);
}

}  // namespace

Skeleton mmpc_skeleton(const CiTester& tester, const SlaConfig& cfg) {
    Skeleton s;
    s.n = tester.data().cols();
    const auto n = s.n;
    std::vector<std::vector<std::size_t>> pc(n);
    std::map<Edge, std::vector<std::size_t>> seps;
    auto note_sep = [&](std::size_t a, std::size_t b, const std::vector<std::size_t>& cond) {
        seps.try_emplace({static_cast<int>(std::min(a, b)), static_cast<int>(std::max(a, b))}, cond);
    };

    for (std::size_t t = 0; t < n; ++t) {
        std::vector<std::size_t> cpc;
        std::vector<bool> dead(n, false);
        dead[t] = true;
        for (;;) {
            std::size_t best = n;
            double best_assoc = -std::numeric_limits<double>::infinity();
            for (std::size_t v = 0; v < n; ++v) {
                if (dead[v] || std::find(cpc.begin(), cpc.end(), v) != cpc.end()) continue;
                double min_assoc = std::numeric_limits<double>::infinity();
                const auto max_k = std::min(cfg.max_cond_set, cpc.size());
                for (std::size_t k = 0; k <= max_k && !dead[v]; ++k)
                    for_each_subset(cpc, k, [&](const std::vector<std::size_t>& cond) {
                        ++s.tests;
                        const auto r = tester.test(t, v, cond);
                        if (r.independent_at(cfg.alpha)) {
                            dead[v] = true;
                            note_sep(t, v, cond);
                            return false;
                        }
                        min_assoc = std::min(min_assoc, association(r));
                        return true;
                    });
                if (dead[v]) continue;
                if (min_assoc > best_assoc) {
                    best_assoc = min_assoc;
                    best = v;
                }
            }
            if (best == n) break;
            cpc.push_back(best);
        }
        // backward phase
        for (std::size_t i = 0; i < cpc.size();) {
            const auto x = cpc[i];
            std::vector<std::size_t> rest;
            for (auto v : cpc)
                if (v != x) rest.push_back(v);
            bool drop = false;
            for (std::size_t k = 0; k <= std::min(cfg.max_cond_set, rest.size()) && !drop; ++k)
                for_each_subset(rest, k, [&](const std::vector<std::size_t>& cond) {
                    ++s.tests;
                    if (tester.test(t, x, cond).independent_at(cfg.alpha)) {
                        drop = true;
                        note_sep(t, x, cond);
                        return false;
                    }
                    return true;
                });
            if (drop) cpc.erase(cpc.begin() + static_cast<std::ptrdiff_t>(i));
            else ++i;
        }
        std::sort(cpc.begin(), cpc.end());
        pc[t] = std::move(cpc);
    }

    s.adj.assign(n, std::vector<bool>(n, false));
    for (std::size_t a = 0; a < n; ++a)
        for (auto b : pc[a])
            if (std::binary_search(pc[b].begin(), pc[b].end(), a)) s.adj[a][b] = s.adj[b][a] = true;
    s.sepset = std::move(seps);
    return s;
}

}  // namespace detail

namespace {

// Orients unshielded colliders a -> c <- b (c outside sepset(a, b)), leaving
// conflicting orientations undirected, then closes under Meek rules.
Pdag orient(const detail::Skeleton& s, std::size_t& conflicts) {
    const int n = static_cast<int>(s.n);
    Pdag g(s.n);
    for (int a = 0; a < n; ++a)
        for (int b = a + 1; b < n; ++b)
            if (s.adj[a][b]) g.add_undirected(a, b);
    std::vector<std::vector<bool>> arrow(s.n, std::vector<bool>(s.n, false));
    for (int c = 0; c < n; ++c)
        for (int a = 0; a < n; ++a) {
            if (!s.adj[a][c]) continue;
            for (int b = a + 1; b < n; ++b) {
                if (b == c || !s.adj[b][c] || s.adj[a][b]) continue;
                const auto* sep = s.separating_set(a, b);
                const bool in_sep = sep && std::find(sep->begin(), sep->end(), static_cast<std::size_t>(c)) != sep->end();
                if (!in_sep) arrow[a][c] = arrow[b][c] = true;
            }
        }
    conflicts = 0;
    for (int a = 0; a < n; ++a)
        for (int c = 0; c < n; ++c) {
            if (!arrow[a][c]) continue;
            if (arrow[c][a]) {
                if (a < c) ++conflicts;
                continue;
            }
            g.add_directed(a, c);
        }
    apply_meek_rules(g);
    return g;
}

SlaOutput from_pdag(const Pdag& g) {
    SlaOutput out;
    g.split(out.directed, out.undirected);
    return out;
}

}  // namespace

namespace sla {

SlaOutput pc(const FeatureMatrix& data, const SlaConfig& cfg) {
    CiTester tester(data);
    const auto skel = detail::stable_skeleton(tester, cfg);
    std::size_t conflicts = 0;
    auto out = from_pdag(orient(skel, conflicts));
    out.diagnostics["tests_run"] = static_cast<double>(skel.tests);
    out.diagnostics["collider_conflicts"] = static_cast<double>(conflicts);
    return out;
}

SlaOutput rfci_lite(const FeatureMatrix& data, const SlaConfig& cfg) {
    CiTester tester(data);
    auto skel = detail::stable_skeleton(tester, cfg);
    const int n = static_cast<int>(skel.n);
    std::size_t extra_tests = 0, removed = 0;
    // Verify each candidate collider a - c - b: both a and b must remain
    // dependent on c given sepset(a, b); otherwise the offending edge goes.
    for (bool changed = true; changed;) {
        changed = false;
        for (int c = 0; c < n && !changed; ++c)
            for (int a = 0; a < n && !changed; ++a) {
                if (!skel.adj[a][c]) continue;
                for (int b = a + 1; b < n && !changed; ++b) {
                    if (b == c || !skel.adj[b][c] || skel.adj[a][b]) continue;
                    const auto* sep = skel.separating_set(a, b);
                    const std::vector<std::size_t> cond = sep ? *sep : std::vector<std::size_t>{};
                    if (std::find(cond.begin(), cond.end(), static_cast<std::size_t>(c)) != cond.end()) continue;
                    for (int end : {a, b}) {
                        ++extra_tests;
                        if (tester.test(end, c, cond).independent_at(cfg.alpha)) {
                            skel.adj[end][c] = skel.adj[c][end] = false;
                            skel.sepset[{std::min(end, c), std::max(end, c)}] = cond;
                            ++removed;
                            changed = true;
                            break;
                        }
                    }
                }
            }
    }
    std::size_t conflicts = 0;
    auto out = from_pdag(orient(skel, conflicts));
    out.diagnostics["tests_run"] = static_cast<double>(skel.tests + extra_tests);
    out.diagnostics["edges_removed_by_triple_check"] = static_cast<double>(removed);
    out.diagnostics["collider_conflicts"] = static_cast<double>(conflicts);
    if (!out.undirected.empty())
        out.warnings.push_back("undirected edges are ambiguous marks; latent-variable (PAG) semantics are not modelled");
    return out;
}

SlaOutput mmhc(const FeatureMatrix& data, const SlaConfig& cfg) {
    CiTester tester(data);
    const auto skel = detail::mmpc_skeleton(tester, cfg);
    BicScore score(data, cfg.score);
    detail::HillClimbOptions opts;
    opts.allowed = skel.adj;
    opts.max_iters = cfg.max_iters;
    const auto res = detail::hill_climb(score, skel.n, std::vector<std::vector<int>>(skel.n), opts);
    SlaOutput out;
    out.directed = detail::edges_of(res.parents);
    out.score_trace = res.trace;
    out.diagnostics["tests_run"] = static_cast<double>(skel.tests);
    out.diagnostics["score"] = res.score;
    out.diagnostics["moves"] = static_cast<double>(res.moves);
    std::size_t skel_edges = 0;
    for (std::size_t a = 0; a < skel.n; ++a)
        for (std::size_t b = a + 1; b < skel.n; ++b) skel_edges += skel.adj[a][b];
    out.diagnostics["skeleton_edges"] = static_cast<double>(skel_edges);
    return out;
}

}  // namespace sla

}  // namespace causal
