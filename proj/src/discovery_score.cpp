#include <algorithm>
#include <deque>
#include <limits>

#include "causal/discovery.hpp"
#include "causal/error.hpp"
#include "causal/random.hpp"
#include "discovery_internal.hpp"

namespace causal {

namespace {

bool is_acyclic_parents(const std::vector<std::vector<int>>& parents) {
    const auto n = parents.size();
    std::vector<std::size_t> indeg(n);
    std::vector<std::vector<int>> children(n);
    for (std::size_t v = 0; v < n; ++v) {
        indeg[v] = parents[v].size();
        for (int p : parents[v]) children[p].push_back(static_cast<int>(v));
    }
    std::vector<int> ready;
    for (std::size_t v = 0; v < n; ++v)
        if (indeg[v] == 0) ready.push_back(static_cast<int>(v));
    std::size_t seen = 0;
    while (!ready.empty()) {
        int u = ready.back();
        ready.pop_back();
        ++seen;
        for (int c : children[u])
            if (--indeg[c] == 0) ready.push_back(c);
    }
    return seen == n;
}

}  // namespace

namespace detail {

namespace {

constexpr double kMinGain = 1e-9;

bool has_parent(const std::vector<int>& ps, int p) {
    return std::binary_search(ps.begin(), ps.end(), p);
}

void insert_sorted(std::vector<int>& ps, int p) {
    ps.insert(std::upper_bound(ps.begin(), ps.end(), p), p);
}

void erase_sorted(std::vector<int>& ps, int p) {
    ps.erase(std::lower_bound(ps.begin(), ps.end(), p));
}

// reach[a][b]: a directed path a ~> b exists (a reaches itself).
std::vector<std::vector<bool>> reachability(const std::vector<std::vector<int>>& parents) {
    const auto n = parents.size();
    std::vector<std::vector<int>> children(n);
    for (std::size_t v = 0; v < n; ++v)
        for (int p : parents[v]) children[p].push_back(static_cast<int>(v));
    std::vector<std::vector<bool>> reach(n, std::vector<bool>(n, false));
    for (std::size_t s = 0; s < n; ++s) {
        std::vector<int> stack{static_cast<int>(s)};
        reach[s][s] = true;
        while (!stack.empty()) {
            int u = stack.back();
            stack.pop_back();
            for (int c : children[u])
                if (!reach[s][c]) {
                    reach[s][c] = true;
                    stack.push_back(c);
                }
        }
    }
    return reach;
}

Move inverse(const Move& m) {
    switch (m.type) {
        case MoveType::add: return {MoveType::remove, m.from, m.to};
        case MoveType::remove: return {MoveType::add, m.from, m.to};
        case MoveType::reverse: return {MoveType::reverse, m.to, m.from};
    }
    return m;
}

void apply_move(std::vector<std::vector<int>>& parents, const Move& m) {
    switch (m.type) {
        case MoveType::add: insert_sorted(parents[m.to], m.from); break;
        case MoveType::remove: erase_sorted(parents[m.to], m.from); break;
        case MoveType::reverse:
            erase_sorted(parents[m.to], m.from);
            insert_sorted(parents[m.from], m.to);
            break;
    }
}

double local_with(const BicScore& score, int v, std::vector<int> ps, int add, int drop) {
    if (drop >= 0) erase_sorted(ps, drop);
    if (add >= 0) insert_sorted(ps, add);
    return score.local(v, ps);
}

}  // namespace

std::set<Edge> edges_of(const std::vector<std::vector<int>>& parents) {
    std::set<Edge> out;
    for (std::size_t v = 0; v < parents.size(); ++v)
        for (int p : parents[v]) out.emplace(p, static_cast<int>(v));
    return out;
}

HillClimbResult hill_climb(const BicScore& score, std::size_t n, std::vector<std::vector<int>> start,
                           const HillClimbOptions& opts) {
    if (start.size() != n) throw ValidationError("hill_climb: start graph has the wrong size");
    for (auto& ps : start) std::sort(ps.begin(), ps.end());
    auto allowed = [&](int a, int b) { return !opts.allowed || (*opts.allowed)[a][b]; };
    const bool tabu = opts.tabu_len > 0;

    std::vector<std::vector<int>> g = std::move(start);
    std::vector<double> local(n);
    for (std::size_t v = 0; v < n; ++v) local[v] = score.local(static_cast<int>(v), g[v]);
    double current = 0.0;
    for (double s : local) current += s;

    HillClimbResult res;
    res.parents = g;
    res.score = current;
    std::deque<Move> tabu_list;
    std::size_t stale = 0;

    for (std::size_t iter = 0; iter < opts.max_iters; ++iter) {
        const auto reach = reachability(g);
        Move best{MoveType::add, -1, -1};
        double best_delta = -std::numeric_limits<double>::infinity();
        auto consider = [&](const Move& m, double delta) {
            if (tabu && std::find(tabu_list.begin(), tabu_list.end(), m) != tabu_list.end()) return;
            if (delta > best_delta) {
                best_delta = delta;
                best = m;
            }
        };
        const int ni = static_cast<int>(n);
        for (int a = 0; a < ni; ++a)
            for (int b = 0; b < ni; ++b) {
                if (a == b) continue;
                if (has_parent(g[b], a)) {
                    consider({MoveType::remove, a, b}, local_with(score, b, g[b], -1, a) - local[b]);
                    if (!allowed(b, a)) continue;
                    // reversing a -> b is acyclic unless a reaches b another way
                    bool other_path = false;
                    for (std::size_t c = 0; c < n && !other_path; ++c)
                        if (static_cast<int>(c) != b && has_parent(g[c], a) && reach[c][b]) other_path = true;
                    if (other_path) continue;
                    const double d = local_with(score, b, g[b], -1, a) - local[b] +
                                     local_with(score, a, g[a], b, -1) - local[a];
                    consider({MoveType::reverse, a, b}, d);
                } else if (!has_parent(g[a], b) && allowed(a, b) && !reach[b][a]) {
                    consider({MoveType::add, a, b}, local_with(score, b, g[b], a, -1) - local[b]);
                }
            }
        if (best.from < 0) break;
        if (!tabu && best_delta <= kMinGain) break;

        apply_move(g, best);
        local[best.from] = score.local(best.from, g[best.from]);
        local[best.to] = score.local(best.to, g[best.to]);
        current = 0.0;
        for (double s : local) current += s;
        ++res.moves;

        if (tabu) {
            tabu_list.push_back(inverse(best));
            while (tabu_list.size() > opts.tabu_len) tabu_list.pop_front();
            if (current > res.score + kMinGain) {
                if (stale > 0) ++res.escapes;
                res.score = current;
                res.parents = g;
                stale = 0;
            } else if (++stale > opts.max_tabu) {
                res.trace.push_back(res.score);
                break;
            }
            res.trace.push_back(res.score);
        } else {
            res.score = current;
            res.parents = g;
            res.trace.push_back(current);
        }
    }
    return res;
}

}  // namespace detail

namespace sla {

SlaOutput gds(const FeatureMatrix& data, const SlaConfig& cfg) {
    BicScore score(data, cfg.score);
    const auto n = data.cols();
    detail::HillClimbOptions opts;
    opts.max_iters = cfg.max_iters;
    auto best = detail::hill_climb(score, n, std::vector<std::vector<int>>(n), opts);
    std::vector<double> trace = best.trace;
    std::size_t improved = 0;

    for (std::size_t r = 1; r <= cfg.restarts; ++r) {
        // Random restart: a fresh random DAG over a random node order.
        const Dag rd = random_dag(n, 0.3, derive_seed(cfg.seed, 0x9d5000 + r));
        std::vector<std::vector<int>> start(n);
        for (std::size_t v = 0; v < n; ++v) start[v] = rd.parents(static_cast<int>(v));
        auto res = detail::hill_climb(score, n, start, opts);
        if (res.score > best.score + 1e-9) {
            best = std::move(res);
            trace.push_back(best.score);
            ++improved;
        }
    }
    SlaOutput out;
    out.directed = detail::edges_of(best.parents);
    out.score_trace = std::move(trace);
    out.diagnostics["score"] = best.score;
    out.diagnostics["restarts"] = static_cast<double>(cfg.restarts);
    out.diagnostics["restarts_improved"] = static_cast<double>(improved);
    out.diagnostics["score_evaluations"] = static_cast<double>(score.evaluations());
    return out;
}

SlaOutput tabu(const FeatureMatrix& data, const SlaConfig& cfg) {
    BicScore score(data, cfg.score);
    const auto n = data.cols();
    detail::HillClimbOptions opts;
    opts.max_iters = cfg.max_iters;
    opts.tabu_len = cfg.tabu_len;
    opts.max_tabu = cfg.max_tabu;
    const auto res = detail::hill_climb(score, n, std::vector<std::vector<int>>(n), opts);
    SlaOutput out;
    out.directed = detail::edges_of(res.parents);
    out.score_trace = res.trace;
    out.diagnostics["score"] = res.score;
    out.diagnostics["moves"] = static_cast<double>(res.moves);
    out.diagnostics["escapes"] = static_cast<double>(res.escapes);
    return out;
}

}  // namespace sla

}  // namespace causal
