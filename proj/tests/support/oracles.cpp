#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

namespace oracle {

bool acyclic(int n, const EdgeList& edges) {
    std::vector<int> indeg(n, 0);
    for (auto [a, b] : edges) ++indeg[b];
    std::vector<bool> done(n, false);
    for (int removed = 0; removed < n; ++removed) {
        int pick = -1;
        for (int v = 0; v < n && pick < 0; ++v)
            if (!done[v] && indeg[v] == 0) pick = v;
        if (pick < 0) return false;
        done[pick] = true;
        for (auto [a, b] : edges)
            if (a == pick) --indeg[b];
    }
    return true;
}

std::vector<EdgeList> all_dags(int n) {
    std::vector<std::pair<int, int>> pairs;
    for (int a = 0; a < n; ++a)
        for (int b = a + 1; b < n; ++b) pairs.emplace_back(a, b);
    std::vector<EdgeList> out;
    std::size_t total = 1;
    for (std::size_t i = 0; i < pairs.size(); ++i) total *= 3;
    for (std::size_t code = 0; code < total; ++code) {
        EdgeList e;
        std::size_t c = code;
        for (auto [a, b] : pairs) {
            const auto digit = c % 3;
            c /= 3;
            if (digit == 1) e.emplace_back(a, b);
            if (digit == 2) e.emplace_back(b, a);
        }
        if (acyclic(n, e)) out.push_back(std::move(e));
    }
    return out;
}

std::vector<bool> descendants(int n, const EdgeList& edges, int v) {
    std::vector<bool> seen(n, false);
    seen[v] = true;
    for (bool grew = true; grew;) {
        grew = false;
        for (auto [a, b] : edges)
            if (seen[a] && !seen[b]) seen[b] = grew = true;
    }
    return seen;
}

bool dsep_by_paths(int n, const EdgeList& edges, int x, int y, const std::vector<bool>& z) {
    std::vector<std::vector<bool>> dir(n, std::vector<bool>(n, false));
    for (auto [a, b] : edges) dir[a][b] = true;
    std::vector<bool> z_or_below(n, false);  // node has itself or a descendant in z
    for (int v = 0; v < n; ++v) {
        const auto d = descendants(n, edges, v);
        for (int u = 0; u < n; ++u)
            if (d[u] && z[u]) z_or_below[v] = true;
    }

    std::vector<int> path{x};
    std::vector<bool> on(n, false);
    on[x] = true;
    bool active_found = false;
    std::function<void(int)> extend = [&](int u) {
        if (active_found) return;
        if (u == y) {
            bool active = true;
            for (std::size_t i = 1; i + 1 < path.size() && active; ++i) {
                const int prev = path[i - 1], mid = path[i], next = path[i + 1];
                const bool collider = dir[prev][mid] && dir[next][mid];
                active = collider ? z_or_below[mid] : !z[mid];
            }
            active_found = active;
            return;
        }
        for (int w = 0; w < n; ++w) {
            if (on[w] || !(dir[u][w] || dir[w][u])) continue;
            on[w] = true;
            path.push_back(w);
            extend(w);
            path.pop_back();
            on[w] = false;
        }
    };
    extend(x);
    return !active_found;
}

std::vector<std::vector<std::string>> minimal_backdoor_sets(int n, const EdgeList& edges, int x, int y,
                                                            const std::vector<std::string>& names) {
    const auto below_x = descendants(n, edges, x);
    std::vector<int> cand;
    for (int v = 0; v < n; ++v)
        if (v != x && v != y && !below_x[v]) cand.push_back(v);
    EdgeList cut;
    for (auto e : edges)
        if (e.first != x) cut.push_back(e);

    const auto m = cand.size();
    std::vector<bool> valid(std::size_t{1} << m, false);
    for (std::size_t mask = 0; mask < valid.size(); ++mask) {
        std::vector<bool> z(n, false);
        for (std::size_t i = 0; i < m; ++i)
            if (mask >> i & 1) z[cand[i]] = true;
        valid[mask] = dsep_by_paths(n, cut, x, y, z);
    }
    std::vector<std::vector<std::string>> out;
    for (std::size_t mask = 0; mask < valid.size(); ++mask) {
        if (!valid[mask]) continue;
        bool minimal = true;
        for (std::size_t sub = (mask - 1) & mask; minimal && sub != mask; sub = (sub - 1) & mask) {
            if (valid[sub]) minimal = false;
            if (sub == 0) break;
        }
        if (!minimal) continue;
        std::vector<std::string> s;
        for (std::size_t i = 0; i < m; ++i)
            if (mask >> i & 1) s.push_back(names[cand[i]]);
        std::sort(s.begin(), s.end());
        out.push_back(std::move(s));
    }
    std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
        return a.size() != b.size() ? a.size() < b.size() : a < b;
    });
    return out;
}

namespace {

double joint(const BinaryNet& net, const std::vector<int>& state, const std::map<int, int>& fixed) {
    double p = 1.0;
    for (int v = 0; v < net.n; ++v) {
        if (auto it = fixed.find(v); it != fixed.end()) {
            if (state[v] != it->second) return 0.0;
            continue;
        }
        double eta = net.intercepts[v];
        for (std::size_t k = 0; k < net.parents[v].size(); ++k) eta += net.weights[v][k] * state[net.parents[v][k]];
        const double p1 = 1.0 / (1.0 + std::exp(-eta));
        p *= state[v] ? p1 : 1.0 - p1;
    }
    return p;
}

bool matches(const std::vector<int>& state, const std::map<int, int>& a) {
    for (auto [v, val] : a)
        if (state[v] != val) return false;
    return true;
}

template <class F>
void for_each_state(int n, F&& f) {
    std::vector<int> s(n);
    for (unsigned code = 0; code < (1u << n); ++code) {
        for (int v = 0; v < n; ++v) s[v] = (code >> v) & 1;
        f(s);
    }
}

}  // namespace

double interventional_by_enumeration(const BinaryNet& net, const std::map<int, int>& fixed,
                                     const std::map<int, int>& target) {
    double num = 0.0;
    for_each_state(net.n, [&](const std::vector<int>& s) {
        if (matches(s, target)) num += joint(net, s, fixed);
    });
    return num;
}

double conditional_by_enumeration(const BinaryNet& net, const std::map<int, int>& target,
                                  const std::map<int, int>& evidence) {
    double num = 0.0, den = 0.0;
    for_each_state(net.n, [&](const std::vector<int>& s) {
        if (!matches(s, evidence)) return;
        const double p = joint(net, s, {});
        den += p;
        if (matches(s, target)) num += p;
    });
    return num / den;
}

}  // namespace oracle
