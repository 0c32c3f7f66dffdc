#include "causal/dag.hpp"

#include <algorithm>
#include <deque>
#include <numeric>
#include <set>
#include <sstream>

#include "causal/error.hpp"
#include "causal/random.hpp"

namespace causal {

Dag::Dag(std::vector<std::string> nodes, std::vector<Edge> edges) : nodes_(std::move(nodes)) {
    const auto n = nodes_.size();
    std::set<std::string_view> seen;
    for (const auto& s : nodes_)
        if (!seen.insert(s).second) throw ValidationError("duplicate node name '" + s + "'");
    parents_.assign(n, {});
    children_.assign(n, {});
    std::sort(edges.begin(), edges.end());
    edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
    for (auto [a, b] : edges) {
        if (a < 0 || b < 0 || static_cast<std::size_t>(a) >= n || static_cast<std::size_t>(b) >= n)
            throw ValidationError("edge endpoint out of range");
        if (a == b) throw ValidationError("self-loop on '" + nodes_[a] + "'");
        parents_[b].push_back(a);
        children_[a].push_back(b);
    }
    if (!is_acyclic(edges, n)) throw ValidationError("edge set contains a directed cycle");
}

Dag Dag::from_names(std::vector<std::string> nodes,
                    const std::vector<std::pair<std::string, std::string>>& edges) {
    std::map<std::string, int, std::less<>> idx;
    for (std::size_t i = 0; i < nodes.size(); ++i) idx[nodes[i]] = static_cast<int>(i);
    std::vector<Edge> e;
    for (const auto& [a, b] : edges) {
        auto ia = idx.find(a), ib = idx.find(b);
        if (ia == idx.end() || ib == idx.end())
            throw ValidationError("edge " + a + "->" + b + " references an unknown node");
        e.emplace_back(ia->second, ib->second);
    }
    return Dag(std::move(nodes), std::move(e));
}

std::optional<int> Dag::find(std::string_view name) const {
    for (std::size_t i = 0; i < nodes_.size(); ++i)
        if (nodes_[i] == name) return static_cast<int>(i);
    return std::nullopt;
}

int Dag::index_of(std::string_view name) const {
    if (auto i = find(name)) return *i;
    throw ValidationError("unknown variable '" + std::string(name) + "'");
}

bool Dag::has_edge(int from, int to) const {
    const auto& ch = children(from);
    return std::binary_search(ch.begin(), ch.end(), to);
}

std::vector<Edge> Dag::edges() const {
    std::vector<Edge> out;
    for (std::size_t a = 0; a < size(); ++a)
        for (int b : children_[a]) out.emplace_back(static_cast<int>(a), b);
    return out;
}

std::size_t Dag::edge_count() const {
    std::size_t c = 0;
    for (const auto& ch : children_) c += ch.size();
    return c;
}

std::vector<int> Dag::topological_order() const {
    return *topological_sort(edges(), size());
}

std::vector<bool> Dag::descendants(int v) const {
    std::vector<bool> mark(size(), false);
    std::vector<int> stack{v};
    mark[v] = true;
    while (!stack.empty()) {
        int u = stack.back();
        stack.pop_back();
        for (int c : children(u))
            if (!mark[c]) {
                mark[c] = true;
                stack.push_back(c);
            }
    }
    return mark;
}

std::vector<bool> Dag::ancestors(std::span<const int> vs) const {
    std::vector<bool> mark(size(), false);
    std::vector<int> stack;
    for (int v : vs)
        if (!mark[v]) {
            mark[v] = true;
            stack.push_back(v);
        }
    while (!stack.empty()) {
        int u = stack.back();
        stack.pop_back();
        for (int p : parents(u))
            if (!mark[p]) {
                mark[p] = true;
                stack.push_back(p);
            }
    }
    return mark;
}

Dag Dag::without_incoming(std::span<const int> vs) const {
    std::vector<bool> cut(size(), false);
    for (int v : vs) cut[v] = true;
    std::vector<Edge> e;
    for (auto [a, b] : edges())
        if (!cut[b]) e.emplace_back(a, b);
    return Dag(nodes_, std::move(e));
}

Dag Dag::without_outgoing(std::span<const int> vs) const {
    std::vector<bool> cut(size(), false);
    for (int v : vs) cut[v] = true;
    std::vector<Edge> e;
    for (auto [a, b] : edges())
        if (!cut[a]) e.emplace_back(a, b);
    return Dag(nodes_, std::move(e));
}

Dag Dag::without_edge(int from, int to) const {
    std::vector<Edge> e;
    for (auto ed : edges())
        if (ed != Edge{from, to}) e.push_back(ed);
    return Dag(nodes_, std::move(e));
}

namespace {

std::string dot_id(const std::string& s) {
    std::string out = "\"";
    for (char c : s) {
        if (c == '"' || c == '\\') out.push_back('\\');
        out.push_back(c);
    }
    return out + "\"";
}

}  // namespace

std::string Dag::to_dot(const std::map<Edge, std::string>& labels) const {
    std::ostringstream os;
    os << "digraph G {\n";
    for (const auto& n : nodes_) os << "  " << dot_id(n) << ";\n";
    for (auto e : edges()) {
        os << "  " << dot_id(nodes_[e.first]) << " -> " << dot_id(nodes_[e.second]);
        if (auto it = labels.find(e); it != labels.end()) os << " [label=" << dot_id(it->second) << "]";
        os << ";\n";
    }
    os << "}\n";
    return os.str();
}

std::optional<std::vector<int>> topological_sort(std::span<const Edge> edges, std::size_t n) {
    std::vector<int> indeg(n, 0);
    std::vector<std::vector<int>> out(n);
    for (auto [a, b] : edges) {
        if (a < 0 || b < 0 || static_cast<std::size_t>(a) >= n || static_cast<std::size_t>(b) >= n)
            return std::nullopt;
        out[a].push_back(b);
        ++indeg[b];
    }
    // Smallest-index-first keeps the order deterministic.
    std::set<int> ready;
    for (std::size_t i = 0; i < n; ++i)
        if (indeg[i] == 0) ready.insert(static_cast<int>(i));
    std::vector<int> order;
    order.reserve(n);
    while (!ready.empty()) {
        int u = *ready.begin();
        ready.erase(ready.begin());
        order.push_back(u);
        for (int v : out[u])
            if (--indeg[v] == 0) ready.insert(v);
    }
    if (order.size() != n) return std::nullopt;
    return order;
}

bool is_acyclic(std::span<const Edge> edges, std::size_t n) {
    return topological_sort(edges, n).has_value();
}

std::optional<std::vector<int>> active_trail(const Dag& dag, int x, int y, std::span<const int> z) {
    const auto n = dag.size();
    if (x < 0 || y < 0 || static_cast<std::size_t>(x) >= n || static_cast<std::size_t>(y) >= n)
        throw ValidationError("d-separation query on an unknown node");
    std::vector<bool> in_z(n, false);
    for (int v : z) in_z.at(v) = true;
    if (x == y || in_z[x] || in_z[y]) throw ValidationError("d-separation requires x != y and x, y not in z");
    const auto anc_z = dag.ancestors(z);

    // state = 2*v + dir; dir 0 = entered from a child (travelling up),
    // dir 1 = entered from a parent (travelling down).
    std::vector<int> pred(2 * n, -2);
    std::deque<int> queue;
    auto push = [&](int v, int dir, int from) {
        const int s = 2 * v + dir;
        if (pred[s] != -2) return;
        pred[s] = from;
        queue.push_back(s);
    };
    push(x, 0, -1);
    while (!queue.empty()) {
        const int s = queue.front();
        queue.pop_front();
        const int v = s / 2, dir = s % 2;
        if (v == y) {
            std::vector<int> trail;
            for (int t = s; t != -1; t = pred[t]) trail.push_back(t / 2);
            std::reverse(trail.begin(), trail.end());
            return trail;
        }
        if (dir == 0) {
            if (in_z[v]) continue;
            for (int p : dag.parents(v)) push(p, 0, s);
            for (int c : dag.children(v)) push(c, 1, s);
        } else {
            if (!in_z[v])
                for (int c : dag.children(v)) push(c, 1, s);
            if (anc_z[v])
                for (int p : dag.parents(v)) push(p, 0, s);
        }
    }
    return std::nullopt;
}

bool d_separated(const Dag& dag, int x, int y, std::span<const int> z) {
    return !active_trail(dag, x, y, z).has_value();
}

bool d_separated(const Dag& dag, std::string_view x, std::string_view y, const std::vector<std::string>& z) {
    std::vector<int> zi;
    for (const auto& s : z) zi.push_back(dag.index_of(s));
    return d_separated(dag, dag.index_of(x), dag.index_of(y), zi);
}

Dag random_dag(std::size_t n_nodes, double edge_prob, std::uint64_t seed) {
    if (!(edge_prob >= 0.0 && edge_prob <= 1.0)) throw ValidationError("edge_prob must lie in [0, 1]");
    Rng rng(seed);
    std::vector<int> order(n_nodes);
    std::iota(order.begin(), order.end(), 0);
    for (std::size_t i = n_nodes; i > 1; --i) std::swap(order[i - 1], order[rng.index(i)]);
    std::vector<Edge> edges;
    for (std::size_t i = 0; i < n_nodes; ++i)
        for (std::size_t j = i + 1; j < n_nodes; ++j)
            if (rng.uniform() < edge_prob) edges.emplace_back(order[i], order[j]);
    std::vector<std::string> names;
    for (std::size_t i = 0; i < n_nodes; ++i) names.push_back("X" + std::to_string(i));
    return Dag(std::move(names), std::move(edges));
}

}  // namespace causal
