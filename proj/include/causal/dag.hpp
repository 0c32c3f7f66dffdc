#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace causal {

using Edge = std::pair<int, int>;  // (parent, child) by node index

// Directed acyclic graph over named variables. Construction rejects self-loops,
// duplicate names and cycles, so every Dag instance is a valid DAG.
class Dag {
public:
    Dag() = default;
    Dag(std::vector<std::string> nodes, std::vector<Edge> edges);
    static Dag from_names(std::vector<std::string> nodes,
                          const std::vector<std::pair<std::string, std::string>>& edges);

    std::size_t size() const { return nodes_.size(); }
    const std::vector<std::string>& nodes() const { return nodes_; }
    const std::string& name(int v) const { return nodes_.at(static_cast<std::size_t>(v)); }
    std::optional<int> find(std::string_view name) const;
    int index_of(std::string_view name) const;  // throws ValidationError

    const std::vector<int>& parents(int v) const { return parents_[static_cast<std::size_t>(v)]; }
    const std::vector<int>& children(int v) const { return children_[static_cast<std::size_t>(v)]; }
    bool has_edge(int from, int to) const;
    bool adjacent(int a, int b) const { return has_edge(a, b) || has_edge(b, a); }
    std::vector<Edge> edges() const;  // sorted
    std::size_t edge_count() const;

    std::vector<int> topological_order() const;
    // Membership masks; both include `v` itself.
    std::vector<bool> descendants(int v) const;
    std::vector<bool> ancestors(std::span<const int> vs) const;

    Dag without_incoming(std::span<const int> vs) const;
    Dag without_outgoing(std::span<const int> vs) const;
    Dag without_edge(int from, int to) const;

    // GraphViz; optional per-edge labels keyed by (parent, child).
    std::string to_dot(const std::map<Edge, std::string>& labels = {}) const;

    bool operator==(const Dag&) const = default;

private:
    std::vector<std::string> nodes_;
    std::vector<std::vector<int>> parents_;
    std::vector<std::vector<int>> children_;
};

bool is_acyclic(std::span<const Edge> edges, std::size_t n);
std::optional<std::vector<int>> topological_sort(std::span<const Edge> edges, std::size_t n);

// True iff every path between x and y is blocked by z (reachability
// formulation of d-separation).
bool d_separated(const Dag& dag, int x, int y, std::span<const int> z);
bool d_separated(const Dag& dag, std::string_view x, std::string_view y,
                 const std::vector<std::string>& z);

// An active trail between x and y given z, as a node sequence, or nullopt
// when x and y are d-separated.
std::optional<std::vector<int>> active_trail(const Dag& dag, int x, int y, std::span<const int> z);

// Erdos-Renyi over a random topological order; nodes are named X0, X1, ...
Dag random_dag(std::size_t n_nodes, double edge_prob, std::uint64_t seed);

}  // namespace causal
