#pragma once

// Independent reference implementations for the test suites. Nothing here
// calls into the library's graph or inference code.

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

namespace oracle {

using EdgeList = std::vector<std::pair<int, int>>;  // (parent, child)

// Every labelled DAG on n nodes, as edge lists.
std::vector<EdgeList> all_dags(int n);

bool acyclic(int n, const EdgeList& edges);
std::vector<bool> descendants(int n, const EdgeList& edges, int v);  // includes v

// d-separation by enumerating every simple path in the skeleton and testing
// each interior node against the blocking rules.
bool dsep_by_paths(int n, const EdgeList& edges, int x, int y, const std::vector<bool>& z);

// Minimal backdoor sets for x -> y by brute-force subset enumeration and
// path-enumeration d-separation on the graph without x's outgoing edges.
// Node i is named names[i]; sets come back sorted by size, then by name list.
std::vector<std::vector<std::string>> minimal_backdoor_sets(int n, const EdgeList& edges, int x, int y,
                                                            const std::vector<std::string>& names);

// Binary network with logistic local models P(v = 1 | pa) = sigmoid(b + sum w_p pa_p).
struct BinaryNet {
    int n = 0;
    std::vector<std::vector<int>> parents;
    std::vector<std::vector<double>> weights;  // aligned with parents
    std::vector<double> intercepts;
};

// P(target | do(fixed)) by summing the truncated product over all 2^n states.
double interventional_by_enumeration(const BinaryNet& net, const std::map<int, int>& fixed,
                                     const std::map<int, int>& target);
// P(target | evidence) from the full joint.
double conditional_by_enumeration(const BinaryNet& net, const std::map<int, int>& target,
                                  const std::map<int, int>& evidence);

// 2x2 table arithmetic: a = treated events, b = treated non-events,
// c = untreated events, d = untreated non-events.
struct TwoByTwo {
    double a, b, c, d;
    double treated_rate() const { return a / (a + b); }
    double odds_ratio() const { return (a * d) / (b * c); }
    double overall_rate() const { return (a + c) / (a + b + c + d); }
    double untreated_rate() const { return c / (c + d); }
    double paf() const { return (overall_rate() - untreated_rate()) / overall_rate(); }
};

}  // namespace oracle
