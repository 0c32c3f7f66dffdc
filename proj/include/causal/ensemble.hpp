#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "causal/dag.hpp"
#include "causal/discovery.hpp"

namespace causal {

// counts[a][b]: how many of the m algorithm outputs contain the directed edge a -> b.
class VoteMatrix {
public:
    VoteMatrix() = default;
    VoteMatrix(std::vector<std::string> variables, std::size_t m);

    std::size_t size() const { return variables_.size(); }
    std::size_t m() const { return m_; }
    const std::vector<std::string>& variables() const { return variables_; }

    int count(int a, int b) const { return counts_[index(a, b)]; }
    // Checks the diagonal and pair invariants.
    void set(int a, int b, int votes);

    std::string to_csv() const;
    static VoteMatrix from_csv(std::string_view text, std::size_t m);

    bool operator==(const VoteMatrix&) const = default;

private:
    std::size_t index(int a, int b) const;

    std::vector<std::string> variables_;
    std::size_t m_ = 0;
    std::vector<int> counts_;
};

VoteMatrix tally(const std::vector<SlaOutput>& outputs);

enum class VoteRule {
    ge_majority,          // votes >= floor(m/2) + 1
    gt_m_half_plus_one,   // votes > m/2 + 1
};

std::string_view to_string(VoteRule r);
VoteRule vote_rule_from_string(std::string_view s);  // throws ValidationError

// Smallest vote count that passes the rule.
int vote_threshold(std::size_t m, VoteRule rule);

struct ThresholdResult {
    std::set<Edge> edges;
    std::vector<std::string> diagnostics;
};

ThresholdResult threshold_edges(const VoteMatrix& v, VoteRule rule = VoteRule::ge_majority);
// Explicit minimum count; used to check monotonicity in the threshold.
ThresholdResult threshold_edges_at(const VoteMatrix& v, int min_votes);

struct RepairResult {
    Dag dag;
    std::vector<Edge> removed;  // in removal order
};

// Deletes the weakest edge lying on a cycle until the graph is acyclic.
RepairResult repair_cycles(const std::set<Edge>& edges, const VoteMatrix& v);

// Consensus graph in DOT with vote counts as edge labels.
std::string consensus_dot(const Dag& dag, const VoteMatrix& v);
nlohmann::json consensus_json(const RepairResult& r, const VoteMatrix& v, VoteRule rule,
                              const std::vector<std::string>& diagnostics);

}  // namespace causal
