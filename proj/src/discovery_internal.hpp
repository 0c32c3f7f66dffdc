#pragma once

#include <functional>
#include <map>
#include <optional>
#include <set>
#include <vector>

#include "causal/citest.hpp"
#include "causal/discovery.hpp"
#include "causal/score.hpp"

namespace causal::detail {

struct Skeleton {
    std::size_t n = 0;
    std::vector<std::vector<bool>> adj;
    std::map<Edge, std::vector<std::size_t>> sepset;  // key (a, b) with a < b
    std::size_t tests = 0;

    const std::vector<std::size_t>* separating_set(int a, int b) const;
};

// Order-independent adjacency search: adjacency sets are frozen at the start
// of each conditioning-set size.
Skeleton stable_skeleton(const CiTester& tester, const SlaConfig& cfg);

// Max-min parents and children with the symmetry correction.
Skeleton mmpc_skeleton(const CiTester& tester, const SlaConfig& cfg);

// Every subset of `pool` of exactly size k, in lexicographic order.
void for_each_subset(const std::vector<std::size_t>& pool, std::size_t k,
                     const std::function<bool(const std::vector<std::size_t>&)>& visit);

struct HillClimbResult {
    std::vector<std::vector<int>> parents;
    double score = 0.0;
    std::vector<double> trace;
    std::size_t moves = 0;
    std::size_t escapes = 0;
};

enum class MoveType { add, remove, reverse };

struct Move {
    MoveType type;
    int from;
    int to;
    bool operator==(const Move&) const = default;
};

struct HillClimbOptions {
    std::optional<std::vector<std::vector<bool>>> allowed;  // allowed[a][b]: a -> b may be added
    std::size_t max_iters = 1000;
    std::size_t tabu_len = 0;  // 0 disables tabu search
    std::size_t max_tabu = 10;
};

HillClimbResult hill_climb(const BicScore& score, std::size_t n, std::vector<std::vector<int>> start,
                           const HillClimbOptions& opts);

std::set<Edge> edges_of(const std::vector<std::vector<int>>& parents);

}  // namespace causal::detail
