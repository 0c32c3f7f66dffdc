#include <doctest.h>

#include "causal/ensemble.hpp"
#include "causal/error.hpp"
#include "causal/random.hpp"

using namespace causal;

namespace {

SlaOutput output(SlaKind kind, std::set<Edge> directed) {
    SlaOutput o;
    o.kind = kind;
    o.variables = {"a", "b", "c"};
    o.directed = std::move(directed);
    return o;
}

}  // namespace

TEST_CASE("thresholds for seven algorithms") {
    CHECK(vote_threshold(7, VoteRule::ge_majority) == 4);
    CHECK(vote_threshold(7, VoteRule::gt_m_half_plus_one) == 5);
    CHECK(vote_threshold(6, VoteRule::ge_majority) == 4);
    CHECK_THROWS_AS(vote_rule_from_string("plurality"), ValidationError);
}

TEST_CASE("four votes pass, three do not") {
    std::vector<SlaOutput> outs;
    for (std::size_t i = 0; i < 7; ++i) {
        std::set<Edge> e;
        if (i < 4) e.insert({0, 1});
        if (i < 3) e.insert({1, 2});
        outs.push_back(output(kAllSlaKinds[i], e));
    }
    const auto v = tally(outs);
    CHECK(v.count(0, 1) == 4);
    CHECK(v.count(1, 2) == 3);
    CHECK(threshold_edges(v).edges == std::set<Edge>{{0, 1}});
}

TEST_CASE("undirected edges cast no vote") {
    auto o = output(SlaKind::PC, {});
    o.undirected = {{0, 1}};
    std::vector<SlaOutput> outs(7, o);
    const auto v = tally(outs);
    CHECK(v.count(0, 1) == 0);
    CHECK(v.count(1, 0) == 0);
}

TEST_CASE("raising the threshold only removes edges") {
    Rng rng(1);
    VoteMatrix v({"a", "b", "c", "d"}, 7);
    for (int a = 0; a < 4; ++a)
        for (int b = a + 1; b < 4; ++b) {
            const int x = static_cast<int>(rng.index(8));
            v.set(a, b, x);
            v.set(b, a, static_cast<int>(rng.index(static_cast<std::size_t>(8 - x))));
        }
    for (int t = 1; t < 7; ++t) {
        const auto lo = threshold_edges_at(v, t).edges, hi = threshold_edges_at(v, t + 1).edges;
        CHECK(std::includes(lo.begin(), lo.end(), hi.begin(), hi.end()));
    }
}

TEST_CASE("cycle repair removes only edges on cycles") {
    VoteMatrix v({"a", "b", "c", "d"}, 7);
    v.set(0, 1, 6);
    v.set(1, 2, 5);
    v.set(2, 0, 4);
    v.set(2, 3, 4);
    const auto r = repair_cycles({{0, 1}, {1, 2}, {2, 0}, {2, 3}}, v);
    REQUIRE(r.removed.size() == 1);
    CHECK(r.removed[0] == Edge{2, 0});
    CHECK(r.dag.has_edge(2, 3));
    CHECK(r.dag.edge_count() == 3);
}

TEST_CASE("vote matrix invariants and csv round trip") {
    VoteMatrix v({"a", "b"}, 7);
    CHECK_THROWS_AS(v.set(0, 0, 1), ValidationError);
    v.set(0, 1, 5);
    CHECK_THROWS_AS(v.set(1, 0, 3), ValidationError);  // 5 + 3 > m
    v.set(1, 0, 2);
    CHECK(VoteMatrix::from_csv(v.to_csv(), 7) == v);
}
