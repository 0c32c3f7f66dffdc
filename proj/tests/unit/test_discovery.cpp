#include <doctest.h>

#include <algorithm>

#include "causal/discovery.hpp"
#include "causal/error.hpp"
#include "causal/scm.hpp"

using namespace causal;
using nlohmann::json;

namespace {

FeatureMatrix collider(std::size_t n, std::uint64_t seed) {
    const auto scm = Scm::from_json(json::parse(R"({
      "nodes": ["a", "b", "c"], "edges": [["a", "c"], ["b", "c"]],
      "mechanisms": {"c": {"weights": {"a": 1.0, "b": 1.0}}}
    })"));
    return sample(scm, n, seed);
}

bool monotone(const std::vector<double>& trace) {
    return std::is_sorted(trace.begin(), trace.end());
}

}  // namespace

TEST_CASE("PC orients a collider") {
    const auto out = sla::pc(collider(5000, 1), SlaConfig{});
    CHECK(out.directed == std::set<Edge>{{0, 2}, {1, 2}});
    CHECK(out.undirected.empty());
}

TEST_CASE("score-based traces never decrease") {
    const auto d = collider(3000, 2);
    SlaConfig cfg;
    cfg.seed = 3;
    for (auto run : {sla::ges, sla::gds, sla::tabu}) {
        const auto out = run(d, cfg);
        CHECK_FALSE(out.failed);
        CHECK(monotone(out.score_trace));
    }
}

TEST_CASE("LiNGAM orients a non-gaussian pair") {
    const auto scm = Scm::from_json(json::parse(R"({
      "nodes": ["u", "v"], "edges": [["u", "v"]],
      "mechanisms": {"v": {"weights": {"u": 0.8}}},
      "noise": {"u": {"dist": "laplace"}, "v": {"dist": "laplace"}}
    })"));
    const auto out = sla::lingam(sample(scm, 5000, 4), SlaConfig{});
    CHECK(out.directed == std::set<Edge>{{0, 1}});
}

TEST_CASE("outputs survive a json round trip") {
    const auto out = run_sla(SlaKind::PC, collider(1000, 5), SlaConfig{});
    const auto back = SlaOutput::from_json(out.to_json());
    CHECK(back.directed == out.directed);
    CHECK(back.variables == out.variables);
    CHECK(out.to_dot().find("\"a\" -> \"c\"") != std::string::npos);
}

TEST_CASE("input validation and per-algorithm failure") {
    const FeatureMatrix one({{"a", ColumnKind::continuous, {1, 2, 3}}});
    CHECK_THROWS_AS(run_sla(SlaKind::PC, one, SlaConfig{}), ValidationError);
    const FeatureMatrix flat({{"a", ColumnKind::continuous, {1, 2, 3}}, {"b", ColumnKind::continuous, {1, 1, 1}}});
    CHECK_THROWS_AS(run_sla(SlaKind::GES, flat, SlaConfig{}), ValidationError);
    SlaConfig bad;
    bad.alpha = 1.5;
    CHECK_THROWS_AS(bad.validate(), ValidationError);

    const auto all = run_all(collider(2000, 6), SlaConfig{});
    REQUIRE(all.size() == 7);
    for (std::size_t i = 0; i < all.size(); ++i) CHECK(all[i].kind == kAllSlaKinds[i]);
}

TEST_CASE("CPDAG and DAG extension") {
    // chain a -> b -> c is fully reversible, collider is compelled
    const auto chain = cpdag_of(3, {{0, 1}, {1, 2}});
    CHECK(chain.undirected(0, 1));
    CHECK(chain.undirected(1, 2));
    const auto coll = cpdag_of(3, {{0, 2}, {1, 2}});
    CHECK(coll.directed(0, 2));
    CHECK(coll.directed(1, 2));
    const auto ext = dag_extension(chain);
    REQUIRE(ext);
    CHECK(is_acyclic(std::vector<Edge>(ext->begin(), ext->end()), 3));
    CHECK(cpdag_of(3, *ext) == chain);
}
