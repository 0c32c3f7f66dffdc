#include <doctest.h>

#include <cmath>

#include "causal/error.hpp"
#include "causal/estimate.hpp"
#include "causal/random.hpp"
#include "causal/scm.hpp"
#include "oracles.hpp"

using namespace causal;

namespace {

struct Pair {
    ModelSet models;
    oracle::BinaryNet net;
};

// Random logistic network over X0..X3 in the library and oracle forms.
Pair random_net(std::uint64_t seed) {
    const auto dag = random_dag(4, 0.5, seed);
    Rng rng(seed + 1000);
    nlohmann::json j;
    j["nodes"] = dag.nodes();
    j["edges"] = nlohmann::json::array();
    oracle::BinaryNet net;
    net.n = 4;
    net.parents.resize(4);
    net.weights.resize(4);
    for (int v = 0; v < 4; ++v) {
        const double b = rng.uniform(-1.5, 1.5);
        net.intercepts.push_back(b);
        auto& m = j["mechanisms"][dag.name(v)];
        m["type"] = "logistic";
        m["intercept"] = b;
        for (int p : dag.parents(v)) {
            const double w = rng.uniform(-2.5, 2.5);
            j["edges"].push_back({dag.name(p), dag.name(v)});
            m["weights"][dag.name(p)] = w;
            net.parents[static_cast<std::size_t>(v)].push_back(p);
            net.weights[static_cast<std::size_t>(v)].push_back(w);
        }
    }
    return {model_set_from_scm(Scm::from_json(j)), net};
}

}  // namespace

TEST_CASE("interventional and conditional queries match enumeration") {
    for (std::uint64_t s = 0; s < 30; ++s) {
        const auto [models, net] = random_net(s);
        const auto& names = models.dag.nodes();
        for (int x = 0; x < 4; ++x)
            for (int y = 0; y < 4; ++y) {
                if (x == y) continue;
                for (int xv = 0; xv < 2; ++xv) {
                    const double ours = interventional_query(models, {{names[x], xv}}, {{names[y], 1}});
                    CHECK(std::abs(ours - oracle::interventional_by_enumeration(net, {{x, xv}}, {{y, 1}})) < 1e-9);
                    const double cond = conditional_query(models, {{names[y], 1}}, {{names[x], xv}});
                    CHECK(std::abs(cond - oracle::conditional_by_enumeration(net, {{y, 1}}, {{x, xv}})) < 1e-9);
                }
            }
    }
}

TEST_CASE("query input validation") {
    const auto [models, net] = random_net(1);
    CHECK_THROWS_AS(interventional_query(models, {{"nope", 1}}, {{"X0", 1}}), ValidationError);
    CHECK_THROWS_AS(conditional_query(models, {{"X0", 2}}), ValidationError);
}

TEST_CASE("zero-probability evidence") {
    const auto scm = Scm::from_json(nlohmann::json::parse(R"({
      "nodes": ["a", "b"], "edges": [["a", "b"]],
      "mechanisms": {"a": {"type": "logistic", "intercept": -800}, "b": {"type": "logistic", "weights": {"a": 1}}}
    })"));
    CHECK_THROWS_AS(conditional_query(model_set_from_scm(scm), {{"b", 1}}, {{"a", 1}}), RuntimeError);
}
