#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "causal/dag.hpp"
#include "causal/feature_matrix.hpp"
#include "causal/score.hpp"

namespace causal {

// The seven structure-learning algorithms whose outputs are put to a vote.
enum class SlaKind { PC, RFCI_LITE, GES, GDS, TABU, MMHC, LINGAM };

inline constexpr std::array<SlaKind, 7> kAllSlaKinds{SlaKind::PC,   SlaKind::RFCI_LITE, SlaKind::GES,   SlaKind::GDS,
                                                    SlaKind::TABU, SlaKind::MMHC,      SlaKind::LINGAM};

std::string_view to_string(SlaKind k);
std::optional<SlaKind> sla_kind_from_string(std::string_view s);

struct SlaConfig {
    double alpha = 0.01;
    std::size_t max_cond_set = 3;
    ScoreType score = ScoreType::automatic;
    std::size_t max_iters = 1000;  // hill-climbing / tabu move budget
    std::size_t tabu_len = 10;
    std::size_t max_tabu = 10;     // consecutive non-improving tabu moves before stopping
    std::size_t restarts = 5;      // random restarts for GDS
    std::size_t ges_max_subset = 10;  // larger neighbour sets only try subsets of size <= 2
    double lingam_prune = 0.05;
    double ica_tolerance = 1e-6;
    std::size_t ica_max_iters = 1000;
    std::uint64_t seed = 0;

    void validate() const;
};

// Edges are (a, b) column-index pairs. Undirected/ambiguous pairs are stored
// with a < b; a pair never appears in both sets.
struct SlaOutput {
    SlaKind kind = SlaKind::PC;
    std::vector<std::string> variables;
    std::set<Edge> directed;
    std::set<Edge> undirected;
    std::map<std::string, double> diagnostics;
    std::vector<double> score_trace;  // total score after each accepted move (score-based kinds)
    std::vector<std::string> warnings;
    bool failed = false;
    std::string error;

    std::string to_dot() const;
    nlohmann::json to_json() const;
    static SlaOutput from_json(const nlohmann::json& j);
};

// Throws ValidationError for fewer than two columns or a constant column.
SlaOutput run_sla(SlaKind kind, const FeatureMatrix& data, const SlaConfig& cfg);

// One output per SlaKind in enumeration order. A failing algorithm yields an
// empty output flagged `failed`; four or more failures throw RuntimeError.
std::vector<SlaOutput> run_all(const FeatureMatrix& data, const SlaConfig& cfg, std::size_t threads = 1);

// Directed edges only; undirected/ambiguous edges cast no directional vote.
const std::set<Edge>& directed_votes(const SlaOutput& out);

// Individual algorithms, exposed for testing.
namespace sla {

SlaOutput pc(const FeatureMatrix& data, const SlaConfig& cfg);
SlaOutput rfci_lite(const FeatureMatrix& data, const SlaConfig& cfg);
SlaOutput ges(const FeatureMatrix& data, const SlaConfig& cfg);
SlaOutput gds(const FeatureMatrix& data, const SlaConfig& cfg);
SlaOutput tabu(const FeatureMatrix& data, const SlaConfig& cfg);
SlaOutput mmhc(const FeatureMatrix& data, const SlaConfig& cfg);
SlaOutput lingam(const FeatureMatrix& data, const SlaConfig& cfg);

}  // namespace sla

// Partially directed graph over n nodes; mark(a, b) && !mark(b, a) is a -> b,
// both marks set is a - b.
class Pdag {
public:
    explicit Pdag(std::size_t n = 0) : n_(n), m_(n * n, 0) {}
    static Pdag from_dag(std::size_t n, const std::set<Edge>& edges);

    std::size_t size() const { return n_; }
    bool adjacent(int a, int b) const { return mark(a, b) || mark(b, a); }
    bool directed(int a, int b) const { return mark(a, b) && !mark(b, a); }
    bool undirected(int a, int b) const { return mark(a, b) && mark(b, a); }
    void add_directed(int a, int b) { set(a, b, true), set(b, a, false); }
    void add_undirected(int a, int b) { set(a, b, true), set(b, a, true); }
    void remove(int a, int b) { set(a, b, false), set(b, a, false); }

    std::vector<int> parents(int v) const;     // directed into v
    std::vector<int> neighbours(int v) const;  // undirected at v
    std::vector<int> adjacents(int v) const;

    void split(std::set<Edge>& directed, std::set<Edge>& undirected) const;
    bool operator==(const Pdag&) const = default;

private:
    bool mark(int a, int b) const { return m_[static_cast<std::size_t>(a) * n_ + static_cast<std::size_t>(b)] != 0; }
    void set(int a, int b, bool v) { m_[static_cast<std::size_t>(a) * n_ + static_cast<std::size_t>(b)] = v; }

    std::size_t n_;
    std::vector<char> m_;
};

// Meek rules R1-R3 to a fixed point.
void apply_meek_rules(Pdag& g);
// CPDAG of the Markov equivalence class of a DAG.
Pdag cpdag_of(std::size_t n, const std::set<Edge>& dag_edges);
// A consistent DAG extension (Dor-Tarsi), or nullopt.
std::optional<std::set<Edge>> dag_extension(const Pdag& g);

}  // namespace causal
