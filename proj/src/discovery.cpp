#include "causal/discovery.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <sstream>

#include "causal/error.hpp"

namespace causal {

std::string_view to_string(SlaKind k) {
    switch (k) {
        case SlaKind::PC: return "PC";
        case SlaKind::RFCI_LITE: return "RFCI_LITE";
        case SlaKind::GES: return "GES";
        case SlaKind::GDS: return "GDS";
        case SlaKind::TABU: return "TABU";
        case SlaKind::MMHC: return "MMHC";
        case SlaKind::LINGAM: return "LINGAM";
    }
    return "?";
}

std::optional<SlaKind> sla_kind_from_string(std::string_view s) {
    for (auto k : kAllSlaKinds)
        if (to_string(k) == s) return k;
    return std::nullopt;
}

void SlaConfig::validate() const {
    if (!(alpha > 0.0 && alpha < 1.0)) throw ValidationError("alpha must lie in (0, 1)");
    if (tabu_len < 1) throw ValidationError("tabu_len must be at least 1");
    if (lingam_prune < 0.0) throw ValidationError("lingam_prune must be non-negative");
    if (ica_tolerance <= 0.0) throw ValidationError("ica_tolerance must be positive");
}

// ---------------------------------------------------------------------------
// Pdag

Pdag Pdag::from_dag(std::size_t n, const std::set<Edge>& edges) {
    Pdag g(n);
    for (auto [a, b] : edges) g.add_directed(a, b);
    return g;
}

std::vector<int> Pdag::parents(int v) const {
    std::vector<int> out;
    for (std::size_t u = 0; u < n_; ++u)
        if (directed(static_cast<int>(u), v)) out.push_back(static_cast<int>(u));
    return out;
}

std::vector<int> Pdag::neighbours(int v) const {
    std::vector<int> out;
    for (std::size_t u = 0; u < n_; ++u)
        if (undirected(static_cast<int>(u), v)) out.push_back(static_cast<int>(u));
    return out;
}

std::vector<int> Pdag::adjacents(int v) const {
    std::vector<int> out;
    for (std::size_t u = 0; u < n_; ++u)
        if (adjacent(static_cast<int>(u), v)) out.push_back(static_cast<int>(u));
    return out;
}

void Pdag::split(std::set<Edge>& dir, std::set<Edge>& und) const {
    for (std::size_t a = 0; a < n_; ++a)
        for (std::size_t b = 0; b < n_; ++b) {
            const int ia = static_cast<int>(a), ib = static_cast<int>(b);
            if (directed(ia, ib)) dir.emplace(ia, ib);
            else if (a < b && undirected(ia, ib)) und.emplace(ia, ib);
        }
}

void apply_meek_rules(Pdag& g) {
    const int n = static_cast<int>(g.size());
    bool changed = true;
    while (changed) {
        changed = false;
        for (int a = 0; a < n; ++a)
            for (int b = 0; b < n; ++b) {
                if (!g.undirected(a, b)) continue;
                bool orient = false;
                for (int c = 0; c < n && !orient; ++c) {
                    if (c == a || c == b) continue;
                    // R1: c -> a - b, c and b non-adjacent  =>  a -> b
                    if (g.directed(c, a) && !g.adjacent(c, b)) orient = true;
                    // R2: a -> c -> b, a - b  =>  a -> b
                    else if (g.directed(a, c) && g.directed(c, b)) orient = true;
                }
                // R3: a - c -> b, a - d -> b, c and d non-adjacent  =>  a -> b
                for (int c = 0; c < n && !orient; ++c) {
                    if (c == a || c == b || !g.undirected(a, c) || !g.directed(c, b)) continue;
                    for (int d = c + 1; d < n && !orient; ++d) {
                        if (d == a || d == b || !g.undirected(a, d) || !g.directed(d, b)) continue;
                        if (!g.adjacent(c, d)) orient = true;
                    }
                }
                if (orient) {
                    g.add_directed(a, b);
                    changed = true;
                }
            }
    }
}

Pdag cpdag_of(std::size_t n, const std::set<Edge>& dag_edges) {
    Pdag skel(n), dag = Pdag::from_dag(n, dag_edges);
    for (auto [a, b] : dag_edges) skel.add_undirected(a, b);
    const int ni = static_cast<int>(n);
    for (int c = 0; c < ni; ++c) {
        const auto ps = dag.parents(c);
        for (std::size_t i = 0; i < ps.size(); ++i)
            for (std::size_t j = i + 1; j < ps.size(); ++j)
                if (!dag.adjacent(ps[i], ps[j])) {
                    skel.add_directed(ps[i], c);
                    skel.add_directed(ps[j], c);
                }
    }
    apply_meek_rules(skel);
    return skel;
}

std::optional<std::set<Edge>> dag_extension(const Pdag& g) {
    const int n = static_cast<int>(g.size());
    Pdag work = g;
    std::vector<bool> alive(g.size(), true);
    std::set<Edge> out;
    for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b)
            if (g.directed(a, b)) out.emplace(a, b);
    for (int removed = 0; removed < n; ++removed) {
        int pick = -1;
        for (int x = 0; x < n && pick < 0; ++x) {
            if (!alive[x]) continue;
            bool sink = true;
            for (int y = 0; y < n && sink; ++y)
                if (alive[y] && work.directed(x, y)) sink = false;
            if (!sink) continue;
            const auto adj = work.adjacents(x);
            bool ok = true;
            for (int y : adj) {
                if (!alive[y] || !work.undirected(x, y)) continue;
                for (int z : adj)
                    if (z != y && alive[z] && !work.adjacent(y, z)) {
                        ok = false;
                        break;
                    }
                if (!ok) break;
            }
            if (ok) pick = x;
        }
        if (pick < 0) return std::nullopt;
        for (int y = 0; y < n; ++y)
            if (alive[y] && work.undirected(pick, y)) out.emplace(y, pick);
        alive[pick] = false;
        for (int y = 0; y < n; ++y) work.remove(pick, y);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Output serialization

std::string SlaOutput::to_dot() const {
    std::ostringstream os;
    os << "digraph " << to_string(kind) << " {\n";
    for (const auto& v : variables) os << "  \"" << v << "\";\n";
    for (auto [a, b] : directed) os << "  \"" << variables[a] << "\" -> \"" << variables[b] << "\";\n";
    for (auto [a, b] : undirected)
        os << "  \"" << variables[a] << "\" -> \"" << variables[b] << "\" [style=dashed, dir=none];\n";
    os << "}\n";
    return os.str();
}

nlohmann::json SlaOutput::to_json() const {
    nlohmann::json j;
    j["kind"] = to_string(kind);
    j["variables"] = variables;
    auto dir = nlohmann::json::array(), und = nlohmann::json::array();
    for (auto [a, b] : directed) dir.push_back({variables[a], variables[b]});
    for (auto [a, b] : undirected) und.push_back({variables[a], variables[b]});
    j["directed"] = dir;
    j["undirected"] = und;
    j["diagnostics"] = diagnostics;
    j["score_trace"] = score_trace;
    j["warnings"] = warnings;
    j["failed"] = failed;
    j["error"] = error;
    return j;
}

SlaOutput SlaOutput::from_json(const nlohmann::json& j) {
    try {
        SlaOutput o;
        const auto kind = j.at("kind").get<std::string>();
        auto k = sla_kind_from_string(kind);
        if (!k) throw ValidationError("unknown algorithm kind '" + kind + "'");
        o.kind = *k;
        o.variables = j.at("variables").get<std::vector<std::string>>();
        auto index = [&](const std::string& s) {
            for (std::size_t i = 0; i < o.variables.size(); ++i)
                if (o.variables[i] == s) return static_cast<int>(i);
            throw ValidationError("edge references unknown variable '" + s + "'");
        };
        for (const auto& e : j.value("directed", nlohmann::json::array()))
            o.directed.emplace(index(e.at(0).get<std::string>()), index(e.at(1).get<std::string>()));
        for (const auto& e : j.value("undirected", nlohmann::json::array())) {
            int a = index(e.at(0).get<std::string>()), b = index(e.at(1).get<std::string>());
            o.undirected.emplace(std::min(a, b), std::max(a, b));
        }
        o.diagnostics = j.value("diagnostics", std::map<std::string, double>{});
        o.score_trace = j.value("score_trace", std::vector<double>{});
        o.warnings = j.value("warnings", std::vector<std::string>{});
        o.failed = j.value("failed", false);
        o.error = j.value("error", std::string{});
        return o;
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("malformed algorithm output JSON: ") + e.what());
    }
}

// ---------------------------------------------------------------------------
// Dispatch

namespace {

void check_input(const FeatureMatrix& data) {
    if (data.cols() < 2) throw ValidationError("structure learning needs at least two columns");
    if (data.rows() < 3) throw ValidationError("structure learning needs at least three rows");
    for (const auto& c : data.columns()) {
        const auto [lo, hi] = std::minmax_element(c.values.begin(), c.values.end());
        if (*lo == *hi) throw ValidationError("constant column '" + c.name + "'");
    }
}

}  // namespace

SlaOutput run_sla(SlaKind kind, const FeatureMatrix& data, const SlaConfig& cfg) {
    cfg.validate();
    check_input(data);
    SlaOutput out;
    switch (kind) {
        case SlaKind::PC: out = sla::pc(data, cfg); break;
        case SlaKind::RFCI_LITE: out = sla::rfci_lite(data, cfg); break;
        case SlaKind::GES: out = sla::ges(data, cfg); break;
        case SlaKind::GDS: out = sla::gds(data, cfg); break;
        case SlaKind::TABU: out = sla::tabu(data, cfg); break;
        case SlaKind::MMHC: out = sla::mmhc(data, cfg); break;
        case SlaKind::LINGAM: out = sla::lingam(data, cfg); break;
    }
    out.kind = kind;
    out.variables = data.names();
    for (auto e : out.directed)
        if (out.undirected.count({std::min(e.first, e.second), std::max(e.first, e.second)}))
            throw RuntimeError(std::string(to_string(kind)) + " produced an edge that is both directed and undirected");
    return out;
}

std::vector<SlaOutput> run_all(const FeatureMatrix& data, const SlaConfig& cfg, std::size_t threads) {
    cfg.validate();
    auto one = [&](SlaKind k) {
        try {
            return run_sla(k, data, cfg);
        } catch (const std::exception& e) {
            SlaOutput failed;
            failed.kind = k;
            failed.variables = data.names();
            failed.failed = true;
            failed.error = e.what();
            return failed;
        }
    };
    std::vector<SlaOutput> outs(kAllSlaKinds.size());
    if (threads <= 1) {
        for (std::size_t i = 0; i < kAllSlaKinds.size(); ++i) outs[i] = one(kAllSlaKinds[i]);
    } else {
        for (std::size_t start = 0; start < kAllSlaKinds.size(); start += threads) {
            std::vector<std::future<SlaOutput>> batch;
            const auto stop = std::min(kAllSlaKinds.size(), start + threads);
            for (std::size_t i = start; i < stop; ++i)
                batch.push_back(std::async(std::launch::async, one, kAllSlaKinds[i]));
            for (std::size_t i = start; i < stop; ++i) outs[i] = batch[i - start].get();
        }
    }
    std::size_t failures = 0;
    std::string why;
    for (const auto& o : outs)
        if (o.failed) {
            ++failures;
            why += std::string(why.empty() ? "" : "; ") + std::string(to_string(o.kind)) + ": " + o.error;
        }
    if (failures >= 4)
        throw RuntimeError(std::to_string(failures) + " of 7 structure learners failed, no majority possible (" + why + ")");
    return outs;
}

const std::set<Edge>& directed_votes(const SlaOutput& out) {
    return out.directed;
}

}  // namespace causal
