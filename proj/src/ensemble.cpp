#include "causal/ensemble.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <tuple>

#include "causal/error.hpp"
#include "csv.hpp"

namespace causal {

VoteMatrix::VoteMatrix(std::vector<std::string> variables, std::size_t m)
    : variables_(std::move(variables)), m_(m), counts_(variables_.size() * variables_.size(), 0) {}

std::size_t VoteMatrix::index(int a, int b) const {
    const auto n = variables_.size();
    if (a < 0 || b < 0 || static_cast<std::size_t>(a) >= n || static_cast<std::size_t>(b) >= n)
        throw ValidationError("vote matrix index out of range");
    return static_cast<std::size_t>(a) * n + static_cast<std::size_t>(b);
}

void VoteMatrix::set(int a, int b, int votes) {
    if (a == b && votes != 0) throw ValidationError("vote matrix diagonal must be zero");
    if (votes < 0 || static_cast<std::size_t>(votes) > m_)
        throw ValidationError("vote count " + std::to_string(votes) + " outside [0, " + std::to_string(m_) + "]");
    if (static_cast<std::size_t>(votes + count(b, a)) > m_)
        throw ValidationError("votes for " + variables_[a] + " -> " + variables_[b] + " and its reverse exceed m");
    counts_[index(a, b)] = votes;
}

std::string VoteMatrix::to_csv() const {
    std::ostringstream os;
    os << "from";
    for (const auto& v : variables_) os << ',' << v;
    os << '\n';
    for (std::size_t a = 0; a < size(); ++a) {
        os << variables_[a];
        for (std::size_t b = 0; b < size(); ++b) os << ',' << count(static_cast<int>(a), static_cast<int>(b));
        os << '\n';
    }
    return os.str();
}

VoteMatrix VoteMatrix::from_csv(std::string_view text, std::size_t m) {
    std::vector<std::vector<std::string>> rows;
    std::size_t pos = 0;
    while (pos < text.size()) {
        auto end = text.find('\n', pos);
        if (end == std::string_view::npos) end = text.size();
        auto line = text.substr(pos, end - pos);
        if (!detail::trim(line).empty()) rows.push_back(detail::split_csv_line(line));
        pos = end + 1;
    }
    if (rows.empty()) throw ValidationError("vote matrix CSV is empty");
    std::vector<std::string> vars(rows[0].begin() + 1, rows[0].end());
    if (rows.size() != vars.size() + 1) throw ValidationError("vote matrix CSV is not square");
    VoteMatrix v(vars, m);
    for (std::size_t a = 0; a < vars.size(); ++a) {
        const auto& r = rows[a + 1];
        if (r.size() != vars.size() + 1 || r[0] != vars[a])
            throw ValidationError("vote matrix CSV row " + std::to_string(a + 1) + " does not match the header");
        for (std::size_t b = 0; b < vars.size(); ++b) {
            const auto c = detail::parse_int(r[b + 1]);
            if (!c) throw ValidationError("vote matrix CSV has a non-integer count '" + r[b + 1] + "'");
            v.counts_[a * vars.size() + b] = static_cast<int>(*c);
        }
    }
    for (std::size_t a = 0; a < vars.size(); ++a)
        for (std::size_t b = 0; b < vars.size(); ++b) v.set(static_cast<int>(a), static_cast<int>(b), v.count(a, b));
    return v;
}

VoteMatrix tally(const std::vector<SlaOutput>& outputs) {
    if (outputs.empty()) return VoteMatrix({}, 0);
    const auto& vars = outputs.front().variables;
    for (const auto& o : outputs)
        if (o.variables != vars) throw ValidationError("algorithm outputs disagree on the variable set");
    VoteMatrix v(vars, outputs.size());
    std::vector<int> counts(vars.size() * vars.size(), 0);
    for (const auto& o : outputs)
        for (auto [a, b] : directed_votes(o)) ++counts[static_cast<std::size_t>(a) * vars.size() + b];
    for (std::size_t a = 0; a < vars.size(); ++a)
        for (std::size_t b = 0; b < vars.size(); ++b)
            if (counts[a * vars.size() + b])
                v.set(static_cast<int>(a), static_cast<int>(b), counts[a * vars.size() + b]);
    return v;
}

std::string_view to_string(VoteRule r) {
    return r == VoteRule::ge_majority ? "ge_majority" : "gt_m_half_plus_one";
}

VoteRule vote_rule_from_string(std::string_view s) {
    if (s == "ge_majority") return VoteRule::ge_majority;
    if (s == "gt_m_half_plus_one") return VoteRule::gt_m_half_plus_one;
    throw ValidationError("unknown vote_threshold rule '" + std::string(s) + "' (expected ge_majority or gt_m_half_plus_one)");
}

int vote_threshold(std::size_t m, VoteRule rule) {
    const int half = static_cast<int>(m / 2);
    if (rule == VoteRule::ge_majority) return half + 1;
    // smallest integer strictly above m/2 + 1
    return static_cast<int>(std::floor(static_cast<double>(m) / 2.0 + 1.0)) + 1;
}

ThresholdResult threshold_edges_at(const VoteMatrix& v, int min_votes) {
    ThresholdResult r;
    const int n = static_cast<int>(v.size());
    for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b) {
            if (a == b || v.count(a, b) < min_votes) continue;
            const int back = v.count(b, a);
            if (back >= min_votes) {
                if (back == v.count(a, b)) {
                    if (a < b)
                        r.diagnostics.push_back("tie " + std::to_string(back) + "-" + std::to_string(back) + " between " +
                                                v.variables()[a] + " and " + v.variables()[b] + ": both directions dropped");
                    continue;
                }
                if (back > v.count(a, b)) continue;
            }
            r.edges.emplace(a, b);
        }
    return r;
}

ThresholdResult threshold_edges(const VoteMatrix& v, VoteRule rule) {
    return threshold_edges_at(v, vote_threshold(v.m(), rule));
}

namespace {

// Strongly connected component id per node (Tarjan, iterative).
std::vector<int> scc_ids(std::size_t n, const std::set<Edge>& edges, std::vector<std::size_t>& sizes) {
    std::vector<std::vector<int>> out(n);
    for (auto [a, b] : edges) out[a].push_back(b);
    std::vector<int> index(n, -1), low(n, 0), comp(n, -1), stack;
    std::vector<bool> on_stack(n, false);
    int counter = 0, ncomp = 0;
    sizes.clear();
    for (std::size_t root = 0; root < n; ++root) {
        if (index[root] >= 0) continue;
        std::vector<std::pair<int, std::size_t>> call{{static_cast<int>(root), 0}};
        index[root] = low[root] = counter++;
        stack.push_back(static_cast<int>(root));
        on_stack[root] = true;
        while (!call.empty()) {
            auto& [u, i] = call.back();
            if (i < out[u].size()) {
                const int w = out[u][i++];
                if (index[w] < 0) {
                    index[w] = low[w] = counter++;
                    stack.push_back(w);
                    on_stack[w] = true;
                    call.emplace_back(w, 0);
                } else if (on_stack[w]) {
                    low[u] = std::min(low[u], index[w]);
                }
                continue;
            }
            const int done = u;
            call.pop_back();
            if (!call.empty()) low[call.back().first] = std::min(low[call.back().first], low[done]);
            if (low[done] == index[done]) {
                std::size_t size = 0;
                int w;
                do {
                    w = stack.back();
                    stack.pop_back();
                    on_stack[w] = false;
                    comp[w] = ncomp;
                    ++size;
                } while (w != done);
                sizes.push_back(size);
                ++ncomp;
            }
        }
    }
    return comp;
}

}  // namespace

RepairResult repair_cycles(const std::set<Edge>& edges, const VoteMatrix& v) {
    const auto n = v.size();
    std::set<Edge> work = edges;
    RepairResult r;
    const auto& names = v.variables();
    for (;;) {
        std::vector<std::size_t> sizes;
        const auto comp = scc_ids(n, work, sizes);
        std::optional<Edge> weakest;
        for (auto e : work) {
            // an edge lies on a cycle iff both ends share a nontrivial component
            if (comp[e.first] != comp[e.second] || sizes[comp[e.first]] < 2) continue;
            if (!weakest) {
                weakest = e;
                continue;
            }
            const int ce = v.count(e.first, e.second), cw = v.count(weakest->first, weakest->second);
            if (ce < cw || (ce == cw && std::tie(names[e.first], names[e.second]) <
                                            std::tie(names[weakest->first], names[weakest->second])))
                weakest = e;
        }
        if (!weakest) break;
        work.erase(*weakest);
        r.removed.push_back(*weakest);
    }
    r.dag = Dag(names, std::vector<Edge>(work.begin(), work.end()));
    return r;
}

std::string consensus_dot(const Dag& dag, const VoteMatrix& v) {
    std::map<Edge, std::string> labels;
    for (auto e : dag.edges()) labels[e] = std::to_string(v.count(e.first, e.second));
    return dag.to_dot(labels);
}

nlohmann::json consensus_json(const RepairResult& r, const VoteMatrix& v, VoteRule rule,
                              const std::vector<std::string>& diagnostics) {
    nlohmann::json j;
    j["variables"] = v.variables();
    j["m"] = v.m();
    j["rule"] = to_string(rule);
    j["threshold"] = vote_threshold(v.m(), rule);
    auto edges = nlohmann::json::array(), removed = nlohmann::json::array();
    for (auto [a, b] : r.dag.edges())
        edges.push_back({{"from", v.variables()[a]}, {"to", v.variables()[b]}, {"votes", v.count(a, b)}});
    for (auto [a, b] : r.removed)
        removed.push_back({{"from", v.variables()[a]}, {"to", v.variables()[b]}, {"votes", v.count(a, b)}});
    j["edges"] = edges;
    j["removed_by_cycle_repair"] = removed;
    j["diagnostics"] = diagnostics;
    return j;
}

}  // namespace causal
