#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "causal/dag.hpp"

namespace causal {

struct CausalQuery {
    std::string treatment;
    std::string outcome;
    double x1 = 1.0;
    double x0 = 0.0;
};

// Throws ValidationError unless treatment != outcome and both are in the dag.
void validate_query(const Dag& dag, const CausalQuery& q);

struct AdjustmentSet {
    std::vector<std::string> variables;  // sorted by name
    bool minimal = true;

    bool operator==(const AdjustmentSet&) const = default;
};

struct BackdoorResult {
    std::vector<AdjustmentSet> sets;  // by size, then lexicographic
    bool exhaustive = true;           // false when the greedy fallback was used
    std::vector<std::string> candidates;
};

inline constexpr std::size_t kMaxExhaustiveCandidates = 20;

// `candidates` restricts the variables an adjustment set may use (for example
// observed pre-treatment covariates). Descendants of the treatment are always
// dropped. Defaults to every other non-descendant.
BackdoorResult backdoor_sets(const Dag& dag, const CausalQuery& q,
                             const std::optional<std::vector<std::string>>& candidates = std::nullopt);

bool is_backdoor_identifiable(const Dag& dag, const CausalQuery& q,
                              const std::optional<std::vector<std::string>>& candidates = std::nullopt);

// nullopt if z satisfies the backdoor criterion, otherwise the reason
// (a treatment descendant, or an open backdoor path rendered with arrows).
std::optional<std::string> backdoor_violation(const Dag& dag, int x, int y, const std::vector<int>& z);

enum class VariableRole { confounder, mediator, collider_on_path, descendant_of_outcome, neutral };

std::string_view to_string(VariableRole r);

struct RoleResult {
    std::map<std::string, VariableRole> roles;
    std::vector<std::string> diagnostics;
};

// Precedence when several apply: mediator, confounder, collider_on_path,
// descendant_of_outcome. Collider detection only asks that two parents of the
// node connect to treatment and outcome respectively with the node removed;
// the two connections are not required to be disjoint.
RoleResult classify_roles(const Dag& dag, const CausalQuery& q);

struct FormulaSpec {
    std::string outcome;
    std::string treatment;
    std::vector<std::string> conditioning;  // treatment then adjustment variables
    std::vector<std::string> marginalized;
    std::string text;

    nlohmann::json to_json() const;
};

// Throws ValidationError citing the violation when z is not a backdoor set.
FormulaSpec adjustment_formula(const Dag& dag, const CausalQuery& q, const AdjustmentSet& z);

}  // namespace causal
