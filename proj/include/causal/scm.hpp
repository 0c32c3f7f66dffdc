#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "causal/dag.hpp"
#include "causal/feature_matrix.hpp"

namespace causal {

enum class MechanismType { linear, logistic };
enum class NoiseDist { gaussian, uniform, laplace, bernoulli };

// v = intercept + sum_p weight_p * parent_p (+ noise for linear);
// a logistic mechanism draws v ~ Bernoulli(sigmoid(...)).
struct Mechanism {
    MechanismType type = MechanismType::linear;
    std::map<std::string, double> weights;
    double intercept = 0.0;
};

// gaussian: sd; uniform: half-width a of U(-a, a); laplace: scale b.
// bernoulli is the implicit noise of logistic mechanisms and takes no param.
struct Noise {
    NoiseDist dist = NoiseDist::gaussian;
    double param = 1.0;
};

struct Intervention {
    std::map<std::string, double> assignments;
};

// Structural causal model <U, V, F, P(u)> restricted to linear and logistic
// mechanisms with independent exogenous noise.
class Scm {
public:
    Scm(Dag dag, std::vector<Mechanism> mechanisms, std::vector<Noise> noise);

    const Dag& dag() const { return dag_; }
    const Mechanism& mechanism(int v) const { return mechanisms_.at(static_cast<std::size_t>(v)); }
    const Noise& noise(int v) const { return noise_.at(static_cast<std::size_t>(v)); }
    // Weight of parent p in the mechanism of v (0 when absent).
    double weight(int p, int v) const;

    static Scm from_json(const nlohmann::json& j);
    nlohmann::json to_json() const;

private:
    Dag dag_;
    std::vector<Mechanism> mechanisms_;
    std::vector<Noise> noise_;
    std::vector<std::vector<double>> parent_weights_;  // aligned with dag_.parents(v)
};

Scm load_scm(const std::string& path);

// Logistic nodes produce binary columns, linear nodes continuous ones.
FeatureMatrix sample(const Scm& scm, std::size_t n, std::uint64_t seed);
// Intervened nodes are held at their assigned constants; their mechanisms and
// incoming edges are ignored.
FeatureMatrix sample_do(const Scm& scm, const Intervention& intervention, std::size_t n, std::uint64_t seed);

struct TrueEffect {
    double value = 0.0;
    double std_error = 0.0;  // 0 for the closed form
    bool closed_form = false;
};

// E[Y | do(X = x1)] - E[Y | do(X = x0)]. Uses the path-coefficient closed form
// when every node on a directed treatment->outcome path (outcome included)
// is linear; Monte Carlo through sample_do otherwise (n_mc >= 100).
TrueEffect true_effect(const Scm& scm, std::string_view treatment, std::string_view outcome, double x1,
                       double x0, std::size_t n_mc, std::uint64_t seed);

// E[Y | do(X = x)] by the same rules.
TrueEffect true_mean(const Scm& scm, std::string_view treatment, std::string_view outcome, double x,
                     std::size_t n_mc, std::uint64_t seed);

std::string_view to_string(MechanismType t);
std::string_view to_string(NoiseDist d);

}  // namespace causal
