#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "causal/dataset.hpp"
#include "causal/discovery.hpp"
#include "causal/ensemble.hpp"
#include "causal/error.hpp"
#include "causal/estimate.hpp"
#include "causal/subgroup.hpp"

namespace causal {

// A stage input that an earlier stage should have written.
class MissingArtifact : public ValidationError {
public:
    MissingArtifact(const std::filesystem::path& file, const std::string& stage);
};

enum class DataSource { scm, claims };
enum class AdjustmentChoice { smallest, union_of_minimal, all_candidates };
enum class EstimationCohort { full, enhanced_subgroup };

struct PipelineConfig {
    DataSource source = DataSource::scm;
    std::optional<std::uint64_t> seed;  // required
    std::filesystem::path out_dir = "out";
    std::size_t threads = 1;

    // generate
    std::filesystem::path scm_path;
    std::size_t n = 5000;

    // preprocess
    std::filesystem::path claims_path;
    std::filesystem::path codes_path;
    CohortConfig cohort;
    std::vector<std::string> include_columns;  // empty: every column
    std::string treatment{kTreatmentColumn};
    std::string outcome{kOutcomeColumn};

    SlaConfig sla;
    VoteRule vote_rule = VoteRule::ge_majority;

    std::optional<std::vector<std::string>> candidates;
    AdjustmentChoice adjustment = AdjustmentChoice::smallest;

    Estimand estimand = Estimand::causal_expectation;
    double x1 = 1.0, x0 = 0.0;
    EstimationMode mode = EstimationMode::split;
    double train_fraction = 0.7;
    BootstrapConfig bootstrap;
    std::optional<std::vector<std::string>> baseline_covariates;  // default: the adjustment set
    EstimationCohort estimation_cohort = EstimationCohort::full;
    std::size_t oracle_mc = 200000;

    bool subgroup_enabled = true;
    HemmConfig hemm;
    std::optional<std::vector<std::string>> hemm_covariates;  // default: every other column

    // Optional probability queries over the consensus graph ("name=value" lists).
    Assignment conditional_target, conditional_evidence;
    Assignment interventional_do, interventional_target;

    // INI (sections and key = value) or JSON with the same nesting, chosen
    // by extension. Relative paths resolve against the file's directory.
    static PipelineConfig load(const std::filesystem::path& path);
    void validate() const;  // throws ValidationError
};

std::string_view to_string(DataSource s);
std::string_view to_string(AdjustmentChoice a);
std::string_view to_string(EstimationCohort c);

// Seeds for each stage come from the master seed as derive_seed(master, tag).
namespace seed_tag {
inline constexpr std::uint64_t generate = 1, subgroup = 2, discover = 3, bootstrap = 4, baseline = 5, oracle = 6;
}

// Artifact file names inside the output directory.
namespace artifact {
inline constexpr const char* scm = "scm.json";
inline constexpr const char* generated = "generated.csv";
inline constexpr const char* cohort = "cohort.csv";
inline constexpr const char* cohort_summary = "cohort_summary.json";
inline constexpr const char* hemm_model = "hemm_model.json";
inline constexpr const char* enhanced = "enhanced_subgroup.csv";
inline constexpr const char* votes = "votes.csv";
inline constexpr const char* consensus_dot = "consensus.dot";
inline constexpr const char* consensus_json = "consensus.json";
inline constexpr const char* identify = "identify.json";
inline constexpr const char* report = "report.json";
inline constexpr const char* summary = "summary.txt";
}  // namespace artifact

class Pipeline {
public:
    Pipeline(PipelineConfig cfg, std::ostream& log);

    void generate();
    void preprocess();
    void subgroup();
    void discover();
    void vote();
    void identify();
    void estimate();
    void report();
    void run_all();

    const std::filesystem::path& out_dir() const { return cfg_.out_dir; }

private:
    std::filesystem::path path(const char* name) const { return cfg_.out_dir / name; }
    std::filesystem::path require(const char* name, const std::string& stage) const;
    std::uint64_t seed(std::uint64_t tag) const;

    PipelineConfig cfg_;
    std::ostream& log_;
};

}  // namespace causal
