#include "causal/pipeline.hpp"

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/json_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "causal/error.hpp"
#include "causal/identify.hpp"
#include "causal/random.hpp"
#include "causal/scm.hpp"
#include "csv.hpp"

namespace causal {

namespace fs = std::filesystem;
namespace pt = boost::property_tree;
using nlohmann::json;

MissingArtifact::MissingArtifact(const fs::path& file, const std::string& stage)
    : ValidationError("missing artifact " + file.string() + "; run '" + stage + "' first") {}

std::string_view to_string(DataSource s) {
    return s == DataSource::scm ? "scm" : "claims";
}

std::string_view to_string(AdjustmentChoice a) {
    switch (a) {
        case AdjustmentChoice::smallest: return "smallest";
        case AdjustmentChoice::union_of_minimal: return "union";
        case AdjustmentChoice::all_candidates: return "all_candidates";
    }
    return "?";
}

std::string_view to_string(EstimationCohort c) {
    return c == EstimationCohort::full ? "full" : "enhanced_subgroup";
}

// ---------------------------------------------------------------------------
// Configuration

namespace {

const std::map<std::string, std::set<std::string>>& known_keys() {
    static const std::map<std::string, std::set<std::string>> keys{
        {"pipeline", {"source", "seed", "out", "threads"}},
        {"generate", {"scm", "n"}},
        {"preprocess", {"claims", "codes", "min_age", "max_age", "first_year", "last_year", "require_opioid_rx"}},
        {"columns", {"include", "treatment", "outcome"}},
        {"discovery",
         {"alpha", "max_cond_set", "score", "max_iters", "tabu_len", "max_tabu", "restarts", "ges_max_subset",
          "lingam_prune", "ica_tolerance", "ica_max_iters"}},
        {"vote", {"vote_threshold"}},
        {"identify", {"candidates", "adjustment"}},
        {"estimate",
         {"estimand", "mode", "train_fraction", "k", "resample_fraction", "baseline_covariates", "cohort", "oracle_mc",
          "x1", "x0"}},
        {"subgroup", {"enabled", "K", "max_em_iters", "tol", "membership_threshold", "restarts", "covariates"}},
        {"query", {"conditional_target", "conditional_evidence", "interventional_do", "interventional_target"}},
    };
    return keys;
}

class Reader {
public:
    Reader(const pt::ptree& tree, fs::path base) : tree_(tree), base_(std::move(base)) {}

    std::optional<std::string> str(const std::string& section, const std::string& key) const {
        auto s = tree_.get_child_optional(section);
        if (!s) return std::nullopt;
        auto v = s->get_child_optional(pt::ptree::path_type(key, '\0'));
        if (!v) return std::nullopt;
        if (!v->empty()) {
            // JSON array form
            std::string joined;
            for (const auto& kv : *v) joined += (joined.empty() ? "" : ",") + kv.second.data();
            return joined;
        }
        return std::string(detail::trim(v->data()));
    }

    template <class F>
    void with(const std::string& section, const std::string& key, F&& apply) const {
        if (auto v = str(section, key)) {
            try {
                apply(*v);
            } catch (const ValidationError& e) {
                throw ValidationError("[" + section + "] " + key + ": " + e.what());
            }
        }
    }

    static double to_double(const std::string& s) {
        auto v = detail::parse_double(s);
        if (!v) throw ValidationError("expected a number, got '" + s + "'");
        return *v;
    }
    static long long to_int(const std::string& s) {
        auto v = detail::parse_int(s);
        if (!v) throw ValidationError("expected an integer, got '" + s + "'");
        return *v;
    }
    static std::size_t to_count(const std::string& s) {
        const auto v = to_int(s);
        if (v < 0) throw ValidationError("expected a non-negative integer, got '" + s + "'");
        return static_cast<std::size_t>(v);
    }
    static bool to_bool(const std::string& s) {
        if (s == "true" || s == "1" || s == "yes" || s == "on") return true;
        if (s == "false" || s == "0" || s == "no" || s == "off") return false;
        throw ValidationError("expected true or false, got '" + s + "'");
    }
    static std::vector<std::string> to_list(const std::string& s) {
        std::vector<std::string> out;
        for (const auto& item : detail::split_csv_line(s)) {
            const auto t = std::string(detail::trim(item));
            if (!t.empty()) out.push_back(t);
        }
        return out;
    }
    static Assignment to_assignment(const std::string& s) {
        Assignment a;
        for (const auto& item : to_list(s)) {
            const auto eq = item.find('=');
            if (eq == std::string::npos) throw ValidationError("expected name=value, got '" + item + "'");
            const auto name = std::string(detail::trim(std::string_view(item).substr(0, eq)));
            const auto value = to_int(item.substr(eq + 1));
            if (value != 0 && value != 1) throw ValidationError("query values must be 0 or 1 ('" + item + "')");
            a[name] = static_cast<int>(value);
        }
        return a;
    }
    fs::path to_path(const std::string& s) const {
        fs::path p(s);
        return p.is_absolute() ? p : (base_ / p).lexically_normal();
    }

private:
    const pt::ptree& tree_;
    fs::path base_;
};

}  // namespace

PipelineConfig PipelineConfig::load(const fs::path& path) {
    if (!fs::exists(path)) throw ValidationError("config file not found: " + path.string());
    pt::ptree tree;
    try {
        if (path.extension() == ".json") pt::read_json(path.string(), tree);
        else pt::read_ini(path.string(), tree);
    } catch (const pt::file_parser_error& e) {
        throw ValidationError("cannot parse config " + path.string() + ": " + e.message() + " (line " +
                              std::to_string(e.line()) + ")");
    }
    for (const auto& [section, body] : tree) {
        auto it = known_keys().find(section);
        if (it == known_keys().end()) throw ValidationError("unknown config section [" + section + "]");
        for (const auto& kv : body)
            if (!it->second.count(kv.first))
                throw ValidationError("unknown key '" + kv.first + "' in section [" + section + "]");
    }

    PipelineConfig c;
    const Reader r(tree, fs::absolute(path).parent_path());
    r.with("pipeline", "source", [&](const std::string& v) {
        if (v == "scm") c.source = DataSource::scm;
        else if (v == "claims") c.source = DataSource::claims;
        else throw ValidationError("expected scm or claims, got '" + v + "'");
    });
    r.with("pipeline", "seed", [&](const std::string& v) { c.seed = static_cast<std::uint64_t>(Reader::to_count(v)); });
    r.with("pipeline", "out", [&](const std::string& v) { c.out_dir = r.to_path(v); });
    r.with("pipeline", "threads", [&](const std::string& v) { c.threads = Reader::to_count(v); });

    r.with("generate", "scm", [&](const std::string& v) { c.scm_path = r.to_path(v); });
    r.with("generate", "n", [&](const std::string& v) { c.n = Reader::to_count(v); });

    r.with("preprocess", "claims", [&](const std::string& v) { c.claims_path = r.to_path(v); });
    r.with("preprocess", "codes", [&](const std::string& v) { c.codes_path = r.to_path(v); });
    r.with("preprocess", "min_age", [&](const std::string& v) { c.cohort.min_age = static_cast<int>(Reader::to_int(v)); });
    r.with("preprocess", "max_age", [&](const std::string& v) { c.cohort.max_age = static_cast<int>(Reader::to_int(v)); });
    r.with("preprocess", "first_year", [&](const std::string& v) { c.cohort.first_year = static_cast<int>(Reader::to_int(v)); });
    r.with("preprocess", "last_year", [&](const std::string& v) { c.cohort.last_year = static_cast<int>(Reader::to_int(v)); });
    r.with("preprocess", "require_opioid_rx", [&](const std::string& v) { c.cohort.require_opioid_rx = Reader::to_bool(v); });

    r.with("columns", "include", [&](const std::string& v) { c.include_columns = Reader::to_list(v); });
    r.with("columns", "treatment", [&](const std::string& v) { c.treatment = v; });
    r.with("columns", "outcome", [&](const std::string& v) { c.outcome = v; });

    r.with("discovery", "alpha", [&](const std::string& v) { c.sla.alpha = Reader::to_double(v); });
    r.with("discovery", "max_cond_set", [&](const std::string& v) { c.sla.max_cond_set = Reader::to_count(v); });
    r.with("discovery", "score", [&](const std::string& v) {
        if (v == "automatic") c.sla.score = ScoreType::automatic;
        else if (v == "bic_gaussian") c.sla.score = ScoreType::bic_gaussian;
        else if (v == "bic_binary") c.sla.score = ScoreType::bic_binary;
        else throw ValidationError("expected automatic, bic_gaussian or bic_binary, got '" + v + "'");
    });
    r.with("discovery", "max_iters", [&](const std::string& v) { c.sla.max_iters = Reader::to_count(v); });
    r.with("discovery", "tabu_len", [&](const std::string& v) { c.sla.tabu_len = Reader::to_count(v); });
    r.with("discovery", "max_tabu", [&](const std::string& v) { c.sla.max_tabu = Reader::to_count(v); });
    r.with("discovery", "restarts", [&](const std::string& v) { c.sla.restarts = Reader::to_count(v); });
    r.with("discovery", "ges_max_subset", [&](const std::string& v) { c.sla.ges_max_subset = Reader::to_count(v); });
    r.with("discovery", "lingam_prune", [&](const std::string& v) { c.sla.lingam_prune = Reader::to_double(v); });
    r.with("discovery", "ica_tolerance", [&](const std::string& v) { c.sla.ica_tolerance = Reader::to_double(v); });
    r.with("discovery", "ica_max_iters", [&](const std::string& v) { c.sla.ica_max_iters = Reader::to_count(v); });

    r.with("vote", "vote_threshold", [&](const std::string& v) { c.vote_rule = vote_rule_from_string(v); });

    r.with("identify", "candidates", [&](const std::string& v) { c.candidates = Reader::to_list(v); });
    r.with("identify", "adjustment", [&](const std::string& v) {
        if (v == "smallest") c.adjustment = AdjustmentChoice::smallest;
        else if (v == "union") c.adjustment = AdjustmentChoice::union_of_minimal;
        else if (v == "all_candidates") c.adjustment = AdjustmentChoice::all_candidates;
        else throw ValidationError("expected smallest, union or all_candidates, got '" + v + "'");
    });

    r.with("estimate", "estimand", [&](const std::string& v) { c.estimand = estimand_from_string(v); });
    r.with("estimate", "mode", [&](const std::string& v) { c.mode = estimation_mode_from_string(v); });
    r.with("estimate", "train_fraction", [&](const std::string& v) { c.train_fraction = Reader::to_double(v); });
    r.with("estimate", "k", [&](const std::string& v) { c.bootstrap.k = Reader::to_count(v); });
    r.with("estimate", "resample_fraction", [&](const std::string& v) { c.bootstrap.resample_fraction = Reader::to_double(v); });
    r.with("estimate", "baseline_covariates", [&](const std::string& v) { c.baseline_covariates = Reader::to_list(v); });
    r.with("estimate", "cohort", [&](const std::string& v) {
        if (v == "full") c.estimation_cohort = EstimationCohort::full;
        else if (v == "enhanced_subgroup") c.estimation_cohort = EstimationCohort::enhanced_subgroup;
        else throw ValidationError("expected full or enhanced_subgroup, got '" + v + "'");
    });
    r.with("estimate", "oracle_mc", [&](const std::string& v) { c.oracle_mc = Reader::to_count(v); });
    r.with("estimate", "x1", [&](const std::string& v) { c.x1 = Reader::to_double(v); });
    r.with("estimate", "x0", [&](const std::string& v) { c.x0 = Reader::to_double(v); });

    r.with("subgroup", "enabled", [&](const std::string& v) { c.subgroup_enabled = Reader::to_bool(v); });
    r.with("subgroup", "K", [&](const std::string& v) { c.hemm.K = Reader::to_count(v); });
    r.with("subgroup", "max_em_iters", [&](const std::string& v) { c.hemm.max_em_iters = Reader::to_count(v); });
    r.with("subgroup", "tol", [&](const std::string& v) { c.hemm.tol = Reader::to_double(v); });
    r.with("subgroup", "membership_threshold", [&](const std::string& v) { c.hemm.membership_threshold = Reader::to_double(v); });
    r.with("subgroup", "restarts", [&](const std::string& v) { c.hemm.restarts = Reader::to_count(v); });
    r.with("subgroup", "covariates", [&](const std::string& v) { c.hemm_covariates = Reader::to_list(v); });

    r.with("query", "conditional_target", [&](const std::string& v) { c.conditional_target = Reader::to_assignment(v); });
    r.with("query", "conditional_evidence", [&](const std::string& v) { c.conditional_evidence = Reader::to_assignment(v); });
    r.with("query", "interventional_do", [&](const std::string& v) { c.interventional_do = Reader::to_assignment(v); });
    r.with("query", "interventional_target", [&](const std::string& v) { c.interventional_target = Reader::to_assignment(v); });
    return c;
}

void PipelineConfig::validate() const {
    if (!seed) throw ValidationError("[pipeline] seed is required");
    if (threads < 1) throw ValidationError("[pipeline] threads must be at least 1");
    if (source == DataSource::scm) {
        if (scm_path.empty()) throw ValidationError("[generate] scm is required when source = scm");
        if (!fs::exists(scm_path)) throw ValidationError("SCM file not found: " + scm_path.string());
        if (n < 10) throw ValidationError("[generate] n must be at least 10");
    } else {
        if (claims_path.empty() || codes_path.empty())
            throw ValidationError("[preprocess] claims and codes are required when source = claims");
        if (!fs::exists(claims_path)) throw ValidationError("claims file not found: " + claims_path.string());
        if (!fs::exists(codes_path)) throw ValidationError("code tables not found: " + codes_path.string());
    }
    if (treatment == outcome) throw ValidationError("[columns] treatment and outcome must differ");
    if (!(train_fraction > 0.0 && train_fraction < 1.0)) throw ValidationError("[estimate] train_fraction must lie in (0, 1)");
    if (oracle_mc < 100) throw ValidationError("[estimate] oracle_mc must be at least 100");
    sla.validate();
    bootstrap.validate();
    hemm.validate();
    if (conditional_target.empty() != conditional_evidence.empty() && conditional_target.empty())
        throw ValidationError("[query] conditional_evidence needs a conditional_target");
    if (interventional_do.empty() != interventional_target.empty())
        throw ValidationError("[query] interventional_do and interventional_target go together");
}

// ---------------------------------------------------------------------------
// Stages

namespace {

void write_text(const fs::path& p, const std::string& text) {
    fs::create_directories(p.parent_path());
    std::ofstream out(p, std::ios::binary);
    if (!out) throw RuntimeError("cannot write " + p.string());
    out << text;
}

void write_json(const fs::path& p, const json& j) {
    write_text(p, j.dump(2) + "\n");
}

json read_json_file(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw ValidationError("cannot read " + p.string());
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw ValidationError("malformed JSON in " + p.string() + ": " + e.what());
    }
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw ValidationError("cannot read " + p.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string sla_file(SlaKind k, const char* ext) {
    return "sla_" + std::string(to_string(k)) + ext;
}

Dag consensus_dag(const json& j) {
    std::vector<std::pair<std::string, std::string>> edges;
    for (const auto& e : j.at("edges")) edges.emplace_back(e.at("from").get<std::string>(), e.at("to").get<std::string>());
    return Dag::from_names(j.at("variables").get<std::vector<std::string>>(), edges);
}

json assignment_json(const Assignment& a) {
    json j = json::object();
    for (const auto& [k, v] : a) j[k] = v;
    return j;
}

std::string fmt(double v, int digits = 4) {
    std::ostringstream os;
    os << std::fixed << std::setprecision(digits) << v;
    return os.str();
}

}  // namespace

Pipeline::Pipeline(PipelineConfig cfg, std::ostream& log) : cfg_(std::move(cfg)), log_(log) {
    cfg_.validate();
    std::error_code ec;
    fs::create_directories(cfg_.out_dir, ec);
    if (ec) throw RuntimeError("cannot create output directory " + cfg_.out_dir.string() + ": " + ec.message());
}

std::uint64_t Pipeline::seed(std::uint64_t tag) const {
    return derive_seed(*cfg_.seed, tag);
}

fs::path Pipeline::require(const char* name, const std::string& stage) const {
    auto p = path(name);
    if (!fs::exists(p)) throw MissingArtifact(p, stage);
    return p;
}

void Pipeline::generate() {
    const Scm scm = load_scm(cfg_.scm_path.string());
    FeatureMatrix fm = sample(scm, cfg_.n, seed(seed_tag::generate));
    if (fm.find(cfg_.treatment) && fm.find(cfg_.outcome)) fm = fm.with_roles(cfg_.treatment, cfg_.outcome);
    write_json(path(artifact::scm), scm.to_json());
    write_feature_matrix(fm, path(artifact::generated));
    log_ << "generate: " << fm.rows() << " rows over " << fm.cols() << " variables\n";
}

void Pipeline::preprocess() {
    json summary;
    summary["source"] = to_string(cfg_.source);
    FeatureMatrix fm;
    if (cfg_.source == DataSource::scm) {
        fm = read_feature_matrix(require(artifact::generated, "generate"));
    } else {
        const auto parsed = read_claims_csv(cfg_.claims_path);
        const auto codes = load_code_tables(cfg_.codes_path);
        CohortConfig cohort_cfg = cfg_.cohort;
        cohort_cfg.exclude_codes.insert(codes.exclude_codes.begin(), codes.exclude_codes.end());
        const auto cohort = build_cohort(parsed.records, cohort_cfg);
        auto built = to_feature_matrix(cohort, codes, cohort_cfg);
        fm = std::move(built.matrix);
        json rejected = json::array();
        for (const auto& r : parsed.rejected) rejected.push_back({{"line", r.line}, {"reason", r.reason}});
        summary["patients_read"] = parsed.records.size();
        summary["rejected_lines"] = rejected;
        summary["cohort_patients"] = cohort.size();
        summary["unknown_code_events"] = built.unknown_code_events;
    }
    if (!fm.find(cfg_.treatment)) throw ValidationError("treatment column '" + cfg_.treatment + "' not found");
    if (!fm.find(cfg_.outcome)) throw ValidationError("outcome column '" + cfg_.outcome + "' not found");

    std::vector<std::string> keep;
    if (!cfg_.include_columns.empty()) {
        for (const auto& c : cfg_.include_columns)
            if (!fm.find(c)) throw ValidationError("[columns] include names unknown column '" + c + "'");
        for (const auto& name : fm.names())
            if (name == cfg_.treatment || name == cfg_.outcome ||
                std::find(cfg_.include_columns.begin(), cfg_.include_columns.end(), name) != cfg_.include_columns.end())
                keep.push_back(name);
    } else {
        keep = fm.names();
    }
    std::vector<std::string> nonconstant, dropped;
    for (const auto& name : keep) {
        const auto& v = fm.column(name).values;
        const bool constant = v.empty() || std::all_of(v.begin(), v.end(), [&](double x) { return x == v.front(); });
        if (constant && (name == cfg_.treatment || name == cfg_.outcome))
            throw ValidationError("column '" + name + "' is constant in the cohort");
        (constant ? dropped : nonconstant).push_back(name);
    }
    fm = fm.select_columns(nonconstant).with_roles(cfg_.treatment, cfg_.outcome);
    write_feature_matrix(fm, path(artifact::cohort));

    double t_rate = 0, y_rate = 0;
    for (std::size_t i = 0; i < fm.rows(); ++i) {
        t_rate += fm.column(cfg_.treatment).values[i];
        y_rate += fm.column(cfg_.outcome).values[i];
    }
    summary["rows"] = fm.rows();
    summary["columns"] = fm.names();
    summary["dropped_constant_columns"] = dropped;
    summary["treatment_rate"] = fm.rows() ? t_rate / static_cast<double>(fm.rows()) : 0.0;
    summary["outcome_rate"] = fm.rows() ? y_rate / static_cast<double>(fm.rows()) : 0.0;
    write_json(path(artifact::cohort_summary), summary);
    log_ << "preprocess: " << fm.rows() << " rows, " << fm.cols() << " columns";
    if (!dropped.empty()) log_ << " (" << dropped.size() << " constant columns dropped)";
    log_ << "\n";
}

void Pipeline::subgroup() {
    if (!cfg_.subgroup_enabled) {
        log_ << "subgroup: disabled in config\n";
        return;
    }
    const auto fm = read_feature_matrix(require(artifact::cohort, "preprocess"));
    std::vector<std::string> covs;
    if (cfg_.hemm_covariates) covs = *cfg_.hemm_covariates;
    else
        for (const auto& n : fm.names())
            if (n != cfg_.treatment && n != cfg_.outcome) covs.push_back(n);
    HemmConfig hc = cfg_.hemm;
    hc.seed = seed(seed_tag::subgroup);
    const auto model = fit_hemm(fm, cfg_.treatment, cfg_.outcome, covs, hc, cfg_.threads);
    const auto enhanced = enhanced_subgroup(model, fm, hc.membership_threshold);

    json j = model.to_json();
    j["enhanced_group"] = enhanced.group;
    j["enhanced_group_tie"] = enhanced.tie;
    j["membership_threshold"] = hc.membership_threshold;
    j["selected_rows"] = enhanced.rows.size();
    if (model.K == 2) {
        std::vector<std::string> binary;
        for (const auto& c : covs)
            if (fm.column(c).kind == ColumnKind::binary) binary.push_back(c);
        j["feature_ratios"] = subgroup_feature_ratios(model, fm, enhanced.group, binary);
    }
    write_json(path(artifact::hemm_model), j);

    const auto mem = model.membership(fm);
    std::ostringstream csv;
    csv << "row,membership\n";
    for (auto r : enhanced.rows)
        csv << r << ',' << format_double(mem(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(enhanced.group))) << '\n';
    write_text(path(artifact::enhanced), csv.str());
    log_ << "subgroup: K=" << model.K << ", enhanced group " << enhanced.group << " (gamma "
         << fmt(model.gamma(enhanced.group)) << "), " << enhanced.rows.size() << " rows selected\n";
}

void Pipeline::discover() {
    const auto fm = read_feature_matrix(require(artifact::cohort, "preprocess"));
    SlaConfig sc = cfg_.sla;
    sc.seed = seed(seed_tag::discover);
    const auto outs = causal::run_all(fm, sc, cfg_.threads);
    for (const auto& o : outs) {
        write_json(path(sla_file(o.kind, ".json").c_str()), o.to_json());
        write_text(path(sla_file(o.kind, ".dot").c_str()), o.to_dot());
        log_ << "discover: " << to_string(o.kind);
        if (o.failed) log_ << " FAILED (" << o.error << ")\n";
        else log_ << " " << o.directed.size() << " directed, " << o.undirected.size() << " undirected\n";
    }
}

void Pipeline::vote() {
    std::vector<SlaOutput> outs;
    std::vector<std::string> failed;
    for (auto k : kAllSlaKinds) {
        const auto file = sla_file(k, ".json");
        outs.push_back(SlaOutput::from_json(read_json_file(require(file.c_str(), "discover"))));
        if (outs.back().failed) failed.emplace_back(to_string(k));
    }
    const auto v = tally(outs);
    const auto th = threshold_edges(v, cfg_.vote_rule);
    const auto rep = repair_cycles(th.edges, v);
    write_text(path(artifact::votes), v.to_csv());
    write_text(path(artifact::consensus_dot), consensus_dot(rep.dag, v));
    auto j = consensus_json(rep, v, cfg_.vote_rule, th.diagnostics);
    j["failed_algorithms"] = failed;
    write_json(path(artifact::consensus_json), j);
    log_ << "vote: threshold " << vote_threshold(v.m(), cfg_.vote_rule) << " of " << v.m() << ", "
         << rep.dag.edge_count() << " consensus edges, " << rep.removed.size() << " removed by cycle repair\n";
}

void Pipeline::identify() {
    const Dag dag = consensus_dag(read_json_file(require(artifact::consensus_json, "vote")));
    const CausalQuery q{cfg_.treatment, cfg_.outcome, cfg_.x1, cfg_.x0};
    const auto bs = backdoor_sets(dag, q, cfg_.candidates);
    const auto roles = classify_roles(dag, q);

    json j;
    j["treatment"] = q.treatment;
    j["outcome"] = q.outcome;
    j["identifiable"] = !bs.sets.empty();
    j["exhaustive"] = bs.exhaustive;
    j["candidates"] = bs.candidates;
    json sets = json::array();
    for (const auto& s : bs.sets) sets.push_back(s.variables);
    j["minimal_sets"] = sets;
    j["adjustment_choice"] = to_string(cfg_.adjustment);
    json role_map = json::object();
    for (const auto& [name, role] : roles.roles) role_map[name] = to_string(role);
    j["roles"] = role_map;
    j["role_diagnostics"] = roles.diagnostics;
    std::vector<std::string> notes;
    if (!dag.descendants(dag.index_of(q.treatment))[static_cast<std::size_t>(dag.index_of(q.outcome))])
        notes.push_back("the consensus graph has no directed path from treatment to outcome, so it implies no effect");

    if (!bs.sets.empty()) {
        AdjustmentSet chosen = bs.sets.front();
        std::vector<std::string> alt;
        if (cfg_.adjustment == AdjustmentChoice::union_of_minimal) {
            std::set<std::string> u;
            for (const auto& s : bs.sets) u.insert(s.variables.begin(), s.variables.end());
            alt.assign(u.begin(), u.end());
        } else if (cfg_.adjustment == AdjustmentChoice::all_candidates) {
            alt = bs.candidates;
        }
        if (cfg_.adjustment != AdjustmentChoice::smallest) {
            std::vector<int> zi;
            for (const auto& n : alt) zi.push_back(dag.index_of(n));
            std::sort(zi.begin(), zi.end());
            if (auto why = backdoor_violation(dag, dag.index_of(q.treatment), dag.index_of(q.outcome), zi))
                notes.push_back("requested adjustment set is invalid (" + *why + "); using the smallest minimal set");
            else
                chosen = {alt, false};
        }
        const auto f = adjustment_formula(dag, q, chosen);
        j["adjustment_set"] = chosen.variables;
        j["formula"] = f.to_json();
    } else {
        j["adjustment_set"] = nullptr;
        j["formula"] = nullptr;
        notes.push_back("no backdoor adjustment set exists among the candidates");
    }
    j["notes"] = notes;
    write_json(path(artifact::identify), j);
    log_ << "identify: " << bs.sets.size() << " minimal set(s)";
    if (!bs.sets.empty()) log_ << ", formula " << j["formula"]["text"].get<std::string>();
    log_ << "\n";
}

void Pipeline::estimate() {
    auto fm = read_feature_matrix(require(artifact::cohort, "preprocess"));
    const json idf = read_json_file(require(artifact::identify, "identify"));
    // Not identifiable: the report still carries the associational baseline.
    const bool identifiable = idf.at("identifiable").get<bool>();
    const AdjustmentSet z{identifiable ? idf.at("adjustment_set").get<std::vector<std::string>>() : std::vector<std::string>{},
                          true};
    const CausalQuery q{cfg_.treatment, cfg_.outcome, cfg_.x1, cfg_.x0};

    if (cfg_.estimation_cohort == EstimationCohort::enhanced_subgroup) {
        const auto text = slurp(require(artifact::enhanced, "subgroup"));
        std::vector<std::size_t> rows;
        std::istringstream in(text);
        std::string line;
        std::getline(in, line);
        while (std::getline(in, line))
            if (auto v = detail::parse_int(detail::split_csv_line(line).at(0))) rows.push_back(static_cast<std::size_t>(*v));
        if (rows.empty()) throw RuntimeError("the enhanced subgroup is empty; lower [subgroup] membership_threshold");
        fm = fm.select_rows(rows);
    }

    CausalEstimateConfig ec;
    ec.estimand = cfg_.estimand;
    ec.mode = cfg_.mode;
    ec.train_fraction = cfg_.train_fraction;
    ec.bootstrap = cfg_.bootstrap;
    ec.bootstrap.seed = seed(seed_tag::bootstrap);
    ec.threads = cfg_.threads;
    std::optional<CausalEstimate> ce;
    if (identifiable) ce = estimate_effect(fm, q, z, ec);

    BootstrapConfig bc = cfg_.bootstrap;
    bc.seed = seed(seed_tag::baseline);
    const auto covs = cfg_.baseline_covariates ? *cfg_.baseline_covariates : z.variables;
    const auto base = regression_baseline(fm, q.treatment, q.outcome, covs, bc, cfg_.threads);

    json r;
    r["estimand"] = to_string(cfg_.estimand);
    r["identifiable"] = identifiable;
    r["k"] = cfg_.bootstrap.k;
    r["seed"] = *cfg_.seed;
    r["bootstrap_seed"] = ec.bootstrap.seed;
    if (ce) {
        r["point"] = ce->effect.point;
        r["ci"] = {ce->effect.ci_low, ce->effect.ci_high};
        r["failed_resamples"] = ce->effect.failures;
        r["adjustment_set"] = z.variables;
        r["formula"] = idf.at("formula").at("text");
        r["point_estimates"] = ce->point_estimates;
        r["outcome_model"] = ce->model.to_json();
    } else {
        for (const char* k : {"point", "ci", "failed_resamples", "adjustment_set", "formula", "outcome_model"}) r[k] = nullptr;
        r["point_estimates"] = json::object();
    }
    r["treatment"] = q.treatment;
    r["outcome"] = q.outcome;
    r["x1"] = q.x1;
    r["x0"] = q.x0;
    r["mode"] = to_string(cfg_.mode);
    r["cohort"] = to_string(cfg_.estimation_cohort);
    r["n_rows"] = fm.rows();
    json b = base.to_json();
    b["covariates"] = covs;
    b["failed_resamples"] = base.effect.failures;
    r["baseline"] = b;

    json queries = json::object();
    if (!cfg_.conditional_target.empty() || !cfg_.interventional_do.empty()) {
        try {
            const Dag dag = consensus_dag(read_json_file(require(artifact::consensus_json, "vote")));
            const auto ms = fit_model_set(dag, fm);
            if (!cfg_.conditional_target.empty())
                queries["conditional"] = {{"target", assignment_json(cfg_.conditional_target)},
                                          {"evidence", assignment_json(cfg_.conditional_evidence)},
                                          {"probability", conditional_query(ms, cfg_.conditional_target, cfg_.conditional_evidence)}};
            if (!cfg_.interventional_do.empty())
                queries["interventional"] = {{"do", assignment_json(cfg_.interventional_do)},
                                             {"target", assignment_json(cfg_.interventional_target)},
                                             {"probability", interventional_query(ms, cfg_.interventional_do, cfg_.interventional_target)}};
        } catch (const MissingArtifact&) {
            throw;
        } catch (const std::exception& e) {
            queries["skipped"] = e.what();
        }
    }
    r["queries"] = queries;
    json notes = json::array();
    if (!identifiable)
        notes.push_back("only the associational baseline is reported");
    else if (cfg_.mode == EstimationMode::split && z.variables.empty())
        notes.push_back("split mode with an empty adjustment set: test-set predictions are constant, so the interval has zero width");
    for (const auto& n : idf.value("notes", json::array())) notes.push_back(n);
    r["notes"] = notes;

    if (cfg_.source == DataSource::scm && fs::exists(path(artifact::scm))) {
        const Scm scm = Scm::from_json(read_json_file(path(artifact::scm)));
        const auto ate = true_effect(scm, q.treatment, q.outcome, q.x1, q.x0, cfg_.oracle_mc, seed(seed_tag::oracle));
        const auto m1 = true_mean(scm, q.treatment, q.outcome, q.x1, cfg_.oracle_mc, derive_seed(seed(seed_tag::oracle), 1));
        r["oracle"] = {{"ate_risk_difference", ate.value},
                       {"ate_risk_difference_se", ate.std_error},
                       {"causal_expectation", m1.value},
                       {"causal_expectation_se", m1.std_error},
                       {"population", "full SCM population"}};
    }
    write_json(path(artifact::report), r);
    if (ce)
        log_ << "estimate: " << to_string(cfg_.estimand) << " = " << fmt(ce->effect.point) << " [" << fmt(ce->effect.ci_low)
             << ", " << fmt(ce->effect.ci_high) << "], baseline PAF " << fmt(base.paf) << "\n";
    else
        log_ << "estimate: not identifiable; baseline PAF " << fmt(base.paf) << "\n";
}

void Pipeline::report() {
    const json r = read_json_file(require(artifact::report, "estimate"));
    const json idf = read_json_file(require(artifact::identify, "identify"));
    const json con = read_json_file(require(artifact::consensus_json, "vote"));
    std::ostringstream os;
    os << "Causal effect of " << r["treatment"].get<std::string>() << " on " << r["outcome"].get<std::string>() << "\n\n";
    os << "Consensus graph (" << con["rule"].get<std::string>() << ", threshold " << con["threshold"].get<int>() << " of "
       << con["m"].get<int>() << "): " << con["edges"].size() << " edges\n";
    for (const auto& e : con["edges"])
        os << "  " << e["from"].get<std::string>() << " -> " << e["to"].get<std::string>() << "  (" << e["votes"].get<int>()
           << " votes)\n";
    if (!con["removed_by_cycle_repair"].empty()) {
        os << "  removed by cycle repair:";
        for (const auto& e : con["removed_by_cycle_repair"])
            os << " " << e["from"].get<std::string>() << "->" << e["to"].get<std::string>();
        os << "\n";
    }
    if (!con["failed_algorithms"].empty()) {
        os << "  failed algorithms:";
        for (const auto& f : con["failed_algorithms"]) os << " " << f.get<std::string>();
        os << "\n";
    }
    os << "\nIdentification\n";
    if (r["identifiable"].get<bool>()) {
        os << "  adjustment set: {";
        bool first = true;
        for (const auto& v : r["adjustment_set"]) os << (first ? "" : ", ") << v.get<std::string>(), first = false;
        os << "}\n  formula: " << r["formula"].get<std::string>() << "\n";
    } else {
        os << "  not identifiable by backdoor adjustment\n";
    }
    for (const auto& [name, role] : idf["roles"].items())
        if (role != "neutral") os << "  " << name << ": " << role.get<std::string>() << "\n";

    const auto& b = r["baseline"];
    os << "\nRegression baseline (associational)\n";
    os << "  odds ratio: " << fmt(b["or"].get<double>(), 3) << "\n";
    os << "  PAF: " << fmt(b["paf"].get<double>()) << " [" << fmt(b["ci"][0].get<double>()) << ", "
       << fmt(b["ci"][1].get<double>()) << "]\n";
    os << "\nCausal estimate (" << r["mode"].get<std::string>() << ", cohort " << r["cohort"].get<std::string>() << ", "
       << r["n_rows"].get<std::size_t>() << " rows, k=" << r["k"].get<std::size_t>() << ")\n";
    if (r["identifiable"].get<bool>())
        os << "  " << r["estimand"].get<std::string>() << ": " << fmt(r["point"].get<double>()) << " ["
           << fmt(r["ci"][0].get<double>()) << ", " << fmt(r["ci"][1].get<double>()) << "]\n";
    else
        os << "  not estimated\n";
    for (const auto& [name, v] : r["point_estimates"].items())
        os << "  " << name << " (point): " << fmt(v.get<double>()) << "\n";
    if (r.contains("oracle")) {
        const auto& o = r["oracle"];
        os << "\nSCM ground truth\n";
        os << "  ate_risk_difference: " << fmt(o["ate_risk_difference"].get<double>()) << " (MC se "
           << fmt(o["ate_risk_difference_se"].get<double>(), 5) << ")\n";
        os << "  causal_expectation: " << fmt(o["causal_expectation"].get<double>()) << " (MC se "
           << fmt(o["causal_expectation_se"].get<double>(), 5) << ")\n";
    }
    if (!r["queries"].empty()) {
        os << "\nQueries\n";
        if (r["queries"].contains("conditional"))
            os << "  conditional: " << fmt(r["queries"]["conditional"]["probability"].get<double>()) << "\n";
        if (r["queries"].contains("interventional"))
            os << "  interventional: " << fmt(r["queries"]["interventional"]["probability"].get<double>()) << "\n";
        if (r["queries"].contains("skipped"))
            os << "  skipped: " << r["queries"]["skipped"].get<std::string>() << "\n";
    }
    if (!r["notes"].empty()) {
        os << "\nNotes\n";
        for (const auto& n : r["notes"]) os << "  " << n.get<std::string>() << "\n";
    }
    write_text(path(artifact::summary), os.str());
    log_ << "report: wrote " << path(artifact::summary).string() << "\n";
}

void Pipeline::run_all() {
    if (cfg_.source == DataSource::scm) generate();
    preprocess();
    subgroup();
    discover();
    vote();
    identify();
    estimate();
    report();
}

}  // namespace causal
