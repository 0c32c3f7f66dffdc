#include <sstream>

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "causal/discovery.hpp"
#include "causal/ensemble.hpp"
#include "causal/error.hpp"
#include "causal/estimate.hpp"
#include "causal/identify.hpp"
#include "causal/pipeline.hpp"
#include "causal/scm.hpp"
#include "causal/subgroup.hpp"

namespace py = pybind11;
using namespace causal;

namespace {

using EdgeList = std::vector<std::pair<std::string, std::string>>;
using Table = std::map<std::string, py::array_t<double, py::array::c_style | py::array::forcecast>>;

// Column order follows the dict; a column holding only 0/1 is binary.
FeatureMatrix to_matrix(const Table& data, const std::vector<std::string>& order, const std::string& treatment = {},
                        const std::string& outcome = {}) {
    std::vector<Column> cols;
    for (const auto& name : order) {
        auto it = data.find(name);
        if (it == data.end()) throw ValidationError("missing column '" + name + "'");
        const auto& arr = it->second;
        if (arr.ndim() != 1) throw ValidationError("column '" + name + "' must be one-dimensional");
        Column c{name, ColumnKind::binary, std::vector<double>(arr.data(), arr.data() + arr.size())};
        for (double v : c.values)
            if (v != 0.0 && v != 1.0) {
                c.kind = ColumnKind::continuous;
                break;
            }
        cols.push_back(std::move(c));
    }
    return FeatureMatrix(std::move(cols), treatment, outcome);
}

std::vector<std::string> keys_of(const Table& data) {
    std::vector<std::string> k;
    for (const auto& kv : data) k.push_back(kv.first);
    return k;
}

py::dict to_table(const FeatureMatrix& fm) {
    py::dict d;
    for (const auto& c : fm.columns()) {
        py::array_t<double> a(static_cast<py::ssize_t>(c.values.size()));
        std::copy(c.values.begin(), c.values.end(), a.mutable_data());
        d[py::str(c.name)] = a;
    }
    return d;
}

py::object to_py(const nlohmann::json& j) {
    return py::module_::import("json").attr("loads")(j.dump());
}

nlohmann::json from_py_json(const py::object& o) {
    return nlohmann::json::parse(py::module_::import("json").attr("dumps")(o).cast<std::string>());
}

Scm scm_from(const py::object& spec) {
    if (py::isinstance<py::str>(spec)) return Scm::from_json(nlohmann::json::parse(spec.cast<std::string>()));
    return Scm::from_json(from_py_json(spec));
}

py::dict sla_dict(const SlaOutput& o) {
    EdgeList directed, undirected;
    for (auto [a, b] : o.directed) directed.emplace_back(o.variables[a], o.variables[b]);
    for (auto [a, b] : o.undirected) undirected.emplace_back(o.variables[a], o.variables[b]);
    py::dict d;
    d["kind"] = std::string(to_string(o.kind));
    d["directed"] = directed;
    d["undirected"] = undirected;
    d["diagnostics"] = o.diagnostics;
    d["score_trace"] = o.score_trace;
    d["warnings"] = o.warnings;
    d["failed"] = o.failed;
    d["error"] = o.error;
    return d;
}

SlaConfig sla_config(std::uint64_t seed, double alpha) {
    SlaConfig cfg;
    cfg.seed = seed;
    cfg.alpha = alpha;
    return cfg;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Ensemble causal discovery, backdoor identification and effect estimation.";

    py::register_exception<ValidationError>(m, "ValidationError", PyExc_ValueError);
    py::register_exception<RuntimeError>(m, "CausalRuntimeError", PyExc_RuntimeError);

    m.def(
        "d_separated",
        [](const std::vector<std::string>& nodes, const EdgeList& edges, const std::string& x, const std::string& y,
           const std::vector<std::string>& z) {
            const auto dag = Dag::from_names(nodes, edges);
            std::vector<int> zi;
            for (const auto& n : z) zi.push_back(dag.index_of(n));
            return d_separated(dag, dag.index_of(x), dag.index_of(y), zi);
        },
        py::arg("nodes"), py::arg("edges"), py::arg("x"), py::arg("y"), py::arg("z") = std::vector<std::string>{});

    m.def(
        "backdoor_sets",
        [](const std::vector<std::string>& nodes, const EdgeList& edges, const std::string& treatment,
           const std::string& outcome) {
            const auto dag = Dag::from_names(nodes, edges);
            std::vector<std::vector<std::string>> out;
            for (const auto& s : backdoor_sets(dag, CausalQuery{treatment, outcome}).sets) out.push_back(s.variables);
            return out;
        },
        py::arg("nodes"), py::arg("edges"), py::arg("treatment"), py::arg("outcome"),
        "Minimal backdoor adjustment sets, smallest first.");

    m.def(
        "sample_scm", [](const py::object& spec, std::size_t n, std::uint64_t seed) { return to_table(sample(scm_from(spec), n, seed)); },
        py::arg("spec"), py::arg("n"), py::arg("seed"), "Draw n rows from an SCM given as a dict or JSON string.");

    m.def(
        "true_effect",
        [](const py::object& spec, const std::string& treatment, const std::string& outcome, std::size_t n_mc,
           std::uint64_t seed) {
            const auto te = true_effect(scm_from(spec), treatment, outcome, 1.0, 0.0, n_mc, seed);
            return py::make_tuple(te.value, te.std_error);
        },
        py::arg("spec"), py::arg("treatment"), py::arg("outcome"), py::arg("n_mc") = 200000, py::arg("seed") = 0);

    m.def(
        "discover",
        [](const std::string& kind, const Table& data, std::uint64_t seed, double alpha) {
            const auto k = sla_kind_from_string(kind);
            if (!k) throw ValidationError("unknown algorithm '" + kind + "'");
            return sla_dict(run_sla(*k, to_matrix(data, keys_of(data)), sla_config(seed, alpha)));
        },
        py::arg("kind"), py::arg("data"), py::arg("seed") = 0, py::arg("alpha") = 0.01);

    m.def("vote_threshold", [](std::size_t m_, const std::string& rule) { return vote_threshold(m_, vote_rule_from_string(rule)); },
          py::arg("m"), py::arg("rule") = "ge_majority");

    m.def(
        "consensus",
        [](const Table& data, std::uint64_t seed, const std::string& rule, std::size_t threads) {
            const auto outs = run_all(to_matrix(data, keys_of(data)), sla_config(seed, 0.01), threads);
            const auto v = tally(outs);
            const auto r = vote_rule_from_string(rule);
            const auto th = threshold_edges(v, r);
            return to_py(consensus_json(repair_cycles(th.edges, v), v, r, th.diagnostics));
        },
        py::arg("data"), py::arg("seed") = 0, py::arg("rule") = "ge_majority", py::arg("threads") = 1,
        "Run all seven algorithms, vote and repair cycles.");

    m.def(
        "estimate_effect",
        [](const Table& data, const std::string& treatment, const std::string& outcome,
           const std::vector<std::string>& adjustment, const std::string& estimand, const std::string& mode,
           std::size_t k, std::uint64_t seed, std::size_t threads) {
            auto names = adjustment;
            names.push_back(treatment);
            names.push_back(outcome);
            const auto fm = to_matrix(data, names, treatment, outcome);
            CausalEstimateConfig cfg;
            cfg.estimand = estimand_from_string(estimand);
            cfg.mode = estimation_mode_from_string(mode);
            cfg.bootstrap.k = k;
            cfg.bootstrap.seed = seed;
            cfg.threads = threads;
            auto z = adjustment;
            std::sort(z.begin(), z.end());
            const auto est = estimate_effect(fm, CausalQuery{treatment, outcome}, AdjustmentSet{z, true}, cfg);
            py::dict d = to_py(est.effect.to_json());
            d["point_estimates"] = est.point_estimates;
            return d;
        },
        py::arg("data"), py::arg("treatment"), py::arg("outcome"), py::arg("adjustment"),
        py::arg("estimand") = "ate_risk_difference", py::arg("mode") = "full_sample", py::arg("k") = 1000,
        py::arg("seed") = 0, py::arg("threads") = 1);

    m.def(
        "fit_hemm",
        [](const Table& data, const std::string& treatment, const std::string& outcome,
           const std::vector<std::string>& covariates, std::size_t K, std::uint64_t seed) {
            auto names = covariates;
            names.push_back(treatment);
            names.push_back(outcome);
            const auto fm = to_matrix(data, names, treatment, outcome);
            HemmConfig cfg;
            cfg.K = K;
            cfg.seed = seed;
            const auto model = fit_hemm(fm, treatment, outcome, covariates, cfg);
            py::dict d = to_py(model.to_json());
            const Eigen::MatrixXd mem = model.membership(fm);
            py::array_t<double> arr({mem.rows(), mem.cols()});
            auto view = arr.mutable_unchecked<2>();
            for (Eigen::Index i = 0; i < mem.rows(); ++i)
                for (Eigen::Index j = 0; j < mem.cols(); ++j) view(i, j) = mem(i, j);
            d["membership"] = arr;
            return d;
        },
        py::arg("data"), py::arg("treatment"), py::arg("outcome"), py::arg("covariates"), py::arg("K") = 2,
        py::arg("seed") = 0);

    m.def(
        "run_pipeline",
        [](const std::string& config, const std::string& stage, const std::optional<std::string>& out,
           std::optional<std::uint64_t> seed) {
            auto cfg = PipelineConfig::load(config);
            if (out) cfg.out_dir = *out;
            if (seed) cfg.seed = *seed;
            std::ostringstream log;
            Pipeline p(cfg, log);
            static const std::map<std::string, void (Pipeline::*)()> stages{
                {"generate", &Pipeline::generate}, {"preprocess", &Pipeline::preprocess}, {"subgroup", &Pipeline::subgroup},
                {"discover", &Pipeline::discover}, {"vote", &Pipeline::vote},             {"identify", &Pipeline::identify},
                {"estimate", &Pipeline::estimate}, {"report", &Pipeline::report},         {"run-all", &Pipeline::run_all}};
            auto it = stages.find(stage);
            if (it == stages.end()) throw ValidationError("unknown stage '" + stage + "'");
            {
                py::gil_scoped_release release;
                (p.*it->second)();
            }
            return log.str();
        },
        py::arg("config"), py::arg("stage") = "run-all", py::arg("out") = py::none(), py::arg("seed") = py::none(),
        "Run one pipeline stage (or run-all) and return its log.");
}
