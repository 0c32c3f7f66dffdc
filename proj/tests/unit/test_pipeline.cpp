#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "causal/pipeline.hpp"

using namespace causal;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    auto p = fs::temp_directory_path() / ("causal_pipeline_test_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

fs::path write(const fs::path& dir, const std::string& name, const std::string& text) {
    std::ofstream(dir / name) << text;
    return dir / name;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string small_config() {
    return "[pipeline]\nsource = scm\nseed = 3\n"
           "[generate]\nscm = " CAUSAL_FIXTURE_DIR "/scm_fork.json\nn = 2000\n"
           "[columns]\ntreatment = x\noutcome = y\n"
           "[estimate]\nestimand = ate_risk_difference\nmode = full_sample\nk = 100\noracle_mc = 20000\n";
}

}  // namespace

TEST_CASE("config parsing and validation") {
    const auto dir = scratch("config");
    const auto cfg = PipelineConfig::load(write(dir, "ok.ini", small_config()));
    CHECK(cfg.seed == 3);
    CHECK(cfg.n == 2000);
    CHECK(cfg.bootstrap.k == 100);

    CHECK_THROWS_WITH_AS(PipelineConfig::load(write(dir, "typo.ini", small_config() + "sead = 4\n")),
                         doctest::Contains("unknown key 'sead'"), ValidationError);
    // validation is deferred so command-line overrides can fill in the seed
    auto no_seed = PipelineConfig::load(write(dir, "noseed.ini", "[pipeline]\nsource = scm\n"));
    CHECK_THROWS_WITH_AS(no_seed.validate(), doctest::Contains("seed is required"), ValidationError);
    CHECK_THROWS_AS(PipelineConfig::load(write(dir, "frac.ini", small_config() + "train_fraction = 1.5\n")).validate(),
                    ValidationError);
}

TEST_CASE("a stage without its inputs names the missing stage") {
    const auto dir = scratch("missing");
    auto cfg = PipelineConfig::load(write(dir, "c.ini", small_config()));
    cfg.out_dir = dir / "out";
    std::ostringstream log;
    Pipeline p(cfg, log);
    CHECK_THROWS_WITH_AS(p.vote(), doctest::Contains("run 'discover' first"), MissingArtifact);
    CHECK_THROWS_WITH_AS(p.estimate(), doctest::Contains("first"), MissingArtifact);
}

TEST_CASE("two runs with one seed give identical reports") {
    const auto dir = scratch("determinism");
    auto cfg = PipelineConfig::load(write(dir, "c.ini", small_config()));
    for (const char* sub : {"a", "b"}) {
        cfg.out_dir = dir / sub;
        std::ostringstream log;
        Pipeline(cfg, log).run_all();
    }
    for (const char* f : {"report.json", "summary.txt", "consensus.json", "identify.json"})
        CHECK(slurp(dir / "a" / f) == slurp(dir / "b" / f));
    CHECK(slurp(dir / "a" / "report.json").find("\"oracle\"") != std::string::npos);
}
