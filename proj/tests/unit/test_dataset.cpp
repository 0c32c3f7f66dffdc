#include <doctest.h>

#include <sstream>

#include "causal/dataset.hpp"
#include "causal/error.hpp"

using namespace causal;

namespace {

Date d(const char* s) { return *parse_iso_date(s); }

const char* kClaims =
    "patient_id,birth_year,sex,date,kind,code,days_supply,spend\n"
    "p1,1970,F,2010-03-01,rx_opioid,oxy,10,20\n"
    "p1,1970,F,2010-03-05,rx_benzo,alp,30,10\n"
    "p1,1970,F,2010-02-01,outpatient,dx_a,0,100\n"
    "p2,1940,M,2010-05-01,rx_opioid,oxy,5,20\n"
    "p3,1980,M,2010-05-01,outpatient,dx_cancer,0,50\n"
    "p3,1980,M,2010-06-01,rx_opioid,oxy,5,20\n"
    "p4,1985,M,2010-06-01,outpatient,dx_a,0,50\n"
    "p5,1975,X,2010-06-01,rx_opioid,oxy,5,20\n";

}  // namespace

TEST_CASE("claims parsing rejects malformed lines without aborting") {
    std::istringstream in(kClaims);
    const auto r = parse_claims_csv(in);
    CHECK(r.records.size() == 4);
    REQUIRE(r.rejected.size() == 1);
    CHECK(r.rejected[0].line == 9);
}

TEST_CASE("cohort predicates compose and are idempotent") {
    std::istringstream in(kClaims);
    const auto recs = parse_claims_csv(in).records;
    CohortConfig cfg;
    cfg.exclude_codes = {"dx_cancer"};
    cfg.first_year = 2010;
    cfg.last_year = 2010;
    const auto cohort = build_cohort(recs, cfg);
    REQUIRE(cohort.size() == 1);  // p2 too old, p3 excluded, p4 has no opioid
    CHECK(cohort[0].patient_id == "p1");
    CHECK(build_cohort(cohort, cfg) == cohort);
}

TEST_CASE("interval overlap") {
    const DayInterval a{d("2010-01-01"), d("2010-01-10")}, b{d("2010-01-10"), d("2010-01-20")};
    CHECK(overlap_days(a, b) == 1);
    CHECK(overlap_days(b, a) == 1);
    CHECK(overlap_days(a, {d("2010-02-01"), d("2010-02-02")}) == 0);
    CHECK_THROWS_AS(overlap_days({d("2010-01-05"), d("2010-01-01")}, a), std::invalid_argument);
}

TEST_CASE("concurrency excludes cough and cold formulations") {
    std::vector<ClaimEvent> ev{{d("2010-01-01"), EventKind::rx_opioid, "hc_cough", 10, 0},
                               {d("2010-01-03"), EventKind::rx_benzo, "alp", 10, 0}};
    CHECK(concurrency_flag(ev, {}) == 1);
    CHECK(concurrency_flag(ev, {"hc_cough"}) == 0);
    ev[1].date = d("2010-01-20");
    CHECK(concurrency_flag(ev, {}) == 0);
}

TEST_CASE("feature matrix from a tiny cohort") {
    std::istringstream in(kClaims);
    CohortConfig cfg;
    cfg.first_year = cfg.last_year = 2010;
    const auto cohort = build_cohort(parse_claims_csv(in).records, cfg);
    CodeTables codes;
    codes.vocabulary = {"dx_a"};
    codes.mme_per_day = {{"oxy", 7.5}};
    const auto fm = to_feature_matrix(cohort, codes, cfg);
    CHECK(fm.matrix.rows() == 2);  // p1 and p3 (no exclusion codes configured)
    CHECK(fm.matrix.column(kTreatmentColumn).values == std::vector<double>{1, 0});
    CHECK(fm.matrix.column("daily_mme").values[0] == 7.5);
    CHECK(fm.matrix.column("dx_a").values[0] == 1.0);
    // p3's cancer visit is outside the vocabulary
    CHECK(fm.unknown_code_events == 1);
}

TEST_CASE("2x2 fixture counts reproduce") {
    const auto fm = matrix_from_2x2(63, 5425, 118, 53389);
    CHECK(fm.rows() == 58995);
    double treated = 0, events = 0;
    for (std::size_t i = 0; i < fm.rows(); ++i) {
        treated += fm.column(kTreatmentColumn).values[i];
        events += fm.column(kOutcomeColumn).values[i];
    }
    CHECK(treated == 5488);
    CHECK(events == 181);
}
