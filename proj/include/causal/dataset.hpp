#pragma once

#include <chrono>
#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "causal/feature_matrix.hpp"

namespace causal {

using Date = std::chrono::sys_days;

std::optional<Date> parse_iso_date(std::string_view s);
int year_of(Date d);

enum class EventKind { rx_opioid, rx_benzo, rx_other, inpatient, outpatient, er_visit };

std::string_view to_string(EventKind k);
std::optional<EventKind> event_kind_from_string(std::string_view s);
bool is_prescription(EventKind k);

struct ClaimEvent {
    Date date;
    EventKind kind = EventKind::rx_other;
    std::string code;
    int days_supply = 0;  // 0 for non-prescription events
    double spend = 0.0;

    bool operator==(const ClaimEvent&) const = default;
};

enum class Sex { M, F };

struct ClaimsRecord {
    std::string patient_id;
    int birth_year = 0;
    Sex sex = Sex::M;
    std::vector<ClaimEvent> events;  // sorted by date

    bool operator==(const ClaimsRecord&) const = default;
};

struct CohortConfig {
    int min_age = 18;
    int max_age = 64;
    std::set<std::string> exclude_codes;  // cancer history
    bool require_opioid_rx = true;
    int first_year = 2001;
    int last_year = 2013;
};

// Closed day interval [start, end].
struct DayInterval {
    Date start;
    Date end;
};

// Prescription fill covering days_supply days (minimum one day).
DayInterval rx_interval(const ClaimEvent& rx);

struct RejectedLine {
    std::size_t line = 0;
    std::string reason;
};

struct ClaimsParseResult {
    std::vector<ClaimsRecord> records;
    std::vector<RejectedLine> rejected;
};

// Columns: patient_id,birth_year,sex,date,kind,code,days_supply,spend
// (header required). A line with a malformed field is rejected with a
// diagnostic; it does not abort the parse.
ClaimsParseResult read_claims_csv(const std::filesystem::path& path);
ClaimsParseResult parse_claims_csv(std::istream& in);

int age_in_year(const ClaimsRecord& r, int year);

// The three conjunctive cohort predicates, each evaluated on the original
// record so that composition order cannot matter.
bool passes_exclusion(const ClaimsRecord& r, const CohortConfig& cfg);
bool passes_age(const ClaimsRecord& r, const CohortConfig& cfg);
bool passes_opioid(const ClaimsRecord& r, const CohortConfig& cfg);

// Keeps patients passing all three predicates and restricts their events to
// the age-eligible study years. Idempotent.
std::vector<ClaimsRecord> build_cohort(std::span<const ClaimsRecord> records, const CohortConfig& cfg);

// Whole days in the intersection of two closed intervals; symmetric.
// Throws std::invalid_argument on an inverted interval.
int overlap_days(const DayInterval& a, const DayInterval& b);

// Events for one patient in one calendar year. 1 iff some opioid prescription
// day (cough/cold formulations excluded) overlaps a benzodiazepine interval.
int concurrency_flag(std::span<const ClaimEvent> events, const std::set<std::string>& cough_cold_codes);

// Spend dated strictly before first_opioid in that year, per day of
// [Jan 1, first_opioid] (inclusive, at least one day).
double daily_spending(std::span<const ClaimEvent> events, Date first_opioid);

struct CodeTables {
    std::vector<std::string> vocabulary;        // binary indicator columns, in order
    std::set<std::string> exclude_codes;        // cancer history
    std::set<std::string> cough_cold_codes;     // hydrocodone cough/cold formulations
    std::set<std::string> overdose_codes;       // outcome-defining diagnostic codes
    std::map<std::string, double> mme_per_day;  // opioid code -> morphine mg equivalent per day
};

CodeTables load_code_tables(const std::filesystem::path& json_path);

struct FeatureBuildResult {
    FeatureMatrix matrix;
    std::size_t unknown_code_events = 0;  // non-rx events whose code is not in the vocabulary
    std::vector<std::string> row_ids;      // "patient_id:year"
};

inline constexpr std::string_view kTreatmentColumn = "concurrent_benzo";
inline constexpr std::string_view kOutcomeColumn = "opioid_overdose";

// One row per (patient, year) with at least one opioid prescription. Columns:
// vocabulary indicators (binary), then age, sex, visits, daily_mme,
// daily_spending (continuous), then treatment and outcome.
FeatureBuildResult to_feature_matrix(std::span<const ClaimsRecord> cohort, const CodeTables& codes,
                                     const CohortConfig& cfg);

// Treatment/outcome table with the given 2x2 counts.
FeatureMatrix matrix_from_2x2(std::size_t treated_events, std::size_t treated_non_events,
                              std::size_t untreated_events, std::size_t untreated_non_events);

}  // namespace causal
