#include "causal/dataset.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <stdexcept>

#include <json.hpp>

#include "causal/error.hpp"
#include "csv.hpp"

namespace causal {

using namespace std::chrono;

std::optional<Date> parse_iso_date(std::string_view s) {
    s = detail::trim(s);
    if (s.size() != 10 || s[4] != '-' || s[7] != '-') return std::nullopt;
    auto y = detail::parse_int(s.substr(0, 4));
    auto m = detail::parse_int(s.substr(5, 2));
    auto d = detail::parse_int(s.substr(8, 2));
    if (!y || !m || !d) return std::nullopt;
    const year_month_day ymd{year{static_cast<int>(*y)}, month{static_cast<unsigned>(*m)},
                             day{static_cast<unsigned>(*d)}};
    if (!ymd.ok()) return std::nullopt;
    return sys_days{ymd};
}

int year_of(Date d) {
    return static_cast<int>(year_month_day{d}.year());
}

namespace {

Date jan1(int y) {
    return sys_days{year{y} / January / 1};
}

}  // namespace

std::string_view to_string(EventKind k) {
    switch (k) {
        case EventKind::rx_opioid: return "rx_opioid";
        case EventKind::rx_benzo: return "rx_benzo";
        case EventKind::rx_other: return "rx_other";
        case EventKind::inpatient: return "inpatient";
        case EventKind::outpatient: return "outpatient";
        case EventKind::er_visit: return "er_visit";
    }
    return "?";
}

std::optional<EventKind> event_kind_from_string(std::string_view s) {
    for (auto k : {EventKind::rx_opioid, EventKind::rx_benzo, EventKind::rx_other, EventKind::inpatient,
                   EventKind::outpatient, EventKind::er_visit})
        if (to_string(k) == s) return k;
    return std::nullopt;
}

bool is_prescription(EventKind k) {
    return k == EventKind::rx_opioid || k == EventKind::rx_benzo || k == EventKind::rx_other;
}

DayInterval rx_interval(const ClaimEvent& rx) {
    return {rx.date, rx.date + days{std::max(rx.days_supply, 1) - 1}};
}

ClaimsParseResult read_claims_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open claims file " + path.string());
    return parse_claims_csv(in);
}

ClaimsParseResult parse_claims_csv(std::istream& in) {
    static const std::vector<std::string> kHeader{"patient_id", "birth_year", "sex",         "date",
                                                  "kind",       "code",       "days_supply", "spend"};
    ClaimsParseResult result;
    std::string line;
    if (!std::getline(in, line)) throw ValidationError("claims CSV is empty");
    auto header = detail::split_csv_line(line);
    for (auto& h : header) h = std::string(detail::trim(h));
    if (header != kHeader) throw ValidationError("claims CSV header must be " + std::string(
        "patient_id,birth_year,sex,date,kind,code,days_supply,spend"));

    std::map<std::string, std::size_t> slot;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (detail::trim(line).empty()) continue;
        auto reject = [&](std::string why) { result.rejected.push_back({line_no, std::move(why)}); };
        const auto f = detail::split_csv_line(line);
        if (f.size() != kHeader.size()) {
            reject("expected 8 fields, found " + std::to_string(f.size()));
            continue;
        }
        const std::string id(detail::trim(f[0]));
        if (id.empty()) {
            reject("empty patient_id");
            continue;
        }
        auto birth = detail::parse_int(f[1]);
        if (!birth) {
            reject("bad birth_year '" + f[1] + "'");
            continue;
        }
        const auto sex_s = detail::trim(f[2]);
        if (sex_s != "M" && sex_s != "F") {
            reject("sex must be M or F");
            continue;
        }
        auto date = parse_iso_date(f[3]);
        if (!date) {
            reject("malformed date '" + f[3] + "'");
            continue;
        }
        auto kind = event_kind_from_string(detail::trim(f[4]));
        if (!kind) {
            reject("unknown event kind '" + f[4] + "'");
            continue;
        }
        auto supply = detail::parse_int(f[6]);
        auto spend = detail::parse_double(f[7]);
        if (!supply || *supply < 0) {
            reject("days_supply must be a non-negative integer");
            continue;
        }
        if (!is_prescription(*kind) && *supply != 0) {
            reject("days_supply must be 0 for non-prescription events");
            continue;
        }
        if (!spend || *spend < 0.0) {
            reject("spend must be a non-negative number");
            continue;
        }
        const Sex sex = sex_s == "F" ? Sex::F : Sex::M;
        auto [it, fresh] = slot.try_emplace(id, result.records.size());
        if (fresh) {
            result.records.push_back({id, static_cast<int>(*birth), sex, {}});
        } else {
            const auto& r = result.records[it->second];
            if (r.birth_year != *birth || r.sex != sex) {
                reject("demographics disagree with earlier lines for patient " + id);
                continue;
            }
        }
        result.records[it->second].events.push_back(
            {*date, *kind, std::string(detail::trim(f[5])), static_cast<int>(*supply), *spend});
    }
    for (auto& r : result.records)
        std::stable_sort(r.events.begin(), r.events.end(),
                         [](const ClaimEvent& a, const ClaimEvent& b) { return a.date < b.date; });
    return result;
}

int age_in_year(const ClaimsRecord& r, int year) {
    return year - r.birth_year;
}

namespace {

bool age_eligible(const ClaimsRecord& r, int y, const CohortConfig& cfg) {
    const int age = age_in_year(r, y);
    return y >= cfg.first_year && y <= cfg.last_year && age >= cfg.min_age && age <= cfg.max_age;
}

void check_config(const CohortConfig& cfg) {
    if (cfg.min_age > cfg.max_age) throw ValidationError("cohort min_age exceeds max_age");
    if (cfg.first_year > cfg.last_year) throw ValidationError("cohort study years are inverted");
}

}  // namespace

bool passes_exclusion(const ClaimsRecord& r, const CohortConfig& cfg) {
    return std::none_of(r.events.begin(), r.events.end(),
                        [&](const ClaimEvent& e) { return cfg.exclude_codes.count(e.code) > 0; });
}

bool passes_age(const ClaimsRecord& r, const CohortConfig& cfg) {
    for (int y = cfg.first_year; y <= cfg.last_year; ++y)
        if (age_eligible(r, y, cfg)) return true;
    return false;
}

bool passes_opioid(const ClaimsRecord& r, const CohortConfig& cfg) {
    if (!cfg.require_opioid_rx) return true;
    return std::any_of(r.events.begin(), r.events.end(), [&](const ClaimEvent& e) {
        return e.kind == EventKind::rx_opioid && age_eligible(r, year_of(e.date), cfg);
    });
}

std::vector<ClaimsRecord> build_cohort(std::span<const ClaimsRecord> records, const CohortConfig& cfg) {
    check_config(cfg);
    std::vector<ClaimsRecord> out;
    for (const auto& r : records) {
        if (!passes_exclusion(r, cfg) || !passes_age(r, cfg) || !passes_opioid(r, cfg)) continue;
        ClaimsRecord kept{r.patient_id, r.birth_year, r.sex, {}};
        for (const auto& e : r.events)
            if (age_eligible(r, year_of(e.date), cfg)) kept.events.push_back(e);
        out.push_back(std::move(kept));
    }
    return out;
}

int overlap_days(const DayInterval& a, const DayInterval& b) {
    if (a.end < a.start || b.end < b.start) throw std::invalid_argument("overlap_days: interval end precedes start");
    const Date lo = std::max(a.start, b.start);
    const Date hi = std::min(a.end, b.end);
    if (hi < lo) return 0;
    return static_cast<int>((hi - lo).count()) + 1;
}

int concurrency_flag(std::span<const ClaimEvent> events, const std::set<std::string>& cough_cold_codes) {
    for (const auto& o : events) {
        if (o.kind != EventKind::rx_opioid || cough_cold_codes.count(o.code)) continue;
        const auto oi = rx_interval(o);
        for (const auto& b : events)
            if (b.kind == EventKind::rx_benzo && overlap_days(oi, rx_interval(b)) >= 1) return 1;
    }
    return 0;
}

double daily_spending(std::span<const ClaimEvent> events, Date first_opioid) {
    // Every claim kind is pharmacy, inpatient or outpatient (ER visits are
    // outpatient facility claims).
    const Date start = jan1(year_of(first_opioid));
    double total = 0.0;
    for (const auto& e : events)
        if (e.date >= start && e.date < first_opioid) total += e.spend;
    const auto span_days = std::max<long>(1, static_cast<long>((first_opioid - start).count()) + 1);
    return total / static_cast<double>(span_days);
}

CodeTables load_code_tables(const std::filesystem::path& json_path) {
    std::ifstream in(json_path);
    if (!in) throw ValidationError("cannot open code tables " + json_path.string());
    try {
        nlohmann::json j;
        in >> j;
        CodeTables t;
        t.vocabulary = j.value("vocabulary", std::vector<std::string>{});
        t.exclude_codes = j.value("exclude_codes", std::set<std::string>{});
        t.cough_cold_codes = j.value("cough_cold_codes", std::set<std::string>{});
        t.overdose_codes = j.value("overdose_codes", std::set<std::string>{});
        t.mme_per_day = j.value("mme_per_day", std::map<std::string, double>{});
        return t;
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError("malformed code tables " + json_path.string() + ": " + e.what());
    }
}

FeatureBuildResult to_feature_matrix(std::span<const ClaimsRecord> cohort, const CodeTables& codes,
                                     const CohortConfig& cfg) {
    std::map<std::string, std::size_t> vocab_index;
    for (std::size_t k = 0; k < codes.vocabulary.size(); ++k)
        if (!vocab_index.emplace(codes.vocabulary[k], k).second)
            throw ValidationError("duplicate vocabulary code '" + codes.vocabulary[k] + "'");

    const std::size_t n_codes = codes.vocabulary.size();
    std::vector<std::vector<double>> code_cols(n_codes);
    std::vector<double> age, sex, visits, mme, spending, treatment, outcome;
    FeatureBuildResult result;

    for (const auto& r : cohort) {
        std::map<int, std::vector<ClaimEvent>> by_year;
        for (const auto& e : r.events) by_year[year_of(e.date)].push_back(e);
        for (const auto& [y, evs] : by_year) {
            if (!age_eligible(r, y, cfg)) continue;
            auto first = std::find_if(evs.begin(), evs.end(),
                                      [](const ClaimEvent& e) { return e.kind == EventKind::rx_opioid; });
            if (first == evs.end()) continue;

            std::vector<double> present(n_codes, 0.0);
            double n_visits = 0, supply = 0, mme_days = 0;
            int overdose = 0;
            for (const auto& e : evs) {
                if (auto it = vocab_index.find(e.code); it != vocab_index.end()) {
                    present[it->second] = 1.0;
                } else if (!is_prescription(e.kind) && !e.code.empty()) {
                    ++result.unknown_code_events;
                }
                if (!is_prescription(e.kind)) ++n_visits;
                if ((e.kind == EventKind::inpatient || e.kind == EventKind::er_visit) &&
                    codes.overdose_codes.count(e.code))
                    overdose = 1;
                if (e.kind == EventKind::rx_opioid && !codes.cough_cold_codes.count(e.code)) {
                    const auto it = codes.mme_per_day.find(e.code);
                    supply += e.days_supply;
                    mme_days += e.days_supply * (it == codes.mme_per_day.end() ? 0.0 : it->second);
                }
            }
            for (std::size_t k = 0; k < n_codes; ++k) code_cols[k].push_back(present[k]);
            age.push_back(age_in_year(r, y));
            sex.push_back(r.sex == Sex::F ? 1.0 : 0.0);
            visits.push_back(n_visits);
            mme.push_back(supply > 0 ? mme_days / supply : 0.0);
            spending.push_back(daily_spending(evs, first->date));
            treatment.push_back(concurrency_flag(evs, codes.cough_cold_codes));
            outcome.push_back(overdose);
            result.row_ids.push_back(r.patient_id + ":" + std::to_string(y));
        }
    }

    std::vector<Column> cols;
    for (std::size_t k = 0; k < n_codes; ++k)
        cols.push_back({codes.vocabulary[k], ColumnKind::binary, std::move(code_cols[k])});
    cols.push_back({"age", ColumnKind::continuous, std::move(age)});
    cols.push_back({"sex_female", ColumnKind::continuous, std::move(sex)});
    cols.push_back({"visit_count", ColumnKind::continuous, std::move(visits)});
    cols.push_back({"daily_mme", ColumnKind::continuous, std::move(mme)});
    cols.push_back({"daily_spending", ColumnKind::continuous, std::move(spending)});
    cols.push_back({std::string(kTreatmentColumn), ColumnKind::binary, std::move(treatment)});
    cols.push_back({std::string(kOutcomeColumn), ColumnKind::binary, std::move(outcome)});
    result.matrix = FeatureMatrix(std::move(cols), std::string(kTreatmentColumn), std::string(kOutcomeColumn));
    return result;
}

FeatureMatrix matrix_from_2x2(std::size_t treated_events, std::size_t treated_non_events,
                              std::size_t untreated_events, std::size_t untreated_non_events) {
    std::vector<double> t, y;
    auto add = [&](std::size_t count, double tv, double yv) {
        t.insert(t.end(), count, tv);
        y.insert(y.end(), count, yv);
    };
    add(treated_events, 1, 1);
    add(treated_non_events, 1, 0);
    add(untreated_events, 0, 1);
    add(untreated_non_events, 0, 0);
    return FeatureMatrix({{std::string(kTreatmentColumn), ColumnKind::binary, std::move(t)},
                          {std::string(kOutcomeColumn), ColumnKind::binary, std::move(y)}},
                         std::string(kTreatmentColumn), std::string(kOutcomeColumn));
}

}  // namespace causal
