"""Writes the small synthetic claims fixture (claims.csv, codes.json)."""

import csv
import datetime as dt
import json
import math
import random
from pathlib import Path

HERE = Path(__file__).resolve().parent
VOCAB = ["dx_back_pain", "dx_anxiety", "dx_insomnia", "dx_arthritis", "rx_gabapentin", "px_physio"]
OPIOIDS = {"oxycodone_5": 7.5, "hydrocodone_10": 10.0, "morphine_15": 15.0, "hydrocodone_cough": 5.0}
CODES = {
    "vocabulary": VOCAB,
    "exclude_codes": ["dx_cancer"],
    "cough_cold_codes": ["hydrocodone_cough"],
    "overdose_codes": ["dx_opioid_poisoning"],
    "mme_per_day": OPIOIDS,
}


def sigmoid(t):
    return 1.0 / (1.0 + math.exp(-t))


def day(rng, year, lo=1, hi=330):
    return dt.date(year, 1, 1) + dt.timedelta(days=rng.randint(lo, hi) - 1)


def patient(rng, pid, rows):
    birth = rng.randint(1945, 1990)
    sex = rng.choice("MF")
    if rng.random() < 0.03:
        rows.append([pid, birth, sex, day(rng, 2008).isoformat(), "outpatient", "dx_cancer", 0, 120.0])
    for year in (2010, 2011):
        anxious = rng.random() < 0.3
        pain = rng.random() < 0.5
        flags = {
            "dx_back_pain": pain,
            "dx_anxiety": anxious,
            "dx_insomnia": rng.random() < (0.35 if anxious else 0.1),
            "dx_arthritis": rng.random() < (0.3 if year - birth > 50 else 0.1),
            "rx_gabapentin": rng.random() < (0.3 if pain else 0.05),
            "px_physio": rng.random() < (0.4 if pain else 0.1),
        }
        for code, on in flags.items():
            if on:
                kind = "rx_other" if code.startswith("rx_") else "outpatient"
                supply = 30 if kind == "rx_other" else 0
                rows.append([pid, birth, sex, day(rng, year).isoformat(), kind, code, supply, round(rng.uniform(40, 400), 2)])
        for _ in range(rng.randint(0, 4)):
            rows.append([pid, birth, sex, day(rng, year).isoformat(), "outpatient", "office_visit", 0, round(rng.uniform(60, 250), 2)])
        if rng.random() < 0.15:
            continue  # no opioid fill this year
        start = day(rng, year, 1, 300)
        code = rng.choice(list(OPIOIDS))
        supply = rng.choice([7, 14, 30])
        rows.append([pid, birth, sex, start.isoformat(), "rx_opioid", code, supply, round(rng.uniform(10, 90), 2)])
        benzo = rng.random() < sigmoid(-1.6 + 1.4 * anxious + 0.8 * flags["dx_insomnia"])
        if benzo:
            offset = rng.randint(-5, supply - 1)
            b = start + dt.timedelta(days=offset)
            if b.year == year:
                rows.append([pid, birth, sex, b.isoformat(), "rx_benzo", "alprazolam", 30, round(rng.uniform(10, 60), 2)])
        p_od = sigmoid(-2.6 + 1.6 * benzo + 1.0 * pain + 0.4 * anxious)
        if rng.random() < p_od:
            od = start + dt.timedelta(days=rng.randint(0, 40))
            if od.year == year:
                rows.append([pid, birth, sex, od.isoformat(), "er_visit", "dx_opioid_poisoning", 0, round(rng.uniform(500, 3000), 2)])


def main():
    rng = random.Random(7)
    rows = []
    for i in range(2000):
        patient(rng, f"P{i:04d}", rows)
    rows.sort(key=lambda r: (r[0], r[3], r[4], r[5]))
    with open(HERE / "claims.csv", "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(["patient_id", "birth_year", "sex", "date", "kind", "code", "days_supply", "spend"])
        w.writerows(rows)
    (HERE / "codes.json").write_text(json.dumps(CODES, indent=2) + "\n")


if __name__ == "__main__":
    main()
