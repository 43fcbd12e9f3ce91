"""Lighting-stratified marginals of a pedestrian crash database (fatal,
severe and moderate injuries, 8,249 crashes), and a synthesizer that
rebuilds a record-level database matching them exactly.

Counts are per stratum in the order daylight, dark-with-streetlight,
dark-no-streetlight.  Three source cells could not be taken at face value
and are closed from the stratum totals instead:

* ``ped_alcohol_drug=yes`` in the dark-no-streetlight column is missing:
  1423 - 568 - 485 = 370.
* ``highway_type=parish_road`` in the same column is listed as 194 but the
  column then sums to 1419; its listed 13.9% and the total both give 198.
* the ``alcohol_drug`` and ``other_unknown`` rows listed beside
  ``violation_type`` only close their column totals as ``driver_condition``
  categories, so they live there.

Only the one-variable marginals are known.  Within a stratum, each column is
filled independently and shuffled with a fixed seed, so single-antecedent
rule metrics are exact while multi-item joints are synthetic.
"""

from __future__ import annotations

import csv
import json
import random
from pathlib import Path

LIGHTING = "lighting_condition"
STRATA = ("daylight", "dark_with_streetlight", "dark_no_streetlight")
STRATUM_TOTALS = (3784, 3042, 1423)

MARGINALS: dict[str, dict[str, tuple[int, int, int]]] = {
    "severity": {
        "fatal": (211, 412, 465),
        "severe": (507, 658, 257),
        "moderate": (3066, 1972, 701),
    },
    "ped_action": {
        "crossing_intersection": (991, 647, 110),
        "crossing_midblock": (1049, 918, 278),
        "walking_with_traffic": (221, 344, 346),
        "walking_against_traffic": (101, 121, 119),
        "other_inappropriate": (1234, 845, 531),
        "unknown": (188, 167, 39),
    },
    "ped_alcohol_drug": {
        "yes": (156, 524, 370),
        "no": (2665, 1396, 568),
        "others": (963, 1122, 485),
    },
    "ped_age": {
        "<15": (882, 228, 58),
        "15-24": (649, 632, 297),
        "25-40": (765, 892, 515),
        "41-64": (1058, 1070, 460),
        ">64": (365, 144, 68),
        "unknown": (65, 76, 25),
    },
    "ped_gender": {
        "male": (2307, 1994, 1009),
        "female": (1452, 1016, 407),
        "unknown": (25, 32, 7),
    },
    "primary_factor": {
        "ped_action": (994, 928, 618),
        "ped_violation": (508, 378, 142),
        "ped_condition": (71, 118, 82),
        "prior_movement": (598, 410, 101),
        "other_factors": (1613, 1208, 480),
    },
    "ped_dark_cloth": {
        "yes": (955, 1214, 700),
        "no": (2829, 1828, 723),
    },
    "driver_age": {
        "15-24": (567, 456, 242),
        "25-34": (714, 585, 305),
        "35-44": (580, 404, 218),
        "45-54": (500, 343, 168),
        "55-64": (421, 269, 127),
        ">64": (433, 203, 98),
        "unknown": (569, 782, 265),
    },
    "driver_gender": {
        "male": (1881, 1512, 779),
        "female": (1419, 818, 391),
        "unknown": (484, 712, 253),
    },
    "driver_condition": {
        "normal": (2127, 1568, 873),
        "inattentive_distracted": (763, 310, 130),
        "illness_fatigued_asleep": (28, 8, 8),
        "alcohol_drug": (96, 226, 92),
        "other_unknown": (770, 930, 320),
    },
    "violation_type": {
        "no_violations": (1754, 1441, 872),
        "careless_operation": (537, 378, 103),
        "failure_to_yield": (330, 98, 22),
        "others": (1163, 1125, 426),
    },
    "veh_type": {
        "passenger_car": (1679, 1442, 584),
        "van_suv": (933, 649, 278),
        "light_truck": (811, 593, 420),
        "others": (361, 358, 141),
    },
    "location_type": {
        "business_industrial": (1039, 944, 256),
        "business_mixed_residential": (1193, 1211, 361),
        "residential": (1331, 768, 520),
        "open_country": (115, 44, 254),
        "other_locality": (106, 75, 32),
    },
    "road_type": {
        "one_way": (519, 371, 58),
        "two_no_separation": (2327, 1789, 996),
        "two_separation": (864, 844, 366),
        "other_unknown": (74, 38, 3),
    },
    "highway_type": {
        "interstate": (109, 116, 148),
        "us_highway": (321, 408, 251),
        "state_highway": (604, 648, 556),
        "city_street": (2202, 1554, 264),
        "parish_road": (496, 275, 198),
        "others": (52, 41, 6),
    },
    "speed_limit": {
        "<30": (1439, 754, 162),
        "30-35": (1201, 1035, 212),
        "40-45": (558, 771, 387),
        "50-55": (172, 178, 424),
        ">55": (109, 103, 173),
        "unknown": (305, 201, 65),
    },
    "intersection": {
        "yes": (1555, 1261, 257),
        "no": (2229, 1781, 1166),
    },
    "day_of_week": {
        "weekday": (2901, 1917, 960),
        "weekend": (883, 1125, 463),
    },
    "weather_condition": {
        "clear": (3040, 2369, 1109),
        "cloudy": (532, 365, 185),
        "rain": (178, 266, 102),
        "fog_sleet_snow": (16, 21, 22),
        "other_unknown": (18, 21, 5),
    },
}

# screened by forest importance, most important first
SELECTED_VARIABLES = (
    "speed_limit",
    "ped_age",
    "location_type",
    "ped_alcohol_drug",
    "ped_action",
    "driver_condition",
    "highway_type",
    "violation_type",
    "severity",
    "day_of_week",
    "driver_age",
    "road_type",
    "ped_dark_cloth",
)

MINING_VARIABLES = SELECTED_VARIABLES + (LIGHTING,)
ALL_VARIABLES = tuple(MARGINALS) + (LIGHTING,)


def check_closure() -> None:
    """Raise if any variable's column does not sum to its stratum total."""
    for var, cats in MARGINALS.items():
        for s, total in enumerate(STRATUM_TOTALS):
            got = sum(c[s] for c in cats.values())
            if got != total:
                raise AssertionError(f"{var} sums to {got} in {STRATA[s]}, expected {total}")


def synthesize_records(
    variables: tuple[str, ...] = MINING_VARIABLES, seed: int = 2022
) -> list[tuple[str, dict[str, str]]]:
    """Record-level data whose per-stratum marginals equal ``MARGINALS``.

    Record ids are ``"C00001"`` onwards, strata in ``STRATA`` order.
    """
    check_closure()
    records: list[dict[str, str]] = []
    for s, (stratum, total) in enumerate(zip(STRATA, STRATUM_TOTALS)):
        columns = {}
        for var in variables:
            if var == LIGHTING:
                continue
            col = [cat for cat, counts in MARGINALS[var].items() for _ in range(counts[s])]
            random.Random(f"{seed}:{var}:{stratum}").shuffle(col)
            columns[var] = col
        for r in range(total):
            rec = {var: columns[var][r] for var in columns}
            if LIGHTING in variables:
                rec[LIGHTING] = stratum
            records.append(rec)
    return [(f"C{i + 1:05d}", rec) for i, rec in enumerate(records)]


def study_database(variables: tuple[str, ...] = MINING_VARIABLES, seed: int = 2022):
    from .model import TransactionDatabase

    return TransactionDatabase.from_records(synthesize_records(variables, seed), variables)


# --- raw source tables, for exercising the ingest pipeline end to end -------

_SPEED_VALUES = {"<30": (15, 20, 25), "30-35": (30, 35), "40-45": (40, 45),
                 "50-55": (50, 55), ">55": (60, 65, 70)}
_PED_AGE_RANGES = {"<15": (3, 14), "15-24": (15, 24), "25-40": (25, 40),
                   "41-64": (41, 64), ">64": (65, 90)}
_DRIVER_AGE_RANGES = {"15-24": (15, 24), "25-34": (25, 34), "35-44": (35, 44),
                      "45-54": (45, 54), "55-64": (55, 64), ">64": (65, 92)}
_LIGHT_CODES = {"daylight": ("A",), "dark_no_streetlight": ("B",),
                "dark_with_streetlight": ("C", "D")}
_SEVERITY_CODES = {"fatal": "A", "severe": "B", "moderate": "C"}
_WEEKDAYS = ("Mon", "Tue", "Wed", "Thu", "Fri")
_WEEKEND = ("Sat", "Sun")

TABLE_COLUMNS = {
    "pedestrian": ("crash_num", "ped_action", "ped_alcohol_drug", "ped_age", "ped_dark_cloth",
                   "injury_code"),
    "crash": ("crash_num", "light_code", "day_name", "location_type", "highway_type", "road_type"),
    "vehicle": ("crash_num", "driver_age", "driver_condition", "violation_type"),
    "dotd": ("crash_num", "posted_speed"),
}


def study_config() -> dict:
    """Ingest configuration that turns the raw tables back into the study database.

    Table paths are relative to the config file's directory.
    """
    cols = {
        "ped_action": ("pedestrian", "ped_action"),
        "ped_alcohol_drug": ("pedestrian", "ped_alcohol_drug"),
        "ped_age": ("pedestrian", "ped_age"),
        "ped_dark_cloth": ("pedestrian", "ped_dark_cloth"),
        "severity": ("pedestrian", "injury_code"),
        LIGHTING: ("crash", "light_code"),
        "day_of_week": ("crash", "day_name"),
        "location_type": ("crash", "location_type"),
        "highway_type": ("crash", "highway_type"),
        "road_type": ("crash", "road_type"),
        "driver_age": ("vehicle", "driver_age"),
        "driver_condition": ("vehicle", "driver_condition"),
        "violation_type": ("vehicle", "violation_type"),
        "speed_limit": ("dotd", "posted_speed"),
    }
    recodes = {
        "severity": {"A": "fatal", "B": "severe", "C": "moderate", "D": "complaint", "E": "no_injury"},
        LIGHTING: {"A": "daylight", "B": "dark_no_streetlight", "C": "dark_with_streetlight",
                   "D": "dark_with_streetlight", "E": "dusk", "F": "dawn", "Y": "unknown", "Z": "other"},
        "day_of_week": {**{d_: "weekday" for d_ in _WEEKDAYS}, **{d_: "weekend" for d_ in _WEEKEND}},
    }
    for var in ("ped_action", "ped_alcohol_drug", "ped_dark_cloth", "location_type",
                "highway_type", "road_type", "driver_condition", "violation_type"):
        recodes[var] = {c: c for c in MARGINALS[var] if c != "unknown"}
    bands = {
        "speed_limit": [[0, 30, "<30"], [30, 40, "30-35"], [40, 50, "40-45"],
                        [50, 56, "50-55"], [56, None, ">55"]],
        "ped_age": [[0, 15, "<15"], [15, 25, "15-24"], [25, 41, "25-40"],
                    [41, 65, "41-64"], [65, None, ">64"]],
        "driver_age": [[15, 25, "15-24"], [25, 35, "25-34"], [35, 45, "35-44"],
                       [45, 55, "45-54"], [55, 65, "55-64"], [65, None, ">64"]],
    }
    return {
        "tables": [{"name": t, "path": f"{t}.csv", "key": "crash_num"} for t in TABLE_COLUMNS],
        "variables": [{"name": v, "table": t, "column": c} for v, (t, c) in cols.items()],
        "recodes": recodes,
        "bands": bands,
        "filters": [
            {"variable": "severity", "allowed": ["fatal", "severe", "moderate"]},
            {"variable": LIGHTING, "allowed": list(STRATA)},
        ],
        "missing_label": "unknown",
    }


def _raw_rows(crash: str, rec: dict[str, str], rng: random.Random) -> dict[str, dict[str, str]]:
    def band_value(table, cat):
        if cat == "unknown":
            return ""
        lo, hi = table[cat]
        return str(rng.randint(lo, hi))

    day = rng.choice(_WEEKDAYS if rec["day_of_week"] == "weekday" else _WEEKEND)
    speed = "" if rec["speed_limit"] == "unknown" else str(rng.choice(_SPEED_VALUES[rec["speed_limit"]]))
    blank = lambda v: "" if v == "unknown" else v  # noqa: E731
    return {
        "pedestrian": dict(crash_num=crash, ped_action=blank(rec["ped_action"]),
                           ped_alcohol_drug=rec["ped_alcohol_drug"],
                           ped_age=band_value(_PED_AGE_RANGES, rec["ped_age"]),
                           ped_dark_cloth=rec["ped_dark_cloth"],
                           injury_code=_SEVERITY_CODES.get(rec["severity"], rec["severity"])),
        "crash": dict(crash_num=crash, light_code=rng.choice(_LIGHT_CODES.get(rec[LIGHTING], (rec[LIGHTING],))),
                      day_name=day, location_type=rec["location_type"],
                      highway_type=rec["highway_type"], road_type=rec["road_type"]),
        "vehicle": dict(crash_num=crash, driver_age=band_value(_DRIVER_AGE_RANGES, rec["driver_age"]),
                        driver_condition=rec["driver_condition"], violation_type=rec["violation_type"]),
        "dotd": dict(crash_num=crash, posted_speed=speed),
    }


def write_study_tables(directory: str | Path, seed: int = 2022) -> Path:
    """Write four raw source tables plus ``config.json`` into ``directory``.

    Besides the study crashes, the tables hold rows the preparation must
    discard: complaint/no-injury crashes, dusk/dawn/unknown/other lighting,
    keys missing from one table, and second vehicle rows for some crashes.
    Returns the config path.
    """
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    rng = random.Random(f"{seed}:raw")
    study = synthesize_records(MINING_VARIABLES, seed)
    rows: dict[str, list[dict[str, str]]] = {t: [] for t in TABLE_COLUMNS}

    def filler(severity: str, lighting: str) -> dict[str, str]:
        rec = {var: rng.choice(list(MARGINALS[var])) for var in SELECTED_VARIABLES}
        rec["severity"], rec[LIGHTING] = severity, lighting
        return rec

    extra = []
    for i in range(400):
        extra.append((f"X{i:05d}", filler(rng.choice("DE"), rng.choice(list(_LIGHT_CODES)))))
    for i in range(250):
        extra.append((f"L{i:05d}", filler(rng.choice(list(_SEVERITY_CODES)), rng.choice("EFYZ"))))

    for crash, rec in study + extra:
        for table, row in _raw_rows(crash, rec, rng).items():
            rows[table].append(row)
    # keys absent from exactly one table
    for i, table in enumerate(TABLE_COLUMNS):
        for j in range(5):
            crash = f"U{i}{j:04d}"
            raw = _raw_rows(crash, filler("A", "daylight"), rng)
            for other in TABLE_COLUMNS:
                if other != table:
                    rows[other].append(raw[other])
    # second vehicles; the first row in file order must win
    for crash, _ in study[::500]:
        rows["vehicle"].append(dict(crash_num=crash, driver_age="40",
                                    driver_condition="normal", violation_type="others"))

    for table, cols in TABLE_COLUMNS.items():
        with open(directory / f"{table}.csv", "w", newline="") as fh:
            w = csv.DictWriter(fh, fieldnames=cols)
            w.writeheader()
            w.writerows(rows[table])
    config = study_config()
    path = directory / "config.json"
    path.write_text(json.dumps(config, indent=2) + "\n")
    return path
