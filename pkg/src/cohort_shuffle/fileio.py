"""On-disk formats: roster CSV, key-value config, assignment CSV, metadata.

A roster splits across two files.  The CSV holds one row per student
(scores, demographics, flags, previous company and battalion, sports);
the companion config holds everything that is not per-student: tolerance
windows, objective weights, conflict pairs, battalion layout, and company
subsets.  Both writers emit full-precision values and a fixed ordering,
so write-then-read reproduces an identical roster and repeated writes
are byte-identical.  docs/formats.md documents both grammars.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

from cohort_shuffle.generator import GenSpec, MetricSpec
from cohort_shuffle.roster import Assignment, Roster, Student, Tolerances

ROSTER_FIELDS = ("id", "aom", "mom", "prt", "gender", "race", "old_company",
                 "battalion", "task_force", "prior_service", "sapr",
                 "international", "batt_locked", "sports")


def _num(v: float) -> str:
    return repr(int(v)) if float(v) == int(v) else repr(float(v))


def write_roster(roster: Roster, roster_path: str | Path, config_path: str | Path) -> None:
    """Write the student CSV and its companion config."""
    with open(roster_path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(ROSTER_FIELDS)
        for s in roster.students:
            w.writerow([
                s.id, _num(s.aom), _num(s.mom), _num(s.prt), s.gender, s.race,
                s.old_company + 1, roster.battalion_of(s.old_company) + 1,
                int(s.is_task_force), int(s.is_prior_service),
                int(s.is_sapr_guide), int(s.is_international),
                int(s.battalion_locked), ";".join(sorted(s.sports)),
            ])
    Path(config_path).write_text("\n".join(config_lines(roster)) + "\n")


def config_lines(roster: Roster) -> list[str]:
    """Canonical companion-config serialization of the non-student data."""
    tol = roster.tolerances
    batt_of = [0] * roster.num_companies
    for b, group in enumerate(roster.battalions):
        for c in group:
            batt_of[c] = b + 1
    lines = [
        "# cohort-shuffle instance config",
        f"num_companies = {roster.num_companies}",
        "battalions = " + ",".join(str(b) for b in batt_of),
        f"aom_weight = {_num(roster.aom_weight)}",
        f"mom_weight = {_num(roster.mom_weight)}",
    ]
    for key in sorted(tol.count_min):
        lines.append(f"min_number_{key} = {tol.count_min[key]}")
    for key in sorted(tol.count_max):
        lines.append(f"max_number_{key} = {tol.count_max[key]}")
    for key in sorted(tol.merit_min):
        lines.append(f"min_avg_score_{key} = {_num(tol.merit_min[key])}")
    for key in sorted(tol.merit_max):
        lines.append(f"max_avg_score_{key} = {_num(tol.merit_max[key])}")
    for key in sorted(tol.gender_min):
        lines.append(f"min_gender_{key} = {_num(tol.gender_min[key])}")
    for key in sorted(tol.gender_max):
        lines.append(f"max_gender_{key} = {_num(tol.gender_max[key])}")
    for key in sorted(tol.race_min):
        lines.append(f"min_race_{key} = {_num(tol.race_min[key])}")
    for key in sorted(tol.race_max):
        lines.append(f"max_race_{key} = {_num(tol.race_max[key])}")
    for key in sorted(tol.sport_max):
        lines.append(f"max_athlete_{key} = {tol.sport_max[key]}")
    if tol.min_sapr:
        lines.append(f"min_sapr = {tol.min_sapr}")
    if tol.num_intl is not None:
        lines.append(f"num_intl = {tol.num_intl}")
    if tol.sapr_companies is not None:
        lines.append("sapr_companies = " + ",".join(str(c + 1) for c in sorted(tol.sapr_companies)))
    if tol.intl_companies is not None:
        lines.append("intl_companies = " + ",".join(str(c + 1) for c in sorted(tol.intl_companies)))
    for a, b in roster.conflict_pairs:
        lines.append(f"conflict_pair = {a},{b}")
    return lines


def parse_config(path: str | Path) -> dict[str, list[str]]:
    """Key-value lines into a key -> values multimap; `#` starts a comment."""
    out: dict[str, list[str]] = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"{path}:{lineno}: expected 'key = value', got {raw!r}")
        key, val = (part.strip() for part in line.split("=", 1))
        out.setdefault(key, []).append(val)
    return out


def _single(cfg: dict[str, list[str]], key: str, default: str | None = None) -> str | None:
    vals = cfg.get(key)
    if not vals:
        return default
    if len(vals) > 1:
        raise ValueError(f"config key {key!r} given more than once")
    return vals[0]


def read_roster(roster_path: str | Path, config_path: str | Path) -> Roster:
    """Read a roster CSV plus companion config back into a Roster."""
    cfg = parse_config(config_path)
    students: list[Student] = []
    with open(roster_path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or tuple(reader.fieldnames) != ROSTER_FIELDS:
            raise ValueError(f"{roster_path}: expected header {','.join(ROSTER_FIELDS)}")
        for row in reader:
            students.append(Student(
                id=row["id"],
                aom=float(row["aom"]),
                mom=float(row["mom"]),
                prt=float(row["prt"]),
                gender=row["gender"],
                race=row["race"],
                old_company=int(row["old_company"]) - 1,
                is_task_force=row["task_force"] == "1",
                is_prior_service=row["prior_service"] == "1",
                is_sapr_guide=row["sapr"] == "1",
                is_international=row["international"] == "1",
                battalion_locked=row["batt_locked"] == "1",
                sports=frozenset(v for v in row["sports"].split(";") if v),
            ))

    declared = _single(cfg, "num_companies")
    num_companies = int(declared) if declared else (
        max(s.old_company for s in students) + 1 if students else 0)

    batt_line = _single(cfg, "battalions")
    if batt_line:
        batt_of = [int(v) for v in batt_line.split(",")]
        if len(batt_of) != num_companies:
            raise ValueError("battalions line must list one battalion per company")
    else:
        batt_of = [0] * num_companies
        seen = [False] * num_companies
        with open(roster_path, newline="") as fh:
            for row in csv.DictReader(fh):
                c = int(row["old_company"]) - 1
                batt_of[c] = int(row["battalion"])
                seen[c] = True
        if not all(seen):
            raise ValueError("some companies have no students; add a 'battalions' "
                             "line to the config")
    groups: dict[int, list[int]] = {}
    for c, b in enumerate(batt_of):
        groups.setdefault(b, []).append(c)
    battalions = tuple(tuple(groups[b]) for b in sorted(groups))

    def fmap(prefix: str, cast) -> dict:
        out = {}
        for key, vals in cfg.items():
            if key.startswith(prefix):
                if len(vals) > 1:
                    raise ValueError(f"config key {key!r} given more than once")
                out[key[len(prefix):]] = cast(vals[0])
        return out

    def companies(key: str) -> frozenset[int] | None:
        raw = _single(cfg, key)
        if raw is None:
            return None
        return frozenset(int(v) - 1 for v in raw.split(","))

    tol = Tolerances(
        count_min=fmap("min_number_", int),
        count_max=fmap("max_number_", int),
        merit_min=fmap("min_avg_score_", float),
        merit_max=fmap("max_avg_score_", float),
        gender_min=fmap("min_gender_", float),
        gender_max=fmap("max_gender_", float),
        race_min=fmap("min_race_", float),
        race_max=fmap("max_race_", float),
        sport_max=fmap("max_athlete_", int),
        min_sapr=int(_single(cfg, "min_sapr", "0")),
        num_intl=(lambda v: int(v) if v is not None else None)(_single(cfg, "num_intl")),
        sapr_companies=companies("sapr_companies"),
        intl_companies=companies("intl_companies"),
    )

    conflicts = []
    for raw in cfg.get("conflict_pair", []):
        a, b = (part.strip() for part in raw.split(","))
        conflicts.append((a, b))

    return Roster(
        students=tuple(students),
        num_companies=num_companies,
        battalions=battalions,
        conflict_pairs=tuple(conflicts),
        tolerances=tol,
        aom_weight=float(_single(cfg, "aom_weight", "0.5")),
        mom_weight=float(_single(cfg, "mom_weight", "0.5")),
    )


def write_assignment(path: str | Path, roster: Roster, asg: Assignment) -> None:
    """Assignment CSV: one (id, old company, new company) row per student."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["id", "old_company", "new_company"])
        for s in roster.students:
            w.writerow([s.id, s.old_company + 1, asg[s.id] + 1])


def read_assignment(path: str | Path) -> Assignment:
    out: Assignment = {}
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            out[row["id"]] = int(row["new_company"]) - 1
    return out


def write_meta(path: str | Path, meta: dict) -> None:
    """JSON sidecar with sorted keys; identical runs give identical bytes."""
    Path(path).write_text(json.dumps(meta, sort_keys=True, indent=2) + "\n")


def read_meta(path: str | Path) -> dict:
    return json.loads(Path(path).read_text())


_METRIC_FIELDS = ("lo", "hi", "mean", "between_std", "within_std")


def genspec_from_config(path: str | Path) -> GenSpec:
    """Generator spec from the same key-value grammar.

    Scalar GenSpec fields map directly (``num_companies = 8``); metric
    models use prefixed keys (``aom_mean = 550``); ``company_sizes`` and
    ``sports`` take comma lists.
    """
    cfg = parse_config(path)
    kwargs: dict = {}
    base = GenSpec()
    for metric in ("aom", "mom", "prt"):
        fields = {}
        for f in _METRIC_FIELDS:
            raw = _single(cfg, f"{metric}_{f}")
            if raw is not None:
                fields[f] = float(raw)
        if fields:
            cur = getattr(base, metric)
            merged = {f: fields.get(f, getattr(cur, f)) for f in _METRIC_FIELDS}
            kwargs[metric] = MetricSpec(**merged)

    casts = {
        "num_companies": int, "num_battalions": int, "company_size": int,
        "male_fraction": float, "focus_race": str, "focus_race_fraction": float,
        "other_race": str, "intl_per_company": int, "sapr_per_company": int,
        "task_force_fraction": float, "prior_service_fraction": float,
        "battalion_locked_fraction": float, "athlete_fraction": float,
        "num_conflict_pairs": int, "conflict_cross_gender": lambda v: v == "1",
        "count_slack": int, "fraction_slack": float,
        "bare": lambda v: v == "1", "aom_weight": float, "mom_weight": float,
    }
    for key, cast in casts.items():
        raw = _single(cfg, key)
        if raw is not None:
            kwargs[key] = cast(raw)
    raw = _single(cfg, "company_sizes")
    if raw is not None:
        kwargs["company_sizes"] = tuple(int(v) for v in raw.split(","))
    raw = _single(cfg, "size_range")
    if raw is not None:
        lo, hi = raw.split(",")
        kwargs["size_range"] = (int(lo), int(hi))
    raw = _single(cfg, "sports")
    if raw is not None:
        kwargs["sports"] = tuple(v.strip() for v in raw.split(",") if v.strip())
    return GenSpec(**kwargs)
