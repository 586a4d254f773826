"""Company-level summary tables for before/after comparison.

One row of statistics per column of interest: average AOM, average MOM,
percent male, percent in the focus race class, average PRT, and the
percentage of students sharing their previous company with someone in
their new company.  The table aggregates the per-company values into
minimum, maximum, average, population standard deviation, and median
rows, the shape used for reassignment quality comparisons.
"""

from __future__ import annotations

import statistics
from dataclasses import dataclass

from cohort_shuffle.roster import Assignment, Roster, company_members

SUMMARY_ROWS = ("minimum", "maximum", "average", "stddev", "median")


@dataclass(frozen=True)
class ReportTable:
    """Per-company metrics plus summary statistics across companies.

    ``per_company[c]`` holds one value per column, or ``None`` throughout
    when company ``c`` is empty; empty companies are excluded from the
    summary rows and listed explicitly instead of being silently skipped.
    """

    columns: tuple[str, ...]
    company_labels: tuple[str, ...]
    per_company: tuple[tuple[float | None, ...], ...]
    summary: dict[str, tuple[float | None, ...]]
    empty_companies: tuple[str, ...]


def company_stats(roster: Roster, asg: Assignment, *,
                  focus_race: str = "white") -> ReportTable:
    """Evaluate the six report columns on a concrete assignment.

    The same-previous-company percentage of a new company is
    ``100 * (size - distinct previous companies represented) / size``:
    the share of students who brought at least one former companymate,
    zero when everyone comes from a different previous company.
    """
    groups = company_members(roster, asg)
    columns = ("AOM", "MOM", "%Male", f"%{focus_race.capitalize()}", "PRT",
               "% from same previous company")
    rows: list[tuple[float | None, ...]] = []
    empty: list[str] = []
    for c, members in enumerate(groups):
        n = len(members)
        if n == 0:
            rows.append((None,) * len(columns))
            empty.append(roster.company_label(c))
            continue
        aom = sum(s.aom for s in members) / n
        mom = sum(s.mom for s in members) / n
        male = 100.0 * sum(1 for s in members if s.gender == "male") / n
        race = 100.0 * sum(1 for s in members if s.race == focus_race) / n
        prt = sum(s.prt for s in members) / n
        distinct = len({s.old_company for s in members})
        same = 100.0 * (n - distinct) / n
        rows.append((aom, mom, male, race, prt, same))

    summary: dict[str, tuple[float | None, ...]] = {}
    for r, stat in enumerate(SUMMARY_ROWS):
        vals: list[float | None] = []
        for k in range(len(columns)):
            data = [row[k] for row in rows if row[k] is not None]
            if not data:
                vals.append(None)
                continue
            if stat == "minimum":
                vals.append(min(data))
            elif stat == "maximum":
                vals.append(max(data))
            elif stat == "average":
                vals.append(sum(data) / len(data))
            elif stat == "stddev":
                vals.append(statistics.pstdev(data))
            else:
                vals.append(statistics.median(data))
        summary[stat] = tuple(vals)

    return ReportTable(columns, roster.company_labels, tuple(rows), summary,
                       tuple(empty))


def _fmt(v: float | None, *, full: bool = False) -> str:
    if v is None:
        return "-"
    if full:
        return repr(float(v))
    return f"{v:.2f}"


def render(table: ReportTable, format: str = "text") -> str:
    """Serialize the summary rows; display values carry 2 decimals, CSV
    carries full precision."""
    if format == "csv":
        lines = ["statistic," + ",".join(table.columns)]
        for stat in SUMMARY_ROWS:
            lines.append(stat + "," + ",".join(_fmt(v, full=True)
                                               for v in table.summary[stat]))
        if table.empty_companies:
            lines.append("empty_companies," + ";".join(table.empty_companies))
        return "\n".join(lines) + "\n"

    if format == "markdown":
        head = "| statistic | " + " | ".join(table.columns) + " |"
        sep = "|" + "---|" * (len(table.columns) + 1)
        lines = [head, sep]
        for stat in SUMMARY_ROWS:
            lines.append("| " + stat + " | "
                         + " | ".join(_fmt(v) for v in table.summary[stat]) + " |")
        if table.empty_companies:
            lines.append("")
            lines.append("Empty companies: " + ", ".join(table.empty_companies))
        return "\n".join(lines) + "\n"

    if format == "text":
        widths = [max(len(c), 10) for c in table.columns]
        name_w = max(len(s) for s in SUMMARY_ROWS) + 2
        lines = [" " * name_w + "  ".join(c.rjust(w) for c, w in zip(table.columns, widths))]
        for stat in SUMMARY_ROWS:
            cells = (_fmt(v).rjust(w) for v, w in zip(table.summary[stat], widths))
            lines.append(stat.ljust(name_w) + "  ".join(cells))
        if table.empty_companies:
            lines.append("empty companies: " + ", ".join(table.empty_companies))
        return "\n".join(lines) + "\n"

    raise ValueError(f"unknown report format: {format!r}")
