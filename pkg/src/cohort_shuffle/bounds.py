"""A-priori lower bound for the pairs objective and result certification.

When every student must leave their previous company, a company of size
``n`` has only ``|C| - 1`` admissible destinations, so by pigeonhole at
least ``n - (|C| - 1)`` of its students share a destination with a former
companymate.  Summing the per-company excesses gives a valid lower bound
on the pairs objective of any feasible reassignment, and an incumbent
matching it is optimal by inspection.  The optimality gap is the relative
distance between a solution and a bound, reported as a percentage.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import TYPE_CHECKING

from cohort_shuffle.ipmodel import ModelVariant
from cohort_shuffle.roster import (
    Roster,
    check_feasible,
    count_pairs,
    count_same_company,
    weighted_deviation,
)

if TYPE_CHECKING:
    from cohort_shuffle.branch_bound import SolveResult


@dataclass(frozen=True)
class PairsBoundReport:
    """Per-company pigeonhole excesses and their total."""

    per_company: tuple[tuple[int, int], ...]
    total: int

    def company_bound(self, company: int) -> int:
        return self.per_company[company][1]


def pairs_lower_bound(roster: Roster) -> PairsBoundReport:
    """Lower bound on the pairs objective under the no-stay rule.

    Each entry pairs a company's previous enrollment with
    ``max(0, size - (num_companies - 1))``.
    """
    if roster.num_companies < 2:
        raise ValueError("the bound needs at least 2 companies")
    slots = roster.num_companies - 1
    per = tuple((size, max(0, size - slots)) for size in roster.company_sizes())
    return PairsBoundReport(per, sum(b for _, b in per))


def optimality_gap(best_solution: float, best_bound: float) -> float:
    """Relative distance from a bound, as a percentage.

    A zero bound with a zero solution is a closed gap; a zero bound with a
    nonzero solution carries no relative information and reads as an
    infinite gap.
    """
    if best_bound == 0.0:
        return 0.0 if best_solution == 0.0 else math.inf
    return abs(best_solution - best_bound) / best_bound * 100.0


@dataclass(frozen=True)
class Certificate:
    """Independent re-evaluation of a solver result.

    ``ok`` means the reported objective matched the recomputation and the
    assignment passed every constraint family.  ``optimal_by_bound`` is
    this module's own optimality claim (objective equal to the a-priori
    bound); the solver's status is echoed but not taken on faith.
    """

    ok: bool
    feasible: bool
    objective_matches: bool
    recomputed_objective: float | None
    reported_objective: float | None
    bound: float | None
    gap_percent: float | None
    optimal_by_bound: bool
    solver_status: str
    notes: tuple[str, ...]


def certify(result: "SolveResult", roster: Roster, variant: ModelVariant) -> Certificate:
    """Re-derive a result's objective and feasibility from first principles.

    Certification failures are returned, never raised: a mismatch between
    the reported and recomputed objective marks the certificate not-ok and
    surfaces a solver bug instead of passing it along.
    """
    notes: list[str] = []
    status = result.status.value
    if result.assignment is None or result.objective is None:
        return Certificate(False, False, False, None, None, None, None, False,
                           status, ("result carries no assignment to certify",))

    asg = result.assignment
    forbid = variant is not ModelVariant.MIN_SAME_COMPANY
    report = check_feasible(roster, asg, forbid_same_company=forbid)
    feasible = report.feasible
    if not feasible:
        notes.append("violated families: " + ", ".join(sorted(report.families())))

    if variant is ModelVariant.MIN_SAME_COMPANY:
        recomputed: float = float(count_same_company(roster, asg))
        bound: float | None = 0.0
    elif variant is ModelVariant.MERIT_DEVIATION:
        recomputed = weighted_deviation(roster, asg)
        bound = max(0.0, min(result.bound, recomputed))
    else:
        recomputed = float(count_pairs(roster, asg))
        bound = float(pairs_lower_bound(roster).total)
        if any(s.battalion_locked for s in roster.students):
            notes.append("battalion-locked students only restrict destinations; "
                         "the pigeonhole bound remains valid")

    matches = abs(recomputed - result.objective) <= 1e-6
    if not matches:
        notes.append(f"reported objective {result.objective!r} != recomputed {recomputed!r}")

    optimal = False
    if variant is ModelVariant.MIN_SAME_COMPANY:
        optimal = recomputed == 0.0
    elif variant is ModelVariant.MIN_PAIRS:
        optimal = recomputed == bound
    else:
        optimal = recomputed == 0.0
    gap = optimality_gap(recomputed, bound) if bound is not None else None

    ok = feasible and matches
    return Certificate(ok, feasible, matches, recomputed, result.objective,
                       bound, gap, optimal, status, tuple(notes))
