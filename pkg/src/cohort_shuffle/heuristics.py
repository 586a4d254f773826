"""Constructive and local-search heuristics for warm starts.

``cyclic_deal`` round-robins every previous company's students over the
other companies; with the companies' sizes between ``|C|`` and
``2(|C|-1)`` it realizes the pigeonhole bound on forced pairs exactly,
which makes it an optimality witness on balanced instances.
``rotate_within_battalions`` moves companies wholesale, preserving every
per-company statistic of a feasible previous assignment.  ``local_search``
then polishes any start with relocate and swap moves.
"""

from __future__ import annotations

import random

from cohort_shuffle.ipmodel import ModelVariant
from cohort_shuffle.roster import (
    FEAS_TOL,
    GENDERS,
    METRICS,
    QUALITIES,
    Assignment,
    Roster,
    check_feasible,
    count_pairs,
    count_same_company,
    deviation_from_sums,
    weighted_deviation,
)


def cyclic_deal(roster: Roster) -> Assignment:
    """Deal each previous company's students over the other companies.

    The k-th student (input order) of company ``o`` goes to company
    ``(o + 1 + (k mod (|C|-1))) mod |C|``: one pass hands a company's
    first ``|C|-1`` students to distinct targets, and each wrap-around
    pass doubles up targets one by one, creating exactly
    ``max(0, n - (|C|-1))`` same-destination pairs per company while
    ``n <= 2(|C|-1)``.  Side constraints are ignored; nobody stays put.
    """
    n_c = roster.num_companies
    if n_c < 2:
        raise ValueError("dealing needs at least 2 companies")
    seen = [0] * n_c
    out: Assignment = {}
    for s in roster.students:
        o = s.old_company
        k = seen[o]
        seen[o] = k + 1
        out[s.id] = (o + 1 + (k % (n_c - 1))) % n_c
    return out


def rotate_within_battalions(roster: Roster, shift: int = 1) -> Assignment:
    """Send every company's students wholesale to another company of the
    same battalion.

    Company contents move as blocks, so each new company inherits exactly
    the composition of one previous company: a feasible previous
    assignment stays feasible, and with a shift that moves every company
    (any shift not divisible by the battalion size) nobody stays put.
    """
    out: Assignment = {}
    target = {}
    for group in roster.battalions:
        members = sorted(group)
        for pos, c in enumerate(members):
            target[c] = members[(pos + shift) % len(members)]
    for s in roster.students:
        out[s.id] = target[s.old_company]
    return out


class _Ledger:
    """Incremental per-company view of everything check_feasible looks at."""

    def __init__(self, roster: Roster, asg: Assignment, forbid_same: bool) -> None:
        self.roster = roster
        self.tol = roster.tolerances
        n_c = roster.num_companies
        self.size = [0] * n_c
        self.quality = {q: [0] * n_c for q in QUALITIES}
        self.sums = {m: [0.0] * n_c for m in METRICS}
        self.gender = {g: [0] * n_c for g in GENDERS}
        races = set(self.tol.race_min) | set(self.tol.race_max)
        self.race = {e: [0] * n_c for e in races}
        self.sport = {v: [0] * n_c for v in self.tol.sport_max}
        self.sapr = [0] * n_c
        self.intl = [0] * n_c
        self.cohort: dict[tuple[int, int], int] = {}
        self.partners: dict[str, list[str]] = {}
        for a, b in roster.conflict_pairs:
            self.partners.setdefault(a, []).append(b)
            self.partners.setdefault(b, []).append(a)
        self.allowed: dict[str, frozenset[int]] = {}
        all_c = frozenset(range(n_c))
        for s in roster.students:
            base = frozenset(roster.battalions[roster.battalion_of(s.old_company)]) \
                if s.battalion_locked else all_c
            if forbid_same:
                base = base - {s.old_company}
            self.allowed[s.id] = base
            self._add(s, asg[s.id], +1)

    def _add(self, s, c: int, sign: int) -> None:
        self.size[c] += sign
        for q in QUALITIES:
            if s.in_quality(q):
                self.quality[q][c] += sign
        for m in METRICS:
            self.sums[m][c] += sign * s.score(m)
        self.gender[s.gender][c] += sign
        if s.race in self.race:
            self.race[s.race][c] += sign
        for v in s.sports:
            if v in self.sport:
                self.sport[v][c] += sign
        if s.is_sapr_guide:
            self.sapr[c] += sign
        if s.is_international:
            self.intl[c] += sign
        key = (c, s.old_company)
        self.cohort[key] = self.cohort.get(key, 0) + sign

    def move(self, s, src: int, dst: int) -> None:
        self._add(s, src, -1)
        self._add(s, dst, +1)

    def company_ok(self, c: int) -> bool:
        tol = self.tol
        n = self.size[c]
        for q in QUALITIES:
            cnt = self.quality[q][c]
            hi = tol.count_max.get(q)
            if hi is not None and cnt > hi:
                return False
            lo = tol.count_min.get(q)
            if lo is not None and cnt < lo:
                return False
        for m in METRICS:
            total = self.sums[m][c]
            hi = tol.merit_max.get(m)
            if hi is not None and total - hi * n > FEAS_TOL:
                return False
            lo = tol.merit_min.get(m)
            if lo is not None and lo * n - total > FEAS_TOL:
                return False
        for g in GENDERS:
            cnt = self.gender[g][c]
            hi = tol.gender_max.get(g)
            if hi is not None and cnt - hi * n > FEAS_TOL:
                return False
            lo = tol.gender_min.get(g)
            if lo is not None and lo * n - cnt > FEAS_TOL:
                return False
        for e, counts in self.race.items():
            cnt = counts[c]
            hi = tol.race_max.get(e)
            if hi is not None and cnt - hi * n > FEAS_TOL:
                return False
            lo = tol.race_min.get(e)
            if lo is not None and lo * n - cnt > FEAS_TOL:
                return False
        for v, cap in tol.sport_max.items():
            if self.sport[v][c] > cap:
                return False
        if tol.min_sapr > 0:
            targets = tol.sapr_companies
            if (targets is None or c in targets) and self.sapr[c] < tol.min_sapr:
                return False
        if tol.num_intl is not None:
            targets = tol.intl_companies
            if (targets is None or c in targets) and self.intl[c] != tol.num_intl:
                return False
        return True

    def conflict_ok(self, sid: str, c: int, asg: Assignment) -> bool:
        return all(asg[p] != c for p in self.partners.get(sid, ()))

    def deviation(self, roster: Roster) -> float:
        return deviation_from_sums(self.sums["aom"], self.sums["mom"],
                                   roster.aom_weight, roster.mom_weight)


def _objective(roster: Roster, asg: Assignment, variant: ModelVariant) -> float:
    if variant is ModelVariant.MIN_SAME_COMPANY:
        return float(count_same_company(roster, asg))
    if variant is ModelVariant.MERIT_DEVIATION:
        return weighted_deviation(roster, asg)
    return float(count_pairs(roster, asg))


def local_search(roster: Roster, start: Assignment, objective: ModelVariant,
                 budget: int, *, seed: int = 0) -> Assignment:
    """First-improvement descent over relocate and swap moves.

    Neighborhoods are scanned in a seeded shuffled order; a move is taken
    as soon as it strictly improves the variant's objective while, when
    the start was feasible, keeping every constraint family satisfied.
    Stops at a local optimum or after ``budget`` accepted moves.
    """
    asg = dict(start)
    if budget <= 0:
        return asg
    forbid = objective is not ModelVariant.MIN_SAME_COMPANY
    gate = check_feasible(roster, asg, forbid_same_company=forbid).feasible
    ledger = _Ledger(roster, asg, forbid)
    rng = random.Random(seed)
    students = list(roster.students)
    n_c = roster.num_companies
    cur = _objective(roster, asg, objective)

    def eval_after(touched: list[int]) -> tuple[bool, float]:
        if gate:
            for c in touched:
                if not ledger.company_ok(c):
                    return False, 0.0
        if objective is ModelVariant.MIN_SAME_COMPANY:
            val = float(sum(1 for s in students if asg[s.id] == s.old_company))
        elif objective is ModelVariant.MERIT_DEVIATION:
            val = ledger.deviation(roster)
        else:
            val = float(sum(k * (k - 1) // 2 for k in ledger.cohort.values()))
        return True, val

    moves_left = budget
    improved = True
    while improved and moves_left > 0:
        improved = False
        relocates = [(i, c) for i in range(len(students)) for c in range(n_c)]
        rng.shuffle(relocates)
        for i, dst in relocates:
            s = students[i]
            src = asg[s.id]
            if dst == src:
                continue
            if gate and (dst not in ledger.allowed[s.id]
                         or not ledger.conflict_ok(s.id, dst, asg)):
                continue
            ledger.move(s, src, dst)
            asg[s.id] = dst
            ok, val = eval_after([src, dst])
            if ok and val < cur - 1e-9:
                cur = val
                moves_left -= 1
                improved = True
                break
            asg[s.id] = src
            ledger.move(s, dst, src)
        if improved or moves_left <= 0:
            continue

        swaps = [(i, j) for i in range(len(students)) for j in range(i + 1, len(students))]
        rng.shuffle(swaps)
        for i, j in swaps:
            a, b = students[i], students[j]
            ca, cb = asg[a.id], asg[b.id]
            if ca == cb:
                continue
            if gate and (cb not in ledger.allowed[a.id] or ca not in ledger.allowed[b.id]):
                continue
            ledger.move(a, ca, cb)
            ledger.move(b, cb, ca)
            asg[a.id], asg[b.id] = cb, ca
            conflicts_fine = (not gate) or (ledger.conflict_ok(a.id, cb, asg)
                                            and ledger.conflict_ok(b.id, ca, asg))
            ok, val = (False, 0.0)
            if conflicts_fine:
                ok, val = eval_after([ca, cb])
            if ok and val < cur - 1e-9:
                cur = val
                moves_left -= 1
                improved = True
                break
            asg[a.id], asg[b.id] = ca, cb
            ledger.move(a, cb, ca)
            ledger.move(b, ca, cb)
    return asg
