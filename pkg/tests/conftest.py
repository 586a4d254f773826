"""Shared builders for the test suite.

Two kinds of helpers live here: tiny hand-checkable rosters whose
statistics can be verified with pencil and paper, and a randomized
instance generator small enough that exhaustive enumeration of all
``|C|^|A|`` assignments is practical.  The enumerator is the independent
oracle the solver is compared against: it shares no code with the
branch-and-bound search, only the public feasibility checker and the
objective evaluators.
"""

from __future__ import annotations

import itertools
import random

import pytest

from cohort_shuffle import (
    ModelVariant,
    Roster,
    Student,
    Tolerances,
    check_feasible,
    count_pairs,
    count_same_company,
    desk_spec,
    generate,
    weighted_deviation,
)


def mk_student(i: int, old_company: int, *, aom: float = 500.0, mom: float = 500.0,
               prt: float = 90.0, gender: str = "male", race: str = "white",
               **flags) -> Student:
    return Student(id=f"s{i:02d}", aom=aom, mom=mom, prt=prt, gender=gender,
                   race=race, old_company=old_company, **flags)


def balanced_roster(num_companies: int, size: int, *,
                    tolerances: Tolerances | None = None) -> Roster:
    """Uniform companies, one battalion, no conflicts, constant scores."""
    students = tuple(mk_student(c * size + k, c)
                     for c in range(num_companies) for k in range(size))
    return Roster(students=students, num_companies=num_companies,
                  battalions=(tuple(range(num_companies)),),
                  tolerances=tolerances or Tolerances())


@pytest.fixture
def tiny_roster() -> Roster:
    """Six students over three companies with hand-checkable scores.

    Previous sizes are (3, 2, 1); AOM sums per previous company are
    (30, 50, 40) and MOM sums (12, 16, 30).
    """
    rows = [
        # id index, old company, aom, mom, gender, race
        (0, 0, 4.0, 2.0, "male", "white"),
        (1, 0, 10.0, 4.0, "female", "other"),
        (2, 0, 16.0, 6.0, "male", "white"),
        (3, 1, 20.0, 7.0, "male", "other"),
        (4, 1, 30.0, 9.0, "female", "white"),
        (5, 2, 40.0, 30.0, "male", "white"),
    ]
    students = tuple(mk_student(i, c, aom=a, mom=m, gender=g, race=r)
                     for i, c, a, m, g, r in rows)
    return Roster(students=students, num_companies=3,
                  battalions=((0, 1, 2),))


@pytest.fixture(scope="session")
def desk_roster() -> Roster:
    return generate(desk_spec(), seed=101)


def identity_assignment(roster: Roster) -> dict[str, int]:
    return {s.id: s.old_company for s in roster.students}


# --- randomized oracle instances -------------------------------------------

def oracle_instance(seed: int) -> Roster:
    """Small random roster covering every constraint family.

    At most 6 students over 2 or 3 companies, integer scores, and a
    random sprinkle of tolerance windows, conflicts, locked students,
    and objective weights.  Some two-company instances split into two
    battalions, which combined with a locked student and the no-stay
    rule produces genuinely infeasible cases.
    """
    rng = random.Random(seed)
    n_c = rng.choice([2, 2, 3, 3, 3])
    n = rng.randint(2, 6)
    genders = ["male", "female"]
    races = ["white", "other"]
    sports = ["football", "soccer"]
    students = []
    for i in range(n):
        students.append(Student(
            id=f"t{i}", aom=float(rng.randint(0, 20)), mom=float(rng.randint(0, 20)),
            prt=float(rng.randint(0, 10)), gender=rng.choice(genders),
            race=rng.choice(races), old_company=rng.randrange(n_c),
            is_task_force=rng.random() < 0.3, is_prior_service=rng.random() < 0.2,
            is_sapr_guide=rng.random() < 0.3, is_international=rng.random() < 0.2,
            battalion_locked=rng.random() < 0.15,
            sports=frozenset([rng.choice(sports)] if rng.random() < 0.4 else []),
        ))
    if n_c == 2 and rng.random() < 0.2:
        battalions: tuple[tuple[int, ...], ...] = ((0,), (1,))
    else:
        battalions = (tuple(range(n_c)),)
    count_min = {"all": rng.randint(0, 1)} if rng.random() < 0.4 else {}
    count_max = {"all": rng.randint(max(1, n // n_c), n)} if rng.random() < 0.5 else {}
    if rng.random() < 0.3:
        count_max["task_force"] = rng.randint(0, 2)
    merit_min = {"aom": float(rng.randint(0, 8))} if rng.random() < 0.3 else {}
    merit_max = {"aom": float(rng.randint(10, 20))} if rng.random() < 0.3 else {}
    gender_max = {"male": rng.choice([0.5, 0.8, 1.0])} if rng.random() < 0.3 else {}
    race_min = {"white": rng.choice([0.0, 0.2])} if rng.random() < 0.2 else {}
    sport_max = {"football": rng.randint(0, 2)} if rng.random() < 0.3 else {}
    min_sapr = rng.randint(0, 1) if rng.random() < 0.3 else 0
    conflicts = []
    if n >= 2 and rng.random() < 0.4:
        i, j = rng.sample(range(n), 2)
        conflicts.append((f"t{i}", f"t{j}"))
    tol = Tolerances(count_min=count_min, count_max=count_max, merit_min=merit_min,
                     merit_max=merit_max, gender_max=gender_max, race_min=race_min,
                     sport_max=sport_max, min_sapr=min_sapr)
    w = rng.choice([(0.5, 0.5), (0.3, 0.7), (1.0, 0.0)])
    return Roster(students=tuple(students), num_companies=n_c, battalions=battalions,
                  conflict_pairs=tuple(conflicts), tolerances=tol,
                  aom_weight=w[0], mom_weight=w[1])


def oracle_best(roster: Roster, variant: ModelVariant) -> float | None:
    """Exhaustive minimum over every total assignment, or None if none is feasible."""
    n = len(roster.students)
    forbid = variant is not ModelVariant.MIN_SAME_COMPANY
    best: float | None = None
    for combo in itertools.product(range(roster.num_companies), repeat=n):
        asg = {s.id: combo[i] for i, s in enumerate(roster.students)}
        if not check_feasible(roster, asg, forbid_same_company=forbid).feasible:
            continue
        if variant is ModelVariant.MIN_SAME_COMPANY:
            val = float(count_same_company(roster, asg))
        elif variant is ModelVariant.MIN_PAIRS:
            val = float(count_pairs(roster, asg))
        else:
            val = weighted_deviation(roster, asg)
        if best is None or val < best - 1e-12:
            best = val
    return best
