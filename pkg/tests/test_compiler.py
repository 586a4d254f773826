"""Model compilation: column layout, row families, and determinism.

Expected variable and row counts are closed-form functions of the roster
shape, asserted from independent arithmetic here rather than by calling
the compiler's own counting helper (which is itself under test).
"""

from __future__ import annotations

import pytest

from cohort_shuffle import (
    ModelVariant,
    Roster,
    Sense,
    Tolerances,
    VarKind,
    acquainted_pairs,
    compile_model,
    count_variables,
    export_lp,
)
from cohort_shuffle.compiler import x_column
from conftest import mk_student

MIN = ModelVariant.MIN_SAME_COMPANY
DEV = ModelVariant.MERIT_DEVIATION
PAIRS = ModelVariant.MIN_PAIRS


def rows_by_family(model):
    fams: dict[str, list] = {}
    for row in model.rows:
        fams.setdefault(row.family, []).append(row)
    return fams


class TestColumnLayout:
    def test_x_column_is_row_major(self):
        assert x_column(0, 0, 4) == 0
        assert x_column(0, 3, 4) == 3
        assert x_column(2, 1, 4) == 9

    def test_count_variables_matches_compiled_model(self, tiny_roster):
        for variant in ModelVariant:
            model = compile_model(tiny_roster, variant)
            assert count_variables(tiny_roster, variant) == model.num_vars

    def test_variable_totals(self, tiny_roster):
        n, c = 6, 3
        assert compile_model(tiny_roster, MIN).num_vars == n * c
        assert compile_model(tiny_roster, DEV).num_vars == n * c + 2 * c * (c - 1)
        # previous sizes (3, 2, 1) -> 3 + 1 + 0 acquainted pairs
        assert compile_model(tiny_roster, PAIRS).num_vars == n * c + 4

    def test_variable_names_and_kinds(self, tiny_roster):
        model = compile_model(tiny_roster, DEV)
        assert model.variables[0].name == "x[s00,C1]"
        assert model.variables[0].kind is VarKind.BINARY
        y0 = model.variables[18]
        assert y0.name == "y[C1,C2]" and y0.kind is VarKind.CONTINUOUS
        assert y0.upper == float("inf")
        assert model.var_index("z[C3,C2]") > model.var_index("y[C3,C2]")


class TestObjectives:
    def test_min_costs_only_stay_columns(self, tiny_roster):
        model = compile_model(tiny_roster, MIN)
        for i, s in enumerate(tiny_roster.students):
            for c in range(3):
                cost = model.variables[x_column(i, c, 3)].objective
                assert cost == (1.0 if c == s.old_company else 0.0)

    def test_dev_costs_are_objective_weights(self, tiny_roster):
        r = Roster(students=tiny_roster.students, num_companies=3,
                   battalions=((0, 1, 2),), aom_weight=0.3, mom_weight=0.7)
        model = compile_model(r, DEV)
        costs = {v.name[0]: v.objective for v in model.variables[18:]}
        assert costs == {"y": 0.3, "z": 0.7}
        assert all(v.objective == 0.0 for v in model.variables[:18])

    def test_pairs_costs_unit_u_columns(self, tiny_roster):
        model = compile_model(tiny_roster, PAIRS)
        u_vars = model.variables[18:]
        assert len(u_vars) == 4
        assert all(v.objective == 1.0 and v.kind is VarKind.BINARY for v in u_vars)


class TestRowFamilies:
    def full_roster(self) -> Roster:
        students = (
            mk_student(0, 0, aom=10.0, gender="male", race="white",
                       is_task_force=True, is_sapr_guide=True,
                       sports=frozenset({"football"})),
            mk_student(1, 0, aom=20.0, gender="female", race="other",
                       is_international=True),
            mk_student(2, 1, aom=30.0, gender="male", race="white",
                       battalion_locked=True),
            mk_student(3, 1, aom=40.0, gender="female", race="other",
                       is_international=True, is_sapr_guide=True),
        )
        tol = Tolerances(count_min={"all": 1}, count_max={"all": 3, "task_force": 1},
                         merit_min={"aom": 5.0}, merit_max={"aom": 35.0},
                         gender_max={"male": 0.8}, race_min={"white": 0.1},
                         sport_max={"football": 1}, min_sapr=1, num_intl=1)
        return Roster(students=students, num_companies=2, battalions=((0, 1),),
                      conflict_pairs=(("s00", "s03"),), tolerances=tol)

    def test_family_row_counts(self):
        r = self.full_roster()
        n, c = 4, 2
        fams = {k: len(v) for k, v in rows_by_family(compile_model(r, MIN)).items()}
        assert fams == {
            "assign_once": n,
            "count_min_all": c, "count_max_all": c, "count_max_task_force": c,
            "merit_min_aom": c, "merit_max_aom": c,
            "gender_max_male": c, "race_min_white": c,
            "sport_cap_football": c,
            "conflict": 1 * c,
            "sapr_min": c, "intl_count": c,
            "battalion_lock": 1,
        }

    def test_no_stay_rows_only_for_move_variants(self):
        r = self.full_roster()
        assert "no_stay" not in rows_by_family(compile_model(r, MIN))
        for variant in (DEV, PAIRS):
            no_stay = rows_by_family(compile_model(r, variant))["no_stay"]
            assert len(no_stay) == 4
            for row, s in zip(no_stay, r.students):
                assert row.sense is Sense.EQ and row.rhs == 0.0
                assert row.cols == (x_column(r.students.index(s), s.old_company, 2),)

    def test_merit_rows_are_homogenized(self):
        r = self.full_roster()
        model = compile_model(r, MIN)
        row = rows_by_family(model)["merit_max_aom"][0]
        assert row.rhs == 0.0
        # coefficient of each x is score - bound
        assert row.coefs == (10.0 - 35.0, 20.0 - 35.0, 30.0 - 35.0, 40.0 - 35.0)
        row = rows_by_family(model)["merit_min_aom"][1]
        assert row.coefs == (5.0, 15.0, 25.0, 35.0) and row.sense is Sense.GE

    def test_fraction_rows_are_homogenized(self):
        r = self.full_roster()
        model = compile_model(r, MIN)
        row = rows_by_family(model)["gender_max_male"][0]
        # males (s00, s02) get 1 - 0.8, the rest -0.8
        assert row.coefs == pytest.approx((0.2, -0.8, 0.2, -0.8))
        assert row.sense is Sense.LE and row.rhs == 0.0

    def test_battalion_lock_drops_old_company_under_no_stay(self):
        r = self.full_roster()
        lock_min = rows_by_family(compile_model(r, MIN))["battalion_lock"][0]
        assert lock_min.cols == (x_column(2, 0, 2), x_column(2, 1, 2))
        lock_dev = rows_by_family(compile_model(r, DEV))["battalion_lock"][0]
        assert lock_dev.cols == (x_column(2, 0, 2),)

    def test_spread_rows_mirror_each_other(self, tiny_roster):
        model = compile_model(tiny_roster, DEV)
        fams = rows_by_family(model)
        for fam in ("aom_spread_pos", "aom_spread_neg",
                    "mom_spread_pos", "mom_spread_neg"):
            assert len(fams[fam]) == 3 * 2
        pos, neg = fams["aom_spread_pos"][0], fams["aom_spread_neg"][0]
        assert pos.cols == neg.cols
        # the x part flips sign, the spread column keeps -1
        assert neg.coefs[:-1] == tuple(-v for v in pos.coefs[:-1])
        assert pos.coefs[-1] == neg.coefs[-1] == -1.0

    def test_together_rows_link_u_to_both_students(self, tiny_roster):
        model = compile_model(tiny_roster, PAIRS)
        together = rows_by_family(model)["together"]
        # 4 acquainted pairs x 3 companies
        assert len(together) == 12
        first = together[0]
        assert first.coefs == (1.0, 1.0, -1.0)
        assert first.sense is Sense.LE and first.rhs == 1.0
        u_col = first.cols[2]
        assert model.variables[u_col].name == "u[s00,s01]"

    def test_acquainted_pairs_grouped_by_previous_company(self, tiny_roster):
        assert acquainted_pairs(tiny_roster) == [(0, 1), (0, 2), (1, 2), (3, 4)]


class TestErrorsAndDeterminism:
    def test_empty_roster_rejected(self):
        empty = Roster(students=(), num_companies=2, battalions=((0, 1),))
        with pytest.raises(ValueError):
            compile_model(empty, MIN)

    def test_single_company_cannot_forbid_staying(self):
        r = Roster(students=(mk_student(0, 0),), num_companies=1, battalions=((0,),))
        with pytest.raises(ValueError):
            compile_model(r, DEV)
        assert compile_model(r, MIN).num_vars == 1

    def test_variant_must_be_enum(self, tiny_roster):
        with pytest.raises(ValueError):
            compile_model(tiny_roster, "dev")

    def test_recompilation_is_byte_identical(self, tiny_roster):
        for variant in ModelVariant:
            a = export_lp(compile_model(tiny_roster, variant))
            b = export_lp(compile_model(tiny_roster, variant))
            assert a == b

    def test_export_contains_all_sections(self, tiny_roster):
        text = export_lp(compile_model(tiny_roster, DEV))
        for section in ("Minimize", "Subject To", "Bounds", "Binaries", "End"):
            assert section in text
        assert "x[s00,C1]" in text
        assert "no_stay_s00:" in text
