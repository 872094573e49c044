import random

import pytest

from slbsr.formula import (
    EMP,
    NIL,
    And,
    Const,
    ContractViolation,
    Eq,
    Not,
    Var,
    Wand,
    conj,
    constants_of,
    measure,
    neq,
    pto,
)
from slbsr.oracle import naive_min_size
from slbsr.qf import QfQuery, ResourceOut, Sat, Unsat, check, qf_sat, symmetry_break
from slbsr.semantics import EMPTY_HEAP, Heap, Interpretation, eval_formula

from randgen import rand_heap, rand_qf

a, b, c = Const("a"), Const("b"), Const("c")


class TestExamples:
    def test_emp(self):
        r = check(EMP)
        assert isinstance(r, Sat)
        assert r.model.heap == EMPTY_HEAP and r.model.interp.universe_size == 1

    def test_cell_and_emp(self):
        assert isinstance(check(And(pto(a, b), EMP)), Unsat)

    def test_nil_points_to(self):
        assert isinstance(check(pto(NIL, a)), Unsat)

    def test_worked_example_query(self):
        kx, ky, kz = Const("@k_x"), Const("@k_y"), Const("@k_z")
        l1, l2, eu = Const("@l1"), Const("@l2"), Const("@e_u")
        q = QfQuery(
            formula=conj([neq(kx, ky), pto(kx, kz), pto(kx, eu)]),
            constants=(kx, ky, kz, l1, l2),
            cutoffs=(l1, l2),
            witnesses=(eu,),
            inst_terms=(kx, ky, kz, l1, l2),
        )
        r = qf_sat(q)
        assert isinstance(r, Sat)
        i = r.model.interp
        assert i.value(eu) == i.value(kz)

    def test_variables_rejected(self):
        with pytest.raises(ContractViolation):
            check(pto(Var("x"), a))

    def test_sat_models_verify(self):
        f = conj([Not(EMP), Wand(pto(a, b), Not(EMP))])
        r = check(f)
        assert isinstance(r, Sat)
        assert eval_formula(r.model.interp, r.model.heap, f, 1)

    def test_nil_may_be_allocated_unless_forbidden(self):
        f = Not(EMP)
        assert check(f).model.interp.universe_size == 1
        r = check(f, forbid_nil_alloc=True)
        assert r.model.interp.universe_size == 2
        assert r.model.interp.nil not in r.model.heap.dom

    def test_budget(self):
        f = conj([Not(Eq(x1, x2)) for x1, x2 in [(a, b), (b, c), (a, c)]] + [Not(EMP)])
        assert isinstance(check(f, resource_limit=1), ResourceOut)

    def test_minimal_universe(self):
        f = conj([neq(a, b), neq(b, c), neq(a, c), neq(a, NIL), neq(b, NIL), neq(c, NIL)])
        assert check(f).model.interp.universe_size == 4


class TestSymmetryBreak:
    l1, l2 = Const("l1"), Const("l2")

    def interp(self):
        return Interpretation(3, {self.l1: 1, self.l2: 2})

    def test_second_without_first(self):
        assert not symmetry_break([self.l1, self.l2], self.interp(), Heap.of({2: (0,)}))

    def test_neither(self):
        assert symmetry_break([self.l1, self.l2], self.interp(), EMPTY_HEAP)

    def test_both(self):
        assert symmetry_break([self.l1, self.l2], self.interp(), Heap.of({1: (0,), 2: (0,)}))


def _naive_limit(k):
    return 3 if k == 1 else 2


class TestAgainstNaiveEnumerator:
    """Completeness and minimality, compared on universes the naive search can afford."""

    def test_random_ground_formulas(self):
        rng = random.Random(41)
        terms = [a, b, c, NIL]
        counts = {"sat": 0, "unsat_small": 0}
        for _ in range(250):
            k = rng.choice([1, 1, 2])
            f = rand_qf(rng, terms, k, 3, max_measure=3)
            limit = _naive_limit(k)
            naive = naive_min_size(f, k, limit)
            r = check(f, k=k)
            assert not isinstance(r, ResourceOut)
            if naive is not None:
                assert isinstance(r, Sat), f
                assert r.model.interp.universe_size == naive, f
                counts["sat"] += 1
            else:
                assert isinstance(r, Unsat) or r.model.interp.universe_size > limit, f
                counts["unsat_small"] += 1
            if isinstance(r, Sat):
                assert eval_formula(r.model.interp, r.model.heap, f, k)
        assert counts["sat"] > 50 and counts["unsat_small"] > 10


class TestBound:
    def test_models_beyond_the_bound_imply_a_small_one(self):
        """Random models of size in (B, 2B] that satisfy f: the search must still answer sat."""
        rng = random.Random(43)
        hits = 0
        for _ in range(400):
            k = rng.choice([1, 2])
            f = rand_qf(rng, [a, b, NIL], k, 3, generative_wands=True, max_measure=2)
            B = measure(f) + len(constants_of(f) | {NIL}) + 2
            size = rng.randint(B + 1, 2 * B)
            interp = Interpretation(size, {NIL: rng.randrange(size), a: rng.randrange(size), b: rng.randrange(size)})
            named = sorted(interp.values([NIL, a, b]))
            locs = named + rng.sample([l for l in range(size) if l not in named], min(2, size - len(named)))
            heap = rand_heap(rng, locs, range(size), k)
            if eval_formula(interp, heap, f, k):
                hits += 1
                r = check(f, k=k)
                assert isinstance(r, Sat) and r.model.interp.universe_size <= B, f
        assert hits > 50
