import itertools
import random

import pytest

from slbsr.formula import (
    EMP,
    NIL,
    And,
    Const,
    ContractViolation,
    Eq,
    Exists,
    Forall,
    FragmentError,
    Not,
    Or,
    Sep,
    Var,
    Wand,
    conj,
    desugar,
    display_name,
    functional_form,
    has_quantifier,
    measure,
    miniscope,
    neq,
    pto,
)
from slbsr.semantics import Heap, Interpretation, eval_formula

from properties import measure_laws
from randgen import rand_qf

x, y, z, u = Var("x"), Var("y"), Var("z"), Var("u")


def core_only(f):
    allowed = {"Top", "Bot", "Eq", "Emp", "PointsTo", "Sep", "Wand", "And", "Not", "Exists"}
    stack = [f]
    while stack:
        g = stack.pop()
        if type(g).__name__ not in allowed:
            return False
        stack.extend(getattr(g, a) for a in ("left", "right", "arg", "body") if hasattr(g, a))
    return True


class TestDesugar:
    def test_or_is_de_morgan(self):
        a, b = Eq(x, y), pto(x, y)
        assert desugar(Or(a, b)) == Not(And(Not(a), Not(b)))

    def test_forall_is_negated_exists(self):
        f = pto(x, y)
        assert desugar(Forall(y, f)) == Not(Exists(y, Not(f)))

    def test_and_unchanged(self):
        a, b = Eq(x, y), EMP
        assert desugar(And(a, b)) == And(a, b)

    def test_result_uses_core_connectives(self):
        rng = random.Random(7)
        for _ in range(200):
            f = rand_qf(rng, [x, y, NIL], 1, 4)
            assert core_only(desugar(f))

    def test_preserves_satisfaction(self):
        rng = random.Random(11)
        terms = [x, y, NIL]
        for _ in range(300):
            f = rand_qf(rng, terms, 1, 3)
            size = rng.randint(1, 3)
            interp = Interpretation(size, {NIL: 0}, {x: rng.randrange(size), y: rng.randrange(size)})
            heap = Heap.of({l: (rng.randrange(size),) for l in range(size) if rng.random() < 0.5})
            assert eval_formula(interp, heap, f, 1) == eval_formula(interp, heap, desugar(f), 1)


class TestMeasure:
    def test_worked_example(self):
        f = conj([neq(x, y), pto(x, z), Not(pto(x, u))])
        assert measure(desugar(f)) == 1

    def test_emp(self):
        assert measure(EMP) == 1

    def test_sep_of_two_cells(self):
        assert measure(Sep(pto(x, y), pto(y, z))) == 2

    def test_pure(self):
        assert measure(Eq(x, y)) == 0

    def test_wand_takes_right(self):
        assert measure(Wand(Sep(pto(x, y), pto(y, z)), EMP)) == 1

    def test_quantifier_rejected(self):
        with pytest.raises(ContractViolation):
            measure(Exists(x, EMP))

    def test_laws_on_random_formulas(self):
        checked, bad = measure_laws()
        assert checked >= 1000 and not bad, bad[:3]


class TestFunctionalForm:
    def test_worked_example(self):
        matrix = conj([neq(x, y), pto(x, z), Not(pto(x, u))])
        pi = functional_form(Exists(x, Exists(y, Exists(z, Forall(u, matrix)))))
        assert [display_name(c.name) for c in pi.skolems] == ["k_x", "k_y", "k_z"]
        assert pi.universals == (u,)
        kx, ky, kz = pi.skolems
        assert pi.matrix == conj([neq(kx, ky), pto(kx, kz), Not(pto(kx, u))])
        assert (pi.m, pi.n, pi.p) == (3, 1, 3)

    def test_skolems_use_reserved_prefix(self):
        pi = functional_form(Exists(x, EMP), constants=(Const("k_x"),))
        assert pi.skolems[0].name.startswith("@")
        assert pi.skolems[0] != Const("k_x")

    def test_quantifier_free(self):
        f = And(Eq(Const("a"), NIL), EMP)
        pi = functional_form(f)
        assert pi.skolems == () and pi.universals == () and pi.matrix == f

    def test_alternation_rejected(self):
        with pytest.raises(FragmentError):
            functional_form(Exists(x, Forall(y, Exists(z, pto(x, y, z)))), k=2)

    def test_negated_forall_becomes_exists(self):
        pi = functional_form(Not(Forall(x, Not(pto(x, x)))))
        assert pi.m == 1 and pi.n == 0 and not has_quantifier(pi.matrix)

    def test_free_variable_rejected(self):
        with pytest.raises(ContractViolation):
            functional_form(pto(x, y))


class TestMiniscope:
    def test_worked_example(self):
        kx, ky, kz = Const("k_x"), Const("k_y"), Const("k_z")
        parts = miniscope(conj([neq(kx, ky), pto(kx, kz), Not(pto(kx, u))]), (u,))
        assert [p.formula for p in parts] == [neq(kx, ky), pto(kx, kz), Not(pto(kx, u))]
        assert [p.ground for p in parts] == [True, True, False]

    def test_single_conjunct(self):
        parts = miniscope(Or(pto(x, y), EMP), (y,))
        assert len(parts) == 1 and parts[0].variables == (y,)

    def test_ground_flag(self):
        c = Const("c")
        parts = miniscope(And(Eq(c, NIL), pto(c, y)), (y,))
        assert [p.ground for p in parts] == [True, False]

    def test_variables_follow_prefix_order(self):
        parts = miniscope(pto(y, x), (x, y))
        assert parts[0].variables == (x, y)

    def test_conjunction_equivalent_on_tiny_models(self):
        rng = random.Random(5)
        c = Const("c")
        for _ in range(100):
            matrix = conj([rand_qf(rng, [c, y, NIL], 1, 2) for _ in range(rng.randint(1, 3))])
            rebuilt = conj([p.formula for p in miniscope(matrix, (y,))])
            for size in (1, 2):
                for cv, yv in itertools.product(range(size), repeat=2):
                    interp = Interpretation(size, {c: cv}, {y: yv})
                    for h in ({}, {0: (size - 1,)}):
                        heap = Heap.of(h)
                        assert eval_formula(interp, heap, matrix, 1) == eval_formula(interp, heap, rebuilt, 1)
