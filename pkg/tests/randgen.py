"""Seeded random formulas, models and a naive evaluator for the test suites."""
from __future__ import annotations

import itertools
import random
from typing import Dict, Optional, Sequence

from slbsr.formula import (
    EMP,
    FALSE,
    NIL,
    TRUE,
    And,
    Emp,
    Eq,
    Exists,
    Forall,
    Formula,
    Implies,
    Bot,
    Not,
    Or,
    PointsTo,
    Sep,
    Top,
    Var,
    Wand,
    exists,
    forall,
)
from slbsr.semantics import Heap, Interpretation


def rand_atom(rng: random.Random, terms: Sequence, k: int) -> Formula:
    r = rng.random()
    if r < 0.35:
        return Eq(rng.choice(terms), rng.choice(terms))
    if r < 0.8:
        return PointsTo(rng.choice(terms), tuple(rng.choice(terms) for _ in range(k)))
    if r < 0.92:
        return EMP
    return rng.choice([TRUE, FALSE])


def rand_generative(rng: random.Random, terms: Sequence, k: int, depth: int) -> Formula:
    """Positive symbolic heaps: the shapes usable as wand premises in the shrink tests."""
    if depth <= 0 or rng.random() < 0.4:
        return rng.choice([EMP, PointsTo(rng.choice(terms), tuple(rng.choice(terms) for _ in range(k)))])
    r = rng.random()
    if r < 0.4:
        return Sep(rand_generative(rng, terms, k, depth - 1), rand_generative(rng, terms, k, depth - 1))
    if r < 0.7:
        return Or(rand_generative(rng, terms, k, depth - 1), rand_generative(rng, terms, k, depth - 1))
    return And(Eq(rng.choice(terms), rng.choice(terms)), rand_generative(rng, terms, k, depth - 1))


def rand_qf(rng: random.Random, terms: Sequence, k: int, depth: int, wand: bool = True,
            generative_wands: bool = False, max_measure: Optional[int] = None) -> Formula:
    """A random quantifier-free formula of nesting depth at most ``depth``."""
    from slbsr.formula import measure

    while True:
        f = _rand_qf(rng, terms, k, depth, wand, generative_wands)
        if max_measure is None or measure(f) <= max_measure:
            return f


def _rand_qf(rng, terms, k, depth, wand, generative_wands) -> Formula:
    if depth <= 0 or rng.random() < 0.25:
        return rand_atom(rng, terms, k)
    ops = ["and", "or", "not", "sep", "not", "impl"] + (["wand"] if wand else [])
    op = rng.choice(ops)
    sub = lambda: _rand_qf(rng, terms, k, depth - 1, wand, generative_wands)
    if op == "not":
        return Not(sub())
    if op == "wand":
        left = rand_generative(rng, terms, k, depth - 1) if generative_wands else sub()
        return Wand(left, sub())
    cls = {"and": And, "or": Or, "sep": Sep, "impl": Implies}[op]
    return cls(sub(), sub())


def rand_interp(rng: random.Random, size: int, consts: Sequence) -> Interpretation:
    return Interpretation(size, {c: rng.randrange(size) for c in [NIL, *consts]})


def rand_heap(rng: random.Random, locs: Sequence[int], values: Sequence[int], k: int, p: float = 0.5) -> Heap:
    cells = {}
    for l in locs:
        if rng.random() < p:
            cells[l] = tuple(rng.choice(values) for _ in range(k))
    return Heap.of(cells)


def rand_bsr(rng: random.Random, k: int, n_ex: int, n_all: int, depth: int,
             max_measure: int = 2, wand: bool = True) -> Formula:
    """A random ∃*∀* sentence."""
    xs = [Var(f"x{i}") for i in range(n_ex)]
    ys = [Var(f"y{i}") for i in range(n_all)]
    terms = xs + ys + [NIL]
    matrix = rand_qf(rng, terms, k, depth, wand=wand, generative_wands=True, max_measure=max_measure)
    return exists(xs, forall(ys, matrix))


# ---------------------------------------------------------------------------
# naive reference semantics: explicit partitions and extensions, no shortcuts


def naive_eval(interp: Interpretation, cells: Dict[int, tuple], f: Formula, k: int,
               env: Optional[dict] = None) -> bool:
    env = env or {}
    size = interp.universe_size

    def val(t):
        return env[t] if isinstance(t, Var) and t in env else interp.value(t)

    if isinstance(f, Top):
        return True
    if isinstance(f, Bot):
        return False
    if isinstance(f, Eq):
        return val(f.lhs) == val(f.rhs)
    if isinstance(f, Emp):
        return cells == {}
    if isinstance(f, PointsTo):
        return val(f.loc) != interp.nil and cells == {val(f.loc): tuple(val(t) for t in f.data)}
    if isinstance(f, Not):
        return not naive_eval(interp, cells, f.arg, k, env)
    if isinstance(f, And):
        return naive_eval(interp, cells, f.left, k, env) and naive_eval(interp, cells, f.right, k, env)
    if isinstance(f, Or):
        return naive_eval(interp, cells, f.left, k, env) or naive_eval(interp, cells, f.right, k, env)
    if isinstance(f, Implies):
        return (not naive_eval(interp, cells, f.left, k, env)) or naive_eval(interp, cells, f.right, k, env)
    if isinstance(f, Sep):
        locs = list(cells)
        for bits in itertools.product([0, 1], repeat=len(locs)):
            h1 = {l: cells[l] for l, b in zip(locs, bits) if b}
            h2 = {l: cells[l] for l, b in zip(locs, bits) if not b}
            if naive_eval(interp, h1, f.left, k, env) and naive_eval(interp, h2, f.right, k, env):
                return True
        return False
    if isinstance(f, Wand):
        free = [l for l in range(size) if l not in cells]
        tuples = list(itertools.product(range(size), repeat=k))
        for choice in itertools.product([None] + tuples, repeat=len(free)):
            ext = {l: v for l, v in zip(free, choice) if v is not None}
            if naive_eval(interp, ext, f.left, k, env) and not naive_eval(interp, {**cells, **ext}, f.right, k, env):
                return False
        return True
    if isinstance(f, Exists):
        return any(naive_eval(interp, cells, f.body, k, {**env, f.var: l}) for l in range(size))
    if isinstance(f, Forall):
        return all(naive_eval(interp, cells, f.body, k, {**env, f.var: l}) for l in range(size))
    raise TypeError(f)
