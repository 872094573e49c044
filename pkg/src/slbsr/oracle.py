"""Reference decision procedures by plain enumeration of bounded models.

Nothing here shares code with the ground search in :mod:`slbsr.qf`; all
checks go through :func:`slbsr.semantics.eval_formula`.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterator, List, Optional, Sequence, Tuple, Union

from .formula import NIL, ContractViolation, Formula, PrenexInput, constants_of, forall, is_pure, measure
from .semantics import EMPTY_HEAP, Heap, Interpretation, Model, eval_formula


@dataclass(frozen=True)
class OracleConfig:
    max_universe: Optional[int] = None
    max_cases: int = 2_000_000

    def __post_init__(self) -> None:
        if self.max_universe is not None and self.max_universe < 1:
            raise ContractViolation("max_universe must be positive")


@dataclass(frozen=True)
class OracleSat:
    model: Model
    cases: int = 0

    def __bool__(self) -> bool:
        return True


@dataclass(frozen=True)
class OracleUnsat:
    cases: int = 0

    def __bool__(self) -> bool:
        return False


@dataclass(frozen=True)
class OracleResourceOut:
    cases: int = 0

    def __bool__(self) -> bool:
        return False


OracleAnswer = Union[OracleSat, OracleUnsat, OracleResourceOut]


class _OutOfCases(Exception):
    pass


def canonical_valuations(n: int, size: int) -> Iterator[Tuple[int, ...]]:
    """Restricted growth strings: each new value is one more than the largest so far."""

    def rec(prefix: List[int], top: int) -> Iterator[Tuple[int, ...]]:
        if len(prefix) == n:
            yield tuple(prefix)
            return
        for v in range(min(top + 2, size)):
            prefix.append(v)
            yield from rec(prefix, max(top, v))
            prefix.pop()

    yield from rec([], -1)


def _heaps(size: int, k: int, domain: Sequence[int], anon: Sequence[int]) -> Iterator[dict]:
    """All heaps over ``domain``; anonymous locations are interchangeable, so only
    heaps whose allocated anonymous locations form a prefix of ``anon`` are kept."""
    tuples = list(itertools.product(range(size), repeat=k))
    anon_set = set(anon)
    for choice in itertools.product([None] + tuples, repeat=len(domain)):
        h = {l: v for l, v in zip(domain, choice) if v is not None}
        allocated_anon = [l for l in anon if l in h]
        if allocated_anon != list(anon[: len(allocated_anon)]):
            continue
        if anon_set and not _anon_canonical(h, anon):
            continue
        yield h


def _anon_canonical(h: dict, anon: Sequence[int]) -> bool:
    """Keep one heap per orbit of the permutations of anonymous locations."""
    if len(anon) < 2:
        return True
    key = sorted(h.items())
    for perm in itertools.permutations(anon):
        if list(perm) == list(anon):
            continue
        m = dict(zip(anon, perm))
        image = sorted((m.get(l, l), tuple(m.get(x, x) for x in v)) for l, v in h.items())
        if image < key:
            return False
    return True


def oracle_bound(pi: PrenexInput) -> int:
    fv = len(pi.all_constants()) + 1  # nil
    return measure(pi.matrix) + fv + pi.n + 2


def oracle_solve(pi: PrenexInput, cfg: OracleConfig = OracleConfig(), spare: int = 0) -> OracleAnswer:
    """Search models of ``∀ȳ matrix`` by ascending universe size.

    Heap domains range over named locations and the ``⌊φ⌋ + n`` anonymous
    ones allowed by the small-model bound; one more anonymous location is
    kept free.  ``spare`` adds further locations that are never allocated,
    which approximates an infinite location sort.
    """
    consts = [NIL] + list(pi.all_constants())
    # ∀ distributes over ∧: check cheap conjuncts first, pure ground ones once per valuation
    parts = sorted(pi.conjuncts, key=lambda c: (len(c.variables), not is_pure(c.formula)))
    pure_ground = [c.formula for c in parts if c.ground and is_pure(c.formula)]
    rest = [forall(c.variables, c.formula) for c in parts if not (c.ground and is_pure(c.formula))]
    k = pi.k
    extra = measure(pi.matrix) + pi.n
    bound = cfg.max_universe or oracle_bound(pi)
    cases = 0
    try:
        for size in range(1, bound + spare + 1):
            for vals in canonical_valuations(len(consts), size):
                c = max(vals) + 1
                anon_total = size - c - spare
                if anon_total < 0 or anon_total > extra + 1:
                    continue
                anon = list(range(c, c + min(anon_total, extra)))
                interp = Interpretation(size, dict(zip(consts, vals)))
                if not all(eval_formula(interp, EMPTY_HEAP, f, k) for f in pure_ground):
                    continue
                domain = list(range(c)) + anon
                for h in _heaps(size, k, domain, anon):
                    cases += 1
                    if cases > cfg.max_cases:
                        raise _OutOfCases()
                    heap = Heap.of(h)
                    if all(eval_formula(interp, heap, f, k) for f in rest):
                        return OracleSat(Model(interp, heap), cases)
    except _OutOfCases:
        return OracleResourceOut(cases)
    return OracleUnsat(cases)


def oracle_solve_aleph0(pi: PrenexInput, cfg: OracleConfig = OracleConfig()) -> OracleAnswer:
    """Infinite-sort approximation: every model carries ``⌊φ⌋ + n + 1`` never-allocated spare locations."""
    return oracle_solve(pi, cfg, spare=measure(pi.matrix) + pi.n + 1)


def naive_ground_models(formula: Formula, k: int, max_size: int, constants: Sequence = (),
                        max_cases: int = 5_000_000) -> Iterator[Model]:
    """Every model of a ground formula up to ``max_size``, ascending by size.

    Valuations are canonical (a formula cannot tell isomorphic models apart);
    heaps range over the whole universe without any symmetry reduction.
    """
    consts = list(dict.fromkeys([NIL] + list(constants) + sorted(constants_of(formula), key=lambda c: c.name)))
    cases = 0
    for size in range(1, max_size + 1):
        tuples = list(itertools.product(range(size), repeat=k))
        for vals in canonical_valuations(len(consts), size):
            interp = Interpretation(size, dict(zip(consts, vals)))
            for choice in itertools.product([None] + tuples, repeat=size):
                cases += 1
                if cases > max_cases:
                    raise RuntimeError("naive enumeration budget exceeded")
                heap = Heap.of({l: v for l, v in enumerate(choice) if v is not None})
                if eval_formula(interp, heap, formula, k):
                    yield Model(interp, heap)


def naive_min_size(formula: Formula, k: int, max_size: int, constants: Sequence = ()) -> Optional[int]:
    """Least universe size with a model, or None if there is none up to ``max_size``."""
    for model in naive_ground_models(formula, k, max_size, constants):
        return model.interp.universe_size
    return None
