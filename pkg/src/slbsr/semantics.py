"""Finite interpretations, heaps and the satisfaction relation.

Locations are the integers ``0 .. universe_size-1``.  Everything here works on
concrete models and enumerates sub-heaps and heap extensions explicitly, so it
serves as the ground truth the solver's own (abstract) evaluator is checked
against.  The small-model machinery (``eq_mod_S``, ``prun``, ``heap_equiv``,
``shrink_heap``) follows the usual definitions for heaps over k-tuples.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Dict, FrozenSet, Iterable, Iterator, Mapping, Optional, Sequence, Set, Tuple

from .formula import (
    NIL,
    And,
    Bot,
    Const,
    ContractViolation,
    Emp,
    Eq,
    Exists,
    Forall,
    Formula,
    Implies,
    Nil,
    Not,
    Or,
    PointsTo,
    Sep,
    Term,
    Top,
    Var,
    Wand,
    is_pure,
)

Loc = int
Cells = Dict[Loc, Tuple[Loc, ...]]


@dataclass(frozen=True)
class Interpretation:
    universe_size: int
    const_val: Mapping  # Const | Nil -> Loc
    var_val: Mapping = field(default_factory=dict)  # Var -> Loc

    def __post_init__(self) -> None:
        if self.universe_size < 1:
            raise ContractViolation("universe must be non-empty")
        const_val = dict(self.const_val)
        const_val.setdefault(NIL, 0)
        object.__setattr__(self, "const_val", const_val)
        object.__setattr__(self, "var_val", dict(self.var_val))
        for sym, loc in list(const_val.items()) + list(self.var_val.items()):
            if not 0 <= loc < self.universe_size:
                raise ContractViolation(f"{sym} is mapped outside the universe")

    @property
    def nil(self) -> Loc:
        return self.const_val[NIL]

    def value(self, t: Term) -> Loc:
        try:
            if isinstance(t, Var):
                return self.var_val[t]
            return self.const_val[t]
        except KeyError:
            raise ContractViolation(f"symbol {t} is not assigned") from None

    def values(self, symbols: Iterable[Term]) -> Set[Loc]:
        return {self.value(s) for s in symbols}

    def with_var(self, v: Var, loc: Loc) -> "Interpretation":
        return Interpretation(self.universe_size, self.const_val, {**self.var_val, v: loc})

    def with_vars(self, assignment: Mapping[Var, Loc]) -> "Interpretation":
        return Interpretation(self.universe_size, self.const_val, {**self.var_val, **assignment})


@dataclass(frozen=True)
class Heap:
    cells: Tuple[Tuple[Loc, Tuple[Loc, ...]], ...] = ()

    def __post_init__(self) -> None:
        cells = self.cells
        if isinstance(cells, Mapping):
            cells = cells.items()
        object.__setattr__(self, "cells", tuple(sorted((int(l), tuple(v)) for l, v in cells)))
        if len({l for l, _ in self.cells}) != len(self.cells):
            raise ContractViolation("duplicate heap location")

    @classmethod
    def of(cls, mapping: Mapping[Loc, Sequence[Loc]]) -> "Heap":
        return cls(tuple((l, tuple(v)) for l, v in mapping.items()))

    def as_dict(self) -> Cells:
        return dict(self.cells)

    @property
    def dom(self) -> FrozenSet[Loc]:
        return frozenset(l for l, _ in self.cells)

    def __len__(self) -> int:
        return len(self.cells)

    def __getitem__(self, loc: Loc) -> Tuple[Loc, ...]:
        return self.as_dict()[loc]

    def __contains__(self, loc: Loc) -> bool:
        return loc in self.dom

    def check(self, universe_size: int) -> None:
        for l, v in self.cells:
            if not 0 <= l < universe_size or any(not 0 <= x < universe_size for x in v):
                raise ContractViolation("heap mentions a location outside the universe")


EMPTY_HEAP = Heap()


@dataclass(frozen=True)
class Model:
    interp: Interpretation
    heap: Heap

    def dump(self) -> str:
        """Text dump: ``universe``, ``const`` and ``heap`` lines."""
        lines = [f"universe {self.interp.universe_size}"]
        consts = sorted(self.interp.const_val.items(), key=lambda kv: (not isinstance(kv[0], Nil), str(kv[0])))
        for c, loc in consts:
            lines.append(f"const {c} = {loc}")
        for l, v in self.heap.cells:
            lines.append(f"heap {l} -> ({','.join(map(str, v))})")
        return "\n".join(lines)


def parse_model_dump(text: str) -> Model:
    """Inverse of :meth:`Model.dump` (constant names are taken as printed)."""
    size = None
    consts: Dict = {}
    cells: Cells = {}
    for raw in text.splitlines():
        line = raw.strip()
        if not line:
            continue
        head, _, rest = line.partition(" ")
        if head == "universe":
            size = int(rest)
        elif head == "const":
            name, _, loc = rest.partition("=")
            name = name.strip()
            consts[NIL if name == "nil" else Const(name)] = int(loc)
        elif head == "heap":
            loc, _, tup = rest.partition("->")
            cells[int(loc)] = tuple(int(x) for x in tup.strip().strip("()").split(","))
        else:
            raise ValueError(f"bad model line: {raw!r}")
    if size is None:
        raise ValueError("model dump without a universe line")
    return Model(Interpretation(size, consts), Heap.of(cells))


# ---------------------------------------------------------------------------
# satisfaction


def _subheaps(cells: Cells) -> Iterator[Tuple[Cells, Cells]]:
    locs = sorted(cells)
    for mask in range(1 << len(locs)):
        left = {l: cells[l] for i, l in enumerate(locs) if mask >> i & 1}
        right = {l: cells[l] for i, l in enumerate(locs) if not mask >> i & 1}
        yield left, right


def _all_heaps(locs: Sequence[Loc], size: int, k: int) -> Iterator[Cells]:
    tuples = list(itertools.product(range(size), repeat=k))
    for choice in itertools.product([None] + tuples, repeat=len(locs)):
        yield {l: v for l, v in zip(locs, choice) if v is not None}


class _Evaluator:
    def __init__(self, interp: Interpretation, k: Optional[int]):
        self.interp = interp
        self.k = k

    def term(self, t: Term, env: Mapping[Var, Loc]) -> Loc:
        if isinstance(t, Var) and t in env:
            return env[t]
        return self.interp.value(t)

    def holds(self, f: Formula, h: Cells, env: Mapping[Var, Loc]) -> bool:
        if isinstance(f, Top):
            return True
        if isinstance(f, Bot):
            return False
        if isinstance(f, Eq):
            return self.term(f.lhs, env) == self.term(f.rhs, env)
        if isinstance(f, Emp):
            return not h
        if isinstance(f, PointsTo):
            loc = self.term(f.loc, env)
            val = tuple(self.term(t, env) for t in f.data)
            return loc != self.interp.nil and len(h) == 1 and h.get(loc) == val
        if isinstance(f, Not):
            return not self.holds(f.arg, h, env)
        if isinstance(f, And):
            return self.holds(f.left, h, env) and self.holds(f.right, h, env)
        if isinstance(f, Or):
            return self.holds(f.left, h, env) or self.holds(f.right, h, env)
        if isinstance(f, Implies):
            return not self.holds(f.left, h, env) or self.holds(f.right, h, env)
        if isinstance(f, Sep):
            return any(
                self.holds(f.left, h1, env) and self.holds(f.right, h2, env) for h1, h2 in _subheaps(h)
            )
        if isinstance(f, Wand):
            for ext in self.extensions(f.left, h, env):
                if not self.holds(f.right, {**h, **ext}, env):
                    return False
            return True
        if isinstance(f, Exists):
            return any(
                self.holds(f.body, h, {**env, f.var: l}) for l in range(self.interp.universe_size)
            )
        if isinstance(f, Forall):
            return all(
                self.holds(f.body, h, {**env, f.var: l}) for l in range(self.interp.universe_size)
            )
        raise TypeError(f"cannot evaluate {f!r}")

    def extensions(self, f: Formula, h: Cells, env: Mapping[Var, Loc]) -> Iterator[Cells]:
        """All heaps disjoint from h that satisfy f (duplicates possible)."""
        free = [l for l in range(self.interp.universe_size) if l not in h]
        gen = self._generate(f, frozenset(free), env)
        if gen is not None:
            seen = set()
            for cells in gen:
                key = tuple(sorted(cells.items()))
                if key not in seen:
                    seen.add(key)
                    yield cells
            return
        k = self.k if self.k is not None else self._arity(h)
        for cells in _all_heaps(free, self.interp.universe_size, k):
            if self.holds(f, cells, env):
                yield cells

    def _arity(self, h: Cells) -> int:
        for v in h.values():
            return len(v)
        raise ContractViolation("heap arity unknown; pass k explicitly")

    def _generate(self, f: Formula, free: FrozenSet[Loc], env) -> Optional[list]:
        """Enumerate the models of f within ``free`` directly, or None if f is not of a simple shape."""
        if isinstance(f, Bot):
            return []
        if isinstance(f, Emp):
            return [{}]
        if isinstance(f, PointsTo):
            loc = self.term(f.loc, env)
            if loc == self.interp.nil or loc not in free:
                return []
            return [{loc: tuple(self.term(t, env) for t in f.data)}]
        if isinstance(f, Sep):
            left = self._generate(f.left, free, env)
            if left is None:
                return None
            out = []
            for h1 in left:
                right = self._generate(f.right, free - set(h1), env)
                if right is None:
                    return None
                out.extend({**h1, **h2} for h2 in right)
            return out
        if isinstance(f, And):
            for a, b in ((f.left, f.right), (f.right, f.left)):
                if is_pure(a):
                    return self._generate(b, free, env) if self.holds(a, {}, env) else []
            return None
        if isinstance(f, Or):
            a = self._generate(f.left, free, env)
            b = self._generate(f.right, free, env)
            return None if a is None or b is None else a + b
        if isinstance(f, Not) and isinstance(f.arg, And):
            a, b = f.arg.left, f.arg.right
            if isinstance(a, Not) and isinstance(b, Not):
                return self._generate(Or(a.arg, b.arg), free, env)
        return None


def eval_formula(interp: Interpretation, heap, f: Formula, k: Optional[int] = None) -> bool:
    """Decide ``interp, heap ⊨ f``; quantifiers range over the whole universe."""
    cells = heap.as_dict() if isinstance(heap, Heap) else dict(heap)
    if k is None:
        k = next((len(v) for v in cells.values()), None)
        if k is None:
            k = _formula_arity(f)
    return _Evaluator(interp, k).holds(f, cells, {})


def _formula_arity(f: Formula) -> Optional[int]:
    from .formula import subformulas

    for g in subformulas(f):
        if isinstance(g, PointsTo):
            return len(g.data)
    return None


# ---------------------------------------------------------------------------
# small-model machinery


def eq_mod_S(v: Sequence[Loc], w: Sequence[Loc], S: Iterable[Loc]) -> bool:
    if len(v) != len(w):
        raise ValueError("tuples of different arity")
    S = set(S)
    for a, b in zip(v, w):
        if a in S:
            if a != b:
                return False
        elif b in S:
            return False
    return True


def prun(v: Sequence[Loc], S: Iterable[Loc], loc: Loc) -> Tuple[Loc, ...]:
    S = set(S)
    return tuple(x if x in S else loc for x in v)


@dataclass(frozen=True)
class EquivParams:
    n: int
    X: FrozenSet  # symbols: Var | Const | Nil
    S: FrozenSet[Loc] = frozenset()


def heap_equiv(interp: Interpretation, params: EquivParams, h: Heap, h2: Heap) -> bool:
    visible = interp.values(params.X)
    d1, d2 = h.dom, h2.dom
    if visible & d1 != visible & d2:
        return False
    c1, c2 = h.as_dict(), h2.as_dict()
    S = visible | set(params.S)
    if any(not eq_mod_S(c1[l], c2[l], S) for l in visible & d1):
        return False
    inv1, inv2 = len(d1 - visible), len(d2 - visible)
    if inv1 < params.n and inv1 != inv2:
        return False
    if inv1 >= params.n and inv2 < params.n:
        return False
    return True


def shrink_heap(interp: Interpretation, h: Heap, n: int, X: Iterable, L: Iterable[Loc], v: Loc) -> Heap:
    """Keep the visible cells and at most n invisible ones (moved onto L), pruning values to v."""
    X = frozenset(X)
    L = sorted(set(L))
    visible = interp.values(X)
    if set(L) & visible:
        raise ContractViolation("L must avoid the locations of X")
    if len(L) != n:
        raise ContractViolation("|L| must equal n")
    if v in visible or v == interp.nil or v in L:
        raise ContractViolation("v must be outside I(X), nil and L")
    S = visible | set(L)
    cells = h.as_dict()
    out: Cells = {l: prun(val, S, v) for l, val in cells.items() if l in visible}
    invisible = sorted(l for l in cells if l not in visible)
    for src, dst in zip(invisible, L):
        out[dst] = prun(cells[src], S, v)
    return Heap.of(out)
