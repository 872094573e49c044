"""Satisfiability of ground separation-logic formulas by bounded model search.

Models are searched up to the equivalence that a ground formula cannot see:
constants are grouped into classes (one location per class), a heap is a map
from classes to tuples of classes, plus a number of cells at unnamed
locations whose contents never matter, and tuple components that name no
constant all collapse to one anonymous value ``ANON``.  Universe sizes are
tried in increasing order, so the first model found has a minimal universe.

Pruning relies on a three-valued evaluator: an atom whose constants are not
yet placed, or a spatial atom over a heap that is not yet fixed, evaluates
to ``None``.  When one conjunct is a positive symbolic heap (points-to,
emp, ∗, ∨ and pure side conditions) its disjuncts are used to fix the heap
before constants are placed.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple, Union

from .formula import (
    NIL,
    And,
    Bot,
    Const,
    ContractViolation,
    Emp,
    Eq,
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
    conj,
    constants_of,
    disj,
    free_vars,
    has_quantifier,
    measure,
    strip_double_negation,
)
from .semantics import Heap, Interpretation, Model, eval_formula

ANON = -1
DEFAULT_BUDGET = 10**8


class ResourceLimit(Exception):
    """Raised internally when the step budget runs out."""


@dataclass(frozen=True)
class QfOptions:
    forbid_nil_alloc: bool = False
    resource_limit: int = DEFAULT_BUDGET
    # restrict the heap domain to locations named by constants
    named_domain_only: bool = False
    # every location must be named by one of QfQuery.inst_terms
    cover: bool = False
    # verify Sat answers with the concrete evaluator
    verify: bool = True


@dataclass(frozen=True)
class QfQuery:
    """A ground query; ``witnesses`` adds ``⋀_e ⋁_{t ∈ inst_terms} e ≈ t``."""

    formula: Formula
    constants: Tuple = ()
    cutoffs: Tuple[Const, ...] = ()
    options: QfOptions = QfOptions()
    k: int = 1
    witnesses: Tuple[Const, ...] = ()
    inst_terms: Tuple = ()

    def full_formula(self) -> Formula:
        return conj([self.formula, membership_formula(self.witnesses, self.inst_terms)])


def membership_formula(witnesses: Sequence[Term], terms: Sequence[Term]) -> Formula:
    return conj(disj(Eq(e, t) for t in terms) for e in witnesses)


@dataclass(frozen=True)
class Sat:
    model: Model
    steps: int = 0

    def __bool__(self) -> bool:
        return True


@dataclass(frozen=True)
class Unsat:
    steps: int = 0

    def __bool__(self) -> bool:
        return False


@dataclass(frozen=True)
class ResourceOut:
    steps: int = 0

    def __bool__(self) -> bool:
        return False


QfAnswer = Union[Sat, Unsat, ResourceOut]


def symmetry_break(cutoffs: Sequence[Term], interp: Interpretation, heap: Heap) -> bool:
    """True iff no cut-off is allocated after an unallocated one."""
    seen_free = False
    dom = heap.dom
    for c in cutoffs:
        allocated = interp.value(c) in dom
        if allocated and seen_free:
            return False
        if not allocated:
            seen_free = True
    return True


# ---------------------------------------------------------------------------
# compilation into index-based nodes

# node layouts: (tag, id, ...)
#   ("T"|"F"|"emp", id)  ("eq", id, a, b)  ("pto", id, a, (b...))
#   ("not", id, x)  ("and"|"or"|"sep"|"wand", id, x, y)


class _Compiler:
    def __init__(self, index: Dict):
        self.index = index
        self.ids = itertools.count()
        self.pure: Dict[int, bool] = {}
        # truth depends on the heap domain only, never on cell contents
        self.blind: Dict[int, bool] = {}
        self.consts: Dict[int, frozenset] = {}

    def term(self, t: Term) -> int:
        if isinstance(t, Var):
            raise ContractViolation(f"query is not ground: variable {t}")
        return self.index[t]

    def node(self, f: Formula) -> tuple:
        nid = next(self.ids)
        if isinstance(f, Top):
            n = ("T", nid)
        elif isinstance(f, Bot):
            n = ("F", nid)
        elif isinstance(f, Emp):
            n = ("emp", nid)
        elif isinstance(f, Eq):
            n = ("eq", nid, self.term(f.lhs), self.term(f.rhs))
        elif isinstance(f, PointsTo):
            n = ("pto", nid, self.term(f.loc), tuple(self.term(t) for t in f.data))
        elif isinstance(f, Not):
            a = f.arg
            if isinstance(a, And):
                return self.node(Or(_negate(a.left), _negate(a.right)))
            if isinstance(a, Not):
                return self.node(a.arg)
            x = self.node(a)
            n = ("not", nid, x)
        elif isinstance(f, Implies):
            return self.node(Or(Not(f.left), f.right))
        elif isinstance(f, Wand) and isinstance(f.left, PointsTo) and isinstance(f.right, Bot):
            # t ↦ u −∗ ⊥ holds iff t is allocated or t is nil
            n = ("alloc", nid, self.term(f.left.loc), ())
        elif isinstance(f, Sep) and {type(f.left), type(f.right)} == {PointsTo, Top}:
            cell = f.left if isinstance(f.left, PointsTo) else f.right
            n = ("has", nid, self.term(cell.loc), tuple(self.term(t) for t in cell.data))
        elif isinstance(f, (And, Or, Sep, Wand)):
            tag = {And: "and", Or: "or", Sep: "sep", Wand: "wand"}[type(f)]
            n = (tag, nid, self.node(f.left), self.node(f.right))
        else:
            raise ContractViolation(f"unexpected formula {f!r} in a ground query")
        kids = [x for x in n[2:] if isinstance(x, tuple) and x and isinstance(x[0], str)]
        self.pure[nid] = n[0] in ("T", "F", "eq", "not", "and", "or") and all(self.pure[x[1]] for x in kids)
        if n[0] == "wand":
            self.blind[nid] = self.blind[n[3][1]]  # the premise only ever sees extension cells
        else:
            self.blind[nid] = n[0] in ("T", "F", "eq", "emp", "alloc", "not", "and", "or", "sep") \
                and all(self.blind[x[1]] for x in kids)
        cs = set()
        if n[0] == "eq":
            cs.update(n[2:4])
        elif n[0] in ("pto", "has", "alloc"):
            cs.add(n[2])
            cs.update(n[3])
        for x in kids:
            cs |= self.consts[x[1]]
        self.consts[nid] = frozenset(cs)
        return n


def _heap_free(f: Formula) -> bool:
    """True when f's truth value does not depend on the heap (no emp, ↦, ∗ or −∗)."""
    if isinstance(f, (Top, Bot, Eq)):
        return True
    if isinstance(f, Not):
        return _heap_free(f.arg)
    if isinstance(f, (And, Or)):
        return _heap_free(f.left) and _heap_free(f.right)
    return False


def _sep_top(q: Formula) -> Formula:
    """``q ∗ ⊤`` for an already folded q, pushed through ∨ and pure conjuncts."""
    if _heap_free(q):
        return q
    if isinstance(q, Emp):
        return Top()
    if isinstance(q, Or):
        return Or(_sep_top(q.left), _sep_top(q.right))
    if isinstance(q, Not) and isinstance(q.arg, And):
        return Or(_sep_top(_negate(q.arg.left)), _sep_top(_negate(q.arg.right)))
    if isinstance(q, And) and (_heap_free(q.left) or _heap_free(q.right)):
        p, r = (q.left, q.right) if _heap_free(q.left) else (q.right, q.left)
        return And(p, _sep_top(r))
    return Sep(q, Top())


def fold_constants(f: Formula) -> Formula:
    """Propagate ⊤/⊥ through connectives; ``nil ↦ u`` and ``emp ∧ t ↦ u`` are ⊥, ``t ≈ t`` is ⊤.

    With heap-independent p, ``p ∗ q`` becomes ``p ∧ (q ∗ ⊤)`` (p takes the empty
    part), ``p −∗ q`` becomes ``¬p ∨ q`` when q is heap-independent too, and
    ``t ↦ u −∗ q`` becomes ``q ∨ (t ↦ u −∗ ⊥)``, the latter meaning "t is
    allocated or nil". A pure conjunct p of a wand premise is pulled out as ``¬p ∨ …``.
    """
    if isinstance(f, PointsTo):
        return Bot() if isinstance(f.loc, Nil) else f
    if isinstance(f, Eq):
        return Top() if f.lhs == f.rhs else f
    if isinstance(f, Not):
        a = fold_constants(f.arg)
        if isinstance(a, (Top, Bot)):
            return Bot() if isinstance(a, Top) else Top()
        return Not(a)
    if isinstance(f, Implies):
        return fold_constants(Or(Not(f.left), f.right))
    if not isinstance(f, (And, Or, Sep, Wand)):
        return f
    a, b = fold_constants(f.left), fold_constants(f.right)
    if isinstance(f, And):
        if isinstance(a, Bot) or isinstance(b, Bot) or {type(a), type(b)} == {Emp, PointsTo}:
            return Bot()
        return b if isinstance(a, Top) else a if isinstance(b, Top) else And(a, b)
    if isinstance(f, Or):
        if isinstance(a, Top) or isinstance(b, Top):
            return Top()
        return b if isinstance(a, Bot) else a if isinstance(b, Bot) else Or(a, b)
    if isinstance(f, Sep):
        if isinstance(a, Bot) or isinstance(b, Bot):
            return Bot()
        if isinstance(a, Emp) or isinstance(b, Emp):
            return b if isinstance(a, Emp) else a
        if _heap_free(a) and _heap_free(b):
            return fold_constants(And(a, b))
        if _heap_free(a) or _heap_free(b):
            p, q = (a, b) if _heap_free(a) else (b, a)
            return _sep_top(q) if isinstance(p, Top) else And(p, _sep_top(q))
        return Sep(a, b)
    if _heap_free(a) and _heap_free(b):
        return fold_constants(Or(Not(a), b))
    if isinstance(a, And) and (_heap_free(a.left) or _heap_free(a.right)):
        # a pure side of the premise does not depend on the extension
        p, r = (a.left, a.right) if _heap_free(a.left) else (a.right, a.left)
        return fold_constants(Or(Not(p), Wand(r, b)))
    if isinstance(a, PointsTo) and _heap_free(b) and not isinstance(b, Bot):
        # the single-cell extension exists iff a's address is free and not nil
        return Or(b, Wand(a, Bot()))
    if isinstance(a, Bot) or isinstance(b, Top):
        return Top()
    return b if isinstance(a, Emp) else Wand(a, b)


def _negate(f: Formula) -> Formula:
    return f.arg if isinstance(f, Not) else Not(f)


def _has_wand(node: tuple) -> bool:
    if node[0] == "wand":
        return True
    return any(_has_wand(x) for x in node[2:] if isinstance(x, tuple) and x and isinstance(x[0], str))


def _branches(node: tuple, pure: Dict[int, bool], cap: int = 512) -> Optional[list]:
    """Symbolic-heap disjuncts of a positive spatial formula: [(pure nodes, cells)]."""
    tag = node[0]
    if tag == "F":
        return []
    if tag == "emp":
        return [((), ())]
    if tag == "pto":
        return [((), ((node[2], node[3]),))]
    if tag == "and":
        a, b = node[2], node[3]
        if pure[a[1]] and not pure[b[1]]:
            rest = _branches(b, pure, cap)
            return None if rest is None else [((a,) + lits, cells) for lits, cells in rest]
        if pure[b[1]] and not pure[a[1]]:
            rest = _branches(a, pure, cap)
            return None if rest is None else [((b,) + lits, cells) for lits, cells in rest]
        return None
    if tag == "or":
        a = _branches(node[2], pure, cap)
        b = _branches(node[3], pure, cap) if a is not None else None
        if a is None or b is None or len(a) + len(b) > cap:
            return None
        return a + b
    if tag == "sep":
        a = _branches(node[2], pure, cap)
        b = _branches(node[3], pure, cap) if a is not None else None
        if a is None or b is None or len(a) * len(b) > cap:
            return None
        return [(la + lb, ca + cb) for la, ca in a for lb, cb in b]
    return None


# ---------------------------------------------------------------------------
# three-valued evaluation over abstract heaps


class _Ctx:
    """Evaluation state: a (partial) valuation and a (partial) abstract heap."""

    def __init__(self, search: "_Search", val: List[Optional[int]], c: int, s: Optional[int],
                 heap_known: bool, undecided: frozenset = frozenset(), full: bool = False):
        self.S = search
        self.val = val
        self.c = c
        self.s = s
        self.heap_known = heap_known
        self.undecided = undecided
        self.full = full
        self.nil = val[search.nil_idx]
        self.memo: Dict = {}

    # cells: tuple of (class, values) sorted by class
    def ev(self, node: tuple, cells: tuple, j: int, top: bool = False) -> Optional[bool]:
        key = (node[1], cells, j, top)
        if key in self.memo:
            return self.memo[key]
        r = self._ev(node, cells, j, top)
        self.memo[key] = r
        return r

    def _ev(self, node, cells, j, top):
        tag = node[0]
        val = self.val
        if tag == "T":
            return True
        if tag == "F":
            return False
        if tag == "eq":
            a, b = node[2], node[3]
            if a == b:
                return True
            va, vb = val[a], val[b]
            if va is None or vb is None:
                return None
            return va == vb
        if tag == "not":
            r = self.ev(node[2], cells, j, top)
            return None if r is None else not r
        if tag == "and":
            a = self.ev(node[2], cells, j, top)
            if a is False:
                return False
            b = self.ev(node[3], cells, j, top)
            if b is False:
                return False
            return True if a and b else None
        if tag == "or":
            a = self.ev(node[2], cells, j, top)
            if a is True:
                return True
            b = self.ev(node[3], cells, j, top)
            if b is True:
                return True
            return False if a is False and b is False else None
        if not self.heap_known:
            return None
        undecided = self.undecided if top else frozenset()
        if tag == "emp":
            if cells or j:
                return False
            return None if undecided else True
        if tag == "pto":
            return self._pto(node, cells, j, undecided)
        if tag in ("has", "alloc"):
            return self._contains(node, cells, undecided)
        if undecided:
            if tag == "wand":
                return self._wand_partial(node, cells, j, undecided)
            if tag == "sep" and "T" in (node[2][0], node[3][0]) and self._sep(node, cells, j):
                return True  # q ∗ ⊤ is preserved by adding cells
            return None
        if tag == "sep":
            return self._sep(node, cells, j)
        if tag == "wand":
            return self._wand(node, cells, j)
        raise AssertionError(tag)

    def _pto(self, node, cells, j, undecided):
        if j or len(cells) > 1:
            return False
        val = self.val
        t = val[node[2]]
        if not cells:
            if not undecided or (t is not None and t not in undecided):
                return False
            return None
        (a, vals), = cells
        if a == self.nil:
            return False
        unknown = False
        if t is None:
            unknown = True
        elif t != a:
            return False
        for d, v in zip(node[3], vals):
            if v == ANON:
                return False
            u = val[d]
            if u is None:
                unknown = True
            elif u != v:
                return False
        if unknown or undecided:
            return None
        return True

    def _contains(self, node, cells, undecided):
        t = self.val[node[2]]
        if t is None:
            return None
        alloc = node[0] == "alloc"
        if t == self.nil:
            return alloc
        for a, vals in cells:
            if a == t:
                if alloc:
                    return True
                unknown = False
                for d, v in zip(node[3], vals):
                    u = self.val[d]
                    if v == ANON or (u is not None and u != v):
                        return False
                    unknown = unknown or u is None
                return None if unknown else True
        return None if t in undecided else False

    def _sep(self, node, cells, j):
        left, right = node[2], node[3]
        saw_none = False
        if left[0] == "pto" or right[0] == "pto":
            if left[0] != "pto":
                left, right = right, left
            for i in range(len(cells)):
                r1 = self.ev(left, (cells[i],), 0)
                if r1 is False:
                    continue
                r2 = self.ev(right, cells[:i] + cells[i + 1:], j)
                if r1 and r2:
                    return True
                if r2 is None or r1 is None:
                    saw_none = saw_none or r2 is not False
            return None if saw_none else False
        n = len(cells)
        for mask in range(1 << n):
            c1 = tuple(cells[i] for i in range(n) if mask >> i & 1)
            c2 = tuple(cells[i] for i in range(n) if not mask >> i & 1)
            for j1 in range(j + 1):
                r1 = self.ev(left, c1, j1)
                if r1 is False:
                    continue
                r2 = self.ev(right, c2, j - j1)
                if r1 and r2:
                    return True
                if r2 is not False:
                    saw_none = True
        return None if saw_none else False

    def _wand(self, node, cells, j):
        if not self.full:
            return None
        left, right = node[2], node[3]
        dom = {a for a, _ in cells}
        free = frozenset(a for a in range(self.c) if a not in dom)
        jmax = max(0, (self.s or self.c) - self.c - j)
        anon_ok = self.s is not None and self.s > self.c
        exts = self._extensions(left, free, jmax, anon_ok)
        saw_none = False
        for ext_cells, jx in exts:
            self.S.tick()
            merged = tuple(sorted(cells + ext_cells))
            r = self.ev(right, merged, j + jx)
            if r is False:
                return False
            if r is None:
                saw_none = True
        return None if saw_none else True

    def _wand_partial(self, node, cells, j, undecided):
        """A top-level wand on a heap whose classes in ``undecided`` may still gain cells.

        Only generative premises are handled: their extensions are fixed by the
        valuation, so a candidate whose locations are all decided is either
        already blocked or certainly available in every completion.
        """
        dom = {a for a, _ in cells}
        free = frozenset(a for a in range(self.c) if a not in dom)
        gen = self._generate(node[2], free, 0)
        if gen is None:
            return None
        saw_none = False
        for ext_cells, jx in dict.fromkeys(gen):
            self.S.tick()
            if any(a in undecided for a, _ in ext_cells):
                saw_none = True
                continue
            r = self.ev(node[3], tuple(sorted(cells + ext_cells)), j + jx, top=True)
            if r is False:
                return False
            if r is None:
                saw_none = True
        return None if saw_none else True

    def _extensions(self, node, free, jmax, anon_ok):
        gen = self._generate(node, free, jmax)
        if gen is not None:
            return list(dict.fromkeys(gen))
        values = list(range(self.c)) + ([ANON] if anon_ok else [])
        tuples = list(itertools.product(values, repeat=self.S.k))
        out = []
        order = sorted(free)
        for jx in range(jmax + 1):
            for choice in itertools.product([None] + tuples, repeat=len(order)):
                self.S.tick()
                ext = tuple((a, v) for a, v in zip(order, choice) if v is not None)
                if self.ev(node, ext, jx):
                    out.append((ext, jx))
        return out

    def _generate(self, node, free, jmax):
        tag = node[0]
        if tag == "F":
            return []
        if tag == "emp":
            return [((), 0)]
        if tag == "pto":
            a = self.val[node[2]]
            if a == self.nil or a not in free:
                return []
            return [(((a, tuple(self.val[d] for d in node[3])),), 0)]
        if tag == "sep":
            left = self._generate(node[2], free, jmax)
            if left is None:
                return None
            out = []
            for c1, j1 in left:
                right = self._generate(node[3], free - {a for a, _ in c1}, jmax - j1)
                if right is None:
                    return None
                out.extend((tuple(sorted(c1 + c2)), j1 + j2) for c2, j2 in right)
            return out
        if tag == "and":
            pure = self.S.compiler.pure
            for a, b in ((node[2], node[3]), (node[3], node[2])):
                if pure[a[1]]:
                    return self._generate(b, free, jmax) if self.ev(a, (), 0) else []
            return None
        if tag == "or":
            a = self._generate(node[2], free, jmax)
            b = self._generate(node[3], free, jmax) if a is not None else None
            return None if b is None else a + b
        return None


# ---------------------------------------------------------------------------
# the search


class _Found(Exception):
    def __init__(self, model: Model):
        self.model = model


class _Search:
    def __init__(self, q: QfQuery):
        self.q = q
        self.opts = q.options
        self.k = q.k
        formula = fold_constants(strip_double_negation(q.formula))
        if has_quantifier(q.formula) or free_vars(q.formula):
            raise ContractViolation("qf_sat needs a ground, quantifier-free formula")
        symbols: Dict = {NIL: None}
        for c in q.constants:
            symbols[c] = None
        for c in sorted(constants_of(q.formula), key=lambda c: c.name):
            symbols[c] = None
        for c in tuple(q.witnesses) + tuple(q.inst_terms) + tuple(q.cutoffs):
            symbols[c] = None
        self.symbols = list(symbols)
        self.index = {s: i for i, s in enumerate(self.symbols)}
        self.nil_idx = self.index[NIL]
        self.compiler = _Compiler(self.index)
        parts: List[Formula] = []

        def flatten(g: Formula) -> None:
            if isinstance(g, And):
                flatten(g.left)
                flatten(g.right)
            elif isinstance(g, Not) and isinstance(g.arg, Or):
                flatten(_negate(g.arg.left))
                flatten(_negate(g.arg.right))
            elif isinstance(g, Not) and isinstance(g.arg, Not):
                flatten(g.arg.arg)
            elif not isinstance(g, Top):
                parts.append(g)

        flatten(formula)
        self.conjuncts = [self.compiler.node(p) for p in parts]
        self.sensitive = any(_has_wand(n) for n in self.conjuncts)
        self.measure = measure(formula) if parts else 0
        self.witnesses = [self.index[e] for e in q.witnesses]
        self.inst_terms = [self.index[t] for t in q.inst_terms]
        self.inst_set = set(self.inst_terms)
        self.cutoffs = [self.index[c] for c in q.cutoffs]
        self.steps = 0
        self.budget = self.opts.resource_limit
        self.bound = self.measure + len(self.symbols) + 2

    def tick(self) -> None:
        self.steps += 1
        if self.steps > self.budget:
            raise ResourceLimit()

    # -- entry ---------------------------------------------------------------

    def run(self) -> QfAnswer:
        try:
            model = self._run()
        except ResourceLimit:
            return ResourceOut(self.steps)
        if model is None:
            return Unsat(self.steps)
        if self.opts.verify:
            assert eval_formula(model.interp, model.heap, self.q.full_formula(), self.k), \
                "internal error: qf model does not satisfy the query"
        return Sat(model, self.steps)

    def _run(self) -> Optional[Model]:
        gen = None
        for idx, node in enumerate(self.conjuncts):
            br = _branches(node, self.compiler.pure)
            if br is not None and (gen is None or len(br) < len(gen[1])):
                gen = (idx, br)
        plans = []
        if gen is None:
            plans.append((list(self.conjuncts), None))
        else:
            idx, branches = gen
            rest = [n for i, n in enumerate(self.conjuncts) if i != idx]
            for lits, cells in branches:
                plans.append((list(lits) + rest, cells))
        for s in range(1, self.bound + 1):
            for conjuncts, cells in plans:
                model = self._search_size(conjuncts, cells, s)
                if model is not None:
                    return model
        return None

    # -- constant placement ------------------------------------------------------

    def _search_size(self, conjuncts, cells, s) -> Optional[Model]:
        consts = self.compiler.consts
        occ: Dict[int, List[int]] = {i: [] for i in range(len(self.symbols))}
        for ci, node in enumerate(conjuncts):
            for x in consts[node[1]]:
                occ[x].append(ci)
        order: List[int] = [self.nil_idx]
        if cells is not None:
            for a, vals in cells:
                order.append(a)
                order.extend(vals)
        for node in conjuncts:
            order.extend(sorted(consts[node[1]]))
        order.extend(self.witnesses)
        cell_terms = set()
        if cells is not None:
            for a, vals in cells:
                cell_terms.add(a)
                cell_terms.update(vals)
        order = [x for x in dict.fromkeys(order) if x == self.nil_idx or x in cell_terms or occ[x]]
        self._plan = (conjuncts, cells, s, occ, order, cell_terms)
        max_need = self._max_need(s)
        val: List[Optional[int]] = [None] * len(self.symbols)
        status = [False] * len(conjuncts)
        try:
            self._place(val, 0, status, max_need)
        except _Found as found:
            return found.model
        return None

    def _max_need(self, s) -> int:
        if self.sensitive:
            return s  # any class count up to s
        if self.opts.cover or self._plan[1] is not None:
            return 0
        jcap = 0 if self.opts.named_domain_only else self.measure
        return max(jcap, 1)

    def _next_const(self, val, status):
        conjuncts, cells, s, occ, order, cell_terms = self._plan
        for x in order:
            if val[x] is not None:
                continue
            if x == self.nil_idx or x in cell_terms:
                return x
            if any(not status[ci] for ci in occ[x]):
                return x
        return None

    def _heap_known(self, val) -> bool:
        cells = self._plan[1]
        if cells is None:
            return False
        return all(val[a] is not None and all(val[v] is not None for v in vals) for a, vals in cells)

    def _place(self, val, c, status, max_need):
        conjuncts, cells, s, occ, order, cell_terms = self._plan
        x = self._next_const(val, status)
        if x is None:
            self._leaf(val, c, status)
            return
        remaining = sum(1 for y in order if val[y] is None)
        for cls in range(min(c + 1, s)):
            # not enough constants left to reach the target universe size
            if not self.sensitive and max(c, cls + 1) + remaining - 1 + max_need < s:
                continue
            self.tick()
            val[x] = cls
            c2 = max(c, cls + 1)
            new_status = self._update(val, c2, s, status, x)
            if new_status is not None:
                self._place(val, c2, new_status, max_need)
            val[x] = None

    def _update(self, val, c, s, status, x):
        conjuncts, cells, _, occ, order, cell_terms = self._plan
        known = self._heap_known(val)
        heap = self._build(val) if known else None
        if known and heap is False:
            return None
        was_known = known and (x in cell_terms)
        targets = range(len(conjuncts)) if was_known else occ[x]
        ctx = _Ctx(self, val, c, s if self.sensitive else None, heap_known=known)
        new = list(status)
        for ci in targets:
            if new[ci]:
                continue
            r = ctx.ev(conjuncts[ci], heap or (), 0, top=True)
            if r is False:
                return None
            if r:
                new[ci] = True
        return new

    def _build(self, val):
        """Concretise the symbolic cells of the current branch; False on a clash."""
        out = {}
        for a, vals in self._plan[1]:
            cls = val[a]
            if cls == val[self.nil_idx] or cls in out:
                return False
            out[cls] = tuple(val[v] for v in vals)
        return tuple(sorted(out.items()))

    # -- leaves ------------------------------------------------------------------

    def _leaf(self, val, c, status):
        conjuncts, cells, s, occ, order, cell_terms = self._plan
        if cells is not None:
            heap = self._build(val)
            if heap is False:
                return
            if not self.sensitive and c != s:
                return
            ctx = _Ctx(self, val, c, s if self.sensitive else None, heap_known=True, full=True)
            for ci, node in enumerate(conjuncts):
                if not status[ci] and ctx.ev(node, heap, 0, top=True) is not True:
                    return
            self._finish(val, c, s, heap, 0, False)
            return
        if not self._nameable(val, c):
            return
        self._heap_search(val, c, status, s)

    def _nameable(self, val, c) -> bool:
        """Enough unassigned instantiation terms remain to name every class that needs one.

        A necessary condition for :meth:`_complete`, checked before any heap is built.
        """
        named = {val[t] for t in self.inst_terms if val[t] is not None}
        need = {val[e] for e in self.witnesses if val[e] is not None and val[e] not in named}
        if self.opts.cover:
            need.update(x for x in range(c) if x not in named)
        spare = sum(1 for t in dict.fromkeys(self.inst_terms) if val[t] is None)
        return len(need) <= spare

    def _heap_options(self, c, s):
        """(j, anon allowed, anon required) combinations valid for universe size s."""
        opts = self.opts
        if opts.cover:
            return [(0, False, False)] if c == s else []
        if self.sensitive:
            spare = s - c
            jmax = 0 if opts.named_domain_only else spare
            return [(j, spare > 0, False) for j in range(jmax + 1)]
        need = s - c
        jcap = 0 if opts.named_domain_only else self.measure
        if need == 0:
            return [(0, False, False)]
        out = []
        if need <= jcap:
            out.append((need, True, False))
        if need == 1:
            out.append((0, True, True))
        return out

    def _heap_search(self, val, c, status, s):
        conjuncts = self._plan[0]
        forbid_nil = self.opts.forbid_nil_alloc
        nil = val[self.nil_idx]
        for j, anon_ok, anon_required in self._heap_options(c, s):
            values = list(range(c)) + ([ANON] if anon_ok else [])
            tuples = list(itertools.product(values, repeat=self.k))
            # one content per cell suffices while only the domain matters
            samples = [tuples[0]] + ([(ANON,) * self.k] if anon_required else [])
            todo = [i for i, st in enumerate(status) if not st]
            blind = self.compiler.blind
            contents = self._content_options(val, [conjuncts[i] for i in todo], c, tuples, samples)

            def rec(cls: int, cells: tuple, pending: List[int]):
                undecided = frozenset(range(cls, c))
                full = cls == c
                ctx = _Ctx(self, val, c, s if self.sensitive else None, heap_known=True,
                           undecided=undecided, full=full)
                still = []
                for ci in pending:
                    r = ctx.ev(conjuncts[ci], cells, j, top=True)
                    if r is False:
                        return
                    if r is None:
                        still.append(ci)
                if not self._sb_partial(val, cells, cls):
                    return
                if full:
                    if still:
                        return
                    if anon_required and not any(ANON in v for _, v in cells):
                        return
                    self._finish(val, c, s, cells, j, any(ANON in v for _, v in cells))
                    return
                self.tick()
                rec(cls + 1, cells, still)
                if forbid_nil and cls == nil:
                    return
                options = samples if all(blind[conjuncts[ci][1]] for ci in still) else contents[cls]
                for v in options:
                    self.tick()
                    rec(cls + 1, cells + ((cls, v),), still)

            rec(0, (), todo)

    def _content_options(self, val, nodes, c, tuples, samples) -> List[list]:
        """Per class, the contents worth trying.

        Cell contents are only ever compared against the data of ↦ atoms, so
        beyond the tuples those atoms name at a class, one tuple matching none
        of them stands for all the others.
        """
        named: List[set] = [set() for _ in range(c)]
        stack = list(nodes)
        while stack:
            n = stack.pop()
            if n[0] in ("pto", "has"):
                a = val[n[2]]
                data = tuple(val[d] for d in n[3])
                if a is not None and a < c and None not in data:
                    named[a].add(data)
            else:
                stack.extend(x for x in n[2:] if isinstance(x, tuple) and x and isinstance(x[0], str))
        out = []
        for cls in range(c):
            other = next((t for t in tuples if t not in named[cls] and ANON not in t), None)
            if other is None:
                other = next((t for t in tuples if ANON in t), None)
            opts = [t for t in tuples if t in named[cls]]
            opts += [t for t in [other] + samples[1:] if t is not None and t not in opts]
            out.append(opts)
        return out

    def _sb_partial(self, val, cells, decided_upto) -> bool:
        """Symmetry breaking among the cut-offs whose classes are decided."""
        dom = {a for a, _ in cells}
        seen_free = False
        for x in self.cutoffs:
            cls = val[x]
            if cls is None:
                continue  # free cut-off, settled in _finish
            if cls >= decided_upto:
                return True
            allocated = cls in dom
            if allocated and seen_free:
                return False
            if not allocated:
                seen_free = True
        return True

    # -- completing a model ----------------------------------------------------------

    def _finish(self, val, c, s, cells, j, anon_used):
        full = self._complete(val, c, cells)
        if full is None:
            return
        size = s if self.sensitive else c + max(j, 1 if anon_used else 0)
        raise _Found(self._concretise(full, c, size, cells, j))

    def _complete(self, val, c, cells) -> Optional[List[int]]:
        """Place the constants left unassigned so that membership, cover and symmetry hold."""
        val = list(val)
        dom = {a for a, _ in cells}
        free = [i for i, v in enumerate(val) if v is None]
        free_set = set(free)
        nil = val[self.nil_idx]
        # classes that must be named by an instantiation term
        need: List[int] = []
        for e in self.witnesses:
            if e in free_set:
                continue
            if any(val[t] == val[e] for t in self.inst_terms if t not in free_set):
                continue
            if val[e] not in need:
                need.append(val[e])
        if self.opts.cover:
            named = {val[t] for t in self.inst_terms if t not in free_set}
            need.extend(x for x in range(c) if x not in named and x not in need)
        free_cut = [x for x in self.cutoffs if x in free_set]
        free_other = [x for x in free if x in self.inst_set and x not in self.cutoffs]
        assign: Dict[int, int] = {}
        for x, cls in zip(free_other, need):
            assign[x] = cls
        rest = need[len(free_other):]
        if rest or (self.cutoffs and free_cut):
            placed = self._place_cutoffs(val, dom, rest, free_set, c)
            if placed is None:
                return None
            assign.update(placed)
        default = nil
        for x in free:
            val[x] = assign.get(x, default)
        # witnesses left free take the value of some instantiation term
        for e in self.witnesses:
            if e in free_set and self.inst_terms:
                val[e] = val[self.inst_terms[0]]
        return val

    def _place_cutoffs(self, val, dom, rest, free_set, c) -> Optional[Dict[int, int]]:
        positions = self.cutoffs
        if not positions:
            return None if rest else {}
        alloc_cls = sorted(dom)
        unalloc_cls = [x for x in range(c) if x not in dom]
        r_alloc = [x for x in rest if x in dom]
        r_unalloc = [x for x in rest if x not in dom]
        for T in range(len(positions), -1, -1):
            ok = True
            fa, fu = [], []
            for pos, x in enumerate(positions):
                if x in free_set:
                    (fa if pos < T else fu).append(x)
                else:
                    allocated = val[x] in dom
                    if allocated != (pos < T):
                        ok = False
                        break
            if not ok or len(r_alloc) > len(fa) or len(r_unalloc) > len(fu):
                continue
            if len(fa) > len(r_alloc) and not alloc_cls:
                continue
            if len(fu) > len(r_unalloc) and not unalloc_cls:
                continue
            out = {}
            for i, x in enumerate(fa):
                out[x] = r_alloc[i] if i < len(r_alloc) else (r_alloc[0] if r_alloc else alloc_cls[0])
            for i, x in enumerate(fu):
                out[x] = r_unalloc[i] if i < len(r_unalloc) else (r_unalloc[0] if r_unalloc else unalloc_cls[0])
            return out
        return None

    def _concretise(self, val, c, size, cells, j) -> Model:
        anon_loc = c
        heap = {}
        for a, vals in cells:
            heap[a] = tuple(anon_loc if v == ANON else v for v in vals)
        for i in range(j):
            heap[c + i] = (anon_loc,) * self.k
        consts = {sym: val[i] for i, sym in enumerate(self.symbols)}
        return Model(Interpretation(size, consts), Heap.of(heap))


def qf_sat(q: QfQuery) -> QfAnswer:
    """Decide a ground query; Sat carries a model of minimal universe size."""
    return _Search(q).run()


def check(formula: Formula, k: int = 1, **options) -> QfAnswer:
    """Convenience wrapper around :func:`qf_sat`."""
    return qf_sat(QfQuery(formula=formula, k=k, options=QfOptions(**options)))
