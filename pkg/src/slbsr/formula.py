"""Terms and formulas of separation logic over an uninterpreted location sort.

Locations have sort ``U``; heap cells store ``k``-tuples of locations.  The
module also provides the syntactic machinery used by the solver: desugaring
of derived connectives, the invisible-location measure, prenexing into the
``exists* forall*`` shape, the functional (Skolem) form and miniscoping.

Names that the library invents (Skolem constants, cut-offs, witnesses,
renamed bound variables) live in a reserved namespace starting with ``@`` so
they can never clash with identifiers accepted by the parser.  ``str()``
drops the ``@`` for display.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Dict, Iterable, Iterator, List, Sequence, Tuple, Union

RESERVED = "@"


class FragmentError(ValueError):
    """The input is not in the exists*-forall* fragment."""


class ContractViolation(ValueError):
    """A documented precondition of a library function was violated."""


def display_name(name: str) -> str:
    return name[len(RESERVED):] if name.startswith(RESERVED) else name


# ---------------------------------------------------------------------------
# sorts


@dataclass(frozen=True)
class Sort:
    kind: str  # "Loc" | "DataTuple" | "Bool"
    k: int = 0

    def __post_init__(self) -> None:
        if self.kind not in ("Loc", "DataTuple", "Bool"):
            raise ValueError(f"unknown sort kind {self.kind!r}")
        if self.kind == "DataTuple" and self.k < 1:
            raise ValueError("DataTuple arity must be >= 1")


LOC = Sort("Loc")
BOOL = Sort("Bool")


def data_sort(k: int) -> Sort:
    return Sort("DataTuple", k)


# ---------------------------------------------------------------------------
# terms


@dataclass(frozen=True)
class Var:
    name: str

    def __str__(self) -> str:
        return display_name(self.name)


@dataclass(frozen=True)
class Const:
    name: str

    def __str__(self) -> str:
        return display_name(self.name)


@dataclass(frozen=True)
class Nil:
    def __str__(self) -> str:
        return "nil"


NIL = Nil()
Term = Union[Var, Const, Nil]
Symbol = Union[Var, Const, Nil]


# ---------------------------------------------------------------------------
# formulas


class Formula:
    __slots__ = ()

    def __and__(self, other: "Formula") -> "Formula":
        return And(self, other)

    def __or__(self, other: "Formula") -> "Formula":
        return Or(self, other)

    def __invert__(self) -> "Formula":
        return Not(self)

    def __mul__(self, other: "Formula") -> "Formula":
        return Sep(self, other)


@dataclass(frozen=True)
class Top(Formula):
    def __str__(self) -> str:
        return "⊤"


@dataclass(frozen=True)
class Bot(Formula):
    def __str__(self) -> str:
        return "⊥"


TRUE = Top()
FALSE = Bot()


@dataclass(frozen=True)
class Eq(Formula):
    lhs: Term
    rhs: Term

    def __str__(self) -> str:
        return f"{self.lhs} ≈ {self.rhs}"


@dataclass(frozen=True)
class Emp(Formula):
    def __str__(self) -> str:
        return "emp"


EMP = Emp()


@dataclass(frozen=True)
class PointsTo(Formula):
    loc: Term
    data: Tuple[Term, ...]

    def __post_init__(self) -> None:
        if not isinstance(self.data, tuple):
            object.__setattr__(self, "data", tuple(self.data))
        if not self.data:
            raise ValueError("points-to needs at least one data component")

    def __str__(self) -> str:
        if len(self.data) == 1:
            return f"{self.loc} ↦ {self.data[0]}"
        return f"{self.loc} ↦ ({', '.join(map(str, self.data))})"


@dataclass(frozen=True)
class Sep(Formula):
    left: Formula
    right: Formula

    def __str__(self) -> str:
        return f"({self.left} ∗ {self.right})"


@dataclass(frozen=True)
class Wand(Formula):
    left: Formula
    right: Formula

    def __str__(self) -> str:
        return f"({self.left} −∗ {self.right})"


@dataclass(frozen=True)
class And(Formula):
    left: Formula
    right: Formula

    def __str__(self) -> str:
        return f"({self.left} ∧ {self.right})"


@dataclass(frozen=True)
class Or(Formula):
    left: Formula
    right: Formula

    def __str__(self) -> str:
        return f"({self.left} ∨ {self.right})"


@dataclass(frozen=True)
class Implies(Formula):
    left: Formula
    right: Formula

    def __str__(self) -> str:
        return f"({self.left} ⇒ {self.right})"


@dataclass(frozen=True)
class Not(Formula):
    arg: Formula

    def __str__(self) -> str:
        if isinstance(self.arg, Eq):
            return f"{self.arg.lhs} ≉ {self.arg.rhs}"
        return f"¬{self.arg}"


@dataclass(frozen=True)
class Exists(Formula):
    var: Var
    body: Formula

    def __str__(self) -> str:
        return f"∃{self.var}. {self.body}"


@dataclass(frozen=True)
class Forall(Formula):
    var: Var
    body: Formula

    def __str__(self) -> str:
        return f"∀{self.var}. {self.body}"


BINARY = (Sep, Wand, And, Or, Implies)
QUANTIFIERS = (Exists, Forall)


def neq(a: Term, b: Term) -> Formula:
    return Not(Eq(a, b))


def pto(loc: Term, *data: Term) -> PointsTo:
    return PointsTo(loc, tuple(data))


def _fold(cls, items: Sequence[Formula], empty: Formula) -> Formula:
    items = list(items)
    if not items:
        return empty
    out = items[-1]
    for f in reversed(items[:-1]):
        out = cls(f, out)
    return out


def conj(items: Iterable[Formula]) -> Formula:
    """Right-folded conjunction; ``⊤`` for no items."""
    return _fold(And, list(items), TRUE)


def disj(items: Iterable[Formula]) -> Formula:
    return _fold(Or, list(items), FALSE)


def sep(items: Iterable[Formula]) -> Formula:
    return _fold(Sep, list(items), EMP)


def exists(vs: Sequence[Var], body: Formula) -> Formula:
    for v in reversed(list(vs)):
        body = Exists(v, body)
    return body


def forall(vs: Sequence[Var], body: Formula) -> Formula:
    for v in reversed(list(vs)):
        body = Forall(v, body)
    return body


def alloc(x: Term, k: int) -> Formula:
    """``x ↦ (x,...,x) −∗ ⊥``: holds exactly when x is in the heap domain."""
    return Wand(PointsTo(x, (x,) * k), FALSE)


# ---------------------------------------------------------------------------
# traversal


def children(f: Formula) -> Tuple[Formula, ...]:
    if isinstance(f, BINARY):
        return (f.left, f.right)
    if isinstance(f, Not):
        return (f.arg,)
    if isinstance(f, QUANTIFIERS):
        return (f.body,)
    return ()


def subformulas(f: Formula) -> Iterator[Formula]:
    stack = [f]
    while stack:
        g = stack.pop()
        yield g
        stack.extend(reversed(children(g)))


def atom_terms(f: Formula) -> Tuple[Term, ...]:
    if isinstance(f, Eq):
        return (f.lhs, f.rhs)
    if isinstance(f, PointsTo):
        return (f.loc,) + f.data
    return ()


def free_symbols(f: Formula) -> set:
    """Free variables together with the constants (and nil) occurring in f."""
    out: set = set()

    def walk(g: Formula, bound: frozenset) -> None:
        if isinstance(g, QUANTIFIERS):
            walk(g.body, bound | {g.var})
            return
        for t in atom_terms(g):
            if not (isinstance(t, Var) and t in bound):
                out.add(t)
        for c in children(g):
            walk(c, bound)

    walk(f, frozenset())
    return out


def free_vars(f: Formula) -> set:
    return {s for s in free_symbols(f) if isinstance(s, Var)}


def constants_of(f: Formula) -> set:
    """Constants of f, excluding nil."""
    return {s for s in free_symbols(f) if isinstance(s, Const)}


def has_quantifier(f: Formula) -> bool:
    return any(isinstance(g, QUANTIFIERS) for g in subformulas(f))


def is_pure(f: Formula) -> bool:
    """True when f mentions no spatial atom (emp, points-to, ∗, −∗)."""
    return not any(isinstance(g, (Emp, PointsTo, Sep, Wand)) for g in subformulas(f))


def substitute(f: Formula, mapping: Dict[Var, Term]) -> Formula:
    """Capture-avoiding only in the sense that bound variables shadow the mapping."""
    if not mapping:
        return f

    def term(t: Term) -> Term:
        return mapping.get(t, t) if isinstance(t, Var) else t

    def go(g: Formula, m: Dict[Var, Term]) -> Formula:
        if isinstance(g, Eq):
            return Eq(term_in(g.lhs, m), term_in(g.rhs, m))
        if isinstance(g, PointsTo):
            return PointsTo(term_in(g.loc, m), tuple(term_in(t, m) for t in g.data))
        if isinstance(g, BINARY):
            return type(g)(go(g.left, m), go(g.right, m))
        if isinstance(g, Not):
            return Not(go(g.arg, m))
        if isinstance(g, QUANTIFIERS):
            if g.var in m:
                m = {v: t for v, t in m.items() if v != g.var}
            return type(g)(g.var, go(g.body, m))
        return g

    def term_in(t: Term, m: Dict[Var, Term]) -> Term:
        return m.get(t, t) if isinstance(t, Var) else t

    return go(f, dict(mapping))


# ---------------------------------------------------------------------------
# desugaring and the measure


def desugar(f: Formula) -> Formula:
    """Rewrite ∨, ⇒ and ∀ into ∧, ¬ and ∃."""
    if isinstance(f, Or):
        return Not(And(Not(desugar(f.left)), Not(desugar(f.right))))
    if isinstance(f, Implies):
        return Not(And(desugar(f.left), Not(desugar(f.right))))
    if isinstance(f, Forall):
        return Not(Exists(f.var, Not(desugar(f.body))))
    if isinstance(f, (Sep, Wand, And)):
        return type(f)(desugar(f.left), desugar(f.right))
    if isinstance(f, Not):
        return Not(desugar(f.arg))
    if isinstance(f, Exists):
        return Exists(f.var, desugar(f.body))
    return f


def measure(f: Formula) -> int:
    """Upper bound on the number of invisible locations f can tell apart."""
    if isinstance(f, Sep):
        return measure(f.left) + measure(f.right)
    if isinstance(f, Wand):
        return measure(f.right)
    if isinstance(f, (And, Or, Implies)):
        return max(measure(f.left), measure(f.right))
    if isinstance(f, Not):
        return measure(f.arg)
    if isinstance(f, (Emp, PointsTo)):
        return 1
    if isinstance(f, QUANTIFIERS):
        raise ContractViolation("measure is only defined on quantifier-free formulas")
    return 0


def strip_double_negation(f: Formula) -> Formula:
    if isinstance(f, Not):
        inner = strip_double_negation(f.arg)
        if isinstance(inner, Not):
            return inner.arg
        return Not(inner)
    if isinstance(f, BINARY):
        return type(f)(strip_double_negation(f.left), strip_double_negation(f.right))
    if isinstance(f, QUANTIFIERS):
        return type(f)(f.var, strip_double_negation(f.body))
    return f


# ---------------------------------------------------------------------------
# prenexing


class _Names:
    def __init__(self, taken: Iterable[str]):
        self.taken = set(taken)

    def fresh(self, base: str) -> str:
        if base not in self.taken:
            self.taken.add(base)
            return base
        for i in itertools.count(2):
            cand = f"{base}_{i}"
            if cand not in self.taken:
                self.taken.add(cand)
                return cand
        raise AssertionError  # pragma: no cover


def rename_bound(f: Formula, taken: Iterable[str] = ()) -> Formula:
    """Give every binder a distinct name, distinct from all free names."""
    names = _Names(set(taken) | {s.name for s in free_symbols(f) if isinstance(s, (Var, Const))})

    def go(g: Formula, m: Dict[Var, Term]) -> Formula:
        if isinstance(g, QUANTIFIERS):
            v = Var(names.fresh(g.var.name))
            return type(g)(v, go(g.body, {**m, g.var: v}))
        if isinstance(g, Eq):
            return Eq(m.get(g.lhs, g.lhs), m.get(g.rhs, g.rhs))
        if isinstance(g, PointsTo):
            return PointsTo(m.get(g.loc, g.loc), tuple(m.get(t, t) for t in g.data))
        if isinstance(g, BINARY):
            return type(g)(go(g.left, m), go(g.right, m))
        if isinstance(g, Not):
            return Not(go(g.arg, m))
        return g

    return go(f, {})


Block = Tuple[str, Tuple[Var, ...]]  # ("E" | "A", variables)


def _flip(blocks: List[Block]) -> List[Block]:
    return [("A" if q == "E" else "E", vs) for q, vs in blocks]


def _push(blocks: List[Block], q: str, vs: Tuple[Var, ...]) -> None:
    if not vs:
        return
    if blocks and blocks[-1][0] == q:
        blocks[-1] = (q, blocks[-1][1] + vs)
    else:
        blocks.append((q, vs))


def _merge(a: List[Block], b: List[Block]) -> List[Block]:
    """Interleave two independent prefixes, emitting ∃ blocks as early as possible."""
    a, b, out = list(a), list(b), []
    while a and b:
        if a[0][0] == b[0][0]:
            _push(out, a[0][0], a[0][1] + b[0][1])
            a.pop(0)
            b.pop(0)
        elif a[0][0] == "E":
            _push(out, *a.pop(0))
        else:
            _push(out, *b.pop(0))
    for q, vs in a + b:
        _push(out, q, vs)
    return out


def _shape(blocks: List[Block]) -> str:
    return "".join("∃" if q == "E" else "∀" for q, _ in blocks)


def _prenex(f: Formula) -> Tuple[List[Block], Formula]:
    if isinstance(f, Exists):
        blocks, m = _prenex(f.body)
        out: List[Block] = []
        _push(out, "E", (f.var,))
        for q, vs in blocks:
            _push(out, q, vs)
        return out, m
    if isinstance(f, Not):
        blocks, m = _prenex(f.arg)
        return _flip(blocks), (m.arg if isinstance(m, Not) else Not(m))
    if isinstance(f, And):
        bl, ml = _prenex(f.left)
        br, mr = _prenex(f.right)
        return _merge(bl, br), And(ml, mr)
    if isinstance(f, Sep):
        bl, ml = _prenex(f.left)
        br, mr = _prenex(f.right)
        for bs in (bl, br):
            if any(q == "A" for q, _ in bs):
                raise FragmentError("universal quantifier under a separating conjunction")
        return _merge(bl, br), Sep(ml, mr)
    if isinstance(f, Wand):
        bl, ml = _prenex(f.left)
        br, mr = _prenex(f.right)
        if any(q == "A" for q, _ in bl):
            raise FragmentError("universal quantifier on the left of a magic wand")
        if any(q == "E" for q, _ in br):
            raise FragmentError("existential quantifier on the right of a magic wand")
        return _merge(_flip(bl), br), Wand(ml, mr)
    if isinstance(f, (Or, Implies, Forall)):
        return _prenex(desugar(f))
    return [], f


def prenex(f: Formula) -> Tuple[Tuple[Var, ...], Tuple[Var, ...], Formula]:
    """Split a sentence into (existentials, universals, matrix).

    Raises FragmentError unless the prefix can be arranged as ∃*∀*.
    """
    blocks, matrix = _prenex(rename_bound(desugar(f)))
    shape = _shape(blocks)
    if shape not in ("", "∃", "∀", "∃∀"):
        raise FragmentError(f"quantifier prefix {shape} is outside ∃*∀*")
    ex: Tuple[Var, ...] = ()
    un: Tuple[Var, ...] = ()
    for q, vs in blocks:
        if q == "E":
            ex = vs
        else:
            un = vs
    return ex, un, strip_double_negation(matrix)


# ---------------------------------------------------------------------------
# functional form and miniscoping


@dataclass(frozen=True)
class Conjunct:
    formula: Formula
    variables: Tuple[Var, ...]  # the universals occurring in formula, in prefix order

    @property
    def ground(self) -> bool:
        return not self.variables


def miniscope(matrix: Formula, universals: Sequence[Var]) -> Tuple[Conjunct, ...]:
    """Split the top-level conjunction of the matrix."""
    parts: List[Formula] = []

    def flatten(g: Formula) -> None:
        if isinstance(g, And):
            flatten(g.left)
            flatten(g.right)
        else:
            parts.append(g)

    flatten(matrix)
    out = []
    for p in parts:
        fv = free_vars(p)
        out.append(Conjunct(p, tuple(y for y in universals if y in fv)))
    return tuple(out)


@dataclass(frozen=True)
class PrenexInput:
    """``∀ȳ. matrix`` over Skolem constants and declared constants."""

    skolems: Tuple[Const, ...]
    universals: Tuple[Var, ...]
    matrix: Formula
    conjuncts: Tuple[Conjunct, ...]
    constants: Tuple[Const, ...] = ()
    k: int = 1

    @property
    def m(self) -> int:
        return len(self.skolems)

    @property
    def n(self) -> int:
        return len(self.universals)

    @property
    def p(self) -> int:
        return len(self.conjuncts)

    def all_constants(self) -> Tuple[Const, ...]:
        """Declared constants, Skolems and any other constant of the matrix."""
        seen: Dict[Const, None] = dict.fromkeys(self.constants)
        seen.update(dict.fromkeys(self.skolems))
        seen.update(dict.fromkeys(sorted(constants_of(self.matrix), key=lambda c: c.name)))
        return tuple(seen)

    def sentence(self) -> Formula:
        return forall(self.universals, self.matrix)


def skolem_name(v: Var) -> str:
    base = display_name(v.name)
    return f"{RESERVED}k_{base}"


def functional_form(f: Formula, constants: Sequence[Const] = (), k: int = 1) -> PrenexInput:
    """Replace the leading existentials of an ∃*∀* sentence by fresh constants."""
    taken = {c.name for c in constants}
    ex, un, matrix = prenex(f)
    fv = free_vars(matrix) - set(ex) - set(un)
    if fv:
        raise ContractViolation(f"free variables {sorted(str(v) for v in fv)} in a sentence")
    names = _Names(taken | {c.name for c in constants_of(matrix)})
    skolems = tuple(Const(names.fresh(skolem_name(v))) for v in ex)
    matrix = substitute(matrix, dict(zip(ex, skolems)))
    return PrenexInput(
        skolems=skolems,
        universals=un,
        matrix=matrix,
        conjuncts=miniscope(matrix, un),
        constants=tuple(constants),
        k=k,
    )
