"""Counterexample-guided instantiation for ∃*∀* separation-logic formulas."""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field, replace
from typing import Dict, List, Optional, Sequence, Tuple, Union

from .formula import (
    NIL,
    RESERVED,
    Bot,
    Const,
    ContractViolation,
    Formula,
    Implies,
    Not,
    PointsTo,
    PrenexInput,
    Term,
    Var,
    alloc,
    conj,
    disj,
    display_name,
    measure,
    miniscope,
    neq,
    strip_double_negation,
    subformulas,
    substitute,
    Eq,
)
from .qf import QfOptions, QfQuery, ResourceOut, Sat, Unsat, qf_sat
from .semantics import Model, eval_formula

FINITE = "finite"
ALEPH0 = "aleph0"


@dataclass
class Trace:
    instances: List[Tuple[int, Tuple[Term, ...]]] = field(default_factory=list)
    qf_calls: List[bool] = field(default_factory=list)
    rounds: int = 0
    eager: int = 0
    steps: int = 0
    events: List[str] = field(default_factory=list)

    def add_instance(self, j: int, terms: Tuple[Term, ...]) -> None:
        self.instances.append((j, terms))
        self.events.append(f"inst {j}: ({','.join(display_name(str(t)) for t in terms)})")

    def add_qf_call(self, sat: bool) -> None:
        self.qf_calls.append(sat)
        self.events.append(f"qf-call {len(self.qf_calls)}: {'sat' if sat else 'unsat'}")

    def lines(self, result: Optional[str] = None) -> List[str]:
        out = list(self.events)
        if result is not None:
            out.append(f"result: {result}")
        return out


@dataclass(frozen=True)
class SolveSat:
    model: Model
    trace: Trace

    verdict = "sat"


@dataclass(frozen=True)
class SolveUnsat:
    trace: Trace

    verdict = "unsat"


@dataclass(frozen=True)
class SolveResourceOut:
    trace: Trace

    verdict = "unknown"


SolveResult = Union[SolveSat, SolveUnsat, SolveResourceOut]


@dataclass
class InstantiationState:
    gamma: List[Formula]
    L: Tuple[Term, ...]
    cutoffs: Tuple[Const, ...]
    witnesses: Dict[Var, Const]
    trace: Trace
    seen: set = field(default_factory=set)

    def add(self, j: int, formula: Formula, terms: Tuple[Term, ...]) -> None:
        key = (j, terms)
        if key in self.seen:
            raise AssertionError(f"instance {j}{terms} added twice")
        self.seen.add(key)
        self.gamma.append(formula)
        self.trace.add_instance(j, terms)


class _ResourceOut(Exception):
    pass


def _fresh(prefix: str, base: str, taken: set) -> Const:
    name = f"{RESERVED}{prefix}{display_name(base)}"
    cand, i = name, 2
    while cand in taken:
        cand = f"{name}_{i}"
        i += 1
    taken.add(cand)
    return Const(cand)


def _taken_names(pi: PrenexInput) -> set:
    return {c.name for c in pi.all_constants()}


# ---------------------------------------------------------------------------
# infinite location sort


def aleph0_transform(pi: PrenexInput) -> PrenexInput:
    """Guarded form whose satisfiability over any universe matches satisfiability
    of the input over an infinite one."""
    if pi.n == 0:
        return pi
    taken = _taken_names(pi)
    ds = [_fresh("d_", y.name, taken) for y in pi.universals]
    named: List[Term] = list(pi.skolems) + [c for c in pi.constants if c not in pi.skolems] + [NIL]
    external = conj(
        conj([Not(alloc(d, pi.k))] + [neq(d, c) for c in named]) for d in ds
    )
    d_of = dict(zip(pi.universals, ds))

    def psi(t: int, y: Var) -> Formula:
        if t == 0:
            return alloc(y, pi.k)
        if t == 1:
            return disj(Eq(y, c) for c in named) if named else Bot()
        return Eq(y, d_of[y])

    parts: List[Formula] = [external]
    for c in pi.conjuncts:
        if c.ground:
            parts.append(c.formula)
            continue
        for choice in itertools.product((0, 1, 2), repeat=len(c.variables)):
            guard = conj(psi(t, y) for t, y in zip(choice, c.variables))
            parts.append(Implies(guard, c.formula))
    matrix = conj(parts)
    return PrenexInput(
        skolems=pi.skolems,
        universals=pi.universals,
        matrix=matrix,
        conjuncts=miniscope(matrix, pi.universals),
        constants=tuple(pi.constants) + tuple(ds),
        k=pi.k,
    )


# ---------------------------------------------------------------------------
# term selection


def _pto_facts(formulas: Sequence[Formula]) -> List[PointsTo]:
    out = []
    for f in formulas:
        out.extend(g for g in subformulas(f) if isinstance(g, PointsTo))
    return out


def select_terms(model: Model, witnesses: Sequence[Const], L: Sequence[Term],
                 gamma_prime: Sequence[Formula]) -> Tuple[Term, ...]:
    """Pick for each witness a term of L with the same value, preferring matching points-to facts."""
    I = model.interp
    facts = _pto_facts(gamma_prime)

    def value(t: Term) -> int:
        return I.value(t)

    def tuple_value(ts) -> Tuple[int, ...]:
        return tuple(value(t) for t in ts)

    chosen = []
    for e in witnesses:
        candidates = [t for t in L if value(t) == value(e)]
        if not candidates:
            raise AssertionError(f"no instantiation term has the value of {e}")
        # facts e ↦ v, matched against u ↦ v'
        targets = {tuple_value(f.data) for f in facts if f.loc == e}
        preferred = [u for u in candidates
                     if any(f.loc == u and tuple_value(f.data) in targets for f in facts)]
        if not preferred:
            # e occurring as a field: prefer u in the same field of a cell with the same address
            slots = {(value(f.loc), i) for f in facts for i, d in enumerate(f.data) if d == e}
            preferred = [u for u in candidates
                         if any((value(f.loc), i) in slots and d == u
                                for f in facts for i, d in enumerate(f.data))]
        chosen.append((preferred or candidates)[0])
    return tuple(chosen)


# ---------------------------------------------------------------------------
# the procedure


@dataclass(frozen=True)
class SolveOptions:
    mode: str = FINITE
    budget: int = 10**8
    forbid_nil_alloc: bool = False


def solve(pi: PrenexInput, mode: str = FINITE, options: Optional[SolveOptions] = None) -> SolveResult:
    """Decide ``∀ȳ φ(k̄, ȳ)`` in the given mode."""
    options = replace(options or SolveOptions(), mode=mode)
    if mode not in (FINITE, ALEPH0):
        raise ContractViolation(f"unknown mode {mode!r}")
    if mode == ALEPH0:
        pi = aleph0_transform(pi)
    taken = _taken_names(pi)
    size = measure(pi.matrix) + pi.n
    cutoffs = tuple(_fresh("l", str(i), taken) for i in range(1, size + 1))
    ks = list(pi.skolems) + [c for c in pi.constants if c not in pi.skolems]
    L = tuple(dict.fromkeys(ks + [NIL] + list(cutoffs)))
    witnesses = {y: _fresh("e_", y.name, taken) for y in pi.universals}
    state = InstantiationState(gamma=[], L=L, cutoffs=cutoffs, witnesses=witnesses, trace=Trace())
    for j, c in enumerate(pi.conjuncts, start=1):
        if c.ground:
            state.add(j, c.formula, ())
            state.trace.eager += 1
    try:
        return solve_rec(state, pi, options)
    except _ResourceOut:
        return SolveResourceOut(state.trace)


def _qf(state: InstantiationState, pi: PrenexInput, options: SolveOptions, formula: Formula,
        witnesses=(), symmetry=True, named_only=False, cover=False):
    q = QfQuery(
        formula=formula,
        constants=tuple(pi.all_constants()) + state.cutoffs,
        cutoffs=state.cutoffs if symmetry else (),
        options=QfOptions(
            forbid_nil_alloc=options.forbid_nil_alloc,
            resource_limit=options.budget,
            named_domain_only=named_only,
            cover=cover,
        ),
        k=pi.k,
        witnesses=tuple(witnesses),
        inst_terms=state.L if (witnesses or cover) else (),
    )
    r = qf_sat(q)
    state.trace.steps += r.steps
    if isinstance(r, ResourceOut):
        raise _ResourceOut()
    state.trace.add_qf_call(isinstance(r, Sat))
    return r


def _instance_limit(pi: PrenexInput, state: InstantiationState) -> int:
    return pi.p * len(state.L) ** pi.n


def solve_rec(state: InstantiationState, pi: PrenexInput, options: SolveOptions) -> SolveResult:
    relaxed = False
    limit = _instance_limit(pi, state)
    while True:
        assert len(state.trace.instances) <= limit, "instantiation bound exceeded"
        state.trace.rounds += 1
        gamma = conj(state.gamma)
        r = _qf(state, pi, options, gamma, symmetry=not relaxed)
        if isinstance(r, Unsat):
            return SolveUnsat(state.trace)
        picked = None
        for j, c in enumerate(pi.conjuncts, start=1):
            if c.ground:
                continue
            es = [state.witnesses[y] for y in c.variables]
            neg = strip_double_negation(Not(substitute(c.formula, dict(zip(c.variables, es)))))
            rj = _qf(state, pi, options, conj(state.gamma + [neg]), witnesses=es,
                     symmetry=not relaxed, named_only=not relaxed)
            if isinstance(rj, Sat):
                terms = select_terms(rj.model, es, state.L, state.gamma + [neg])
                picked = (j, c, terms)
                break
        if picked is None:
            model = _final_model(state, pi, options, r.model, relaxed)
            if model is not None:
                return SolveSat(model, state.trace)
            # the restricted searches missed a counterexample; repeat without restrictions
            relaxed = True
            continue
        j, c, terms = picked
        inst = substitute(c.formula, dict(zip(c.variables, terms)))
        state.add(j, inst, terms)


def _final_model(state, pi, options, model, relaxed) -> Optional[Model]:
    sentence = pi.sentence()
    r = _qf(state, pi, options, conj(state.gamma), symmetry=not relaxed, cover=True)
    if isinstance(r, Sat) and eval_formula(r.model.interp, r.model.heap, sentence, pi.k):
        return r.model
    if eval_formula(model.interp, model.heap, sentence, pi.k):
        return model
    if relaxed:
        raise AssertionError("no counterexample found, yet the model violates the input")
    return None
