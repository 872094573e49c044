"""Solver against the brute-force oracle on random ∃*∀* sentences."""
import random

from slbsr.formula import functional_form
from slbsr.oracle import OracleConfig, OracleSat, naive_min_size, oracle_solve
from slbsr.qf import symmetry_break
from slbsr.semantics import eval_formula

from differential import aleph0_corpus, finite_corpus, plain_sat_queries, random_case


def describe(records):
    return "\n".join(f"{r.formula}  solver={r.solver} oracle={r.oracle}" for r in records[:5])


def test_finite_mode_agrees_with_oracle():
    corpus = finite_corpus()
    assert len(corpus.decided) >= 500
    assert not corpus.disagreements, describe(corpus.disagreements)
    assert all(r.solver != "unknown" for r in corpus.records)
    verdicts = {r.oracle for r in corpus.decided}
    assert verdicts == {"sat", "unsat"}


def test_aleph0_mode_agrees_with_spare_location_oracle():
    corpus = aleph0_corpus()
    assert len(corpus.decided) >= 100
    assert not corpus.disagreements, describe(corpus.disagreements)


def test_instantiation_bound():
    for corpus in (finite_corpus(), aleph0_corpus()):
        assert all(r.instances <= r.limit for r in corpus.records)


def test_sat_models_pass_symmetry_breaking():
    corpus = finite_corpus()
    sats = [(q, r) for q, r in corpus.queries if hasattr(r, "model")]
    assert sats
    for q, r in sats:
        assert symmetry_break(q.cutoffs, r.model.interp, r.model.heap)


def test_ground_queries_are_minimal():
    """Universe sizes of ground answers against the naive enumerator (where it can afford to look)."""
    sample = plain_sat_queries(finite_corpus())
    assert len(sample) == 100
    for q, r in sample:
        size = r.model.interp.universe_size
        limit = min(size, 3 if q.k == 1 else 2)
        naive = naive_min_size(q.full_formula(), q.k, limit, q.constants)
        if size <= limit:
            assert naive == size, q.formula
        else:
            assert naive is None, q.formula


def test_functional_form_preserves_satisfiability():
    """A model of the Skolemised form is a model of the original closed sentence."""
    rng = random.Random(77)
    checked = 0
    for _ in range(60):
        f, k = random_case(rng, 1)
        o = oracle_solve(functional_form(f, k=k), OracleConfig(max_cases=20_000))
        if isinstance(o, OracleSat):
            assert eval_formula(o.model.interp, o.model.heap, f, k), f
            checked += 1
    assert checked > 20
