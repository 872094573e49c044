import io
import subprocess
import sys

import pytest

from slbsr.cli import EXIT_DECIDED, EXIT_INPUT, EXIT_RESOURCE, bench_main, run
from slbsr.formula import Const
from slbsr.parser import parse
from slbsr.semantics import eval_formula, parse_model_dump

EXAMPLE_ONE = """\
; x ≉ y ∧ x ↦ z entails x ↦ z, written as ∃x∃y∃z∀u. x ≉ y ∧ x ↦ z ∧ ¬ x ↦ u
(declare-sort U 0)
(declare-heap (U U))
(assert (exists ((x U) (y U) (z U))
  (forall ((u U))
    (and (distinct x y) (pto x z) (not (pto x u))))))
(check-sat)
"""

INFINITE_SORT = """\
(declare-sort U 0)
(declare-heap (U U))
(assert (exists ((x U)) (forall ((y U)) (=> (distinct y nil) (sep (pto y x) true)))))
(check-sat)
"""

WITH_CONSTANTS = """\
(declare-sort U 0)
(declare-heap (U (Tuple U U)))
(declare-const a U)
(declare-const b U)
(assert (and (distinct a b) (sep (pto a (tuple b nil)) (pto b (tuple a a)))))
(check-sat)
"""


def invoke(tmp_path, text, *flags):
    path = tmp_path / "in.slq"
    path.write_text(text, encoding="utf-8")
    out, err = io.StringIO(), io.StringIO()
    code = run([str(path), *flags], out, err)
    return code, out.getvalue().splitlines(), err.getvalue()


def test_example_one(tmp_path):
    code, lines, _ = invoke(tmp_path, EXAMPLE_ONE)
    assert code == EXIT_DECIDED and lines == ["unsat"]


def test_trace(tmp_path):
    code, lines, _ = invoke(tmp_path, EXAMPLE_ONE, "--trace")
    assert lines[0] == "unsat"
    assert "inst 3: (k_z)" in lines and lines[-1] == "result: unsat"


def test_modes(tmp_path):
    assert invoke(tmp_path, INFINITE_SORT)[1][0] == "sat"
    assert invoke(tmp_path, INFINITE_SORT, "--mode", "aleph0")[1][0] == "unsat"


def test_dump_model(tmp_path):
    code, lines, _ = invoke(tmp_path, WITH_CONSTANTS, "--dump-model")
    assert lines[0] == "sat"
    model = parse_model_dump("\n".join(lines[1:]))
    problem = parse(WITH_CONSTANTS)
    assert eval_formula(model.interp, model.heap, problem.assertion, problem.k)
    assert model.interp.value(Const("a")) != model.interp.value(Const("b"))


def test_oracle_agreement(tmp_path):
    code, lines, _ = invoke(tmp_path, INFINITE_SORT, "--oracle", "--mode", "aleph0")
    assert lines == ["unsat", "oracle: unsat", "agreement: yes"]


def test_forbid_nil_alloc(tmp_path):
    text = "(declare-sort U 0)(declare-heap (U U))(assert (not (emp)))(check-sat)"
    _, lines, _ = invoke(tmp_path, text, "--forbid-nil-alloc", "--dump-model")
    model = parse_model_dump("\n".join(lines[1:]))
    assert model.interp.nil not in model.heap.dom


@pytest.mark.parametrize("text", [
    "(declare-sort U 0)(assert true)(check-sat)",
    "(declare-sort U 0)(declare-heap (U U))(assert (pto nil))(check-sat)",
    "not an s-expression (",
])
def test_malformed_input(tmp_path, text):
    code, lines, err = invoke(tmp_path, text)
    assert code == EXIT_INPUT and lines == [] and "error" in err


def test_fragment_error(tmp_path):
    text = ("(declare-sort U 0)(declare-heap (U U))"
            "(assert (forall ((a U)) (exists ((b U)) (pto a b))))(check-sat)")
    code, _, err = invoke(tmp_path, text)
    assert code == EXIT_INPUT and "unsupported" in err


def test_missing_file(tmp_path):
    assert run([str(tmp_path / "absent.slq")], io.StringIO(), io.StringIO()) == EXIT_INPUT


def test_resource_limit(tmp_path):
    code, lines, _ = invoke(tmp_path, EXAMPLE_ONE, "--budget", "1")
    assert code == EXIT_RESOURCE and lines == ["unknown"]


def test_module_entry_point(tmp_path):
    path = tmp_path / "ex.slq"
    path.write_text(EXAMPLE_ONE, encoding="utf-8")
    p = subprocess.run([sys.executable, "-m", "slbsr", str(path)], capture_output=True, text=True)
    assert p.returncode == 0 and p.stdout.splitlines()[0] == "unsat"


def test_stdin(monkeypatch):
    monkeypatch.setattr(sys, "stdin", io.StringIO(EXAMPLE_ONE))
    out = io.StringIO()
    assert run(["-"], out, io.StringIO()) == EXIT_DECIDED
    assert out.getvalue().splitlines()[0] == "unsat"


def test_bench(tmp_path, capsys):
    code = bench_main(["--depths", "1", "--families", "pos1-neg1", "pos2-neg4", "--out", str(tmp_path)])
    assert code == 0
    assert (tmp_path / "pos1-neg1_n1.slq").exists()
    summary = (tmp_path / "summary.tsv").read_text().splitlines()
    assert len(summary) == 3 and summary[2].startswith("pos2-neg4_n1\tinvalid\tinvalid")
    # the written corpus files are valid CLI inputs
    out = io.StringIO()
    assert run([str(tmp_path / "pos2-neg4_n1.slq")], out, io.StringIO()) == EXIT_DECIDED
    assert out.getvalue().startswith("sat")
