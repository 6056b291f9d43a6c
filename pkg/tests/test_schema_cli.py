import io
import json
import pathlib
import subprocess
import sys

import pytest

from defstack import fixtures, schema, site
from defstack.cli import execute, run
from defstack.field import GF

FIX = pathlib.Path(__file__).resolve().parents[1] / "demos" / "fixtures"
F2 = GF(2)


def fx(name):
    return str(FIX / name)


def cli(*argv):
    code, report, _ = execute(list(argv))
    return code, report


# schema round trips -----------------------------------------------------------------------------


@pytest.mark.parametrize("text, dim", [("k", 1), ("k[e]", 2), ("k[V3]", 4), ("k[x,y]/(x^2,xy,y^2)", 3)])
def test_algebra_strings(text, dim):
    assert schema.algebra_from_string(text, F2).dim == dim


def test_square_round_trip():
    sq = fixtures.pullback_square()
    back = schema.square_from_json(json.loads(json.dumps(schema.square_to_json(sq))))
    assert back.source == sq.source
    assert (back.first.matrix == sq.first.matrix).all() and (back.second.matrix == sq.second.matrix).all()


@pytest.mark.parametrize("make", [fixtures.module_u2, fixtures.module_uv, fixtures.quotient_line, fixtures.rank1])
def test_problem_round_trip(make):
    P = make()
    doc = json.loads(json.dumps(schema.jsonable(schema.problem_to_json(P))))
    Q = schema.problem_from_json(doc)
    assert schema.problem_to_json(Q) == schema.problem_to_json(P)


def test_local_system_round_trip():
    from defstack.gdstack import LocalSystemProblem

    gp = LocalSystemProblem(site.circle(), fixtures.rank1(GF(3)), {("a0", "b0"): [[2]]})
    doc = json.loads(json.dumps(schema.jsonable(schema.problem_to_json(gp))))
    back = schema.problem_from_json(doc)
    assert set(back.twist) == {("a0", "b0")}


def test_substitution_quotient():
    A = fixtures.pullback_square().source
    q = schema.substitution_quotient(A, "t:0")
    assert q.target.dim == 2


def test_bad_documents():
    with pytest.raises(schema.SchemaError):
        schema.problem_from_json({"B": "k"})
    with pytest.raises(schema.SchemaError):
        schema.space_from_json("torus")
    with pytest.raises(schema.SchemaError):
        schema.algebra_from_string("k[[x]]", F2)


# CLI -----------------------------------------------------------------------------------------


def test_cli_square_and_pushforward():
    code, rep = cli("ring", "square", "--input", fx("pullback_fails.json"))
    assert code == 0 and rep["schlessinger"] is True
    code, rep = cli("ring", "square", "--input", fx("pullback_fails.json"), "--pushforward", "t:0")
    assert code == 0 and rep["schlessinger"] is False and rep["failed_clause"] == "injectivity"


def test_cli_gd_exact_on_circle():
    code, rep = cli("gd", "exact", "--space", fx("circle4.json"), "--problem", fx("rank1.json"))
    assert code == 0 and rep["dims"] == [1, 1, 0, 0] and rep["exact"] is True


def test_cli_tangent_of_trivial_problem():
    code, rep = cli("functor", "tangent", "--problem", fx("trivial.json"))
    assert code == 0 and rep["dim"] == 0


def test_cli_tagged_scalar_h1_fails_with_witness():
    e = fx("eps_to_k.json")
    code, rep = cli("functor", "h1", "--problem", '{"kind": "tagged-scalar"}', "--first", e, "--second", e)
    assert code == 0 and rep["result"] is False and "witness" in rep
    code, _ = cli("functor", "h1", "--problem", '{"kind": "tagged-scalar"}', "--first", e, "--second", e,
                  "--expect", "true")
    assert code == 1


def test_cli_validate_reports_axiom():
    code, rep = cli("ring", "validate", "--input", fx("not_local.json"))
    assert code == 0 and rep["valid"] is False and rep["failure"]["axiom"] == "nilpotency"


def test_cli_input_errors_exit_2():
    assert cli("ring", "square", "--input", "missing.json")[0] == 2
    assert cli("functor", "h4", "--problem", fx("quotient_line.json"))[0] == 2
    assert cli("ring", "make", "--input", "{not json")[0] == 2
    assert cli("nonsense")[0] == 2


def test_cli_budget_errors_exit_3():
    code, rep = cli("functor", "tangent", "--problem", fx("trivial.json"), "--d", "3", "--budget-objects", "2")
    assert code == 3 and rep["error"] == "budget"


def test_cli_budget_from_environment(monkeypatch):
    monkeypatch.setenv("DEFSTACK_BUDGET_OBJECTS", "2")
    assert cli("functor", "tangent", "--problem", fx("trivial.json"), "--d", "3")[0] == 3


def test_cli_bounds_violation_reported():
    code, rep = cli("gd", "report", "--space", "circle", "--problem", fx("rank1.json"),
                    "--prorep", fx("prorep_inconsistent.json"))
    assert code == 0 and rep["bounds"]["status"] == "VIOLATED"


def test_cli_cohomology():
    code, rep = cli("cohomology", "godement", "--space", "sphere")
    assert code == 0 and rep["dims"] == [1, 0, 1]
    code, rep = cli("cohomology", "comparison", "--space", "sphere", "--cover", fx("sphere_cover2.json"))
    assert code == 0


def test_cli_text_format():
    out = io.StringIO()
    code = run(["gd", "exact", "--space", fx("circle4.json"), "--problem", fx("rank1.json"), "--format", "text"],
               stdout=out)
    assert code == 0 and "T_S" in out.getvalue() and "exact" in out.getvalue()


def test_cli_report_echo_is_reusable():
    code, rep = cli("functor", "tangent", "--problem", fx("module_u2.json"))
    again = cli("functor", "tangent", "--problem", json.dumps(rep["problem"]))
    assert code == 0 and again[0] == 0 and again[1]["dim"] == rep["dim"] == 1


def test_paper_suite_passes():
    code, rep = cli("paper-suite")
    assert code == 0
    assert rep["passed"] == rep["total"] > 20


def test_console_entry_point():
    proc = subprocess.run([sys.executable, "-m", "defstack", "ring", "make", "--input", "k[e]"],
                          capture_output=True, text=True, timeout=60)
    assert proc.returncode == 0 and json.loads(proc.stdout)["dim"] == 2
