import csv
import io
import json
import math

import numpy as np
import pytest

from flatsphere.cli import main
from flatsphere.polynomial import Poly, RootFindingError
from flatsphere.quotient_algebra import StructureAlgebra
from flatsphere.report import (
    EXIT_NUMERIC,
    EXIT_OK,
    EXIT_PARSE,
    EXIT_VALIDATION,
    GRID_COLUMNS,
    REPORT_KEYS,
    InputParseError,
    InputValidationError,
    JobConfig,
    dumps_report,
    loads_report,
    parse_algebra,
    parse_polynomial,
    run,
)

FAST = {"resolution": 15}


def algebra_json(p: Poly, element) -> str:
    A = StructureAlgebra.from_quotient(p)
    flat = [[a.real, a.imag] for a in A.constants.ravel()]
    return json.dumps({"dim": A.dim, "structure_constants": flat, "element": element})


@pytest.fixture(scope="module")
def z2p1_report():
    return run(JobConfig(coeffs="1 0 1"))


@pytest.mark.parametrize("text, expected", [
    ("1 0 1", [1, 0, 1]),
    ("1, 0, 1", [1, 0, 1]),
    ('{"coeffs": [[-2,0],[0,0],[1,0]]}', [-2, 0, 1]),
    ("1 2i -1+0.5i", [1, 2j, -1 + 0.5j]),
    ("[1, 0, 1]", [1, 0, 1]),
])
def test_parse_polynomial(text, expected):
    assert parse_polynomial(text) == Poly(expected)


@pytest.mark.parametrize("text, exc", [
    ("0", InputValidationError),
    ("0 0 0", InputValidationError),
    ("5", InputValidationError),
    ("1 nan", InputValidationError),
    ("1 zz", InputParseError),
    ("", InputParseError),
    ('{"coeffs": [[1, 2, 3]]}', InputParseError),
    ('{"coeffs": ', InputParseError),
])
def test_parse_polynomial_errors(text, exc):
    with pytest.raises(exc):
        parse_polynomial(text)


def test_parse_algebra_roundtrip():
    A, x = parse_algebra(algebra_json(Poly([1, 0, 1]), [0, 1]))
    np.testing.assert_array_equal(A.constants, StructureAlgebra.from_quotient(Poly([1, 0, 1])).constants)
    np.testing.assert_array_equal(x, [0, 1])


@pytest.mark.parametrize("obj, exc", [
    ({"dim": 2, "structure_constants": [1] * 7, "element": [0, 1]}, InputValidationError),
    ({"dim": 2, "structure_constants": [0] * 8, "element": [0, 1]}, InputValidationError),
    ({"dim": 2, "element": [0, 1]}, InputParseError),
])
def test_parse_algebra_errors(obj, exc):
    with pytest.raises(exc):
        parse_algebra(json.dumps(obj))


def test_parse_algebra_non_commutative():
    c = np.zeros((2, 2, 2))
    c[0, 0, 0] = c[0, 1, 1] = c[1, 0, 1] = 1
    c[1, 1, 0] = -1
    c[0, 1, 0] = 0.5  # breaks symmetry in (i, j)
    obj = {"dim": 2, "structure_constants": c.ravel().tolist(), "element": [0, 1]}
    with pytest.raises(InputValidationError):
        parse_algebra(json.dumps(obj))


def test_config_validation():
    with pytest.raises(InputValidationError):
        JobConfig(coeffs="1 0 1", resolution=4).validate()
    with pytest.raises(InputValidationError):
        JobConfig(coeffs="1 0 1", input_path="x").validate()
    with pytest.raises(InputValidationError):
        JobConfig(coeffs="1 0 1", extent=1.0).validate()


def test_report_worked_example(z2p1_report):
    code, text, report = z2p1_report
    assert code == EXIT_OK
    assert tuple(report) == REPORT_KEYS
    np.testing.assert_allclose([complex(*c) for c in report["f_coeffs"]], [1, 0, 2, 0, 1], atol=1e-12)
    assert report["gauss_bonnet"]["total_defect"] == pytest.approx(4 * math.pi, abs=1e-12)
    assert report["gauss_bonnet"]["total_over_pi"] == pytest.approx(4, abs=1e-12)
    assert sorted(s["order"] for s in report["singularities"]) == [2, 2]
    assert all(report["verdict"]["checks"].values())
    assert report["verdict"]["conclusion"] == "roots_found_metric_singular"
    assert report["factorization_check"]["max_relative_error"] <= 1e-12
    assert loads_report(text) == loads_report(dumps_report(report))


def test_report_serialization_round_trip(z2p1_report):
    text = z2p1_report[1]
    assert dumps_report(loads_report(text)) == text


def test_report_floats_keep_full_precision():
    text = dumps_report({"x": 0.1, "y": -0.0, "z": math.inf, "pi": math.pi})
    obj = loads_report(text)
    assert obj == {"x": 0.1, "y": 0, "z": None, "pi": math.pi}
    assert "-0" not in text


def test_report_deterministic():
    cfg = JobConfig(coeffs="1 2 0 3", rng_seed=9, **FAST)
    assert run(cfg)[1] == run(cfg)[1]


def test_algebra_mode_matches_poly_mode():
    poly = run(JobConfig(coeffs="1 0 1", **FAST))[2]
    alg = run(JobConfig(mode="algebra", coeffs=algebra_json(Poly([1, 0, 1]), [0, 1]), **FAST))[2]
    assert alg["input"]["mode"] == "algebra"
    poly.pop("input"), alg.pop("input")
    assert dumps_report(alg) == dumps_report(poly)


def test_algebra_mode_unit_element():
    code, _, report = run(JobConfig(mode="algebra", coeffs=algebra_json(Poly([1, 0, 1]), [1, 0])))
    assert code == EXIT_OK
    assert report["verdict"]["conclusion"] == "degree_one_no_obstruction"
    assert all(report[k] is None for k in REPORT_KEYS if k not in ("input", "verdict"))


def test_emit_grids(tmp_path):
    counts = []
    for coeffs in ("1 0 1", "-2 0 1", "0 1"):
        out = tmp_path / coeffs.replace(" ", "_")
        run(JobConfig(coeffs=coeffs, emit_grids=True, out_dir=str(out), **FAST))
        assert (out / "report.json").exists()
        rows = list(csv.reader(io.StringIO((out / "grid.csv").read_text())))
        assert tuple(rows[0]) == GRID_COLUMNS
        assert all(len(r) == len(GRID_COLUMNS) for r in rows)
        counts.append(len(rows) - 1)
    assert counts == [15 * 15] * 3


def test_text_output():
    code, text, _ = run(JobConfig(coeffs="-2 0 1", output="text", **FAST))
    assert code == EXIT_OK
    assert "Gauss-Bonnet" in text and "roots of p" in text


def test_cli_exit_codes(tmp_path, capsys):
    assert main(["--coeffs", "1 0 1", "--resolution", "15"]) == EXIT_OK
    report = json.loads(capsys.readouterr().out)
    assert report["verdict"]["degree"] == 2
    assert main(["--coeffs", "0"]) == EXIT_VALIDATION
    assert main(["--coeffs", "1 x"]) == EXIT_PARSE
    assert main(["--input", str(tmp_path / "missing.txt")]) == EXIT_PARSE
    assert main(["--coeffs", "1 0 1", "--resolution", "3"]) == EXIT_VALIDATION
    assert main([]) == 2  # argparse usage error
    capsys.readouterr()
    src = tmp_path / "p.txt"
    src.write_text("-2 0 1\n")
    assert main(["--input", str(src), "--text", "--resolution", "15"]) == EXIT_OK
    assert "degree 2" in capsys.readouterr().out


def test_cli_numeric_failure(monkeypatch):
    import flatsphere.metric_geometry as mg

    def boom(*args, **kwargs):
        raise RootFindingError("no convergence", [])

    monkeypatch.setattr(mg, "roots", boom)
    assert main(["--coeffs", "1 0 1", "--resolution", "15"]) == EXIT_NUMERIC
