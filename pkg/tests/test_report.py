import json

import jsonschema
import numpy as np
import pytest

from matevo.report import (CSV_COLUMNS, GridError, GridSpec, analyze, read_csv, report_schema,
                           symmetry_csv, symmetry_table, write_csv, write_json)
from matevo.scenarios import builtin_scenario

GRIDS = {"E": GridSpec(x=(0.3, 0.0, 0.0))}


@pytest.fixture(scope="module")
def reports():
    return {n: analyze(builtin_scenario(n), GRIDS.get(n, GridSpec())) for n in "ABCDE"}


@pytest.mark.parametrize("name", list("ABCDE"))
def test_schema_valid(reports, name):
    jsonschema.validate(json.loads(write_json(reports[name])), report_schema())


@pytest.mark.parametrize("name", list("ABCDE"))
def test_csv_json_identity(reports, name):
    r = reports[name]
    text = write_csv(r["nodes"])
    assert text.splitlines()[0] == ",".join(CSV_COLUMNS)
    assert read_csv(text) == json.loads(write_json(r))["nodes"]


def test_node_count_and_order(reports):
    for r in reports.values():
        assert len(r["nodes"]) == len(r["body_nodes"]) == len(r["diagnostics"]) == 41
        assert [n["t"] for n in r["nodes"]] == list(np.linspace(-1, 1, 41))


def test_verdicts(reports):
    v = {n: r["verdicts"] for n, r in reports.items()}
    assert (v["B"]["evolution"], v["B"]["morphogenesis"]) == ("smooth-aging", "no-morphogenesis")
    assert (v["D"]["evolution"], v["D"]["morphogenesis"]) == ("smooth-remodeling", "no-morphogenesis")
    assert v["A"]["evolution"] == "smooth-remodeling"
    assert v["C"]["morphogenesis"] == "morphogenesis"
    c = reports["C"]
    assert c["profiles"][0]["jump_nodes"] == [{"index": 20, "t": 0.0}]
    assert c["nodes"][20]["flags"] == "jump|boundary"
    assert c["nodes"][20]["morph_dim"] is None
    assert c["nodes"][19]["flags"] == "boundary"
    assert c["nodes"][0]["flags"] == ""
    assert v["B"]["conditions"] == {"i_body_evolution_dim_constant": True, "ii_some_node_aging": True,
                                    "iii_morphogenesis_base_dim_one": True}


def test_verdicts_consistent_with_nodes(reports):
    for r in reports.values():
        bases = {n["evo_base_dim"] for n in r["nodes"]}
        want = {frozenset({1}): "smooth-remodeling", frozenset({0}): "smooth-aging"}.get(frozenset(bases), "mixed")
        assert r["verdicts"]["evolution"] == want


def test_provenance(reports):
    p = reports["B"]["provenance"]
    assert p["model"]["name"] == "B"
    assert p["grid"]["seed"] == 42 and p["grid"]["samples"] == 40
    assert "jobs" not in p["grid"]
    assert reports["B"]["tool"]["name"] == "matevo"


def test_parallel_byte_identical():
    m = builtin_scenario("C")
    a = write_json(analyze(m, GridSpec(), jobs=1))
    assert a == write_json(analyze(m, GridSpec(), jobs=4))
    assert a == write_json(analyze(m, GridSpec(), jobs=1))


def test_body_mode():
    grid = GridSpec(t_steps=9, x1_range=(0.0, 0.6, 3))
    r = analyze(builtin_scenario("E"), grid, jobs=2)
    jsonschema.validate(r, report_schema())
    assert r["mode"] == "body"
    assert len(r["nodes"]) == 27 and len(r["profiles"]) == 3
    assert [n["x1"] for n in r["nodes"][::9]] == [0.0, 0.3, 0.6]
    assert {(n["evo_dim"], n["evo_base_dim"]) for n in r["body_nodes"][9:]} == {(7, 4)}
    assert r["verdicts"]["evolution"] == "smooth-remodeling"
    assert len(r["verdicts"]["per_x"]) == 3


def test_undetermined_short_grid():
    r = analyze(builtin_scenario("B"), GridSpec(t_steps=2))
    assert r["verdicts"]["morphogenesis"] == "undetermined"
    assert r["verdicts"]["warnings"]
    assert all(n["flags"] == "no-derivative" for n in r["nodes"])


@pytest.mark.parametrize("kwargs", [
    dict(t_min=1.0, t_max=0.0), dict(t_steps=1), dict(samples=25), dict(rel_tol=0.0),
    dict(det_floor=1.5), dict(x1_range=(1.0, 0.0, 3)), dict(x=(float("nan"), 0.0, 0.0)),
])
def test_grid_validation(kwargs):
    with pytest.raises(GridError):
        GridSpec(**kwargs).validate()


def test_symmetry_table():
    t = symmetry_table(builtin_scenario("B"), GridSpec(t_steps=5))
    assert [r["sym_dim"] for r in t["nodes"]] == [3] * 5
    assert all(len(r["basis"]) == 27 for r in t["nodes"])
    L = np.array(t["nodes"][0]["basis"]).reshape(3, 3, 3)
    np.testing.assert_allclose(L + L.transpose(0, 2, 1), 0, atol=1e-10)
    assert {r["sym_dim"] for r in symmetry_table(builtin_scenario("A"), GridSpec(t_steps=5))["nodes"]} == {0}
    text = symmetry_csv(t)
    assert text.splitlines()[0] == "t,x1,x2,x3,sym_dim,basis"
    row = text.splitlines()[1].split(",")
    assert [float(v) for v in row[5].split()] == t["nodes"][0]["basis"]
