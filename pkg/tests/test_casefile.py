from __future__ import annotations

import dataclasses
import json

import pytest

from solitonforge import casefile as CF
from solitonforge import catalog
from solitonforge.checks import run_case


def cigar_doc():
    return json.loads(CF.dumps(catalog.lookup("cigar")))


def test_schema_ships_with_package():
    s = CF.case_schema()
    assert s["properties"]["v"]["const"] == 1


def test_minimal_file_infers_class():
    c = CF.loads('{"v": 1, "group": "rxr+", "f": "1", "X": ["0", "1/y"], "lambda": "-1"}')
    assert c.expected_class == "expanding"
    assert c.expected_gradient is None
    assert run_case(c).passed


def test_inline_group_round_trip(tmp_path):
    c = catalog.lookup("rxr+.f=y.steady")
    doc = CF.case_to_dict(dataclasses.replace(c, metric=dataclasses.replace(
        c.metric, group=dataclasses.replace(c.group, name="my-affine"))))
    assert isinstance(doc["group"], dict) and doc["group"]["domain"] == ["y"]
    path = tmp_path / "case.json"
    path.write_text(json.dumps(doc))
    back = CF.load(path)
    assert back.group.name == "my-affine"
    assert (back.group.alpha == c.group.alpha).all()
    assert run_case(back).passed
    CF.dump(back, tmp_path / "again.json")
    assert json.loads((tmp_path / "again.json").read_text()) == doc


@pytest.mark.parametrize("mutate, needle", [
    (lambda d: d.update(v=2), "v"),
    (lambda d: d.pop("f"), "'f' is a required property"),
    (lambda d: d.update(extra=1), "extra"),
    (lambda d: d.update(group="nope"), "unknown id 'nope'"),
    (lambda d: d.update(X=["x*(", "0"]), "X[0]"),
    (lambda d: d.update(X=["x"]), "X needs 2 components"),
    (lambda d: d.update(f="2+x"), "f(e) must be 1"),
    (lambda d: d.update(grid={"lo": [0, 0], "hi": [1, 1], "counts": [2]}), "grid"),
    (lambda d: d.update(phi="q"), "phi"),
])
def test_invalid_files(mutate, needle):
    d = cigar_doc()
    mutate(d)
    with pytest.raises(CF.CaseFileError) as info:
        CF.case_from_dict(d)
    assert needle in str(info.value)


def test_syntax_error_has_caret():
    d = cigar_doc()
    d["lambda"] = "0 + (x"
    with pytest.raises(CF.CaseFileError) as info:
        CF.case_from_dict(d)
    msg = str(info.value)
    assert msg.startswith("lambda:") and "offset 6" in msg
    assert msg.splitlines()[-1].index("^") - 2 == 6


def test_bad_json_position():
    with pytest.raises(CF.CaseFileError) as info:
        CF.loads('{"v": 1,\n "f": }')
    assert "line 2" in str(info.value)


def test_missing_file(tmp_path):
    with pytest.raises(CF.CaseFileError):
        CF.load(tmp_path / "absent.json")


def test_domain_grid_too_close_to_boundary():
    d = json.loads(CF.dumps(catalog.lookup("rxr+.f=1.translation")))
    d["grid"] = {"lo": [-1, 0.0], "hi": [1, 2], "counts": [3, 3]}
    with pytest.raises(CF.CaseFileError):
        CF.case_from_dict(d)


def test_class_mismatch_is_left_to_the_checks():
    d = cigar_doc()
    d["lambda"] = "0.1"
    c = CF.case_from_dict(d)
    rep = run_case(c)
    assert not rep.passed
    assert {f.name for f in rep.failures()} >= {"soliton_residual", "classification"}
