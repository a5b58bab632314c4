from __future__ import annotations

import pytest

from solitonforge import catalog
from solitonforge.casefile import dumps, loads
from solitonforge.soliton import CLASSES


def test_six_groups_and_case_counts():
    entries = catalog.catalog_entries()
    assert [e.id for e in entries] == ["r2", "rxr+", "r2xr+", "rxr+xr", "rxr+xr2", "rxr+xrxr+"]
    assert len(catalog.lookup("rxr+").cases) == 7
    assert len(catalog.all_cases()) == 22
    r2 = {c.id for c in catalog.lookup("r2").cases}
    assert {"r2.cigar", "r2.exp.shrinking", "r2.exp.steady", "r2.almost.rotation"} == r2


def test_ids_unique_and_classes_valid():
    ids = [c.id for c in catalog.all_cases()]
    assert len(ids) == len(set(ids))
    for c in catalog.all_cases():
        assert c.expected_class in CLASSES
        assert len(c.X) == c.group.dim


def test_almost_cases():
    almost = [c.id for c in catalog.all_cases() if c.is_almost]
    assert almost == ["r2.almost.rotation", "rxr+.almost"]


def test_lookup():
    assert catalog.lookup("cigar").id == "r2.cigar"
    assert catalog.lookup("R rtimes R^+ times R rtimes R^+").id == "rxr+xrxr+"
    with pytest.raises(catalog.NotFoundError) as info:
        catalog.lookup("nope")
    assert "r2.cigar" in str(info.value)


def test_entry_for():
    c = catalog.lookup("rxr+xr.f=1.mixed")
    assert catalog.entry_for(c).id == "rxr+xr"


def test_every_case_round_trips_through_case_files():
    for c in catalog.all_cases():
        text = dumps(c)
        back = loads(text)
        assert dumps(back) == text
        assert back.metric.f == c.metric.f and back.X == c.X and back.lam == c.lam
        assert back.group == c.group


def test_base_curvature_expectations():
    e = catalog.lookup("rxr+xrxr+")
    planes = {pq for pq, _ in e.curvature_expectations}
    assert (0, 1) in planes and (2, 3) in planes
