from __future__ import annotations

import json

import numpy as np

from solitonforge import catalog
from solitonforge import checks as K
from solitonforge.plotting import reduce_to_plane
from solitonforge.sampling import Box


def test_peak_tracks_argmax_and_entry():
    pk = K.Peak()
    pts = np.array([[0.0, 0.0], [1.0, 2.0]])
    vals = np.zeros((2, 2, 2))
    vals[1, 0, 1] = -3.0
    pk.update(vals, pts)
    assert pk.value == 3.0 and list(pk.point) == [1.0, 2.0] and pk.entry == (1, 2)
    other = K.Peak(5.0, np.array([9.0, 9.0]), (2, 2))
    pk.merge(other)
    assert pk.value == 5.0 and pk.entry == (2, 2)


def test_chunking_and_threads_do_not_change_reports(monkeypatch):
    c = catalog.lookup("rxr+.f=y.steady")
    box = Box((-2.0, 0.2), (2.0, 3.0), (30, 30))
    base = json.dumps(K.run_case(c, box).to_json())
    monkeypatch.setattr(K, "CHUNK", 97)
    monkeypatch.setenv("SOLITONFORGE_THREADS", "3")
    assert json.dumps(K.run_case(c, box).to_json()) == base


def test_thread_count_parsing(monkeypatch):
    monkeypatch.setenv("SOLITONFORGE_THREADS", "zero")
    assert K.thread_count() == 1
    monkeypatch.setenv("SOLITONFORGE_THREADS", "4")
    assert K.thread_count() == 4


def test_report_fields():
    rep = K.run_case(catalog.lookup("cigar"))
    doc = rep.to_json()
    for key in ("case", "status", "seed", "grid", "classification", "gradient", "oracle_deviation", "curvature",
                "checks"):
        assert key in doc
    names = [c["name"] for c in doc["checks"]]
    assert names[:3] == ["soliton_residual", "specialized_residual", "specialized_vs_general"]
    assert "potential" in names and "sectional[1,2]" in names and names[-1] == "oracle"
    assert doc["gradient"] == "gradient"


def test_gradient_verdict_bands():
    assert K.gradient_verdict(1e-12) == "gradient"
    assert K.gradient_verdict(1e-2) == "non-gradient"
    assert K.gradient_verdict(1e-5) == "inconclusive"


def test_curvature_table_rejects_out_of_domain():
    m = catalog.lookup("rxr+.f=y.steady").metric
    try:
        K.curvature_table(m, np.array([[0.0, -1.0]]))
    except ValueError:
        pass
    else:
        raise AssertionError("expected a domain error")


def test_reduce_to_plane_takes_max_over_extra_axes():
    pts = np.array([[0, 0, 0], [0, 0, 1], [1, 0, 0], [1, 0, 1]], dtype=float)
    xs, ys, img = reduce_to_plane(pts, [1.0, 4.0, 2.0, -1.0])
    assert list(xs) == [0, 1] and list(ys) == [0]
    assert img.tolist() == [[4.0, 2.0]]
