from __future__ import annotations

import numpy as np
import pytest

from solitonforge import catalog
from solitonforge import group as G
from solitonforge.metric import (
    MetricError, check_ad_invariance, check_bracket_symmetry, check_f_left_invariance,
    check_f_symmetric, f_values, is_positive_definite, make_metric, metric_coords, metric_frame,
)
from solitonforge.sampling import rng


def grp(gid):
    return catalog.lookup(gid).group


def test_metric_frame_examples():
    for c in catalog.all_cases():
        np.testing.assert_allclose(metric_frame(c.metric, c.group.identity), np.eye(c.group.dim), atol=1e-14)
    m = make_metric(grp("rxr+"), "y^2")
    np.testing.assert_allclose(metric_frame(m, (0, 3)), 9 * np.eye(2))
    cigar = catalog.lookup("cigar").metric
    np.testing.assert_allclose(metric_frame(cigar, (1, 1)), np.eye(2) / 3)


def test_metric_coords_examples():
    pts = np.random.default_rng(0).normal(size=(5, 2))
    np.testing.assert_allclose(metric_coords(make_metric(grp("r2"), "1"), pts), np.broadcast_to(np.eye(2), (5, 2, 2)))
    hyp = make_metric(grp("rxr+"), "1")
    for y in (0.3, 1.0, 2.5):
        np.testing.assert_allclose(metric_coords(hyp, (0.7, y)), np.eye(2) / y**2)
    np.testing.assert_allclose(metric_coords(catalog.lookup("cigar").metric, (0, 0)), np.eye(2))


def test_metric_coords_is_gram_of_frame():
    # v = sum c_i E_i has g(v, v) = f |c|^2
    for c in catalog.all_cases():
        pts = c.sample_box().random(20, rng(1))
        gram = metric_coords(c.metric, pts)
        assert np.all(is_positive_definite(gram))
        coef = np.random.default_rng(2).normal(size=(20, c.group.dim))
        v = np.einsum("...i,...ik->...k", coef, G.frame_matrix(c.group, pts))
        lhs = np.einsum("...k,...kl,...l->...", v, gram, v)
        rhs = f_values(c.metric, pts) * np.sum(coef**2, axis=-1)
        np.testing.assert_allclose(lhs, rhs, rtol=1e-10, atol=1e-10)


def test_metric_coords_jet_value_and_fd():
    m = catalog.lookup("rxr+.f=y.steady").metric
    p = np.array([0.3, 1.4])
    jet = metric_coords(m, p, order=2)
    np.testing.assert_allclose(jet.value, metric_coords(m, p), atol=1e-14)
    h = 1e-5
    fd = (metric_coords(m, p + [0, h]) - metric_coords(m, p - [0, h])) / (2 * h)
    np.testing.assert_allclose(jet.grad[..., 1], fd, atol=1e-8)


def test_f_left_invariance_all_catalog_metrics():
    seen = set()
    for c in catalog.all_cases():
        key = (c.group.name, c.metric.f)
        if key in seen:
            continue
        seen.add(key)
        r = rng(9)
        box = G.sample_pair_box(c.group)
        assert check_f_left_invariance(c.metric, (box.random(50, r), box.random(50, r))) < 1e-9, c.id


def test_f_left_invariance_exp_ratio_and_unit_f():
    m = make_metric(grp("r2"), "exp(x+y)")
    r = rng(4)
    a = r.normal(size=(30, 2))
    b = r.normal(size=(30, 2))
    ba = G.multiply(m.group, b, a)
    np.testing.assert_allclose(f_values(m, ba) / f_values(m, a), np.exp(b.sum(axis=1)), rtol=1e-12)
    assert check_f_left_invariance(m, (a, b)) < 1e-12 * np.max(np.exp(np.abs(a).sum(1) + np.abs(b).sum(1)))
    hyp = make_metric(grp("rxr+"), "1")
    box = G.sample_pair_box(hyp.group)
    assert check_f_left_invariance(hyp, (box.random(50, r), box.random(50, r))) < 1e-12


def test_f_left_invariance_detects_wrong_frame():
    # a right-invariant frame on the affine group is not left-invariant
    g = G.make_group("right", "xy", "y", (0, 1), [["1", "0"], ["x", "y"]], {(1, 2, 1): -1, (2, 1, 1): 1},
                     ["x1 + y1*x2", "y1*y2"])
    m = make_metric(g, "1")
    box = G.sample_pair_box(g)
    r = rng(1)
    assert check_f_left_invariance(m, (box.random(20, r), box.random(20, r))) > 1e-3


def test_bracket_symmetry():
    assert check_bracket_symmetry(grp("r2"))
    assert not check_bracket_symmetry(grp("rxr+"))
    assert not check_bracket_symmetry(grp("rxr+xrxr+"))


def test_ad_invariance():
    assert check_ad_invariance(grp("r2"), (1.3, -0.4)) == 0
    g = grp("rxr+")
    assert check_ad_invariance(g, (1, 2)) > 1e-3
    assert check_ad_invariance(g, g.identity) < 1e-14


def test_f_symmetric():
    r = rng(6)
    m = make_metric(grp("r2"), "exp(x^2 - y)")
    assert check_f_symmetric(m, (r.normal(size=(20, 2)), r.normal(size=(20, 2))))
    g = grp("rxr+")
    box = G.sample_pair_box(g)
    pairs = (box.random(20, r), box.random(20, r))
    assert check_f_symmetric(make_metric(g, "y"), pairs)
    assert not check_f_symmetric(make_metric(g, "1 + x^2"), pairs)


def test_metric_rejects_bad_f():
    with pytest.raises(MetricError):
        make_metric(grp("r2"), "2 + x")
    with pytest.raises(MetricError):
        make_metric(grp("r2"), "1 - x^2")
