from __future__ import annotations

import numpy as np
import pytest

from solitonforge import catalog
from solitonforge import group as G
from solitonforge.exprlang import parse
from solitonforge.metric import make_metric
from solitonforge.sampling import rng


def grp(gid):
    return catalog.lookup(gid).group


def test_commutator_examples():
    np.testing.assert_allclose(G.commutator_coeffs(grp("rxr+"), 0, 1, (0.3, 2.0)), [0, 1], atol=1e-14)
    pts = np.random.default_rng(0).normal(size=(10, 2))
    assert not np.any(G.all_commutators(grp("r2"), pts))
    np.testing.assert_allclose(G.commutator_coeffs(grp("rxr+xrxr+"), 2, 3, (0, 1, 0, 2)), [0, 0, 0, 1], atol=1e-14)


@pytest.mark.parametrize("gid", list(catalog.GROUPS))
def test_commutators_match_alpha(gid):
    g = grp(gid)
    pts = g.box().random(100, rng(11))
    assert np.max(np.abs(G.all_commutators(g, pts) - g.alpha)) < 1e-10


def test_frame_derivative_examples():
    g = grp("rxr+")
    y = parse("y", g.coords)
    assert G.frame_derivative(g, 0, y, (0, 2)) == pytest.approx(2)
    assert G.frame_derivative(g, 0, y, (0, 2), depth=2, j=0) == pytest.approx(2)
    r2 = grp("r2")
    assert G.frame_derivative(r2, 0, parse("exp(x+y)", r2.coords), (0, 0), depth=2, j=1) == pytest.approx(1)
    with pytest.raises(ValueError):
        G.frame_derivative(g, 0, y, (0, 2), depth=2)


def test_second_derivative_ordering_against_nested_fd():
    # f_ij = E_j(E_i f): apply E_i by FD, then E_j by FD of that
    g = grp("rxr+")
    f = parse("y^2 + x*y", g.coords)
    p = np.array([0.4, 1.7])
    h = 1e-4

    def e_apply(i, fn, q):
        a = G.frame_matrix(g, q)[i]
        return (fn(q + h * a) - fn(q - h * a)) / (2 * h)

    from solitonforge.exprlang import eval_expr

    fi = lambda i: (lambda q: e_apply(i, lambda r: eval_expr(f, r), q))
    _, _, fij = G.frame_derivatives(g, f, p)
    for i in range(2):
        for j in range(2):
            assert abs(e_apply(j, fi(i), p) - fij[i, j]) < 1e-6


def test_bracket_identity_on_frame_derivatives():
    # f_ji - f_ij = sum_k alpha_ijk f_k
    for c in catalog.all_cases():
        g = c.group
        pts = g.box().random(20, rng(3))
        _, fi, fij = G.frame_derivatives(g, c.metric.f, pts)
        lhs = np.swapaxes(fij, -1, -2) - fij
        rhs = np.einsum("ijk,...k->...ij", g.alpha, fi)
        assert np.max(np.abs(lhs - rhs)) < 1e-9, c.id


def test_axioms():
    for e in catalog.catalog_entries():
        assert G.check_antisymmetry(e.group) and G.check_jacobi(e.group)
    bad = G.make_group("bad", "xy", "", (0, 0), [["1", "0"], ["0", "1"]], {(1, 2, 1): 1, (2, 1, 1): 1})
    assert not G.check_antisymmetry(bad)


def test_jacobi_brute_force():
    a = np.zeros((3, 3, 3))
    a[0, 1, 2], a[1, 2, 0], a[2, 0, 1] = 1, 1, -1
    a = a - np.swapaxes(a, 0, 1)
    brute = np.zeros((3, 3, 3, 3))
    for i in range(3):
        for j in range(3):
            for k in range(3):
                for l in range(3):
                    brute[i, j, k, l] = sum(
                        a[i, j, m] * a[m, k, l] + a[j, k, m] * a[m, i, l] + a[k, i, m] * a[m, j, l]
                        for m in range(3)
                    )
    np.testing.assert_allclose(G.jacobi_defect(a), brute)
    g = G.make_group("so3ish", "xyz", "", (0, 0, 0), [["1", "0", "0"], ["0", "1", "0"], ["0", "0", "1"]], a)
    assert G.check_jacobi(g) == bool(np.all(brute == 0))


def test_multiply_examples():
    np.testing.assert_allclose(G.multiply(grp("r2"), (1, 2), (3, 4)), (4, 6))
    g = grp("rxr+")
    np.testing.assert_allclose(G.multiply(g, (1, 2), (3, 4)), (7, 8))
    np.testing.assert_allclose(G.multiply(g, g.identity, (0.5, 3)), (0.5, 3))


def test_multiply_requires_law():
    g = G.make_group("nolaw", "xy", "", (0, 0), [["1", "0"], ["0", "1"]], {})
    with pytest.raises(G.GroupError):
        G.multiply(g, (0, 0), (1, 1))


def test_pushforward_examples():
    r2 = grp("r2")
    np.testing.assert_allclose(G.left_translate_pushforward(r2, (3, -1), (0.2, 0.1), (1.5, 2.5)), (1.5, 2.5))
    g = grp("rxr+")
    np.testing.assert_allclose(G.left_translate_pushforward(g, (0, 2), g.identity, (1, 0)), (2, 0))


@pytest.mark.parametrize("gid", list(catalog.GROUPS))
def test_frame_left_invariant(gid):
    g = grp(gid)
    r = rng(5)
    box = G.sample_pair_box(g)
    assert G.frame_left_invariance_defect(g, box.random(50, r), box.random(50, r)) < 1e-10


@pytest.mark.parametrize("gid", list(catalog.GROUPS))
def test_inverse(gid):
    g = grp(gid)
    a = G.sample_pair_box(g).random(5, rng(2))
    inv = G.inverse(g, a)
    np.testing.assert_allclose(G.multiply(g, a, inv), np.broadcast_to(g.identity, a.shape), atol=1e-12)


def test_validate_all_groups():
    for e in catalog.catalog_entries():
        assert G.validate(e.group, rng(0)).ok()


def test_singular_frame():
    g = G.make_group("deg", "xy", "", (1, 0), [["x", "0"], ["0", "1"]], {})
    with pytest.raises(G.SingularFrameError):
        G.all_commutators(g, (0.0, 0.0))


def test_bad_definitions():
    with pytest.raises(G.GroupError):
        G.make_group("g", "xy", "z", (0, 0), [["1", "0"], ["0", "1"]], {})
    with pytest.raises(G.GroupError):
        G.make_group("g", "xy", "y", (0, 0), [["1", "0"], ["0", "1"]], {})
    with pytest.raises(G.GroupError):
        G.make_group("g", "xy", "", (0, 0), [["1", "0"]], {})
    with pytest.raises(G.GroupError):
        G.make_group("g", "xy", "", (0, 0), [["1", "0"], ["0", "1"]], {(1, 2, 3): 1})


def test_metric_on_custom_group_needs_unit_at_identity():
    from solitonforge.metric import MetricError

    with pytest.raises(MetricError):
        make_metric(grp("rxr+"), "2*y")
