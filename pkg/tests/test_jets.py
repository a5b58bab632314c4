from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from solitonforge import jets as J
from solitonforge.exprlang import eval_expr, eval_jet, parse

from conftest import catalog_expressions, case_points
from solitonforge import catalog


def test_seed_values():
    a = J.seed_variable((1, 2), 0, 2)
    assert a.value == 1
    np.testing.assert_array_equal(a.grad, [1, 0])
    np.testing.assert_array_equal(a.hess, np.zeros((2, 2)))
    b = J.seed_variable((1, 2), 1, 2)
    assert b.value == 2
    np.testing.assert_array_equal(b.grad, [0, 1])
    c = J.seed_variable((3,), 0, 3)
    assert c.value == 3 and c.grad[0] == 1 and c.hess[0, 0] == 0 and c.third[0, 0, 0] == 0


def test_seed_out_of_range():
    with pytest.raises(IndexError):
        J.seed_variable((1, 2), 2, 2)


def test_square():
    x = J.seed_variable((3.0,), 0, 2)
    y = x * x
    assert y.value == 9 and y.grad[0] == 6 and y.hess[0, 0] == 2


def test_reciprocal_bump_matches_fd():
    x, y = J.seed_all((0.0, 0.0), 2)
    r = 1 / (1 + x * x + y * y)
    assert r.value == 1
    np.testing.assert_allclose(r.grad, [0, 0], atol=1e-15)
    np.testing.assert_allclose(r.hess, np.diag([-2.0, -2.0]), atol=1e-15)
    # central differences, step 1e-4
    f = lambda u, v: 1 / (1 + u * u + v * v)
    h = 1e-4
    fd_xx = (f(h, 0) - 2 * f(0, 0) + f(-h, 0)) / h**2
    assert abs(fd_xx - r.hess[0, 0]) < 1e-6


def test_additive_inverse():
    x, y = J.seed_all((0.3, -1.2), 3)
    a = J.exp(x) * J.sin(y) + x * y
    z = a + (-a)
    assert z.value == 0
    assert not np.any(z.grad) and not np.any(z.hess) and not np.any(z.third)


def test_elementary_functions():
    x = J.seed_variable((0.0,), 0, 2)
    e = J.exp(x)
    assert (e.value, e.grad[0], e.hess[0, 0]) == (1, 1, 1)
    y = J.seed_variable((1.0,), 0, 2)
    l = J.ln(y)
    assert (l.value, l.grad[0], l.hess[0, 0]) == (0, 1, -1)
    s = J.sin(J.seed_variable((0.7,), 0, 2))
    h = 1e-4
    assert abs(s.grad[0] - (np.sin(0.7 + h) - np.sin(0.7 - h)) / (2 * h)) < 1e-7
    assert abs(s.hess[0, 0] - (np.sin(0.7 + h) - 2 * np.sin(0.7) + np.sin(0.7 - h)) / h**2) < 1e-7


def test_domain_errors():
    x = J.seed_variable((-1.0,), 0, 2)
    with pytest.raises(J.JetDomainError):
        J.ln(x)
    with pytest.raises(J.JetDomainError):
        J.sqrt(x)
    with pytest.raises(ZeroDivisionError):
        1 / (x + 1)
    with pytest.raises(J.JetDomainError):
        x ** 0.5


def test_third_order_of_cube():
    x = J.seed_variable((2.0,), 0, 3)
    c = x ** 3
    assert c.value == 8 and c.grad[0] == 12 and c.hess[0, 0] == 12 and c.third[0, 0, 0] == 6


def test_matrix_inverse_jet_matches_fd():
    x, y = J.seed_all((0.4, 1.3), 2)
    m = J.stack([J.stack([1 + x * y, x], -1), J.stack([J.sin(y), 2 + x * x], -1)], -2)
    inv = J.inverse(m)

    def mat(u, v):
        return np.array([[1 + u * v, u], [np.sin(v), 2 + u * u]])

    h = 1e-5
    fd = (np.linalg.inv(mat(0.4 + h, 1.3)) - np.linalg.inv(mat(0.4 - h, 1.3))) / (2 * h)
    np.testing.assert_allclose(inv.value, np.linalg.inv(mat(0.4, 1.3)), atol=1e-14)
    np.testing.assert_allclose(inv.grad[..., 0], fd, atol=1e-8)
    # first-order fast path agrees with the general one
    m1 = m.truncate(1)
    np.testing.assert_allclose(J.inverse(m1).grad, inv.grad, atol=1e-13)


@given(
    a=st.floats(0.2, 3.0), b=st.floats(-2.0, 2.0),
    p=st.integers(-3, 4),
)
@settings(max_examples=60, deadline=None)
def test_product_rule_property(a, b, p):
    x, y = J.seed_all((a, b), 2)
    u = x ** p * J.cos(y)
    # d/dx x^p cos y = p x^(p-1) cos y
    assert np.isclose(u.grad[0], p * a ** (p - 1) * np.cos(b), rtol=1e-12, atol=1e-12)
    assert np.isclose(u.hess[1, 1], -a**p * np.cos(b), rtol=1e-12, atol=1e-12)
    assert np.isclose(u.hess[0, 1], u.hess[1, 0])


def _fd(e, p, h, hg=1e-4):
    n = len(p)
    grad = np.zeros(n)
    hess = np.zeros((n, n))
    f0 = eval_expr(e, p)
    for k in range(n):
        dk = np.eye(n)[k] * hg
        grad[k] = (eval_expr(e, p + dk) - eval_expr(e, p - dk)) / (2 * hg)
        ek = np.eye(n)[k] * h
        for l in range(n):
            el = np.eye(n)[l] * h
            hess[k, l] = (eval_expr(e, p + ek + el) - eval_expr(e, p + ek - el)
                          - eval_expr(e, p - ek + el) + eval_expr(e, p - ek - el)) / (4 * h * h)
    return f0, grad, hess


def test_catalog_expressions_match_finite_differences():
    by_case = {c.id: c for c in catalog.all_cases()}
    worst_g = worst_h = 0.0
    seen = set()
    for cid, coords, e in catalog_expressions():
        key = (coords, e)
        if key in seen:
            continue
        seen.add(key)
        pts = case_points(by_case[cid], 100, seed=7)
        jet = eval_jet(e, pts, 2)
        for i in range(0, 100, 10):  # FD loops are slow; every tenth point still covers the box
            _, g, h = _fd(e, pts[i], 1e-3)
            scale_g = max(1.0, np.max(np.abs(jet.grad[i])))
            scale_h = max(1.0, np.max(np.abs(jet.hess[i])))
            worst_g = max(worst_g, np.max(np.abs(jet.grad[i] - g)) / scale_g)
            worst_h = max(worst_h, np.max(np.abs(jet.hess[i] - h)) / scale_h)
    assert worst_g < 1e-6
    assert worst_h < 1e-4


def test_expression_jets_batch_shape():
    e = parse("x*y + exp(x)", ["x", "y"])
    pts = np.random.default_rng(0).random((4, 3, 2))
    jet = eval_jet(e, pts, 2)
    assert jet.value.shape == (4, 3)
    assert jet.hess.shape == (4, 3, 2, 2)
    np.testing.assert_allclose(jet.hess[..., 0, 1], 1.0)
