"""Ricci soliton verification: ``L_X g = 2(lambda g - Ric)``.

Vector fields are given by frame components ``theta^i`` (``X = sum theta^i E_i``)
or, when ``kind="coords"``, by coordinate components ``X = sum V^k d/dx_k``.
All matrices are frame components ``M[..., p, q] = M(E_p, E_q)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import group as G
from . import jets as J
from .curvature import FrameData, frame_data, gaussian_curvature_affine, oracle_tensors, ricci_matrix, sectional_commutative
from .exprlang import Expr, evaluate, parse
from .metric import FInvariantMetric, metric_coords
from .sampling import Box

CLASSES = ("shrinking", "steady", "expanding", "almost")
STEADY_TOL = 1e-12
CONSTANT_TOL = 1e-12


class SolitonError(ValueError):
    pass


class NoKernelError(SolitonError):
    pass


class FlowDomainError(SolitonError):
    pass


@dataclass(frozen=True)
class Tolerances:
    residual: float = 1e-9
    oracle: float = 1e-7
    fd: float = 1e-4


@dataclass(frozen=True)
class SolitonCase:
    id: str
    metric: FInvariantMetric
    X: tuple[Expr, ...]
    lam: Expr
    expected_class: str
    expected_gradient: bool
    phi: Expr | None = None
    expected_kappa: tuple[tuple[tuple[int, int], Expr], ...] = ()
    title: str = ""
    x_kind: str = "frame"
    box: Box | None = None
    tolerances: Tolerances = field(default_factory=Tolerances)
    seed: int = 0
    notes: str = ""

    @property
    def group(self) -> G.LieGroupSpec:
        return self.metric.group

    @property
    def is_almost(self) -> bool:
        return self.expected_class == "almost"

    def sample_box(self) -> Box:
        return self.box if self.box is not None else self.group.box()


def make_case(
    id: str,
    metric: FInvariantMetric,
    X: Sequence[str | Expr],
    lam: str | Expr,
    expected_class: str,
    expected_gradient: bool,
    phi: str | Expr | None = None,
    expected_kappa: dict[tuple[int, int], str | Expr] | None = None,
    check_class: bool = True,
    **kw,
) -> SolitonCase:
    """Parse a case from text; ``expected_kappa`` keys are 1-based frame index pairs.

    With ``check_class=False`` a mismatch between the expected class and the sign of
    lambda is left for the classification check to report.
    """
    coords = metric.group.coords
    n = metric.dim

    def p(e):
        return parse(e, coords) if isinstance(e, str) else e

    if len(X) != n:
        raise SolitonError(f"X needs {n} components, got {len(X)}")
    if expected_class not in CLASSES:
        raise SolitonError(f"expected_class must be one of {CLASSES}")
    kappa = []
    for (i, j), e in (expected_kappa or {}).items():
        if not (1 <= i <= n and 1 <= j <= n and i != j):
            raise SolitonError(f"bad sectional plane {(i, j)}")
        kappa.append(((i - 1, j - 1), p(e)))
    kind = kw.get("x_kind", "frame")
    if kind not in ("frame", "coords"):
        raise SolitonError("x_kind must be 'frame' or 'coords'")
    case = SolitonCase(
        id, metric, tuple(p(e) for e in X), p(lam), expected_class, expected_gradient,
        p(phi) if phi is not None else None, tuple(kappa), **kw,
    )
    if check_class and expected_class != "almost":
        lam0 = lambda_constant(case)
        if classify_value(lam0) != expected_class:
            raise SolitonError(f"case {id}: lambda = {lam0:g} is not {expected_class}")
    return case


# -- evaluation helpers ---------------------------------------------------------


def _points(g: G.LieGroupSpec, point) -> np.ndarray:
    p = np.asarray(point, dtype=float)
    if p.shape[-1] != g.dim:
        raise SolitonError(f"expected points with {g.dim} coordinates")
    return p


def scalar_values(e: Expr, point) -> np.ndarray:
    p = np.asarray(point, dtype=float)
    v = evaluate(e, [p[..., k] for k in range(p.shape[-1])])
    return np.broadcast_to(np.asarray(v, dtype=float), p.shape[:-1]).copy()


def lambda_values(case: SolitonCase, point) -> np.ndarray:
    return scalar_values(case.lam, _points(case.group, point))


def lambda_is_constant(case: SolitonCase, point) -> bool:
    """Numerical constancy: the gradient of lambda vanishes at every given point."""
    jet = G.eval_jets([case.lam], _points(case.group, point), 1)
    return bool(np.all(np.abs(jet.grad) <= CONSTANT_TOL))


def _constancy_probe(case: SolitonCase) -> np.ndarray:
    g = case.group
    pts = case.sample_box().random(16, np.random.default_rng(case.seed))
    return np.concatenate([np.asarray(g.identity)[None], pts])


def lambda_constant(case: SolitonCase) -> float:
    """The constant value of lambda; raises if lambda varies."""
    probe = _constancy_probe(case)
    if not lambda_is_constant(case, probe):
        raise SolitonError(f"case {case.id}: lambda is not constant")
    return float(lambda_values(case, probe[0]))


def frame_field(m: FInvariantMetric, X: Sequence[Expr], point, kind: str = "frame"):
    """Frame components ``theta[..., i]`` and ``dtheta[..., i, p] = E_p theta^i``."""
    g = m.group
    p = _points(g, point)
    if kind == "frame":
        return G.frame_gradient(g, X, p)
    if kind != "coords":
        raise SolitonError(f"unknown vector-field kind {kind!r}")
    # theta = V A^-1, differentiated with jets
    v = G.eval_jets(X, p, 1)
    aj = G.frame_jet(g, p, 1)
    G._check_invertible(aj.value)
    inv = J.inverse(aj)
    theta = (v.expand_dims(-1) * inv).sum(-2)
    a = aj.value
    return theta.value, np.einsum("...pl,...il->...ip", a, theta.grad)


def coordinate_field(m: FInvariantMetric, X: Sequence[Expr], point, kind: str = "frame") -> np.ndarray:
    """Coordinate components ``V[..., k]`` of the vector field."""
    p = _points(m.group, point)
    if kind == "coords":
        return np.stack([scalar_values(e, p) for e in X], axis=-1)
    theta = np.stack([scalar_values(e, p) for e in X], axis=-1)
    return np.einsum("...i,...ik->...k", theta, G.frame_matrix(m.group, p))


# -- Lie derivative and residuals -------------------------------------------------


def lie_derivative_metric(
    m: FInvariantMetric, X: Sequence[Expr], point, kind: str = "frame", data: FrameData | None = None
) -> np.ndarray:
    """``(L_X g)(E_p, E_q) = X<E_p,E_q> - <[X,E_p],E_q> - <E_p,[X,E_q]>``.

    With ``[X, E_p] = sum_i theta^i [E_i, E_p] - sum_i (E_p theta^i) E_i`` this is
    ``delta_pq X(f) - f sum_i theta^i (a_ipq + a_iqp) + f (E_p theta^q + E_q theta^p)``.
    """
    g = m.group
    p = _points(g, point)
    if data is None:
        f, fi, _ = G.frame_derivatives(g, m.f, p)
    else:
        f, fi = data.f, data.fi
    theta, dtheta = frame_field(m, X, p, kind)
    xf = np.einsum("...i,...i->...", theta, fi)
    a = g.alpha
    sym = a + np.transpose(a, (0, 2, 1))
    F = f[..., None, None]
    return (
        xf[..., None, None] * np.eye(g.dim)
        - F * np.einsum("...i,ipq->...pq", theta, sym)
        + F * (dtheta + np.swapaxes(dtheta, -1, -2))
    )


def _residual(case: SolitonCase, p: np.ndarray, data: FrameData | None = None) -> np.ndarray:
    return general_residual(case.metric, case.X, case.lam, p, case.x_kind, data)


def soliton_residual(case: SolitonCase, point, data: FrameData | None = None) -> np.ndarray:
    """``L_X g - 2(lambda g - Ric)`` in the frame; lambda must be constant."""
    p = _points(case.group, point)
    if not lambda_is_constant(case, p):
        raise SolitonError(f"case {case.id}: lambda is not constant, use almost_soliton_residual")
    return _residual(case, p, data)


def almost_soliton_residual(case: SolitonCase, point, data: FrameData | None = None) -> np.ndarray:
    """Same residual with lambda evaluated pointwise as a function."""
    return _residual(case, _points(case.group, point), data)


def case_residual(case: SolitonCase, point, data: FrameData | None = None) -> np.ndarray:
    if case.is_almost:
        return almost_soliton_residual(case, point, data)
    return soliton_residual(case, point, data)


# -- gradients ------------------------------------------------------------------


def gradient_components(m: FInvariantMetric, phi: Expr, point) -> np.ndarray:
    """Frame components of ``grad phi``: ``theta^i = (E_i phi) / f``."""
    p = _points(m.group, point)
    _, dphi = G.frame_gradient(m.group, [phi], p)
    f = scalar_values(m.f, p)
    return dphi[..., 0, :] / f[..., None]


def closedness_defect(m: FInvariantMetric, X: Sequence[Expr], point, kind: str = "frame") -> np.ndarray:
    """Per point ``max_kl |d_k w_l - d_l w_k|`` for the 1-form ``w = g(X, .)``.

    In coordinates ``w_l = f sum_i theta^i (A^-1)_li``.
    """
    g = m.group
    p = _points(g, point)
    aj = G.frame_jet(g, p, 1)
    G._check_invertible(aj.value)
    inv = J.inverse(aj)
    fj = G.eval_jets([m.f], p, 1)
    if kind == "frame":
        theta = G.eval_jets(X, p, 1)
    else:
        v = G.eval_jets(X, p, 1)
        theta = (v.expand_dims(-1) * inv).sum(-2)
    # w_l = f sum_i (A^-1)_li theta_i
    w = (inv * theta.expand_dims(-2)).sum(-1) * fj
    dw = w.grad  # dw[..., l, k] = d_k w_l
    curl = np.abs(dw - np.swapaxes(dw, -1, -2))
    return curl.reshape(curl.shape[:-2] + (-1,)).max(axis=-1)


def nongradience_certificate(m: FInvariantMetric, X: Sequence[Expr], points, kind: str = "frame") -> float:
    """Max closedness defect; ~0 allows a potential, bounded away from 0 rules one out."""
    return float(np.max(closedness_defect(m, X, points, kind)))


# -- specialized systems ------------------------------------------------------------


@dataclass
class _SystemVars:
    """Quantities the displayed systems are written in; indices are 1-based."""

    pt: np.ndarray
    f: np.ndarray
    fi: np.ndarray
    fij: np.ndarray
    fc: np.ndarray  # coordinate partials of f
    th: np.ndarray  # frame components of X
    dth: np.ndarray  # dth[..., i, p] = E_p theta^i
    thc: np.ndarray  # thc[..., i, k] = d theta^i / d x_k
    lam: np.ndarray

    def F(self, i):
        return self.fi[..., i - 1]

    def FF(self, i, j):
        return self.fij[..., i - 1, j - 1]

    def T(self, i):
        return self.th[..., i - 1]

    def D(self, i, p):
        """``E_p theta^i``."""
        return self.dth[..., i - 1, p - 1]

    def C(self, i, k):
        """``d theta^i / d x_k``."""
        return self.thc[..., i - 1, k - 1]

    def x(self, k):
        return self.pt[..., k - 1]

    @property
    def Xf(self):
        return np.einsum("...i,...i->...", self.th, self.fi)


def _r2(v: _SystemVars, m) -> dict:
    f, lam = v.f, v.lam
    kappa = sectional_commutative(m, 0, 1, v.pt)
    th, eta = v.T(1), v.T(2)
    fx, fy = v.fc[..., 0], v.fc[..., 1]
    th_x, th_y = v.C(1, 1), v.C(1, 2)
    eta_x, eta_y = v.C(2, 1), v.C(2, 2)
    return {
        (1, 1): th * fx + eta * fy + 2 * f * th_x - 2 * (lam - kappa) * f,
        (2, 2): th * fx + eta * fy + 2 * f * eta_y - 2 * (lam - kappa) * f,
        # the third equation, scaled by f to match the matrix slot it governs
        (1, 2): f * (eta_x + th_y),
    }


def _rxr(v: _SystemVars, m) -> dict:
    f, lam = v.f, v.lam
    kappa = gaussian_curvature_affine(m, v.pt)
    y = v.x(2)
    th, eta = v.T(1), v.T(2)
    fx, fy = v.fc[..., 0], v.fc[..., 1]
    th_x, th_y = v.C(1, 1), v.C(1, 2)
    eta_x, eta_y = v.C(2, 1), v.C(2, 2)
    return {
        (1, 1): y * eta * fx + y * th * fy + 2 * y * th_y * f - 2 * (lam - kappa) * f,
        (2, 2): y * eta * fx + y * th * fy + 2 * f * (y * eta_x - th) - 2 * (lam - kappa) * f,
        (1, 2): f * (eta + y * (eta_y + th_x)),
    }


def _off3(v: _SystemVars, p, q):
    f = v.f
    return (3 * v.F(p) * v.F(q) - 2 * f * v.FF(q, p)) / (2 * f**2)


def _r2xr(v: _SystemVars, m) -> dict:
    f, lam, Xf, F, FF, T, D = v.f, v.lam, v.Xf, v.F, v.FF, v.T, v.D
    th, eta, mu = T(1), T(2), T(3)
    return {
        (1, 1): Xf + 2 * D(1, 1) * f - 2 * (lam * f - (
            -2 * f * (2 * FF(1, 1) + FF(2, 2) + FF(3, 3)) + 4 * F(1) ** 2 + F(2) ** 2 + F(3) ** 2
            + 4 * f * (F(1) - 2 * f)) / (4 * f**2)),
        (1, 2): f * (eta + D(2, 1) + D(1, 2)) + _off3(v, 1, 2),
        (1, 3): f * (mu + D(3, 1) + D(1, 3)) + _off3(v, 1, 3),
        (2, 2): Xf + 2 * f * (D(2, 2) - th) - 2 * (lam * f - (
            -2 * f * (FF(1, 1) + 2 * FF(2, 2) + FF(3, 3)) + F(1) ** 2 + 4 * F(2) ** 2 + F(3) ** 2
            + 2 * f * (3 * F(1) - 4 * f)) / (4 * f**2)),
        (2, 3): f * (D(3, 2) + D(2, 3)) + _off3(v, 2, 3),
        (3, 3): Xf + 2 * f * (D(3, 3) - th) - 2 * (lam * f - (
            -2 * f * (FF(1, 1) + FF(2, 2) + 2 * FF(3, 3)) + F(1) ** 2 + F(2) ** 2 + 4 * F(3) ** 2
            + 2 * f * (3 * F(1) - 4 * f)) / (4 * f**2)),
    }


def _rxrxr(v: _SystemVars, m) -> dict:
    f, lam, Xf, F, FF, T, D = v.f, v.lam, v.Xf, v.F, v.FF, v.T, v.D
    th, eta = T(1), T(2)
    return {
        (1, 1): Xf + 2 * D(1, 1) * f - 2 * (lam * f - (
            -2 * f * (2 * FF(1, 1) + FF(2, 2) + FF(3, 3)) + 4 * F(1) ** 2 + F(2) ** 2 + F(3) ** 2
            + 2 * f * (F(1) - 2 * f)) / (4 * f**2)),
        (1, 2): f * (eta + D(2, 1) + D(1, 2)) + _off3(v, 1, 2),
        (1, 3): f * (D(3, 1) + D(1, 3)) + _off3(v, 1, 3),
        (2, 2): Xf + 2 * f * (D(2, 2) - th) - 2 * (lam * f - (
            -2 * f * (FF(1, 1) + 2 * FF(2, 2) + FF(3, 3)) + F(1) ** 2 + 4 * F(2) ** 2 + F(3) ** 2
            + 4 * f * F(1) - 4 * f**2) / (4 * f**2)),
        (2, 3): f * (D(3, 2) + D(2, 3)) + _off3(v, 2, 3),
        (3, 3): Xf + 2 * D(3, 3) * f - 2 * (lam * f - (
            -2 * f * (FF(1, 1) + FF(2, 2) + 2 * FF(3, 3)) + F(1) ** 2 + F(2) ** 2 + 4 * F(3) ** 2
            + 2 * f * F(1)) / (4 * f**2)),
    }


def _off4(v: _SystemVars, p, q):
    f = v.f
    return (3 * v.F(p) * v.F(q) - 2 * f * v.FF(q, p)) / f**2


def _diag4(v: _SystemVars, p, tail):
    f, F, FF = v.f, v.F, v.FF
    lap = sum(FF(i, i) for i in range(1, 5)) + 2 * FF(p, p)
    return 2 * (v.lam * f - (-f * lap + 3 * F(p) ** 2 + f * tail) / (2 * f**2))


def _rxrxr2(v: _SystemVars, m) -> dict:
    f, Xf, F, T, D = v.f, v.Xf, v.F, v.T, v.D
    th, eta = T(1), T(2)
    return {
        (1, 1): Xf + 2 * D(1, 1) * f - _diag4(v, 1, F(1) - 2 * f),
        (1, 2): f * (eta + D(2, 1) + D(1, 2)) + _off4(v, 1, 2),
        (1, 3): f * (D(3, 1) + D(1, 3)) + _off4(v, 1, 3),
        (1, 4): f * (D(4, 1) + D(1, 4)) + _off4(v, 1, 4),
        (2, 2): Xf + 2 * f * (D(2, 2) - th) - _diag4(v, 2, 3 * F(1) - 2 * f),
        (2, 3): f * (D(3, 2) + D(2, 3)) + _off4(v, 2, 3),
        (2, 4): f * (D(4, 2) + D(2, 4)) + _off4(v, 2, 4),
        (3, 3): Xf + 2 * D(3, 3) * f - _diag4(v, 3, F(1)),
        (3, 4): f * (D(4, 3) + D(3, 4)) + _off4(v, 3, 4),
        (4, 4): Xf + 2 * D(4, 4) * f - _diag4(v, 4, F(1)),
    }


def _rxrxrxr(v: _SystemVars, m) -> dict:
    f, Xf, F, T, D = v.f, v.Xf, v.F, v.T, v.D
    th, eta, mu, nu = T(1), T(2), T(3), T(4)
    return {
        (1, 1): Xf + 2 * D(1, 1) * f - _diag4(v, 1, F(1) + F(3) - 2 * f),
        (1, 2): f * (eta + D(2, 1) + D(1, 2)) + _off4(v, 1, 2),
        (1, 3): f * (D(3, 1) + D(1, 3)) + _off4(v, 1, 3),
        (1, 4): f * (D(4, 1) + D(1, 4)) + _off4(v, 1, 4),
        (2, 2): Xf + 2 * f * (D(2, 2) - th) - _diag4(v, 2, 3 * F(1) + F(3) - 2 * f),
        (2, 3): f * (D(3, 2) + D(2, 3)) + _off4(v, 2, 3),
        (2, 4): f * (D(4, 2) + D(2, 4)) + _off4(v, 2, 4),
        (3, 3): Xf + 2 * D(3, 3) * f - _diag4(v, 3, F(1) + F(3) - 2 * f),
        (3, 4): f * (nu + D(4, 3) + D(3, 4)) + _off4(v, 3, 4),
        (4, 4): Xf + 2 * f * (D(4, 4) - mu) - _diag4(v, 4, F(1) + 3 * F(3) - 2 * f),
    }


KERNELS: dict[str, Callable[[_SystemVars, FInvariantMetric], dict]] = {
    "r2": _r2,
    "rxr+": _rxr,
    "r2xr+": _r2xr,
    "rxr+xr": _rxrxr,
    "rxr+xr2": _rxrxr2,
    "rxr+xrxr+": _rxrxrxr,
}


def system_vars(
    m: FInvariantMetric, X: Sequence[Expr], lam: Expr, point, kind: str = "frame", data: FrameData | None = None
) -> _SystemVars:
    g = m.group
    p = _points(g, point)
    d = data or frame_data(m, p)
    fc = G.eval_jets([m.f], p, 1).grad[..., 0, :]
    th, dth = frame_field(m, X, p, kind)
    if kind == "frame":
        thc = G.eval_jets(X, p, 1).grad
    else:
        thc = np.einsum("...ip,...pk->...ik", dth, np.linalg.inv(G.frame_matrix(g, p)))
    return _SystemVars(p, d.f, d.fi, d.fij, fc, th, dth, thc, scalar_values(lam, p))


def specialized_system(
    m: FInvariantMetric, X: Sequence[Expr], lam: Expr, point, kind: str = "frame", data: FrameData | None = None
) -> np.ndarray:
    kernel = KERNELS.get(m.group.name)
    if kernel is None:
        raise NoKernelError(f"no specialized system registered for group '{m.group.name}'")
    v = system_vars(m, X, lam, point, kind, data)
    eqs = kernel(v, m)
    n = m.dim
    out = np.zeros(v.f.shape + (n, n))
    for (p, q), val in eqs.items():
        out[..., p - 1, q - 1] = val
        out[..., q - 1, p - 1] = val
    return out


def specialized_residual(case: SolitonCase, point, data: FrameData | None = None) -> np.ndarray:
    """The group's displayed system, each equation as LHS - RHS, packed symmetrically."""
    return specialized_system(case.metric, case.X, case.lam, point, case.x_kind, data)


def general_residual(
    m: FInvariantMetric, X: Sequence[Expr], lam: Expr, point, kind: str = "frame", data: FrameData | None = None
) -> np.ndarray:
    """``L_X g - 2(lambda g - Ric)`` for arbitrary ``(f, X, lambda)``."""
    p = _points(m.group, point)
    d = data or frame_data(m, p)
    lie = lie_derivative_metric(m, X, p, kind, d)
    lv = scalar_values(lam, p)
    return lie - 2 * ((lv * d.f)[..., None, None] * np.eye(m.dim) - ricci_matrix(m, p, d))


# -- classification -----------------------------------------------------------------


def classify_value(lam: float) -> str:
    if abs(lam) < STEADY_TOL:
        return "steady"
    return "shrinking" if lam > 0 else "expanding"


def classify(case: SolitonCase) -> str:
    return classify_value(lambda_constant(case))


# -- Ricci flow ----------------------------------------------------------------------


@dataclass(frozen=True)
class FlowReport:
    times: np.ndarray
    deviation: np.ndarray  # max |d/dt g_t + 2 Ric(g_t)| over probes, per time
    t0_deviation: float
    probes: np.ndarray
    scale: str

    @property
    def max_deviation(self) -> float:
        return float(np.max(self.deviation))

    def ok(self, tol: float) -> bool:
        return bool(self.t0_deviation < tol and self.max_deviation < tol)


def default_probes(case: SolitonCase) -> np.ndarray:
    """A small grid over the middle half of the case's sampling box."""
    box = case.sample_box()
    lo = np.asarray(box.lo)
    hi = np.asarray(box.hi)
    mid, half = (lo + hi) / 2, (hi - lo) / 4
    k = 5 if case.group.dim <= 2 else 3
    inner = Box(tuple(mid - half), tuple(mid + half), (k,) * case.group.dim)
    return inner.grid()


def _velocity(case: SolitonCase, state: list, scale: float) -> list:
    m = case.metric
    g = m.group
    n = g.dim
    shape = state[0].shape
    order = state[0].order

    def ev(e):
        return J.lift(evaluate(e, state), n, order, shape)

    if case.x_kind == "coords":
        v = [ev(e) for e in case.X]
    else:
        theta = [ev(e) for e in case.X]
        a = [[ev(e) for e in row] for row in g.frame]
        v = [sum((theta[i] * a[i][k] for i in range(1, n)), theta[0] * a[0][k]) for k in range(n)]
    return [c * scale for c in v]


def _rk4(case: SolitonCase, state: list, t: float, h: float, lam: float, rescale: bool) -> list:
    def s(time):
        return 1.0 / (1.0 - 2.0 * lam * time) if rescale else 1.0

    def shift(u, k, c):
        return [a + b * c for a, b in zip(u, k)]

    k1 = _velocity(case, state, s(t))
    k2 = _velocity(case, shift(state, k1, h / 2), s(t + h / 2))
    k3 = _velocity(case, shift(state, k2, h / 2), s(t + h / 2))
    k4 = _velocity(case, shift(state, k3, h), s(t + h))
    out = [u + (a + 2 * b + 2 * c + d) * (h / 6) for u, a, b, c, d in zip(state, k1, k2, k3, k4)]
    vals = np.stack([u.value for u in out], axis=-1)
    if not np.all(np.isfinite(vals)) or not np.all(case.group.in_domain(vals)):
        raise FlowDomainError(f"case {case.id}: the flow leaves the chart domain before t = {t + h:g}")
    return out


def _pullback(case: SolitonCase, state: list, sigma: float):
    vals = np.stack([u.value for u in state], axis=-1)
    dphi = np.stack([u.grad for u in state], axis=-2)  # [..., k, l] = d phi_k / d x_l
    gmat = metric_coords(case.metric, vals)
    ric = oracle_tensors(case.metric, vals).ricci
    g_t = sigma * np.einsum("...kl,...km,...mn->...ln", dphi, gmat, dphi)
    ric_t = np.einsum("...kl,...km,...mn->...ln", dphi, ric, dphi)
    return g_t, ric_t


def flow_check(
    case: SolitonCase,
    t_max: float = 0.2,
    steps: int = 64,
    probes=None,
    samples: int = 8,
    fd_step: float = 1e-4,
    rescale: bool = True,
) -> FlowReport:
    """Compare ``d/dt g_t`` against ``-2 Ric(g_t)`` for ``g_t = (1 - 2 lambda t) psi_t^* g``.

    ``psi_t`` is integrated with classical RK4 on jets, so ``D psi_t`` is exact up to
    the integrator.  With ``rescale`` the generator is ``X / (1 - 2 lambda t)``,
    which makes the identity hold for all ``t``; without it ``psi_t`` is the plain
    flow of ``X`` and the identity holds at ``t = 0`` (or for ``lambda = 0``) only.
    ``d/dt`` is a central difference with step ``fd_step`` around each sampled time.
    """
    lam = lambda_constant(case)
    if steps < 1 or t_max <= 0:
        raise SolitonError("flow needs t_max > 0 and at least one step")
    if 1 - 2 * lam * t_max <= 0:
        raise SolitonError(f"1 - 2*lambda*t_max = {1 - 2 * lam * t_max:g} must be positive")
    pts = default_probes(case) if probes is None else np.asarray(probes, dtype=float)
    state = J.seed_all(pts, 1)
    h = t_max / steps
    every = max(1, steps // max(1, samples))
    times, devs = [], []

    def probe(st, t):
        sigma = lambda tt: 1 - 2 * lam * tt
        fwd = _rk4(case, st, t, fd_step, lam, rescale)
        g_p, _ = _pullback(case, fwd, sigma(t + fd_step))
        bwd = _rk4(case, st, t, -fd_step, lam, rescale)
        g_m, _ = _pullback(case, bwd, sigma(t - fd_step))
        g_0, ric_0 = _pullback(case, st, sigma(t))
        ddt = (g_p - g_m) / (2 * fd_step)
        return float(np.max(np.abs(ddt + 2 * ric_0)))

    t = 0.0
    for k in range(steps + 1):
        if k % every == 0 or k == steps:
            times.append(t)
            devs.append(probe(state, t))
        if k < steps:
            state = _rk4(case, state, t, h, lam, rescale)
            t = (k + 1) * h
    return FlowReport(np.asarray(times), np.asarray(devs), devs[0], pts, "rescaled" if rescale else "literal")
