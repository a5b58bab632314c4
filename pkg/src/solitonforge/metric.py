"""f-left-invariant metrics: ``g(E_i, E_j) = f * delta_ij`` for a frame orthonormal at e."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import group as G
from . import jets as J
from .exprlang import Expr, eval_expr, parse, to_text
from .group import LieGroupSpec
from .jets import Jet


class MetricError(ValueError):
    pass


@dataclass(frozen=True)
class FInvariantMetric:
    group: LieGroupSpec
    f: Expr

    @property
    def dim(self) -> int:
        return self.group.dim

    def f_text(self) -> str:
        return to_text(self.f)


def make_metric(group: LieGroupSpec, f: str | Expr, rng: np.random.Generator | None = None) -> FInvariantMetric:
    """Attach a conformal factor; checks ``f(e) = 1`` and positivity on samples."""
    fe = parse(f, group.coords) if isinstance(f, str) else f
    m = FInvariantMetric(group, fe)
    at_e = eval_expr(fe, group.identity)
    if abs(at_e - 1.0) > 1e-12:
        raise MetricError(f"f(e) must be 1, got {at_e!r} for f = {to_text(fe)}")
    rng = rng if rng is not None else np.random.default_rng(0)
    pts = np.concatenate([group.box().grid() if group.dim <= 2 else group.box(6).grid(),
                          group.box().random(200, rng)])
    vals = np.asarray(eval_expr(fe, pts))
    if np.any(~(vals > 0)):
        raise MetricError(f"f = {to_text(fe)} is not positive on the sampling box")
    return m


def f_values(m: FInvariantMetric, point) -> np.ndarray:
    return np.asarray(eval_expr(m.f, point), dtype=float)


def metric_frame(m: FInvariantMetric, point) -> np.ndarray:
    """Frame components ``g(E_i, E_j) = f * I``."""
    f = f_values(m, point)
    return f[..., None, None] * np.eye(m.dim)


def metric_coords(m: FInvariantMetric, point, order: int = 0):
    """Coordinate components ``g_kl = f * (A^-1 A^-T)_kl``; a jet for ``order >= 1``."""
    p = np.asarray(point, dtype=float)
    if order == 0:
        a = G.frame_matrix(m.group, p)
        G._check_invertible(a)
        inv = np.linalg.inv(a)
        return f_values(m, p)[..., None, None] * inv @ np.swapaxes(inv, -1, -2)
    aj = G.frame_jet(m.group, p, order)
    G._check_invertible(aj.value)
    inv = J.inverse(aj)
    fj = G.eval_jets([m.f], p, order)  # shape S + (1,)
    gram = J.matmul(inv, J.transpose(inv))
    return gram * fj.expand_dims(-1)


def inner(gram: np.ndarray, u: np.ndarray, v: np.ndarray) -> np.ndarray:
    return np.einsum("...k,...kl,...l->...", u, gram, v)


def check_f_left_invariance(
    m: FInvariantMetric,
    pairs: Sequence[tuple[np.ndarray, np.ndarray]] | tuple[np.ndarray, np.ndarray],
    tangents: np.ndarray | None = None,
) -> float:
    """Max of ``|<L_b* X, L_b* Y>_{ba} - <X, Y>_a f(ba)/f(a)|`` over samples.

    ``pairs`` is ``(a, b)`` as two arrays of points (or a list of point pairs);
    ``tangents`` defaults to the coordinate basis vectors.
    """
    a, b = _pairs(m, pairs)
    n = m.dim
    tv = np.eye(n) if tangents is None else np.asarray(tangents, dtype=float)
    ba = G.multiply(m.group, b, a)
    jac = G.left_translation_jacobian(m.group, b, a)
    g_a = metric_coords(m, a)
    g_ba = metric_coords(m, ba)
    ratio = f_values(m, ba) / f_values(m, a)
    pushed = np.einsum("...kl,tl->...tk", jac, tv)  # (B, T, n)
    lhs = np.einsum("...sk,...kl,...tl->...st", pushed, g_ba, pushed)
    rhs = np.einsum("sk,...kl,tl->...st", tv, g_a, tv) * ratio[..., None, None]
    return float(np.max(np.abs(lhs - rhs)))


def _pairs(m, pairs):
    if isinstance(pairs, tuple) and len(pairs) == 2 and np.ndim(pairs[0]) == 2:
        return np.asarray(pairs[0], float), np.asarray(pairs[1], float)
    arr = np.asarray(pairs, dtype=float)
    if arr.ndim == 2:  # a single (a, b)
        arr = arr[None]
    return arr[:, 0, :], arr[:, 1, :]


def check_bracket_symmetry(g: LieGroupSpec) -> bool:
    """``<X, [Y, Z]> = <[X, Y], Z>`` on the Lie algebra, i.e. ``alpha_jki == alpha_ijk``."""
    return bool(np.array_equal(np.transpose(g.alpha, (2, 0, 1)), g.alpha))


def identity_gram(g: LieGroupSpec) -> np.ndarray:
    """Coordinate inner product at e making the frame orthonormal there."""
    a = G.frame_matrix(g, np.asarray(g.identity))
    inv = np.linalg.inv(a)
    return inv @ inv.T


def check_ad_invariance(g: LieGroupSpec, a, basis: np.ndarray | None = None) -> float:
    """Max of ``|<Ad_a X, Ad_a Y>_e - <X, Y>_e|`` over pairs of basis vectors at e."""
    ad = G.conjugation_jacobian(g, a)
    vecs = G.frame_matrix(g, np.asarray(g.identity)) if basis is None else np.asarray(basis, float)
    gram = identity_gram(g)
    moved = vecs @ ad.T
    lhs = moved @ gram @ moved.T
    rhs = vecs @ gram @ vecs.T
    return float(np.max(np.abs(lhs - rhs)))


def check_f_symmetric(m: FInvariantMetric, pairs, tol: float = 1e-10) -> bool:
    """``f(ab) == f(ba)`` on every sampled pair."""
    a, b = _pairs(m, pairs)
    ab = G.multiply(m.group, a, b)
    ba = G.multiply(m.group, b, a)
    return bool(np.max(np.abs(f_values(m, ab) - f_values(m, ba))) < tol)


def is_positive_definite(gram: np.ndarray) -> np.ndarray:
    """Leading principal minors all positive."""
    n = gram.shape[-1]
    ok = np.ones(gram.shape[:-2], dtype=bool)
    for k in range(1, n + 1):
        ok &= np.linalg.det(gram[..., :k, :k]) > 0
    return ok
