"""Curvature of f-left-invariant metrics.

Two independent routes are provided:

* closed-form frame formulas in terms of ``f``, the frame derivatives
  ``f_i = E_i f``, ``f_ij = E_j E_i f`` and the structure constants;
* a coordinate oracle that builds ``g_kl`` from the frame and ``f``, and
  computes Christoffel symbols, the Riemann tensor and Ricci contraction
  without ever touching the structure constants.

Conventions: ``R(X, Y) Z = nabla_X nabla_Y Z - nabla_Y nabla_X Z - nabla_[X,Y] Z``
and ``K(E_p, E_q) = <R(E_p, E_q) E_q, E_p> / f^2``.  All array results carry
the point's batch axes first.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import group as G
from .metric import FInvariantMetric, metric_coords


class CurvatureError(ValueError):
    pass


@dataclass(frozen=True)
class FrameData:
    f: np.ndarray  # S
    fi: np.ndarray  # S + (n,)
    fij: np.ndarray  # S + (n, n), fij[..., i, j] = E_j E_i f
    alpha: np.ndarray  # (n, n, n)


def frame_data(m: FInvariantMetric, point) -> FrameData:
    f, fi, fij = G.frame_derivatives(m.group, m.f, point)
    if np.any(~(f > 0)):
        raise CurvatureError("f must be positive at every evaluation point")
    return FrameData(f, fi, fij, m.group.alpha)


def _koszul(d: FrameData) -> np.ndarray:
    """``C_ijk = delta_jk f_i + delta_ik f_j - delta_ij f_k + f (a_ijk + a_kij - a_jki)``."""
    n = d.alpha.shape[0]
    eye = np.eye(n)
    a = d.alpha
    struct = a + np.transpose(a, (1, 2, 0)) - np.transpose(a, (2, 0, 1))
    fi = d.fi
    return (
        eye[None, :, :] * fi[..., :, None, None]
        + eye[:, None, :] * fi[..., None, :, None]
        - eye[:, :, None] * fi[..., None, None, :]
        + d.f[..., None, None, None] * struct
    )


@dataclass(frozen=True)
class ConnectionCoeffs:
    """``nabla_{E_i} E_j = sum_k gamma[..., i, j, k] E_k``."""

    gamma: np.ndarray


def connection_coeffs(m: FInvariantMetric, point, data: FrameData | None = None) -> ConnectionCoeffs:
    d = data or frame_data(m, point)
    return ConnectionCoeffs(_koszul(d) / (2.0 * d.f[..., None, None, None]))


def riemann_frame(m: FInvariantMetric, point, data: FrameData | None = None) -> np.ndarray:
    """``R[..., i, j, k, l]`` with ``R(E_i, E_j) E_k = sum_l R_ijkl E_l``."""
    d = data or frame_data(m, point)
    n = d.alpha.shape[0]
    eye = np.eye(n)
    f, fi, fij, a = d.f, d.fi, d.fij, d.alpha
    f_ = f[..., None, None, None, None]
    c = _koszul(d)

    # 2f(delta_lj f_ki - delta_jk f_li - delta_li f_kj + delta_ik f_lj)
    t1 = 2 * f_ * (
        np.einsum("lj,...ki->...ijkl", eye, fij)
        - np.einsum("jk,...li->...ijkl", eye, fij)
        - np.einsum("li,...kj->...ijkl", eye, fij)
        + np.einsum("ik,...lj->...ijkl", eye, fij)
    )
    # -2 f_i (delta_lj f_k - delta_jk f_l) + 2 f_j (delta_li f_k - delta_ik f_l)
    t2 = (
        -2 * np.einsum("...i,lj,...k->...ijkl", fi, eye, fi)
        + 2 * np.einsum("...i,jk,...l->...ijkl", fi, eye, fi)
        + 2 * np.einsum("...j,li,...k->...ijkl", fi, eye, fi)
        - 2 * np.einsum("...j,ik,...l->...ijkl", fi, eye, fi)
    )
    # sum_r C_jkr C_irl - C_ikr C_jrl - 2 f a_ijr (delta_lr f_k - delta_rk f_l + f(a_rkl + a_lrk - a_klr))
    struct = a + np.transpose(a, (1, 2, 0)) - np.transpose(a, (2, 0, 1))
    last = (
        np.einsum("lr,...k->...rkl", eye, fi)
        - np.einsum("rk,...l->...rkl", eye, fi)
        + f[..., None, None, None] * struct
    )
    t3 = (
        np.einsum("...jkr,...irl->...ijkl", c, c)
        - np.einsum("...ikr,...jrl->...ijkl", c, c)
        - 2 * f_ * np.einsum("ijr,...rkl->...ijkl", a, last)
    )
    return (t1 + t2 + t3) / (4 * f_**2)


def sectional_matrix(m: FInvariantMetric, point, data: FrameData | None = None) -> np.ndarray:
    """``K(E_p, E_q)`` for all ``p != q`` by the closed-form sectional formula; zero diagonal."""
    d = data or frame_data(m, point)
    n = d.alpha.shape[0]
    eye = np.eye(n)
    f, fi, fij, a = d.f, d.fi, d.fij, d.alpha
    F = f[..., None, None]
    fp = fi[..., :, None]
    fq = fi[..., None, :]
    fpp = np.einsum("...pp->...p", fij)
    base = (
        2 * F * eye * (np.swapaxes(fij, -1, -2) + fij)
        - 2 * F * (fpp[..., :, None] + fpp[..., None, :])
        - 4 * eye * fp * fq
        + 2 * fp**2
        + 2 * fq**2
    )
    F3 = f[..., None, None, None]
    fr = fi[..., None, None, :]  # (p, q, r)
    a_rqq = np.einsum("rqq->qr", a)[None, :, :]  # index (p, q, r)
    a_prp = np.einsum("prp->pr", a)[:, None, :]
    a_pqr = a
    a_rpq = np.transpose(a, (1, 2, 0))  # [p,q,r] -> a[r,p,q]
    a_qrp = np.transpose(a, (2, 0, 1))  # [p,q,r] -> a[q,r,p]
    a_rqp = np.transpose(a, (2, 1, 0))  # [p,q,r] -> a[r,q,p]
    a_prq = np.transpose(a, (0, 2, 1))  # [p,q,r] -> a[p,r,q]
    a_qpr = np.transpose(a, (1, 0, 2))  # [p,q,r] -> a[q,p,r]
    d_rq = eye[None, :, :]  # delta_rq at (p, q, r)
    d_rp = eye[:, None, :]  # delta_rp
    d_pq = eye[:, :, None]
    fq3 = fi[..., None, :, None]
    fp3 = fi[..., :, None, None]
    s = (
        (2 * d_rq * fq3 - fr + 2 * F3 * a_rqq) * (fr + 2 * F3 * a_prp)
        - (d_rp * fq3 + F3 * a_pqr) ** 2
        + (d_rq * fp3 - d_pq * fr + F3 * (a_rpq - a_qrp)) ** 2
        - 2 * F3 * a_pqr * (d_rp * fq3 - d_rq * fp3 + F3 * (a_rqp + a_prq - a_qpr))
    ).sum(axis=-1)
    k = (base + s) / (4 * F**3)
    return k * (1 - eye)


def sectional(m: FInvariantMetric, p: int, q: int, point) -> np.ndarray:
    """``K(E_p, E_q)`` (0-based indices)."""
    if p == q:
        raise CurvatureError("sectional curvature needs two distinct frame vectors")
    return sectional_matrix(m, point)[..., p, q]


def sectional_commutative(m: FInvariantMetric, p: int, q: int, point) -> np.ndarray:
    """Sectional curvature for a commutative group, where all structure constants vanish."""
    if not m.group.commutative:
        raise CurvatureError(f"group '{m.group.name}' is not commutative")
    if p == q:
        raise CurvatureError("sectional curvature needs two distinct frame vectors")
    d = frame_data(m, point)
    f, fi, fij = d.f, d.fi, d.fij
    return (
        -f * (fij[..., p, p] + fij[..., q, q])
        + 1.5 * (fi[..., p] ** 2 + fi[..., q] ** 2)
        - 0.5 * np.sum(fi**2, axis=-1)
    ) / (2 * f**3)


def gaussian_curvature_affine(m: FInvariantMetric, point) -> np.ndarray:
    """Gaussian curvature on the two-dimensional affine group with ``[E_1, E_2] = E_2``."""
    d = frame_data(m, point)
    f, fi, fij = d.f, d.fi, d.fij
    f1, f2 = fi[..., 0], fi[..., 1]
    return (-f * (fij[..., 0, 0] + fij[..., 1, 1]) + f1**2 + f2**2 + f * f1 - 2 * f**2) / (2 * f**3)


def ricci_matrix(m: FInvariantMetric, point, data: FrameData | None = None) -> np.ndarray:
    """``Ric(E_p, E_q)`` for all ``p, q`` by the closed-form double sum."""
    d = data or frame_data(m, point)
    n = d.alpha.shape[0]
    eye = np.eye(n)
    f, fi, fij, a = d.f, d.fi, d.fij, d.alpha
    c = _koszul(d)  # c[p, q, r] = delta_qr f_p + delta_rp f_q - delta_pq f_r + f(a_pqr + a_rpq - a_qrp)
    F = f[..., None, None]
    ftr = np.einsum("...jj->...", fij)[..., None, None]
    # sum_j 2f(delta_jp f_qj - delta_pq f_jj - f_qp + delta_jq f_jp)
    fqp = np.swapaxes(fij, -1, -2)
    t1 = 2 * F * ((2 - n) * fqp - eye * ftr)
    # sum_j -2 f_j(delta_jp f_q - delta_pq f_j) + 2 f_p(f_q - delta_jq f_j)
    sq = np.sum(fi**2, axis=-1)[..., None, None]
    fp = fi[..., :, None]
    fq = fi[..., None, :]
    t2 = -2 * fp * fq + 2 * eye * sq + 2 * n * fp * fq - 2 * fp * fq
    # sum_{j,r} C_pqr (f_r + 2 f a_jrj); f_r does not depend on j
    trace_a = np.einsum("jrj->r", a)
    v = n * fi + 2 * f[..., None] * trace_a
    t3 = (c @ v[..., None, :, None])[..., 0]
    # - C_jqr C_prj, as a matrix product over the pair (j, r)
    lead = c.shape[:-3]
    cq = np.swapaxes(c, -3, -2).reshape(lead + (n, n * n))  # [q, (j, r)]
    cp = np.transpose(c, tuple(range(len(lead))) + tuple(len(lead) + k for k in (2, 1, 0)))
    t4 = -(cq @ cp.reshape(lead + (n * n, n))).swapaxes(-1, -2)
    # - 2 f a_jpr (delta_jr f_q - delta_rq f_j + f(a_rqj + a_jrq - a_qjr))
    struct = a + np.transpose(a, (1, 2, 0)) - np.transpose(a, (2, 0, 1))  # struct[r,q,j] = a_rqj + a_jrq - a_qjr
    last = (
        eye.T[:, None, :] * fi[..., None, :, None]
        - eye[:, :, None] * fi[..., None, None, :]
        + f[..., None, None, None] * struct
    )  # [r, q, j]
    a2 = np.transpose(a, (1, 0, 2)).reshape(n, n * n)  # [p, (j, r)]
    l2 = np.transpose(last, tuple(range(len(lead))) + tuple(len(lead) + k for k in (2, 0, 1)))
    t5 = -2 * F * (a2 @ l2.reshape(lead + (n * n, n)))
    return (t1 + t2 + t3 + t4 + t5) / (4 * F**2)


def ricci_frame(m: FInvariantMetric, p: int, q: int, point) -> np.ndarray:
    return ricci_matrix(m, point)[..., p, q]


def ricci_from_riemann(m: FInvariantMetric, point) -> np.ndarray:
    """``(1/f) sum_j <R(E_j, E_p) E_q, E_j>``, assembled from the Riemann components."""
    r = riemann_frame(m, point)
    return np.einsum("...jpqj->...pq", r)


def sectional_from_riemann(m: FInvariantMetric, point) -> np.ndarray:
    r = riemann_frame(m, point)
    d = frame_data(m, point)
    k = np.einsum("...pqqp->...pq", r) / d.f[..., None, None]
    return k * (1 - np.eye(m.dim))


def scalar_curvature(m: FInvariantMetric, point, ricci: np.ndarray | None = None) -> np.ndarray:
    """Trace of Ricci in the orthonormal frame ``E_i / sqrt(f)``."""
    d = frame_data(m, point)
    ric = ricci_matrix(m, point, d) if ricci is None else ricci
    return np.einsum("...pp->...", ric) / d.f


# -- coordinate oracle ---------------------------------------------------------


@dataclass(frozen=True)
class OracleTensors:
    gamma: np.ndarray  # Gamma^k_ij as [..., k, i, j]
    riemann: np.ndarray  # R^l_ijk as [..., l, i, j, k]: R(d_i, d_j) d_k = R^l_ijk d_l
    ricci: np.ndarray  # coordinate Ric_jk
    metric: np.ndarray


def oracle_tensors(m: FInvariantMetric, point) -> OracleTensors:
    gj = metric_coords(m, point, order=2)
    g = gj.value
    dg = gj.grad  # dg[..., a, b, c] = d_c g_ab
    ddg = gj.hess  # ddg[..., a, b, c, d] = d_c d_d g_ab
    ginv = np.linalg.inv(g)
    # first kind: Gamma_{l,ij} = 1/2 (d_i g_jl + d_j g_il - d_l g_ij)
    first = 0.5 * (
        np.einsum("...jli->...lij", dg) + np.einsum("...ilj->...lij", dg) - np.einsum("...ijl->...lij", dg)
    )
    dfirst = 0.5 * (
        np.einsum("...jlim->...lijm", ddg)
        + np.einsum("...iljm->...lijm", ddg)
        - np.einsum("...ijlm->...lijm", ddg)
    )
    gamma = np.einsum("...kl,...lij->...kij", ginv, first)
    dginv = -np.einsum("...ka,...abm,...bl->...klm", ginv, dg, ginv)
    dgamma = np.einsum("...klm,...lij->...kijm", dginv, first) + np.einsum(
        "...kl,...lijm->...kijm", ginv, dfirst
    )
    # R^l_ijk = d_i Gamma^l_jk - d_j Gamma^l_ik + Gamma^l_im Gamma^m_jk - Gamma^l_jm Gamma^m_ik
    riem = (
        np.einsum("...ljki->...lijk", dgamma)
        - np.einsum("...likj->...lijk", dgamma)
        + np.einsum("...lim,...mjk->...lijk", gamma, gamma)
        - np.einsum("...ljm,...mik->...lijk", gamma, gamma)
    )
    ricci = np.einsum("...iijk->...jk", riem)
    return OracleTensors(gamma, riem, ricci, g)


@dataclass(frozen=True)
class OracleCurvature:
    sectional: np.ndarray
    ricci: np.ndarray
    scalar: np.ndarray


def oracle_frame_curvature(m: FInvariantMetric, point) -> OracleCurvature:
    """Sectional/Ricci on frame planes computed from the coordinate metric alone."""
    t = oracle_tensors(m, point)
    a = G.frame_matrix(m.group, point)  # frame vectors as rows
    lower = np.einsum("...lijk,...lm->...ijkm", t.riemann, t.metric)  # <R(d_i,d_j)d_k, d_m>
    rpqqp = np.einsum("...pi,...qj,...qk,...pm,...ijkm->...pq", a, a, a, a, lower)
    gram = np.einsum("...pi,...ij,...qj->...pq", a, t.metric, a)
    diag = np.einsum("...pp->...p", gram)
    area = diag[..., :, None] * diag[..., None, :] - gram**2
    n = m.dim
    safe = np.where(np.eye(n, dtype=bool), 1.0, area)
    k = np.where(np.eye(n, dtype=bool), 0.0, rpqqp / safe)
    ric = np.einsum("...pj,...qk,...jk->...pq", a, a, t.ricci)
    scalar = np.einsum("...jk,...jk->...", np.linalg.inv(t.metric), t.ricci)
    return OracleCurvature(k, ric, scalar)


@dataclass(frozen=True)
class CurvatureReport:
    point: np.ndarray
    sectional: np.ndarray
    ricci: np.ndarray
    scalar: np.ndarray
    oracle_deviation: np.ndarray  # per point


def curvature_report(m: FInvariantMetric, point) -> CurvatureReport:
    """Frame-formula curvature with its per-point deviation from the coordinate oracle."""
    p = np.asarray(point, dtype=float)
    d = frame_data(m, p)
    k = sectional_matrix(m, p, d)
    ric = ricci_matrix(m, p, d)
    scalar = np.einsum("...pp->...", ric) / d.f
    o = oracle_frame_curvature(m, p)
    dev = _deviation(k, ric, o)
    return CurvatureReport(p, k, ric, scalar, dev)


def oracle_curvature(m: FInvariantMetric, point) -> CurvatureReport:
    """Oracle values, with their per-point deviation from the frame formulas."""
    p = np.asarray(point, dtype=float)
    o = oracle_frame_curvature(m, p)
    d = frame_data(m, p)
    dev = _deviation(sectional_matrix(m, p, d), ricci_matrix(m, p, d), o)
    return CurvatureReport(p, o.sectional, o.ricci, o.scalar, dev)


def _deviation(k: np.ndarray, ric: np.ndarray, o: OracleCurvature) -> np.ndarray:
    dk = np.abs(k - o.sectional).reshape(k.shape[:-2] + (-1,)).max(axis=-1)
    dr = np.abs(ric - o.ricci).reshape(ric.shape[:-2] + (-1,)).max(axis=-1)
    return np.maximum(dk, dr)
