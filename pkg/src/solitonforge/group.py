"""Lie groups given on a single chart.

A group is described by its coordinate names, open half-space constraints,
identity point, a left-invariant frame ``E_i = sum_k A[i][k] d/dx_k`` written
as expressions, its structure constants ``[E_i, E_j] = sum_k alpha[i,j,k] E_k``
and, optionally, the multiplication law.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from . import jets as J
from .exprlang import Expr, evaluate, parse, to_text, FUNCTIONS
from .jets import Jet
from .sampling import Box, default_box

MAX_DIM = 8
DET_TOL = 1e-12


class GroupError(ValueError):
    """Malformed group data, or an operation the group cannot support."""


class SingularFrameError(GroupError):
    pass


class InversionError(GroupError):
    pass


@dataclass(frozen=True)
class LieGroupSpec:
    name: str
    coords: tuple[str, ...]
    positive: tuple[int, ...]
    identity: tuple[float, ...]
    frame: tuple[tuple[Expr, ...], ...]
    alpha: np.ndarray = field(compare=False, repr=False)
    mul: tuple[Expr, ...] | None = None

    @property
    def dim(self) -> int:
        return len(self.coords)

    @property
    def commutative(self) -> bool:
        return not np.any(self.alpha)

    def in_domain(self, point: np.ndarray) -> np.ndarray:
        p = np.asarray(point, dtype=float)
        ok = np.ones(p.shape[:-1], dtype=bool)
        for k in self.positive:
            ok &= p[..., k] > 0
        return ok

    def box(self, count: int = 20) -> Box:
        return default_box(self.positive, self.dim, count)

    def frame_text(self) -> list[list[str]]:
        return [[to_text(e) for e in row] for row in self.frame]


def mul_coords(coords: Sequence[str]) -> list[str]:
    """Variable names of the multiplication law: left factor ``x1, y1..``, right ``x2, y2..``."""
    return [c + "1" for c in coords] + [c + "2" for c in coords]


def make_group(
    name: str,
    coords: Sequence[str],
    positive: Sequence[str],
    identity: Sequence[float],
    frame: Sequence[Sequence[str]],
    alpha: Mapping[tuple[int, int, int], float] | np.ndarray,
    mul: Sequence[str] | None = None,
) -> LieGroupSpec:
    """Build a group from text.  ``alpha`` maps 1-based ``(i, j, k)`` to values, or is a dense array."""
    coords = tuple(coords)
    n = len(coords)
    if not 1 <= n <= MAX_DIM:
        raise GroupError(f"dimension must be between 1 and {MAX_DIM}, got {n}")
    if len(set(coords)) != n:
        raise GroupError("coordinate names must be distinct")
    for c in coords:
        if c in FUNCTIONS:
            raise GroupError(f"coordinate name '{c}' clashes with a built-in function")
    unknown = [c for c in positive if c not in coords]
    if unknown:
        raise GroupError(f"domain constraint on unknown coordinate(s) {unknown}")
    pos = tuple(sorted(coords.index(c) for c in positive))
    if len(identity) != n:
        raise GroupError("identity has the wrong number of coordinates")
    if len(frame) != n or any(len(row) != n for row in frame):
        raise GroupError(f"frame must be a {n}x{n} array of expressions")
    frame_exprs = tuple(tuple(parse(str(t), coords) for t in row) for row in frame)
    if isinstance(alpha, np.ndarray):
        a = np.array(alpha, dtype=float)
        if a.shape != (n, n, n):
            raise GroupError(f"alpha must have shape {(n, n, n)}")
    else:
        a = np.zeros((n, n, n))
        for (i, j, k), v in alpha.items():
            if not all(1 <= t <= n for t in (i, j, k)):
                raise GroupError(f"structure-constant index {(i, j, k)} out of range")
            a[i - 1, j - 1, k - 1] = v
    mul_exprs = None
    if mul is not None:
        if len(mul) != n:
            raise GroupError("multiplication law needs one expression per coordinate")
        mul_exprs = tuple(parse(str(t), mul_coords(coords)) for t in mul)
    a.setflags(write=False)
    g = LieGroupSpec(name, coords, pos, tuple(float(v) for v in identity), frame_exprs, a, mul_exprs)
    if not g.in_domain(np.asarray(g.identity)):
        raise GroupError("identity point violates the domain constraints")
    return g


# -- frame evaluation ----------------------------------------------------------


def _as_points(g: LieGroupSpec, point) -> np.ndarray:
    p = np.asarray(point, dtype=float)
    if p.shape[-1] != g.dim:
        raise GroupError(f"expected points with {g.dim} coordinates, got shape {p.shape}")
    return p


def frame_matrix(g: LieGroupSpec, point) -> np.ndarray:
    """``A[..., i, k]``: coefficient of ``d/dx_k`` in ``E_i``."""
    p = _as_points(g, point)
    xs = [p[..., k] for k in range(g.dim)]
    out = np.empty(p.shape[:-1] + (g.dim, g.dim))
    for i, row in enumerate(g.frame):
        for k, e in enumerate(row):
            out[..., i, k] = evaluate(e, xs)
    return out


def eval_jets(exprs: Sequence[Expr], point, order: int) -> Jet:
    """Jets of several expressions stacked along a trailing leading-shape axis."""
    p = np.asarray(point, dtype=float)
    seeds = J.seed_all(p, order)
    shape = p.shape[:-1]
    out = [J.lift(evaluate(e, seeds), p.shape[-1], order, shape) for e in exprs]
    out = [o if o.shape == shape else o + J.constant(np.zeros(shape), p.shape[-1], order) for o in out]
    return J.stack(out, axis=-1)


def frame_jet(g: LieGroupSpec, point, order: int) -> Jet:
    p = _as_points(g, point)
    rows = [eval_jets(row, p, order) for row in g.frame]
    return J.stack(rows, axis=-2)


def _check_invertible(a: np.ndarray) -> None:
    det = np.linalg.det(a)
    if np.any(np.abs(det) <= DET_TOL):
        raise SingularFrameError("frame matrix is singular at a sampled point")


def all_commutators(g: LieGroupSpec, point) -> np.ndarray:
    """``c[..., i, j, k]`` with ``[E_i, E_j] = sum_k c_k E_k`` from the frame expressions."""
    aj = frame_jet(g, point, 1)
    a, da = aj.value, aj.grad  # da[..., i, k, l] = d_l A[i, k]
    _check_invertible(a)
    # coordinate components of [E_i, E_j]: A_il d_l A_jk - A_jl d_l A_ik
    d = np.einsum("...il,...jkl->...ijk", a, da)
    v = d - np.swapaxes(d, -3, -2)
    # solve sum_m c_m A_mk = v_k
    inv = np.linalg.inv(a)
    return np.einsum("...ijk,...km->...ijm", v, inv)


def commutator_coeffs(g: LieGroupSpec, i: int, j: int, point) -> np.ndarray:
    """Frame components of ``[E_i, E_j]`` (0-based ``i``, ``j``) at ``point``."""
    return all_commutators(g, point)[..., i, j, :]


def frame_derivatives(g: LieGroupSpec, field: Expr, point) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Return ``(f, f_i, f_ij)`` with ``f_i = E_i f`` and ``f_ij = E_j(E_i f)``."""
    p = _as_points(g, point)
    aj = frame_jet(g, p, 1)
    a, da = aj.value, aj.grad
    fj = eval_jets([field], p, 2).take(0)
    g1, h = fj.grad, fj.hess
    fi = (a @ g1[..., None])[..., 0]
    # d_l (E_i f) = sum_k (d_l A_ik) d_k f + A_ik d_k d_l f, then contract with A_jl
    dfi = (g1[..., None, None, :] @ da)[..., 0, :] + a @ h
    fij = dfi @ np.swapaxes(a, -1, -2)
    return fj.value, fi, fij


def frame_derivative(g: LieGroupSpec, i: int, field: Expr, point, depth: int = 1, j: int | None = None):
    """``E_i f`` (depth 1) or ``E_j(E_i f)`` (depth 2); indices are 0-based."""
    _, fi, fij = frame_derivatives(g, field, point)
    if depth == 1:
        return fi[..., i]
    if depth == 2:
        if j is None:
            raise ValueError("depth 2 needs the outer index j")
        return fij[..., i, j]
    raise ValueError("depth must be 1 or 2")


def frame_gradient(g: LieGroupSpec, fields: Sequence[Expr], point) -> tuple[np.ndarray, np.ndarray]:
    """Values ``u[..., a]`` and frame derivatives ``du[..., a, p] = E_p u_a``."""
    p = _as_points(g, point)
    a = frame_matrix(g, p)
    uj = eval_jets(fields, p, 1)
    return uj.value, np.einsum("...pl,...al->...ap", a, uj.grad)


# -- Lie algebra axioms --------------------------------------------------------


def check_antisymmetry(g: LieGroupSpec, tol: float = 0.0) -> bool:
    return bool(np.all(np.abs(g.alpha + np.swapaxes(g.alpha, 0, 1)) <= tol))


def jacobi_defect(alpha: np.ndarray) -> np.ndarray:
    """``sum_m (a_ijm a_mkl + a_jkm a_mil + a_kim a_mjl)`` for every ``(i, j, k, l)``."""
    t = np.einsum("ijm,mkl->ijkl", alpha, alpha)
    return t + np.einsum("jkm,mil->ijkl", alpha, alpha) + np.einsum("kim,mjl->ijkl", alpha, alpha)


def check_jacobi(g: LieGroupSpec, tol: float = 0.0) -> bool:
    return bool(np.all(np.abs(jacobi_defect(g.alpha)) <= tol))


# -- multiplication ------------------------------------------------------------


def _require_mul(g: LieGroupSpec) -> tuple[Expr, ...]:
    if g.mul is None:
        raise GroupError(f"group '{g.name}' has no multiplication law")
    return g.mul


def multiply(g: LieGroupSpec, a, b):
    """Group product ``a . b``; arguments may be arrays (with batch axes) or lists of jets."""
    law = _require_mul(g)
    ins = _split(g, a) + _split(g, b)
    out = [evaluate(e, ins) for e in law]
    if any(isinstance(o, Jet) for o in out):
        return out
    shape = np.broadcast_shapes(*(np.shape(x) for x in ins))
    return np.stack([np.broadcast_to(o, shape) for o in out], axis=-1)


def _split(g: LieGroupSpec, p) -> list:
    if isinstance(p, (list, tuple)) and p and isinstance(p[0], Jet):
        return list(p)
    arr = np.asarray(p, dtype=float)
    if arr.shape[-1] != g.dim:
        raise GroupError(f"expected points with {g.dim} coordinates")
    return [arr[..., k] for k in range(g.dim)]


def _jacobian(g: LieGroupSpec, outs: list, shape: tuple[int, ...]) -> np.ndarray:
    rows = [J.lift(o, g.dim, 1, shape).grad for o in outs]
    return np.broadcast_to(np.stack(rows, axis=-2), shape + (g.dim, g.dim))


def left_translation_jacobian(g: LieGroupSpec, b, a) -> np.ndarray:
    """Jacobian of ``x -> b . x`` at ``x = a``."""
    a = _as_points(g, a)
    b = _as_points(g, b)
    shape = np.broadcast_shapes(a.shape[:-1], b.shape[:-1])
    seeds = J.seed_all(np.broadcast_to(a, shape + (g.dim,)), 1)
    return _jacobian(g, multiply(g, b, seeds), shape)


def left_translate_pushforward(g: LieGroupSpec, b, a, v) -> np.ndarray:
    """``(L_b)_* v`` for a coordinate tangent vector ``v`` at ``a``."""
    jac = left_translation_jacobian(g, b, a)
    return np.einsum("...kl,...l->...k", jac, np.asarray(v, dtype=float))


def frame_left_invariance_defect(g: LieGroupSpec, a, b) -> float:
    """``max |(L_b)_* E_i(a) - E_i(b a)|`` over frame vectors and sample pairs."""
    jac = left_translation_jacobian(g, b, a)
    pushed = np.einsum("...kl,...il->...ik", jac, frame_matrix(g, a))
    target = frame_matrix(g, multiply(g, b, a))
    return float(np.max(np.abs(pushed - target)))


def inverse(g: LieGroupSpec, a, max_iter: int = 30, tol: float = 1e-12) -> np.ndarray:
    """Solve ``a . x = e`` by damped Newton iteration."""
    a = np.asarray(a, dtype=float)
    if a.ndim > 1:
        return np.stack([inverse(g, row, max_iter, tol) for row in a])
    e = np.asarray(g.identity)
    # additive coordinates reflect, positive (scaling) coordinates invert
    x = np.array([1.0 / a[k] if k in g.positive else e[k] - a[k] for k in range(g.dim)])
    if not g.in_domain(x):
        x = e.copy()
    for _ in range(max_iter):
        seeds = J.seed_all(x, 1)
        outs = multiply(g, a, seeds)
        val = np.array([float(J.lift(o, g.dim, 1).value) for o in outs]) - e
        if np.max(np.abs(val)) <= tol:
            return x
        jac = _jacobian(g, outs, ())
        try:
            step = np.linalg.solve(jac, -val)
        except np.linalg.LinAlgError as exc:
            raise InversionError("singular Jacobian during group inversion") from exc
        t, norm = 1.0, np.max(np.abs(val))
        while t > 1e-6:
            trial = x + t * step
            if g.in_domain(trial) and np.max(np.abs(multiply(g, a, trial) - e)) < norm:
                break
            t *= 0.5
        else:
            raise InversionError("damped Newton step failed to reduce the residual")
        x = trial
    if np.max(np.abs(multiply(g, a, x) - e)) <= tol:
        return x
    raise InversionError(f"group inversion did not converge in {max_iter} iterations")


def conjugation_jacobian(g: LieGroupSpec, a) -> np.ndarray:
    """``Ad_a``: Jacobian of ``x -> a x a^-1`` at the identity."""
    a = np.asarray(a, dtype=float)
    a_inv = inverse(g, a)
    seeds = J.seed_all(np.asarray(g.identity), 1)
    left = multiply(g, a, seeds)
    left = [J.lift(o, g.dim, 1) for o in left]
    outs = multiply(g, left, a_inv)
    return _jacobian(g, outs, ())


# -- validation ----------------------------------------------------------------


@dataclass
class GroupValidation:
    antisymmetric: bool
    jacobi: bool
    commutator_defect: float
    left_invariance_defect: float | None

    def ok(self, tol: float = 1e-10) -> bool:
        inv_ok = self.left_invariance_defect is None or self.left_invariance_defect < tol
        return self.antisymmetric and self.jacobi and self.commutator_defect < tol and inv_ok


def validate(g: LieGroupSpec, rng: np.random.Generator, samples: int = 100) -> GroupValidation:
    box = g.box()
    pts = box.random(samples, rng)
    comm = all_commutators(g, pts)
    defect = float(np.max(np.abs(comm - g.alpha)))
    inv = None
    if g.mul is not None:
        a = sample_pair_box(g).random(50, rng)
        b = sample_pair_box(g).random(50, rng)
        inv = frame_left_invariance_defect(g, a, b)
    return GroupValidation(check_antisymmetry(g), check_jacobi(g), defect, inv)


def sample_pair_box(g: LieGroupSpec) -> Box:
    """A smaller box for group elements whose products must stay moderate."""
    lo = [0.5 if k in g.positive else -1.0 for k in range(g.dim)]
    hi = [2.0 if k in g.positive else 1.0 for k in range(g.dim)]
    return Box(tuple(lo), tuple(hi), (1,) * g.dim)

