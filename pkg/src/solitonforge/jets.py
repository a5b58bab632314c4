"""Forward-mode truncated Taylor arithmetic.

A :class:`Jet` carries the value of a scalar field together with its
gradient, Hessian and (optionally) third-derivative tensor at a point.
Values are numpy arrays of arbitrary *leading* shape, so one Jet can hold a
whole grid of points, or a matrix of fields, at once; derivative axes are
always trailing::

    value  : S
    grad   : S + (n,)
    hess   : S + (n, n)        order >= 2
    third  : S + (n, n, n)     order == 3

Arithmetic is elementwise over the leading shape and broadcasts like numpy.
"""

from __future__ import annotations

from typing import Callable, Sequence, Union

import numpy as np

MAX_ORDER = 3

Number = Union[float, int, np.ndarray]


class JetDomainError(ValueError):
    """An elementary function was applied outside its domain."""


def _sym3(g: np.ndarray, h: np.ndarray) -> np.ndarray:
    # g_i h_jk + g_j h_ik + g_k h_ij
    return (
        g[..., :, None, None] * h[..., None, :, :]
        + g[..., None, :, None] * h[..., :, None, :]
        + g[..., None, None, :] * h[..., :, :, None]
    )


def _outer(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return a[..., :, None] * b[..., None, :]


class Jet:
    """Truncated Taylor expansion of order 1, 2 or 3 in ``dim`` variables."""

    __slots__ = ("value", "grad", "hess", "third")
    # make ndarray (op) Jet dispatch to the Jet reflected operators
    __array_ufunc__ = None

    def __init__(
        self,
        value: Number,
        grad: np.ndarray,
        hess: np.ndarray | None = None,
        third: np.ndarray | None = None,
    ) -> None:
        self.value = np.asarray(value, dtype=float)
        self.grad = np.asarray(grad, dtype=float)
        self.hess = None if hess is None else np.asarray(hess, dtype=float)
        self.third = None if third is None else np.asarray(third, dtype=float)
        if self.third is not None and self.hess is None:
            raise ValueError("a third-order part requires a Hessian")

    # -- structure ---------------------------------------------------------

    @property
    def order(self) -> int:
        if self.third is not None:
            return 3
        if self.hess is not None:
            return 2
        return 1

    @property
    def dim(self) -> int:
        return self.grad.shape[-1]

    @property
    def shape(self) -> tuple[int, ...]:
        return self.value.shape

    def __repr__(self) -> str:
        return f"Jet(order={self.order}, dim={self.dim}, value={self.value!r})"

    def _parts(self) -> list[np.ndarray | None]:
        return [self.value, self.grad, self.hess, self.third]

    def _map(self, fn: Callable[[np.ndarray, int], np.ndarray]) -> "Jet":
        # fn(array, number_of_trailing_derivative_axes)
        parts = [None if p is None else fn(p, k) for k, p in enumerate(self._parts())]
        return Jet(*parts)

    def truncate(self, order: int) -> "Jet":
        """Drop derivative parts above ``order``."""
        if not 1 <= order <= self.order:
            raise ValueError(f"cannot truncate an order-{self.order} jet to order {order}")
        return Jet(
            self.value,
            self.grad,
            self.hess if order >= 2 else None,
            self.third if order >= 3 else None,
        )

    def derivative(self, k: int) -> "Jet":
        """Jet of the partial derivative along variable ``k`` (one order lower)."""
        if self.order < 2:
            raise ValueError("differentiating a jet needs order >= 2")
        return Jet(
            self.grad[..., k],
            self.hess[..., k, :],
            None if self.third is None else self.third[..., k, :, :],
        )

    def __getitem__(self, idx) -> "Jet":
        if not isinstance(idx, tuple):
            idx = (idx,)
        if any(i is Ellipsis for i in idx):
            raise IndexError("Ellipsis indexing is ambiguous on jets")
        return self._map(lambda p, k: p[idx])

    def take(self, index: int, axis: int = -1) -> "Jet":
        """Select one entry along a leading-shape axis."""
        nd = self.value.ndim
        ax = axis if axis >= 0 else nd + axis
        return self._map(lambda p, k: np.take(p, index, axis=ax))

    def expand_dims(self, axis: int) -> "Jet":
        """Insert a leading-shape axis (negative axes count from the end of ``shape``)."""
        nd = self.value.ndim
        ax = axis if axis >= 0 else nd + 1 + axis
        return self._map(lambda p, k: np.expand_dims(p, ax))

    def sum(self, axis: int) -> "Jet":
        nd = self.value.ndim
        ax = axis if axis >= 0 else nd + axis
        return self._map(lambda p, k: p.sum(axis=ax))

    def swapaxes(self, a: int, b: int) -> "Jet":
        nd = self.value.ndim
        a = a if a >= 0 else nd + a
        b = b if b >= 0 else nd + b
        return self._map(lambda p, k: np.swapaxes(p, a, b))

    # -- arithmetic --------------------------------------------------------

    def _coerce(self, other: "Jet | Number") -> "Jet":
        if isinstance(other, Jet):
            if other.dim != self.dim or other.order != self.order:
                raise ValueError(
                    f"jet mismatch: order/dim ({self.order}, {self.dim}) vs ({other.order}, {other.dim})"
                )
            return other
        return constant(other, self.dim, self.order)

    def __neg__(self) -> "Jet":
        return self._map(lambda p, k: -p)

    def __pos__(self) -> "Jet":
        return self

    def __add__(self, other: "Jet | Number") -> "Jet":
        o = self._coerce(other)
        return Jet(*[None if p is None else p + q for p, q in zip(self._parts(), o._parts())])

    __radd__ = __add__

    def __sub__(self, other: "Jet | Number") -> "Jet":
        return self + (-other)

    def __rsub__(self, other: "Jet | Number") -> "Jet":
        return (-self) + other

    def __mul__(self, other: "Jet | Number") -> "Jet":
        if not isinstance(other, Jet):
            c = np.asarray(other, dtype=float)
            return self._map(lambda p, k: p * c[(...,) + (None,) * k])
        o = self._coerce(other)
        a, b = self, o
        value = a.value * b.value
        grad = a.grad * b.value[..., None] + a.value[..., None] * b.grad
        hess = third = None
        if a.order >= 2:
            hess = (
                a.hess * b.value[..., None, None]
                + a.value[..., None, None] * b.hess
                + _outer(a.grad, b.grad)
                + _outer(b.grad, a.grad)
            )
        if a.order >= 3:
            third = (
                a.third * b.value[..., None, None, None]
                + a.value[..., None, None, None] * b.third
                + _sym3(a.grad, b.hess)
                + _sym3(b.grad, a.hess)
            )
        return Jet(value, grad, hess, third)

    __rmul__ = __mul__

    def __truediv__(self, other: "Jet | Number") -> "Jet":
        o = self._coerce(other)
        if np.any(o.value == 0):
            raise ZeroDivisionError("jet division by a zero value")
        return _quotient(self, o)

    def __rtruediv__(self, other: "Jet | Number") -> "Jet":
        return self._coerce(other) / self

    def __pow__(self, exponent: "Jet | Number") -> "Jet":
        return power(self, exponent)

    def __rpow__(self, base: Number) -> "Jet":
        return power(self._coerce(base), self)


def _quotient(a: Jet, b: Jet) -> Jet:
    # q*b = a, solved order by order so that q.value == a.value / b.value exactly
    q0 = a.value / b.value
    inv = 1.0 / b.value
    g = (a.grad - q0[..., None] * b.grad) * inv[..., None]
    h = t = None
    if a.order >= 2:
        h = (
            a.hess
            - _outer(g, b.grad)
            - _outer(b.grad, g)
            - q0[..., None, None] * b.hess
        ) * inv[..., None, None]
    if a.order >= 3:
        t = (
            a.third
            - _sym3(b.grad, h)
            - _sym3(g, b.hess)
            - q0[..., None, None, None] * b.third
        ) * inv[..., None, None, None]
    return Jet(q0, g, h, t)


def constant(c: Number, dim: int, order: int) -> Jet:
    """A jet with zero derivatives."""
    if not 1 <= order <= MAX_ORDER:
        raise ValueError(f"jet order must be in 1..{MAX_ORDER}, got {order}")
    v = np.asarray(c, dtype=float)
    s = v.shape
    return Jet(
        v,
        np.zeros(s + (dim,)),
        np.zeros(s + (dim, dim)) if order >= 2 else None,
        np.zeros(s + (dim, dim, dim)) if order >= 3 else None,
    )


def seed_variable(point: Sequence[float] | np.ndarray, k: int, order: int) -> Jet:
    """Jet of the coordinate function ``x_k`` at ``point``.

    ``point`` may carry leading batch axes; its last axis is the coordinate axis.
    """
    p = np.asarray(point, dtype=float)
    if p.ndim == 0:
        raise ValueError("point must have at least one coordinate")
    n = p.shape[-1]
    if not 0 <= k < n:
        raise IndexError(f"variable index {k} out of range for dimension {n}")
    jet = constant(p[..., k], n, order)
    jet.grad[..., k] = 1.0
    return jet


def seed_all(point: Sequence[float] | np.ndarray, order: int) -> list[Jet]:
    p = np.asarray(point, dtype=float)
    return [seed_variable(p, k, order) for k in range(p.shape[-1])]


def compose(a: Jet, d0, d1, d2=None, d3=None) -> Jet:
    """Apply a univariate function given its derivatives evaluated at ``a.value``."""
    grad = d1[..., None] * a.grad
    hess = third = None
    if a.order >= 2:
        hess = d1[..., None, None] * a.hess + d2[..., None, None] * _outer(a.grad, a.grad)
    if a.order >= 3:
        g = a.grad
        ggg = g[..., :, None, None] * g[..., None, :, None] * g[..., None, None, :]
        third = (
            d1[..., None, None, None] * a.third
            + d2[..., None, None, None] * _sym3(g, a.hess)
            + d3[..., None, None, None] * ggg
        )
    return Jet(d0, grad, hess, third)


def exp(a: Jet) -> Jet:
    e = np.exp(a.value)
    return compose(a, e, e, e, e)


def ln(a: Jet) -> Jet:
    if np.any(a.value <= 0):
        raise JetDomainError("ln requires a positive argument")
    v = a.value
    return compose(a, np.log(v), 1.0 / v, -1.0 / v**2, 2.0 / v**3)


def sqrt(a: Jet) -> Jet:
    if np.any(a.value <= 0):
        raise JetDomainError("sqrt requires a positive argument")
    s = np.sqrt(a.value)
    return compose(a, s, 0.5 / s, -0.25 / (s * a.value), 0.375 / (s * a.value**2))


def sin(a: Jet) -> Jet:
    s, c = np.sin(a.value), np.cos(a.value)
    return compose(a, s, c, -s, -c)


def cos(a: Jet) -> Jet:
    s, c = np.sin(a.value), np.cos(a.value)
    return compose(a, c, -s, -c, s)


def _is_integer(x) -> bool:
    return not isinstance(x, Jet) and np.ndim(x) == 0 and float(x).is_integer()


def power(a: Jet | Number, b: Jet | Number) -> Jet:
    """``a ** b``.

    Integer constant exponents use the power rule (any base, nonzero if the
    exponent is negative); anything else goes through ``exp(b * ln(a))`` and
    needs a positive base.
    """
    if isinstance(a, Jet) and _is_integer(b):
        p = int(b)
        v = a.value
        if p < 0 and np.any(v == 0):
            raise ZeroDivisionError("zero base with a negative exponent")
        if p == 0:
            return constant(np.ones_like(v), a.dim, a.order)
        # falling-factorial coefficients; zero terms skipped so v = 0 stays finite
        derivs = []
        for k in range(4):
            coef = float(np.prod([p - i for i in range(k)]))
            derivs.append(coef * v ** (p - k) if coef != 0 else np.zeros_like(v))
        return compose(a, *derivs)
    if not isinstance(a, Jet):
        if np.any(np.asarray(a) <= 0):
            raise JetDomainError("non-integer power requires a positive base")
        return exp(b * float(np.log(a)) if np.ndim(a) == 0 else b * np.log(a))
    if np.any(a.value <= 0):
        raise JetDomainError("non-integer power requires a positive base")
    return exp(b * ln(a))


# -- matrix helpers on jets whose leading shape ends with (m, m) --------------


def matmul(a: Jet, b: Jet | np.ndarray) -> Jet:
    """Matrix product over the last two leading axes."""
    if isinstance(b, Jet):
        return (a.expand_dims(-1) * b.expand_dims(-3)).sum(-2)
    bb = np.asarray(b, dtype=float)
    return (a.expand_dims(-1) * bb[..., None, :, :]).sum(-2)


def rmatmul(a: np.ndarray, b: Jet) -> Jet:
    """``a @ b`` with a plain matrix on the left."""
    aa = np.asarray(a, dtype=float)
    return (b.expand_dims(-3) * aa[..., :, :, None]).sum(-2)


def inverse(m: Jet) -> Jet:
    """Jet of the matrix inverse.

    With ``M = M0 + D`` where ``D`` has zero value, the truncated Neumann series
    ``sum_k (-M0^-1 D)^k M0^-1`` is exact to the jet's order.
    """
    m0inv = np.linalg.inv(m.value)
    if m.order == 1:
        # d(M^-1) = -M^-1 (dM) M^-1, one derivative axis at a time
        dm = np.moveaxis(m.grad, -1, 0)
        g = -(m0inv @ dm @ m0inv)
        return Jet(m0inv, np.moveaxis(g, 0, -1))
    d = m - m.value
    step = -rmatmul(m0inv, d)  # zero value, so step^(order+1) vanishes
    term = constant(m0inv, m.dim, m.order)
    total = term
    for _ in range(m.order):
        term = matmul(step, term)
        total = total + term
    return total


def transpose(m: Jet) -> Jet:
    return m.swapaxes(-1, -2)


def stack(jets: Sequence[Jet], axis: int = -1) -> Jet:
    """Stack jets of identical shape along a new leading-shape axis."""
    first = jets[0]
    nd = first.value.ndim
    ax = axis if axis >= 0 else nd + 1 + axis
    parts = []
    for k in range(4):
        ps = [j._parts()[k] for j in jets]
        parts.append(None if ps[0] is None else np.stack(ps, axis=ax))
    return Jet(*parts)


def lift(x: Jet | Number, dim: int, order: int, shape: tuple[int, ...] = ()) -> Jet:
    """Return ``x`` as a jet, broadcasting plain numbers to ``shape``."""
    if isinstance(x, Jet):
        return x
    return constant(np.broadcast_to(np.asarray(x, dtype=float), shape).copy(), dim, order)
