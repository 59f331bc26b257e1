"""Truncated univariate Taylor arithmetic.

A :class:`Jet` stores normalized Taylor coefficients ``c[k] = f^(k)(x0)/k!``
for ``k = 0..order`` at a batch of expansion points. Arithmetic on jets
propagates derivatives exactly (up to rounding), which lets curvature
formulas be differentiated several times without finite differences.
"""
from __future__ import annotations

import numpy as np

__all__ = ["Jet"]


class Jet:
    """Truncated Taylor expansion, vectorized over expansion points.

    Parameters
    ----------
    coeffs : array_like, shape (order + 1, ...)
        Normalized Taylor coefficients.
    """

    __array_priority__ = 100

    def __init__(self, coeffs):
        c = np.asarray(coeffs, dtype=float)
        if c.ndim == 0:
            c = c[None]
        self.c = c

    @classmethod
    def variable(cls, x0, order: int) -> "Jet":
        """The identity function x expanded at ``x0``."""
        x0 = np.asarray(x0, dtype=float)
        c = np.zeros((order + 1,) + x0.shape)
        c[0] = x0
        if order >= 1:
            c[1] = 1.0
        return cls(c)

    @classmethod
    def from_derivatives(cls, derivs) -> "Jet":
        """Build from raw derivatives ``[f, f', f'', ...]``."""
        d = np.asarray(derivs, dtype=float)
        fact = np.cumprod(np.r_[1.0, np.arange(1, d.shape[0])])
        return cls(d / fact.reshape((-1,) + (1,) * (d.ndim - 1)))

    @property
    def order(self) -> int:
        return self.c.shape[0] - 1

    @property
    def value(self) -> np.ndarray:
        return self.c[0]

    def derivative_values(self) -> np.ndarray:
        """Raw derivatives ``f^(k)`` for ``k = 0..order``."""
        fact = np.cumprod(np.r_[1.0, np.arange(1, self.order + 1)])
        return self.c * fact.reshape((-1,) + (1,) * (self.c.ndim - 1))

    def deriv(self) -> "Jet":
        """Jet of the derivative, one order lower."""
        k = np.arange(1, self.order + 1).reshape((-1,) + (1,) * (self.c.ndim - 1))
        return Jet(self.c[1:] * k)

    def truncate(self, order: int) -> "Jet":
        return Jet(self.c[: order + 1])

    # arithmetic helpers
    def _coerce(self, other):
        if isinstance(other, Jet):
            m = min(self.order, other.order)
            return self.c[: m + 1], other.c[: m + 1]
        c = np.zeros_like(self.c)
        c[0] = other
        return self.c, c

    def __add__(self, other):
        a, b = self._coerce(other)
        return Jet(a + b)

    __radd__ = __add__

    def __sub__(self, other):
        a, b = self._coerce(other)
        return Jet(a - b)

    def __rsub__(self, other):
        a, b = self._coerce(other)
        return Jet(b - a)

    def __neg__(self):
        return Jet(-self.c)

    def __mul__(self, other):
        if not isinstance(other, Jet):
            return Jet(self.c * other)
        a, b = self._coerce(other)
        out = np.zeros(np.broadcast_shapes(a.shape, b.shape))
        for k in range(a.shape[0]):
            for j in range(k + 1):
                out[k] = out[k] + a[j] * b[k - j]
        return Jet(out)

    __rmul__ = __mul__

    def reciprocal(self) -> "Jet":
        a = self.c
        b = np.zeros_like(a)
        b[0] = 1.0 / a[0]
        for k in range(1, a.shape[0]):
            s = sum(a[j] * b[k - j] for j in range(1, k + 1))
            b[k] = -s * b[0]
        return Jet(b)

    def __truediv__(self, other):
        if not isinstance(other, Jet):
            return Jet(self.c / other)
        return self * other.reciprocal()

    def __rtruediv__(self, other):
        return self.reciprocal() * other

    def __pow__(self, p):
        a = self.c
        b = np.zeros_like(a)
        b[0] = a[0] ** p
        for k in range(1, a.shape[0]):
            s = sum((p * j - (k - j)) * a[j] * b[k - j] for j in range(1, k + 1))
            b[k] = s / (k * a[0])
        return Jet(b)

    def exp(self) -> "Jet":
        a = self.c
        b = np.zeros_like(a)
        b[0] = np.exp(a[0])
        for k in range(1, a.shape[0]):
            b[k] = sum(j * a[j] * b[k - j] for j in range(1, k + 1)) / k
        return Jet(b)

    def log(self) -> "Jet":
        a = self.c
        b = np.zeros_like(a)
        b[0] = np.log(a[0])
        for k in range(1, a.shape[0]):
            s = sum(j * b[j] * a[k - j] for j in range(1, k))
            b[k] = (a[k] - s / k) / a[0]
        return Jet(b)

    def sincos(self) -> tuple["Jet", "Jet"]:
        a = self.c
        s = np.zeros_like(a)
        c = np.zeros_like(a)
        s[0], c[0] = np.sin(a[0]), np.cos(a[0])
        for k in range(1, a.shape[0]):
            s[k] = sum(j * a[j] * c[k - j] for j in range(1, k + 1)) / k
            c[k] = -sum(j * a[j] * s[k - j] for j in range(1, k + 1)) / k
        return Jet(s), Jet(c)

    def __repr__(self):
        return f"Jet(order={self.order}, shape={self.c.shape[1:]})"
