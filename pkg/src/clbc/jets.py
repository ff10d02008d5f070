"""Truncated multivariate Taylor arithmetic (forward-mode jets).

A jet stores the value of an expression together with the coefficients of
its Taylor polynomial around the evaluation point, truncated at a fixed
total order.  Propagating jets through arithmetic yields exact mixed
partial derivatives of composite expressions -- no symbolic manipulation,
no numerical differencing.  The recursive virtual-control construction
needs nested partials of depth known at configuration time, which is
exactly what a fixed-order jet space provides.

Coefficient layout: monomials are ordered by total degree, and within a
degree lexicographically by variable indices.  Index 0 is the constant
term (the value); indices 1..num_vars are the first-order terms in
variable order, so ``c[1 + v]`` is the partial derivative with respect to
variable ``v`` at the evaluation point.
"""

from __future__ import annotations

import math
from itertools import combinations_with_replacement

import numpy as np

_SPACES: dict[tuple[int, int], "JetSpace"] = {}


def jet_space(num_vars: int, order: int) -> "JetSpace":
    """Return the cached jet space for ``num_vars`` variables at ``order``."""
    key = (num_vars, order)
    sp = _SPACES.get(key)
    if sp is None:
        sp = JetSpace(num_vars, order)
        _SPACES[key] = sp
    return sp


class JetSpace:
    """Monomial bookkeeping shared by all jets of one (num_vars, order)."""

    __slots__ = ("num_vars", "order", "monomials", "size", "_index",
                 "_mul_i", "_mul_j", "_mul_k", "_dmaps")

    def __init__(self, num_vars: int, order: int):
        if num_vars < 1 or order < 0:
            raise ValueError("need num_vars >= 1 and order >= 0")
        self.num_vars = num_vars
        self.order = order

        monomials: list[tuple[int, ...]] = []
        for deg in range(order + 1):
            for combo in combinations_with_replacement(range(num_vars), deg):
                counts = [0] * num_vars
                for v in combo:
                    counts[v] += 1
                monomials.append(tuple(counts))
        self.monomials = monomials
        self.size = len(monomials)
        self._index = {m: i for i, m in enumerate(monomials)}

        degs = [sum(m) for m in monomials]
        ii, jj, kk = [], [], []
        for i, mi in enumerate(monomials):
            for j, mj in enumerate(monomials):
                if degs[i] + degs[j] > order:
                    continue
                ii.append(i)
                jj.append(j)
                kk.append(self._index[tuple(a + b for a, b in zip(mi, mj))])
        self._mul_i = np.asarray(ii, dtype=np.intp)
        self._mul_j = np.asarray(jj, dtype=np.intp)
        self._mul_k = np.asarray(kk, dtype=np.intp)

        dmaps = []
        for v in range(num_vars):
            src, dst, mult = [], [], []
            for i, m in enumerate(monomials):
                if m[v] == 0:
                    continue
                lowered = list(m)
                lowered[v] -= 1
                src.append(i)
                dst.append(self._index[tuple(lowered)])
                mult.append(float(m[v]))
            dmaps.append((np.asarray(src, dtype=np.intp),
                          np.asarray(dst, dtype=np.intp),
                          np.asarray(mult)))
        self._dmaps = dmaps

    def constant(self, value: float) -> "Jet":
        c = np.zeros(self.size)
        c[0] = value
        return Jet(self, c)

    def variable(self, var: int, value: float) -> "Jet":
        c = np.zeros(self.size)
        c[0] = value
        c[1 + var] = 1.0
        return Jet(self, c)

    def variables(self, values) -> list["Jet"]:
        return [self.variable(v, float(x)) for v, x in enumerate(values)]


class Jet:
    """One truncated Taylor polynomial in a shared :class:`JetSpace`."""

    __slots__ = ("space", "c")
    __array_ufunc__ = None  # keep numpy scalars from hijacking arithmetic

    def __init__(self, space: JetSpace, coeffs: np.ndarray):
        self.space = space
        self.c = coeffs

    # -- inspection ---------------------------------------------------

    @property
    def value(self) -> float:
        return float(self.c[0])

    def grad(self) -> np.ndarray:
        """First-order coefficients, one per variable."""
        return self.c[1:1 + self.space.num_vars].copy()

    def first_partial(self, var: int) -> float:
        return float(self.c[1 + var])

    def partial(self, var: int) -> "Jet":
        """Derivative jet d/dx_var (coefficients valid one order lower)."""
        src, dst, mult = self.space._dmaps[var]
        out = np.zeros(self.space.size)
        out[dst] = mult * self.c[src]
        return Jet(self.space, out)

    def coefficient(self, exponents: tuple[int, ...]) -> float:
        return float(self.c[self.space._index[tuple(exponents)]])

    # -- arithmetic ---------------------------------------------------

    def _coerce(self, other):
        if isinstance(other, Jet):
            if other.space is not self.space:
                raise ValueError("jets from different spaces")
            return other
        if isinstance(other, (int, float, np.integer, np.floating)):
            return None  # scalar fast path
        return NotImplemented

    def __add__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return NotImplemented
        if o is None:
            out = self.c.copy()
            out[0] += float(other)
            return Jet(self.space, out)
        return Jet(self.space, self.c + o.c)

    __radd__ = __add__

    def __sub__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return NotImplemented
        if o is None:
            out = self.c.copy()
            out[0] -= float(other)
            return Jet(self.space, out)
        return Jet(self.space, self.c - o.c)

    def __rsub__(self, other):
        return (-self).__add__(other)

    def __neg__(self):
        return Jet(self.space, -self.c)

    def __mul__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return NotImplemented
        if o is None:
            return Jet(self.space, self.c * float(other))
        sp = self.space
        w = self.c[sp._mul_i] * o.c[sp._mul_j]
        return Jet(sp, np.bincount(sp._mul_k, weights=w, minlength=sp.size))

    __rmul__ = __mul__

    def __truediv__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return NotImplemented
        if o is None:
            return Jet(self.space, self.c / float(other))
        return self * o._reciprocal()

    def __rtruediv__(self, other):
        return self._reciprocal() * other

    def __pow__(self, power):
        if not isinstance(power, (int, np.integer)) or power < 0:
            raise TypeError("jet powers must be non-negative integers")
        result = self.space.constant(1.0)
        for _ in range(int(power)):
            result = result * self
        return result

    # -- analytic functions via series composition --------------------

    def _series(self, coeffs: list[float]) -> "Jet":
        """Evaluate sum_k coeffs[k] * (self - value)^k by Horner."""
        centred = Jet(self.space, self.c.copy())
        centred.c[0] = 0.0
        acc = self.space.constant(coeffs[-1])
        for ck in reversed(coeffs[:-1]):
            acc = acc * centred + ck
        return acc

    def _reciprocal(self) -> "Jet":
        u0 = self.value
        if u0 == 0.0:
            raise ZeroDivisionError("jet reciprocal at zero value")
        K = self.space.order
        coeffs = [(-1.0) ** k / u0 ** (k + 1) for k in range(K + 1)]
        return self._series(coeffs)

    def sin(self) -> "Jet":
        u0 = self.value
        cycle = [math.sin(u0), math.cos(u0), -math.sin(u0), -math.cos(u0)]
        K = self.space.order
        return self._series([cycle[k % 4] / math.factorial(k) for k in range(K + 1)])

    def cos(self) -> "Jet":
        u0 = self.value
        cycle = [math.cos(u0), -math.sin(u0), -math.cos(u0), math.sin(u0)]
        K = self.space.order
        return self._series([cycle[k % 4] / math.factorial(k) for k in range(K + 1)])

    def exp(self) -> "Jet":
        e0 = math.exp(self.value)
        K = self.space.order
        return self._series([e0 / math.factorial(k) for k in range(K + 1)])

    def log(self) -> "Jet":
        u0 = self.value
        if u0 <= 0.0:
            raise ValueError("jet log needs a positive value")
        K = self.space.order
        coeffs = [math.log(u0)]
        coeffs += [(-1.0) ** (k + 1) / (k * u0 ** k) for k in range(1, K + 1)]
        return self._series(coeffs)

    def sqrt(self) -> "Jet":
        u0 = self.value
        if u0 <= 0.0:
            raise ValueError("jet sqrt needs a positive value")
        K = self.space.order
        coeffs, ck = [], math.sqrt(u0)
        for k in range(K + 1):
            coeffs.append(ck)
            ck *= (0.5 - k) / ((k + 1) * u0)
        return self._series(coeffs)

    def __repr__(self):
        return f"Jet(value={self.value!r}, order={self.space.order})"


def as_jet(space: JetSpace, x) -> Jet:
    """Coerce a plain number to a constant jet; pass jets through."""
    if isinstance(x, Jet):
        if x.space is not space:
            raise ValueError("jet from a different space")
        return x
    return space.constant(float(x))


def jet_dot(a, b):
    """Dot product of two equal-length sequences of jets/numbers."""
    if len(a) != len(b):
        raise ValueError("length mismatch")
    acc = a[0] * b[0]
    for x, y in zip(a[1:], b[1:]):
        acc = acc + x * y
    return acc
