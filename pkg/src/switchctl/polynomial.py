"""Sparse multivariate polynomials and Gram-matrix bookkeeping for SOS programs."""

from __future__ import annotations

from collections import defaultdict
from itertools import combinations_with_replacement

import numpy as np


class Poly:
    """Polynomial as ``{exponent tuple: coefficient}`` in a fixed number of variables."""

    __slots__ = ("nvars", "terms")

    def __init__(self, nvars: int, terms=None):
        self.nvars = nvars
        self.terms = {k: float(v) for k, v in (terms or {}).items() if v != 0.0}

    @classmethod
    def constant(cls, nvars, value):
        return cls(nvars, {(0,) * nvars: value})

    @classmethod
    def linear(cls, coeffs):
        n = len(coeffs)
        return cls(n, {_unit(n, i): c for i, c in enumerate(coeffs)})

    @classmethod
    def quadratic(cls, Q):
        """``c' Q c`` for a square (not necessarily symmetric) Q."""
        Q = np.asarray(Q, dtype=float)
        n = Q.shape[0]
        out = defaultdict(float)
        for i in range(n):
            for j in range(n):
                if Q[i, j] != 0.0:
                    out[_add(_unit(n, i), _unit(n, j))] += Q[i, j]
        return cls(n, out)

    def __add__(self, other):
        other = self._coerce(other)
        out = defaultdict(float, self.terms)
        for k, v in other.terms.items():
            out[k] += v
        return Poly(self.nvars, out)

    __radd__ = __add__

    def __neg__(self):
        return Poly(self.nvars, {k: -v for k, v in self.terms.items()})

    def __sub__(self, other):
        return self + (-self._coerce(other))

    def __rsub__(self, other):
        return self._coerce(other) - self

    def __mul__(self, other):
        if np.isscalar(other):
            return Poly(self.nvars, {k: v * other for k, v in self.terms.items()})
        out = defaultdict(float)
        for k1, v1 in self.terms.items():
            for k2, v2 in other.terms.items():
                out[_add(k1, k2)] += v1 * v2
        return Poly(self.nvars, out)

    __rmul__ = __mul__

    def _coerce(self, other):
        return other if isinstance(other, Poly) else Poly.constant(self.nvars, other)

    @property
    def degree(self) -> int:
        return max((sum(k) for k in self.terms), default=0)

    def coeff(self, mono) -> float:
        return self.terms.get(tuple(mono), 0.0)

    def __call__(self, c):
        """Evaluate at one point (1-D) or many points (rows of a 2-D array)."""
        c = np.asarray(c, dtype=float)
        pts = np.atleast_2d(c)
        total = np.zeros(pts.shape[0])
        for k, v in self.terms.items():
            total += v * np.prod(pts ** np.array(k), axis=1)
        return total if c.ndim == 2 else float(total[0])

    def max_abs_diff(self, other) -> float:
        keys = set(self.terms) | set(other.terms)
        return max((abs(self.coeff(k) - other.coeff(k)) for k in keys), default=0.0)


def _unit(n, i):
    e = [0] * n
    e[i] = 1
    return tuple(e)


def _add(a, b):
    return tuple(x + y for x, y in zip(a, b))


def monomials(nvars: int, degrees) -> list[tuple[int, ...]]:
    """Exponent tuples of the requested total degrees, graded, each degree in
    lexicographic order of variable index."""
    out = []
    for d in degrees:
        for combo in combinations_with_replacement(range(nvars), d):
            e = [0] * nvars
            for i in combo:
                e[i] += 1
            out.append(tuple(e))
    return out


def gram_coefficient_maps(basis, support):
    """For each monomial in ``support`` the symmetric matrix D with
    ``coeff(z' G z) = <D, G>``; z is the monomial vector ``basis``."""
    index = {mono: k for k, mono in enumerate(support)}
    d = len(basis)
    D = np.zeros((len(support), d, d))
    for a in range(d):
        for b in range(d):
            k = index.get(_add(basis[a], basis[b]))
            if k is None:
                raise ValueError("Gram product leaves the declared support")
            D[k, a, b] += 1.0
    return D


def gram_polynomial(basis, G, nvars) -> Poly:
    out = defaultdict(float)
    for a, ma in enumerate(basis):
        for b, mb in enumerate(basis):
            if G[a, b] != 0.0:
                out[_add(ma, mb)] += G[a, b]
    return Poly(nvars, out)


def multiplier_maps(basis, factor: Poly, support):
    """Linear map ``G -> coefficients of (z' G z) * factor`` as stacked matrices."""
    index = {mono: k for k, mono in enumerate(support)}
    d = len(basis)
    D = np.zeros((len(support), d, d))
    for a in range(d):
        for b in range(d):
            base = _add(basis[a], basis[b])
            for mono, v in factor.terms.items():
                k = index.get(_add(base, mono))
                if k is None:
                    raise ValueError("multiplier product leaves the declared support")
                D[k, a, b] += v
    return D
