"""The quotient algebra C[z]/<p>, the multiplication operator by
H(w) = (z - w)(w z - 1), and its determinant polynomial f(w).

Also carries finite-dimensional commutative algebras given by structure
constants, and Krylov minimal polynomials of their elements.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .polynomial import Poly, mod_reduce, multiply

#: interpolation circle for det_poly; kept off the unit circle
INTERP_RADIUS = 1.3


class ModulusMismatchError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class AlgebraElement:
    """Residue class in C[z]/<p>, stored by its coordinates in 1, z, ..., z^(n-1)."""

    coeffs: np.ndarray
    modulus: Poly

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=complex).copy()
        if c.shape != (self.modulus.degree,):
            raise ValueError(f"expected {self.modulus.degree} coordinates, got {c.shape}")
        c.flags.writeable = False
        object.__setattr__(self, "coeffs", c)

    @property
    def n(self) -> int:
        return self.modulus.degree

    def lift(self) -> Poly:
        return Poly(self.coeffs)

    def __mul__(self, other: "AlgebraElement") -> "AlgebraElement":
        return algebra_mul(self, other)

    def __add__(self, other: "AlgebraElement") -> "AlgebraElement":
        _check_same(self, other)
        return AlgebraElement(self.coeffs + other.coeffs, self.modulus)


def _check_same(a: AlgebraElement, b: AlgebraElement) -> None:
    if a.modulus != b.modulus:
        raise ModulusMismatchError("elements live in different quotient algebras")


def reduce(q: Poly, p: Poly) -> AlgebraElement:
    """Class of ``q`` in C[z]/<p>, padded to ``deg p`` coordinates."""
    if p.degree < 1:
        raise ValueError("modulus must have degree >= 1")
    return AlgebraElement(mod_reduce(q, p).padded(p.degree), p)


def unit(p: Poly) -> AlgebraElement:
    return reduce(Poly([1.0]), p)


def algebra_mul(a: AlgebraElement, b: AlgebraElement) -> AlgebraElement:
    _check_same(a, b)
    return reduce(multiply(a.lift(), b.lift()), a.modulus)


def H_element(w: complex, p: Poly) -> AlgebraElement:
    """The class of (z - w)(w z - 1) = w z^2 - (1 + w^2) z + w."""
    w = complex(w)
    return reduce(Poly([w, -(1 + w * w), w]), p)


def companion(p: Poly) -> np.ndarray:
    """Matrix of multiplication by z on the monomial basis (monic-normalized ``p``)."""
    a = p.monic().coeffs
    n = p.degree
    C = np.zeros((n, n), dtype=complex)
    C[np.arange(1, n), np.arange(n - 1)] = 1
    C[:, -1] = -a[:-1]
    return C


def mul_matrix(a: AlgebraElement) -> np.ndarray:
    """Matrix of x -> a*x; column j holds the coordinates of a * z^j."""
    n = a.n
    cols = []
    zj = unit(a.modulus)
    z = reduce(Poly([0, 1]), a.modulus)
    for _ in range(n):
        cols.append((a * zj).coeffs)
        zj = zj * z
    return np.column_stack(cols)


@dataclass(frozen=True, eq=False)
class PolyMatrix:
    """Square matrix whose entries are polynomials in w."""

    entries: tuple[tuple[Poly, ...], ...]

    @property
    def size(self) -> int:
        return len(self.entries)

    def max_entry_degree(self) -> int:
        return max(e.degree for row in self.entries for e in row)

    def __call__(self, w: complex) -> np.ndarray:
        return np.array([[e(w) for e in row] for row in self.entries], dtype=complex)


def M_of_w_symbolic(p: Poly) -> PolyMatrix:
    """M(w) = w (C^2 + I) - (1 + w^2) C entry-wise, C the companion matrix of monic p."""
    C = companion(p)
    n = C.shape[0]
    Q = C @ C + np.eye(n)
    rows = tuple(
        tuple(Poly([-C[i, j], Q[i, j], -C[i, j]]) for j in range(n))
        for i in range(n)
    )
    return PolyMatrix(rows)


def M_of_w(p: Poly, w: complex) -> np.ndarray:
    """Numeric M(w) without building polynomial entries."""
    C = companion(p)
    n = C.shape[0]
    return w * (C @ C + np.eye(n)) - (1 + w * w) * C


def det_poly(M: PolyMatrix, trim: float = 1e-10) -> Poly:
    """det M(w) as a polynomial, by evaluation on a circle and interpolation.

    Nodes are the ``N = size * maxdeg + 1`` scaled roots of unity on
    ``|w| = INTERP_RADIUS``, so interpolation is a discrete Fourier transform.
    Leading coefficients below ``trim * max|coeff|`` are dropped.
    """
    n = M.size
    deg_bound = n * max(M.max_entry_degree(), 0)
    N = deg_bound + 1
    nodes = INTERP_RADIUS * np.exp(2j * np.pi * np.arange(N) / N)
    values = np.array([np.linalg.det(M(w)) for w in nodes])
    coeffs = np.fft.fft(values) / N / INTERP_RADIUS ** np.arange(N)
    big = np.max(np.abs(coeffs)) if N else 0.0
    keep = len(coeffs)
    while keep and abs(coeffs[keep - 1]) <= trim * big:
        keep -= 1
    return Poly(coeffs[:keep])


def f_polynomial(p: Poly) -> Poly:
    """f(w) = det M(w) for the monic normalization of ``p``."""
    return det_poly(M_of_w_symbolic(p))


def f_oracle(p: Poly) -> Poly:
    """Closed form f = p * p^*, p monic and p^*(w) = w^n p(1/w)."""
    q = p.monic()
    return multiply(q, Poly(q.padded(q.degree + 1)[::-1]))


@dataclass(frozen=True, eq=False)
class StructureAlgebra:
    """Commutative unital algebra: e_i e_j = sum_k c[i, j, k] e_k.

    ``unit`` is either the index of the basis vector acting as identity or
    the identity's full coordinate vector.
    """

    constants: np.ndarray
    unit: int | np.ndarray = 0

    def __post_init__(self):
        c = np.asarray(self.constants, dtype=complex).copy()
        if c.ndim != 3 or not (c.shape[0] == c.shape[1] == c.shape[2]):
            raise ValueError(f"structure constants must be an m x m x m tensor, got {c.shape}")
        if not np.all(np.isfinite(c)):
            raise ValueError("structure constants must be finite")
        m = c.shape[0]
        if np.ndim(self.unit) == 0:
            if not 0 <= int(self.unit) < m:
                raise ValueError("unit index out of range")
            e = np.zeros(m, dtype=complex)
            e[int(self.unit)] = 1
        else:
            e = np.asarray(self.unit, dtype=complex).copy()
            if e.shape != (m,):
                raise ValueError("unit vector has the wrong length")
        c.flags.writeable = False
        e.flags.writeable = False
        object.__setattr__(self, "constants", c)
        object.__setattr__(self, "unit", e)
        scale = max(1.0, float(np.max(np.abs(c), initial=0.0)))
        if not np.allclose(c, c.transpose(1, 0, 2), atol=1e-12 * scale, rtol=0):
            raise ValueError("structure constants are not commutative")
        left = np.einsum("i,ijk->jk", e, c)
        if not np.allclose(left, np.eye(m), atol=1e-12 * scale, rtol=0):
            raise ValueError("designated unit does not act as the identity")

    @property
    def dim(self) -> int:
        return self.constants.shape[0]

    def mul(self, x, y) -> np.ndarray:
        return np.einsum("i,j,ijk->k", np.asarray(x, dtype=complex),
                         np.asarray(y, dtype=complex), self.constants)

    @classmethod
    def from_quotient(cls, p: Poly) -> "StructureAlgebra":
        """Structure constants of C[z]/<p> in the monomial basis."""
        n = p.degree
        basis = [reduce(Poly([0] * i + [1]), p) for i in range(n)]
        c = np.array([[(bi * bj).coeffs for bj in basis] for bi in basis])
        return cls(c, 0)

    @classmethod
    def diagonal(cls, m: int) -> "StructureAlgebra":
        """C^m with componentwise product, basis of orthogonal idempotents."""
        c = np.zeros((m, m, m), dtype=complex)
        for i in range(m):
            c[i, i, i] = 1
        return cls(c, np.ones(m))


def minimal_polynomial(A: StructureAlgebra, x, rank_tol: float = 1e-10) -> Poly:
    """Monic annihilating polynomial of least degree for ``x``.

    Builds the Krylov sequence 1, x, x^2, ... and stops at the first power
    whose inclusion does not raise the numerical rank (smallest singular
    value below ``rank_tol`` times the largest).
    """
    x = np.asarray(x, dtype=complex)
    if x.shape != (A.dim,):
        raise ValueError(f"element must have {A.dim} coordinates")
    powers = [np.asarray(A.unit)]
    for d in range(1, A.dim + 1):
        powers.append(A.mul(powers[-1], x))
        K = np.column_stack(powers)
        s = np.linalg.svd(K, compute_uv=False)
        if np.count_nonzero(s > rank_tol * s[0]) < K.shape[1]:
            sol, *_ = np.linalg.lstsq(K[:, :-1], -K[:, -1], rcond=None)
            return Poly(np.append(sol, 1.0))
    raise AssertionError("Krylov sequence failed to become dependent")  # unreachable by dimension count
