"""Dense complex polynomials: arithmetic, reversal, root finding and zero counting.

Coefficients are stored low-to-high, ``coeffs[i]`` multiplies ``w**i``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

EPS = np.finfo(float).eps

#: relative fusion radius for clustering root approximations
CLUSTER_RADIUS = 1e-6


class RootFindingError(RuntimeError):
    """Simultaneous iteration did not converge; ``partial`` holds the last iterates."""

    def __init__(self, message: str, partial: np.ndarray):
        super().__init__(message)
        self.partial = partial


class ZeroOnContourError(ValueError):
    pass


class Poly:
    """Immutable univariate polynomial with complex coefficients."""

    __slots__ = ("_c",)

    def __init__(self, coeffs: Iterable[complex] | np.ndarray = ()):
        c = np.array(list(coeffs) if not isinstance(coeffs, np.ndarray) else coeffs,
                     dtype=complex).ravel()
        if not np.all(np.isfinite(c)):
            raise ValueError("polynomial coefficients must be finite")
        nz = np.flatnonzero(c)
        c = c[: nz[-1] + 1] if nz.size else c[:0]
        c.flags.writeable = False
        self._c = c

    @classmethod
    def from_roots(cls, roots: Sequence[complex], leading: complex = 1.0) -> "Poly":
        out = cls([leading])
        for r in roots:
            out = out * cls([-r, 1.0])
        return out

    @property
    def coeffs(self) -> np.ndarray:
        return self._c

    @property
    def degree(self) -> int:
        """Degree; ``-1`` for the zero polynomial."""
        return len(self._c) - 1

    @property
    def leading(self) -> complex:
        if not len(self._c):
            raise ValueError("zero polynomial has no leading coefficient")
        return complex(self._c[-1])

    def is_zero(self) -> bool:
        return len(self._c) == 0

    def __call__(self, w):
        return evaluate(self, w)

    def __add__(self, other: "Poly") -> "Poly":
        return add(self, other)

    def __sub__(self, other: "Poly") -> "Poly":
        return add(self, -other)

    def __neg__(self) -> "Poly":
        return Poly(-self._c)

    def __mul__(self, other) -> "Poly":
        if isinstance(other, Poly):
            return multiply(self, other)
        return Poly(self._c * complex(other))

    __rmul__ = __mul__

    def __eq__(self, other) -> bool:
        return isinstance(other, Poly) and np.array_equal(self._c, other._c)

    def __hash__(self) -> int:
        return hash(self._c.tobytes())

    def __repr__(self) -> str:
        return f"Poly({[complex(x) for x in self._c]!r})"

    def derivative(self) -> "Poly":
        if self.degree < 1:
            return Poly()
        return Poly(self._c[1:] * np.arange(1, len(self._c)))

    def monic(self) -> "Poly":
        return Poly(self._c / self.leading)

    def reverse(self) -> "Poly":
        return reverse(self)

    def padded(self, length: int) -> np.ndarray:
        """Coefficient array zero-padded (never truncated) to ``length``."""
        out = np.zeros(max(length, len(self._c)), dtype=complex)
        out[: len(self._c)] = self._c
        return out

    def scale(self, w) -> np.ndarray:
        """Magnitude scale ``sum |a_i| |w|^i`` used for backward-error tests."""
        return evaluate(Poly(np.abs(self._c)), np.abs(w)).real if len(self._c) else 0.0 * np.abs(w)


def evaluate(p: Poly, w):
    """Horner evaluation; accepts scalars or arrays."""
    c = p.coeffs
    if not len(c):
        return 0j * np.asarray(w) if np.ndim(w) else 0j
    acc = c[-1] * np.ones_like(np.asarray(w, dtype=complex)) if np.ndim(w) else complex(c[-1])
    for a in c[-2::-1]:
        acc = acc * w + a
    return acc


def reverse(p: Poly) -> Poly:
    """``w**deg(p) * p(1/w)``: the coefficient list reversed and renormalized."""
    if p.is_zero():
        raise ValueError("cannot reverse the zero polynomial")
    return Poly(p.coeffs[::-1])


def add(a: Poly, b: Poly) -> Poly:
    n = max(len(a.coeffs), len(b.coeffs))
    return Poly(a.padded(n) + b.padded(n))


def multiply(a: Poly, b: Poly) -> Poly:
    if a.is_zero() or b.is_zero():
        return Poly()
    return Poly(np.convolve(a.coeffs, b.coeffs))


def divmod_poly(a: Poly, p: Poly) -> tuple[Poly, Poly]:
    """Long division ``a = q*p + r`` with ``deg r < deg p``."""
    if p.is_zero():
        raise ZeroDivisionError("division by the zero polynomial")
    lead = p.leading
    d = p.coeffs / lead
    n = p.degree
    r = a.coeffs.copy()
    if len(r) <= n:
        return Poly(), Poly(r)
    q = np.zeros(len(r) - n, dtype=complex)
    for k in range(len(r) - 1, n - 1, -1):
        t = r[k]
        q[k - n] = t
        if t != 0:
            r[k - n : k + 1] -= t * d
        r[k] = 0
    return Poly(q / lead), Poly(r[:n])


def mod_reduce(a: Poly, p: Poly) -> Poly:
    """Remainder of ``a`` modulo ``p``."""
    return divmod_poly(a, p)[1]


@dataclass(frozen=True)
class Root:
    location: complex
    multiplicity: int


@dataclass(frozen=True)
class RootSet:
    entries: tuple[Root, ...]

    def __iter__(self):
        return iter(self.entries)

    def __len__(self) -> int:
        return len(self.entries)

    @property
    def locations(self) -> np.ndarray:
        return np.array([r.location for r in self.entries], dtype=complex)

    @property
    def total_multiplicity(self) -> int:
        return sum(r.multiplicity for r in self.entries)

    def multiset(self) -> np.ndarray:
        """Locations repeated by multiplicity."""
        return np.array([r.location for r in self.entries for _ in range(r.multiplicity)],
                        dtype=complex)


def _initial_points(c: np.ndarray) -> np.ndarray:
    n = len(c) - 1
    radius = abs(c[0] / c[-1]) ** (1.0 / n)
    # keep the circle from collapsing when the constant term is tiny
    radius = max(radius, 1e-3 * (1 + max(np.abs(c[:-1] / c[-1]))) ** (1.0 / n))
    k = np.arange(n)
    return radius * np.exp(1j * (2 * np.pi * k / n + 0.4))


def _aberth(p: Poly, max_iter: int) -> np.ndarray:
    c = p.coeffs
    dp = p.derivative()
    z = _initial_points(c)
    n = len(z)
    done = np.zeros(n, dtype=bool)
    for _ in range(max_iter):
        for i in range(n):
            if done[i]:
                continue
            zi = z[i]
            pv = evaluate(p, zi)
            if abs(pv) <= 8 * EPS * p.scale(zi):
                done[i] = True
                continue
            ratio = pv / evaluate(dp, zi)
            diff = zi - np.delete(z, i)
            if np.any(diff == 0):
                z[i] = zi + 1e-8 * (1 + abs(zi))
                continue
            corr = ratio / (1 - ratio * np.sum(1.0 / diff))
            z[i] = zi - corr
            if abs(corr) <= 4 * EPS * abs(z[i]):
                done[i] = True
        if done.all():
            return z
    raise RootFindingError(f"Aberth iteration did not converge in {max_iter} sweeps", z.copy())


def _polish(p: Poly, z: complex, steps: int = 3) -> complex:
    dp = p.derivative()
    best, best_val = z, abs(evaluate(p, z))
    for _ in range(steps):
        d = evaluate(dp, best)
        if d == 0:
            break
        cand = best - evaluate(p, best) / d
        val = abs(evaluate(p, cand))
        if not val < best_val:
            break
        best, best_val = cand, val
    return best


def cluster(points: np.ndarray, radius: float = CLUSTER_RADIUS) -> list[list[int]]:
    """Single-linkage groups of indices closer than ``radius * (1 + |w|)``."""
    groups: list[list[int]] = []
    unassigned = list(range(len(points)))
    while unassigned:
        group = [unassigned.pop(0)]
        grew = True
        while grew:
            grew = False
            for j in list(unassigned):
                if any(abs(points[j] - points[g]) <= radius * (1 + abs(points[g])) for g in group):
                    group.append(j)
                    unassigned.remove(j)
                    grew = True
        groups.append(group)
    return groups


def roots(p: Poly, max_iter: int = 500, cluster_radius: float = CLUSTER_RADIUS) -> RootSet:
    """All roots of ``p`` with multiplicities.

    Aberth-Ehrlich simultaneous iteration, Newton polishing of isolated
    roots, then fusion of approximations within ``cluster_radius``; a fused
    cluster is reported at its centroid, refined by Newton on the matching
    derivative.
    """
    if p.degree < 1:
        raise ValueError("roots() needs a polynomial of degree >= 1")
    c = p.coeffs
    zero_mult = int(np.flatnonzero(c)[0])
    entries: list[Root] = []
    if zero_mult:
        entries.append(Root(0j, zero_mult))
    q = Poly(c[zero_mult:])
    if q.degree >= 1:
        z = _aberth(q, max_iter)
        for group in cluster(z, cluster_radius):
            if len(group) == 1:
                loc = _polish(q, z[group[0]])
            else:
                # an m-fold root is a simple root of the (m-1)-th derivative
                dq = q
                for _ in range(len(group) - 1):
                    dq = dq.derivative()
                loc = _polish(dq, complex(np.mean(z[group])), steps=6)
            entries.append(Root(complex(loc), len(group)))
    entries.sort(key=lambda r: (round(r.location.real, 9), round(r.location.imag, 9)))
    return RootSet(tuple(entries))


def count_zeros_in_disk(p: Poly, center: complex, radius: float,
                        tol_boundary: float = 1e-9, max_samples: int = 1 << 20) -> int:
    """Number of zeros (with multiplicity) of ``p`` inside a disk.

    Trapezoid rule for ``(1/2 pi i) \\oint p'/p dw``; the sample count doubles
    until two successive estimates lie within 0.25 of the same integer.
    """
    if radius <= 0:
        raise ValueError("radius must be positive")
    if p.is_zero():
        raise ValueError("zero polynomial has no isolated zeros")
    dp = p.derivative()
    prev = None
    m = 64
    while m <= max_samples:
        theta = 2 * np.pi * np.arange(m) / m
        e = np.exp(1j * theta)
        w = center + radius * e
        pv = evaluate(p, w)
        if np.min(np.abs(pv) / np.maximum(p.scale(w), np.finfo(float).tiny)) <= tol_boundary:
            raise ZeroOnContourError(
                f"p has a zero within tolerance of the circle |w - {center}| = {radius}")
        integrand = evaluate(dp, w) / pv * radius * e
        est = float(np.mean(integrand).real)
        k = round(est)
        if abs(est - k) <= 0.25 and prev == k:
            return int(k)
        prev = k if abs(est - k) <= 0.25 else None
        m *= 2
    raise ZeroOnContourError("argument-principle quadrature did not settle; zero too close to contour")
