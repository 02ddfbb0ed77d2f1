"""Bundled example polynomials and seeded random generators used by the tests."""

from __future__ import annotations

import numpy as np

from .polynomial import Poly

BUNDLED = {
    "z^2+1": Poly([1, 0, 1]),
    "z^2-2": Poly([-2, 0, 1]),
    "z": Poly([0, 1]),
    "z-3": Poly([-3, 1]),
    "z^2-z": Poly([0, -1, 1]),
    "z^3-1": Poly([-1, 0, 0, 1]),
    "2z^3+iz-1": Poly([-1, 1j, 0, 2]),
}


def random_monic(n: int, rng: np.random.Generator) -> Poly:
    """Monic polynomial with standard complex Gaussian lower coefficients."""
    c = (rng.normal(size=n) + 1j * rng.normal(size=n)) / np.sqrt(2)
    return Poly(np.append(c, 1.0))


def random_separated_roots(n: int, rng: np.random.Generator, separation: float = 0.1,
                           radius: float = 2.0) -> np.ndarray:
    """``n`` points uniform in a disk with pairwise distance at least ``separation``."""
    pts: list[complex] = []
    while len(pts) < n:
        z = radius * np.sqrt(rng.uniform()) * np.exp(2j * np.pi * rng.uniform())
        if all(abs(z - q) >= separation for q in pts):
            pts.append(complex(z))
    return np.array(pts)


def bundled_with_random(seed: int = 2024) -> dict[str, Poly]:
    rng = np.random.default_rng(seed)
    out = dict(BUNDLED)
    out["random_deg5"] = random_monic(5, rng)
    return out
