"""Deterministic sampling of chart points and (1,0)-directions."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import ndtri
from scipy.stats import qmc

__all__ = ["ChartDomain", "SampleSpec", "sample_points", "sample_directions", "phase_gauge"]


@dataclass(frozen=True)
class ChartDomain:
    """Where a chart may be sampled: a ball or an axis-aligned box."""

    kind: str = "ball"
    radius: float = 1.0
    center: tuple = field(default=())
    lower: tuple = field(default=())
    upper: tuple = field(default=())

    def __post_init__(self):
        if self.kind not in ("ball", "box"):
            raise ValueError(f"unknown domain kind {self.kind!r}")
        if self.kind == "ball" and self.radius <= 0:
            raise ValueError("ball radius must be positive")

    @classmethod
    def ball(cls, radius: float, center=()) -> "ChartDomain":
        return cls("ball", float(radius), tuple(float(c) for c in center))

    @classmethod
    def box(cls, lower, upper) -> "ChartDomain":
        return cls("box", 1.0, (), tuple(map(float, lower)), tuple(map(float, upper)))

    def _center(self, dim):
        return np.zeros(dim) if not self.center else np.asarray(self.center, dtype=float)

    def contains(self, x) -> bool:
        x = np.asarray(x, dtype=float)
        if self.kind == "ball":
            return bool(np.linalg.norm(x - self._center(len(x))) < self.radius)
        lo, hi = np.asarray(self.lower), np.asarray(self.upper)
        return bool(np.all(x >= lo) and np.all(x <= hi))

    def clip(self, x, shrink: float = 0.999) -> np.ndarray:
        """Closest point to ``x`` inside the domain (strictly inside for balls)."""
        x = np.asarray(x, dtype=float)
        if self.kind == "box":
            return np.clip(x, self.lower, self.upper)
        c = self._center(len(x))
        r = np.linalg.norm(x - c)
        limit = shrink * self.radius
        return x if r <= limit else c + (x - c) * (limit / r)

    def from_unit_cube(self, u: np.ndarray) -> np.ndarray:
        """Map points of [0, 1)^D onto the domain (rows are points)."""
        u = np.atleast_2d(u)
        if self.kind == "box":
            lo, hi = np.asarray(self.lower), np.asarray(self.upper)
            return lo + u * (hi - lo)
        # radial cube -> ball map: keeps low-discrepancy structure, no rejection
        v = 2.0 * u - 1.0
        inf = np.max(np.abs(v), axis=1, keepdims=True)
        two = np.linalg.norm(v, axis=1, keepdims=True)
        scale = np.divide(inf, two, out=np.zeros_like(inf), where=two > 0)
        # stay off the boundary, where charts are typically singular
        return self._center(u.shape[1]) + 0.98 * self.radius * v * scale

    def to_dict(self) -> dict:
        if self.kind == "ball":
            d = {"kind": "ball", "radius": self.radius}
            if self.center:
                d["center"] = list(self.center)
            return d
        return {"kind": "box", "lower": list(self.lower), "upper": list(self.upper)}

    @classmethod
    def from_dict(cls, d: dict) -> "ChartDomain":
        if d.get("kind", "ball") == "ball":
            return cls.ball(d.get("radius", 1.0), d.get("center", ()))
        return cls.box(d["lower"], d["upper"])


@dataclass(frozen=True)
class SampleSpec:
    points: int = 50
    directions_per_point: int = 20
    seed: int = 42

    def __post_init__(self):
        if self.points < 1 or self.directions_per_point < 1:
            raise ValueError("sample counts must be positive")


def _halton(dim: int, count: int, seed: int) -> np.ndarray:
    sampler = qmc.Halton(d=dim, scramble=True, seed=np.random.default_rng(seed))
    return sampler.random(count)


def sample_points(domain: ChartDomain, dim: int, count: int, seed: int = 42) -> np.ndarray:
    """``count`` deterministic low-discrepancy points of the chart domain."""
    return domain.from_unit_cube(_halton(dim, count, seed))


def phase_gauge(w: np.ndarray) -> np.ndarray:
    """Rotate the phase so that the first non-negligible component is real positive."""
    w = np.asarray(w, dtype=complex)
    for c in w:
        if abs(c) > 1e-12:
            return w * (abs(c) / c)
    return w


def sample_directions(n: int, count: int, seed: int = 42) -> np.ndarray:
    """Unit vectors of C^n modulo phase, shape (count, n).

    Scrambled Halton points are pushed through the normal quantile function
    and normalized, which spreads them evenly over the sphere S^{2n-1}.
    """
    u = np.clip(_halton(2 * n, count, seed + 7919), 1e-12, 1.0 - 1e-12)
    z = ndtri(u)
    w = z[:, :n] + 1j * z[:, n:]
    w /= np.linalg.norm(w, axis=1, keepdims=True)
    return np.array([phase_gauge(row) for row in w])
