"""Marginal laws of array entries, used for exact centering and seminorms."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class Uniform01:
    pass


@dataclass(frozen=True)
class TwoPoint:
    """Equiprobable law on ``{a, b}``; Rademacher by default."""

    a: float = -1.0
    b: float = 1.0


@dataclass(frozen=True)
class Gaussian:
    mean: float = 0.0
    sd: float = 1.0


@dataclass(frozen=True)
class PointMass:
    value: float


@dataclass(frozen=True, eq=False)
class Marginals:
    """Laws of ``X_{1,n}, ..., X_{n,n}``.

    ``kind`` is ``"uniform01"``, ``"two_point"``, ``"point"`` or ``"gaussian"``;
    gaussian rows carry per-index ``loc``/``scale`` arrays.
    """

    kind: str
    n: int
    loc: np.ndarray | None = None
    scale: np.ndarray | None = None
    a: float = 0.0
    b: float = 0.0

    @classmethod
    def uniform(cls, n: int) -> "Marginals":
        return cls("uniform01", n)

    @classmethod
    def two_point(cls, n: int, a: float = -1.0, b: float = 1.0) -> "Marginals":
        return cls("two_point", n, a=float(a), b=float(b))

    @classmethod
    def point(cls, n: int, value: float) -> "Marginals":
        return cls("point", n, a=float(value))

    @classmethod
    def gaussian(cls, loc, scale) -> "Marginals":
        loc = np.asarray(loc, dtype=float)
        scale = np.asarray(scale, dtype=float)
        if loc.shape != scale.shape or loc.ndim != 1:
            raise ValueError("loc and scale must be 1-d arrays of equal length")
        if np.any(scale <= 0):
            raise ValueError("gaussian scales must be positive")
        return cls("gaussian", len(loc), loc=loc, scale=scale)

    @property
    def identical(self) -> bool:
        if self.kind != "gaussian":
            return True
        return bool(np.all(self.loc == self.loc[0]) and np.all(self.scale == self.scale[0]))

    def law(self, i: int):
        """Law of the 1-based entry ``i``."""
        if self.kind == "uniform01":
            return Uniform01()
        if self.kind == "two_point":
            return TwoPoint(self.a, self.b)
        if self.kind == "point":
            return PointMass(self.a)
        return Gaussian(float(self.loc[i - 1]), float(self.scale[i - 1]))

    def distinct_laws(self, limit: int | None = None) -> list:
        """Distinct entry laws; with ``limit`` a subsample that keeps the extreme scales."""
        if self.identical:
            return [self.law(1)]
        pairs = np.unique(np.column_stack([self.loc, self.scale]), axis=0)
        if limit is not None and len(pairs) > limit:
            keep = np.unique(np.concatenate([
                np.linspace(0, len(pairs) - 1, limit).round().astype(int),
                [np.argmin(pairs[:, 1]), np.argmax(pairs[:, 1])],
            ]))
            pairs = pairs[keep]
        return [Gaussian(float(m), float(s)) for m, s in pairs]
