"""Exact evaluation of partial sums, running maxima and the sequential processes.

All functions accept a :class:`CenteredEval` or a raw array of centered values
whose last axis is time, so a ``(replicates, n)`` matrix is handled in one call.
Indices ``i, j`` are 1-based as in the partial-sum notation ``S(i, j)``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .arrays import TriangularArrayRow
from .fclasses import Member, mean_vector
from .marginals import Marginals


@dataclass(frozen=True)
class CenteredEval:
    """``z_i = f(X_{i,n}) - E f(X_{i,n})`` for one row and one class member."""

    row: TriangularArrayRow | None
    f: Member | None
    z: np.ndarray = field(repr=False)

    def __post_init__(self):
        if not np.all(np.isfinite(self.z)):
            raise ValueError("centered values must be finite")

    @property
    def n(self) -> int:
        return self.z.shape[-1]


def centered(row: TriangularArrayRow, f: Member) -> CenteredEval:
    z = f(row.values) - mean_vector(f, row.marginals)
    return CenteredEval(row, f, z)


def centered_values(values: np.ndarray, f: Member, marg: Marginals) -> np.ndarray:
    """Centered evaluations of ``f`` on a batch of rows (last axis is time)."""
    return f(values) - mean_vector(f, marg)


def _z(ce) -> np.ndarray:
    return ce.z if isinstance(ce, CenteredEval) else np.asarray(ce, dtype=float)


def _check_index(n: int, *idx: int):
    for k in idx:
        if not 1 <= k <= n:
            raise IndexError(f"index {k} outside [1, {n}]")


def partial_sum(ce, i: int, j: int):
    """``S(i, j) = z_i + ... + z_j``, zero when ``j < i``."""
    z = _z(ce)
    _check_index(z.shape[-1], i, j)
    if j < i:
        return np.zeros(z.shape[:-1]) if z.ndim > 1 else 0.0
    s = z[..., i - 1:j].sum(axis=-1)
    return float(s) if np.ndim(s) == 0 else s


def running_max(ce, i: int, j: int):
    """``M(i, j) = max_{k=i..j} |S(i, k)|``, zero when ``j < i``."""
    z = _z(ce)
    _check_index(z.shape[-1], i, j)
    if j < i:
        return np.zeros(z.shape[:-1]) if z.ndim > 1 else 0.0
    m = np.abs(np.cumsum(z[..., i - 1:j], axis=-1)).max(axis=-1)
    return float(m) if np.ndim(m) == 0 else m


def floor_index(n: int, t: float) -> int:
    """``floor(n t)`` decided in t-space, so ``floor_index(n, k / n) == k`` exactly."""
    k = math.floor(n * t)
    while k + 1 <= n and (k + 1) / n <= t:
        k += 1
    while k > 0 and k / n > t:
        k -= 1
    return k


def eval_Z(ce, t: float):
    """``Z_n(t, f) = n^{-1/2} S(1, floor(n t))``."""
    if not 0.0 <= t <= 1.0:
        raise ValueError(f"t = {t!r} outside [0, 1]")
    z = _z(ce)
    n = z.shape[-1]
    k = floor_index(n, t)
    s = z[..., :k].sum(axis=-1) / math.sqrt(n)
    return float(s) if np.ndim(s) == 0 else s


def z_path(ce) -> np.ndarray:
    """``Z_n(i/n, f)`` for ``i = 0..n`` (last axis has length ``n + 1``)."""
    z = _z(ce)
    n = z.shape[-1]
    c = np.cumsum(z, axis=-1) / math.sqrt(n)
    return np.concatenate([np.zeros(z.shape[:-1] + (1,)), c], axis=-1)


def _check_interval(u: float, v: float):
    if not 0.0 <= u <= 1.0 or not 0.0 <= v <= 1.0:
        raise ValueError("interval endpoints must lie in [0, 1]")
    if u > v:
        raise ValueError(f"need u <= v, got ({u!r}, {v!r}]")


def smoothing_weights(n: int, u: float, v: float) -> np.ndarray:
    """``lambda((i-1, i] ∩ (nu, nv])`` for ``i = 1..n`` by direct interval intersection."""
    _check_interval(u, v)
    nu, nv = n * u, n * v
    i = np.arange(1, n + 1, dtype=float)
    return np.maximum(0.0, np.minimum(i, nv) - np.maximum(i - 1.0, nu))


def eval_Zs_weights(ce, u: float, v: float):
    """Smoothed process on ``(u, v]`` as the weighted sum over all cells."""
    z = _z(ce)
    n = z.shape[-1]
    s = z @ smoothing_weights(n, u, v) / math.sqrt(n)
    return float(s) if np.ndim(s) == 0 else s


def eval_Zs_interval(ce, u: float, v: float):
    """Smoothed process on ``(u, v]`` from the interior sum and two boundary fragments.

    When ``u`` and ``v`` fall in the same cell the two fragments coincide, so
    that cell is counted once with weight ``nv - nu``.
    """
    _check_interval(u, v)
    z = _z(ce)
    n = z.shape[-1]
    nu, nv = n * u, n * v
    a, b = math.floor(nu), math.floor(nv)
    zero = np.zeros(z.shape[:-1]) if z.ndim > 1 else 0.0
    if a == b:
        s = (nv - nu) * z[..., a] if a < n else zero
    else:
        s = z[..., a + 1:b].sum(axis=-1)
        s = s + (min(a + 1, nv) - nu) * z[..., a]
        if b < n:
            s = s + (nv - max(nu, b)) * z[..., b]
    s = s / math.sqrt(n)
    return float(s) if np.ndim(s) == 0 else s


def eval_Zs_union(ce, intervals: Sequence[tuple[float, float]]):
    """Smoothed process on a disjoint union of intervals ``(u_k, v_k]``."""
    ivs = sorted(intervals)
    for (u1, v1), (u2, v2) in zip(ivs[:-1], ivs[1:]):
        if u2 < v1:
            raise ValueError("union components must be pairwise disjoint")
    return sum(eval_Zs_interval(ce, u, v) for u, v in ivs)


# --------------------------------------------------------------------------
# semimetrics on index sets and the modulus of continuity


def interval_symdiff(a: tuple[float, float], b: tuple[float, float]) -> float:
    """``lambda((u, v] Δ (w, z])``."""
    (u, v), (w, z) = a, b
    overlap = max(0.0, min(v, z) - max(u, w))
    return (v - u) + (z - w) - 2.0 * overlap


def tau_matrix(times: Sequence[float], fdist: np.ndarray) -> np.ndarray:
    """``|s - t| + rho(f, g)`` on the product grid, flattened time-major."""
    t = np.asarray(times, dtype=float)
    dt = np.abs(t[:, None] - t[None, :])
    return (dt[:, None, :, None] + fdist[None, :, None, :]).reshape(len(t) * len(fdist), -1)


def tau_s_matrix(intervals: Sequence[tuple[float, float]], fdist: np.ndarray) -> np.ndarray:
    """``sqrt(lambda(A Δ B)) + rho(f, g)`` on the product grid, flattened set-major."""
    iv = np.asarray(intervals, dtype=float)
    u, v = iv[:, 0], iv[:, 1]
    overlap = np.maximum(0.0, np.minimum(v[:, None], v[None, :]) - np.maximum(u[:, None], u[None, :]))
    sd = (v - u)[:, None] + (v - u)[None, :] - 2.0 * overlap
    da = np.sqrt(np.maximum(sd, 0.0))
    return (da[:, None, :, None] + fdist[None, :, None, :]).reshape(len(iv) * len(fdist), -1)


def modulus(evals: np.ndarray, dist: np.ndarray, delta: float, warn: bool = True):
    """``max |e_a - e_b|`` over distinct index points with ``dist[a, b] <= delta``.

    ``evals`` has the index points on its last axis; leading axes (replicates)
    are kept.  Over a finite grid this is a lower bound for the supremum over
    the full index set.  An empty pair set gives 0 and a warning.
    """
    e = np.asarray(evals, dtype=float)
    d = np.asarray(dist, dtype=float)
    a, b = np.nonzero(np.triu(d <= delta, k=1))
    if a.size == 0:
        if warn:
            warnings.warn("modulus: no distinct index pairs within delta", RuntimeWarning, stacklevel=2)
        out = np.zeros(e.shape[:-1])
        return float(out) if out.ndim == 0 else out
    out = np.zeros(e.shape[:-1])
    chunk = 4096
    for s in range(0, a.size, chunk):
        diff = np.abs(e[..., a[s:s + chunk]] - e[..., b[s:s + chunk]]).max(axis=-1)
        out = np.maximum(out, diff)
    return float(out) if np.ndim(out) == 0 else out


def trajectory_rows(ce_by_member: dict, times: Sequence[float]) -> list[tuple]:
    """``(t, parameter, Z_n(t, f))`` rows for CSV export."""
    rows = []
    for f, ce in ce_by_member.items():
        for t in times:
            rows.append((float(t), f.param if f.param is not None else repr(f), eval_Z(ce, t)))
    return rows
