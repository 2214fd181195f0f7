"""Triangular-array generators with known strong-mixing profiles.

Every row is a pure function of ``(model, n, seed)``.  Innovations come from a
Philox counter-based stream keyed by the 64-bit row seed, so innovation ``i``
of a row is the ``i``-th output of that stream.  Gaussian innovations use the
inverse normal CDF of the counter-indexed uniforms (one draw per index).

Replicate ``r`` of an experiment with master seed ``s`` uses the row seed
``replicate_seed(s, r)``; see :func:`replicate_seed`.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy import special

from .marginals import Marginals, PointMass, TwoPoint, Uniform01

MASK64 = (1 << 64) - 1


def replicate_seed(master: int, r: int) -> int:
    """64-bit row seed for replicate ``r`` of master seed ``master``.

    Defined as the first 64-bit word of ``numpy.random.SeedSequence([master, r])``.
    """
    ss = np.random.SeedSequence([int(master) & MASK64, int(r)])
    return int(ss.generate_state(1, np.uint64)[0])


def _stream(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(key=int(seed) & MASK64))


def _uniforms(seed: int, size: int) -> np.ndarray:
    return _stream(seed).random(size)


def _normals(seed: int, size: int) -> np.ndarray:
    u = _uniforms(seed, size)
    # random() lies in [0, 1); keep ndtri finite at the left endpoint
    u = np.where(u == 0.0, np.finfo(float).tiny, u)
    return special.ndtri(u)


# --------------------------------------------------------------------------
# mixing profiles


@dataclass(frozen=True)
class MixingProfile:
    """Upper profile ``t -> alpha(t)`` of the strong-mixing coefficients.

    ``kind`` is one of ``"zero_beyond"`` (``params = (m,)``), ``"geometric"``
    (``params = (c, r)``) or ``"tabulated"`` (``params`` holds
    ``alpha(1), alpha(2), ...``).

    For ``zero_beyond`` the lags ``1..m`` carry the universal bound 1/4
    (``|P(A∩B) - P(A)P(B)| <= 1/4`` for any events).  Geometric profiles are
    ``min(1, c r^t)``.  ``tail`` on tabulated profiles is ``None`` (unknown)
    or ``"zero"`` (vanishes beyond the table).
    """

    kind: str
    params: tuple = ()
    tail: str | None = None

    @classmethod
    def zero_beyond(cls, m: int) -> "MixingProfile":
        if m < 0:
            raise ValueError("m must be nonnegative")
        return cls("zero_beyond", (int(m),))

    @classmethod
    def geometric(cls, c: float, r: float) -> "MixingProfile":
        if c < 0 or r < 0:
            raise ValueError("geometric profile needs c >= 0 and r >= 0")
        return cls("geometric", (float(c), float(r)))

    @classmethod
    def tabulated(cls, values: Sequence[float], tail: str | None = None) -> "MixingProfile":
        vals = tuple(float(v) for v in values)
        if any(not 0.0 <= v <= 1.0 for v in vals):
            raise ValueError("tabulated mixing coefficients must lie in [0, 1]")
        if tail not in (None, "zero"):
            raise ValueError(f"unknown tail law {tail!r}")
        return cls("tabulated", vals, tail)

    def alpha(self, t) -> np.ndarray | float:
        t_arr = np.asarray(t)
        if np.any(t_arr < 0):
            raise ValueError("lags must be nonnegative")
        if self.kind == "zero_beyond":
            (m,) = self.params
            out = np.where(t_arr <= m, 0.25, 0.0)
        elif self.kind == "geometric":
            c, r = self.params
            out = np.minimum(1.0, c * np.power(r, t_arr.astype(float)))
        elif self.kind == "tabulated":
            table = np.concatenate([[1.0], np.asarray(self.params, dtype=float)])
            idx = t_arr.astype(int)
            if self.tail is None and np.any(idx >= len(table)):
                raise ValueError("tabulated profile has no tail law beyond its table")
            out = np.where(idx < len(table), table[np.minimum(idx, len(table) - 1)], 0.0)
        else:
            raise ValueError(f"unknown profile kind {self.kind!r}")
        out = np.where(t_arr == 0, 1.0, out)
        return float(out) if np.ndim(out) == 0 else out


# --------------------------------------------------------------------------
# coefficient functions for tv_ar1 (serializable callables)


@dataclass(frozen=True)
class ConstantCoef:
    value: float

    def __call__(self, u):
        return np.full(np.shape(u), self.value, dtype=float)


@dataclass(frozen=True)
class LinearCoef:
    start: float
    end: float

    def __call__(self, u):
        u = np.asarray(u, dtype=float)
        return self.start + (self.end - self.start) * u


@dataclass(frozen=True)
class SineCoef:
    center: float
    amplitude: float
    cycles: float = 1.0

    def __call__(self, u):
        u = np.asarray(u, dtype=float)
        return self.center + self.amplitude * np.sin(2 * np.pi * self.cycles * u)


@dataclass(frozen=True)
class StepCoef:
    """``before`` on ``u <= at`` and ``after`` beyond."""

    before: float
    after: float
    at: float = 0.5

    def __call__(self, u):
        u = np.asarray(u, dtype=float)
        return np.where(u <= self.at, self.before, self.after).astype(float)


# --------------------------------------------------------------------------
# model descriptors


@dataclass(frozen=True)
class GaussSpec:
    """Independent Gaussian marginals with mean ``mean_fn(i/n)`` and sd ``sd_fn(i/n)``."""

    mean_fn: Callable = ConstantCoef(0.0)
    sd_fn: Callable = ConstantCoef(1.0)


@dataclass(frozen=True)
class IID:
    marginal: object = Uniform01()

    def describe(self) -> dict:
        return {"kind": "iid", "marginal": _describe_marginal(self.marginal)}


@dataclass(frozen=True)
class MDependent:
    """Moving window of width ``m + 1`` over iid standard normal innovations.

    ``X_i = Phi((e_i + ... + e_{i+m}) / sqrt(m + 1))`` for ``output="uniform01"``,
    and the normalized window sum itself for ``output="gauss"``.
    """

    m: int
    output: str = "uniform01"

    def describe(self) -> dict:
        return {"kind": "m_dependent", "m": self.m, "output": self.output}


@dataclass(frozen=True)
class TVAR1:
    """``X_i = a(i/n) X_{i-1} + sd * e_i`` with ``X_0 = 0``."""

    coef_fn: Callable
    innovation_sd: float = 1.0
    abar: float | None = None

    def describe(self) -> dict:
        return {"kind": "tv_ar1", "coef": _describe_callable(self.coef_fn),
                "innovation_sd": self.innovation_sd, "abar": self.abar}


def _describe_callable(fn) -> dict | str:
    if isinstance(fn, ConstantCoef):
        return {"kind": "constant", "value": fn.value}
    if isinstance(fn, LinearCoef):
        return {"kind": "linear", "start": fn.start, "end": fn.end}
    if isinstance(fn, SineCoef):
        return {"kind": "sine", "center": fn.center, "amplitude": fn.amplitude, "cycles": fn.cycles}
    if isinstance(fn, StepCoef):
        return {"kind": "step", "before": fn.before, "after": fn.after, "at": fn.at}
    return repr(fn)


def _describe_marginal(marg) -> dict:
    if isinstance(marg, Uniform01):
        return {"kind": "uniform01"}
    if isinstance(marg, TwoPoint):
        return {"kind": "two_point", "a": marg.a, "b": marg.b}
    if isinstance(marg, GaussSpec):
        return {"kind": "gauss", "mean": _describe_callable(marg.mean_fn),
                "sd": _describe_callable(marg.sd_fn)}
    if isinstance(marg, PointMass):
        return {"kind": "point", "value": marg.value}
    return {"kind": repr(marg)}


@dataclass(frozen=True)
class TriangularArrayRow:
    n: int
    values: np.ndarray = field(repr=False)
    model: object
    seed: int

    def __post_init__(self):
        if len(self.values) != self.n:
            raise ValueError("row length mismatch")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("row contains non-finite values")

    @property
    def marginals(self) -> Marginals:
        return marginals_of(self.model, self.n)

    @property
    def profile(self) -> MixingProfile:
        return profile_of(self.model, self.n)


# --------------------------------------------------------------------------
# generation


def _check_n(n) -> int:
    if int(n) != n or n < 1:
        raise ValueError(f"row length must be a positive integer, got {n!r}")
    return int(n)


def _gauss_params(spec: GaussSpec, n: int):
    grid = np.arange(1, n + 1) / n
    mean = np.broadcast_to(np.asarray(spec.mean_fn(grid), dtype=float), (n,)).copy()
    sd = np.broadcast_to(np.asarray(spec.sd_fn(grid), dtype=float), (n,)).copy()
    bad = np.flatnonzero(~(sd > 0))
    if bad.size:
        raise ValueError(f"sd_fn must be positive; index {bad[0] + 1} gives {sd[bad[0]]!r}")
    return mean, sd


def _tvar_coefs(model: TVAR1, n: int) -> np.ndarray:
    grid = np.arange(1, n + 1) / n
    a = np.broadcast_to(np.asarray(model.coef_fn(grid), dtype=float), (n,)).copy()
    limit = 1.0 if model.abar is None else model.abar
    bad = np.flatnonzero(~(np.abs(a) < 1.0) | (np.abs(a) > limit))
    if bad.size:
        i = bad[0]
        raise ValueError(f"tv_ar1 coefficient at index {i + 1} (u={grid[i]:.6g}) is {a[i]!r}; "
                         f"need |a| < 1 and |a| <= abar")
    return a


def _sample(model, n: int, seed: int) -> np.ndarray:
    if isinstance(model, IID):
        marg = model.marginal
        if isinstance(marg, Uniform01):
            return _uniforms(seed, n)
        if isinstance(marg, TwoPoint):
            u = _uniforms(seed, n)
            return np.where(u < 0.5, marg.a, marg.b).astype(float)
        if isinstance(marg, GaussSpec):
            mean, sd = _gauss_params(marg, n)
            return mean + sd * _normals(seed, n)
        if isinstance(marg, PointMass):
            return np.full(n, float(marg.value))
        raise ValueError(f"unsupported iid marginal {marg!r}")
    if isinstance(model, MDependent):
        if model.m < 0:
            raise ValueError("m must be nonnegative")
        e = _normals(seed, n + model.m)
        window = np.lib.stride_tricks.sliding_window_view(e, model.m + 1).sum(axis=1)
        z = window / math.sqrt(model.m + 1)
        if model.output == "uniform01":
            return special.ndtr(z)
        if model.output == "gauss":
            return z
        raise ValueError(f"unknown m-dependent output {model.output!r}")
    if isinstance(model, TVAR1):
        if not model.innovation_sd > 0:
            raise ValueError("innovation_sd must be positive")
        a = _tvar_coefs(model, n)
        e = model.innovation_sd * _normals(seed, n)
        x = np.empty(n)
        prev = 0.0
        for i in range(n):
            prev = a[i] * prev + e[i]
            x[i] = prev
        return x
    raise ValueError(f"unknown model {model!r}")


def generate(model, n: int, seed: int) -> TriangularArrayRow:
    n = _check_n(n)
    return TriangularArrayRow(n=n, values=_sample(model, n, seed), model=model, seed=int(seed) & MASK64)


def gen_iid(n: int, marginal=Uniform01(), seed: int = 0) -> TriangularArrayRow:
    return generate(IID(marginal), n, seed)


def gen_m_dependent(n: int, m: int, seed: int = 0, output: str = "uniform01") -> TriangularArrayRow:
    return generate(MDependent(m, output), n, seed)


def gen_tvar1(n: int, coef_fn: Callable, innovation_sd: float = 1.0, seed: int = 0,
              abar: float | None = None) -> TriangularArrayRow:
    return generate(TVAR1(coef_fn, innovation_sd, abar), n, seed)


def simulate(model, n: int, replicates: int, seed: int, start: int = 0) -> np.ndarray:
    """Matrix of replicate rows ``start .. start + replicates - 1`` (shape ``(R, n)``)."""
    n = _check_n(n)
    out = np.empty((replicates, n))
    for k in range(replicates):
        out[k] = _sample(model, n, replicate_seed(seed, start + k))
    return out


# --------------------------------------------------------------------------
# analytic descriptors


def marginals_of(model, n: int) -> Marginals:
    """Per-index marginal laws of row ``n`` of ``model``."""
    if isinstance(model, IID):
        marg = model.marginal
        if isinstance(marg, Uniform01):
            return Marginals.uniform(n)
        if isinstance(marg, TwoPoint):
            return Marginals.two_point(n, marg.a, marg.b)
        if isinstance(marg, GaussSpec):
            mean, sd = _gauss_params(marg, n)
            return Marginals.gaussian(mean, sd)
        if isinstance(marg, PointMass):
            return Marginals.point(n, marg.value)
    if isinstance(model, MDependent):
        if model.output == "uniform01":
            return Marginals.uniform(n)
        return Marginals.gaussian(np.zeros(n), np.ones(n))
    if isinstance(model, TVAR1):
        a = _tvar_coefs(model, n)
        var = np.empty(n)
        prev = 0.0
        s2 = model.innovation_sd ** 2
        for i in range(n):
            prev = a[i] ** 2 * prev + s2
            var[i] = prev
        return Marginals.gaussian(np.zeros(n), np.sqrt(var))
    raise ValueError(f"no analytic marginals for {model!r}")


def profile_of(model, n: int | None = None) -> MixingProfile:
    """Analytic upper mixing profile of ``model``.

    iid rows are 0-dependent.  For tv_ar1 the profile is geometric with
    ``c = 1`` and ``r = abar`` (the declared bound, or the largest |a| on the
    grid of row ``n`` when no bound is declared).
    """
    if isinstance(model, IID):
        return MixingProfile.zero_beyond(0)
    if isinstance(model, MDependent):
        return MixingProfile.zero_beyond(model.m)
    if isinstance(model, TVAR1):
        if model.abar is not None:
            r = model.abar
        else:
            if n is None:
                raise ValueError("tv_ar1 without declared abar needs n to size the profile")
            r = float(np.max(np.abs(_tvar_coefs(model, n))))
        return MixingProfile.geometric(1.0, r)
    raise ValueError(f"no mixing profile for {model!r}")


# --------------------------------------------------------------------------
# empirical lower bound on alpha_n(t)


@dataclass(frozen=True)
class AlphaEstimate:
    value: float
    std_error: float
    events: int
    position: int


def _rectangles(codes: np.ndarray, bins: int) -> np.ndarray:
    """Indicator matrix of all rectangle events over the columns of ``codes``.

    Each coordinate ranges over a contiguous bin range ``[lo, hi]``; the full
    range is included, so narrower windows are embedded in wider ones.
    """
    ranges = [(lo, hi) for lo in range(bins) for hi in range(lo, bins)]
    cols = []
    for combo in itertools.product(ranges, repeat=codes.shape[1]):
        ind = np.ones(codes.shape[0], dtype=bool)
        for c, (lo, hi) in enumerate(combo):
            if lo == 0 and hi == bins - 1:
                continue
            ind &= (codes[:, c] >= lo) & (codes[:, c] <= hi)
        cols.append(ind)
    return np.column_stack(cols).astype(float)


def estimate_alpha_lower(rows: np.ndarray, t: int, bins: int = 4, window: int = 1,
                         positions: Sequence[int] | None = None) -> AlphaEstimate:
    """Restricted-event lower-bound estimate of ``alpha_n(t)``.

    ``rows`` holds replicate rows (shape ``(R, n)``).  Each coordinate is cut
    into ``bins`` equal-probability bins from its empirical quantiles; the past
    window ends at ``k`` and the future window starts at ``k + t`` (1-based).
    Returns the largest ``|P(A∩B) - P(A)P(B)|`` over rectangle events and
    positions, which can only under-estimate the true coefficient up to noise.
    """
    rows = np.asarray(rows, dtype=float)
    R, n = rows.shape
    if R < 100:
        raise ValueError(f"need at least 100 replicate rows to estimate mixing, got {R}")
    if t < 1:
        raise ValueError("lag t must be >= 1")
    if bins < 2:
        raise ValueError("bins must be >= 2")
    if not 1 <= window <= 3:
        raise ValueError("window must be between 1 and 3 coordinates")
    if positions is None:
        lo, hi = window, n - t - window + 1
        if hi < lo:
            raise ValueError("row too short for this lag and window")
        positions = sorted({lo, (lo + hi) // 2, hi})
    best = AlphaEstimate(0.0, 0.0, 0, -1)
    n_events = 0
    for k in positions:
        past_idx = np.arange(k - window, k)
        fut_idx = np.arange(k - 1 + t, k - 1 + t + window)
        if past_idx[0] < 0 or fut_idx[-1] >= n:
            raise ValueError(f"position {k} out of range for lag {t} and window {window}")
        cols = np.concatenate([past_idx, fut_idx])
        qs = np.quantile(rows[:, cols], np.linspace(0, 1, bins + 1)[1:-1], axis=0)
        codes = np.empty((R, len(cols)), dtype=int)
        for c in range(len(cols)):
            codes[:, c] = np.searchsorted(qs[:, c], rows[:, cols[c]], side="left")
        A = _rectangles(codes[:, :window], bins)
        B = _rectangles(codes[:, window:], bins)
        pa, pb = A.mean(axis=0), B.mean(axis=0)
        pab = A.T @ B / R
        dev = np.abs(pab - np.outer(pa, pb))
        n_events += dev.size
        i, j = np.unravel_index(np.argmax(dev), dev.shape)
        if dev[i, j] > best.value or best.position < 0:
            prod = (A[:, i] - pa[i]) * (B[:, j] - pb[j])
            se = float(prod.std(ddof=1) / math.sqrt(R))
            best = AlphaEstimate(float(dev[i, j]), se, 0, int(k))
    return AlphaEstimate(best.value, best.std_error, n_events, best.position)
