"""Function classes, the seminorms rho_p, finite delta-nets and difference pairs.

Suprema over a class are always taken over a finite net, which can only
under-estimate the true supremum.  Means used for centering are exact:
closed forms where they exist, adaptive quadrature against the marginal law
otherwise.
"""

from __future__ import annotations

import itertools
import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy import integrate, special

from .marginals import Gaussian, Marginals, PointMass, TwoPoint, Uniform01

# quadrature is run on at most this many distinct marginal laws per sup
MAX_LAWS = 64


@dataclass(frozen=True)
class Member:
    """One function of a class.

    ``kind`` is ``"halfline"`` (``1{y <= param}``), ``"lipschitz"``
    (``clip(param * y, 0, 1)``), ``"zero"`` or ``"explicit"`` (vectorized ``fn``).
    """

    kind: str
    param: float | None = None
    fn: Callable | None = field(default=None, compare=True)
    label: str = ""

    def __call__(self, y):
        y = np.asarray(y, dtype=float)
        if self.kind == "halfline":
            return (y <= self.param).astype(float)
        if self.kind == "lipschitz":
            return np.clip(self.param * y, 0.0, 1.0)
        if self.kind == "zero":
            return np.zeros_like(y)
        if self.kind == "explicit":
            return np.asarray(self.fn(y), dtype=float) * np.ones_like(y)
        raise ValueError(f"unknown member kind {self.kind!r}")

    @property
    def bounded_by_one(self) -> bool:
        return self.kind in ("halfline", "lipschitz", "zero")

    def __repr__(self):
        if self.kind in ("halfline", "lipschitz"):
            return f"Member({self.kind}, {self.param:g})"
        return f"Member({self.kind}{', ' + self.label if self.label else ''})"


ZERO = Member("zero")


def halfline(x: float) -> Member:
    return Member("halfline", float(x))


def lipschitz(theta: float) -> Member:
    return Member("lipschitz", float(theta))


def explicit(fn: Callable, label: str = "") -> Member:
    return Member("explicit", None, fn, label)


# --------------------------------------------------------------------------
# expectations under single laws


def expect(fn: Callable, law) -> float:
    """``E fn(X)`` for one marginal law."""
    if isinstance(law, Uniform01):
        val, _ = integrate.quad(lambda y: float(fn(np.array(y))), 0.0, 1.0, limit=200)
        return val
    if isinstance(law, TwoPoint):
        return 0.5 * (float(fn(np.array(law.a))) + float(fn(np.array(law.b))))
    if isinstance(law, PointMass):
        return float(fn(np.array(law.value)))
    if isinstance(law, Gaussian):
        m, s = law.mean, law.sd

        def integrand(z):
            return float(fn(np.array(m + s * z))) * math.exp(-0.5 * z * z) / math.sqrt(2 * math.pi)

        val, _ = integrate.quad(integrand, -np.inf, np.inf, limit=200)
        return val
    raise ValueError(f"unsupported law {law!r}")


def _gauss_partial_mean(loc, scale, lo, hi):
    """``E[Y; lo < Y <= hi]`` for ``Y ~ N(loc, scale^2)``."""
    a = (lo - loc) / scale
    b = (hi - loc) / scale
    return loc * (special.ndtr(b) - special.ndtr(a)) + scale * (_phi(a) - _phi(b))


def _phi(z):
    return np.exp(-0.5 * np.square(z)) / math.sqrt(2 * math.pi)


def _cdf(marg: Marginals, x: float) -> np.ndarray | float:
    """``P(X_i <= x)`` for every entry (scalar when all entries share a law)."""
    if marg.kind == "uniform01":
        return float(np.clip(x, 0.0, 1.0))
    if marg.kind == "two_point":
        return 0.5 * (marg.a <= x) + 0.5 * (marg.b <= x)
    if marg.kind == "point":
        return float(marg.a <= x)
    return special.ndtr((x - marg.loc) / marg.scale)


def mean_vector(f: Member, marg: Marginals) -> np.ndarray:
    """Exact ``E f(X_{i,n})`` for ``i = 1..n``."""
    n = marg.n
    if f.kind == "zero":
        return np.zeros(n)
    if f.kind == "halfline":
        return np.broadcast_to(np.asarray(_cdf(marg, f.param), dtype=float), (n,)).copy()
    if f.kind == "lipschitz":
        th = f.param
        if marg.kind == "uniform01" and 0.0 <= th <= 1.0:
            return np.full(n, th / 2.0)
        if marg.kind == "gaussian":
            if th == 0.0:
                return np.zeros(n)
            if th > 0:
                cut = 1.0 / th
                upper = 1.0 - special.ndtr((cut - marg.loc) / marg.scale)
                return th * _gauss_partial_mean(marg.loc, marg.scale, 0.0, cut) + upper
            cut = 1.0 / th
            lower = special.ndtr((cut - marg.loc) / marg.scale)
            return th * _gauss_partial_mean(marg.loc, marg.scale, cut, 0.0) + lower
    if marg.identical:
        return np.full(n, expect(f, marg.law(1)))
    laws = marg.distinct_laws()
    table = {law: expect(f, law) for law in laws}
    return np.array([table[marg.law(i)] for i in range(1, n + 1)])


# --------------------------------------------------------------------------
# L_p norms and the seminorms rho_p


@dataclass(frozen=True)
class NormEstimate:
    value: float
    std_error: float
    samples: int
    low_confidence: bool


def _lp_halfline_diff(x: float, y: float, marg: Marginals, p: float) -> float:
    lo, hi = min(x, y), max(x, y)
    mass = np.asarray(_cdf(marg, hi), dtype=float) - np.asarray(_cdf(marg, lo), dtype=float)
    return float(np.max(mass)) ** (1.0 / p)


def lp_distance(f: Member, g: Member, marg: Marginals, p: float) -> float:
    """``rho_p(f - g) = sup_i ||f(X_i) - g(X_i)||_{L_p}``."""
    if p < 1:
        raise ValueError("p must be >= 1")
    if f == g:
        return 0.0
    if g.kind == "zero":
        f, g = g, f
    if f.kind == "zero" and g.kind == "halfline":
        return float(np.max(np.asarray(_cdf(marg, g.param), dtype=float))) ** (1.0 / p)
    if f.kind == "halfline" and g.kind == "halfline":
        return _lp_halfline_diff(f.param, g.param, marg, p)
    if marg.kind == "uniform01" and {f.kind, g.kind} <= {"lipschitz", "zero"}:
        a = f.param if f.kind == "lipschitz" else 0.0
        b = g.param if g.kind == "lipschitz" else 0.0
        if 0.0 <= a <= 1.0 and 0.0 <= b <= 1.0:
            return abs(a - b) / (p + 1.0) ** (1.0 / p)

    def integrand(y):
        return np.abs(f(y) - g(y)) ** p

    best = 0.0
    for law in marg.distinct_laws(limit=MAX_LAWS):
        best = max(best, expect(integrand, law))
    return best ** (1.0 / p)


def rho_p(f: Member, marg: Marginals, p: float) -> float:
    """Seminorm ``sup_i ||f(X_{i,n})||_{L_p}`` over the entries of a row."""
    return lp_distance(f, ZERO, marg, p)


def rho_p_mc(f: Member, samples: np.ndarray, p: float, min_samples: int = 10_000) -> NormEstimate:
    """Monte Carlo ``||f(X)||_{L_p}`` from draws of ``X``; flagged below ``min_samples``."""
    if p < 1:
        raise ValueError("p must be >= 1")
    vals = np.abs(f(np.asarray(samples, dtype=float))) ** p
    k = vals.size
    m = float(vals.mean())
    se_moment = float(vals.std(ddof=1) / math.sqrt(k)) if k > 1 else math.inf
    value = m ** (1.0 / p)
    # delta method for the p-th root
    se = se_moment * (m ** (1.0 / p - 1.0)) / p if m > 0 else se_moment
    low = k < min_samples
    if low:
        warnings.warn(f"rho_p Monte Carlo fallback with only {k} samples", RuntimeWarning, stacklevel=2)
    return NormEstimate(value, se, k, low)


@dataclass(frozen=True, eq=False)
class Rho:
    """Semimetric ``(f, g) -> rho_p(f - g)`` over the entries described by ``marginals``."""

    p: float
    marginals: Marginals

    def __post_init__(self):
        if self.p < 1:
            raise ValueError("p must be >= 1")

    def __call__(self, f: Member, g: Member) -> float:
        return lp_distance(f, g, self.marginals, self.p)

    def matrix(self, members: Sequence[Member]) -> np.ndarray:
        members = list(members)
        k = len(members)
        if all(m.kind == "halfline" for m in members):
            x = np.array([m.param for m in members])
            if self.marginals.kind == "uniform01":
                c = np.clip(x, 0.0, 1.0)
                return np.abs(c[:, None] - c[None, :]) ** (1.0 / self.p)
            cdfs = np.array([np.atleast_1d(np.asarray(_cdf(self.marginals, xi), dtype=float)) for xi in x])
            diff = np.abs(cdfs[:, None, :] - cdfs[None, :, :]).max(axis=2)
            return diff ** (1.0 / self.p)
        out = np.zeros((k, k))
        for i, j in itertools.combinations(range(k), 2):
            out[i, j] = out[j, i] = self(members[i], members[j])
        return out


@dataclass(frozen=True, eq=False)
class TabulatedSemimetric:
    """Semimetric given by a symmetric table over a fixed member list."""

    members: tuple
    table: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.table, dtype=float)
        if t.shape != (len(self.members), len(self.members)):
            raise ValueError("table shape does not match member list")
        if np.any(t < 0) or not np.array_equal(t, t.T):
            raise ValueError("table must be nonnegative and symmetric")

    def _index(self, f):
        return self.members.index(f)

    def __call__(self, f, g) -> float:
        return float(self.table[self._index(f), self._index(g)])

    def matrix(self, members) -> np.ndarray:
        idx = [self._index(m) for m in members]
        return np.asarray(self.table)[np.ix_(idx, idx)]


def semimetric_violations(members: Sequence[Member], semimetric, tol: float = 1e-12) -> list:
    """Exhaustive check of zero diagonal, symmetry and triangle inequality."""
    d = semimetric.matrix(members)
    bad = []
    k = len(d)
    for i in range(k):
        if abs(d[i, i]) > tol:
            bad.append(("diagonal", i))
    for i, j in itertools.combinations(range(k), 2):
        if d[i, j] != d[j, i]:
            bad.append(("symmetry", i, j))
    # d[i, j] <= d[i, l] + d[l, j] for all l, vectorized over l
    for i in range(k):
        slack = d[i][:, None] + d - d[i][None, :]
        viol = np.argwhere(slack < -tol)
        bad.extend(("triangle", i, int(l), int(j)) for l, j in viol)
    return bad


# --------------------------------------------------------------------------
# function classes and nets


@dataclass(frozen=True)
class FunctionClass:
    """A shipped family: ``halfline_indicators``, ``lipschitz_ball`` or ``finite_explicit``."""

    kind: str
    lo: float = 0.0
    hi: float = 1.0
    finite_members: tuple = ()
    include_zero: bool = False

    def __post_init__(self):
        if self.kind not in ("halfline_indicators", "lipschitz_ball", "finite_explicit"):
            raise ValueError(f"unknown class kind {self.kind!r}")
        if self.kind == "finite_explicit" and not self.finite_members:
            raise ValueError("finite_explicit class needs at least one member")
        if self.kind != "finite_explicit" and not self.lo <= self.hi:
            raise ValueError("parameter range must satisfy lo <= hi")

    @property
    def one_parameter(self) -> bool:
        return self.kind != "finite_explicit"

    def member(self, param: float) -> Member:
        if self.kind == "halfline_indicators":
            return halfline(param)
        if self.kind == "lipschitz_ball":
            return lipschitz(param)
        raise ValueError("finite_explicit classes are not parameterized")

    def envelope(self, y) -> np.ndarray:
        y = np.asarray(y, dtype=float)
        if self.kind == "halfline_indicators":
            return np.ones_like(y)
        if self.kind == "lipschitz_ball":
            scale = max(abs(self.lo), abs(self.hi))
            return np.minimum(scale * np.abs(y), 1.0)
        return np.max([np.abs(m(y)) for m in self.finite_members], axis=0)

    def describe(self) -> dict:
        d = {"kind": self.kind, "include_zero": self.include_zero}
        if self.one_parameter:
            d.update(lo=self.lo, hi=self.hi)
        else:
            d["members"] = [repr(m) for m in self.finite_members]
        return d


def halfline_indicators(include_zero: bool = False) -> FunctionClass:
    return FunctionClass("halfline_indicators", 0.0, 1.0, include_zero=include_zero)


def lipschitz_ball(include_zero: bool = False) -> FunctionClass:
    return FunctionClass("lipschitz_ball", 0.0, 1.0, include_zero=include_zero)


def finite_explicit(members: Sequence, include_zero: bool = False) -> FunctionClass:
    ms = tuple(m if isinstance(m, Member) else explicit(m) for m in members)
    return FunctionClass("finite_explicit", finite_members=ms, include_zero=include_zero)


@dataclass(frozen=True)
class Net:
    members: tuple
    params: tuple | None = None

    def __len__(self):
        return len(self.members)

    def __iter__(self):
        return iter(self.members)

    def __getitem__(self, i):
        return self.members[i]

    def csv_rows(self, marg: Marginals) -> list[tuple]:
        """``(parameter, analytic mean of the first entry)`` per member."""
        rows = []
        for m in self.members:
            mean = float(mean_vector(m, marg)[0])
            rows.append((m.param if m.param is not None else repr(m), mean))
        return rows


def grid_net(cls: FunctionClass, size: int) -> Net:
    """Equispaced net of ``size`` parameters over the class range."""
    if not cls.one_parameter:
        return Net(cls.finite_members + ((ZERO,) if cls.include_zero else ()))
    if size < 1:
        raise ValueError(f"net size must be >= 1, got {size}")
    params = np.linspace(cls.lo, cls.hi, size) if size > 1 else np.array([cls.lo])
    members = tuple(cls.member(float(t)) for t in params)
    if cls.include_zero:
        members = members + (ZERO,)
    return Net(members, tuple(float(t) for t in params))


def _analytic_spacing(cls: FunctionClass, semimetric, delta: float) -> float | None:
    if not isinstance(semimetric, Rho) or semimetric.marginals.kind != "uniform01":
        return None
    p = semimetric.p
    if cls.kind == "halfline_indicators" and 0.0 <= cls.lo and cls.hi <= 1.0:
        return delta ** p
    if cls.kind == "lipschitz_ball" and 0.0 <= cls.lo and cls.hi <= 1.0:
        return delta * (p + 1.0) ** (1.0 / p)
    return None


def _reach(cls, semimetric, start: float, delta: float) -> float:
    """Largest parameter ``t <= hi`` with ``d(start, t) <= delta`` (distance increasing in t)."""
    f0 = cls.member(start)
    if semimetric(f0, cls.member(cls.hi)) <= delta:
        return cls.hi
    lo, hi = start, cls.hi
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        if semimetric(f0, cls.member(mid)) <= delta:
            lo = mid
        else:
            hi = mid
    return lo


def delta_net(cls: FunctionClass, semimetric, delta: float) -> Net:
    """Finite ``delta``-cover of the class under ``semimetric``.

    One-parameter classes get an equispaced parameter grid when the spacing is
    known in closed form and a greedy forward sweep otherwise; coverage is
    checked at cell midpoints before returning.
    """
    if not delta > 0:
        raise ValueError("delta must be positive")
    if not cls.one_parameter:
        return grid_net(cls, 0)
    if cls.lo == cls.hi or semimetric(cls.member(cls.lo), cls.member(cls.hi)) <= delta:
        params = [cls.lo]
    else:
        spacing = _analytic_spacing(cls, semimetric, delta)
        if spacing is not None:
            cells = max(1, math.ceil((cls.hi - cls.lo) / spacing - 1e-9))
            params = list(np.linspace(cls.lo, cls.hi, cells + 1))
        else:
            params = [cls.lo]
            while params[-1] < cls.hi:
                nxt = _reach(cls, semimetric, params[-1], delta)
                if nxt <= params[-1]:
                    raise RuntimeError("net construction stalled; semimetric not continuous in the parameter")
                params.append(nxt)
    params = [float(t) for t in params]
    _check_cover(cls, semimetric, params, delta)
    members = tuple(cls.member(t) for t in params)
    if cls.include_zero:
        members = members + (ZERO,)
    return Net(members, tuple(params))


def _check_cover(cls, semimetric, params, delta):
    probes = [cls.lo, cls.hi] + [0.5 * (a + b) for a, b in zip(params[:-1], params[1:])]
    for t in probes:
        f = cls.member(t)
        if min(semimetric(f, cls.member(s)) for s in params) > delta * (1 + 1e-9):
            raise RuntimeError(f"net fails to cover parameter {t:g} at radius {delta:g}")


def diff_pairs(net: Net, semimetric, delta: float) -> list[tuple[Member, Member]]:
    """All ordered pairs ``(f, g)`` of net members with ``rho(f - g) <= delta``, diagonal included."""
    i, j = diff_pair_indices(net, semimetric, delta)
    return [(net[a], net[b]) for a, b in zip(i, j)]


def diff_pair_indices(net: Net, semimetric, delta: float) -> tuple[np.ndarray, np.ndarray]:
    d = semimetric.matrix(net.members)
    i, j = np.nonzero(d <= delta)
    return i, j
