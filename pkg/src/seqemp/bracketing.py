"""Constructive bracketing covers, bracketing and entropy integrals, tau_s covers.

Bracketing numbers returned here are sizes of explicit covers, hence upper
bounds on the minimal numbers.  Every cover is machine-checked before it is
returned.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy import integrate

from .fclasses import FunctionClass, Member, Net, Rho, ZERO, lp_distance, rho_p
from .marginals import Marginals
from .process import tau_s_matrix

GEOMETRIC_LEVELS = 40


class CoverError(RuntimeError):
    pass


@dataclass(frozen=True)
class Bracket:
    """``|f - approx| <= bound`` pointwise for every ``f`` assigned to this bracket."""

    approx: Member
    bound: Callable
    size: float


@dataclass(frozen=True)
class BracketingCover:
    epsilon: float
    knots: np.ndarray = field(repr=False)
    brackets: tuple = field(repr=False)
    kind: str = "halfline_indicators"

    def __len__(self):
        return len(self.brackets)

    @property
    def approx(self) -> list[Member]:
        return [b.approx for b in self.brackets]

    @property
    def bounds(self) -> list[Callable]:
        return [b.bound for b in self.brackets]

    def select(self, param: float) -> int:
        """Index of the bracket assigned to the member with parameter ``param``."""
        k = int(np.searchsorted(self.knots, param, side="right")) - 1
        return min(max(k, 0), len(self.brackets) - 1)

    def csv_rows(self) -> list[tuple]:
        return [(k, float(x)) for k, x in enumerate(self.knots)]


class _IntervalIndicator:
    def __init__(self, lo: float, hi: float):
        self.lo, self.hi = lo, hi

    def __call__(self, y):
        y = np.asarray(y, dtype=float)
        return ((y > self.lo) & (y <= self.hi)).astype(float)


class _MemberGap:
    def __init__(self, lower: Member, upper: Member):
        self.lower, self.upper = lower, upper

    def __call__(self, y):
        return np.abs(self.upper(y) - self.lower(y))


def _halfline_knots(eps: float, marg: Marginals, lo: float, hi: float) -> np.ndarray:
    if marg.kind == "uniform01" and 0.0 <= lo and hi <= 1.0:
        cells = max(1, math.ceil((hi - lo) / eps ** 2 - 1e-9))
        return np.linspace(lo, hi, cells + 1)
    # greedy: largest next knot whose cell mass stays below eps^2 under every entry law
    knots = [lo]
    while knots[-1] < hi:
        start = knots[-1]
        if lp_distance(Member("halfline", start), Member("halfline", hi), marg, 2) <= eps:
            knots.append(hi)
            break
        a, b = start, hi
        for _ in range(80):
            mid = 0.5 * (a + b)
            if lp_distance(Member("halfline", start), Member("halfline", mid), marg, 2) <= eps:
                a = mid
            else:
                b = mid
        if a <= start:
            raise CoverError("bracket construction stalled (atom of mass > eps^2?)")
        knots.append(a)
    return np.asarray(knots)


def build_brackets_halfline(eps: float, marg: Marginals | None = None,
                            lo: float = 0.0, hi: float = 1.0) -> BracketingCover:
    """Brackets ``a = 1{y <= x_k}``, ``b = 1{x_k < y <= x_{k+1}}`` on a probability grid."""
    if not eps > 0:
        raise ValueError("epsilon must be positive")
    marg = Marginals.uniform(1) if marg is None else marg
    if eps >= 1.0 and marg.kind == "uniform01":
        knots = np.array([lo, hi])
    else:
        knots = _halfline_knots(eps, marg, lo, hi)
    brackets = []
    for a, b in zip(knots[:-1], knots[1:]):
        bound = _IntervalIndicator(float(a), float(b))
        size = lp_distance(Member("halfline", float(a)), Member("halfline", float(b)), marg, 2)
        brackets.append(Bracket(Member("halfline", float(a)), bound, size))
    cover = BracketingCover(float(eps), knots, tuple(brackets))
    verify_cover(cover, FunctionClass("halfline_indicators", lo, hi), eps)
    return cover


def build_brackets_lipschitz(eps: float, marg: Marginals | None = None,
                             lo: float = 0.0, hi: float = 1.0) -> BracketingCover:
    """Brackets for ``clip(theta y, 0, 1)``: ``a = f_{theta_k}``, ``b = |f_{theta_{k+1}} - f_{theta_k}|``."""
    if not eps > 0:
        raise ValueError("epsilon must be positive")
    if lo < 0:
        raise ValueError("lipschitz brackets need nonnegative parameters")
    marg = Marginals.uniform(1) if marg is None else marg
    size_of = lambda a, b: lp_distance(Member("lipschitz", a), Member("lipschitz", b), marg, 2)
    knots = [lo]
    while knots[-1] < hi:
        start = knots[-1]
        if size_of(start, hi) <= eps:
            knots.append(hi)
            break
        a, b = start, hi
        for _ in range(80):
            mid = 0.5 * (a + b)
            if size_of(start, mid) <= eps:
                a = mid
            else:
                b = mid
        knots.append(a)
    knots = np.asarray(knots)
    if len(knots) == 1:
        knots = np.array([lo, hi])
    brackets = tuple(
        Bracket(Member("lipschitz", float(a)), _MemberGap(Member("lipschitz", float(a)), Member("lipschitz", float(b))),
                size_of(float(a), float(b)))
        for a, b in zip(knots[:-1], knots[1:]))
    cover = BracketingCover(float(eps), knots, brackets, "lipschitz_ball")
    verify_cover(cover, FunctionClass("lipschitz_ball", lo, hi), eps)
    return cover


def verify_cover(cover: BracketingCover, cls: FunctionClass, eps: float, members: int = 1000,
                 points: int = 1000, seed: int = 20240601) -> None:
    """Raise :class:`CoverError` unless every bracket has size ``<= eps`` and dominates."""
    for k, br in enumerate(cover.brackets):
        if br.size > eps * (1 + 1e-12):
            raise CoverError(f"bracket {k} has rho_2 size {br.size!r} > {eps!r}")
    rng = np.random.default_rng(seed)
    params = np.concatenate([rng.uniform(cls.lo, cls.hi, members), cover.knots])
    y = np.concatenate([np.linspace(-0.5, 1.5, points), cover.knots, rng.normal(0.5, 1.0, points)])
    for t in params:
        f = cls.member(float(t))
        br = cover.brackets[cover.select(float(t))]
        if np.any(np.abs(f(y) - br.approx(y)) > br.bound(y) + 1e-15):
            raise CoverError(f"bracket fails to dominate member with parameter {t!r}")


def bracketing_number(cls: FunctionClass, eps: float, marg: Marginals | None = None) -> int:
    """Size of a constructive bracketing cover (an upper bound on the minimal number)."""
    if not eps > 0:
        raise ValueError("epsilon must be positive")
    marg = Marginals.uniform(1) if marg is None else marg
    extra = 1 if cls.include_zero else 0
    if cls.kind == "halfline_indicators":
        if marg.kind == "uniform01" and 0.0 <= cls.lo and cls.hi <= 1.0:
            return max(1, math.ceil((cls.hi - cls.lo) / eps ** 2 - 1e-9)) + extra
        return len(build_brackets_halfline(eps, marg, cls.lo, cls.hi)) + extra
    if cls.kind == "lipschitz_ball":
        return len(build_brackets_lipschitz(eps, marg, cls.lo, cls.hi)) + extra
    if cls.kind == "finite_explicit":
        members = list(cls.finite_members) + ([ZERO] if cls.include_zero else [])
        # one bracket around the first member when its spread is small enough
        first = members[0]
        spread = Member("explicit", None, _Spread(first, members), "spread")
        if rho_p(spread, marg, 2) <= eps:
            return 1
        return len(members)
    raise ValueError(f"unsupported class kind {cls.kind!r}")


class _Spread:
    def __init__(self, center: Member, members: Sequence[Member]):
        self.center, self.members = center, list(members)

    def __call__(self, y):
        c = self.center(y)
        return np.max([np.abs(m(y) - c) for m in self.members], axis=0)

    def __hash__(self):
        return id(self)


class HalflineBracketingNumber:
    """``eps -> ceil(1/eps^2)`` for halfline indicators under uniform marginals."""

    exponent = 2.0

    def __call__(self, eps: float) -> float:
        return float(max(1, math.ceil(1.0 / eps ** 2 - 1e-9)))

    def breakpoints(self, a: float, b: float) -> list[float]:
        # jumps where 1/eps^2 is an integer
        kmin, kmax = math.ceil(1.0 / b ** 2), math.floor(1.0 / a ** 2)
        if kmax - kmin > 50:
            return []
        return [1.0 / math.sqrt(k) for k in range(max(kmin, 1), kmax + 1) if a < 1.0 / math.sqrt(k) < b]


@dataclass(frozen=True)
class PowerLaw:
    """``eps -> coef * eps^{-exponent}``."""

    coef: float
    exponent: float

    def __call__(self, eps: float) -> float:
        return self.coef * eps ** (-self.exponent)


@dataclass(frozen=True)
class Constant:
    value: float = 1.0
    exponent: float = 0.0

    def __call__(self, eps: float) -> float:
        return self.value


@dataclass(frozen=True)
class IntegralResult:
    value: float
    error_estimate: float
    diverges: bool
    exponent: float | None
    verdict: str


def _power_integral(fn: Callable, upper: float, exponent: float | None) -> IntegralResult:
    """``int_0^upper fn(e) de`` for ``fn`` behaving like ``e^exponent`` near 0.

    Quadrature runs on the dyadic cells ``(upper 2^{-k-1}, upper 2^{-k}]`` for
    ``k < 40``; the remainder uses the closed-form power-law antiderivative.
    When ``exponent`` is unknown it is read off the last two dyadic points.
    """
    if not upper > 0:
        raise ValueError("upper limit must be positive")
    lo = upper * 2.0 ** (-GEOMETRIC_LEVELS)
    if exponent is None:
        exponent = math.log(fn(lo) / fn(lo / 2.0)) / math.log(2.0) if fn(lo / 2.0) > 0 else 0.0
    if exponent <= -1.0 + 1e-12:
        return IntegralResult(math.inf, math.inf, True, exponent, "divergent: integrand exponent <= -1 at 0")
    total, err = 0.0, 0.0
    bp = getattr(fn, "breakpoints", None)
    b = upper
    for _ in range(GEOMETRIC_LEVELS):
        a = b / 2.0
        pts = bp(a, b) if bp is not None else None
        with warnings.catch_warnings():
            # step integrands trip the subdivision limit; the error estimate is kept
            warnings.simplefilter("ignore", integrate.IntegrationWarning)
            val, e = integrate.quad(fn, a, b, points=pts or None, limit=200, epsabs=0.0, epsrel=1e-12)
        total += val
        err += e
        b = a
    tail = fn(lo) * lo / (exponent + 1.0)
    # exponent read-off error is not tracked; charge the whole tail as uncertainty then
    tail_err = abs(tail) * 1e-12 if hasattr(fn, "exponent") else abs(tail)
    return IntegralResult(total + tail, err + tail_err, False, exponent, "finite")


class _BracketIntegrand:
    def __init__(self, N_fn, theta: float, nu: float):
        self.N_fn, self.theta, self.nu = N_fn, theta, nu
        if hasattr(N_fn, "exponent"):
            self.exponent = -theta - N_fn.exponent / nu
        bp = getattr(N_fn, "breakpoints", None)
        if bp is not None:
            self.breakpoints = bp

    def __call__(self, e: float) -> float:
        return e ** (-self.theta) * self.N_fn(e) ** (1.0 / self.nu)


def bracketing_integral(N_fn: Callable, lam: float, nu: float, eta: float = 1.0) -> IntegralResult:
    """``int_0^eta eps^{-lam/(2+lam)} N(eps)^{1/nu} d eps``.

    Power-law ``N_fn`` (with an ``exponent`` attribute ``a``) diverges exactly
    when ``lam/(2+lam) + a/nu >= 1``; that verdict is returned instead of a number.
    """
    if not lam > 0 or not nu > 0:
        raise ValueError("lambda and nu must be positive")
    if not 0 < eta <= 1:
        raise ValueError("eta must lie in (0, 1]")
    theta = lam / (2.0 + lam)
    integrand = _BracketIntegrand(N_fn, theta, nu)
    return _power_integral(integrand, eta, getattr(integrand, "exponent", None))


def bracketing_feasible(lam: float, nu: float, exponent: float = 2.0) -> bool:
    """Convergence of the bracketing integral for ``N(eps) ~ eps^{-exponent}``."""
    return lam / (2.0 + lam) + exponent / nu < 1.0 - 1e-12


class _EntropyIntegrand:
    def __init__(self, cover_fn, p: float):
        self.cover_fn, self.p = cover_fn, p
        if hasattr(cover_fn, "exponent"):
            self.exponent = -cover_fn.exponent / p

    def __call__(self, e: float) -> float:
        return self.cover_fn(e) ** (1.0 / self.p)


def entropy_integral(cover_fn: Callable, p: float, diameter: float) -> IntegralResult:
    """``int_0^diameter cover_fn(eps)^{1/p} d eps`` (``psi(x) = x^p``).

    ``cover_fn`` is the covering-number function already evaluated at the
    radius the caller wants (e.g. ``eps -> N(A x F, tau_s, eps / 2)``).
    """
    if not p > 1:
        raise ValueError("p must exceed 1")
    integrand = _EntropyIntegrand(cover_fn, p)
    return _power_integral(integrand, diameter, getattr(integrand, "exponent", None))


# --------------------------------------------------------------------------
# covering numbers under tau_s


def interval_grid(k: int) -> list[tuple[float, float]]:
    """All intervals ``(i/k, j/k]`` with ``0 <= i < j <= k``."""
    if k < 1:
        raise ValueError("grid resolution must be >= 1")
    return [(i / k, j / k) for i in range(k) for j in range(i + 1, k + 1)]


def greedy_cover_count(dist_fn: Callable[[int], np.ndarray], size: int, eps: float) -> int:
    """Number of open ``eps``-balls picked greedily until every point is covered.

    ``dist_fn(c)`` returns distances from point ``c`` to all points.
    """
    if size == 0:
        raise ValueError("empty grid")
    covered = np.zeros(size, dtype=bool)
    count = 0
    while not covered.all():
        c = int(np.argmin(covered))
        covered |= dist_fn(c) < eps
        count += 1
    return count


def covering_number_tau_s(k: int, net: Net, semimetric, eps: float) -> int:
    """Greedy cover count of ``{(u, v]} x net`` under ``sqrt(lambda(AΔB)) + rho(f, g)``."""
    if not eps > 0:
        raise ValueError("epsilon must be positive")
    ivs = np.asarray(interval_grid(k))
    if len(net) == 0:
        raise ValueError("empty net")
    fd = semimetric.matrix(net.members) if len(net) > 1 else np.zeros((1, 1))
    nf = len(net)
    u, v = ivs[:, 0], ivs[:, 1]

    def dist(c):
        ia, jf = divmod(c, nf)
        overlap = np.maximum(0.0, np.minimum(v, v[ia]) - np.maximum(u, u[ia]))
        da = np.sqrt(np.maximum((v - u) + (v[ia] - u[ia]) - 2 * overlap, 0.0))
        return (da[:, None] + fd[jf][None, :]).ravel()

    return greedy_cover_count(dist, len(ivs) * nf, eps)


def covering_number_sets(k: int, eps: float) -> int:
    ivs = interval_grid(k)
    d = tau_s_matrix(ivs, np.zeros((1, 1)))
    return greedy_cover_count(lambda c: d[c], len(ivs), eps)


def covering_number_net(net: Net, semimetric, eps: float) -> int:
    d = semimetric.matrix(net.members)
    return greedy_cover_count(lambda c: d[c], len(net), eps)
