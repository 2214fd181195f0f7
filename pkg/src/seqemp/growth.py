"""Growth functions: condition (S) certificates, the maximal-inequality constant,
the generic gamma family, the weighted mixing series and the h combinator.

Certificates are finite-domain evidence: a growth function is tabulated on
``{1..N}`` and every certificate records that ``N``.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from typing import Callable

import numpy as np

from .arrays import MixingProfile

# strict threshold comparisons treat ratios within this relative distance as equal
BOUNDARY_RTOL = 1e-12


class DomainError(ValueError):
    pass


class DivergenceError(ValueError):
    pass


def q_threshold(alpha: float) -> float:
    """Upper end ``2^{(alpha-1)/alpha}`` of the admissible index range."""
    return 2.0 ** ((alpha - 1.0) / alpha)


@dataclass(frozen=True, eq=False)
class GrowthFunction:
    """``g(1), ..., g(N)`` plus the exponent ``alpha`` it is paired with.

    ``tag`` records a closed form (``"linear"``, ``"generic_gamma"``) whose
    analytic index ``q_analytic`` is carried alongside the table.
    """

    values: np.ndarray
    alpha: float
    tag: str = "tabulated"
    q_analytic: float | None = None
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.alpha > 1:
            raise DomainError("alpha must exceed 1")

    @property
    def N(self) -> int:
        return len(self.values)

    def __call__(self, m):
        m = np.asarray(m)
        if np.any(m < 0) or np.any(m > self.N):
            raise IndexError(f"argument outside 0..{self.N}")
        table = np.concatenate([[0.0], self.values])
        return table[m]

    def __add__(self, other: "GrowthFunction") -> "GrowthFunction":
        if self.alpha != other.alpha:
            raise DomainError("cannot add growth functions paired with different alpha")
        n = min(self.N, other.N)
        qa = None
        if self.q_analytic is not None and other.q_analytic is not None:
            qa = max(self.q_analytic, other.q_analytic)
        return GrowthFunction(self.values[:n] + other.values[:n], self.alpha, "sum", qa)

    def scaled(self, c: float) -> "GrowthFunction":
        return GrowthFunction(c * self.values, self.alpha, self.tag, self.q_analytic, dict(self.params))

    @classmethod
    def from_callable(cls, fn: Callable, N: int, alpha: float) -> "GrowthFunction":
        m = np.arange(1, N + 1)
        return cls(np.asarray([fn(int(k)) for k in m], dtype=float), alpha)


def linear(C: float, N: int, alpha: float) -> GrowthFunction:
    if C < 0:
        raise DomainError("linear growth needs C >= 0")
    return GrowthFunction(C * np.arange(1, N + 1, dtype=float), alpha, "linear", 1.0, {"C": C})


@dataclass
class Certificate:
    q_min: float
    alpha: float
    threshold: float
    admissible: bool
    N: int
    violations: list
    raw_max_ratio: float

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True)


def check_condition_S(g: GrowthFunction) -> Certificate:
    """Exhaustive scan of condition (S) on ``{1..N}``.

    ``q_min = max(1, max (g(i) + g(j-i)) / g(j))`` over ``1 <= i < j <= N``.
    Pairs with ``g(j) = 0`` and a positive numerator cannot be satisfied by any
    finite index and are reported as violations instead of entering the max.
    """
    vals = np.asarray(g.values, dtype=float)
    N = len(vals)
    if N < 2:
        raise DomainError("condition (S) needs N >= 2")
    if np.any(np.isnan(vals)):
        raise DomainError("growth table contains NaN")
    violations = []
    for k in np.flatnonzero(vals < 0):
        violations.append({"kind": "negative", "m": int(k + 1), "value": float(vals[k])})
    for k in np.flatnonzero(np.diff(vals) < 0):
        violations.append({"kind": "decreasing", "m": int(k + 1), "values": [float(vals[k]), float(vals[k + 1])]})
    raw = 0.0
    for j in range(2, N + 1):
        i = np.arange(1, j)
        num = vals[i - 1] + vals[j - i - 1]
        gj = vals[j - 1]
        if gj == 0:
            for ii in i[num > 0]:
                violations.append({"kind": "zero_denominator", "i": int(ii), "j": j})
            continue
        raw = max(raw, float(np.max(num / gj)))
    # ratios within a few ulp of 1 are exact additivity up to rounding
    q_min = 1.0 if raw <= 1.0 + 8 * np.finfo(float).eps else raw
    thr = q_threshold(g.alpha)
    admissible = not violations and q_min < thr * (1.0 - BOUNDARY_RTOL)
    return Certificate(q_min, g.alpha, thr, admissible, N, violations, raw)


def constant_A(alpha: float, nu: float, Q: float) -> float:
    """``A = (1 - Q^{alpha/nu} / 2^{(alpha-1)/nu})^{-nu}``."""
    if not alpha > 1:
        raise DomainError("alpha must exceed 1")
    if not nu >= 1:
        raise DomainError("nu must be >= 1")
    thr = q_threshold(alpha)
    if not 1.0 <= Q < thr:
        raise DomainError(f"index Q = {Q!r} outside [1, 2^((alpha-1)/alpha)) = [1, {thr!r})")
    return (1.0 - Q ** (alpha / nu) / 2.0 ** ((alpha - 1.0) / nu)) ** (-nu)


def holder_gap(x, y, delta):
    """``2^{1-delta} (x+y)^delta - x^delta - y^delta`` (nonnegative for delta in (0, 1))."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    return 2.0 ** (1.0 - delta) * (x + y) ** delta - x ** delta - y ** delta


# --------------------------------------------------------------------------
# the generic gamma family


def kappa_range(nu: float, lam: float | None = None) -> tuple[float, float]:
    """Open interval of admissible kappa: ``(0, 1/2 - 1/nu)``, capped by ``lam/4`` when given."""
    hi = 0.5 - 1.0 / nu
    if lam is not None:
        hi = min(hi, lam / 4.0)
    if hi <= 0:
        raise DomainError(f"no admissible kappa for nu = {nu!r}, lambda = {lam!r} (needs nu > 2, lambda > 0)")
    return 0.0, hi


def _check_kappa(kappa: float, nu: float, lam: float | None = None):
    lo, hi = kappa_range(nu, lam)
    if not lo < kappa < hi:
        raise DomainError(f"kappa = {kappa!r} outside ({lo}, {hi!r})")


def gamma(m, delta: float, C: float, kappa: float, R: Callable, J: Callable, nu: float):
    """``C m (R(delta) + J(delta) m^{-kappa})^2``."""
    _check_kappa(kappa, nu)
    if C < 0:
        raise DomainError("C must be nonnegative")
    r, j = R(delta), J(delta)
    if r < 0 or j < 0:
        raise DomainError("R and J must be nonnegative")
    m = np.asarray(m, dtype=float)
    out = C * m * (r + j * m ** (-kappa)) ** 2
    return float(out) if out.ndim == 0 else out


def gamma_growth(delta: float, C: float, kappa: float, R: Callable, J: Callable, nu: float,
                 N: int) -> GrowthFunction:
    """``gamma(., delta)`` tabulated on ``{1..N}`` and paired with ``alpha = nu/2``."""
    vals = gamma(np.arange(1, N + 1), delta, C, kappa, R, J, nu)
    return GrowthFunction(np.asarray(vals), nu / 2.0, "generic_gamma", 2.0 ** (2.0 * kappa),
                          {"C": C, "kappa": kappa, "R": R(delta), "J": J(delta), "delta": delta})


def combine_h(g_at_diameter: GrowthFunction, l: GrowthFunction) -> tuple[GrowthFunction, Certificate]:
    """``h = 2 (g(., diameter) + l)``, certified again by exhaustive scan."""
    if g_at_diameter.alpha != l.alpha:
        raise DomainError("growth functions must share alpha")
    for part in (g_at_diameter, l):
        if not check_condition_S(part).admissible:
            raise DomainError("both inputs must carry admissible condition (S) certificates")
    h = (g_at_diameter + l).scaled(2.0)
    return h, check_condition_S(h)


# --------------------------------------------------------------------------
# weighted mixing series


@dataclass(frozen=True)
class ZetaResult:
    value: float
    truncation_bound: float
    terms: int


def zeta(profile: MixingProfile, lam: float, nu: int, tol: float = 1e-13,
         max_terms: int = 10_000_000) -> ZetaResult:
    """``sum_{s>=1} s^{nu-2} alpha(s)^{lam/(2+lam)}`` with a rigorous tail bound below ``tol``."""
    if not lam > 0:
        raise DomainError("lambda must be positive")
    if nu < 2 or nu != int(nu) or int(nu) % 2:
        raise DomainError(f"nu = {nu!r} must be an even integer >= 2")
    nu = int(nu)
    theta = lam / (2.0 + lam)
    k = nu - 2
    if profile.kind == "zero_beyond" or (profile.kind == "tabulated" and profile.tail == "zero"):
        last = profile.params[0] if profile.kind == "zero_beyond" else len(profile.params)
        s = np.arange(1, last + 1, dtype=float)
        terms = s ** k * np.asarray(profile.alpha(s), dtype=float) ** theta
        return ZetaResult(float(terms.sum()), 0.0, int(last))
    if profile.kind == "tabulated":
        raise DivergenceError("tabulated mixing profile without a tail law cannot certify convergence")
    if profile.kind != "geometric":
        raise DomainError(f"unsupported profile kind {profile.kind!r}")
    c, r = profile.params
    if c == 0 or r == 0:
        return ZetaResult(0.0, 0.0, 0)
    if r >= 1:
        raise DivergenceError(f"geometric rate r = {r!r} >= 1: series diverges")
    q = r ** theta
    # below s0 the cap min(1, c r^s) may bind; sum those terms directly
    s0 = max(1, math.ceil(math.log(c) / -math.log(r))) if c > 1 else 1
    total = 0.0
    s = 1
    while True:
        a = min(1.0, c * r ** s)
        term = s ** k * a ** theta
        total += term
        if s >= s0:
            # terms beyond s are c^theta t^k q^t with ratio at most ((s+2)/(s+1))^k q
            ratio = ((s + 2.0) / (s + 1.0)) ** k * q
            if ratio < 1:
                nxt = (s + 1.0) ** k * c ** theta * q ** (s + 1)
                bound = nxt / (1.0 - ratio)
                if bound < tol:
                    return ZetaResult(total, bound, s)
        s += 1
        if s > max_terms:
            raise DivergenceError("zeta series did not reach tolerance within max_terms")
