"""Monte Carlo and exact-enumeration checks of the moment and maximal inequalities.

Left-hand sides are maxima over finite index sets (lower bounds for suprema
over the full class) and right-hand sides are analytic, so a PASS is evidence
and a FAIL is a counterexample signal.  Monte Carlo comparisons allow three
standard errors; exact comparisons allow a relative ``1e-12``.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Callable, Sequence

import numpy as np

from .arrays import IID, MixingProfile, profile_of, marginals_of, simulate
from .bracketing import PowerLaw, bracketing_integral
from .fclasses import Member, Net, Rho, diff_pair_indices, expect, mean_vector
from .growth import (DivergenceError, DomainError, check_condition_S, constant_A, kappa_range,
                     linear, zeta)
from .marginals import Marginals, TwoPoint
from .parallel import map_chunks

EXACT_RTOL = 1e-12
N_SE = 3.0
NOISE_LIMIT = 0.2
MAX_ORACLE_N = 12


@dataclass(frozen=True)
class MCEstimate:
    mean: float
    std_error: float
    replicates: int
    seed: int

    def __post_init__(self):
        if self.std_error < 0:
            raise ValueError("standard error must be nonnegative")
        if self.replicates < 2:
            raise ValueError("need at least two replicates")


class _Moments:
    """Running mean and centered second moment per coordinate (Chan's merge)."""

    def __init__(self, shape=()):
        self.count = 0
        self.mean = np.zeros(shape)
        self.m2 = np.zeros(shape)

    def add(self, x: np.ndarray):
        """``x`` has replicates on axis 0."""
        k = x.shape[0]
        if k == 0:
            return
        mu = x.mean(axis=0)
        m2 = ((x - mu) ** 2).sum(axis=0)
        self.merge(k, mu, m2)

    def merge(self, k, mu, m2):
        if self.count == 0:
            self.count, self.mean, self.m2 = k, np.asarray(mu, float), np.asarray(m2, float)
            return
        tot = self.count + k
        d = mu - self.mean
        self.mean = self.mean + d * (k / tot)
        self.m2 = self.m2 + m2 + d * d * (self.count * k / tot)
        self.count = tot

    def parts(self):
        return self.count, self.mean, self.m2

    @property
    def std_error(self):
        if self.count < 2:
            return np.zeros_like(self.mean)
        return np.sqrt(np.maximum(self.m2, 0.0) / (self.count - 1) / self.count)


def _reduce(parts: list, shape=()) -> _Moments:
    acc = _Moments(shape)
    for p in parts:
        acc.merge(*p.parts())
    return acc


# --------------------------------------------------------------------------
# processes W_k(psi) indexed by a finite set


def walsh_signs(P: int, n: int) -> np.ndarray:
    """``(P, n)`` matrix ``(-1)^{popcount(p & k)}``; row 0 is constant."""
    p = np.arange(P)[:, None]
    k = np.arange(n)[None, :]
    bits = np.vectorize(lambda v: bin(int(v)).count("1"))(p & k)
    return np.where(bits % 2 == 0, 1.0, -1.0)


@dataclass(frozen=True, eq=False)
class SignFlipModel:
    """``W_k(psi_p) = weights[p, k] * (e_k - (a + b) / 2)`` with ``e_k`` iid equiprobable on ``{a, b}``."""

    weights: np.ndarray
    a: float = -1.0
    b: float = 1.0

    def __post_init__(self):
        w = np.atleast_2d(np.asarray(self.weights, dtype=float))
        object.__setattr__(self, "weights", w)
        if w.shape[0] == 0 or w.shape[1] == 0:
            raise ValueError("degenerate index set")
        if self.a == self.b:
            raise ValueError("two-valued innovations need a != b")

    @classmethod
    def walsh(cls, P: int, n: int, a: float = -1.0, b: float = 1.0) -> "SignFlipModel":
        return cls(walsh_signs(P, n), a, b)

    @property
    def n(self) -> int:
        return self.weights.shape[1]

    @property
    def P(self) -> int:
        return self.weights.shape[0]

    def increments(self, e: np.ndarray) -> np.ndarray:
        """``(R, n)`` innovations to ``(R, P, n)`` increments."""
        return self.weights[None, :, :] * (e - 0.5 * (self.a + self.b))[:, None, :]

    def sample(self, replicates: int, seed: int, start: int = 0) -> np.ndarray:
        e = simulate(IID(TwoPoint(self.a, self.b)), self.n, replicates, seed, start)
        return self.increments(e)

    def all_paths(self) -> np.ndarray:
        if self.n > MAX_ORACLE_N:
            raise ValueError(f"exact enumeration limited to n <= {MAX_ORACLE_N}")
        bits = (np.arange(2 ** self.n)[:, None] >> np.arange(self.n)[None, :]) & 1
        return np.where(bits == 1, self.b, self.a).astype(float)

    def describe(self) -> dict:
        return {"kind": "sign_flip", "a": self.a, "b": self.b, "P": self.P, "n": self.n}


@dataclass(frozen=True, eq=False)
class NetModel:
    """``W_k(f) = f(X_{k,n}) - E f(X_{k,n})`` for ``f`` in a finite net."""

    model: object
    net: Net
    n: int

    def __post_init__(self):
        if len(self.net) == 0:
            raise ValueError("degenerate net")
        marg = marginals_of(self.model, self.n)
        means = np.stack([mean_vector(f, marg) for f in self.net])
        object.__setattr__(self, "_means", means)

    @property
    def P(self) -> int:
        return len(self.net)

    def evaluate(self, x: np.ndarray) -> np.ndarray:
        return np.stack([f(x) for f in self.net], axis=1) - self._means[None, :, :]

    def sample(self, replicates: int, seed: int, start: int = 0) -> np.ndarray:
        return self.evaluate(simulate(self.model, self.n, replicates, seed, start))

    def describe(self) -> dict:
        d = self.model.describe() if hasattr(self.model, "describe") else {"kind": repr(self.model)}
        return {"model": d, "net": [repr(f) for f in self.net], "n": self.n}


def dyadic_pairs(n: int) -> list[tuple[int, int]]:
    """Dyadic blocks ``(l m + 1, (l + 1) m)`` for ``m = 1, 2, 4, ...`` plus ``(1, n)``."""
    out = set()
    m = 1
    while m <= n:
        out.update((l * m + 1, (l + 1) * m) for l in range(n // m))
        m *= 2
    out.add((1, n))
    return sorted(out)


def all_pairs(n: int) -> list[tuple[int, int]]:
    return [(i, j) for i in range(1, n + 1) for j in range(i, n + 1)]


def _check_pairs(pairs, n):
    for i, j in pairs:
        if not 1 <= i <= j <= n:
            raise IndexError(f"pair ({i}, {j}) outside 1 <= i <= j <= {n}")


def sup_powers(W: np.ndarray, pairs: Sequence[tuple[int, int]], nu: float) -> tuple[np.ndarray, np.ndarray]:
    """Per-replicate ``sup_psi |S(i,j)|^nu`` and ``sup_psi M(i,j)^nu``, shape ``(R, len(pairs))``."""
    R = W.shape[0]
    C = np.concatenate([np.zeros(W.shape[:-1] + (1,)), np.cumsum(W, axis=-1)], axis=-1)
    S = np.empty((R, len(pairs)))
    M = np.empty((R, len(pairs)))
    for k, (i, j) in enumerate(pairs):
        block = np.abs(C[..., i:j + 1] - C[..., i - 1:i])
        S[:, k] = block[..., -1].max(axis=-1) ** nu
        M[:, k] = block.max(axis=-1).max(axis=-1) ** nu
    return S, M


def _mc_sides(model, pairs, nu, replicates, seed, threads):
    def work(start, count):
        S, M = sup_powers(model.sample(count, seed, start), pairs, nu)
        a, b = _Moments(len(pairs)), _Moments(len(pairs))
        a.add(S)
        b.add(M)
        return a, b

    res = map_chunks(work, replicates, threads)
    return _reduce([r[0] for r in res], len(pairs)), _reduce([r[1] for r in res], len(pairs))


def mc_sup_moment(model, i: int, j: int, nu: float, replicates: int, seed: int,
                  sums_or_maxima: str = "sums", threads: int = 1) -> MCEstimate:
    """Estimate ``E sup_psi |S(i,j)|^nu`` (or the running-maximum analogue)."""
    if replicates < 1000:
        raise ValueError("need at least 10^3 replicates")
    if not nu >= 1:
        raise ValueError("nu must be >= 1")
    if sums_or_maxima not in ("sums", "maxima"):
        raise ValueError("sums_or_maxima must be 'sums' or 'maxima'")
    if getattr(model, "P", 0) < 1:
        raise ValueError("degenerate index set")
    _check_pairs([(i, j)], model.n)
    s, m = _mc_sides(model, [(i, j)], nu, replicates, seed, threads)
    acc = s if sums_or_maxima == "sums" else m
    return MCEstimate(float(acc.mean[0]), float(acc.std_error[0]), replicates, int(seed))


# --------------------------------------------------------------------------
# maximal inequality: fit g from the sums, verify the maxima


@dataclass
class PairCheck:
    i: int
    j: int
    lhs_sums: float
    lhs_sums_se: float
    lhs_max: float
    lhs_max_se: float
    rhs: float
    margin: float
    ok: bool


@dataclass
class MaximalReport:
    nu: float
    alpha: float
    C_hat: float
    q_min: float | None
    A: float | None
    admissible: bool
    verdict: str
    checks: list = field(default_factory=list)
    replicates: int | None = None
    seed: int | None = None
    exact: bool = False

    def to_dict(self) -> dict:
        return asdict(self)

    @property
    def min_margin(self) -> float:
        return min(c.margin for c in self.checks)


def _fit_linear(upper: np.ndarray, pairs, alpha: float) -> float:
    """Smallest ``C`` with ``C m >= upper^{1/alpha}`` at every pair."""
    m = np.array([j - i + 1 for i, j in pairs], dtype=float)
    return float(np.max(np.maximum(upper, 0.0) ** (1.0 / alpha) / m))


def _certify(C_hat: float, n: int, alpha: float, nu: float):
    """``(q_min, A)`` for the fitted linear envelope, or ``(None, None)`` when inadmissible."""
    if not alpha > 1:
        return None, None
    cert = check_condition_S(linear(C_hat, max(n, 2), alpha))
    if not cert.admissible:
        return cert.q_min, None
    return cert.q_min, constant_A(alpha, nu, cert.q_min)


def verify_maximal_inequality(model, nu: float, alpha: float, replicates: int, seed: int,
                              pairs: Sequence[tuple[int, int]] | None = None,
                              threads: int = 1) -> MaximalReport:
    """Fit ``g(m) = C m`` from an upper confidence bound on the sums, then test the maxima.

    Raises :class:`DomainError` when the fitted envelope is not admissible.
    """
    if not nu >= 1:
        raise DomainError("nu must be >= 1")
    if not alpha > 1:
        raise DomainError(f"alpha = {alpha!r} must exceed 1")
    pairs = dyadic_pairs(model.n) if pairs is None else list(pairs)
    _check_pairs(pairs, model.n)
    s, mx = _mc_sides(model, pairs, nu, replicates, seed, threads)
    C_hat = _fit_linear(s.mean + N_SE * s.std_error, pairs, alpha)
    q_min, A = _certify(C_hat, model.n, alpha, nu)
    if A is None:
        raise DomainError(f"fitted envelope has q_min = {q_min!r}, outside the admissible range")
    checks, noisy = [], False
    for k, (i, j) in enumerate(pairs):
        rhs = A * (C_hat * (j - i + 1)) ** alpha
        lm, ls = float(mx.mean[k]), float(mx.std_error[k])
        if lm > 0 and ls > NOISE_LIMIT * lm:
            noisy = True
        checks.append(PairCheck(i, j, float(s.mean[k]), float(s.std_error[k]), lm, ls,
                                rhs, rhs - lm, lm <= rhs + N_SE * ls))
    if not all(c.ok for c in checks):
        verdict = "FAIL"
    elif noisy:
        verdict = "INCONCLUSIVE"
    else:
        verdict = "PASS"
    return MaximalReport(nu, alpha, C_hat, q_min, A, True, verdict, checks, replicates, int(seed))


def exact_small_oracle(model: SignFlipModel, nu: float, alpha: float,
                       pairs: Sequence[tuple[int, int]] | None = None) -> MaximalReport:
    """Exact version of :func:`verify_maximal_inequality` by enumerating all ``2^n`` paths.

    The envelope is fitted to the exact sums over every ``(i, j)`` (or the
    given pairs).  When ``alpha <= 1`` or the fit is inadmissible the report has
    ``admissible = False`` and verdict ``"NOT_APPLICABLE"``.
    """
    if not isinstance(model, SignFlipModel):
        raise TypeError("exact oracle needs a two-valued SignFlipModel")
    if model.n > MAX_ORACLE_N:
        raise ValueError(f"exact enumeration limited to n <= {MAX_ORACLE_N}")
    pairs = all_pairs(model.n) if pairs is None else list(pairs)
    _check_pairs(pairs, model.n)
    S, M = sup_powers(model.increments(model.all_paths()), pairs, nu)
    es, em = S.mean(axis=0), M.mean(axis=0)
    C_hat = _fit_linear(es, pairs, alpha)
    q_min, A = _certify(C_hat, model.n, alpha, nu)
    if A is None:
        checks = [PairCheck(i, j, float(es[k]), 0.0, float(em[k]), 0.0, math.nan, math.nan, False)
                  for k, (i, j) in enumerate(pairs)]
        return MaximalReport(nu, alpha, C_hat, q_min, None, False, "NOT_APPLICABLE", checks, exact=True)
    checks = []
    for k, (i, j) in enumerate(pairs):
        rhs = A * (C_hat * (j - i + 1)) ** alpha
        lm = float(em[k])
        checks.append(PairCheck(i, j, float(es[k]), 0.0, lm, 0.0, rhs, rhs - lm,
                                lm <= rhs * (1 + EXACT_RTOL) + EXACT_RTOL))
    verdict = "PASS" if all(c.ok for c in checks) else "FAIL"
    return MaximalReport(nu, alpha, C_hat, q_min, A, True, verdict, checks, exact=True)


# --------------------------------------------------------------------------
# moment bound under mixing


def _require_even(nu) -> int:
    if int(nu) != nu or nu < 2 or int(nu) % 2:
        raise DomainError(f"nu = {nu!r}: the mixing moment bound needs an even integer nu >= 2")
    return int(nu)


def _centered_abs_moment(f: Member, law, q: float) -> float:
    mu = expect(f, law)
    return expect(lambda y: np.abs(f(y) - mu) ** q, law)


def moment_tau(net: Net, marg: Marginals, nu: int, lam: float, laws: int = 16) -> float:
    """Smallest ``tau`` with ``E|h - Eh|^{l(2+lam)/2} <= tau^{2+lam}`` for ``l = 2..nu`` over the net."""
    tau = 0.0
    for law in marg.distinct_laws(laws):
        for f in net:
            if f.kind == "zero":
                continue
            for l in range(2, nu + 1):
                mom = _centered_abs_moment(f, law, l * (2.0 + lam) / 2.0)
                tau = max(tau, mom ** (1.0 / (2.0 + lam)))
    return tau


def _first_block_sums(model: NetModel, m_grid, replicates, seed, nu, threads):
    """Moments of ``|S(1, m)(f)|^nu`` per ``(m, f)``."""
    ms = np.asarray(m_grid)

    def work(start, count):
        W = model.sample(count, seed, start)
        C = np.cumsum(W, axis=-1)[..., ms - 1]          # (R, P, len(m))
        acc = _Moments(C.shape[1:])
        acc.add(np.abs(C) ** nu)
        return acc

    return _reduce(map_chunks(work, replicates, threads), (model.P, len(ms)))


@dataclass
class MomentFit:
    nu: int
    lam: float
    tau: float
    zeta: float
    m_grid: list
    C_hat: list
    norm_hat: list
    band_ratio: float
    verdict: str
    variance_identity: dict | None = None

    def to_dict(self) -> dict:
        return asdict(self)


def fit_moment_constant(model, net: Net, nu: int, lam: float, m_grid: Sequence[int],
                        replicates: int, seed: int, band: float = 4.0,
                        threads: int = 1) -> MomentFit:
    """Fit ``C(m) = max_f ||S(1,m)(f)||_nu / (sqrt(m) max(m^{-1/2}, tau))`` across ``m``.

    The verdict is PASS when ``max C / min C <= band``.  For ``nu = 2`` with a
    single iid member the exact identity ``E S(1,m)^2 = m Var f(X)`` is also
    checked to three standard errors.
    """
    nu = _require_even(nu)
    try:
        z = zeta(profile_of(model, max(m_grid)), lam, nu)
    except DivergenceError as exc:
        raise DivergenceError(f"mixing series (A1) not certified finite: {exc}") from exc
    m_grid = sorted(int(m) for m in m_grid)
    n = m_grid[-1]
    nm = NetModel(model, net, n)
    marg = marginals_of(model, n)
    tau = moment_tau(net, marg, nu, lam)
    acc = _first_block_sums(nm, m_grid, replicates, seed, nu, threads)
    norms = acc.mean ** (1.0 / nu)                                # (P, len(m))
    best = norms.max(axis=0)
    ms = np.asarray(m_grid, dtype=float)
    C_hat = best / (np.sqrt(ms) * np.maximum(ms ** -0.5, tau))
    pos = C_hat[C_hat > 0]
    ratio = float(pos.max() / pos.min()) if pos.size else 1.0
    verdict = "PASS" if ratio <= band else "FAIL"
    ident = None
    if nu == 2 and len(net) == 1 and isinstance(model, IID):
        f = net[0]
        law = marg.law(1)
        var = _centered_abs_moment(f, law, 2.0)
        rows = []
        for k, m in enumerate(m_grid):
            est, se = float(acc.mean[0, k]), float(acc.std_error[0, k])
            rows.append({"m": m, "estimate": est, "std_error": se, "exact": m * var,
                         "ok": abs(est - m * var) <= N_SE * se})
        ident = {"variance": var, "rows": rows, "ok": all(r["ok"] for r in rows)}
    return MomentFit(nu, lam, tau, z.value, m_grid, [float(c) for c in C_hat],
                     [float(b) for b in best], ratio, verdict, ident)


# --------------------------------------------------------------------------
# covariance inequality


@dataclass(frozen=True)
class ProductFunctional:
    """``g(x_1..x_m) = prod_k f_k(x_k)``, split after position ``split`` (1-based)."""

    members: tuple
    split: int

    def __post_init__(self):
        if not 1 <= self.split < len(self.members):
            raise ValueError("split must leave both blocks nonempty")

    def moment_bound(self, delta: float) -> float:
        if all(f.bounded_by_one for f in self.members):
            return 1.0
        raise ValueError("moment bound M must be supplied for unbounded members")


@dataclass
class CovarianceReport:
    indices: list
    gap: int
    delta: float
    M: float
    alpha_gap: float
    lhs: float
    lhs_se: float
    rhs: float
    margin: float
    verdict: str

    def to_dict(self) -> dict:
        return asdict(self)


def check_covariance_inequality(model, functional: ProductFunctional, indices: Sequence[int], n: int,
                                lam: float, replicates: int, seed: int, M: float | None = None,
                                profile: MixingProfile | None = None, threads: int = 1) -> CovarianceReport:
    """``|E g - E_{indep} g| <= 4 M^{1/(1+d)} alpha(gap)^{d/(1+d)}`` with ``d = lam / 2``."""
    idx = [int(i) for i in indices]
    if len(idx) != len(functional.members):
        raise ValueError("one index per member")
    if any(b <= a for a, b in zip(idx[:-1], idx[1:])) or idx[0] < 1 or idx[-1] > n:
        raise ValueError("indices must be strictly increasing within 1..n")
    gap = idx[functional.split] - idx[functional.split - 1]
    if gap < 1:
        raise ValueError("gap must be >= 1")
    delta = lam / 2.0
    M = functional.moment_bound(delta) if M is None else float(M)
    profile = profile_of(model, n) if profile is None else profile
    a = float(profile.alpha(gap))
    rhs = 4.0 * M ** (1.0 / (1.0 + delta)) * a ** (delta / (1.0 + delta))
    left, right = idx[:functional.split], idx[functional.split:]
    fl, fr = functional.members[:functional.split], functional.members[functional.split:]

    def work(start, count):
        x = simulate(model, n, count, seed, start)
        g1 = np.prod([f(x[:, i - 1]) for f, i in zip(fl, left)], axis=0)
        g2 = np.prod([f(x[:, i - 1]) for f, i in zip(fr, right)], axis=0)
        acc = _Moments((3,))
        acc.add(np.stack([g1, g2, g1 * g2], axis=1))
        return acc, g1, g2

    res = map_chunks(work, replicates, threads)
    g1 = np.concatenate([r[1] for r in res])
    g2 = np.concatenate([r[2] for r in res])
    c = (g1 - g1.mean()) * (g2 - g2.mean())
    lhs = abs(float(c.mean()))
    se = float(c.std(ddof=1) / math.sqrt(len(c)))
    ok = lhs <= rhs + N_SE * se
    return CovarianceReport(idx, gap, delta, M, a, lhs, se, rhs, rhs - lhs, "PASS" if ok else "FAIL")


# --------------------------------------------------------------------------
# chaining bound


def _check_chain_kappa(kappa, nu, lam):
    lo, hi = kappa_range(nu, lam)
    if not lo < kappa < hi:
        raise DomainError(f"kappa = {kappa!r} outside (0, min(1/2 - 1/nu, lam/4)) = (0, {hi!r})")


def rhs_chaining_bound(m: int, delta: float, eta: float, N_fn: Callable, lam: float, nu: float,
                       kappa: float, C: float = 1.0) -> float:
    """``C [m (N^{2/nu}(eta)(m^{-kappa} + delta + delta^{nu/2}) + I(eta))^2]^{nu/2}``.

    ``I(eta)`` is the bracketing integral up to ``eta``.
    """
    _check_chain_kappa(kappa, nu, lam)
    integral = bracketing_integral(N_fn, lam, nu, min(eta, 1.0))
    if integral.diverges:
        raise DivergenceError("bracketing integral diverges: " + integral.verdict)
    N = N_fn(eta)
    inner = N ** (2.0 / nu) * (m ** (-kappa) + delta + delta ** (nu / 2.0)) + integral.value
    return C * (m * inner ** 2) ** (nu / 2.0)


@dataclass
class ScalingReport:
    nu: float
    lam: float
    kappa: float
    rows: list
    ratio: float
    band: float
    verdict: str
    growth_by_delta: dict = field(default_factory=dict)
    unresolved: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return asdict(self)


# replicates in which some pair actually differs on an observation; fewer means the
# left side is a rare-event estimate that says nothing about the bound
MIN_HITS = 30


def local_pair_net(cls, semimetric: Rho, delta: float, anchors: int = 32, offsets: int = 4) -> Net:
    """Anchors on an even grid, each with partners at fractions of the largest in-ball offset.

    The maximum over pairs of this net within ``delta`` is a lower bound for
    the supremum over the whole ``delta``-difference class.
    """
    params = set()
    for x in np.linspace(cls.lo, cls.hi, anchors, endpoint=False):
        x = float(x)
        params.add(x)
        f0 = cls.member(x)
        lo, hi = x, cls.hi
        if semimetric(f0, cls.member(hi)) <= delta:
            w = hi - x
        else:
            for _ in range(60):
                mid = 0.5 * (lo + hi)
                lo, hi = (mid, hi) if semimetric(f0, cls.member(mid)) <= delta else (lo, mid)
            w = lo - x
        params.update(x + w * k / offsets for k in range(1, offsets + 1))
    ps = sorted(params)
    return Net(tuple(cls.member(p) for p in ps), tuple(ps))


def scaling_check(model, cls, nu: int, lam: float, kappa: float, m_grid: Sequence[int],
                  delta_grid: Sequence[float], replicates: int, seed: int, N_fn: Callable | None = None,
                  band: float = 4.0, threads: int = 1) -> ScalingReport:
    """Ratio of the Monte Carlo left side to the chaining bound with ``C = 1`` and ``eta = sqrt(delta)``.

    The semimetric is ``rho_{nu(2+lam)/2}`` under the row's marginals.  The
    bound is an upper bound, so the verdict checks that, for each ``delta``,
    the ratio does not grow along ``m``: ``max_m ratio <= band * ratio(m_min)``.
    A ``delta`` whose pairs differ on an observation in fewer than ``MIN_HITS``
    replicates is reported as unresolved and left out of the verdict.
    """
    nu = _require_even(nu)
    _check_chain_kappa(kappa, nu, lam)
    N_fn = PowerLaw(1.0, 2.0) if N_fn is None else N_fn
    m_grid = sorted(int(m) for m in m_grid)
    n = m_grid[-1]
    marg = marginals_of(model, n)
    rho = Rho(nu * (2.0 + lam) / 2.0, marg)
    rows = []
    for delta in delta_grid:
        net = local_pair_net(cls, rho, delta)
        a, b = diff_pair_indices(net, rho, delta)
        keep = a < b
        a, b = a[keep], b[keep]
        nm = NetModel(model, net, n)
        ms = np.asarray(m_grid)

        def work(start, count):
            W = nm.sample(count, seed, start)
            C = np.cumsum(W, axis=-1)[..., ms - 1]   # (R, P, len(m))
            d = np.abs(C[:, a, :] - C[:, b, :]).max(axis=1) ** nu
            raw = W + nm._means[None]
            first = np.full(count, n + 1)
            for i, j in zip(a, b):
                diff = raw[:, i, :] != raw[:, j, :]
                first = np.minimum(first, np.where(diff.any(axis=1), diff.argmax(axis=1) + 1, n + 1))
            acc = _Moments((len(ms),))
            acc.add(d)
            return acc, (first[:, None] <= ms[None, :]).sum(axis=0)

        parts = map_chunks(work, replicates, threads)
        acc = _reduce([p[0] for p in parts], (len(ms),))
        hits = sum(p[1] for p in parts)
        for k, m in enumerate(m_grid):
            rhs = rhs_chaining_bound(m, delta, math.sqrt(delta), N_fn, lam, nu, kappa)
            rows.append({"m": m, "delta": float(delta), "lhs": float(acc.mean[k]),
                         "lhs_se": float(acc.std_error[k]), "rhs": rhs, "ratio": float(acc.mean[k]) / rhs,
                         "pairs": int(a.size), "hits": int(hits[k])})
    growth, unresolved = {}, []
    for delta in delta_grid:
        sub = [row for row in rows if row["delta"] == float(delta)]
        if min(row["hits"] for row in sub) < MIN_HITS:
            unresolved.append(float(delta))
            continue
        r = [row["ratio"] for row in sub]
        growth[float(delta)] = float(max(r) / r[0]) if r[0] > 0 else (1.0 if max(r) == 0 else math.inf)
    if not growth:
        return ScalingReport(nu, lam, kappa, rows, math.nan, band, "INCONCLUSIVE", growth, unresolved)
    ratio = max(growth.values())
    return ScalingReport(nu, lam, kappa, rows, ratio, band, "PASS" if ratio <= band else "FAIL", growth,
                         unresolved)
