"""Equicontinuity tables, Lipschitz increments of the smoothed process, the
end-to-end hypothesis checklist for mixing arrays and a CUSUM statistic.

Everything is evaluated on finite grids: moduli are maxima over a time grid
times a finite net, so they bound the true suprema from below.  Separability
of the process over the full class is not checked; finite nets sidestep it.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np
from scipy import ndimage

from .arrays import marginals_of, profile_of, simulate
from .bracketing import (Constant, HalflineBracketingNumber, PowerLaw, bracketing_integral,
                         bracketing_number)
from .fclasses import FunctionClass, Member, Net, Rho, expect, grid_net, mean_vector
from .growth import DivergenceError, DomainError, check_condition_S, gamma_growth, kappa_range, zeta
from .parallel import map_chunks
from .process import smoothing_weights, z_path
from .verify import _Moments, _reduce, dyadic_pairs

DEFAULT_EPS = 0.75
TIME_SLACK = 1e-9


# --------------------------------------------------------------------------
# equicontinuity tables


def _window(h: float, scale: int) -> int:
    """Largest integer ``w`` with ``w / scale <= h``."""
    return max(0, math.floor(h * scale + TIME_SLACK)) if h >= 0 else -1


def _paths(model, net: Net, n: int, refine: int, values: np.ndarray, means: np.ndarray) -> np.ndarray:
    """``(R, P, n*refine + 1)`` process values on the time grid ``k / (n refine)``."""
    z = np.stack([f(values) for f in net], axis=1) - means[None, :, :]
    path = z_path(z)
    if refine == 1:
        return path
    # the smoothed process on (0, t] interpolates the step path linearly between grid times
    fine = np.arange(n * refine + 1) / refine
    k = np.minimum(np.floor(fine).astype(int), n - 1)
    frac = (fine - k)[None, None, :]
    return path[..., k] + frac * (path[..., k + 1] - path[..., k])


def _pair_modulus(paths, fd, delta, scale, diag_only=False, same_time=False):
    """``max |Z(s,f) - Z(t,g)|`` over ``|s - t| + fd[f, g] <= delta`` per replicate."""
    R, P, _ = paths.shape
    out = np.zeros(R)
    if diag_only:
        pairs = [(p, p, _window(delta, scale)) for p in range(P)]
    else:
        a, b = np.nonzero(np.triu(fd <= delta + TIME_SLACK))
        pairs = [(int(i), int(j), 0 if same_time else _window(delta - fd[i, j], scale)) for i, j in zip(a, b)]
    by_w: dict[int, list] = {}
    for i, j, w in pairs:
        if w >= 0:
            by_w.setdefault(w, []).append((i, j))
    for w, plist in sorted(by_w.items()):
        if w == 0:
            for i, j in plist:
                out = np.maximum(out, np.abs(paths[:, i] - paths[:, j]).max(axis=-1))
            continue
        need = sorted({j for _, j in plist})
        sub = paths[:, need]
        mx = ndimage.maximum_filter1d(sub, 2 * w + 1, axis=-1, mode="nearest")
        mn = ndimage.minimum_filter1d(sub, 2 * w + 1, axis=-1, mode="nearest")
        pos = {j: k for k, j in enumerate(need)}
        for i, j in plist:
            zi = paths[:, i]
            d = np.maximum(zi - mn[:, pos[j]], mx[:, pos[j]] - zi).max(axis=-1)
            out = np.maximum(out, d)
    return out


@dataclass
class AECRow:
    delta: float
    n: int
    p_hat: float
    se: float
    split1: float
    split2: float
    mean_modulus: float


@dataclass
class AECTable:
    process: str
    eps: float
    replicates: int
    seed: int
    rows: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return asdict(self)

    def row(self, delta: float, n: int) -> AECRow:
        for r in self.rows:
            if r.delta == delta and r.n == n:
                return r
        raise KeyError((delta, n))

    def csv_rows(self) -> list[tuple]:
        return [(r.delta, r.n, r.p_hat, r.se, r.split1, r.split2) for r in self.rows]


def aec_moduli(model, net: Net, n: int, delta_grid: Sequence[float], replicates: int, seed: int,
               semimetric=None, process: str = "Z", refine: int = 4, threads: int = 1):
    """Per-replicate full modulus and the time- and function-direction split terms.

    Returns three ``(R, len(delta_grid))`` arrays.  Pathwise monotonicity in
    ``delta`` and ``full <= split1 + split2`` are asserted on every replicate.
    """
    if process not in ("Z", "Zs"):
        raise ValueError("process must be 'Z' or 'Zs'")
    if len(net) == 0:
        raise ValueError("empty net")
    deltas = [float(d) for d in delta_grid]
    if not deltas or min(deltas) < 0:
        raise ValueError("delta grid must be nonempty and nonnegative")
    r = 1 if process == "Z" else int(refine)
    marg = marginals_of(model, n)
    semimetric = Rho(2, marg) if semimetric is None else semimetric
    fd = semimetric.matrix(net.members)
    means = np.stack([mean_vector(f, marg) for f in net])
    scale = n * r

    def work(start, count):
        paths = _paths(model, net, n, r, simulate(model, n, count, seed, start), means)
        full = np.empty((count, len(deltas)))
        s1 = np.empty_like(full)
        s2 = np.empty_like(full)
        for k, d in enumerate(deltas):
            full[:, k] = _pair_modulus(paths, fd, d, scale)
            s1[:, k] = _pair_modulus(paths, fd, d, scale, diag_only=True)
            s2[:, k] = _pair_modulus(paths, fd, d, scale, same_time=True)
        return full, s1, s2

    res = map_chunks(work, replicates, threads, size=max(1, 200000 // (len(net) * (scale + 1)) or 1))
    full, s1, s2 = (np.concatenate([x[i] for x in res]) for i in range(3))
    order = np.argsort(deltas, kind="stable")
    if np.any(np.diff(full[:, order], axis=1) < -1e-12):
        raise AssertionError("modulus not monotone in delta")
    if np.any(full > s1 + s2 + 1e-12):
        raise AssertionError("full modulus exceeds the sum of the split terms")
    return full, s1, s2


def aec_table(model, net: Net, delta_grid: Sequence[float], n_grid: Sequence[int], replicates: int,
              seed: int, eps: float = DEFAULT_EPS, semimetric=None, process: str = "Z",
              refine: int = 4, threads: int = 1) -> AECTable:
    """``P(modulus > eps)`` with standard errors on a ``(delta, n)`` grid.

    ``split1`` and ``split2`` are the frequencies with which the time- and
    function-direction terms exceed ``eps / 2``; one of them must whenever
    the full modulus exceeds ``eps``.  All ``n`` share the seed, so rows of
    different lengths use common random numbers.
    """
    if not eps > 0:
        raise ValueError("eps must be positive")
    if not n_grid:
        raise ValueError("n grid must be nonempty")
    table = AECTable(process, float(eps), replicates, int(seed))
    for n in n_grid:
        full, s1, s2 = aec_moduli(model, net, int(n), delta_grid, replicates, seed, semimetric,
                                  process, refine, threads)
        for k, d in enumerate(delta_grid):
            p = float(np.mean(full[:, k] > eps))
            se = math.sqrt(p * (1 - p) / replicates)
            table.rows.append(AECRow(float(d), int(n), p, se, float(np.mean(s1[:, k] > eps / 2)),
                                     float(np.mean(s2[:, k] > eps / 2)), float(full[:, k].mean())))
    return table


# --------------------------------------------------------------------------
# Lipschitz increments of the smoothed process


@dataclass
class IncrementRow:
    direction: str
    label: str
    distance: float
    norm: float
    se: float
    ratio: float
    flagged: bool


@dataclass
class LipschitzReport:
    p: float
    n: int
    C1: float
    C2: float | None
    slope: float | None
    rows: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return asdict(self)


def _loglog_slope(x, y) -> float | None:
    x, y = np.asarray(x, float), np.asarray(y, float)
    ok = (x > 0) & (y > 0)
    if ok.sum() < 2:
        return None
    return float(np.polyfit(np.log(x[ok]), np.log(y[ok]), 1)[0])


def lipschitz_increments(model, n: int, f: Member, interval_pairs: Sequence, p: float, replicates: int,
                         seed: int, member_pairs: Sequence = (), base_interval=(0.0, 1.0),
                         semimetric=None, zero_tol: float = 1e-12, threads: int = 1) -> LipschitzReport:
    """``L_p`` norms of set- and function-direction increments of the smoothed process.

    Set direction: ``Zs(A, f) - Zs(B, f)`` for each ``(A, B)`` in
    ``interval_pairs``, compared with ``sqrt(lambda(A Δ B))``.  Function
    direction: ``Zs(base, f) - Zs(base, g)`` for ``(f, g)`` in ``member_pairs``,
    compared with ``rho(f, g)``.  Pairs at distance 0 with a nonzero increment
    are flagged.
    """
    if not p >= 1:
        raise ValueError("p must be >= 1")
    marg = marginals_of(model, n)
    semimetric = Rho(2, marg) if semimetric is None else semimetric
    members = [f] + sorted({g for pair in member_pairs for g in pair if g != f}, key=repr)
    idx = {g: k for k, g in enumerate(members)}
    means = np.stack([mean_vector(g, marg) for g in members])
    set_w = np.stack([smoothing_weights(n, *A) - smoothing_weights(n, *B) for A, B in interval_pairs]) \
        if interval_pairs else np.zeros((0, n))
    base_w = smoothing_weights(n, *base_interval)
    root = math.sqrt(n)

    def work(start, count):
        x = simulate(model, n, count, seed, start)
        z = np.stack([g(x) for g in members], axis=1) - means[None]
        inc_set = z[:, 0, :] @ set_w.T / root
        zb = z @ base_w / root
        inc_fn = np.stack([zb[:, idx[a]] - zb[:, idx[b]] for a, b in member_pairs], axis=1) \
            if member_pairs else np.zeros((count, 0))
        acc = _Moments(set_w.shape[0] + len(member_pairs))
        acc.add(np.abs(np.concatenate([inc_set, inc_fn], axis=1)) ** p)
        mx = np.abs(np.concatenate([inc_set, inc_fn], axis=1)).max(axis=0) if count else None
        return acc, mx

    res = map_chunks(work, replicates, threads)
    acc = _reduce([r[0] for r in res], set_w.shape[0] + len(member_pairs))
    absmax = np.max([r[1] for r in res], axis=0) if res else None
    norms = acc.mean ** (1.0 / p)
    # delta method for the p-th root
    ses = np.where(acc.mean > 0, acc.std_error * norms / (p * np.where(acc.mean > 0, acc.mean, 1.0)), 0.0)
    rows, set_d, set_norm = [], [], []
    for k, (A, B) in enumerate(interval_pairs):
        lam = abs(A[1] - A[0]) + abs(B[1] - B[0]) - 2 * max(0.0, min(A[1], B[1]) - max(A[0], B[0]))
        d = math.sqrt(max(lam, 0.0))
        flagged = d == 0 and absmax[k] > zero_tol
        rows.append(IncrementRow("set", f"{A}-{B}", d, float(norms[k]), float(ses[k]),
                                 float(norms[k] / d) if d > 0 else 0.0, bool(flagged)))
        set_d.append(max(lam, 0.0))
        set_norm.append(norms[k])
    off = len(interval_pairs)
    for k, (a, b) in enumerate(member_pairs):
        d = float(semimetric(a, b))
        nk = float(norms[off + k])
        flagged = d == 0 and absmax[off + k] > zero_tol
        rows.append(IncrementRow("function", f"{a!r}-{b!r}", d, nk, float(ses[off + k]),
                                 nk / d if d > 0 else 0.0, bool(flagged)))
    C1 = max((r.ratio for r in rows if r.direction == "set"), default=0.0)
    C2 = max((r.ratio for r in rows if r.direction == "function"), default=None)
    return LipschitzReport(p, n, C1, C2, _loglog_slope(set_d, set_norm), rows)


# --------------------------------------------------------------------------
# end-to-end hypothesis checklist


class PipelineHalt(RuntimeError):
    def __init__(self, bundle: "PipelineBundle"):
        self.bundle = bundle
        super().__init__(f"hypothesis {bundle.failed} failed: {bundle.clauses[-1]['reason']}")


@dataclass
class PipelineBundle:
    inputs: dict
    clauses: list = field(default_factory=list)
    failed: str | None = None

    @property
    def passed(self) -> bool:
        return self.failed is None

    def to_dict(self) -> dict:
        return {"inputs": self.inputs, "clauses": self.clauses, "failed": self.failed,
                "verdict": "PASS" if self.passed else "FAIL"}


def class_bracketing_fn(cls: FunctionClass, marg=None):
    """``eps -> N_[](eps)`` as a callable with a known power-law exponent where available."""
    if cls.kind == "halfline_indicators" and (marg is None or marg.kind == "uniform01") \
            and (cls.lo, cls.hi) == (0.0, 1.0) and not cls.include_zero:
        return HalflineBracketingNumber()
    if cls.kind == "finite_explicit":
        # each member brackets itself with b = 0
        return Constant(float(len(cls.finite_members) + cls.include_zero))
    if cls.kind == "halfline_indicators":
        return _Tabulated(cls, marg, 2.0)
    if cls.kind == "lipschitz_ball":
        return _Tabulated(cls, marg, 1.0)
    raise ValueError(f"unsupported class kind {cls.kind!r}")


class _Tabulated:
    """Constructive bracketing numbers with a declared power-law exponent near 0.

    Evaluation below ``floor`` uses the power law anchored at ``floor``.
    """

    def __init__(self, cls, marg, exponent, floor=1e-3):
        self.cls, self.marg, self.exponent, self.floor = cls, marg, exponent, floor
        self._cache: dict = {}

    def __call__(self, eps):
        if eps < self.floor:
            return self(self.floor) * (self.floor / eps) ** self.exponent
        key = float(eps)
        if key not in self._cache:
            self._cache[key] = float(bracketing_number(self.cls, key, self.marg))
        return self._cache[key]


def _moment_cap(cls: FunctionClass, marg, q: float) -> float:
    """``sup_f sup_t E|f(X_t)|^q``."""
    if cls.kind == "halfline_indicators":
        # indicators: E|f|^q = P(X <= x), largest at the top of the range
        return float(np.max(mean_vector(cls.member(cls.hi), marg)))
    if cls.kind == "lipschitz_ball" and marg.kind == "uniform01":
        th = max(abs(cls.lo), abs(cls.hi))
        if th <= 1:
            return th ** q / (q + 1)
        return (1.0 / th) / (q + 1) + (1 - 1.0 / th)
    members = list(cls.finite_members) if cls.kind == "finite_explicit" else list(grid_net(cls, 33))
    best = 0.0
    for law in marg.distinct_laws(16):
        for f in members:
            best = max(best, expect(lambda y: np.abs(f(y)) ** q, law))
    return best


def pipeline_check(model, cls: FunctionClass, nu, lam: float, kappa: float, K: float = 1.0,
                   eta: float = 1.0, n: int = 1024, replicates: int = 2000, seed: int = 0,
                   f0: Member | None = None, band: float = 4.0, raise_on_fail: bool = False,
                   delta_grid: Sequence[float] = (0.5, 0.25, 0.125, 0.0625, 0.03125)) -> PipelineBundle:
    """Run the hypotheses of the weak-convergence result for mixing arrays in order.

    Clauses: ``nu_even`` (even integer ``nu > 2``), ``A1_mixing_series``,
    ``A2_bracketing`` (finite integral plus the bounding-class moment
    certificate), ``moment_cap``, ``kappa_range``, ``f0_moment_bound`` (fitted
    ``D`` in ``||S(f0)||_nu <= D sqrt(m)``) and ``gamma_certificate`` (the
    ``R(delta)``, ``J(delta)`` construction with a condition (S) certificate).
    The first failing clause halts the run.
    """
    marg = marginals_of(model, n)
    bundle = PipelineBundle({"model": model.describe() if hasattr(model, "describe") else repr(model),
                             "class": cls.describe(), "nu": nu, "lam": lam, "kappa": kappa, "K": K,
                             "eta": eta, "n": n, "replicates": replicates, "seed": int(seed)})

    def record(name, ok, reason, **artifacts):
        bundle.clauses.append({"clause": name, "verdict": "PASS" if ok else "FAIL", "reason": reason,
                               "artifacts": artifacts})
        if not ok:
            bundle.failed = name
        return ok

    def done():
        if bundle.failed and raise_on_fail:
            raise PipelineHalt(bundle)
        return bundle

    # nu
    even = float(nu) == int(nu) and int(nu) % 2 == 0 and nu > 2
    if not record("nu_even", even, "need an even integer nu > 2" if not even else "even integer nu > 2"):
        return done()
    nu = int(nu)
    if not lam > 0:
        record("A1_mixing_series", False, "lambda must be positive")
        return done()
    # A1
    try:
        z = zeta(profile_of(model, n), lam, nu)
        record("A1_mixing_series", True, "mixing series finite", zeta=z.value,
               truncation_bound=z.truncation_bound, terms=z.terms)
    except DivergenceError as exc:
        record("A1_mixing_series", False, f"mixing series not certified finite: {exc}")
        return done()
    # A2
    N_fn = class_bracketing_fn(cls, marg)
    integral = bracketing_integral(N_fn, lam, nu, 1.0)
    if integral.diverges:
        record("A2_bracketing", False, "bracketing integral diverges: combined exponent "
               f"lam/(2+lam) + a/nu = {lam / (2 + lam) + N_fn.exponent / nu:.6g} >= 1",
               exponent=integral.exponent)
        return done()
    bounded = cls.kind in ("halfline_indicators", "lipschitz_ball") or \
        all(f.bounded_by_one for f in cls.finite_members)
    if not record("A2_bracketing", bounded,
                  "integral finite; bounding functions take values in [0, 1], so every higher moment "
                  "is at most the second and the moment condition reduces to rho_2(b) <= eps"
                  if bounded else "bounding-class moment condition not certified for unbounded members",
                  integral=integral.value, error_estimate=integral.error_estimate,
                  exponent=integral.exponent):
        return done()
    # moment cap
    q = nu * (2 + lam) / 2
    cap = _moment_cap(cls, marg, q)
    if not record("moment_cap", K >= 1 and cap <= K, f"sup E|f|^{q:g} = {cap:.6g} vs K = {K:g}"
                  + ("" if K >= 1 else " (K must be >= 1)"), sup_moment=cap, K=K, order=q):
        return done()
    # kappa
    try:
        lo, hi = kappa_range(nu, lam)
    except DomainError:
        lo, hi = 0.0, 0.0
    if not record("kappa_range", lo < kappa < hi, f"kappa = {kappa:g} in (0, {hi:.6g})" if lo < kappa < hi
                  else f"kappa = {kappa:g} outside (0, min(1/2 - 1/nu, lam/4)) = (0, {hi:.6g})",
                  upper=hi):
        return done()
    # f0 moment bound
    f0 = f0 if f0 is not None else (cls.member(0.5 * (cls.lo + cls.hi)) if cls.one_parameter
                                     else cls.finite_members[0])
    D_hat, D_by_m = _fit_D(model, f0, n, nu, replicates, seed)
    pos = [d for d in D_by_m.values() if d > 0]
    stable = not pos or max(pos) / min(pos) <= band
    if not record("f0_moment_bound", math.isfinite(D_hat) and stable,
                  f"fitted D = {D_hat:.6g}; spread across block lengths within factor {band:g}"
                  if stable else "normalized moments of f0 drift beyond the band",
                  f0=repr(f0), D_hat=D_hat, D_by_m={str(k): v for k, v in D_by_m.items()}):
        return done()
    # gamma artifacts
    table = []
    for d in delta_grid:
        root = math.sqrt(d)
        Nd = N_fn(root)
        I = bracketing_integral(N_fn, lam, nu, min(root, 1.0)).value
        R = Nd ** (2.0 / nu) * (d + d ** (nu / 2.0)) + I
        J = Nd ** (2.0 / nu)
        cert = check_condition_S(gamma_growth(d, 1.0, kappa, lambda _: R, lambda _: J, nu, 200))
        table.append({"delta": d, "R": R, "J": J, "q_min": cert.q_min, "admissible": cert.admissible})
    Rs = [row["R"] for row in sorted(table, key=lambda r: -r["delta"])]
    decreasing = all(b <= a for a, b in zip(Rs[:-1], Rs[1:]))
    ok = decreasing and all(row["admissible"] for row in table)
    record("gamma_certificate", ok, "R decreases toward 0 and every gamma(., delta) is admissible"
           if ok else "R(delta) not decreasing or gamma certificate inadmissible", table=table)
    return done()


def _fit_D(model, f0: Member, n: int, nu: int, replicates: int, seed: int):
    marg = marginals_of(model, n)
    mean = mean_vector(f0, marg)
    pairs = [(i, j) for i, j in dyadic_pairs(n) if j - i + 1 >= 8]
    if not pairs:
        pairs = dyadic_pairs(n)

    def work(start, count):
        z = f0(simulate(model, n, count, seed, start)) - mean
        C = np.concatenate([np.zeros((count, 1)), np.cumsum(z, axis=1)], axis=1)
        acc = _Moments(len(pairs))
        acc.add(np.stack([np.abs(C[:, j] - C[:, i - 1]) ** nu for i, j in pairs], axis=1))
        return acc

    acc = _reduce(map_chunks(work, replicates), len(pairs))
    ratios = acc.mean ** (1.0 / nu) / np.sqrt([j - i + 1 for i, j in pairs])
    by_m: dict[int, float] = {}
    for (i, j), r in zip(pairs, ratios):
        m = j - i + 1
        by_m[m] = max(by_m.get(m, 0.0), float(r))
    return float(ratios.max()), dict(sorted(by_m.items()))


# --------------------------------------------------------------------------
# change-point statistic


def changepoint_cusum(values: np.ndarray, net: Net) -> float:
    """``max_{i, f} |Z_n(i/n, f) - (i/n) Z_n(1, f)|`` for one row (or the max per row of a batch).

    The bridge form does not depend on the centering constant, so raw
    evaluations are used after subtracting their row mean.
    """
    if len(net) == 0:
        raise ValueError("empty net")
    x = np.asarray(values, dtype=float)
    single = x.ndim == 1
    x = np.atleast_2d(x)
    n = x.shape[-1]
    fx = np.stack([f(x) for f in net], axis=1)
    fx = fx - fx.mean(axis=-1, keepdims=True)
    path = np.abs(np.cumsum(fx, axis=-1)).max(axis=(1, 2)) / math.sqrt(n)
    return float(path[0]) if single else path
