"""Significance machinery: Welch, Friedman, Nemenyi, bootstrap.

The special functions (regularized incomplete beta and gamma, normal
CDF, studentized-range survival function) are implemented here rather
than pulled from scipy so the runtime dependency set stays small; the
test suite cross-checks them against scipy where available.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import DegenerateInput, EmptyInput, RaggedInput

# ---------------------------------------------------------------------------
# Special functions

_FPMIN = 1e-300
_EPS = 3e-16
_MAX_ITER = 300


def _betacf(a: float, b: float, x: float) -> float:
    # modified Lentz continued fraction for the incomplete beta
    qab, qap, qam = a + b, a + 1.0, a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < _FPMIN:
        d = _FPMIN
    d = 1.0 / d
    h = d
    for m in range(1, _MAX_ITER + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < _FPMIN:
            d = _FPMIN
        c = 1.0 + aa / c
        if abs(c) < _FPMIN:
            c = _FPMIN
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < _FPMIN:
            d = _FPMIN
        c = 1.0 + aa / c
        if abs(c) < _FPMIN:
            c = _FPMIN
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _EPS:
            break
    return h


def regularized_incomplete_beta(a: float, b: float, x: float) -> float:
    if a <= 0 or b <= 0:
        raise ValueError("shape parameters must be positive")
    if x <= 0.0:
        return 0.0
    if x >= 1.0:
        return 1.0
    ln_front = (
        math.lgamma(a + b) - math.lgamma(a) - math.lgamma(b)
        + a * math.log(x) + b * math.log1p(-x)
    )
    front = math.exp(ln_front)
    # the continued fraction converges fast only on one side of the mean
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _betacf(a, b, x) / a
    return 1.0 - front * _betacf(b, a, 1.0 - x) / b


def _gamma_p_series(a: float, x: float) -> float:
    term = 1.0 / a
    total = term
    n = a
    for _ in range(_MAX_ITER * 10):
        n += 1.0
        term *= x / n
        total += term
        if abs(term) < abs(total) * _EPS:
            break
    return total * math.exp(-x + a * math.log(x) - math.lgamma(a))


def _gamma_q_cf(a: float, x: float) -> float:
    b = x + 1.0 - a
    c = 1.0 / _FPMIN
    d = 1.0 / b
    h = d
    for i in range(1, _MAX_ITER * 10):
        an = -i * (i - a)
        b += 2.0
        d = an * d + b
        if abs(d) < _FPMIN:
            d = _FPMIN
        c = b + an / c
        if abs(c) < _FPMIN:
            c = _FPMIN
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _EPS:
            break
    return h * math.exp(-x + a * math.log(x) - math.lgamma(a))


def regularized_gamma_p(a: float, x: float) -> float:
    if a <= 0:
        raise ValueError("shape parameter must be positive")
    if x < 0:
        raise ValueError("x must be non-negative")
    if x == 0.0:
        return 0.0
    if x < a + 1.0:
        return _gamma_p_series(a, x)
    return 1.0 - _gamma_q_cf(a, x)


def regularized_gamma_q(a: float, x: float) -> float:
    if a <= 0:
        raise ValueError("shape parameter must be positive")
    if x < 0:
        raise ValueError("x must be non-negative")
    if x == 0.0:
        return 1.0
    if x < a + 1.0:
        return 1.0 - _gamma_p_series(a, x)
    return _gamma_q_cf(a, x)


def chi2_sf(x: float, df: float) -> float:
    return regularized_gamma_q(df / 2.0, x / 2.0)


def normal_cdf(z: float) -> float:
    return 0.5 * math.erfc(-z / math.sqrt(2.0))


def _normal_pdf(z: float) -> float:
    return math.exp(-0.5 * z * z) / math.sqrt(2.0 * math.pi)


_SR_Z_LIMIT = 9.0
_SR_Z_STEP = 0.005


def studentized_range_sf(q: float, k: int) -> float:
    """P(Q > q) for the range of k standard normals (infinite df).

    Computed as 1 - k * integral of phi(z) * (Phi(z) - Phi(z-q))^(k-1)
    by composite Simpson over z in [-9, 9].
    """
    if k < 2:
        raise ValueError("studentized range needs k >= 2")
    if q <= 0.0:
        return 1.0
    steps = int(round(2.0 * _SR_Z_LIMIT / _SR_Z_STEP))
    if steps % 2:
        steps += 1
    h = 2.0 * _SR_Z_LIMIT / steps

    def integrand(z: float) -> float:
        inner = normal_cdf(z) - normal_cdf(z - q)
        if inner <= 0.0:
            return 0.0
        return _normal_pdf(z) * inner ** (k - 1)

    total = integrand(-_SR_Z_LIMIT) + integrand(_SR_Z_LIMIT)
    for i in range(1, steps):
        z = -_SR_Z_LIMIT + i * h
        total += (4.0 if i % 2 else 2.0) * integrand(z)
    cdf = k * total * h / 3.0
    return min(1.0, max(0.0, 1.0 - cdf))


def studentized_range_quantile(alpha: float, k: int, *, tol: float = 1e-8) -> float:
    """q such that P(Q > q) = alpha, by bisection."""
    if not 0.0 < alpha < 1.0:
        raise ValueError("alpha must be in (0, 1)")
    lo, hi = 0.0, 50.0
    while studentized_range_sf(hi, k) > alpha:
        hi *= 2.0
        if hi > 1e4:
            raise ValueError("quantile out of range")
    while hi - lo > tol:
        mid = (lo + hi) / 2.0
        if studentized_range_sf(mid, k) > alpha:
            lo = mid
        else:
            hi = mid
    return (lo + hi) / 2.0


# ---------------------------------------------------------------------------
# Tests


@dataclass(frozen=True)
class WelchResult:
    statistic: float
    df: float
    p_value: float


def welch_t_test(a: Sequence[float], b: Sequence[float]) -> WelchResult:
    """Two-sided Welch unequal-variance t test."""
    xs = [float(v) for v in a]
    ys = [float(v) for v in b]
    if len(xs) < 2 or len(ys) < 2:
        raise EmptyInput("welch_t_test needs at least 2 observations per group")
    n1, n2 = len(xs), len(ys)
    m1 = sum(xs) / n1
    m2 = sum(ys) / n2
    v1 = sum((v - m1) ** 2 for v in xs) / (n1 - 1)
    v2 = sum((v - m2) ** 2 for v in ys) / (n2 - 1)
    if v1 == 0.0 and v2 == 0.0:
        raise DegenerateInput("both groups have zero variance")
    se1, se2 = v1 / n1, v2 / n2
    t = (m1 - m2) / math.sqrt(se1 + se2)
    df = (se1 + se2) ** 2 / (se1**2 / (n1 - 1) + se2**2 / (n2 - 1))
    p = regularized_incomplete_beta(df / 2.0, 0.5, df / (df + t * t))
    return WelchResult(statistic=t, df=df, p_value=min(1.0, p))


def _average_ranks(row: Sequence[float]) -> list[float]:
    order = sorted(range(len(row)), key=lambda j: row[j])
    ranks = [0.0] * len(row)
    i = 0
    while i < len(order):
        j = i
        while j + 1 < len(order) and row[order[j + 1]] == row[order[i]]:
            j += 1
        shared = (i + j) / 2.0 + 1.0
        for t in range(i, j + 1):
            ranks[order[t]] = shared
        i = j + 1
    return ranks


@dataclass(frozen=True)
class FriedmanResult:
    statistic: float
    df: int
    p_value: float
    average_ranks: tuple[float, ...]


def friedman_test(matrix: Sequence[Sequence[float]]) -> FriedmanResult:
    """Friedman rank test over a blocks-by-treatments score matrix.

    Ties share average ranks and no tie correction is applied, so a
    matrix with no signal (every block ranks everything equal) yields
    statistic 0 and p = 1 rather than an error.
    """
    rows = [list(map(float, row)) for row in matrix]
    if not rows:
        raise EmptyInput("friedman_test needs at least one block")
    k = len(rows[0])
    for i, row in enumerate(rows):
        if len(row) != k:
            raise RaggedInput(f"block {i} has {len(row)} treatments, expected {k}")
    if k < 3:
        raise ValueError("friedman_test needs at least 3 treatments")
    if len(rows) < 2:
        raise ValueError("friedman_test needs at least 2 blocks")
    n = len(rows)
    rank_sums = [0.0] * k
    for row in rows:
        for j, r in enumerate(_average_ranks(row)):
            rank_sums[j] += r
    avg_ranks = tuple(s / n for s in rank_sums)
    centre = (k + 1) / 2.0
    statistic = 12.0 * n / (k * (k + 1)) * sum((r - centre) ** 2 for r in avg_ranks)
    return FriedmanResult(
        statistic=statistic,
        df=k - 1,
        p_value=chi2_sf(statistic, k - 1),
        average_ranks=avg_ranks,
    )


@dataclass(frozen=True)
class NemenyiResult:
    p_values: tuple[tuple[float, ...], ...]
    average_ranks: tuple[float, ...]
    n_blocks: int

    @property
    def k(self) -> int:
        return len(self.average_ranks)


def nemenyi_posthoc(matrix: Sequence[Sequence[float]]) -> NemenyiResult:
    """All-pairs Nemenyi p-values from the same matrix Friedman sees."""
    fr = friedman_test(matrix)
    k = len(fr.average_ranks)
    n = len(list(matrix))
    scale = math.sqrt(k * (k + 1) / (12.0 * n))
    grid = [[1.0] * k for _ in range(k)]
    for i in range(k):
        for j in range(i + 1, k):
            q = abs(fr.average_ranks[i] - fr.average_ranks[j]) / scale
            p = studentized_range_sf(q, k)
            grid[i][j] = grid[j][i] = p
    return NemenyiResult(
        p_values=tuple(tuple(row) for row in grid),
        average_ranks=fr.average_ranks,
        n_blocks=n,
    )


def critical_difference(k: int, n_blocks: int, alpha: float = 0.05) -> float:
    """Smallest average-rank gap that is significant at ``alpha``."""
    q = studentized_range_quantile(alpha, k)
    return q * math.sqrt(k * (k + 1) / (12.0 * n_blocks))


# ---------------------------------------------------------------------------
# Bootstrap

DEFAULT_BOOTSTRAP_REPLICATES = 100


def bootstrap_accuracies(
    outcomes: Sequence,
    *,
    n_replicates: int = DEFAULT_BOOTSTRAP_REPLICATES,
    seed: int = 0,
) -> np.ndarray:
    """Accuracy of resampled cohorts; replicate i draws from rng (seed, i).

    Seeding each replicate independently keeps any single replicate
    reproducible regardless of how many are requested.
    """
    flags = np.asarray(
        [float(getattr(o, "score", o)) for o in outcomes], dtype=float
    )
    if flags.size < 2:
        raise EmptyInput("cannot bootstrap fewer than 2 outcomes")
    out = np.empty(n_replicates, dtype=float)
    for i in range(n_replicates):
        rng = np.random.default_rng((seed, i))
        idx = rng.integers(0, flags.size, size=flags.size)
        out[i] = flags[idx].mean()
    return out


def bootstrap_ci(
    outcomes: Sequence,
    *,
    n_replicates: int = DEFAULT_BOOTSTRAP_REPLICATES,
    seed: int = 0,
    alpha: float = 0.05,
) -> tuple[float, float]:
    """Percentile bootstrap interval for accuracy (nearest-rank ends)."""
    reps = np.sort(bootstrap_accuracies(outcomes, n_replicates=n_replicates, seed=seed))
    lo_rank = max(1, math.ceil(alpha / 2.0 * reps.size))
    hi_rank = max(1, math.ceil((1.0 - alpha / 2.0) * reps.size))
    return float(reps[lo_rank - 1]), float(reps[hi_rank - 1])
