"""Statistics used to check the weak limits, and the constant beta = -zeta(1/2)/sqrt(2 pi)."""
from __future__ import annotations

import functools
import json
from dataclasses import asdict, dataclass
from fractions import Fraction
from statistics import NormalDist
from typing import Iterable, Optional, Sequence

import mpmath
import numpy as np

from .rng import InvalidParameter

QUANTILE_LEVELS = (0.01, 0.05, 0.25, 0.50, 0.75, 0.95, 0.99)
KS_COEF_95 = 1.358


@dataclass
class EmpiricalSummary:
    count: int
    mean: float
    variance: float
    q01: float
    q05: float
    q25: float
    q50: float
    q75: float
    q95: float
    q99: float
    ks: Optional[float] = None
    slope: Optional[float] = None
    # time components have infinite-mean limits; their means are reported but flagged
    mean_converges: bool = True

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


def summarize(samples, ks: Optional[float] = None, heavy_tailed: bool = False) -> EmpiricalSummary:
    a = np.asarray(samples, dtype=float)
    if a.size == 0:
        raise InvalidParameter("cannot summarize an empty sample")
    q = np.quantile(a, QUANTILE_LEVELS)
    var = float(a.var(ddof=1)) if a.size > 1 else 0.0
    return EmpiricalSummary(int(a.size), float(a.mean()), var, *map(float, q), ks=ks,
                            mean_converges=not heavy_tailed)


# -- Kolmogorov-Smirnov --------------------------------------------------------

def ks_two_sample(a, b) -> float:
    """Sup distance between the two empirical CDFs (exact, ties handled)."""
    a = np.sort(np.asarray(a, dtype=float).ravel())
    b = np.sort(np.asarray(b, dtype=float).ravel())
    if a.size == 0 or b.size == 0:
        raise InvalidParameter("KS needs two nonempty samples")
    grid = np.concatenate((a, b))
    fa = np.searchsorted(a, grid, side="right") / a.size
    fb = np.searchsorted(b, grid, side="right") / b.size
    return float(np.max(np.abs(fa - fb)))


def ks_vs_uniform(a) -> float:
    """One-sample KS distance to the U(0,1) CDF."""
    x = np.sort(np.asarray(a, dtype=float).ravel())
    if x.size == 0:
        raise InvalidParameter("KS needs a nonempty sample")
    if x[0] < 0 or x[-1] > 1:
        raise InvalidParameter("values must lie in [0, 1]")
    i = np.arange(1, x.size + 1)
    return float(max(np.max(i / x.size - x), np.max(x - (i - 1) / x.size)))


def ks_critical_one_sample(n: int, slack: float = 1.0) -> float:
    return slack * KS_COEF_95 / np.sqrt(n)


def ks_critical_two_sample(n1: int, n2: int, slack: float = 1.0) -> float:
    return slack * KS_COEF_95 * np.sqrt((n1 + n2) / (n1 * n2))


# -- means and rates -------------------------------------------------------------

def mean_ci(a, level: float = 0.95):
    """CLT interval: returns (mean, halfwidth)."""
    x = np.asarray(a, dtype=float)
    if x.size < 2:
        raise InvalidParameter("need at least two samples")
    if not 0 < level < 1:
        raise InvalidParameter("level must be in (0, 1)")
    z = NormalDist().inv_cdf(0.5 + level / 2)
    return float(x.mean()), float(z * x.std(ddof=1) / np.sqrt(x.size))


def median_rate_slope(points: Sequence[tuple]) -> float:
    """Least-squares slope of log(median error) against log(n)."""
    if len(points) < 3:
        raise InvalidParameter("need at least three (n, median) points")
    n = np.array([p[0] for p in points], dtype=float)
    med = np.array([p[1] for p in points], dtype=float)
    if np.unique(n).size != n.size:
        raise InvalidParameter("n values must be distinct")
    if np.any(med <= 0) or np.any(n <= 0):
        raise InvalidParameter("medians and n must be positive")
    slope, _ = np.polyfit(np.log(n), np.log(med), 1)
    return float(slope)


# -- zeta and beta ---------------------------------------------------------------

_DPS = 60


def _eta_euler(s, terms: int = 110):
    """Dirichlet eta by the Euler transform of its alternating series.

    eta(s) = sum_n 2^-(n+1) sum_k (-1)^k C(n,k) (k+1)^-s; the binomial sums
    cancel heavily, hence the 60-digit working precision.
    """
    with mpmath.workdps(_DPS):
        s = mpmath.mpf(s)
        a = [mpmath.mpf(k + 1) ** (-s) for k in range(terms)]
        total = mpmath.mpf(0)
        for n in range(terms):
            c = 1
            inner = mpmath.mpf(0)
            for k in range(n + 1):
                inner += c * a[k] if k % 2 == 0 else -c * a[k]
                c = c * (n - k) // (k + 1)
            total += inner / mpmath.mpf(2) ** (n + 1)
        return total


def zeta_via_eta(s):
    """zeta(s) = eta(s) / (1 - 2^(1-s)), valid for real s != 1."""
    with mpmath.workdps(_DPS):
        s = mpmath.mpf(s)
        return _eta_euler(s) / (1 - mpmath.mpf(2) ** (1 - s))


def _bernoulli_even(p: int):
    """B_2, B_4, ..., B_2p as Fractions (Akiyama-Tanigawa)."""
    out = []
    a = [Fraction(0)] * (2 * p + 1)
    for m in range(2 * p + 1):
        a[m] = Fraction(1, m + 1)
        for j in range(m, 0, -1):
            a[j - 1] = j * (a[j - 1] - a[j])
        if m >= 2 and m % 2 == 0:
            out.append(a[0])
    return out


def zeta_euler_maclaurin(s, n_direct: int = 30, p: int = 20):
    """Independent zeta evaluator: direct sum plus Euler-Maclaurin tail."""
    with mpmath.workdps(_DPS):
        s = mpmath.mpf(s)
        N = mpmath.mpf(n_direct)
        total = mpmath.fsum(mpmath.mpf(k) ** (-s) for k in range(1, n_direct))
        total += N ** (1 - s) / (s - 1) + N ** (-s) / 2
        rising = s  # s (s+1) ... (s+2j-2)
        fact = mpmath.mpf(2)
        for j, b2j in enumerate(_bernoulli_even(p), start=1):
            term = mpmath.mpf(b2j.numerator) / b2j.denominator / fact * rising * N ** (-s - 2 * j + 1)
            total += term
            rising *= (s + 2 * j - 1) * (s + 2 * j)
            fact *= (2 * j + 1) * (2 * j + 2)
        return total


@functools.lru_cache(maxsize=None)
def beta_constant() -> float:
    """-zeta(1/2) / sqrt(2 pi), about 0.5825971579."""
    with mpmath.workdps(_DPS):
        z = zeta_via_eta(mpmath.mpf(1) / 2)
        return float(-z / mpmath.sqrt(2 * mpmath.pi))


def beta_oracle() -> float:
    with mpmath.workdps(_DPS):
        z = zeta_euler_maclaurin(mpmath.mpf(1) / 2)
        return float(-z / mpmath.sqrt(2 * mpmath.pi))


def read_column_csv(path, column: str) -> np.ndarray:
    """Load one named column of an emitted sample CSV."""
    with open(path) as fh:
        header = fh.readline().strip().split(",")
    idx = header.index(column)
    return np.loadtxt(path, delimiter=",", skiprows=1, usecols=[idx], ndmin=1)
