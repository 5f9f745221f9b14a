"""Session statistics: min-max performance scores, Anderson-Darling
normality gate, and Student t tests.

The performance score for session i is

    S_i = (t_max - t_i) / (t_max - t_min)

so the fastest session scores 1 and the slowest 0.  The normality check is
the one-sample Anderson-Darling statistic with estimated mean and variance,
using Stephens' small-sample modification A*2 = A2 * (1 + 0.75/n + 2.25/n^2)
and the 5% critical value 0.752 for the both-parameters-estimated case
(standard statistical tables).  Student-t p-values come from a
continued-fraction evaluation of the regularized incomplete beta function,
accurate to well under 1e-8.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

__all__ = [
    "AD_CRITICAL_5PCT",
    "DegenerateRange",
    "DegenerateVariance",
    "LengthMismatch",
    "ScoreReport",
    "StatsError",
    "TestResult",
    "TooFewSamples",
    "ZeroVariance",
    "ad_normality",
    "normal_cdf",
    "paired_t",
    "performance_scores",
    "student_t_two_sided_p",
    "welch_t",
]

AD_CRITICAL_5PCT = 0.752


class StatsError(Exception):
    pass


class TooFewSamples(StatsError):
    pass


class DegenerateRange(StatsError):
    """All completion times equal; the score denominator vanishes."""


class ZeroVariance(StatsError):
    pass


class DegenerateVariance(StatsError):
    pass


class LengthMismatch(StatsError):
    pass


@dataclass(frozen=True)
class ScoreReport:
    scores: tuple[tuple[str, float], ...]
    t_min: float
    t_max: float


@dataclass(frozen=True)
class TestResult:
    statistic: float
    threshold_or_p: float
    reject: bool
    n: int
    kind: str = ""
    df: float | None = None


def performance_scores(
    times: Sequence[float], ids: Sequence[str] | None = None
) -> ScoreReport:
    """Min-max normalized completion-time scores, fastest = 1, slowest = 0."""
    if len(times) < 2:
        raise TooFewSamples(f"need at least 2 sessions, got {len(times)}")
    if any(t <= 0 for t in times):
        raise StatsError("completion times must be positive")
    if ids is None:
        ids = [f"s{i + 1}" for i in range(len(times))]
    if len(ids) != len(times):
        raise LengthMismatch("ids and times differ in length")
    t_min, t_max = min(times), max(times)
    if t_max == t_min:
        raise DegenerateRange("all completion times equal; scores undefined")
    span = t_max - t_min
    scores = tuple(
        (sid, (t_max - t) / span) for sid, t in zip(ids, times)
    )
    return ScoreReport(scores=scores, t_min=float(t_min), t_max=float(t_max))


def normal_cdf(x: float) -> float:
    """Standard normal CDF via the complementary error function."""
    return 0.5 * math.erfc(-x / math.sqrt(2.0))


def ad_normality(sample: Sequence[float], alpha: float = 0.05) -> TestResult:
    """Anderson-Darling normality test with estimated mean and variance.

    Rejects at the 5% level when the modified statistic exceeds 0.752.
    Only ``alpha=0.05`` has a tabulated threshold here.
    """
    if alpha != 0.05:
        raise StatsError("only the 5% level is tabulated")
    n = len(sample)
    if n < 8:
        raise TooFewSamples(f"need at least 8 samples, got {n}")
    xs = sorted(float(v) for v in sample)
    mean = sum(xs) / n
    var = sum((v - mean) ** 2 for v in xs) / (n - 1)
    if var <= 0.0:
        raise ZeroVariance("sample variance is zero")
    sd = math.sqrt(var)
    z = [normal_cdf((v - mean) / sd) for v in xs]
    tiny = 1e-300
    acc = 0.0
    for i in range(n):
        zi = min(max(z[i], tiny), 1.0 - 1e-16)
        zr = min(max(z[n - 1 - i], tiny), 1.0 - 1e-16)
        acc += (2 * i + 1) * (math.log(zi) + math.log1p(-zr))
    a2 = -n - acc / n
    a2_mod = a2 * (1.0 + 0.75 / n + 2.25 / (n * n))
    return TestResult(
        statistic=a2_mod,
        threshold_or_p=AD_CRITICAL_5PCT,
        reject=a2_mod > AD_CRITICAL_5PCT,
        n=n,
        kind="anderson-darling",
    )


# -- Student t machinery --------------------------------------------------


def _betacf(a: float, b: float, x: float) -> float:
    """Continued fraction for the incomplete beta function (Lentz's method)."""
    tiny = 1e-300
    qab, qap, qam = a + b, a + 1.0, a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < tiny:
        d = tiny
    d = 1.0 / d
    h = d
    for m in range(1, 300):
        m2 = 2 * m
        # even step
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < tiny:
            d = tiny
        c = 1.0 + aa / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        h *= d * c
        # odd step
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < tiny:
            d = tiny
        c = 1.0 + aa / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < 1e-15:
            return h
    raise StatsError("incomplete beta continued fraction did not converge")


def _betainc_reg(a: float, b: float, x: float) -> float:
    """Regularized incomplete beta I_x(a, b)."""
    if x <= 0.0:
        return 0.0
    if x >= 1.0:
        return 1.0
    ln_front = (
        math.lgamma(a + b)
        - math.lgamma(a)
        - math.lgamma(b)
        + a * math.log(x)
        + b * math.log1p(-x)
    )
    front = math.exp(ln_front)
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _betacf(a, b, x) / a
    return 1.0 - front * _betacf(b, a, 1.0 - x) / b


def student_t_two_sided_p(t: float, df: float) -> float:
    """Two-sided p-value of Student's t distribution with ``df`` degrees."""
    if df <= 0:
        raise StatsError("degrees of freedom must be positive")
    if math.isinf(t):
        return 0.0
    return _betainc_reg(df / 2.0, 0.5, df / (df + t * t))


def _mean_sd(values: Sequence[float]) -> tuple[float, float]:
    n = len(values)
    mean = sum(values) / n
    var = sum((v - mean) ** 2 for v in values) / (n - 1)
    return mean, math.sqrt(var)


def paired_t(
    a: Sequence[float], b: Sequence[float], alpha: float = 0.05
) -> TestResult:
    """Paired two-sided Student t test on the per-pair differences a - b."""
    if len(a) != len(b):
        raise LengthMismatch(f"paired samples differ in length: {len(a)} vs {len(b)}")
    n = len(a)
    if n < 2:
        raise TooFewSamples(f"need at least 2 pairs, got {n}")
    d = [float(x) - float(y) for x, y in zip(a, b)]
    mean, sd = _mean_sd(d)
    if sd <= 0.0:
        raise DegenerateVariance("all paired differences are equal")
    t = mean / (sd / math.sqrt(n))
    df = n - 1
    p = student_t_two_sided_p(t, df)
    return TestResult(
        statistic=t,
        threshold_or_p=p,
        reject=p < alpha,
        n=n,
        kind="paired-t",
        df=float(df),
    )


def welch_t(
    a: Sequence[float], b: Sequence[float], alpha: float = 0.05
) -> TestResult:
    """Welch's independent-samples two-sided t test (unequal variances)."""
    if len(a) < 2 or len(b) < 2:
        raise TooFewSamples("each sample needs at least 2 values")
    mean_a, sd_a = _mean_sd([float(v) for v in a])
    mean_b, sd_b = _mean_sd([float(v) for v in b])
    se_a = sd_a**2 / len(a)
    se_b = sd_b**2 / len(b)
    if se_a + se_b <= 0.0:
        raise DegenerateVariance("both samples are constant")
    t = (mean_a - mean_b) / math.sqrt(se_a + se_b)
    df = (se_a + se_b) ** 2 / (
        se_a**2 / (len(a) - 1) + se_b**2 / (len(b) - 1)
    )
    p = student_t_two_sided_p(t, df)
    return TestResult(
        statistic=t,
        threshold_or_p=p,
        reject=p < alpha,
        n=len(a) + len(b),
        kind="welch-t",
        df=df,
    )
