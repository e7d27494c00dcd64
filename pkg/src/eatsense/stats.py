"""Two-class descriptive statistics: pooled t, Cohen's d, significance table.

The t test uses the pooled-variance form so its denominator matches the
pooled standard deviation in Cohen's d. Two-sided p-values come from an
in-house regularized incomplete beta function, and the d confidence interval
uses the usual normal approximation for a standardized mean difference.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


def _betacf(a: float, b: float, x: float) -> float:
    """Continued fraction for the incomplete beta (modified Lentz)."""
    MAXIT = 300
    EPS = 3e-16
    FPMIN = 1e-300
    qab = a + b
    qap = a + 1.0
    qam = a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < FPMIN:
        d = FPMIN
    d = 1.0 / d
    h = d
    for m in range(1, MAXIT + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < FPMIN:
            d = FPMIN
        c = 1.0 + aa / c
        if abs(c) < FPMIN:
            c = FPMIN
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < FPMIN:
            d = FPMIN
        c = 1.0 + aa / c
        if abs(c) < FPMIN:
            c = FPMIN
        d = 1.0 / d
        de = d * c
        h *= de
        if abs(de - 1.0) < EPS:
            return h
    raise RuntimeError("incomplete beta did not converge")


def betainc_reg(a: float, b: float, x: float) -> float:
    """Regularized incomplete beta I_x(a, b) for a, b > 0 and x in [0, 1]."""
    if not 0.0 <= x <= 1.0:
        raise ValueError("x outside [0, 1]")
    if x == 0.0:
        return 0.0
    if x == 1.0:
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


def t_sf_two_sided(t: float, df: float) -> float:
    """Two-sided p-value for a t statistic with df degrees of freedom."""
    if df <= 0:
        raise ValueError("degrees of freedom must be positive")
    if t == 0.0:
        return 1.0
    x = df / (df + t * t)
    return betainc_reg(df / 2.0, 0.5, x)


def _pooled(a: np.ndarray, b: np.ndarray) -> tuple[float, float, float, int, int]:
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    na, nb = a.size, b.size
    if na < 2 or nb < 2:
        raise ValueError("each group needs at least two samples")
    va = a.var(ddof=1)
    vb = b.var(ddof=1)
    sp2 = ((na - 1) * va + (nb - 1) * vb) / (na + nb - 2)
    if sp2 <= 0.0:
        raise ValueError("degenerate variance")
    return float(a.mean()), float(b.mean()), math.sqrt(sp2), na, nb


def two_sample_t(a, b) -> tuple[float, float]:
    """Student's pooled two-sample t and its two-sided p-value."""
    ma, mb, sp, na, nb = _pooled(a, b)
    se = sp * math.sqrt(1.0 / na + 1.0 / nb)
    t = (ma - mb) / se
    return t, t_sf_two_sided(t, na + nb - 2)


def cohens_d_ci(a, b) -> tuple[float, float, float]:
    """Cohen's d (pooled, nonnegative) with a 95% normal-approximation CI."""
    ma, mb, sp, na, nb = _pooled(a, b)
    d = abs(ma - mb) / sp
    se_d = math.sqrt((na + nb) / (na * nb) + d * d / (2.0 * (na + nb)))
    return d, d - 1.96 * se_d, d + 1.96 * se_d


def p_stars(p: float) -> str:
    if p <= 1e-4:
        return "****"
    if p <= 1e-3:
        return "***"
    if p <= 1e-2:
        return "**"
    return ""


@dataclass
class FeatureComparison:
    feature: str
    mean_eating: float
    std_eating: float
    mean_noneating: float
    std_noneating: float
    t: float  # positive iff the eating mean is larger
    p: float
    stars: str
    d: float
    ci: tuple[float, float]


def feature_significance(x: np.ndarray, labels: np.ndarray, names, top_k: int | None = None) -> list[FeatureComparison]:
    """Eating vs non-eating comparison per feature, sorted by descending |t|.

    Features with degenerate pooled variance are skipped. ``top_k`` trims the
    ranked list.
    """
    labels = np.asarray(labels)
    if np.unique(labels).size != 2:
        raise ValueError("need both classes to compare")
    eat = np.asarray(x)[labels == 1]
    non = np.asarray(x)[labels == 0]
    rows: list[FeatureComparison] = []
    for j, name in enumerate(names):
        a = eat[:, j]
        b = non[:, j]
        try:
            t, p = two_sample_t(a, b)
            d, lo, hi = cohens_d_ci(a, b)
        except ValueError:
            continue
        rows.append(
            FeatureComparison(
                name,
                float(a.mean()), float(a.std(ddof=1)),
                float(b.mean()), float(b.std(ddof=1)),
                t, p, p_stars(p), d, (lo, hi),
            )
        )
    rows.sort(key=lambda r: (-abs(r.t), r.feature))
    if top_k is not None:
        rows = rows[:top_k]
    return rows


def significance_csv_rows(rows: list[FeatureComparison]) -> list[list[str]]:
    out = [[
        "feature", "eating_mean", "eating_std", "noneating_mean", "noneating_std",
        "t", "p", "stars", "cohens_d", "ci_lo", "ci_hi",
    ]]
    for r in rows:
        sign = "(+)" if r.t >= 0 else "(-)"
        out.append([
            r.feature,
            f"{r.mean_eating:.4f}", f"{r.std_eating:.4f}",
            f"{r.mean_noneating:.4f}", f"{r.std_noneating:.4f}",
            f"{sign} {abs(r.t):.4f}", repr(r.p), r.stars,
            f"{r.d:.4f}", f"{r.ci[0]:.2f}", f"{r.ci[1]:.2f}",
        ])
    return out


def significance_markdown(rows: list[FeatureComparison]) -> str:
    lines = [
        "| Feature | eating mean (std) | non-eating mean (std) | t | p | Cohen's d [95% CI] |",
        "| --- | --- | --- | --- | --- | --- |",
    ]
    for r in rows:
        sign = "(+)" if r.t >= 0 else "(-)"
        lines.append(
            f"| {r.feature} | {r.mean_eating:.2f} ({r.std_eating:.2f}) "
            f"| {r.mean_noneating:.2f} ({r.std_noneating:.2f}) "
            f"| {sign} {abs(r.t):.4f} | {r.stars or 'n.s.'} "
            f"| {r.d:.4f} [{r.ci[0]:.2f}, {r.ci[1]:.2f}] |"
        )
    return "\n".join(lines) + "\n"
