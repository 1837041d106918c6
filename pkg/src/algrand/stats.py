"""Two-sample comparison: Kolmogorov-Smirnov, Shapiro-Wilk gate, Welch's t."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from statistics import NormalDist
from typing import Mapping, Optional, Sequence

import numpy as np

P_SIGNIFICANT = 0.005
P_NORMAL = 0.05

_STD_NORMAL = NormalDist()


@dataclass(frozen=True)
class Dataset:
    values: np.ndarray
    label: str = ""
    generator: str = ""
    test: str = ""
    orientation: str = "original"
    family: str = "prng"

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float).ravel()
        if v.size == 0:
            raise ValueError(f"dataset {self.label!r} is empty")
        if not np.all(np.isfinite(v)):
            raise ValueError(f"dataset {self.label!r} has non-finite values")
        object.__setattr__(self, "values", v)
        if not self.label and not self.generator:
            raise ValueError("dataset needs a label or a generator name")
        if not self.generator:
            object.__setattr__(self, "generator", self.label)
        if not self.label:
            object.__setattr__(self, "label", f"{self.generator}/{self.test}/{self.orientation}")

    def __len__(self) -> int:
        return self.values.size


def _values(a) -> np.ndarray:
    return a.values if isinstance(a, Dataset) else np.asarray(a, dtype=float).ravel()


# -- Kolmogorov-Smirnov ---------------------------------------------------


def kolmogorov_sf(lam: float) -> float:
    """P(K > lam) for the limiting Kolmogorov distribution."""
    if lam <= 0:
        return 1.0
    if lam < 1.0:
        # theta-function form, fast for small arguments
        q = math.exp(-(math.pi**2) / (8 * lam * lam))
        total = 0.0
        for j in range(1, 40, 2):
            term = q ** (j * j)
            total += term
            if term < 1e-17 * total:
                break
        return min(1.0, max(0.0, 1.0 - math.sqrt(2 * math.pi) / lam * total))
    total = 0.0
    for j in range(1, 101):
        term = math.exp(-2.0 * j * j * lam * lam)
        total += term if j % 2 else -term
        if term < 1e-300 or term < 1e-17 * abs(total):
            break
    return min(1.0, max(0.0, 2.0 * total))


KS_EXACT_MAX = 10_000


def _ks_lattice(x: np.ndarray, y: np.ndarray) -> int:
    """h = max |F_x * nx * ny - F_y * nx * ny| as an exact integer; D = h / (nx ny)."""
    x, y = np.sort(x), np.sort(y)
    pooled = np.concatenate([x, y])
    cx = np.searchsorted(x, pooled, side="right").astype(np.int64)
    cy = np.searchsorted(y, pooled, side="right").astype(np.int64)
    return int(np.max(np.abs(cx * y.size - cy * x.size)))


def ks_statistic(a, b) -> float:
    x, y = _values(a), _values(b)
    return _ks_lattice(x, y) / (x.size * y.size)


def ks_exact_sf(h: int, m: int, n: int) -> float:
    """P(D >= h / (m n)) under H0, by first passage of a random lattice path.

    A path from (0, 0) to (m, n) taken uniformly at random is absorbed the
    first time |i n - j m| >= h; the absorbed mass is the p-value.
    """
    if h <= 0:
        return 1.0
    i = np.arange(m + 1)
    prob = np.zeros(m + 1)
    prob[0] = 1.0
    hit = 0.0
    for s in range(1, m + n + 1):
        left = m + n - (s - 1)
        j_prev = s - 1 - i
        step_i = (m - i) / left
        step_j = np.clip(n - j_prev, 0, None) / left
        new = prob * step_j
        new[1:] += prob[:-1] * step_i[:-1]
        j = s - i
        out = (np.abs(i * n - j * m) >= h) & (j >= 0) & (j <= n)
        hit += float(new[out].sum())
        new[out] = 0.0
        prob = new
    return min(1.0, hit)


def ks_two_sample(a, b, method: str = "auto") -> tuple[float, float]:
    """(D, p), two-sided.

    ``method="exact"`` uses the lattice-path null distribution,
    ``"asymptotic"`` the limiting Kolmogorov distribution at sqrt(en) D, and
    ``"auto"`` picks exact while both samples have at most KS_EXACT_MAX values.
    """
    if method not in ("auto", "exact", "asymptotic"):
        raise ValueError(f"unknown KS method {method!r}")
    x, y = _values(a), _values(b)
    if x.size < 2 or y.size < 2:
        raise ValueError("KS test needs at least 2 values per sample")
    h = _ks_lattice(x, y)
    d = h / (x.size * y.size)
    if method == "exact" or (method == "auto" and max(x.size, y.size) <= KS_EXACT_MAX):
        return d, ks_exact_sf(h, x.size, y.size)
    en = x.size * y.size / (x.size + y.size)
    return d, kolmogorov_sf(math.sqrt(en) * d)


# -- Shapiro-Wilk (Royston 1995, AS R94) ----------------------------------

_C1 = (0.0, 0.221157, -0.147981, -2.071190, 4.434685, -2.706056)
_C2 = (0.0, 0.042981, -0.293762, -1.752461, 5.682633, -3.582633)
_C3 = (0.5440, -0.39978, 0.025054, -6.714e-4)
_C4 = (1.3822, -0.77857, 0.062767, -0.0020322)
_C5 = (-1.5861, -0.31082, -0.083751, 0.0038915)
_C6 = (-0.4803, -0.082676, 0.0030302)
_G = (-2.273, 0.459)


def _poly(coeffs: Sequence[float], x: float) -> float:
    """coeffs[0] + coeffs[1] x + coeffs[2] x^2 + ..."""
    result = 0.0
    for c in reversed(coeffs):
        result = result * x + c
    return result


def _sw_coefficients(n: int) -> np.ndarray:
    """Antisymmetric weights a_1..a_n (ascending order statistics), sum a^2 = 1."""
    half = n // 2
    if n == 3:
        upper = np.array([math.sqrt(0.5)])
    else:
        m = np.array([_STD_NORMAL.inv_cdf((i - 0.375) / (n + 0.25)) for i in range(1, half + 1)])
        summ2 = 2.0 * float(np.sum(m * m))
        ssumm2 = math.sqrt(summ2)
        rsn = 1.0 / math.sqrt(n)
        a1 = _poly(_C1, rsn) - m[0] / ssumm2
        if n > 5:
            a2 = -m[1] / ssumm2 + _poly(_C2, rsn)
            fac = math.sqrt((summ2 - 2 * m[0] ** 2 - 2 * m[1] ** 2) / (1 - 2 * a1**2 - 2 * a2**2))
            upper = -m / fac
            upper[1] = a2
        else:
            fac = math.sqrt((summ2 - 2 * m[0] ** 2) / (1 - 2 * a1**2))
            upper = -m / fac
        upper[0] = a1
    a = np.zeros(n)
    a[n - half :] = upper[::-1]
    a[:half] = -upper
    return a


def shapiro_wilk(a) -> tuple[float, float]:
    """(W, p) for 3 <= n <= 5000."""
    x = np.sort(_values(a))
    n = x.size
    if not 3 <= n <= 5000:
        raise ValueError(f"Shapiro-Wilk needs 3 <= n <= 5000, got {n}")
    if x[-1] - x[0] < 1e-19 * max(1.0, abs(x[0])):
        raise ValueError("Shapiro-Wilk undefined for constant data")
    coef = _sw_coefficients(n)
    centered = x - x.mean()
    w = float(np.dot(coef, x) ** 2 / np.dot(centered, centered))
    w = min(w, 1.0)

    if n == 3:
        p = 6 / math.pi * (math.asin(math.sqrt(w)) - math.pi / 3)
        return w, min(1.0, max(0.0, p))
    w1 = 1.0 - w
    if w1 <= 0:
        return w, 1.0
    y = math.log(w1)
    if n <= 11:
        gamma = _poly(_G, n)
        if y >= gamma:
            return w, 1e-99
        y = -math.log(gamma - y)
        mean = _poly(_C3, n)
        sd = math.exp(_poly(_C4, n))
    else:
        ln = math.log(n)
        mean = _poly(_C5, ln)
        sd = math.exp(_poly(_C6, ln))
    p = 0.5 * math.erfc((y - mean) / (sd * math.sqrt(2.0)))
    return w, min(1.0, max(0.0, p))


# -- Welch's t-test -------------------------------------------------------


def _betacf(a: float, b: float, x: float) -> float:
    """Continued fraction for the incomplete beta function (modified Lentz)."""
    tiny = 1e-300
    qab, qap, qam = a + b, a + 1.0, a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    d = 1.0 / (d if abs(d) > tiny else tiny)
    h = d
    for m in range(1, 10000):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        d = 1.0 / (d if abs(d) > tiny else tiny)
        c = 1.0 + aa / c
        c = c if abs(c) > tiny else tiny
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        d = 1.0 / (d if abs(d) > tiny else tiny)
        c = 1.0 + aa / c
        c = c if abs(c) > tiny else tiny
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < 1e-15:
            return h
    raise ArithmeticError("incomplete beta continued fraction did not converge")


def betainc(a: float, b: float, x: float) -> float:
    """Regularized incomplete beta I_x(a, b)."""
    if not 0.0 <= x <= 1.0:
        raise ValueError("x must lie in [0, 1]")
    if x == 0.0 or x == 1.0:
        return x
    log_front = (
        math.lgamma(a + b) - math.lgamma(a) - math.lgamma(b) + a * math.log(x) + b * math.log1p(-x)
    )
    front = math.exp(log_front)
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _betacf(a, b, x) / a
    return 1.0 - front * _betacf(b, a, 1.0 - x) / b


def student_t_sf2(t: float, dof: float) -> float:
    """Two-sided tail probability P(|T| > |t|) for Student's t."""
    if dof <= 0:
        raise ValueError("degrees of freedom must be positive")
    return betainc(dof / 2.0, 0.5, dof / (dof + t * t))


def welch_t(a, b) -> tuple[float, float, float]:
    """(t, Welch-Satterthwaite dof, two-sided p)."""
    x, y = _values(a), _values(b)
    if x.size < 2 or y.size < 2:
        raise ValueError("Welch's test needs at least 2 values per sample")
    vx = float(np.var(x, ddof=1)) / x.size
    vy = float(np.var(y, ddof=1)) / y.size
    if vx == 0 and vy == 0:
        raise ValueError("Welch's test undefined when both samples have zero variance")
    se2 = vx + vy
    t = (float(x.mean()) - float(y.mean())) / math.sqrt(se2)
    dof = se2 * se2 / (vx * vx / (x.size - 1) + vy * vy / (y.size - 1))
    return t, dof, student_t_sf2(t, dof)


# -- pairwise comparison --------------------------------------------------


@dataclass(frozen=True)
class ComparisonReport:
    a: str
    b: str
    kind: str  # same-orientation | cross-orientation | self
    ks_statistic: Optional[float] = None
    ks_p: Optional[float] = None
    sw_p_a: Optional[float] = None
    sw_p_b: Optional[float] = None
    welch_applied: bool = False
    welch_t: Optional[float] = None
    welch_dof: Optional[float] = None
    welch_p: Optional[float] = None
    significant_ks: bool = False
    significant_welch: bool = False
    skipped: Optional[str] = None


def _safe_sw(d: Dataset) -> tuple[Optional[float], Optional[str]]:
    try:
        return shapiro_wilk(d)[1], None
    except ValueError as exc:
        return None, str(exc)


def compare_pair(
    a: Dataset,
    b: Dataset,
    kind: str = "same-orientation",
    sig_threshold: float = P_SIGNIFICANT,
    normal_threshold: float = P_NORMAL,
) -> ComparisonReport:
    """KS on every pair; Welch only when both Shapiro-Wilk p >= normal_threshold."""
    try:
        d, ks_p = ks_two_sample(a, b)
    except ValueError as exc:
        return ComparisonReport(a.label, b.label, kind, skipped=str(exc))
    sw_a, why_a = _safe_sw(a)
    sw_b, why_b = _safe_sw(b)
    report = dict(
        a=a.label, b=b.label, kind=kind, ks_statistic=d, ks_p=ks_p,
        sw_p_a=sw_a, sw_p_b=sw_b, significant_ks=ks_p < sig_threshold,
    )
    gate = sw_a is not None and sw_b is not None and sw_a >= normal_threshold and sw_b >= normal_threshold
    if gate:
        try:
            t, dof, wp = welch_t(a, b)
        except ValueError as exc:
            report["skipped"] = f"welch: {exc}"
        else:
            report.update(welch_applied=True, welch_t=t, welch_dof=dof, welch_p=wp,
                          significant_welch=wp < sig_threshold)
    elif why_a or why_b:
        report["skipped"] = f"shapiro-wilk: {why_a or why_b}"
    return ComparisonReport(**report)


def compare_all(
    samples: Mapping[str, Dataset] | Sequence[Dataset],
    cross: str = "family",
    include_self: bool = False,
    sig_threshold: float = P_SIGNIFICANT,
    normal_threshold: float = P_NORMAL,
) -> list[ComparisonReport]:
    """Pairwise comparison matrix.

    Same-orientation pairs are all unordered pairs of generators within an
    orientation. Cross-orientation pairs (original of one generator vs the
    complement of another, both ways) are added for pairs from different
    families when ``cross="family"``, for every generator pair with
    ``cross="all"``, and never with ``cross="none"``.
    """
    datasets = list(samples.values()) if isinstance(samples, Mapping) else list(samples)
    if len(datasets) < 2 and not include_self:
        raise ValueError("need at least two datasets to compare")
    if cross not in ("family", "all", "none"):
        raise ValueError(f"unknown cross-orientation policy {cross!r}")
    kw = dict(sig_threshold=sig_threshold, normal_threshold=normal_threshold)
    reports: list[ComparisonReport] = []
    if include_self:
        reports.extend(compare_pair(d, d, "self", **kw) for d in datasets)
    for da, db in itertools.combinations(datasets, 2):
        if da.test != db.test or da.generator == db.generator:
            continue
        if da.orientation == db.orientation:
            reports.append(compare_pair(da, db, "same-orientation", **kw))
        elif cross == "all" or (cross == "family" and da.family != db.family):
            reports.append(compare_pair(da, db, "cross-orientation", **kw))
    return reports
