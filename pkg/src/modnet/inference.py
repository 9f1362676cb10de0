"""Modularity-based tests, their analytic power, and generic two-sample tests."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import special

from .asymptotics import moments
from .errors import DomainError

__all__ = [
    "TestResult",
    "PowerSpec",
    "normal_cdf",
    "normal_quantile",
    "two_sided_pvalue",
    "t_statistic_L",
    "t_statistic_S",
    "modularity_test",
    "analytic_power_L",
    "analytic_power_S",
    "ks_two_sample",
    "ks_normal",
    "ks_distance_normal",
    "normality_screen",
    "t_test",
]


@dataclass(frozen=True)
class TestResult:
    statistic: float
    pvalue: float
    kind: str

    __test__ = False  # keep pytest from collecting this class


@dataclass(frozen=True)
class PowerSpec:
    """Simple null ``B0`` against simple alternative ``B1``."""

    B0: np.ndarray
    B1: np.ndarray
    pi: np.ndarray
    rho: float
    n: int
    alpha: float = 0.05

    def __post_init__(self):
        for name in ("B0", "B1"):
            B = np.asarray(getattr(self, name), dtype=float)
            if np.any(B <= 0) or np.any(B >= 1) or not np.allclose(B, B.T):
                raise DomainError(f"{name} must be symmetric with entries in (0, 1)")
            object.__setattr__(self, name, B)
        object.__setattr__(self, "pi", np.asarray(self.pi, dtype=float))
        if not 0 < self.alpha < 1:
            raise DomainError(f"alpha must lie in (0, 1), got {self.alpha}")
        if not 0 < self.rho <= 1:
            raise DomainError(f"rho must lie in (0, 1], got {self.rho}")


def normal_cdf(x):
    return special.ndtr(x)


def normal_quantile(p):
    p = np.asarray(p, dtype=float)
    if np.any((p <= 0) | (p >= 1)):
        raise DomainError(f"normal quantile needs 0 < p < 1, got {p}")
    out = special.ndtri(p)
    return float(out) if out.ndim == 0 else out


def two_sided_pvalue(t):
    return float(2 * special.ndtr(-abs(t)))


def _sd(variance, label):
    if not variance > 0:
        raise DomainError(f"{label} null variance is {variance}; statistic undefined")
    return np.sqrt(variance)


def t_statistic_L(ql_scaled, B0, pi, regime):
    """Scaled likelihood modularity (computed against ``B0``) over its null sd."""
    m = moments("L", B0, pi, regime)
    return ql_scaled / _sd(m.variance, "likelihood")


def t_statistic_S(qs_scaled, B0, pi, rho, regime):
    """Scaled spectral modularity, centred by the null bias, over its null sd."""
    m = moments("S", B0, pi, regime)
    return (qs_scaled - m.bias / np.sqrt(rho)) / _sd(m.variance, "spectral")


def modularity_test(q_scaled, variant, B0, pi, rho, regime):
    """Two-sided z-test of ``H0: B = B0`` from one scaled modularity value."""
    variant = variant.upper()
    if variant == "L":
        t = t_statistic_L(q_scaled, B0, pi, regime)
    elif variant == "S":
        t = t_statistic_S(q_scaled, B0, pi, rho, regime)
    else:
        raise DomainError("tests are defined for the L and S variants only")
    return TestResult(float(t), two_sided_pvalue(t), f"T_{variant}")


def _power(mu, sigma, alpha):
    z = normal_quantile(1 - alpha / 2)
    return float(1 - normal_cdf(mu + sigma * z) + normal_cdf(mu - sigma * z))


def _diag_shift(spec):
    return spec.n * np.sqrt(spec.rho) * float(
        (spec.pi**2 * (np.diag(spec.B0) - np.diag(spec.B1))).sum()
    )


def analytic_power_L(spec: PowerSpec, regime="dense"):
    """Normal-approximation power of the two-sided ``T_L`` test."""
    v0 = moments("L", spec.B0, spec.pi, regime).variance
    v1 = moments("L", spec.B1, spec.pi, regime).variance
    sigma = _sd(v0, "likelihood") / _sd(v1, "likelihood")
    mu = _diag_shift(spec) / np.sqrt(v1)
    return _power(mu, sigma, spec.alpha)


def analytic_power_S(spec: PowerSpec, regime="dense"):
    """Normal-approximation power of the two-sided ``T_S`` test."""
    m0 = moments("S", spec.B0, spec.pi, regime)
    m1 = moments("S", spec.B1, spec.pi, regime)
    sigma = _sd(m0.variance, "spectral") / _sd(m1.variance, "spectral")
    mu = (_diag_shift(spec) + (m0.bias - m1.bias) / np.sqrt(spec.rho)) / np.sqrt(m1.variance)
    return _power(mu, sigma, spec.alpha)


def _kolmogorov_pvalue(stat, size):
    return float(min(1.0, max(0.0, special.kolmogorov(np.sqrt(size) * stat))))


def ks_two_sample(x, y):
    """Two-sided two-sample Kolmogorov-Smirnov test (asymptotic p-value)."""
    x = np.sort(np.asarray(x, dtype=float))
    y = np.sort(np.asarray(y, dtype=float))
    if x.size < 2 or y.size < 2:
        raise DomainError("each sample needs at least two observations")
    pts = np.concatenate([x, y])
    fx = np.searchsorted(x, pts, side="right") / x.size
    fy = np.searchsorted(y, pts, side="right") / y.size
    D = float(np.max(np.abs(fx - fy)))
    ne = x.size * y.size / (x.size + y.size)
    return TestResult(D, _kolmogorov_pvalue(D, ne), "ks_2samp")


def ks_distance_normal(x, mean=0.0, var=1.0):
    """Sup distance between the empirical CDF of ``x`` and ``N(mean, var)``."""
    x = np.sort(np.asarray(x, dtype=float))
    if var <= 0:
        raise DomainError(f"variance must be positive, got {var}")
    n = x.size
    F = normal_cdf((x - mean) / np.sqrt(var))
    i = np.arange(1, n + 1)
    return float(max(np.max(i / n - F), np.max(F - (i - 1) / n)))


def ks_normal(x, mean, var):
    """One-sample KS test of ``x`` against ``N(mean, var)``.

    With ``mean``/``var`` estimated from ``x`` itself the p-value is
    conservative (the Lilliefors effect).
    """
    x = np.asarray(x, dtype=float)
    if x.size < 8:
        raise DomainError("one-sample KS screen needs at least 8 observations")
    D = ks_distance_normal(x, mean, var)
    return TestResult(D, _kolmogorov_pvalue(D, x.size), "ks_normal")


def normality_screen(x):
    """KS test against a normal with the sample's own mean and variance."""
    x = np.asarray(x, dtype=float)
    return ks_normal(x, float(x.mean()), float(x.var(ddof=1)))


def t_test(x, y, equal_variance=True):
    """Two-sided two-sample t-test, pooled or Welch-Satterthwaite."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    nx, ny = x.size, y.size
    if nx < 2 or ny < 2:
        raise DomainError("each sample needs at least two observations")
    vx, vy = x.var(ddof=1), y.var(ddof=1)
    if vx == 0 and vy == 0:
        raise DomainError("both samples have zero variance")
    diff = x.mean() - y.mean()
    if equal_variance:
        df = nx + ny - 2
        sp2 = ((nx - 1) * vx + (ny - 1) * vy) / df
        se = np.sqrt(sp2 * (1 / nx + 1 / ny))
        kind = "t_pooled"
    else:
        a, b = vx / nx, vy / ny
        se = np.sqrt(a + b)
        df = (a + b) ** 2 / (a**2 / (nx - 1) + b**2 / (ny - 1))
        kind = "t_welch"
    t = float(diff / se)
    p = float(2 * special.stdtr(df, -abs(t)))
    return TestResult(t, min(p, 1.0), kind)
