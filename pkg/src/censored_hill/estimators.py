"""Statistics computed from a randomly censored sample.

Conventions: ``Z_{1:n} <= ... <= Z_{n:n}`` are the order statistics of the
observed minima and ``delta_[i:n]`` is the censoring indicator carried along
with ``Z_{i:n}``.  The number of upper order statistics ``k`` is always
supplied by the caller and must satisfy ``1 <= k < n``.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from fractions import Fraction
from statistics import NormalDist

import numpy as np

from .errors import DomainError, EstimationError
from .models import CensoredSample

__all__ = [
    "SortedSample",
    "TailFit",
    "PremiumFit",
    "sort_with_concomitants",
    "hill",
    "uncensored_fraction",
    "adapted_hill",
    "kaplan_meier_survival",
    "adapted_hill_variance",
    "premium_variance",
    "asymptotic_ci",
    "premium_se",
    "premium_estimate",
    "hill_plot",
]


@dataclass(frozen=True)
class SortedSample:
    """Observations sorted by ``z`` with their concomitant indicators."""

    z_sorted: np.ndarray
    delta_concomitant: np.ndarray

    @property
    def n(self) -> int:
        return self.z_sorted.size

    def threshold(self, k: int) -> float:
        """The intermediate order statistic ``Z_{n-k:n}``."""
        _check_k(self, k)
        return float(self.z_sorted[self.n - k - 1])


@dataclass(frozen=True)
class TailFit:
    k: int
    gamma_hat_z: float
    p_hat: float
    gamma1_hat: float
    se: float
    ci_low: float
    ci_high: float
    alpha: float
    k_source: str = "user"

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class PremiumFit:
    k: int
    premium: float
    gamma1_hat: float
    p_hat: float
    threshold: float
    km_survival_at_threshold: float
    se_scaled: float
    k_source: str = "user"

    def to_dict(self) -> dict:
        return asdict(self)


def sort_with_concomitants(sample: CensoredSample) -> SortedSample:
    """Sort ``(z, delta)`` pairs by ``z``.

    The sort is stable, so tied ``z`` values keep their input order and the
    concomitants of tied observations follow that order.
    """
    order = np.argsort(sample.z, kind="stable")
    z = sample.z[order]
    d = sample.delta[order]
    z.setflags(write=False)
    d.setflags(write=False)
    return SortedSample(z, d)


def _check_k(sorted_sample: SortedSample, k: int) -> int:
    n = sorted_sample.n
    if int(k) != k or not 1 <= k < n:
        raise DomainError(f"k must be an integer with 1 <= k < n = {n}, got {k}")
    return int(k)


def hill(sorted_sample: SortedSample, k: int) -> float:
    """Hill estimator on the observed ``Z`` sample.

    ``(1/k) sum_{i=1}^k log Z_{n-i+1:n} - log Z_{n-k:n}``.
    """
    k = _check_k(sorted_sample, k)
    z = sorted_sample.z_sorted
    n = z.size
    thr = z[n - k - 1]
    if not thr > 0:
        raise DomainError(f"threshold order statistic must be positive, got {thr}")
    # Averaging differences keeps the result exactly 0 on tied tops and >= 0 otherwise.
    return float(np.mean(np.log(z[n - k:]) - np.log(thr)))


def uncensored_fraction(sorted_sample: SortedSample, k: int) -> float:
    """Proportion of uncensored observations among the ``k`` largest."""
    k = _check_k(sorted_sample, k)
    top = sorted_sample.delta_concomitant[sorted_sample.n - k:]
    return np.count_nonzero(top) / k


def adapted_hill(sorted_sample: SortedSample, k: int) -> float:
    """Hill estimator of ``Z`` divided by the uncensored proportion ``p_hat``.

    Raises
    ------
    EstimationError
        If none of the ``k`` largest observations is uncensored.
    """
    p_hat = uncensored_fraction(sorted_sample, k)
    if p_hat == 0:
        raise EstimationError("no uncensored extreme observations")
    return hill(sorted_sample, k) / p_hat


def kaplan_meier_survival(sorted_sample: SortedSample, m: int, exact: bool = False):
    """Product-limit survival at ``Z_{m:n}``.

    Returns ``prod_{i=1}^m (1 - delta_[i:n] / (n - i + 1))`` (1 for ``m = 0``).
    Each run of consecutive uncensored observations ``a..b`` telescopes to
    ``(n - b) / (n - a + 1)``, which is what is multiplied here; without
    censoring the result is exactly ``(n - m) / n``.  With ``exact=True`` the
    product is formed in rational arithmetic and a ``Fraction`` is returned.
    """
    n = sorted_sample.n
    if int(m) != m or not 0 <= m <= n:
        raise DomainError(f"m must be an integer with 0 <= m <= n = {n}, got {m}")
    m = int(m)
    d = np.zeros(m + 2, dtype=np.int8)
    d[1:-1] = sorted_sample.delta_concomitant[:m]
    edges = np.diff(d)
    starts = np.flatnonzero(edges == 1) + 1  # 1-based first index of each run
    ends = np.flatnonzero(edges == -1)  # 1-based last index of each run
    if exact:
        out = Fraction(1)
        for a, b in zip(starts.tolist(), ends.tolist()):
            out *= Fraction(n - b, n - a + 1)
        return out
    if starts.size == 0:
        return 1.0
    factors = (n - ends) / (n - starts + 1)
    return float(np.prod(factors))


def adapted_hill_variance(gamma1: float, p: float) -> float:
    """Asymptotic variance of ``sqrt(k) (gamma1_hat - gamma1)``: ``gamma1**2 / p``."""
    if not 0 < p <= 1:
        raise DomainError(f"p must lie in (0, 1], got {p}")
    return gamma1 ** 2 / p


def premium_variance(gamma1: float, p: float) -> float:
    """Asymptotic variance of ``sqrt(k) (Pi_hat - Pi(h)) / (h (1 - F(h)))``.

    The normalized error splits into three asymptotically uncorrelated parts:
    the tail-index error ``Psi / (1 - gamma1)**2`` (variance
    ``gamma1**2 / p``), the threshold fluctuation of the top-``k`` count with
    coefficient ``p gamma1**2 / (1 - gamma1)``, and the part of the
    Kaplan-Meier error carried by observations below the threshold (variance
    ``p q``) with coefficient ``gamma1 / (1 - gamma1)``.  Without censoring
    (``p = 1``) this is ``gamma1**2 / (1 - gamma1)**2 * (gamma1**2 + (1 - gamma1)**-2)``.
    """
    if not 0 < p <= 1:
        raise DomainError(f"p must lie in (0, 1], got {p}")
    if not 0 <= gamma1 < 1:
        raise EstimationError("estimated tail index >= 1; infinite-mean regime")
    q = 1.0 - p
    c = 1.0 - gamma1
    return (
        gamma1 ** 2 / (p * c ** 4)
        + (p * gamma1 ** 2 / c) ** 2
        + p * q * (gamma1 / c) ** 2
    )


def asymptotic_ci(sorted_sample: SortedSample, k: int, alpha: float = 0.05,
                  k_source: str = "user") -> TailFit:
    """Adapted Hill estimate with a plug-in normal confidence interval.

    The standard error is ``gamma1_hat / sqrt(p_hat k)``, the plug-in version
    of the asymptotic variance ``gamma1**2 / p``.  With ``p_hat = 1`` this is
    the classical Hill interval.
    """
    if not 0 < alpha < 1:
        raise DomainError(f"alpha must lie in (0, 1), got {alpha}")
    k = _check_k(sorted_sample, k)
    gamma_hat_z = hill(sorted_sample, k)
    p_hat = uncensored_fraction(sorted_sample, k)
    if p_hat == 0:
        raise EstimationError("no uncensored extreme observations")
    gamma1_hat = gamma_hat_z / p_hat
    se = gamma1_hat / math.sqrt(p_hat * k)
    zq = NormalDist().inv_cdf(1.0 - alpha / 2.0)
    return TailFit(
        k=k,
        gamma_hat_z=gamma_hat_z,
        p_hat=p_hat,
        gamma1_hat=gamma1_hat,
        se=se,
        ci_low=gamma1_hat - zq * se,
        ci_high=gamma1_hat + zq * se,
        alpha=alpha,
        k_source=k_source,
    )


def premium_se(fit: TailFit, sorted_sample: SortedSample, k: int) -> float:
    """Standard error of the premium estimate on its own scale.

    ``h (1 - F(h))`` is replaced by ``Z_{n-k:n} (1 - F_n(Z_{n-k:n}))``.
    """
    if fit.k != k:
        raise DomainError(f"fit was computed for k={fit.k}, not k={k}")
    if fit.gamma1_hat >= 1:
        raise EstimationError("estimated tail index >= 1; infinite-mean regime")
    sigma = math.sqrt(premium_variance(fit.gamma1_hat, fit.p_hat))
    thr = sorted_sample.threshold(k)
    km = kaplan_meier_survival(sorted_sample, sorted_sample.n - k)
    return sigma * thr * km / math.sqrt(k)


def premium_estimate(sorted_sample: SortedSample, k: int,
                     k_source: str = "user") -> PremiumFit:
    """Excess-of-loss premium above the retention ``Z_{n-k:n}``.

    ``gamma1_hat / (1 - gamma1_hat) * Z_{n-k:n} * (1 - F_n(Z_{n-k:n}))`` where
    ``F_n`` is the Kaplan-Meier estimator.  Only meaningful for a finite mean,
    so ``gamma1_hat >= 1`` is rejected.
    """
    fit = asymptotic_ci(sorted_sample, k, k_source=k_source)
    g = fit.gamma1_hat
    if g >= 1:
        raise EstimationError("estimated tail index >= 1; infinite-mean regime")
    thr = sorted_sample.threshold(k)
    km = kaplan_meier_survival(sorted_sample, sorted_sample.n - k)
    return PremiumFit(
        k=fit.k,
        premium=g / (1.0 - g) * thr * km,
        gamma1_hat=g,
        p_hat=fit.p_hat,
        threshold=thr,
        km_survival_at_threshold=km,
        se_scaled=premium_se(fit, sorted_sample, k),
        k_source=k_source,
    )


def hill_plot(sorted_sample: SortedSample, ks, alpha: float = 0.05) -> list[TailFit | None]:
    """Tail fits over a grid of ``k``; ``None`` where no uncensored extremes exist."""
    out: list[TailFit | None] = []
    for k in ks:
        try:
            out.append(asymptotic_ci(sorted_sample, k, alpha, k_source="grid"))
        except EstimationError:
            out.append(None)
    return out
