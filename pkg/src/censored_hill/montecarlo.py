"""Replicated experiments: estimator behaviour against its Gaussian limit,
and direct simulation of the limit functionals.

Replication ``r`` draws its sample from the seed ``hash(master_seed, r)``
and every aggregate is computed over the replications in index order with
compensated summation, so reports do not depend on the number of worker
threads.
"""
from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.special import ndtr

from . import _rng
from .errors import DomainError, EstimationError
from .estimators import (
    adapted_hill_variance,
    asymptotic_ci,
    kaplan_meier_survival,
    premium_variance,
    sort_with_concomitants,
)
from .gausslimit import (
    LimitParams,
    functional_gamma_variance,
    functional_premium_variance,
    functional_values,
    required_points,
    simulate_bridges,
)
from .models import CensoringSetup, excess_premium, h_quantile, sample_censored

__all__ = [
    "ExperimentConfig",
    "KRecord",
    "ExperimentReport",
    "LimitReport",
    "ks_normality",
    "run_estimation_experiment",
    "run_limit_experiment",
]


def default_threads() -> int:
    return os.cpu_count() or 1


def _map_ordered(fn, items, threads: int | None):
    threads = threads or default_threads()
    if threads <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def _mean_var(values) -> tuple[float | None, float | None]:
    vals = [float(v) for v in values]
    m = len(vals)
    if m == 0:
        return None, None
    mean = math.fsum(vals) / m
    if m < 2:
        return mean, None
    return mean, math.fsum((v - mean) ** 2 for v in vals) / (m - 1)


# -- Kolmogorov-Smirnov ------------------------------------------------------

def _kolmogorov_sf(lam: float) -> float:
    """``Q(lam) = 2 sum_{j>=1} (-1)**(j-1) exp(-2 j**2 lam**2)``."""
    if lam < 0.2:
        # Q(0.2) differs from 1 by ~1e-21; the alternating series is useless here.
        return 1.0
    total = 0.0
    j = 1
    while True:
        term = 2.0 * math.exp(-2.0 * j * j * lam * lam)
        total += term if j % 2 else -term
        if term < 1e-12:
            break
        j += 1
    return min(1.0, max(0.0, total))


def ks_normality(values, mu: float = 0.0, sigma: float = 1.0) -> dict[str, float]:
    """One-sample Kolmogorov-Smirnov test against ``N(mu, sigma**2)``.

    The p-value uses the asymptotic Kolmogorov law with the
    ``sqrt(m) + 0.12 + 0.11 / sqrt(m)`` small-sample correction.
    """
    x = np.sort(np.asarray(values, dtype=float))
    m = x.size
    if m < 20:
        raise DomainError(f"KS test needs at least 20 values, got {m}")
    if not sigma > 0:
        raise DomainError(f"sigma must be positive, got {sigma}")
    cdf = ndtr((x - mu) / sigma)
    i = np.arange(1, m + 1)
    d = float(max(np.max(i / m - cdf), np.max(cdf - (i - 1) / m)))
    root = math.sqrt(m)
    lam = (root + 0.12 + 0.11 / root) * d
    return {"statistic": d, "p_value": _kolmogorov_sf(lam)}


# -- estimator experiments ---------------------------------------------------

@dataclass(frozen=True)
class ExperimentConfig:
    setup: CensoringSetup
    n: int
    k_grid: tuple[int, ...]
    reps: int
    master_seed: int = 42
    alpha: float = 0.05

    def __post_init__(self):
        object.__setattr__(self, "k_grid", tuple(int(k) for k in self.k_grid))
        if self.n < 3:
            raise DomainError("n must be at least 3")
        if not self.k_grid:
            raise DomainError("k_grid is empty")
        if len(set(self.k_grid)) != len(self.k_grid):
            raise DomainError("k_grid contains duplicates")
        bad = [k for k in self.k_grid if not 1 < k < self.n]
        if bad:
            raise DomainError(f"every k must satisfy 1 < k < n={self.n}; offending: {bad}")
        if self.reps < 1:
            raise DomainError("reps must be at least 1")
        if not 0 < self.alpha < 1:
            raise DomainError("alpha must lie in (0, 1)")
        try:
            _rng._check_seed(self.master_seed)
        except ValueError as exc:
            raise DomainError(str(exc)) from None

    def to_dict(self) -> dict:
        return {
            "setup": self.setup.to_dict(),
            "n": self.n,
            "k_grid": list(self.k_grid),
            "reps": self.reps,
            "master_seed": self.master_seed,
            "alpha": self.alpha,
        }


@dataclass
class KRecord:
    k: int
    reps_used: int
    failures: int
    mean_gamma1: float | None
    var_gamma1: float | None
    mean_p_hat: float | None
    var_scaled: float | None
    target_var: float
    ks_statistic: float | None
    ks_p_value: float | None
    coverage: float | None
    retention: float
    premium_true: float | None
    premium_reps_used: int
    premium_failures: int
    mean_premium: float | None
    var_premium_scaled: float | None
    premium_target_var: float | None
    standardized: np.ndarray = field(repr=False, default_factory=lambda: np.empty(0))

    def to_dict(self) -> dict:
        out = dict(self.__dict__)
        out.pop("standardized")
        return out


@dataclass
class ExperimentReport:
    config: ExperimentConfig
    gamma1: float
    p: float
    records: list[KRecord]

    def record(self, k: int) -> KRecord:
        for rec in self.records:
            if rec.k == k:
                return rec
        raise KeyError(k)

    def to_dict(self) -> dict:
        return {
            "config": self.config.to_dict(),
            "gamma1": self.gamma1,
            "p": self.p,
            "records": [r.to_dict() for r in self.records],
        }

    def csv_rows(self) -> tuple[list[str], list[list]]:
        header = [k for k in KRecord.__dataclass_fields__ if k != "standardized"]
        rows = [[rec.to_dict()[h] for h in header] for rec in self.records]
        return header, rows

    def qq_pairs(self, k: int) -> list[tuple[float, float]]:
        """Sorted standardized estimates paired with standard normal quantiles."""
        from statistics import NormalDist

        z = np.sort(self.record(k).standardized)
        m = z.size
        nd = NormalDist()
        return [(nd.inv_cdf((i + 0.5) / m), float(v)) for i, v in enumerate(z)]


def _replicate(config: ExperimentConfig, r: int) -> list[tuple]:
    seed = _rng.derive_seed(config.master_seed, r)
    srt = sort_with_concomitants(sample_censored(config.setup, config.n, seed))
    out = []
    for k in config.k_grid:
        try:
            fit = asymptotic_ci(srt, k, config.alpha)
        except EstimationError:
            out.append((math.nan, math.nan, math.nan, math.nan, math.nan))
            continue
        g = fit.gamma1_hat
        if g < 1:
            km = kaplan_meier_survival(srt, srt.n - k)
            prem = g / (1.0 - g) * srt.threshold(k) * km
        else:
            prem = math.nan
        out.append((g, fit.p_hat, fit.ci_low, fit.ci_high, prem))
    return out


def run_estimation_experiment(config: ExperimentConfig, threads: int | None = None) -> ExperimentReport:
    """Monte Carlo behaviour of the adapted Hill and premium estimators.

    Replications where ``p_hat = 0`` are counted as failures and excluded
    from every moment; replications with ``gamma1_hat >= 1`` are likewise
    excluded from the premium statistics only.
    """
    setup = config.setup
    g1 = setup.gamma1
    p = setup.p
    target = adapted_hill_variance(g1, p)
    results = _map_ordered(lambda r: _replicate(config, r), list(range(config.reps)), threads)
    arr = np.array(results, dtype=float)  # (reps, len(k_grid), 5)

    records = []
    for j, k in enumerate(config.k_grid):
        g, ph, lo, hi, prem = (arr[:, j, c] for c in range(5))
        ok = ~np.isnan(g)
        used = int(ok.sum())
        if used == 0:
            raise EstimationError(f"all {config.reps} replications failed for k={k}")
        g_ok = g[ok]
        scaled = math.sqrt(k) * (g_ok - g1)
        mean_g, var_g = _mean_var(g_ok)
        mean_p, _ = _mean_var(ph[ok])
        _, var_scaled = _mean_var(scaled)
        standardized = scaled / math.sqrt(target)
        ks = ks_normality(standardized) if used >= 20 else {"statistic": None, "p_value": None}
        coverage = float(np.count_nonzero((lo[ok] <= g1) & (g1 <= hi[ok]))) / used

        h = h_quantile(setup, k / config.n)
        if g1 < 1:
            pi_true = excess_premium(setup.model_x, h)
            norm = h * float(setup.model_x._sf(h))
            pok = ~np.isnan(prem)
            prem_ok = prem[pok]
            mean_prem, _ = _mean_var(prem_ok)
            _, var_prem = _mean_var(math.sqrt(k) * (prem_ok - pi_true) / norm)
            prem_target = premium_variance(g1, p)
            prem_used = int(pok.sum())
        else:
            pi_true = mean_prem = var_prem = prem_target = None
            prem_used = 0

        records.append(KRecord(
            k=k,
            reps_used=used,
            failures=config.reps - used,
            mean_gamma1=mean_g,
            var_gamma1=var_g,
            mean_p_hat=mean_p,
            var_scaled=var_scaled,
            target_var=target,
            ks_statistic=ks["statistic"],
            ks_p_value=ks["p_value"],
            coverage=coverage,
            retention=h,
            premium_true=pi_true,
            premium_reps_used=prem_used,
            premium_failures=config.reps - prem_used,
            mean_premium=mean_prem,
            var_premium_scaled=var_prem,
            premium_target_var=prem_target,
            standardized=standardized,
        ))
    return ExperimentReport(config=config, gamma1=g1, p=p, records=records)


# -- limit-functional experiments ---------------------------------------------

@dataclass
class FunctionalSummary:
    empirical_mean: float
    empirical_var: float | None
    target_var: float
    mc_standard_error: float | None
    var_standard_error: float | None

    @classmethod
    def from_values(cls, values: np.ndarray, target: float) -> "FunctionalSummary":
        mean, var = _mean_var(values)
        m = values.size
        se = math.sqrt(var / m) if var is not None else None
        # Standard error of a Gaussian sample variance.
        var_se = var * math.sqrt(2.0 / (m - 1)) if var is not None else None
        return cls(mean, var, target, se, var_se)


@dataclass
class LimitReport:
    params: LimitParams
    reps: int
    seed: int
    gamma: FunctionalSummary
    premium: FunctionalSummary | None
    values: np.ndarray = field(repr=False, default_factory=lambda: np.empty(0))

    def to_dict(self) -> dict:
        out = {
            "params": self.params.to_dict(),
            "reps": self.reps,
            "seed": self.seed,
            "gamma": self.gamma.__dict__.copy(),
            "premium": None if self.premium is None else self.premium.__dict__.copy(),
        }
        return out


_CHUNK = 1000


def run_limit_experiment(params: LimitParams, reps: int, seed: int = 42,
                         threads: int | None = None) -> LimitReport:
    """Simulate both limit functionals over ``reps`` independent bridges."""
    if reps < 1:
        raise DomainError("reps must be at least 1")
    pts = required_points(params)
    starts = list(range(0, reps, _CHUNK))

    def chunk(start):
        path = simulate_bridges(pts, seed, min(_CHUNK, reps - start), start=start)
        return functional_values(path, params)

    parts = _map_ordered(chunk, starts, threads)
    psi = np.concatenate([a for a, _ in parts])
    prem = np.concatenate([b for _, b in parts])
    gamma = FunctionalSummary.from_values(psi, functional_gamma_variance(params.gamma1, params.p))
    premium = None
    if params.gamma1 < 1:
        premium = FunctionalSummary.from_values(
            prem, functional_premium_variance(params.gamma1, params.p, params.t0)
        )
    return LimitReport(params, reps, seed, gamma, premium, values=np.stack([psi, prem]))
