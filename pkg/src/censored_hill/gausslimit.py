"""Brownian bridges and the Gaussian limit functionals of the adapted Hill
estimator and of the premium estimator.

From a Brownian bridge ``B`` on [0, 1] and constants ``theta`` (probability of
an uncensored observation) and ``p = 1 - q`` three processes are built:

    Bu(s)    = B(theta) - B(theta - p s)      uncensored part
    Bc(s)    = -B(1 - q s)                    censored part
    Bstar(s) = Bu(s) + Bc(s)

The functional for ``sqrt(k) (gamma1_hat - gamma1)`` is, with ``t0 = k/n``,

    Psi = gamma1 / sqrt(t0) * int_0^1 Bstar(t0 s) / s ds - gamma1 / (p sqrt(t0)) * Bu(t0)

and the premium functional adds ``-p gamma1**2 / (1 - gamma1) * Bstar(t0) / sqrt(t0)``
to ``Psi / (1 - gamma1)**2``.

Bridges are sampled exactly on the finite set of points the functionals
touch, so the only approximation is the quadrature of the singular integral.
That integral is computed after substituting ``s = u**2`` (``ds / s = 2 du / u``),
which turns the ``s**-1/2``-sized integrand into a bounded one, and then
applying the midpoint rule in ``u``.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from . import _rng
from .errors import DomainError

__all__ = [
    "LimitParams",
    "BridgePath",
    "simulate_bridge",
    "simulate_bridges",
    "required_points",
    "process_values",
    "functional_gamma",
    "functional_premium",
    "functional_values",
    "functional_gamma_variance",
    "functional_premium_variance",
    "empirical_covariance",
    "process_covariances",
]


@dataclass(frozen=True)
class LimitParams:
    gamma1: float
    p: float
    theta: float
    t0: float = 0.005
    grid_size: int = 512

    def __post_init__(self):
        if not self.gamma1 > 0:
            raise DomainError(f"gamma1 must be positive, got {self.gamma1}")
        if not 0 < self.p <= 1:
            raise DomainError(f"p must lie in (0, 1], got {self.p}")
        if not 0 < self.theta < 1:
            raise DomainError(f"theta must lie in (0, 1), got {self.theta}")
        if not 0 < self.t0 < 1:
            raise DomainError(f"t0 must lie in (0, 1), got {self.t0}")
        if int(self.grid_size) != self.grid_size or self.grid_size < 1:
            raise DomainError(f"grid_size must be a positive integer, got {self.grid_size}")
        if not self.p * self.t0 < self.theta:
            raise DomainError("need p * t0 < theta so every bridge point lies in (0, 1)")
        if not self.q * self.t0 < 1:
            raise DomainError("need q * t0 < 1")

    @property
    def q(self) -> float:
        return 1.0 - self.p

    def nodes(self) -> np.ndarray:
        """Quadrature nodes ``s_j = u_j**2`` with midpoints ``u_j = (j - 1/2) / N``."""
        u = (np.arange(self.grid_size) + 0.5) / self.grid_size
        return u * u

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class BridgePath:
    """Values of one Brownian bridge at a strictly increasing set of points.

    ``values`` may also be two-dimensional, one row per independent path.
    """

    points: np.ndarray
    values: np.ndarray

    def __add__(self, other: "BridgePath") -> "BridgePath":
        if not np.array_equal(self.points, other.points):
            raise DomainError("paths are registered on different point sets")
        return BridgePath(self.points, self.values + other.values)


def _check_points(points) -> np.ndarray:
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 1 or pts.size == 0:
        raise DomainError("points must be a non-empty one-dimensional sequence")
    if not (np.all(pts > 0) and np.all(pts < 1)):
        raise DomainError("points must lie strictly inside (0, 1)")
    if np.any(np.diff(pts) <= 0):
        raise DomainError("points must be strictly increasing")
    return pts


def _bridge_from_normals(pts: np.ndarray, normals: np.ndarray) -> np.ndarray:
    # W on pts and at 1 from independent increments, then B(t) = W(t) - t W(1).
    dt = np.diff(np.concatenate(([0.0], pts, [1.0])))
    w = np.cumsum(normals * np.sqrt(dt), axis=-1)
    return w[..., :-1] - pts * w[..., -1:]


def simulate_bridge(points, seed: int) -> BridgePath:
    """Exact joint sample of a Brownian bridge at ``points``."""
    pts = _check_points(points)
    normals = _rng.generator(seed).standard_normal(pts.size + 1)
    return BridgePath(pts, _bridge_from_normals(pts, normals))


def simulate_bridges(points, seed: int, reps: int, start: int = 0) -> BridgePath:
    """``reps`` independent bridges; row ``r`` is keyed by ``(seed, start + r)``."""
    pts = _check_points(points)
    normals = np.empty((reps, pts.size + 1))
    for r in range(reps):
        normals[r] = _rng.generator(seed, start + r).standard_normal(pts.size + 1)
    return BridgePath(pts, _bridge_from_normals(pts, normals))


def _point_sets(params: LimitParams, s: np.ndarray):
    return params.theta - params.p * params.t0 * s, 1.0 - params.q * params.t0 * s


def required_points(params: LimitParams) -> np.ndarray:
    """Every bridge argument needed by the two functionals, sorted and unique."""
    s = np.concatenate((params.nodes(), [1.0]))
    lower, upper = _point_sets(params, s)
    pts = np.unique(np.concatenate(([params.theta], lower, upper)))
    # B(1) = 0 and is never stored (happens when q = 0).
    return pts[(pts > 0) & (pts < 1)]


def _lookup(path: BridgePath, query) -> np.ndarray:
    q = np.asarray(query, dtype=float)
    at_end = (q <= 0) | (q >= 1)
    idx = np.searchsorted(path.points, q)
    idx_c = np.clip(idx, 0, path.points.size - 1)
    found = path.points[idx_c] == q
    missing = ~(found | at_end)
    if np.any(missing):
        raise DomainError(
            f"bridge path lacks evaluation point(s) {q[missing][:5].tolist()}; register them first"
        )
    vals = np.take(path.values, idx_c, axis=-1)
    return np.where(at_end, 0.0, vals)


def process_values(path: BridgePath, params: LimitParams, s: float) -> dict[str, float]:
    """``Bu(s)``, ``Bc(s)`` and ``Bstar(s)`` read off a registered path."""
    if not 0 < s <= 1:
        raise DomainError(f"s must lie in (0, 1], got {s}")
    lower, upper = params.theta - params.p * s, 1.0 - params.q * s
    b_theta, b_lower, b_upper = _lookup(path, [params.theta, lower, upper]).T
    bu = b_theta - b_lower
    bc = -b_upper
    return {"B_s": bu, "Btilde_s": bc, "Bstar_s": bu + bc}


def functional_values(path: BridgePath, params: LimitParams):
    """Return ``(Psi, premium functional)`` evaluated on the path(s).

    The premium functional is ``nan`` when ``gamma1 >= 1``.
    """
    g, p, t0 = params.gamma1, params.p, params.t0
    s = params.nodes()
    lower, upper = _point_sets(params, s)
    b_theta = _lookup(path, params.theta)
    bstar_nodes = (b_theta[..., None] - _lookup(path, lower)) - _lookup(path, upper)
    lo1, up1 = _point_sets(params, np.array([1.0]))
    bu_t0 = b_theta - _lookup(path, lo1)[..., 0]
    bstar_t0 = bu_t0 - _lookup(path, up1)[..., 0]

    u = np.sqrt(s)
    integral = np.mean(2.0 * bstar_nodes / u, axis=-1)
    root = math.sqrt(t0)
    psi = g * integral / root - (g / p) * bu_t0 / root
    if g < 1:
        prem = -(p * g * g / (1.0 - g)) * bstar_t0 / root + psi / (1.0 - g) ** 2
    else:
        prem = np.full_like(psi, np.nan)
    return psi, prem


def functional_gamma(path: BridgePath, params: LimitParams):
    """Limit functional of ``sqrt(k) (gamma1_hat - gamma1)`` on a path."""
    psi, _ = functional_values(path, params)
    return float(psi) if np.ndim(psi) == 0 else psi


def functional_premium(path: BridgePath, params: LimitParams):
    """Limit functional of the normalized premium error on a path."""
    if params.gamma1 >= 1:
        raise DomainError("the premium functional needs gamma1 < 1")
    _, prem = functional_values(path, params)
    return float(prem) if np.ndim(prem) == 0 else prem


def functional_gamma_variance(gamma1: float, p: float) -> float:
    """Exact variance of ``Psi`` for any ``t0``: ``gamma1**2 / p``.

    Follows from the covariances ``Cov(Bstar(s), Bstar(t)) = min(s, t) - s t``,
    ``Cov(Bu(s), Bstar(t)) = p (min(s, t) - s t)`` and
    ``Cov(Bu(s), Bu(t)) = p (min(s, t) - p s t)``; all ``t0`` terms cancel.
    """
    return gamma1 ** 2 / p


def functional_premium_variance(gamma1: float, p: float, t0: float = 0.0) -> float:
    """Exact variance of the premium functional at finite ``t0``.

    ``Bstar(t0)`` is uncorrelated with ``Psi``, so the variance is
    ``(p gamma1**2 / (1 - gamma1))**2 (1 - t0) + gamma1**2 / (p (1 - gamma1)**4)``.
    """
    if gamma1 >= 1:
        raise DomainError("the premium functional needs gamma1 < 1")
    c = 1.0 - gamma1
    return (p * gamma1 ** 2 / c) ** 2 * (1.0 - t0) + gamma1 ** 2 / (p * c ** 4)


def empirical_covariance(x, y) -> tuple[float, float]:
    """Sample covariance of paired draws and its Monte Carlo standard error."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    m = x.size
    prod = (x - x.mean()) * (y - y.mean())
    cov = prod.sum() / (m - 1)
    return float(cov), float(prod.std(ddof=1) / math.sqrt(m))


def process_covariances(theta: float, p: float, s: float, t: float,
                        reps: int, seed: int) -> dict[str, dict[str, float]]:
    """Monte Carlo check of the covariance identities at fixed ``s`` and ``t``.

    Each entry holds the empirical value, its standard error and the exact
    target.  Normalizations: ``Bu`` by ``1/p``, ``Bc`` by ``1/q``, the mixed
    ``Bu``/``Bstar`` term by ``1/p``.  Needs ``theta <= 1 - q max(s, t)``.
    """
    q = 1.0 - p
    hi = max(s, t)
    if not (0 < s <= 1 and 0 < t <= 1):
        raise DomainError("s and t must lie in (0, 1]")
    if not (p * hi < theta <= 1.0 - q * hi):
        raise DomainError("need p max(s,t) < theta <= 1 - q max(s,t)")
    params = LimitParams(gamma1=1.0, p=p, theta=theta, t0=hi, grid_size=1)
    pts = np.unique([theta, theta - p * s, theta - p * t, 1 - q * s, 1 - q * t])
    pts = pts[(pts > 0) & (pts < 1)]
    path = simulate_bridges(pts, seed, reps)
    vs = process_values(path, params, s)
    vt = process_values(path, params, t)
    lo, mn = s * t, min(s, t)
    out = {}
    for name, a, b, scale, target in (
        ("B", vs["B_s"], vt["B_s"], p, mn - p * lo),
        ("Btilde", vs["Btilde_s"], vt["Btilde_s"], q, mn - q * lo),
        ("Bstar", vs["Bstar_s"], vt["Bstar_s"], 1.0, mn - lo),
        ("B_Bstar", vs["B_s"], vt["Bstar_s"], p, mn - lo),
    ):
        if scale == 0:
            continue
        cov, se = empirical_covariance(a, b)
        out[name] = {"empirical": cov / scale, "se": se / scale, "target": target}
    return out
