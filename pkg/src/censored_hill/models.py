"""Heavy-tailed marginal families, censored sampling and censoring-theory quantities.

Three families are supported, each with a closed-form quantile so samples
can be drawn by exact inverse transform.  With ``y = x / scale``:

* Frechet:  ``F(x) = exp(-y**(-1/gamma))``
* Pareto:   ``1 - F(x) = y**(-1/gamma)`` for ``y >= 1`` (zero mass below ``scale``)
* Burr:     ``1 - F(x) = (1 + y**(-rho/gamma))**(1/rho)`` with ``rho < 0``

All three have regularly varying tails with index ``-1/gamma``.  The Burr
form is the Burr XII law written so that ``rho`` is its second-order
parameter; for large ``x`` its tail behaves like
``y**(-1/gamma) * (1 + y**(rho/gamma) / rho)``.

For a censoring setup ``(F, G)`` the observed variable is ``Z = min(X, Y)``
with ``1 - H = (1 - F)(1 - G)``, and the sub-distribution of uncensored
observations is ``H1(z) = P(Z <= z, delta = 1) = int_0^z (1 - G) dF``.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Any

import numpy as np
from scipy import integrate, optimize

from . import _rng
from .errors import DomainError, NumericError

__all__ = [
    "Family",
    "TailModel",
    "CensoringSetup",
    "CensoredSample",
    "quantile",
    "survival",
    "sample_censored",
    "derived_params",
    "theta",
    "upper_subdistribution",
    "h_quantile",
    "subdist_ratio",
    "excess_premium",
]


class Family(str, enum.Enum):
    FRECHET = "frechet"
    BURR = "burr"
    PARETO = "pareto"


@dataclass(frozen=True)
class TailModel:
    """A heavy-tailed marginal distribution.

    Parameters
    ----------
    family : Family or str
        One of ``"frechet"``, ``"burr"``, ``"pareto"``.
    gamma : float
        Tail index (extreme value index) of the marginal, ``> 0``.
    scale : float
        Scale parameter, ``> 0``.
    burr_rho : float, optional
        Second-order parameter of the Burr family, ``< 0``.  Required for
        ``family="burr"`` and ignored otherwise.
    """

    family: Family
    gamma: float
    scale: float = 1.0
    burr_rho: float | None = None

    def __post_init__(self):
        try:
            fam = Family(str(getattr(self.family, "value", self.family)).lower())
        except ValueError:
            raise DomainError(f"unknown family {self.family!r}") from None
        object.__setattr__(self, "family", fam)
        object.__setattr__(self, "gamma", float(self.gamma))
        object.__setattr__(self, "scale", float(self.scale))
        if not (self.gamma > 0 and math.isfinite(self.gamma)):
            raise DomainError(f"gamma must be positive and finite, got {self.gamma}")
        if not (self.scale > 0 and math.isfinite(self.scale)):
            raise DomainError(f"scale must be positive and finite, got {self.scale}")
        if fam is Family.BURR:
            if self.burr_rho is None or not float(self.burr_rho) < 0:
                raise DomainError(f"Burr model needs burr_rho < 0, got {self.burr_rho}")
            object.__setattr__(self, "burr_rho", float(self.burr_rho))
        else:
            object.__setattr__(self, "burr_rho", None)

    # -- serialization -------------------------------------------------------

    def to_dict(self) -> dict[str, Any]:
        out: dict[str, Any] = {"family": self.family.value, "gamma": self.gamma, "scale": self.scale}
        if self.burr_rho is not None:
            out["burr_rho"] = self.burr_rho
        return out

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "TailModel":
        if not isinstance(data, dict):
            raise DomainError("model definition must be a JSON object")
        unknown = set(data) - {"family", "gamma", "scale", "burr_rho"}
        if unknown:
            raise DomainError(f"unknown model keys: {sorted(unknown)}")
        if "family" not in data or "gamma" not in data:
            raise DomainError("model definition needs 'family' and 'gamma'")
        return cls(
            family=data["family"],
            gamma=data["gamma"],
            scale=data.get("scale", 1.0),
            burr_rho=data.get("burr_rho"),
        )

    # -- unchecked vectorised kernels -----------------------------------------
    # These accept the closed domains (x = 0, x = inf, u in {0, 1}) and are used
    # by the quadrature and sampling code.

    def _sf(self, x):
        y = np.asarray(x, dtype=float) / self.scale
        g = self.gamma
        with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
            if self.family is Family.FRECHET:
                out = -np.expm1(-(y ** (-1.0 / g)))
            elif self.family is Family.PARETO:
                out = np.where(y <= 1.0, 1.0, y ** (-1.0 / g))
            else:
                rho = self.burr_rho
                out = np.exp(np.log1p(y ** (-rho / g)) / rho)
        return out

    def _log_sf(self, x):
        y = np.asarray(x, dtype=float) / self.scale
        g = self.gamma
        with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
            if self.family is Family.FRECHET:
                out = np.log(-np.expm1(-(y ** (-1.0 / g))))
            elif self.family is Family.PARETO:
                out = np.where(y <= 1.0, 0.0, -np.log(y) / g)
            else:
                rho = self.burr_rho
                out = np.log1p(y ** (-rho / g)) / rho
        return out

    def _ppf(self, u):
        u = np.asarray(u, dtype=float)
        g = self.gamma
        with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
            if self.family is Family.FRECHET:
                y = (-np.log(u)) ** (-g)
            elif self.family is Family.PARETO:
                y = np.exp(-g * np.log1p(-u))
            else:
                rho = self.burr_rho
                y = np.expm1(rho * np.log1p(-u)) ** (-g / rho)
            return self.scale * y

    def _isf(self, v):
        """Inverse survival function, accurate for tiny tail probabilities ``v``."""
        v = np.asarray(v, dtype=float)
        g = self.gamma
        with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
            if self.family is Family.FRECHET:
                y = (-np.log1p(-v)) ** (-g)
            elif self.family is Family.PARETO:
                y = v ** (-g)
            else:
                rho = self.burr_rho
                y = np.expm1(rho * np.log(v)) ** (-g / rho)
            return self.scale * y

    # -- checked public API ---------------------------------------------------

    def survival(self, x):
        x_arr = np.asarray(x, dtype=float)
        if np.any(~(x_arr > 0)):
            raise DomainError("survival is defined for x > 0")
        out = self._sf(x_arr)
        return float(out) if out.ndim == 0 else out

    def quantile(self, u):
        u_arr = np.asarray(u, dtype=float)
        if np.any(~((u_arr > 0) & (u_arr < 1))):
            raise DomainError("quantile level must lie in (0, 1)")
        out = self._ppf(u_arr)
        return float(out) if out.ndim == 0 else out


def quantile(model: TailModel, u):
    """Return ``F^{-1}(u)`` for ``u`` in (0, 1); scalar or array."""
    return model.quantile(u)


def survival(model: TailModel, x):
    """Return ``1 - F(x)`` for ``x > 0``; scalar or array."""
    return model.survival(x)


@dataclass(frozen=True)
class CensoringSetup:
    """Distribution of interest ``model_x`` (F) censored by ``model_y`` (G)."""

    model_x: TailModel
    model_y: TailModel

    @property
    def gamma1(self) -> float:
        return self.model_x.gamma

    @property
    def gamma2(self) -> float:
        return self.model_y.gamma

    @property
    def gamma_z(self) -> float:
        return derived_params(self)["gamma_z"]

    @property
    def p(self) -> float:
        return derived_params(self)["p"]

    @property
    def q(self) -> float:
        return derived_params(self)["q"]

    def survival(self, x):
        """Survival function of ``Z``, ``(1 - F(x))(1 - G(x))``."""
        return self.model_x._sf(x) * self.model_y._sf(x)

    def to_dict(self) -> dict[str, Any]:
        return {"model_x": self.model_x.to_dict(), "model_y": self.model_y.to_dict()}

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "CensoringSetup":
        if not isinstance(data, dict) or set(data) != {"model_x", "model_y"}:
            raise DomainError("setup definition must be an object with exactly 'model_x' and 'model_y'")
        return cls(TailModel.from_dict(data["model_x"]), TailModel.from_dict(data["model_y"]))


@dataclass(frozen=True)
class CensoredSample:
    """Observed pairs ``(z_i, delta_i)`` with ``delta_i = 1`` iff ``X_i <= Y_i``."""

    z: np.ndarray
    delta: np.ndarray

    def __post_init__(self):
        z = np.ascontiguousarray(self.z, dtype=float)
        d = np.asarray(self.delta)
        if d.dtype != bool:
            if not np.all((d == 0) | (d == 1)):
                raise DomainError("delta must be boolean or 0/1")
            d = d.astype(bool)
        if z.ndim != 1 or d.ndim != 1:
            raise DomainError("z and delta must be one-dimensional")
        if z.shape != d.shape:
            raise DomainError(f"z and delta lengths differ ({z.size} != {d.size})")
        if z.size == 0:
            raise DomainError("sample must contain at least one observation")
        if not np.all(np.isfinite(z) & (z > 0)):
            raise DomainError("all z must be finite and positive")
        z.setflags(write=False)
        d = np.ascontiguousarray(d)
        d.setflags(write=False)
        object.__setattr__(self, "z", z)
        object.__setattr__(self, "delta", d)

    def __len__(self) -> int:
        return self.z.size


def sample_censored(setup: CensoringSetup, n: int, seed: int) -> CensoredSample:
    """Draw ``n`` censored pairs by inverse transform.

    Observation ``i`` uses counter block ``i`` of the Philox stream keyed by
    ``seed``: the first word drives ``X_i``, the second ``Y_i``.  A prefix of
    a larger draw therefore equals the smaller draw with the same seed.
    """
    if int(n) != n or n < 1:
        raise DomainError(f"n must be a positive integer, got {n}")
    u = _rng.uniform_blocks(int(n), seed)
    x = setup.model_x._ppf(u[:, 0])
    y = setup.model_y._ppf(u[:, 1])
    delta = x <= y
    z = np.minimum(x, y)
    # Burr quantiles with gamma/|rho| >~ 20 can underflow at the smallest uniforms.
    z = np.maximum(z, np.finfo(float).tiny)
    return CensoredSample(z, delta)


def derived_params(setup: CensoringSetup) -> dict[str, float]:
    """Tail index of ``Z`` and the asymptotic uncensored proportion.

    ``gamma_z = g1 g2 / (g1 + g2)``, ``p = gamma_z / g1`` and ``q = 1 - p``.
    """
    g1, g2 = setup.gamma1, setup.gamma2
    gamma_z = g1 * g2 / (g1 + g2)
    p = gamma_z / g1
    return {"gamma_z": gamma_z, "p": p, "q": 1.0 - p}


def _quad(func, a, b, *, epsabs, epsrel, what):
    with np.errstate(all="ignore"):
        value, err, info = integrate.quad(
            func, a, b, epsabs=epsabs, epsrel=epsrel, limit=500, full_output=1
        )[:3]
    tol = max(epsabs, epsrel * abs(value))
    if not math.isfinite(value) or err > 10 * tol:
        raise NumericError(
            f"quadrature for {what} did not converge: value={value!r}, "
            f"error estimate={err:.3g}, evaluations={info.get('neval')}"
        )
    return value


def upper_subdistribution(setup: CensoringSetup, x: float) -> float:
    """``P(Z > x, delta = 1) = int_x^inf (1 - G) dF``.

    Computed on the tail-probability scale: with ``v = 1 - F(y)`` the integral
    becomes ``int_0^{1-F(x)} (1 - G)(F_bar^{-1}(v)) dv``, which is then rescaled
    to the unit interval so that tiny tail masses keep full relative accuracy.
    """
    if x < 0:
        raise DomainError("x must be non-negative")
    fx = 1.0 if x == 0 else float(setup.model_x._sf(x))
    if fx == 0.0:
        return 0.0
    mx, my = setup.model_x, setup.model_y

    def integrand(w):
        return float(my._sf(mx._isf(fx * w)))

    return fx * _quad(integrand, 0.0, 1.0, epsabs=1e-13, epsrel=1e-12, what="H1 tail")


def theta(setup: CensoringSetup) -> float:
    """Overall probability of an uncensored observation, ``P(X <= Y)``.

    Evaluated as ``int_0^1 (1 - G)(F^{-1}(u)) du`` with adaptive quadrature;
    absolute accuracy is better than 1e-8.
    """
    mx, my = setup.model_x, setup.model_y

    def integrand(u):
        return float(my._sf(mx._ppf(u)))

    return _quad(integrand, 0.0, 1.0, epsabs=1e-11, epsrel=1e-11, what="theta")


def h_quantile(setup: CensoringSetup, t: float) -> float:
    """Return ``H^{-1}(1 - t)``: the level exceeded by ``Z`` with probability ``t``.

    Solved by bracketed root finding on ``log(1 - H)`` in ``log x``; the result
    has relative accuracy far below 1e-10.
    """
    if not 0 < t < 1:
        raise DomainError(f"t must lie in (0, 1), got {t}")
    mx, my = setup.model_x, setup.model_y
    hi = min(float(mx._isf(t)), float(my._isf(t)))
    st = math.sqrt(t)
    lo = min(float(mx._isf(st)), float(my._isf(st)))
    log_t = math.log(t)

    def f(lx):
        x = math.exp(lx)
        return float(mx._log_sf(x) + my._log_sf(x)) - log_t

    a, b = math.log(lo), math.log(hi)
    fa, fb = f(a), f(b)
    # Exact power tails can put a bracket end on the root up to rounding.
    if abs(fa) < 1e-13:
        return lo
    if abs(fb) < 1e-13:
        return hi
    for _ in range(64):
        if fa > 0:
            break
        a -= 1.0
        fa = f(a)
    if not (fa > 0 > fb):
        raise NumericError(f"could not bracket H^-1(1-{t}): f({lo})={fa}, f({hi})={fb}")
    root, res = optimize.brentq(f, a, b, xtol=1e-15, rtol=4 * np.finfo(float).eps,
                                maxiter=200, full_output=True, disp=False)
    if not res.converged:
        raise NumericError(f"root finding for H^-1(1-{t}) failed: {res.flag}")
    return math.exp(root)


def subdist_ratio(setup: CensoringSetup, z: float, t: float) -> float:
    """``(1/t) P(Z > z h, delta = 1)`` with ``h = H^{-1}(1 - t)``.

    As ``t -> 0`` this tends to ``p * z**(-1/gamma_z)``; for a Pareto/Pareto
    pair with ``h`` above both scales the identity holds exactly.
    """
    if z < 1:
        raise DomainError(f"z must be >= 1, got {z}")
    if not 0 < t < 1:
        raise DomainError(f"t must lie in (0, 1), got {t}")
    h = h_quantile(setup, t)
    return upper_subdistribution(setup, z * h) / t


def excess_premium(model: TailModel, retention: float) -> float:
    """Net excess-of-loss premium ``E[(X - R)_+] = int_R^inf (1 - F(x)) dx``.

    Finite only for ``gamma < 1``.  Integrated as ``R int_1^inf (1 - F)(R x) dx``.
    """
    if model.gamma >= 1:
        raise DomainError("the premium is infinite for gamma >= 1")
    if not retention > 0:
        raise DomainError("retention must be positive")
    r = float(retention)
    if model.family is Family.PARETO and r >= model.scale:
        return model.gamma / (1.0 - model.gamma) * r * float(model._sf(r))

    def integrand(x):
        return float(model._sf(r * x))

    return r * _quad(integrand, 1.0, math.inf, epsabs=0.0, epsrel=1e-10, what="premium")
