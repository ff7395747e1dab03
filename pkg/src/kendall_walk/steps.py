"""Symmetric unit-step laws for Kendall random walks.

Every law carries the convolution exponent ``alpha`` and exposes the CDF
``F``, the Williamson function ``G(t) = nu_hat(1/t)`` and the companion
``H(t) = 2F(t) - 1 - G(t)``, together with an exact sampler driven by
uniform variates.

Built-in families
-----------------
SymmetricPoint(s)
    Equal atoms at ``-s`` and ``+s``.
SymmetricPareto
    Density ``alpha |x|^(-2 alpha - 1)`` on ``|x| >= 1``.
KendallStable(m_alpha)
    ``G(t) = exp(-m_alpha t^-alpha)``; closed under convolution powers.
Tabulated
    Piecewise-linear CDF given on ``t >= 0``, mirrored to the negative side.
"""

from __future__ import annotations

import math
from abc import ABC, abstractmethod
from typing import Callable, Sequence

import numpy as np
from scipy import integrate

__all__ = [
    "StepLaw",
    "SymmetricPoint",
    "SymmetricPareto",
    "KendallStable",
    "Tabulated",
    "check_alpha",
    "cdf",
    "williamson_g",
    "h_fn",
    "invert_williamson",
    "sample_step",
    "abs_moment",
    "QuadratureError",
    "catalog",
]

# rows of the uniform block consumed by one step draw
N_STEP_UNIFORMS = 3


def check_alpha(alpha: float) -> float:
    alpha = float(alpha)
    if not (alpha > 0.0 and math.isfinite(alpha)):
        raise ValueError(f"alpha must be a positive finite real, got {alpha!r}")
    return alpha


def _scalar_or_array(values, like):
    if np.ndim(like) == 0:
        return float(values)
    return values


def _positive_t(t: float) -> float:
    t = float(t)
    if not t > 0.0:
        raise ValueError(f"t must be positive, got {t!r}")
    return t


class StepLaw(ABC):
    """A symmetric step distribution with no atom at the origin.

    Subclasses implement the CDF on the whole line and ``G``/``H`` for
    ``t > 0``. Methods accept scalars or numpy arrays.
    """

    family: str = ""

    def __init__(self, alpha: float):
        self.alpha = check_alpha(alpha)

    # -- distribution ----------------------------------------------------
    @abstractmethod
    def cdf(self, t):
        """Right-continuous CDF ``F(t) = P(X <= t)``."""

    @abstractmethod
    def williamson_g(self, t):
        """``G(t) = int (1 - |x/t|^alpha)_+ nu(dx)`` for ``t > 0``."""

    @abstractmethod
    def h(self, t):
        """``H(t) = t^-alpha int_{[-t, t]} |x|^alpha nu(dx)`` for ``t > 0``."""

    @property
    @abstractmethod
    def m_alpha(self) -> float:
        """``E|X|^alpha`` (may be ``inf``)."""

    @abstractmethod
    def sample_abs(self, u: np.ndarray) -> np.ndarray:
        """Map a ``(N_STEP_UNIFORMS - 1, n)`` block of uniforms to ``|X|`` draws."""

    # -- quadrature support ------------------------------------------------
    def atoms(self) -> list[tuple[float, float]]:
        """Atoms on the positive half-line as ``(location, mass)`` pairs."""
        return []

    def density(self, x):
        """Density of the continuous part; zero for purely atomic laws."""
        return np.zeros_like(np.asarray(x, dtype=float))

    def breakpoints(self) -> list[float]:
        """Positive points where the density is not smooth."""
        return []

    def params(self) -> dict:
        return {}

    # -- sampling ----------------------------------------------------------
    def sample(self, u: np.ndarray) -> np.ndarray:
        """Exact draws from a ``(N_STEP_UNIFORMS, n)`` block of uniforms on (0, 1).

        The last row supplies the sign, the others the magnitude.
        """
        u = np.asarray(u, dtype=float)
        mag = self.sample_abs(u[:-1])
        return np.where(u[-1] < 0.5, -mag, mag)

    def describe(self) -> dict:
        return {"family": self.family, "alpha": self.alpha, **self.params()}

    def __repr__(self) -> str:
        inner = ", ".join(f"{k}={v!r}" for k, v in self.params().items())
        sep = ", " if inner else ""
        return f"{type(self).__name__}({inner}{sep}alpha={self.alpha!r})"


class SymmetricPoint(StepLaw):
    """Symmetrized point mass at ``scale``: ``(delta_s + delta_-s) / 2``."""

    family = "point"

    def __init__(self, scale: float = 1.0, alpha: float = 1.0):
        super().__init__(alpha)
        scale = float(scale)
        if not (scale > 0.0 and math.isfinite(scale)):
            raise ValueError(f"scale must be positive, got {scale!r}")
        self.scale = scale

    def cdf(self, t):
        t_arr = np.asarray(t, dtype=float)
        s = self.scale
        out = np.where(t_arr >= s, 1.0, np.where(t_arr >= -s, 0.5, 0.0))
        return _scalar_or_array(out, t)

    def williamson_g(self, t):
        t_arr = np.asarray(t, dtype=float)
        with np.errstate(divide="ignore"):
            out = np.maximum(1.0 - (self.scale / t_arr) ** self.alpha, 0.0)
        return _scalar_or_array(out, t)

    def h(self, t):
        t_arr = np.asarray(t, dtype=float)
        with np.errstate(divide="ignore"):
            out = np.where(t_arr >= self.scale, (self.scale / t_arr) ** self.alpha, 0.0)
        return _scalar_or_array(out, t)

    @property
    def m_alpha(self) -> float:
        return self.scale**self.alpha

    def sample_abs(self, u):
        return np.full(np.shape(u)[-1], self.scale)

    def atoms(self):
        return [(self.scale, 0.5)]

    def params(self):
        return {"scale": self.scale}


class SymmetricPareto(StepLaw):
    """Symmetric Pareto law with density ``alpha |x|^(-2 alpha - 1)`` on ``|x| >= 1``.

    The law equals the Kendall square of ``SymmetricPoint(1)``. Classical
    treatments restrict it to ``alpha <= 1``; any ``alpha > 0`` is accepted.
    """

    family = "pareto"

    def _tail(self, t_arr):
        # P(|X| > t)
        with np.errstate(divide="ignore"):
            return np.where(t_arr >= 1.0, t_arr ** (-2.0 * self.alpha), 1.0)

    def cdf(self, t):
        t_arr = np.asarray(t, dtype=float)
        half_tail = 0.5 * self._tail(np.abs(t_arr))
        out = np.where(t_arr >= 0.0, 1.0 - half_tail, half_tail)
        return _scalar_or_array(out, t)

    def williamson_g(self, t):
        t_arr = np.asarray(t, dtype=float)
        with np.errstate(divide="ignore"):
            out = np.where(t_arr >= 1.0, (1.0 - t_arr ** (-self.alpha)) ** 2, 0.0)
        return _scalar_or_array(out, t)

    def h(self, t):
        t_arr = np.asarray(t, dtype=float)
        with np.errstate(divide="ignore"):
            r = t_arr ** (-self.alpha)
            out = np.where(t_arr >= 1.0, 2.0 * r * (1.0 - r), 0.0)
        return _scalar_or_array(out, t)

    @property
    def m_alpha(self) -> float:
        return 2.0

    def sample_abs(self, u):
        return u[0] ** (-0.5 / self.alpha)

    def density(self, x):
        ax = np.abs(np.asarray(x, dtype=float))
        with np.errstate(divide="ignore"):
            return np.where(ax >= 1.0, self.alpha * ax ** (-2.0 * self.alpha - 1.0), 0.0)

    def breakpoints(self):
        return [1.0]


class KendallStable(StepLaw):
    """Kendall-stable law with ``G(t) = exp(-m_alpha t^-alpha)``.

    ``F(t) = 1/2 + (1 + m t^-alpha) exp(-m t^-alpha) / 2`` for ``t > 0`` and
    ``E|X|^alpha = m_alpha``.
    """

    family = "stable"

    def __init__(self, m_alpha: float = 1.0, alpha: float = 1.0):
        super().__init__(alpha)
        m_alpha = float(m_alpha)
        if not (m_alpha > 0.0 and math.isfinite(m_alpha)):
            raise ValueError(f"m_alpha must be positive, got {m_alpha!r}")
        self._m = m_alpha

    def _z(self, t_arr):
        with np.errstate(divide="ignore", over="ignore"):
            return self._m * np.abs(t_arr) ** (-self.alpha)

    def cdf(self, t):
        t_arr = np.asarray(t, dtype=float)
        z = self._z(t_arr)
        with np.errstate(invalid="ignore"):
            half = 0.5 * np.where(np.isinf(z), 0.0, (1.0 + z) * np.exp(-z))
        out = np.where(t_arr >= 0.0, 0.5 + half, 0.5 - half)
        return _scalar_or_array(out, t)

    def williamson_g(self, t):
        t_arr = np.asarray(t, dtype=float)
        out = np.exp(-self._z(t_arr))
        return _scalar_or_array(out, t)

    def h(self, t):
        t_arr = np.asarray(t, dtype=float)
        z = self._z(t_arr)
        with np.errstate(invalid="ignore"):
            out = np.where(np.isinf(z), 0.0, z * np.exp(-z))
        return _scalar_or_array(out, t)

    @property
    def m_alpha(self) -> float:
        return self._m

    def sample_abs(self, u):
        # m |X|^-alpha ~ Gamma(2, 1), the sum of two unit exponentials
        w = -np.log(u[0]) - np.log(u[1])
        return (self._m / w) ** (1.0 / self.alpha)

    def density(self, x):
        ax = np.abs(np.asarray(x, dtype=float))
        z = self._z(ax)
        with np.errstate(divide="ignore", invalid="ignore"):
            out = 0.5 * self.alpha * z * z * np.exp(-z) / ax
        return np.where(np.isfinite(out), out, 0.0)

    def breakpoints(self):
        return [self._m ** (1.0 / self.alpha)]

    def params(self):
        return {"m_alpha": self._m}


class Tabulated(StepLaw):
    """Law given by a monotone piecewise-linear CDF on ``t >= 0``.

    Parameters
    ----------
    t, F : sequences
        Grid points ``0 <= t_0 < t_1 < ...`` and CDF values there. ``F`` must
        be nondecreasing, at least 1/2, and reach 1 at the last point. When
        ``t_0 > 0`` the point ``(0, 1/2)`` is prepended; ``F(0)`` must equal
        1/2 (no atom at the origin).
    """

    family = "table"

    def __init__(self, t: Sequence[float], F: Sequence[float], alpha: float = 1.0):
        super().__init__(alpha)
        t = np.asarray(t, dtype=float)
        F = np.asarray(F, dtype=float)
        if t.ndim != 1 or t.shape != F.shape or t.size < 1:
            raise ValueError("t and F must be 1-d sequences of equal length")
        if not np.all(np.isfinite(t)) or not np.all(np.isfinite(F)):
            raise ValueError("table values must be finite")
        if t[0] < 0.0:
            raise ValueError("table must cover t >= 0 only")
        if np.any(np.diff(t) <= 0.0):
            raise ValueError("table grid must be strictly increasing")
        if np.any(np.diff(F) < 0.0) or F[0] < 0.5 or F[-1] > 1.0:
            raise ValueError("table CDF must be nondecreasing within [1/2, 1]")
        if t[0] == 0.0:
            if F[0] != 0.5:
                raise ValueError("F(0) must be 1/2: atoms at the origin are not supported")
        else:
            t = np.concatenate([[0.0], t])
            F = np.concatenate([[0.5], F])
        if abs(F[-1] - 1.0) > 1e-12:
            raise ValueError("table CDF must reach 1 at its last grid point")
        F[-1] = 1.0
        self.t = t
        self.F = F
        self._dens = np.diff(F) / np.diff(t)
        self._abs_cdf = 2.0 * F - 1.0

    @classmethod
    def from_law(cls, law: StepLaw, t_grid: Sequence[float]) -> "Tabulated":
        """Tabulate another law's CDF on ``t_grid`` (last value forced to 1)."""
        t_grid = np.asarray(t_grid, dtype=float)
        F = np.maximum.accumulate(np.asarray(law.cdf(t_grid), dtype=float))
        F[-1] = 1.0
        return cls(t_grid, F, alpha=law.alpha)

    def cdf(self, t):
        t_arr = np.asarray(t, dtype=float)
        pos = np.interp(np.abs(t_arr), self.t, self.F, right=1.0)
        out = np.where(t_arr >= 0.0, pos, 1.0 - pos)
        return _scalar_or_array(out, t)

    def _segment_integrals(self, t_arr, power):
        # 2 * sum_i dens_i * int_{t_i}^{min(t_{i+1}, t)} x^power dx, per t
        lo = self.t[:-1]
        hi = self.t[1:]
        tt = t_arr[..., None]
        b = np.clip(tt, lo, hi)
        if power == 0:
            seg = b - lo
        else:
            seg = (b ** (power + 1.0) - lo ** (power + 1.0)) / (power + 1.0)
        return 2.0 * np.sum(self._dens * seg, axis=-1)

    def williamson_g(self, t):
        t_arr = np.asarray(t, dtype=float)
        mass = self._segment_integrals(t_arr, 0)
        mom = self._segment_integrals(t_arr, self.alpha)
        out = np.maximum(mass - mom * t_arr ** (-self.alpha), 0.0)
        return _scalar_or_array(out, t)

    def h(self, t):
        t_arr = np.asarray(t, dtype=float)
        out = self._segment_integrals(t_arr, self.alpha) * t_arr ** (-self.alpha)
        return _scalar_or_array(out, t)

    @property
    def m_alpha(self) -> float:
        return float(self._segment_integrals(np.asarray(self.t[-1]), self.alpha))

    def sample_abs(self, u):
        p = np.asarray(u[0], dtype=float)
        # inverse of |X|'s piecewise-linear CDF, skipping flat segments
        i = np.searchsorted(self._abs_cdf, p, side="right") - 1
        i = np.clip(i, 0, len(self._dens) - 1)
        seg_mass = self._abs_cdf[i + 1] - self._abs_cdf[i]
        frac = np.where(seg_mass > 0.0, (p - self._abs_cdf[i]) / np.where(seg_mass > 0, seg_mass, 1.0), 0.0)
        return self.t[i] + frac * (self.t[i + 1] - self.t[i])

    def density(self, x):
        ax = np.abs(np.asarray(x, dtype=float))
        i = np.clip(np.searchsorted(self.t, ax, side="right") - 1, 0, len(self._dens) - 1)
        return np.where(ax < self.t[-1], self._dens[i], 0.0)

    def breakpoints(self):
        return list(self.t[1:])

    def params(self):
        return {"table_size": int(self.t.size)}


# -- functional interface -----------------------------------------------------


def cdf(law: StepLaw, t: float) -> float:
    return law.cdf(t)


def williamson_g(law: StepLaw, t: float) -> float:
    return law.williamson_g(_positive_t(t))


def h_fn(law: StepLaw, t: float) -> float:
    """``H(t) = 2F(t) - 1 - G(t)``, the normalized truncated alpha-moment."""
    return law.h(_positive_t(t))


def invert_williamson(
    g: Callable[[float], float],
    alpha: float,
    t: float,
    dg: Callable[[float], float] | None = None,
) -> float:
    """Recover the CDF of a symmetric law from its Williamson function.

    ``F(t) = [alpha (G(t) + 1) + t G'(t)] / (2 alpha)`` for ``t > 0`` and
    ``F(t) = 1 - F(-t)`` for ``t < 0``. Without ``dg`` the derivative is a
    central difference with relative step 1e-6.
    """
    alpha = check_alpha(alpha)
    t = float(t)
    if t == 0.0:
        raise ValueError("the inversion formula is undefined at t = 0")
    if t < 0.0:
        return 1.0 - invert_williamson(g, alpha, -t, dg)
    if dg is None:
        step = 1e-6 * t
        g_hi, g_lo = float(g(t + step)), float(g(t - step))
        if g_hi < g_lo - 1e-12:
            raise ValueError(f"Williamson function is decreasing near t={t}")
        slope = (g_hi - g_lo) / (2.0 * step)
    else:
        slope = float(dg(t))
    value = 0.5 * (float(g(t)) + 1.0) + t * slope / (2.0 * alpha)
    return min(max(value, 0.0), 1.0)


def sample_step(law: StepLaw, rng: np.random.Generator, size: int | None = None):
    """Draw one step (or ``size`` steps) from ``law`` using ``rng``."""
    n = 1 if size is None else int(size)
    draws = law.sample(rng.random((N_STEP_UNIFORMS, n)))
    return float(draws[0]) if size is None else draws


def abs_moment(law: StepLaw, f: Callable, upper: float, epsabs: float = 1e-12) -> float:
    """``int_{|x| <= upper} f(|x|) nu(dx)`` by exact atom sums plus quadrature.

    This evaluates against the density and atoms only, never through
    ``F``, ``G`` or ``H``, so it can serve as an independent oracle.
    """
    upper = float(upper)
    total = 0.0
    for loc, mass in law.atoms():
        if loc <= upper:
            total += 2.0 * mass * float(f(loc))
    pts = sorted(p for p in law.breakpoints() if 0.0 < p < upper)
    edges = [0.0, *pts, upper]
    for lo, hi in zip(edges[:-1], edges[1:]):
        val, err = integrate.quad(
            lambda x: float(f(x)) * float(law.density(x)), lo, hi, epsabs=epsabs, epsrel=1e-12, limit=200
        )
        if err > max(1e-8, 1e-10 * abs(val)):
            raise QuadratureError(f"quadrature on [{lo}, {hi}] reached only {err:.3g}", err)
        total += 2.0 * val
    return total


class QuadratureError(ArithmeticError):
    """Adaptive quadrature did not reach the requested tolerance."""

    def __init__(self, message: str, achieved: float):
        super().__init__(message)
        self.achieved = achieved


def catalog(alpha: float) -> list[StepLaw]:
    """The closed-form families used throughout the test suites."""
    return [SymmetricPoint(1.0, alpha), SymmetricPareto(alpha), KendallStable(1.0, alpha)]
