"""Kendall convolution algebra and the iterated integrals built on it.

Conventions: ``G(a)``, ``H(a)`` are the step law's Williamson and companion
functions, ``Psi(u) = (1 - |u|^alpha)_+``, and ``(0, t)`` masses follow the
open-interval formulas for the transition kernel. Levels and thresholds
should avoid atoms of the step law.

The iterated integrals

    I(n, a, t)  = int_{x_1..x_n <= a} Psi(x_n / t) dP
    II(n, a, t) = int_{x_1..x_n <= a} 1{|x_n| < t} dP

over the first ``n`` steps of the walk started at 0 are available in closed
form and through the one-step recurrences they satisfy. The recurrence is the
reference route; the closed form is the fast one.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import integrate

from .steps import StepLaw, abs_moment, check_alpha

__all__ = [
    "DEGENERACY_TOL",
    "NEAR_DEGENERACY_TOL",
    "DegenerateBranchError",
    "ConvMixture",
    "IterIntegralCoeffs",
    "psi",
    "conv_point",
    "conv_point_cdf",
    "conv_power_cdf",
    "transition_cdf",
    "truncated_moment",
    "m_at",
    "psi_integral",
    "iter_integral_coeffs",
    "integral_I",
    "integral_II",
    "iter_integrals_recurrence",
    "conv_cdf",
    "conv_williamson",
    "level_gh",
]

DEGENERACY_TOL = 1e-9
# below this the closed forms lose accuracy through (2G(a) - G(t))^-2 cancellation
NEAR_DEGENERACY_TOL = 1e-3
MODES = ("closed", "recurrence")


class DegenerateBranchError(ArithmeticError):
    """A closed form was asked for at a point where its denominator vanishes."""

    def __init__(self, message: str, branch: str):
        super().__init__(message)
        self.branch = branch


def _check_mode(mode: str) -> None:
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}, got {mode!r}")


def psi(alpha: float, t):
    """``Psi(t) = (1 - |t|^alpha)_+``."""
    t_arr = np.abs(np.asarray(t, dtype=float))
    out = np.maximum(1.0 - t_arr**alpha, 0.0)
    return float(out) if np.ndim(t) == 0 else out


def level_gh(law: StepLaw, a: float) -> tuple[float, float]:
    """``(G(a), H(a))`` with the limits ``G(0) = H(0) = 0`` at the origin."""
    if a == 0.0:
        return 0.0, 0.0
    return float(law.williamson_g(a)), float(law.h(a))


# -- point convolutions -------------------------------------------------------


@dataclass(frozen=True)
class ConvMixture:
    """``T_M(w * Pareto_{2 alpha} + (1 - w) * delta~_1)`` for two point masses."""

    scale_M: float
    pareto_weight: float
    alpha: float

    def cdf(self, t: float) -> float:
        """CDF of the (symmetric) mixture."""
        t = float(t)
        if self.scale_M == 0.0:
            return 1.0 if t >= 0.0 else 0.0
        u = abs(t) / self.scale_M
        # P(|Z| <= u) for Z ~ w Pareto + (1 - w) delta~_1
        if u < 1.0:
            inside = 0.0
        else:
            inside = (1.0 - self.pareto_weight) + self.pareto_weight * (1.0 - u ** (-2.0 * self.alpha))
        half_out = 0.5 * (1.0 - inside)
        return 1.0 - half_out if t >= 0.0 else half_out


def conv_point(x: float, y: float, alpha: float) -> ConvMixture:
    alpha = check_alpha(alpha)
    big = max(abs(x), abs(y))
    small = min(abs(x), abs(y))
    weight = 0.0 if big == 0.0 else (small / big) ** alpha
    return ConvMixture(scale_M=big, pareto_weight=weight, alpha=alpha)


def conv_point_cdf(x: float, y: float, t: float, alpha: float) -> float:
    """Mass of ``(0, t)`` under ``delta_x * delta_y``.

    ``(1 - |xy/t^2|^alpha) / 2`` when both ``|x|, |y| < t``. At ``x = y = 0``
    this is the half-atom convention ``F(t) - 1/2`` for ``delta_0``.
    """
    t = float(t)
    if not t > 0.0:
        raise ValueError("t must be positive")
    alpha = check_alpha(alpha)
    if abs(x) >= t or abs(y) >= t:
        return 0.0
    return 0.5 * (1.0 - abs(x * y / (t * t)) ** alpha)


def conv_power_cdf(law: StepLaw, n: int, t: float) -> float:
    """CDF of the ``n``-th Kendall convolution power of ``law``.

    ``F_n(t) = [G^n + 1 + n G^(n-1) H] / 2`` for ``t > 0``.
    """
    n = int(n)
    if n < 1:
        raise ValueError("n must be >= 1")
    t = float(t)
    if t == 0.0:
        raise ValueError("t must be nonzero")
    if n == 1:
        return float(law.cdf(t))
    if t < 0.0:
        return 1.0 - conv_power_cdf(law, n, -t)
    g, h = float(law.williamson_g(t)), float(law.h(t))
    return 0.5 * (g**n + 1.0 + n * g ** (n - 1) * h)


def transition_cdf(law: StepLaw, x: float, n: int, t: float) -> float:
    """``P_n(x, [0, t)) = [Psi(x/t) H_n(t) + G_n(t)] / 2`` for ``|x| < t``."""
    t = float(t)
    if not t > 0.0:
        raise ValueError("t must be positive")
    n = int(n)
    if n < 1:
        raise ValueError("n must be >= 1")
    if abs(x) >= t:
        return 0.0
    g_n = float(law.williamson_g(t)) ** n
    h_n = 2.0 * conv_power_cdf(law, n, t) - 1.0 - g_n
    return 0.5 * (psi(law.alpha, x / t) * h_n + g_n)


def truncated_moment(law: StepLaw, y: float, a: float) -> float:
    """``int_0^a x^alpha (delta_y * nu)(dx)``."""
    a = float(a)
    if not a > 0.0:
        raise ValueError("a must be positive")
    if abs(y) >= a:
        return 0.0
    g, h = level_gh(law, a)
    p = psi(law.alpha, y / a)
    return 0.5 * a**law.alpha * (h * p + (1.0 - p) * g)


def m_at(law: StepLaw, a: float, t: float) -> float:
    """``M(a, t) = H(a) Psi(a/t) + (1 - Psi(a/t)) G(a)``."""
    g, h = level_gh(law, a)
    p = psi(law.alpha, a / t)
    return h * p + (1.0 - p) * g


def psi_integral(law: StepLaw, y: float, a: float, t: float) -> float:
    """``int_{-inf}^a Psi(x/t) (delta_y * nu)(dx)`` for ``t >= a > 0``."""
    a, t = float(a), float(t)
    if not a > 0.0:
        raise ValueError("a must be positive")
    if t < a:
        raise ValueError("t must be >= a")
    alpha = law.alpha
    g_a, _ = level_gh(law, a)
    g_t = float(law.williamson_g(t))
    inside = 1.0 if abs(y) < a else 0.0
    return 0.5 * (
        psi(alpha, y / a) * m_at(law, a, t) + g_a * psi(alpha, a / t) * inside + psi(alpha, y / t) * g_t
    )


# -- iterated integrals --------------------------------------------------------


@dataclass(frozen=True)
class IterIntegralCoeffs:
    """Coefficients of ``I(n, a, t) = c1 (G(t)/2)^(n-1) + G(a)^n (c2 n + c3)``."""

    c1: float
    c2: float
    c3: float
    m_at: float


@dataclass(frozen=True)
class _Levels:
    g_a: float
    h_a: float
    g_t: float
    h_t: float
    p: float  # Psi(a / t)

    @property
    def denom(self) -> float:
        return 2.0 * self.g_a - self.g_t

    @property
    def i1(self) -> float:
        return 0.5 * (self.g_t + self.h_a * self.p + self.g_a)

    @property
    def ii1(self) -> float:
        return 0.5 * (self.h_a + self.h_t + self.g_a + self.g_t)

    @property
    def m(self) -> float:
        return self.h_a * self.p + (1.0 - self.p) * self.g_a


def _levels(law: StepLaw, a: float, t: float) -> _Levels:
    g_a, h_a = level_gh(law, a)
    p = 1.0 if a == 0.0 else psi(law.alpha, a / t)
    return _Levels(g_a, h_a, float(law.williamson_g(t)), float(law.h(t)), p)


def _coeffs(lv: _Levels) -> IterIntegralCoeffs:
    d = lv.denom
    if abs(d) < DEGENERACY_TOL:
        raise DegenerateBranchError(f"|2G(a) - G(t)| = {abs(d):.3g} is below threshold", "G(t)=2G(a)")
    hp = lv.h_a * lv.p
    c2 = hp / d
    c3 = (hp + lv.g_a) / d - 2.0 * hp * lv.g_a / d**2
    c1 = lv.i1 - lv.g_a / d * (lv.g_a + hp * (1.0 - lv.g_t / d))
    return IterIntegralCoeffs(c1, c2, c3, lv.m)


def _stable_coeffs(lv: _Levels) -> IterIntegralCoeffs:
    """:func:`_coeffs`, refusing points where cancellation spoils the closed form."""
    if abs(lv.denom) < NEAR_DEGENERACY_TOL:
        raise DegenerateBranchError(
            f"|2G(a) - G(t)| = {abs(lv.denom):.3g}: closed form is ill-conditioned", "G(t)~2G(a)"
        )
    return _coeffs(lv)


def iter_integral_coeffs(law: StepLaw, a: float, t: float) -> IterIntegralCoeffs:
    """``(C1, C2, C3, M(a, t))``; raises :class:`DegenerateBranchError` when ``G(t) = 2G(a)``."""
    _validate_levels(a, t)
    return _coeffs(_levels(law, a, t))


def _validate_levels(a: float, t: float, allow_zero: bool = False) -> None:
    if a < 0.0 or (a == 0.0 and not allow_zero):
        raise ValueError(f"level a must be positive, got {a!r}")
    if t < a:
        raise ValueError(f"t must be >= a, got t={t!r}, a={a!r}")


def iter_integrals_recurrence(lv_or_law, a=None, t=None, n_max: int = 1):
    """Arrays ``I[k], II[k]`` for ``k = 0..n_max`` from the one-step recurrences.

    ``I[0] = II[0] = 1`` stands for the empty chain started at 0. Accepts
    either a law with ``(a, t)`` or precomputed levels.
    """
    lv = lv_or_law if isinstance(lv_or_law, _Levels) else _levels(lv_or_law, a, t)
    g_a, h_a, g_t, h_t, p = lv.g_a, lv.h_a, lv.g_t, lv.h_t, lv.p
    m = lv.m
    I = np.empty(n_max + 1)
    II = np.empty(n_max + 1)
    I[0] = II[0] = 1.0
    if n_max >= 1:
        I[1], II[1] = lv.i1, lv.ii1
    g_pow = 1.0  # G(a)^(k-1)
    for k in range(1, n_max):
        i_diag = g_pow * g_a
        ii_diag = g_pow * (k * h_a + g_a)
        I[k + 1] = 0.5 * (g_t * I[k] + m * i_diag + g_a * p * ii_diag)
        II[k + 1] = 0.5 * (h_a * i_diag + g_a * ii_diag + h_t * I[k] + g_t * II[k])
        g_pow *= g_a
    return I, II


def _integral_closed(lv: _Levels, n: int, which: str) -> float:
    g_a, h_a, g_t, h_t, p = lv.g_a, lv.h_a, lv.g_t, lv.h_t, lv.p
    if which == "I":
        if n == 1:
            return lv.i1
        if abs(lv.denom) < DEGENERACY_TOL:
            b = h_a * p + g_a
            return g_a ** (n - 1) * (lv.i1 + 0.5 * (n - 1) * (b + 0.5 * n * h_a * p))
        c = _stable_coeffs(lv)
        return c.c1 * (0.5 * g_t) ** (n - 1) + g_a**n * (c.c2 * n + c.c3)
    if n == 1:
        return lv.ii1
    if abs(lv.denom) < DEGENERACY_TOL:
        if g_a <= 0.0:
            raise DegenerateBranchError("G(a) = G(t) = 0", "G(t)=0")
        b = h_a * p + g_a
        return g_a ** (n - 1) * (
            lv.ii1
            + 0.5 * h_a * (n - 1) * (1.0 + 0.5 * n)
            + 0.5 * g_a * (n - 1)
            + h_t
            / (2.0 * g_a)
            * ((n - 1) * lv.i1 + b * (n - 1) * (n - 2) / 4.0 + h_a * p * n * (n - 1) * (n - 2) / 12.0)
        )
    if g_t <= 0.0:
        raise DegenerateBranchError("G(t) = 0: closed form for II is undefined", "G(t)=0")
    c = _stable_coeffs(lv)
    d = lv.denom
    head = g_a**n * (
        ((n + 1) * h_a + g_a) / d - 2.0 * g_a * h_a / d**2 + h_t / d * (n * c.c2 + c.c3 - 2.0 * c.c2 * g_a / d)
    )
    tail = (0.5 * g_t) ** (n - 1) * (
        lv.ii1
        - g_a * (h_a + g_a) / d
        + g_a * g_t * h_a / d**2
        + (n - 1) * c.c1 * h_t / g_t
        - g_a * h_t / d * (c.c3 - c.c2 * g_t / d)
    )
    return head + tail


def _iterated(law: StepLaw, n: int, a: float, t: float, mode: str, strict: bool, which: str) -> float:
    _check_mode(mode)
    n = int(n)
    if n < 1:
        raise ValueError("n must be >= 1")
    a, t = float(a), float(t)
    _validate_levels(a, t)
    g_a, h_a = level_gh(law, a)
    if t == a:
        if which == "I":
            return g_a**n
        return g_a ** (n - 1) * (n * h_a + g_a)
    lv = _levels(law, a, t)
    if mode == "closed":
        try:
            return _integral_closed(lv, n, which)
        except DegenerateBranchError:
            if strict:
                raise
    I, II = iter_integrals_recurrence(lv, n_max=n)
    return float(I[n] if which == "I" else II[n])


def integral_I(law: StepLaw, n: int, a: float, t: float, mode: str = "closed", strict: bool = False) -> float:
    """``I(n, a, t)``: iterated integral of ``Psi(x_n / t)`` over paths kept below ``a``.

    In closed mode the ``G(t) = 2G(a)`` point uses the dedicated degenerate
    formula; ``t = a`` short-circuits to ``G(a)^n``.
    """
    return _iterated(law, n, a, t, mode, strict, "I")


def integral_II(law: StepLaw, n: int, a: float, t: float, mode: str = "closed", strict: bool = False) -> float:
    """``II(n, a, t)``: iterated integral of ``1{|x_n| < t}`` over paths kept below ``a``.

    The closed form divides by ``G(t)``; when ``G(t) = 0`` it falls back to the
    recurrence unless ``strict`` is set, in which case it raises.
    """
    return _iterated(law, n, a, t, mode, strict, "II")


# -- numeric convolution of two laws -------------------------------------------


def _inside_stats(law: StepLaw, t: float) -> tuple[float, float]:
    # (nu(|x| < t), int_{|x| < t} |x/t|^alpha nu(dx)) from density and atoms
    alpha = law.alpha
    mass = abs_moment(law, lambda x: 1.0, t)
    mom = abs_moment(law, lambda x: (x / t) ** alpha, t)
    for loc, w in law.atoms():
        if loc == t:  # open interval
            mass -= 2.0 * w
            mom -= 2.0 * w
    return mass, mom


def conv_cdf(law1: StepLaw, law2: StepLaw, t: float) -> float:
    """Mass of ``(0, t)`` under ``law1 * law2`` by integrating ``conv_point_cdf``.

    The double integral of ``(1 - |xy/t^2|^alpha) / 2`` over ``|x|, |y| < t``
    splits by Fubini into one-dimensional integrals against each law, which
    are taken by quadrature of the densities and exact sums over atoms.
    """
    t = float(t)
    if not t > 0.0:
        raise ValueError("t must be positive")
    if law1.alpha != law2.alpha:
        raise ValueError("both laws must share the same alpha")
    p1, m1 = _inside_stats(law1, t)
    p2, m2 = _inside_stats(law2, t)
    return 0.5 * (p1 * p2 - m1 * m2)


def conv_williamson(law1: StepLaw, law2: StepLaw, t: float) -> float:
    """Williamson function ``G(t)`` of ``law1 * law2`` by Psi-quadrature of its CDF.

    ``G(t) = 2 t^-alpha int_0^(t^alpha) K(u^(1/alpha)) du`` where ``K`` is the
    ``(0, x)`` mass returned by :func:`conv_cdf`.
    """
    alpha = law1.alpha
    t = float(t)
    upper = t**alpha
    kinks = sorted({p**alpha for law in (law1, law2) for p in (*law.breakpoints(), *(x for x, _ in law.atoms()))})
    pts = [k for k in kinks if 0.0 < k < upper]
    val, _ = integrate.quad(
        lambda u: conv_cdf(law1, law2, u ** (1.0 / alpha)) if u > 0 else 0.0,
        0.0,
        upper,
        points=pts or None,
        epsabs=1e-11,
        epsrel=1e-11,
        limit=200,
    )
    return 2.0 * val / upper
