"""Ladder epochs, ladder heights, maxima and minima of Kendall random walks.

The walk starts at ``X_0 = 0``. For a level ``a >= 0``

    tau_a^+    = min{n >= 1 : X_n > a}      (first ascending ladder epoch)
    tau_a^{-w} = min{n >= 1 : X_n <= a}     (weak descending ladder epoch)

Every closed form has a recurrence counterpart obtained by integrating the
transition kernel one step at a time. Public functions take
``mode="closed" | "recurrence"``; closed mode falls back to the recurrence
where its denominators vanish unless ``strict=True``, in which case
:class:`~kendall_walk.algebra.DegenerateBranchError` propagates.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .algebra import (
    DEGENERACY_TOL,
    NEAR_DEGENERACY_TOL,
    DegenerateBranchError,
    _check_mode,
    _stable_coeffs,
    _levels,
    iter_integrals_recurrence,
    level_gh,
)
from .steps import StepLaw

__all__ = [
    "LadderCoefficients",
    "MinRecursionState",
    "ladder_epoch_coeffs",
    "ladder_epoch_pmf",
    "ladder_epoch_pmf_series",
    "weak_desc_epoch_pmf",
    "joint_ladder_cdf",
    "joint_ladder_series",
    "ladder_height_cdf",
    "max_cdf",
    "min_cdf",
    "min_recursion",
    "survival_below",
]

SERIES_RTOL = 1e-12
SERIES_MAX_TERMS = 1_000_000


def _unit(p: float) -> float:
    """Clip round-off of a closed-form probability into [0, 1]."""
    return min(max(float(p), 0.0), 1.0)


@dataclass(frozen=True)
class LadderCoefficients:
    """Weights of the two geometric laws and the negative binomial in ``P(tau_a^+ = n)``."""

    a_coef: float
    b_coef: float
    c_coef: float

    def pmf(self, g: float, n: int) -> float:
        return (
            self.a_coef * 0.5**n
            + self.b_coef * n * (1.0 - g) ** 2 * g ** (n - 1)
            + self.c_coef * g ** (n - 1) * (1.0 - g)
        )

    def tail(self, g: float, n: int) -> float:
        """``P(tau > n)``, the sum of :meth:`pmf` over ``k > n``."""
        return self.a_coef * 0.5**n + self.b_coef * n * (1.0 - g) * g**n + (self.b_coef + self.c_coef) * g**n


@dataclass
class MinRecursionState:
    """``A_j, B_j, C_j`` of ``P(X_1 > t, ..., X_j > t | X_0 = x) = A_j + B_j Psi(x/t) + C_j 1{|x| < |t|}``."""

    a_j: float
    b_j: float
    c_j: float
    j: int = 1

    def advance(self, g: float, h: float) -> None:
        a_next = 0.5 * self.a_j
        self.b_j = g * self.b_j + h * (a_next + self.c_j)
        self.c_j = g * (a_next + self.c_j)
        self.a_j = a_next
        self.j += 1

    @property
    def survival_at_origin(self) -> float:
        return self.a_j + self.b_j + self.c_j


def _coefficients(g: float, h: float, tol: float = DEGENERACY_TOL) -> LadderCoefficients:
    d = 2.0 * g - 1.0
    if abs(d) < DEGENERACY_TOL:
        raise DegenerateBranchError(f"|2G(a) - 1| = {abs(d):.3g}; coefficients blow up", "G(a)=1/2")
    if abs(d) < tol:
        raise DegenerateBranchError(f"|2G(a) - 1| = {abs(d):.3g}: closed form is ill-conditioned", "G(a)~1/2")
    if 1.0 - g < 1e-12:
        raise DegenerateBranchError("G(a) = 1; coefficients blow up", "G(a)=1")
    a_coef = 1.0 + h / d**2 - g / d
    b_coef = h / (d * (1.0 - g))
    c_coef = g / d - h * g / (d**2 * (1.0 - g))
    return LadderCoefficients(a_coef, b_coef, c_coef)


def ladder_epoch_coeffs(law: StepLaw, a: float) -> LadderCoefficients:
    """``(A(a), B(a), C(a))`` with ``A + B + C = 1``.

    Raises :class:`DegenerateBranchError` when ``G(a) = 1/2`` or ``G(a) = 1``.
    """
    a = float(a)
    if not a > 0.0:
        raise ValueError("level a must be positive")
    g, h = level_gh(law, a)
    return _coefficients(g, h)


def _check_n(n: int, lowest: int = 1) -> int:
    if int(n) != n or n < lowest:
        raise ValueError(f"n must be an integer >= {lowest}, got {n!r}")
    return int(n)


def _epoch_recurrence(g: float, h: float, n_max: int, first: float) -> np.ndarray:
    """Values at the origin of ``A_j + H B_j + G C_j`` for ``j = 1..n_max``.

    ``first = -1/2`` gives ``P(tau = j)``; ``first = +1/2`` gives ``P(tau > j)``.
    """
    out = np.empty(n_max)
    a_j, b_j, c_j = 0.5, first, first
    for j in range(n_max):
        out[j] = a_j + h * b_j + g * c_j
        a_j, b_j, c_j = 0.5 * a_j, 0.5 * a_j + g * (b_j + c_j), 0.5 * a_j + g * c_j
    return out


def ladder_epoch_pmf_series(law: StepLaw, a: float, n_max: int) -> np.ndarray:
    """``P(tau_a^+ = n)`` for ``n = 1..n_max`` by the recurrence."""
    g, h = level_gh(law, float(a))
    return _epoch_recurrence(g, h, _check_n(n_max), -0.5)


def survival_below(law: StepLaw, a: float, n_max: int) -> np.ndarray:
    """``P(tau_a^+ > n) = P(X_1 <= a, ..., X_n <= a)`` for ``n = 1..n_max``."""
    g, h = level_gh(law, float(a))
    return _epoch_recurrence(g, h, _check_n(n_max), 0.5)


def ladder_epoch_pmf(law: StepLaw, a: float, n: int, mode: str = "closed", strict: bool = False) -> float:
    """``P(tau_a^+ = n)``.

    For ``a = 0`` the law is geometric with ratio 1/2. Otherwise it mixes a
    geometric(1/2), a geometric(G(a)) and a shifted negative binomial(2, G(a)).
    """
    _check_mode(mode)
    n = _check_n(n)
    a = float(a)
    if a < 0.0:
        raise ValueError("level a must be >= 0")
    if mode == "closed":
        if a == 0.0:
            return 0.5**n
        g, h = level_gh(law, a)
        try:
            return _unit(_coefficients(g, h, NEAR_DEGENERACY_TOL).pmf(g, n))
        except DegenerateBranchError:
            if strict:
                raise
    return float(ladder_epoch_pmf_series(law, a, n)[-1])


def weak_desc_epoch_pmf(law: StepLaw, a: float, n: int) -> float:
    """``P(tau_a^{-w} = n)``: an atom ``F(a)`` at 1, then geometric(1/2) mass ``1 - F(a)``."""
    n = _check_n(n)
    a = float(a)
    if not a > 0.0:
        raise ValueError("level a must be positive")
    f_a = float(law.cdf(a))
    if n == 1:
        return f_a
    return (1.0 - f_a) * 0.5 ** (n - 1)


# -- ladder heights ------------------------------------------------------------


def _validate_height_args(a: float, t: float) -> tuple[float, float]:
    a, t = float(a), float(t)
    if a < 0.0:
        raise ValueError("level a must be >= 0")
    if t < a:
        raise ValueError(f"t must exceed the level a, got t={t!r}, a={a!r}")
    return a, t


def joint_ladder_series(law: StepLaw, a: float, t: float, n_max: int) -> np.ndarray:
    """``P(X_tau <= t, tau = n)`` for ``tau = tau_a^+`` and ``n = 1..n_max``, by recurrence.

    ``Phi_n = [H(t) I(n-1,a,t) + G(t) II(n-1,a,t) - H(a) I(n-1,a,a) - G(a) II(n-1,a,a)] / 2``.
    """
    a, t = _validate_height_args(a, t)
    n_max = _check_n(n_max)
    if t == a:
        return np.zeros(n_max)
    lv = _levels(law, a, t)
    I, II = iter_integrals_recurrence(lv, n_max=n_max - 1)
    k = np.arange(n_max)
    g_a, h_a = lv.g_a, lv.h_a
    i_diag = g_a**k
    ii_diag = np.where(k == 0, 1.0, g_a ** np.maximum(k - 1, 0) * (k * h_a + g_a))
    out = 0.5 * (lv.h_t * I + lv.g_t * II - h_a * i_diag - g_a * ii_diag)
    out[0] = float(law.cdf(t)) - (float(law.cdf(a)) if a > 0.0 else 0.5)
    return out


def _joint_closed(law: StepLaw, a: float, t: float, n: int) -> float:
    if a == 0.0:
        g, f = float(law.williamson_g(t)), float(law.cdf(t))
        return 0.5**n * g ** (n - 1) * (2 * n * (f - 0.5) - (n - 1) * g)
    lv = _levels(law, a, t)
    if lv.g_t <= 0.0:
        raise DegenerateBranchError("G(t) = 0: closed form is undefined", "G(t)=0")
    c = _stable_coeffs(lv)
    g_a, h_a, g_t, h_t, d = lv.g_a, lv.h_a, lv.g_t, lv.h_t, lv.denom
    first = (0.5 * g_t) ** (n - 1) * (
        2.0 * g_a * h_a * (g_t - g_a) / d**2
        - g_a**2 / d
        + (n - 1) * c.c1 * h_t / g_t
        - g_a * h_t / d * (c.c3 - c.c2 * g_t / d)
        + lv.ii1
    )
    second = g_a ** (n - 1) * (
        (n * h_a + g_a) * (g_t - g_a) / d
        - g_a * g_t * h_a / d**2
        + g_a * h_t * c.c2 * n / d
        + g_t * h_t / d * (0.5 * (c.c3 - c.c2) - g_a * c.c2 / d)
        + 0.5 * h_t * (c.c3 - c.c2)
    )
    return first + second


def joint_ladder_cdf(
    law: StepLaw, a: float, n: int, t: float, mode: str = "closed", strict: bool = False
) -> float:
    """``Phi_n^a(t) = P(X_{tau_a^+} <= t, tau_a^+ = n)``; zero at ``t = a``."""
    _check_mode(mode)
    n = _check_n(n)
    a, t = _validate_height_args(a, t)
    if t == a:
        return 0.0
    if n == 1:
        return float(law.cdf(t)) - (float(law.cdf(a)) if a > 0.0 else 0.5)
    if mode == "closed":
        try:
            return _unit(_joint_closed(law, a, t, n))
        except DegenerateBranchError:
            if strict:
                raise
    return float(joint_ladder_series(law, a, t, n)[-1])


def _series_length(law: StepLaw, a: float) -> int:
    """Terms needed before ``P(tau_a^+ > n)`` is negligible against ``SERIES_RTOL``."""
    # the tail of tau bounds the tail of sum_n Phi_n; grow the horizon geometrically
    n = 64
    while n <= SERIES_MAX_TERMS:
        tail = survival_below(law, a, n)[-1]
        if tail < SERIES_RTOL * 1e-2:
            return n
        n *= 2
    raise ArithmeticError(f"ladder series at a={a} did not converge within {SERIES_MAX_TERMS} terms")


def _height_closed(law: StepLaw, a: float, t: float) -> float:
    f_t, g_t = float(law.cdf(t)), float(law.williamson_g(t))
    if a == 0.0:
        return (4.0 * f_t - 2.0 - g_t**2) / (2.0 - g_t) ** 2
    lv = _levels(law, a, t)
    g_a, h_a, h_t, d = lv.g_a, lv.h_a, lv.h_t, lv.denom
    if g_t <= 0.0:
        raise DegenerateBranchError("G(t) = 0: closed form is undefined", "G(t)=0")
    if 1.0 - g_a < 1e-12:
        raise DegenerateBranchError("G(a) = 1", "G(a)=1")
    c = _stable_coeffs(lv)
    f_a = float(law.cdf(a))
    part_t = g_t / (2.0 - g_t) * (
        h_t * (4.0 - g_t) * c.c1 / (g_t * (2.0 - g_t))
        + 2.0 * g_a * h_a * (g_t - g_a) / d**2
        - g_a**2 / d
        - c.c1 * h_t / g_t
        - g_a * h_t / d * (c.c3 - c.c2 * g_t / d)
        + lv.ii1
    )
    part_a = g_a / (1.0 - g_a) * (
        (2.0 - g_a) * (h_a * (g_t - g_a) + g_a * h_t * c.c2) / ((1.0 - g_a) * d)
        + g_a * (g_t - g_a) / d
        - g_a * g_t * h_a / d**2
        + g_t * h_t / d * (0.5 * (c.c3 - c.c2) - g_a * c.c2 / d)
        + 0.5 * h_t * (c.c3 - c.c2)
    )
    return f_t - f_a + part_t + part_a


def ladder_height_cdf(law: StepLaw, a: float, t: float, mode: str = "closed", strict: bool = False) -> float:
    """``P(X_{tau_a^+} <= t)``, the marginal law of the first ladder height.

    Recurrence mode sums :func:`joint_ladder_series` until the tail of
    ``tau_a^+`` is below ``1e-12`` relative.
    """
    _check_mode(mode)
    a, t = _validate_height_args(a, t)
    if t == a:
        return 0.0
    if mode == "closed":
        try:
            return _unit(_height_closed(law, a, t))
        except DegenerateBranchError:
            if strict:
                raise
    n_terms = _series_length(law, a)
    return float(math.fsum(joint_ladder_series(law, a, t, n_terms)))


# -- maxima and minima -----------------------------------------------------------


def max_cdf(law: StepLaw, n: int, t: float, mode: str = "closed", strict: bool = False) -> float:
    """``P(max_{0<=i<=n} X_i <= t) = P(tau_t^+ > n)`` for ``t > 0``."""
    _check_mode(mode)
    n = _check_n(n, lowest=0)
    t = float(t)
    if not t > 0.0:
        raise ValueError("t must be positive")
    if n == 0:
        return 1.0
    if mode == "closed":
        g, h = level_gh(law, t)
        try:
            return _unit(_coefficients(g, h, NEAR_DEGENERACY_TOL).tail(g, n))
        except DegenerateBranchError:
            if strict:
                raise
    return 1.0 - math.fsum(ladder_epoch_pmf_series(law, t, n))


def min_recursion(law: StepLaw, t: float, n: int) -> MinRecursionState:
    """Advance the stay-above system for level ``t < 0`` to step ``n``."""
    s = -float(t)
    g, h = level_gh(law, s)
    state = MinRecursionState(0.5, 0.5 * h, 0.5 * g)
    for _ in range(n - 1):
        state.advance(g, h)
    return state


def _min_closed(g: float, h: float, n: int) -> float:
    d = 2.0 * g - 1.0
    if abs(d) < DEGENERACY_TOL:
        raise DegenerateBranchError(f"|2G(|t|) - 1| = {abs(d):.3g}", "G(|t|)=1/2")
    if abs(d) < NEAR_DEGENERACY_TOL:
        raise DegenerateBranchError(f"|2G(|t|) - 1| = {abs(d):.3g}: closed form is ill-conditioned", "G(|t|)~1/2")
    return (
        1.0
        - 0.5**n * (1.0 + h / d**2 - g / d)
        - g**n * (g / d - h / d**2)
        - n * g**n * h / d
    )


def min_cdf(law: StepLaw, n: int, t: float, mode: str = "closed", strict: bool = False) -> float:
    """``P(min_{0<=i<=n} X_i <= t)`` for ``t < 0``; ``G`` and ``H`` are taken at ``|t|``."""
    _check_mode(mode)
    n = _check_n(n, lowest=0)
    t = float(t)
    if not t < 0.0:
        raise ValueError("t must be negative")
    if n == 0:
        return 0.0
    if mode == "closed":
        g, h = level_gh(law, -t)
        try:
            return _unit(_min_closed(g, h, n))
        except DegenerateBranchError:
            if strict:
                raise
    return 1.0 - min_recursion(law, t, n).survival_at_origin
