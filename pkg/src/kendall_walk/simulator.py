"""Exact path simulation of Kendall random walks and Monte Carlo estimators.

One step from ``X_k = x`` with a fresh step draw ``y`` sets
``M = max(|x|, |y|)`` and ``rho = (min(|x|, |y|) / M)^alpha``. With
probability ``1 - rho`` the walk moves to ``M r``, otherwise to ``M r theta``
where ``theta`` is symmetric Pareto with density ``alpha |u|^(-2 alpha - 1)``
on ``|u| >= 1``. The sign ``r`` is that of ``y`` when ``|y| > |x|`` and an
independent fair sign otherwise, which keeps the one-step law equal to the
symmetric mixture ``delta_x`` convolved with the step law.

Estimators simulate whole blocks of paths at a time (see :mod:`kendall_walk.rng`)
and reduce integer indicator counts, so results do not depend on the number
of worker threads.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import rng as _rng
from .steps import StepLaw, check_alpha

__all__ = [
    "walk_step",
    "WalkConfig",
    "WalkPath",
    "simulate_path",
    "simulate_block",
    "first_passage_above",
    "EstimateWithCI",
    "Statistic",
    "STATISTICS",
    "InsufficientHorizonError",
    "InvariantViolation",
    "auto_horizon",
    "estimate",
    "estimate_curve",
    "estimate_many",
]

# censored fraction tolerated for first-passage statistics
CENSOR_TOL = 1e-4
# target of the geometric tail bound used to pick horizons
_HORIZON_TARGET = 1e-5


class InsufficientHorizonError(RuntimeError):
    """The simulation horizon leaves too many first-passage times censored."""


class InvariantViolation(AssertionError):
    """A simulated step broke the extremal property of the chain."""


def walk_step(x, y, xi, theta, alpha: float, tie_sign):
    """One Kendall step from ``x`` driven by the step draw ``y``.

    Parameters
    ----------
    x, y : float or ndarray
        Current position and fresh step draw.
    xi : float or ndarray
        Uniform variate selecting the Pareto branch when ``xi < rho``.
    theta : float or ndarray
        Signed Pareto multiplier, ``|theta| >= 1``.
    alpha : float
        Convolution exponent.
    tie_sign : float or ndarray
        Fair sign used unless ``|y| > |x|``.

    Returns
    -------
    float or ndarray
        The next position. ``xi == rho`` takes the non-Pareto branch and
        ``M == 0`` gives 0.
    """
    alpha = check_alpha(alpha)
    scalar = all(np.ndim(v) == 0 for v in (x, y, xi, theta, tie_sign))
    x, y = np.asarray(x, dtype=float), np.asarray(y, dtype=float)
    ax, ay = np.abs(x), np.abs(y)
    big = np.maximum(ax, ay)
    small = np.minimum(ax, ay)
    with np.errstate(divide="ignore", invalid="ignore"):
        rho = np.where(big > 0.0, (small / np.where(big > 0.0, big, 1.0)) ** alpha, 0.0)
    r = np.where(ay > ax, np.sign(y), np.where(np.asarray(tie_sign) < 0, -1.0, 1.0))
    out = np.where(np.asarray(xi) < rho, big * r * np.asarray(theta, dtype=float), big * r)
    return float(out) if scalar else out


def _pareto_multiplier(u_mag: np.ndarray, u_sign: np.ndarray, alpha: float) -> np.ndarray:
    mag = u_mag ** (-0.5 / alpha)
    return np.where(u_sign < 0.5, -mag, mag)


def _check_extremal(x, y, xi, theta, nxt, alpha) -> None:
    big = np.maximum(np.abs(x), np.abs(y))
    with np.errstate(divide="ignore", invalid="ignore"):
        rho = np.where(big > 0.0, (np.minimum(np.abs(x), np.abs(y)) / np.where(big > 0, big, 1.0)) ** alpha, 0.0)
    pareto = xi < rho
    tol = 1e-12 * big
    if np.any(np.abs(nxt) < big - tol) or np.any(~pareto & (np.abs(np.abs(nxt) - big) > tol)):
        raise InvariantViolation("|X_{k+1}| must be >= M, with equality off the Pareto branch")
    if np.any(np.abs(theta) < 1.0):
        raise InvariantViolation("Pareto multiplier below 1 in magnitude")


def simulate_block(law: StepLaw, seed: int, block: int, n_steps: int, debug: bool = False):
    """Yield ``X_1, ..., X_n`` for all ``BLOCK_SIZE`` lanes of one block.

    Every step consumes a full ``(UNIFORMS_PER_STEP, BLOCK_SIZE)`` draw, so
    stopping early never changes the values already produced.
    """
    gen = _rng.block_generator(seed, block)
    alpha = law.alpha
    x = np.zeros(_rng.BLOCK_SIZE)
    for _ in range(int(n_steps)):
        # (0, 1] keeps the power and log transforms finite
        u = 1.0 - gen.random((_rng.UNIFORMS_PER_STEP, _rng.BLOCK_SIZE))
        y = law.sample(u[_rng.ROW_STEP])
        theta = _pareto_multiplier(u[_rng.ROW_THETA], u[_rng.ROW_THETA_SIGN], alpha)
        xi = u[_rng.ROW_XI]
        sign = np.where(u[_rng.ROW_SIGN] < 0.5, -1.0, 1.0)
        nxt = walk_step(x, y, xi, theta, alpha, sign)
        if debug:
            _check_extremal(x, y, xi, theta, nxt, alpha)
        x = nxt
        yield x


@dataclass(frozen=True)
class WalkConfig:
    """Inputs that fully determine one simulated path."""

    law: StepLaw
    n_steps: int
    seed: int = 0
    path_index: int = 0

    def __post_init__(self):
        if int(self.n_steps) < 1:
            raise ValueError("n_steps must be a positive integer")
        _rng.check_seed(self.seed)
        _rng.check_seed(self.path_index)


@dataclass(frozen=True)
class WalkPath:
    """A realized trajectory ``X_0 = 0, X_1, ..., X_n`` and its RNG provenance."""

    values: np.ndarray
    seed: int
    path_index: int

    @property
    def n_steps(self) -> int:
        return len(self.values) - 1


def simulate_path(cfg: WalkConfig, debug: bool = False) -> WalkPath:
    """Simulate the path ``cfg.path_index`` of the run seeded by ``cfg.seed``.

    The result is the same lane an estimator with the same seed would see.
    """
    block, lane = _rng.locate(cfg.path_index)
    values = np.zeros(int(cfg.n_steps) + 1)
    for k, x in enumerate(simulate_block(cfg.law, cfg.seed, block, cfg.n_steps, debug), start=1):
        values[k] = x[lane]
    return WalkPath(values, int(cfg.seed), int(cfg.path_index))


def first_passage_above(path: WalkPath | Sequence[float], a: float) -> tuple[int, float] | None:
    """``(n, X_n)`` for the smallest ``n >= 1`` with ``X_n > a``, or ``None``."""
    values = path.values if isinstance(path, WalkPath) else np.asarray(path, dtype=float)
    hits = np.flatnonzero(np.asarray(values[1:]) > a)
    if hits.size == 0:
        return None
    n = int(hits[0]) + 1
    return n, float(values[n])


@dataclass(frozen=True)
class EstimateWithCI:
    """Frequency estimate of a probability with its binomial standard error."""

    point: float
    std_error: float
    n_paths: int

    @classmethod
    def from_count(cls, count: int, n_paths: int) -> "EstimateWithCI":
        p = count / n_paths
        return cls(p, math.sqrt(p * (1.0 - p) / n_paths), n_paths)


# -- statistics ------------------------------------------------------------------

# name -> (grid variable, passage kind or None)
STATISTICS = {
    "tau_pmf": ("n", "above"),
    "tau_weak_desc_pmf": ("n", "weak_below"),
    "tau_minus_pmf": ("n", "below"),
    "tau_weak_asc_pmf": ("n", "weak_above"),
    "ladder_height_cdf": ("t", "above"),
    "joint_ladder": ("t", "above"),
    "max_cdf": ("t", None),
    "min_cdf": ("t", None),
    "fn_cdf": ("t", None),
}

_CROSSES = {
    "above": lambda x, a: x > a,
    "weak_above": lambda x, a: x >= a,
    "below": lambda x, a: x < a,
    "weak_below": lambda x, a: x <= a,
}


@dataclass(frozen=True)
class Statistic:
    """A curve to estimate: ``name`` evaluated on ``grid``.

    ``grid`` holds epochs ``n`` for the ``*_pmf`` statistics and levels ``t``
    otherwise. ``a`` is the passage level and ``n`` the fixed epoch of
    ``joint_ladder``, ``max_cdf``, ``min_cdf`` and ``fn_cdf``.
    """

    name: str
    grid: tuple[float, ...]
    a: float = 0.0
    n: int | None = None

    def __post_init__(self):
        if self.name not in STATISTICS:
            raise ValueError(f"unknown statistic {self.name!r}; expected one of {sorted(STATISTICS)}")
        object.__setattr__(self, "grid", tuple(float(g) for g in np.atleast_1d(self.grid)))
        if not self.grid:
            raise ValueError("grid must not be empty")
        if self.variable == "n":
            if any(g < 1 or g != int(g) for g in self.grid):
                raise ValueError("epoch grid must hold positive integers")
        elif self.n is None or int(self.n) < (1 if self.name == "joint_ladder" else 0):
            if self.name != "ladder_height_cdf":
                raise ValueError(f"{self.name} needs a fixed epoch n")

    @property
    def variable(self) -> str:
        return STATISTICS[self.name][0]

    @property
    def passage(self) -> str | None:
        return STATISTICS[self.name][1]

    def min_horizon(self) -> int:
        """Steps needed to evaluate the statistic exactly (0 if unbounded)."""
        if self.variable == "n":
            return int(max(self.grid))
        if self.name == "ladder_height_cdf":
            return 0
        return int(self.n)


def auto_horizon(law: StepLaw, a: float) -> int:
    """Horizon making ``P(tau_a^+ > h)`` negligible by a geometric tail bound.

    Uses ``2 (h + 1) r^h`` with ``r = max(1/2, G(a))``.
    """
    r = 0.5 if a <= 0 else max(0.5, float(law.williamson_g(a)))
    if r >= 1.0:
        raise InsufficientHorizonError(f"G({a}) = 1 leaves no usable geometric bound")
    h = 1
    while 2.0 * (h + 1) * r**h > _HORIZON_TARGET:
        h += 1
    return h


class _Tracker:
    """Per-block accumulator for one statistic."""

    def __init__(self, stat: Statistic, size: int):
        self.stat = stat
        self.kind = stat.passage
        if stat.name in ("max_cdf", "min_cdf", "fn_cdf"):
            self.kind = None
            self.state = np.zeros(size)
        else:
            self.epoch = np.zeros(size, dtype=np.int64)
            self.height = np.zeros(size)
        self.last = stat.min_horizon()

    def update(self, k: int, x: np.ndarray) -> None:
        name = self.stat.name
        if self.kind is not None:
            new = (self.epoch == 0) & _CROSSES[self.kind](x, self.stat.a)
            self.epoch[new] = k
            self.height[new] = x[new]
        elif k <= self.last:
            if name == "max_cdf":
                np.maximum(self.state, x, out=self.state)
            elif name == "min_cdf":
                np.minimum(self.state, x, out=self.state)
            elif k == self.last:
                self.state = x.copy()

    def resolved(self, k: int) -> bool:
        if self.kind is None or self.stat.name == "joint_ladder":
            return k >= self.last
        if self.stat.variable == "n":
            return k >= self.last
        return bool(np.all(self.epoch > 0))

    def counts(self, valid: int) -> tuple[np.ndarray, int]:
        """Indicator counts per grid point and the number of censored lanes."""
        grid = np.asarray(self.stat.grid)
        name = self.stat.name
        if self.kind is None:
            s = self.state[:valid]
            return np.array([np.count_nonzero(s <= t) for t in grid], dtype=np.int64), 0
        epoch, height = self.epoch[:valid], self.height[:valid]
        if self.stat.variable == "n":
            c = np.array([np.count_nonzero(epoch == n) for n in grid.astype(np.int64)], dtype=np.int64)
            return c, 0
        hit = epoch == int(self.stat.n) if name == "joint_ladder" else epoch > 0
        c = np.array([np.count_nonzero(hit & (height <= t)) for t in grid], dtype=np.int64)
        return c, int(np.count_nonzero(epoch == 0)) if name == "ladder_height_cdf" else 0


def _run_block(law, stats, seed, block, valid, horizon, debug):
    trackers = [_Tracker(s, _rng.BLOCK_SIZE) for s in stats]
    k = 0
    for k, x in enumerate(simulate_block(law, seed, block, horizon, debug), start=1):
        for tr in trackers:
            tr.update(k, x)
        if all(tr.resolved(k) for tr in trackers):
            break
    return [tr.counts(valid) for tr in trackers]


def estimate_many(
    law: StepLaw,
    stats: Sequence[Statistic],
    n_paths: int,
    seed: int = 0,
    horizon: int | None = None,
    debug: bool = False,
    workers: int | None = None,
) -> list[list[EstimateWithCI]]:
    """Estimate several statistics from one shared set of simulated paths.

    Parameters
    ----------
    law : StepLaw
        Step distribution.
    stats : sequence of Statistic
        Curves to estimate.
    n_paths : int
        Number of simulated paths.
    seed : int
        Unsigned 64-bit seed.
    horizon : int, optional
        Maximum number of steps. Defaults to the largest requirement of the
        statistics, extended by :func:`auto_horizon` for ladder heights.
    debug : bool
        Check the extremal invariant on every step.
    workers : int, optional
        Thread count; defaults to ``KENDALL_THREADS`` or the CPU count.

    Returns
    -------
    list of list of EstimateWithCI
        One estimate per grid point of each statistic.

    Raises
    ------
    InsufficientHorizonError
        If ``horizon`` is shorter than required, or more than ``CENSOR_TOL``
        of the paths never reached the level of a ladder-height statistic.
    """
    n_paths = int(n_paths)
    if n_paths < 1:
        raise ValueError("n_paths must be positive")
    _rng.check_seed(seed)
    stats = list(stats)
    need = max(s.min_horizon() for s in stats)
    for s in stats:
        if s.name == "ladder_height_cdf":
            need = max(need, auto_horizon(law, s.a))
    if horizon is None:
        horizon = need
    elif int(horizon) < need:
        raise InsufficientHorizonError(f"horizon {horizon} is below the required {need}")
    horizon = int(horizon)

    n_blocks = -(-n_paths // _rng.BLOCK_SIZE)
    jobs = [(b, min(_rng.BLOCK_SIZE, n_paths - b * _rng.BLOCK_SIZE)) for b in range(n_blocks)]
    workers = min(workers or _rng.worker_count(), n_blocks)

    def job(arg):
        return _run_block(law, stats, seed, arg[0], arg[1], horizon, debug)

    if workers <= 1:
        results = [job(j) for j in jobs]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(job, jobs))

    out = []
    for i, s in enumerate(stats):
        counts = sum(r[i][0] for r in results)
        censored = sum(r[i][1] for r in results)
        if censored > CENSOR_TOL * n_paths:
            raise InsufficientHorizonError(
                f"{censored} of {n_paths} paths did not pass level {s.a} within {horizon} steps"
            )
        out.append([EstimateWithCI.from_count(int(c), n_paths) for c in counts])
    return out


def estimate_curve(
    name: str,
    law: StepLaw,
    grid: Sequence[float],
    n_paths: int,
    seed: int = 0,
    a: float = 0.0,
    n: int | None = None,
    horizon: int | None = None,
    **kwargs,
) -> list[EstimateWithCI]:
    """Estimate one statistic over a grid of epochs or levels."""
    stat = Statistic(name, tuple(grid), a=a, n=n)
    return estimate_many(law, [stat], n_paths, seed=seed, horizon=horizon, **kwargs)[0]


def estimate(
    name: str,
    law: StepLaw,
    n_paths: int,
    seed: int = 0,
    a: float = 0.0,
    n: int | None = None,
    t: float | None = None,
    horizon: int | None = None,
    **kwargs,
) -> EstimateWithCI:
    """Estimate a single probability.

    Examples
    --------
    ``estimate("tau_pmf", law, 10**6, a=3, n=2)`` estimates ``P(tau_3^+ = 2)``;
    ``estimate("max_cdf", law, 10**6, n=5, t=2.0)`` estimates
    ``P(max_{i<=5} X_i <= 2)``.
    """
    if STATISTICS.get(name, ("t",))[0] == "n":
        if n is None:
            raise ValueError(f"{name} needs an epoch n")
        return estimate_curve(name, law, [n], n_paths, seed, a=a, horizon=horizon, **kwargs)[0]
    if t is None:
        raise ValueError(f"{name} needs a level t")
    return estimate_curve(name, law, [t], n_paths, seed, a=a, n=n, horizon=horizon, **kwargs)[0]
