"""Deterministic particle swarm maximizer on a bounded box."""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np

log = logging.getLogger(__name__)

# candidate batches are split into chunks of this size no matter how many
# threads run them, so the arithmetic (and hence the result) never depends on
# the thread count
CHUNK = 64


@dataclass(frozen=True)
class PsoConfig:
    swarm_size: int = 50
    iterations: int = 200
    inertia: float = 0.7298
    cognitive: float = 1.49618
    social: float = 1.49618
    restarts: int = 3
    seed: int = 0
    velocity_clamp: float = 0.5

    def __post_init__(self):
        if self.swarm_size < 2:
            raise ValueError("swarm_size must be at least 2")
        if self.iterations < 1:
            raise ValueError("iterations must be at least 1")
        if self.restarts < 1:
            raise ValueError("restarts must be at least 1")
        for name in ("inertia", "cognitive", "social", "velocity_clamp"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if not 0 <= int(self.seed) < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")

    def with_seed(self, seed: int) -> "PsoConfig":
        return replace(self, seed=int(seed))


@dataclass(frozen=True)
class BoxBounds:
    lo: np.ndarray
    hi: np.ndarray
    periodic: np.ndarray

    def __init__(self, lo: Sequence[float], hi: Sequence[float], periodic: Sequence[bool] | None = None):
        lo_arr = np.asarray(lo, dtype=float).reshape(-1)
        hi_arr = np.asarray(hi, dtype=float).reshape(-1)
        if lo_arr.shape != hi_arr.shape or lo_arr.size == 0:
            raise ValueError("lo and hi must be nonempty and of equal length")
        if not np.all(lo_arr < hi_arr):
            raise ValueError("every dimension needs lo < hi")
        per = np.zeros(lo_arr.size, bool) if periodic is None else np.asarray(periodic, bool).reshape(-1)
        if per.shape != lo_arr.shape:
            raise ValueError("periodic flags must match the dimension count")
        object.__setattr__(self, "lo", lo_arr)
        object.__setattr__(self, "hi", hi_arr)
        object.__setattr__(self, "periodic", per)

    @classmethod
    def uniform(cls, dim: int, lo: float, hi: float, periodic: bool = False) -> "BoxBounds":
        return cls([lo] * dim, [hi] * dim, [periodic] * dim)

    @property
    def dim(self) -> int:
        return self.lo.size

    @property
    def width(self) -> np.ndarray:
        return self.hi - self.lo

    def contains(self, x) -> bool:
        x = np.asarray(x, dtype=float)
        return bool(np.all(x >= self.lo) and np.all(x <= self.hi))


@dataclass
class PsoResult:
    best_value: float
    best_point: np.ndarray
    history: list[np.ndarray] = field(default_factory=list)  # best-so-far per iteration, one array per restart
    restart_values: list[float] = field(default_factory=list)
    evaluations: int = 0

    def __iter__(self):
        yield self.best_value
        yield self.best_point


def confine(x: np.ndarray, v: np.ndarray, bounds: BoxBounds) -> tuple[np.ndarray, np.ndarray]:
    """Map positions back into the box: reflect at walls, wrap periodic axes.

    Velocity components are negated on an odd number of reflections.
    """
    lo, w = bounds.lo, bounds.width
    rel = x - lo
    wrapped = np.mod(rel, w)
    folded = np.mod(rel, 2 * w)
    flips = folded > w
    reflected = np.where(flips, 2 * w - folded, folded)
    out = lo + np.where(bounds.periodic, wrapped, reflected)
    vel = np.where(~bounds.periodic & flips, -v, v)
    return np.clip(out, bounds.lo, bounds.hi), vel


def displacement(x: np.ndarray, target: np.ndarray, bounds: BoxBounds) -> np.ndarray:
    """``target - x``, taking the short way round on periodic axes."""
    d = target - x
    w = bounds.width
    wrapped = np.mod(d + w / 2, w) - w / 2
    return np.where(bounds.periodic, wrapped, d)


def _evaluate(objective, points: np.ndarray, vectorized: bool, pool: ThreadPoolExecutor | None) -> np.ndarray:
    chunks = [points[i : i + CHUNK] for i in range(0, len(points), CHUNK)]
    if vectorized:
        work = lambda c: np.asarray(objective(c), dtype=float).reshape(len(c))
    else:
        work = lambda c: np.array([float(objective(p)) for p in c])
    parts = list(pool.map(work, chunks)) if pool is not None else [work(c) for c in chunks]
    vals = np.concatenate(parts)
    bad = ~np.isfinite(vals)
    if bad.any():
        log.warning("discarding %d non-finite objective value(s)", int(bad.sum()))
        vals = np.where(bad, -np.inf, vals)
    return vals


def _run_once(objective, bounds, cfg, restart, vectorized, pool, initial):
    rng = np.random.default_rng(np.random.SeedSequence([int(cfg.seed), restart]))
    n, d = cfg.swarm_size, bounds.dim
    vmax = cfg.velocity_clamp * bounds.width
    x = bounds.lo + rng.random((n, d)) * bounds.width
    v = (2 * rng.random((n, d)) - 1) * vmax
    if initial is not None:
        k = min(len(initial), n)
        x[:k] = initial[:k]
    vals = _evaluate(objective, x, vectorized, pool)
    pbest, pval = x.copy(), vals.copy()
    g = int(np.argmax(pval))
    history = [pval[g]]
    for _ in range(cfg.iterations - 1):
        r1 = rng.random((n, d))
        r2 = rng.random((n, d))
        v = (
            cfg.inertia * v
            + cfg.cognitive * r1 * displacement(x, pbest, bounds)
            + cfg.social * r2 * displacement(x, pbest[g], bounds)
        )
        v = np.clip(v, -vmax, vmax)
        x, v = confine(x + v, v, bounds)
        vals = _evaluate(objective, x, vectorized, pool)
        improved = vals > pval
        pbest[improved] = x[improved]
        pval[improved] = vals[improved]
        g = int(np.argmax(pval))
        history.append(pval[g])
    return pval[g], pbest[g].copy(), np.array(history), cfg.swarm_size * cfg.iterations


def maximize(
    objective: Callable,
    bounds: BoxBounds,
    cfg: PsoConfig | None = None,
    *,
    vectorized: bool = False,
    threads: int = 1,
    initial=None,
) -> PsoResult:
    """Maximize ``objective`` over ``bounds``.

    Args:
        objective: maps a point of shape ``(dim,)`` to a float, or with
            ``vectorized=True`` a batch ``(k, dim)`` to ``k`` floats. Must be
            deterministic. Non-finite values are treated as ``-inf``.
        bounds: search box.
        cfg: swarm hyperparameters and seed.
        threads: worker threads for objective evaluation. Results are
            bit-identical for any value.
        initial: optional points ``(m, dim)`` that replace the first ``m``
            random particles of every restart.

    Returns:
        PsoResult whose ``best_value`` is the objective at ``best_point``.
    """
    cfg = cfg or PsoConfig()
    if threads < 1:
        raise ValueError("threads must be at least 1")
    if initial is not None:
        initial = np.asarray(initial, dtype=float).reshape(-1, bounds.dim)
        initial, _ = confine(initial, np.zeros_like(initial), bounds)
    pool = ThreadPoolExecutor(max_workers=threads) if threads > 1 else None
    try:
        best_val, best_pt = -np.inf, bounds.lo.copy()
        result = PsoResult(best_val, best_pt)
        for restart in range(cfg.restarts):
            val, pt, hist, evals = _run_once(objective, bounds, cfg, restart, vectorized, pool, initial)
            result.history.append(hist)
            result.restart_values.append(float(val))
            result.evaluations += evals
            if val > best_val:
                best_val, best_pt = val, pt
    finally:
        if pool is not None:
            pool.shutdown()
    result.best_value = float(best_val)
    result.best_point = best_pt
    return result
