"""Haar-random states: sampling, closed-form moments and concentration bounds."""

from __future__ import annotations

import csv
import io
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .core import check_capacity, partial_trace, wootters_tilde
from .localization import lme_estimate, lower_bound, upper_bound
from .measures import MeasureKind, ce_batch
from .pso import PsoConfig

LEVY_DENOM = 9 * np.pi**3 * (4 * np.sqrt(2) + 2) ** 2


def derived_seed(seed: int, *path: int) -> int:
    """64-bit seed for the task at ``path`` under ``seed``."""
    return int(np.random.SeedSequence([int(seed), *map(int, path)]).generate_state(1, dtype=np.uint64)[0])


def sample_haar(n_qubits: int, seed: int, index: int = 0) -> np.ndarray:
    """Haar-random pure state; sample ``index`` of the stream ``seed``."""
    check_capacity(n_qubits)
    rng = np.random.default_rng(np.random.SeedSequence([int(seed), int(index)]))
    d = 1 << n_qubits
    v = rng.standard_normal(d) + 1j * rng.standard_normal(d)
    return v / np.linalg.norm(v)


def sample_haar_batch(n_qubits: int, count: int, seed: int, start: int = 0) -> np.ndarray:
    return np.stack([sample_haar(n_qubits, seed, start + i) for i in range(count)])


# --------------------------------------------------------------------------- #
# Closed forms
# --------------------------------------------------------------------------- #

def expected_purity(d_a: int, d_b: int) -> float:
    """Mean of ``Tr Psi_B^2`` over Haar states on ``d_a * d_b`` dimensions."""
    return (d_a + d_b) / (d_a * d_b + 1)


def expected_tilde_overlap(d_a: int, d_b: int) -> float:
    """Mean of ``Tr(Psi_B Psi~_B)``.

    ``(d_a + 1) / (d_a d_b + 1)`` when ``B`` has an even number of qubits. For an
    odd number ``Y^{(x)n}`` is antisymmetric and the sign flips to ``d_a - 1``.
    """
    n_b = int(d_b).bit_length() - 1
    if d_b < 2 or 1 << n_b != d_b:
        raise ValueError("d_b must be a power of two")
    sign = 1 if n_b % 2 == 0 else -1
    return (d_a + sign) / (d_a * d_b + 1)


def expected_avg_ce(n_b: int, s_size: int) -> float:
    """Mean fixed-basis average CE over ``s`` for Haar states; independent of ``A``."""
    if not 1 <= s_size <= n_b:
        raise ValueError("need 1 <= |s| <= n_b")
    return 1.0 - 3.0**s_size * (2.0 ** (n_b - s_size) + 1) / (2.0**s_size * (2.0**n_b + 1))


def ntangle_mean_bound(d_b: int) -> float:
    """Upper bound on the Haar mean of the n-tangle on ``d_b`` dimensions."""
    return float(np.sqrt(2.0 / (d_b + 1)))


@dataclass(frozen=True)
class ConcentrationBounds:
    tau_threshold: float
    tail: float
    ce_threshold: float


def concentration_bounds(n_a: int, n_b: int, epsilon: float, s_size: int | None = None) -> ConcentrationBounds:
    """Thresholds below which the n-tangle assistance and fixed-basis CE average
    fall with probability at most ``tail``.

    ``s_size`` defaults to ``n_b`` (the CE threshold uses ``s = B``).
    """
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    d_a, d_b = 2**n_a, 2**n_b
    tail = 2.0 * np.exp(-2.0 * d_a * d_b * epsilon**2 / LEVY_DENOM)
    tau_thr = 1.0 - np.sqrt(2.0 * d_b / d_a) - epsilon
    ce_thr = expected_avg_ce(n_b, n_b if s_size is None else s_size) - epsilon
    return ConcentrationBounds(float(tau_thr), float(min(tail, 1.0) if np.isfinite(tail) else 0.0), float(ce_thr))


# --------------------------------------------------------------------------- #
# Monte Carlo
# --------------------------------------------------------------------------- #

@dataclass(frozen=True)
class Estimate:
    mean: float
    stderr: float
    samples: int

    @classmethod
    def of(cls, values) -> "Estimate":
        x = np.asarray(values, dtype=float)
        se = float(x.std(ddof=1) / np.sqrt(x.size)) if x.size > 1 else float("inf")
        return cls(float(x.mean()), se, int(x.size))

    def within(self, target: float, n_se: float = 3.0) -> bool:
        # the additive slack covers constant samples, whose standard error is 0
        return abs(self.mean - target) <= n_se * self.stderr + 1e-12


def moment_samples(n_a: int, n_b: int, samples: int, seed: int, s: Sequence[int] | None = None, basis=None):
    """Per-sample ``Tr Psi_B^2``, ``Tr Psi_B Psi~_B`` and fixed-basis average CE.

    ``A`` is the first ``n_a`` qubits, ``s`` uses global labels (default all of
    ``B``) and ``basis`` defaults to the computational basis.
    """
    n = n_a + n_b
    b = list(range(n_a, n))
    s = list(b) if s is None else list(s)
    local_s = [q - n_a for q in s]
    purity = np.empty(samples)
    overlap = np.empty(samples)
    ce = np.empty(samples)
    for i in range(samples):
        psi = sample_haar(n, seed, i)
        rho = partial_trace(psi, b)
        purity[i] = np.real(np.vdot(rho, rho))
        overlap[i] = np.real(np.vdot(rho, wootters_tilde(rho)))
        m = psi.reshape(2**n_a, 2**n_b)
        if basis is not None:
            m = np.asarray(basis).conj().T @ m
        probs = np.sum(np.abs(m) ** 2, axis=1)
        ce[i] = float(np.dot(probs, ce_batch(m, local_s)))
    return purity, overlap, ce


# --------------------------------------------------------------------------- #
# Sweeps
# --------------------------------------------------------------------------- #

SWEEP_COLUMNS = ("sample_index", "lme", "mea_or_ub", "ub", "lb", "seconds")


@dataclass(frozen=True)
class HaarSweepConfig:
    n_a: int
    n_b: int
    samples: int
    seed: int
    measure: MeasureKind
    pso: PsoConfig = field(default_factory=PsoConfig)

    def __post_init__(self):
        if self.samples < 1:
            raise ValueError("samples must be at least 1")
        if self.n_a < 1 or self.n_b < 1:
            raise ValueError("both subsystems need at least one qubit")
        check_capacity(self.n_a + self.n_b)

    @property
    def measured(self) -> list[int]:
        return list(range(self.n_a))


@dataclass(frozen=True)
class SweepRow:
    sample_index: int
    lme: float
    mea_or_ub: float
    ub: float
    lb: float
    seconds: float = 0.0

    def as_tuple(self):
        return (self.sample_index, self.lme, self.mea_or_ub, self.ub, self.lb, self.seconds)


def sweep_one(cfg: HaarSweepConfig, index: int, psi=None, timing: bool = False) -> SweepRow:
    start = time.perf_counter()
    if psi is None:
        psi = sample_haar(cfg.n_a + cfg.n_b, cfg.seed, index)
    a = cfg.measured
    pso = cfg.pso.with_seed(derived_seed(cfg.seed, index, 1))
    lme, _ = lme_estimate(psi, a, cfg.measure, pso)
    ub = upper_bound(psi, a, cfg.measure)
    lb = lower_bound(psi, a, cfg.measure)
    elapsed = time.perf_counter() - start if timing else 0.0
    return SweepRow(index, lme, ub, ub, lb, elapsed)


def haar_sweep(cfg: HaarSweepConfig, *, threads: int = 1, timing: bool = False, states=None) -> list[SweepRow]:
    """One row per sample: LME estimate, upper bound (exact assistance for the
    n-tangle) and lower bound.

    ``states`` replaces the Haar samples when given. Rows come back in sample
    order whatever the thread count; ``seconds`` is only filled with
    ``timing=True`` so that untimed output is reproducible byte for byte.
    """
    inputs = list(states) if states is not None else [None] * cfg.samples
    work = lambda i: sweep_one(cfg, i, inputs[i], timing)
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(work, range(len(inputs))))
    return [work(i) for i in range(len(inputs))]


def rows_to_csv(rows: Sequence[SweepRow]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(SWEEP_COLUMNS)
    for r in rows:
        w.writerow([r.sample_index] + [repr(float(x)) for x in r.as_tuple()[1:]])
    return buf.getvalue()


def rows_from_csv(text: str) -> list[SweepRow]:
    reader = csv.DictReader(io.StringIO(text))
    if tuple(reader.fieldnames or ()) != SWEEP_COLUMNS:
        raise ValueError(f"expected columns {SWEEP_COLUMNS}, got {reader.fieldnames}")
    return [
        SweepRow(int(r["sample_index"]), *(float(r[c]) for c in SWEEP_COLUMNS[1:]))
        for r in reader
    ]
