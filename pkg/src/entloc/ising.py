"""Transverse-field Ising chain: exact ground states and localization sweeps."""

from __future__ import annotations

import csv
import io
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .core import check_capacity, check_mask, complement
from .haar import derived_seed
from .localization import ce_lower_bound, ce_upper_bound, lme_estimate, mea_tau_exact
from .measures import MeasureKind
from .pso import PsoConfig

DEGENERACY_TOL = 1e-9
MAX_SITES = 12


@dataclass(frozen=True)
class TfimParams:
    """``H = -J sum X_i X_{i+1} - h sum Z_i - h_x sum X_i``."""

    n: int
    j: float
    h: float = 1.0
    h_x: float = 0.0
    periodic: bool = True

    def __post_init__(self):
        if self.n < 2:
            raise ValueError("need at least two sites")
        if self.h < 0:
            raise ValueError("transverse field h must be nonnegative")
        check_capacity(self.n)

    @property
    def j_over_h(self) -> float:
        return self.j / self.h if self.h else float("inf")


def _bonds(p: TfimParams) -> list[tuple[int, int]]:
    bonds = [(i, i + 1) for i in range(p.n - 1)]
    if p.periodic:
        # for two sites the wrap-around bond doubles the single open bond
        bonds.append((p.n - 1, 0))
    return bonds


def tfim_hamiltonian(p: TfimParams) -> np.ndarray:
    """Dense real symmetric Hamiltonian in the big-endian computational basis."""
    n = p.n
    dim = 1 << n
    idx = np.arange(dim)
    bit = lambda q: (idx >> (n - 1 - q)) & 1
    h = np.zeros((dim, dim))
    z_sum = sum(1 - 2 * bit(q) for q in range(n))
    h[idx, idx] = -p.h * z_sum
    for u, v in _bonds(p):
        flip = idx ^ (1 << (n - 1 - u)) ^ (1 << (n - 1 - v))
        np.add.at(h, (flip, idx), -p.j)
    if p.h_x:
        for q in range(n):
            np.add.at(h, (idx ^ (1 << (n - 1 - q)), idx), -p.h_x)
    return h


def parity_operator(n: int) -> np.ndarray:
    """Diagonal of ``prod_i Z_i``, the spin-flip symmetry of the chain at ``h_x = 0``."""
    idx = np.arange(1 << n)
    ones = np.zeros(1 << n, dtype=int)
    for q in range(n):
        ones += (idx >> q) & 1
    return (1 - 2 * (ones % 2)).astype(float)


def cat_state(n: int) -> np.ndarray:
    """``(|+>^n + |->^n) / sqrt(2)``."""
    plus = np.full(1 << n, 2.0 ** (-n / 2))
    # |->^n carries the sign (-1)^{popcount} relative to |+>^n
    v = plus + plus * parity_operator(n)
    return v / np.linalg.norm(v)


def ground_state(p: TfimParams) -> tuple[float, np.ndarray]:
    """Lowest eigenpair.

    A degenerate ground space is resolved by projecting the cat state
    ``(|+>^n + |->^n)/sqrt(2)`` onto it. The sign is fixed so that the
    largest-magnitude amplitude (first one on ties) is positive.
    """
    if p.n > MAX_SITES:
        raise ValueError(f"dense ground states are limited to {MAX_SITES} sites")
    vals, vecs = np.linalg.eigh(tfim_hamiltonian(p))
    e0 = vals[0]
    ground = vecs[:, vals - e0 < DEGENERACY_TOL]
    if ground.shape[1] == 1:
        v = ground[:, 0]
    else:
        proj = ground @ (ground.T @ cat_state(p.n))
        norm = np.linalg.norm(proj)
        v = proj / norm if norm > 1e-8 else ground[:, 0]
    k = int(np.argmax(np.abs(v) > np.abs(v).max() - 1e-12))
    v = v if v[k] > 0 else -v
    return float(e0), v.astype(complex)


# --------------------------------------------------------------------------- #
# Sweeps
# --------------------------------------------------------------------------- #

ISING_COLUMNS = ("j_over_h", "h_x", "energy", "lme_tau", "mea_tau", "lme_ce", "ce_ub", "ce_lb")


@dataclass(frozen=True)
class IsingRow:
    j_over_h: float
    h_x: float
    energy: float
    lme_tau: float
    mea_tau: float
    lme_ce: float
    ce_ub: float
    ce_lb: float

    def as_tuple(self):
        return tuple(getattr(self, c) for c in ISING_COLUMNS)


def tfim_grid(n: int, j_over_h: Sequence[float], h: float = 1.0, h_x_ratio: float = 0.0, periodic: bool = True):
    return [TfimParams(n, float(r) * h, h, h_x_ratio * h, periodic) for r in j_over_h]


def _kept_and_labels(n: int, a: Sequence[int], ce_s: Sequence[int] | None):
    a = check_mask(a, n)
    b = complement(a, n)
    if not b:
        raise ValueError("measured subsystem must be a proper subset")
    s = list(b) if ce_s is None else check_mask(ce_s, n)
    return a, b, s


def sweep_point(
    p: TfimParams, a: Sequence[int], cfg: PsoConfig, ce_s=None, index: int = 0, include_ce: bool = True
) -> IsingRow:
    """One sweep row; ``lme_ce`` is NaN when ``include_ce`` is false."""
    a, b, s = _kept_and_labels(p.n, a, ce_s)
    energy, psi = ground_state(p)
    lme_tau, _ = lme_estimate(psi, a, MeasureKind.ntangle(), cfg.with_seed(derived_seed(cfg.seed, index, 0)))
    lme_ce = float("nan")
    if include_ce:
        lme_ce, _ = lme_estimate(psi, a, MeasureKind.ce(s), cfg.with_seed(derived_seed(cfg.seed, index, 1)))
    # the n-tangle of an odd register vanishes identically, so its assistance is 0
    mea = mea_tau_exact(psi, a) if len(b) % 2 == 0 else 0.0
    lb = ce_lower_bound(psi, s) ** 2 if len(s) >= 2 else 0.0
    return IsingRow(p.j_over_h, p.h_x, energy, lme_tau, mea, lme_ce, ce_upper_bound(psi, a, s), lb)


def ising_sweep(
    grid: Sequence[TfimParams],
    a: Sequence[int],
    cfg: PsoConfig | None = None,
    *,
    ce_s: Sequence[int] | None = None,
    threads: int = 1,
    include_ce: bool = True,
) -> list[IsingRow]:
    """Localization figures of the ground state at each grid point.

    ``a`` and ``ce_s`` are 0-based site labels; ``ce_s`` defaults to every kept
    site. Each point gets its own derived PSO seed, so rows do not depend on
    ``threads``.
    """
    cfg = cfg or PsoConfig()
    work = lambda item: sweep_point(item[1], a, cfg, ce_s, item[0], include_ce)
    items = list(enumerate(grid))
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(work, items))
    return [work(it) for it in items]


def rows_to_csv(rows: Sequence[IsingRow]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(ISING_COLUMNS)
    for r in rows:
        w.writerow([repr(float(x)) for x in r.as_tuple()])
    return buf.getvalue()


def rows_from_csv(text: str) -> list[IsingRow]:
    reader = csv.DictReader(io.StringIO(text))
    if tuple(reader.fieldnames or ()) != ISING_COLUMNS:
        raise ValueError(f"expected columns {ISING_COLUMNS}, got {reader.fieldnames}")
    return [IsingRow(*(float(r[c]) for c in ISING_COLUMNS)) for r in reader]
