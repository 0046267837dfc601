"""Pure-state multipartite entanglement measures.

All functions also accept a stack of states (shape ``(k, 2**n)``) through the
``*_batch`` variants, which is what the optimizers use. Rows may be
unnormalized; the batch helpers normalize internally and map zero rows to 0.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations
from typing import Iterable, Sequence

import numpy as np

from .core import as_state, check_mask, num_qubits, sigma_y_phases

MAX_CE_LABELS = 12
ZERO_PROB = 1e-14

KIND_NAMES = ("ntangle", "gme", "ce", "sqrt_ce")


@dataclass(frozen=True)
class MeasureKind:
    """Which entanglement measure to evaluate.

    ``s`` is the CE label set and is only used (and required) for ``ce`` and
    ``sqrt_ce``.
    """

    name: str
    s: tuple[int, ...] | None = None

    def __post_init__(self):
        if self.name not in KIND_NAMES:
            raise ValueError(f"unknown measure {self.name!r}; choose from {KIND_NAMES}")
        if self.name in ("ce", "sqrt_ce"):
            if not self.s:
                raise ValueError(f"{self.name} requires a nonempty label set s")
            s = tuple(sorted(int(q) for q in self.s))
            if len(set(s)) != len(s):
                raise ValueError(f"duplicate labels in s = {self.s}")
            if len(s) > MAX_CE_LABELS:
                raise ValueError(f"|s| = {len(s)} exceeds the limit of {MAX_CE_LABELS}")
            object.__setattr__(self, "s", s)
        elif self.s is not None:
            raise ValueError(f"{self.name} takes no label set")

    @classmethod
    def ntangle(cls) -> "MeasureKind":
        return cls("ntangle")

    @classmethod
    def gme(cls) -> "MeasureKind":
        return cls("gme")

    @classmethod
    def ce(cls, s: Iterable[int]) -> "MeasureKind":
        return cls("ce", tuple(s))

    @classmethod
    def sqrt_ce(cls, s: Iterable[int]) -> "MeasureKind":
        return cls("sqrt_ce", tuple(s))

    @property
    def uses_labels(self) -> bool:
        return self.s is not None

    def relabel(self, mapping: dict[int, int]) -> "MeasureKind":
        """Same measure with ``s`` translated through ``mapping``."""
        if self.s is None:
            return self
        try:
            return MeasureKind(self.name, tuple(mapping[q] for q in self.s))
        except KeyError as exc:
            raise ValueError(f"label {exc.args[0]} is not among the kept qubits") from exc

    def __str__(self) -> str:
        if self.s is None:
            return self.name
        return f"{self.name}[{','.join(map(str, self.s))}]"


# --------------------------------------------------------------------------- #
# Batched primitives
# --------------------------------------------------------------------------- #

def _as_batch(states) -> tuple[np.ndarray, int]:
    arr = np.asarray(states, dtype=complex)
    if arr.ndim == 1:
        arr = arr[None, :]
    return arr, num_qubits(arr.shape[1])


def _normalized(batch: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Rows scaled to unit norm, and a mask of rows that were not (near) zero."""
    norms = np.linalg.norm(batch, axis=1)
    live = norms**2 > ZERO_PROB
    safe = np.where(live, norms, 1.0)
    return batch / safe[:, None], live


def subset_purity_batch(batch: np.ndarray, n: int, subset: Sequence[int]) -> np.ndarray:
    """``Tr rho_gamma^2`` for each row; the empty subset gives ``|psi|^4``."""
    k = batch.shape[0]
    if len(subset) == 0 or len(subset) == n:
        return np.sum(np.abs(batch) ** 2, axis=1) ** 2
    rest = [q for q in range(n) if q not in subset]
    t = batch.reshape((k,) + (2,) * n).transpose([0] + [q + 1 for q in subset] + [q + 1 for q in rest])
    m = t.reshape(k, 1 << len(subset), 1 << len(rest))
    if m.shape[1] <= m.shape[2]:
        g = np.einsum("kab,kcb->kac", m, m.conj())
    else:
        g = np.einsum("kba,kbc->kac", m, m.conj())
    return np.sum(np.abs(g) ** 2, axis=(1, 2))


def linear_entropy_batch(unit: np.ndarray, n: int, subset: Sequence[int]) -> np.ndarray:
    """``1 - Tr rho_gamma^2`` for each normalized row, from Schmidt coefficients.

    Evaluated as ``2 sum_{i<j} l_i l_j`` over squared singular values, so a
    product cut gives round-off of order ``eps**2`` rather than ``eps``.
    """
    k = unit.shape[0]
    if len(subset) == 0 or len(subset) == n:
        return np.zeros(k)
    rest = [q for q in range(n) if q not in subset]
    t = unit.reshape((k,) + (2,) * n).transpose([0] + [q + 1 for q in subset] + [q + 1 for q in rest])
    m = t.reshape(k, 1 << len(subset), 1 << len(rest))
    lam = np.linalg.svd(m, compute_uv=False) ** 2
    tail = np.cumsum(lam[:, ::-1], axis=1)[:, ::-1]
    e2 = np.sum(lam[:, :-1] * tail[:, 1:], axis=1)
    return 2.0 * e2


def ntangle_batch(states) -> np.ndarray:
    """``|<psi|psi~>|`` for each normalized row (zero rows give 0)."""
    batch, n = _as_batch(states)
    unit, live = _normalized(batch)
    ph = sigma_y_phases(n)
    val = np.abs(np.sum(unit * unit[:, ::-1] * ph, axis=1))
    return np.where(live, np.clip(val, 0.0, 1.0), 0.0)


def _bipartitions(n: int) -> list[tuple[int, ...]]:
    # each cut counted once via the side that holds qubit 0
    others = range(1, n)
    out = []
    for r in range(0, n - 1):
        for extra in combinations(others, r):
            out.append((0,) + extra)
    return out


def gme_batch(states) -> np.ndarray:
    batch, n = _as_batch(states)
    if n < 2:
        raise ValueError("GME concurrence needs at least two qubits")
    unit, live = _normalized(batch)
    best = np.full(unit.shape[0], np.inf)
    for gamma in _bipartitions(n):
        best = np.minimum(best, np.sqrt(2.0 * linear_entropy_batch(unit, n, gamma)))
    return np.where(live, np.clip(best, 0.0, 1.0), 0.0)


def ce_batch(states, s: Sequence[int]) -> np.ndarray:
    batch, n = _as_batch(states)
    s = check_mask(s, n)
    if len(s) > MAX_CE_LABELS:
        raise ValueError(f"|s| = {len(s)} exceeds the limit of {MAX_CE_LABELS}")
    unit, live = _normalized(batch)
    # no square root here, so Gram-matrix purities are accurate enough and cheaper than SVDs
    total = np.ones(unit.shape[0])
    for r in range(1, len(s) + 1):
        for gamma in combinations(s, r):
            total += subset_purity_batch(unit, n, gamma)
    val = 1.0 - total / 2.0 ** len(s)
    return np.where(live, np.clip(val, 0.0, 1.0), 0.0)


def evaluate_batch(kind: MeasureKind, states) -> np.ndarray:
    if kind.name == "ntangle":
        return ntangle_batch(states)
    if kind.name == "gme":
        return gme_batch(states)
    vals = ce_batch(states, kind.s)
    return np.sqrt(vals) if kind.name == "sqrt_ce" else vals


def weighted_average_batch(kind: MeasureKind, branches: np.ndarray) -> np.ndarray:
    """``sum_i p_i E(phi_i)`` for unnormalized branches ``branches[..., i, :]``.

    ``p_i`` is the squared norm of branch ``i``; branches with ``p_i < 1e-14``
    contribute nothing.
    """
    arr = np.asarray(branches, dtype=complex)
    lead = arr.shape[:-1]
    flat = arr.reshape(-1, arr.shape[-1])
    probs = np.sum(np.abs(flat) ** 2, axis=1)
    vals = evaluate_batch(kind, flat)
    contrib = np.where(probs > ZERO_PROB, probs * vals, 0.0).reshape(lead)
    return contrib.sum(axis=-1)


# --------------------------------------------------------------------------- #
# Single-state API
# --------------------------------------------------------------------------- #

def n_tangle(psi) -> float:
    """``|<psi|Y^{(x)n} psi*>|``; vanishes identically for odd ``n``."""
    return float(ntangle_batch(as_state(psi))[0])


def gme_concurrence(psi) -> float:
    """Minimum over bipartitions of ``sqrt(2 (1 - Tr rho_gamma^2))``."""
    return float(gme_batch(as_state(psi))[0])


def concentratable_entanglement(psi, s: Sequence[int]) -> float:
    """``1 - 2**-|s| * sum_{gamma subset s} Tr rho_gamma^2`` with the empty term 1."""
    v = as_state(psi)
    if len(s) == 0:
        raise ValueError("label set s must be nonempty")
    return float(ce_batch(v, s)[0])


def evaluate(kind: MeasureKind, psi) -> float:
    """Dispatch on ``kind``; the zero vector evaluates to 0 for every measure."""
    return float(evaluate_batch(kind, as_state(psi))[0])


def parse_kind(name: str, s: Sequence[int] | None = None) -> MeasureKind:
    key = name.strip().lower().replace("-", "_")
    aliases = {"tau": "ntangle", "n_tangle": "ntangle", "gme_concurrence": "gme", "sqrtce": "sqrt_ce"}
    key = aliases.get(key, key)
    if key in ("ce", "sqrt_ce"):
        return MeasureKind(key, tuple(s) if s is not None else None)
    if s:
        raise ValueError(f"{key} takes no label set")
    return MeasureKind(key)
