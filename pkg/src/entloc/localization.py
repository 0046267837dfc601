"""Measurement ensembles, localizable entanglement and its bounds.

A subsystem ``A`` of the register is measured with rank-1 projectors and the
entanglement left on the complement ``B`` is averaged over outcomes. Label sets
``s`` of CE measures always refer to global qubit indices (which must lie in
``B``).
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations
from typing import Sequence

import numpy as np

from .core import (
    PAULIS,
    as_state,
    check_mask,
    complement,
    fidelity,
    max_singular_value,
    num_qubits,
    partial_trace,
    sigma_y_phases,
    split_matrix,
    takagi_factorization,
    wootters_tilde,
)
from .measures import (
    ZERO_PROB,
    MeasureKind,
    concentratable_entanglement,
    linear_entropy_batch,
    weighted_average_batch,
)
from .pso import BoxBounds, PsoConfig, maximize

UNITARY_TOL = 1e-9


def split(psi, a: Sequence[int]) -> tuple[np.ndarray, list[int], list[int]]:
    """Amplitudes plus validated ``A`` and ``B`` (both sorted, both nonempty)."""
    v = as_state(psi)
    n = num_qubits(v.size)
    a = check_mask(a, n)
    b = complement(a, n)
    if not b:
        raise ValueError("measured subsystem must be a proper subset")
    return v, a, b


def kind_on_kept(kind: MeasureKind, kept: Sequence[int]) -> MeasureKind:
    """Translate a measure whose ``s`` uses global labels to local ``B`` labels."""
    return kind.relabel({q: i for i, q in enumerate(kept)})


# --------------------------------------------------------------------------- #
# Measurement bases
# --------------------------------------------------------------------------- #

def qubit_basis(theta: float, phi: float) -> np.ndarray:
    """Columns ``|v>, |v_perp>`` with ``|v> = cos(t/2)|0> + e^{i phi} sin(t/2)|1>``."""
    c, s = np.cos(theta / 2), np.sin(theta / 2)
    e = np.exp(1j * phi)
    return np.array([[c, -s / e], [e * s, c]])


def local_basis(params) -> np.ndarray:
    """Product basis on ``A`` from per-qubit ``(theta, phi)`` rows."""
    p = np.asarray(params, dtype=float).reshape(-1, 2)
    return _local_basis_batch(p[None])[0]


def _local_basis_batch(params: np.ndarray) -> np.ndarray:
    """``params`` of shape ``(k, n_a, 2)`` -> product unitaries ``(k, d_a, d_a)``."""
    theta, phi = params[..., 0], params[..., 1]
    c, s = np.cos(theta / 2), np.sin(theta / 2)
    e = np.exp(1j * phi)
    u = np.empty(params.shape[:2] + (2, 2), dtype=complex)
    u[..., 0, 0] = c
    u[..., 0, 1] = -s / e
    u[..., 1, 0] = e * s
    u[..., 1, 1] = c
    out = u[:, 0]
    for q in range(1, params.shape[1]):
        k, d = out.shape[0], out.shape[1]
        out = np.einsum("kab,kcd->kacbd", out, u[:, q]).reshape(k, 2 * d, 2 * d)
    return out


def check_unitary(basis) -> np.ndarray:
    w = np.asarray(basis, dtype=complex)
    if w.ndim != 2 or w.shape[0] != w.shape[1]:
        raise ValueError(f"basis must be a square matrix, got shape {w.shape}")
    if not np.allclose(w.conj().T @ w, np.eye(w.shape[0]), atol=UNITARY_TOL, rtol=0):
        raise ValueError("basis is not unitary")
    return w


# --------------------------------------------------------------------------- #
# Ensembles
# --------------------------------------------------------------------------- #

@dataclass(frozen=True)
class Ensemble:
    """Outcome probabilities and normalized post-measurement states on ``kept``.

    Branches with probability below 1e-14 carry the zero vector.
    """

    probabilities: np.ndarray
    states: np.ndarray
    kept: tuple[int, ...]

    @classmethod
    def from_branches(cls, branches: np.ndarray, kept: Sequence[int]) -> "Ensemble":
        probs = np.sum(np.abs(branches) ** 2, axis=1)
        live = probs > ZERO_PROB
        norms = np.where(live, np.sqrt(probs), 1.0)
        states = np.where(live[:, None], branches / norms[:, None], 0.0)
        return cls(np.where(live, probs, 0.0), states, tuple(kept))

    def __len__(self) -> int:
        return self.probabilities.size

    def __iter__(self):
        return iter(zip(self.probabilities, self.states))

    def density(self) -> np.ndarray:
        """``sum_i p_i |phi_i><phi_i|``, which equals the reduced state on ``kept``."""
        return np.einsum("i,ia,ib->ab", self.probabilities, self.states, self.states.conj())


def _branches(psi, a, basis: np.ndarray) -> tuple[np.ndarray, list[int]]:
    v, a, b = split(psi, a)
    m = split_matrix(v, a)
    if basis.shape[0] != m.shape[0]:
        raise ValueError(f"basis dimension {basis.shape[0]} does not match 2**|A| = {m.shape[0]}")
    # branch i is <w_i|_A psi
    return basis.conj().T @ m, b


def measure_global(psi, a: Sequence[int], basis) -> Ensemble:
    """Measure ``A`` in the orthonormal basis given by the columns of ``basis``."""
    branches, b = _branches(psi, a, check_unitary(basis))
    return Ensemble.from_branches(branches, b)


def measure_local(psi, a: Sequence[int], params) -> Ensemble:
    """Measure each qubit of ``A`` (in sorted order) in its own ``(theta, phi)`` basis.

    Outcome ``i`` is the big-endian bit string over ``A``; bit 0 selects ``|v>``
    and bit 1 selects ``|v_perp>``.
    """
    p = np.asarray(params, dtype=float)
    n_a = len(set(int(q) for q in a))
    if p.shape != (n_a, 2):
        raise ValueError(f"expected params of shape ({n_a}, 2), got {p.shape}")
    branches, b = _branches(psi, a, local_basis(p))
    return Ensemble.from_branches(branches, b)


def average_entanglement(ens: Ensemble, kind: MeasureKind) -> float:
    """``sum_i p_i E(phi_i)``; zero-probability branches contribute nothing."""
    local = kind_on_kept(kind, ens.kept)
    branches = ens.states * np.sqrt(ens.probabilities)[:, None]
    return float(weighted_average_batch(local, branches))


def fixed_basis_average(psi, a: Sequence[int], basis, kind: MeasureKind) -> float:
    return average_entanglement(measure_global(psi, a, basis), kind)


# --------------------------------------------------------------------------- #
# Entanglement of assistance for the n-tangle
# --------------------------------------------------------------------------- #

def _require_even_b(b: Sequence[int]) -> None:
    if len(b) % 2:
        raise ValueError(f"|B| = {len(b)} is odd; the exact n-tangle result needs an even kept register")


def mea_tau_exact(psi, a: Sequence[int]) -> float:
    """Best average n-tangle over all rank-1 measurements of ``A``.

    Equals the fidelity between the reduced state on ``B`` and its spin flip.
    """
    v, a, b = split(psi, a)
    _require_even_b(b)
    rho_b = partial_trace(v, b)
    return fidelity(rho_b, wootters_tilde(rho_b))


def tangle_matrix(psi, a: Sequence[int]) -> np.ndarray:
    """Complex symmetric ``T = M Y M^T`` with ``M`` the ``A x B`` amplitude matrix.

    A basis vector ``w`` on ``A`` leaves an unnormalized branch whose weighted
    n-tangle is ``|w^dagger T w^*|``.
    """
    v, a, b = split(psi, a)
    _require_even_b(b)
    m = split_matrix(v, a)
    ph = sigma_y_phases(len(b))
    # (Y M^T)[x, :] = ph[x] * M^T[flip x, :]
    return m @ (ph[:, None] * m.T[::-1])


def optimal_global_basis(psi, a: Sequence[int]) -> np.ndarray:
    """Measurement basis on ``A`` attaining :func:`mea_tau_exact`.

    With the Takagi factorization ``T = W diag(sigma) W^T`` of
    :func:`tangle_matrix`, measuring in the columns of ``W`` gives outcome ``i``
    weighted n-tangle ``sigma_i``, and the sum of the ``sigma_i`` is the
    fidelity.
    """
    w, _ = takagi_factorization(tangle_matrix(psi, a))
    return w


# --------------------------------------------------------------------------- #
# Bounds
# --------------------------------------------------------------------------- #

def gme_upper_bound(psi, a: Sequence[int]) -> float:
    """``min over proper nonempty gamma of B`` of ``sqrt(2 (1 - Tr rho_gamma^2))``."""
    v, a, b = split(psi, a)
    if len(b) < 2:
        raise ValueError("GME bound needs at least two kept qubits")
    n = num_qubits(v.size)
    batch = v[None]
    best = np.inf
    for r in range(1, len(b)):
        for gamma in combinations(b, r):
            best = min(best, float(np.sqrt(2.0 * linear_entropy_batch(batch, n, list(gamma))[0])))
    return float(min(best, 1.0))


def ce_upper_bound(psi, a: Sequence[int], s: Sequence[int]) -> float:
    """CE of the full state over ``s``; bounds every measurement's average CE."""
    v, a, b = split(psi, a)
    s = check_mask(s, num_qubits(v.size))
    if not set(s) <= set(b):
        raise ValueError(f"label set {s} is not contained in the kept qubits {b}")
    return concentratable_entanglement(v, s)


def correlation_matrix(psi, i: int, j: int) -> np.ndarray:
    """``Q[p, q] = <s_p^i s_q^j> - <s_p^i><s_q^j>`` over Pauli ``x, y, z``."""
    v = as_state(psi)
    n = num_qubits(v.size)
    check_mask([i, j], n)
    if i == j:
        raise ValueError("correlation matrix needs two distinct qubits")
    rho = partial_trace(v, [i, j])
    first = i < j
    q = np.empty((3, 3))
    one_i = [np.trace(rho @ (np.kron(P, np.eye(2)) if first else np.kron(np.eye(2), P))).real for P in PAULIS]
    one_j = [np.trace(rho @ (np.kron(np.eye(2), P) if first else np.kron(P, np.eye(2)))).real for P in PAULIS]
    for p, Pp in enumerate(PAULIS):
        for r, Pr in enumerate(PAULIS):
            op = np.kron(Pp, Pr) if first else np.kron(Pr, Pp)
            q[p, r] = np.trace(rho @ op).real - one_i[p] * one_j[r]
    return q


def ce_lower_bound_pairs(psi, s: Sequence[int]) -> dict[tuple[int, int], float]:
    """``sigma_max(Q^{ij}) / 2`` for every pair ``i < j`` in ``s``."""
    v = as_state(psi)
    s = check_mask(s, num_qubits(v.size))
    if len(s) < 2:
        raise ValueError("the correlation bound needs |s| >= 2")
    return {(i, j): 0.5 * max_singular_value(correlation_matrix(v, i, j)) for i, j in combinations(s, 2)}


def ce_lower_bound(psi, s: Sequence[int]) -> float:
    """Lower bound on the localizable square-root CE over ``s``.

    Squaring it bounds the localizable CE itself, since the average of
    square roots never exceeds the square root of the average.
    """
    return float(min(max(ce_lower_bound_pairs(psi, s).values()), 1.0))


def upper_bound(psi, a: Sequence[int], kind: MeasureKind) -> float:
    """Best available upper bound on the localizable entanglement for ``kind``.

    For the n-tangle on an odd kept register the bound is 0: ``Y^{(x)n}`` is
    then antisymmetric and every branch has vanishing tangle.
    """
    if kind.name == "ntangle":
        _, _, b = split(psi, a)
        return mea_tau_exact(psi, a) if len(b) % 2 == 0 else 0.0
    if kind.name == "gme":
        return gme_upper_bound(psi, a)
    ub = ce_upper_bound(psi, a, kind.s)
    return float(np.sqrt(ub)) if kind.name == "sqrt_ce" else ub


def lower_bound(psi, a: Sequence[int], kind: MeasureKind) -> float:
    """Guaranteed lower bound; 0 where no nontrivial bound is known."""
    if kind.name in ("ntangle", "gme") or len(kind.s) < 2:
        return 0.0
    split(psi, a)
    lb = ce_lower_bound(psi, kind.s)
    return lb if kind.name == "sqrt_ce" else lb**2


# --------------------------------------------------------------------------- #
# Localizable entanglement search
# --------------------------------------------------------------------------- #

def local_bounds(n_a: int) -> BoxBounds:
    """``theta`` in ``[0, pi]`` (reflecting), ``phi`` in ``[0, 2 pi)`` (periodic)."""
    lo = np.zeros(2 * n_a)
    hi = np.tile([np.pi, 2 * np.pi], n_a)
    return BoxBounds(lo, hi, np.tile([False, True], n_a))


def lme_objective(psi, a: Sequence[int], kind: MeasureKind):
    """Vectorized objective: rows of ``2 |A|`` angles to average entanglement."""
    v, a, b = split(psi, a)
    m = split_matrix(v, a)
    local = kind_on_kept(kind, b)
    n_a = len(a)

    def objective(points):
        pts = np.asarray(points, dtype=float).reshape(-1, n_a, 2)
        w = _local_basis_batch(pts)
        branches = np.einsum("kai,ab->kib", w.conj(), m)
        return weighted_average_batch(local, branches)

    return objective


def lme_estimate(
    psi,
    a: Sequence[int],
    kind: MeasureKind,
    cfg: PsoConfig | None = None,
    *,
    threads: int = 1,
) -> tuple[float, np.ndarray]:
    """Particle-swarm estimate of the localizable entanglement.

    The search always includes the all-Z and all-X product bases as starting
    particles. The value is the exact average entanglement of the returned
    angles, so it is a lower estimate of the true optimum.

    Returns:
        ``(value, params)`` with ``params`` of shape ``(|A|, 2)``.
    """
    v, a, b = split(psi, a)
    kind_on_kept(kind, b)
    n_a = len(a)
    z_point = np.zeros(2 * n_a)
    x_point = np.tile([np.pi / 2, 0.0], n_a)
    result = maximize(
        lme_objective(v, a, kind),
        local_bounds(n_a),
        cfg,
        vectorized=True,
        threads=threads,
        initial=np.stack([z_point, x_point]),
    )
    params = np.asarray(result.best_point).reshape(n_a, 2)
    return average_entanglement(measure_local(v, a, params), kind), params


# --------------------------------------------------------------------------- #
# Continuity
# --------------------------------------------------------------------------- #

def measure_lipschitz_bound(kind: MeasureKind, t: float) -> float:
    """Bound on ``|E(psi) - E(psi')|`` when ``||psi - psi'||_1 = t``."""
    if t < 0:
        raise ValueError("trace distance must be nonnegative")
    if kind.name in ("ntangle", "ce"):
        return float(np.sqrt(2) * t)
    if kind.name == "gme":
        return float(2 ** 0.75 * np.sqrt(t))
    raise ValueError(f"no continuity bound is available for {kind.name}")


def continuity_rhs(kind: MeasureKind, trace_dist: float) -> float:
    """``f(2 t) + t``: bound on the change of a fixed-basis average (and of the
    localizable entanglement) between states at trace distance ``t``."""
    return measure_lipschitz_bound(kind, 2 * trace_dist) + trace_dist
