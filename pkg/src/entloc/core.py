"""Dense state-vector and density-matrix utilities for qubit registers.

Qubit ordering is big-endian everywhere: qubit 0 is the most significant bit
of a basis-state index, so ``|q0 q1 ... q(n-1)>`` has index
``q0 * 2**(n-1) + ... + q(n-1)``.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

DEFAULT_CAPACITY = 20
HARD_CAPACITY = 24
NORM_TOL = 1e-12

PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)
PAULI_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
PAULI_Z = np.array([[1, 0], [0, -1]], dtype=complex)
PAULIS = (PAULI_X, PAULI_Y, PAULI_Z)


class CapacityError(ValueError):
    """Raised when a register would exceed the configured qubit limit."""


def capacity() -> int:
    """Maximum register size, overridable through ``ENTLOC_CAPACITY``."""
    raw = os.environ.get("ENTLOC_CAPACITY")
    if raw is None:
        return DEFAULT_CAPACITY
    try:
        value = int(raw)
    except ValueError as exc:
        raise CapacityError(f"ENTLOC_CAPACITY must be an integer, got {raw!r}") from exc
    if not 1 <= value <= HARD_CAPACITY:
        raise CapacityError(f"ENTLOC_CAPACITY must lie in [1, {HARD_CAPACITY}], got {value}")
    return value


def check_capacity(n_qubits: int) -> None:
    limit = capacity()
    if n_qubits > limit:
        raise CapacityError(f"{n_qubits} qubits exceeds the capacity of {limit}")


def num_qubits(dim: int) -> int:
    n = int(dim).bit_length() - 1
    if dim < 1 or 1 << n != dim:
        raise ValueError(f"dimension {dim} is not a power of two")
    return n


def check_mask(members: Sequence[int], n_qubits: int, *, allow_empty: bool = False) -> list[int]:
    """Validate a qubit subset and return it sorted."""
    out = sorted(int(q) for q in members)
    if len(set(out)) != len(out):
        raise ValueError(f"duplicate qubit indices in {list(members)}")
    if not out and not allow_empty:
        raise ValueError("qubit subset must be nonempty")
    for q in out:
        if not 0 <= q < n_qubits:
            raise IndexError(f"qubit index {q} out of range for {n_qubits} qubits")
    return out


def complement(members: Sequence[int], n_qubits: int) -> list[int]:
    chosen = set(members)
    return [q for q in range(n_qubits) if q not in chosen]


@dataclass(frozen=True)
class StateVector:
    """Normalized pure state on ``n_qubits`` qubits.

    The zero vector is admitted (``allow_zero=True``) to stand for a
    zero-probability measurement branch.
    """

    amplitudes: np.ndarray

    def __init__(self, amplitudes, *, allow_zero: bool = False):
        amps = np.array(amplitudes, dtype=complex).reshape(-1)
        n = num_qubits(amps.size)
        check_capacity(n)
        norm = np.linalg.norm(amps)
        if not (abs(norm - 1.0) <= NORM_TOL or (allow_zero and norm == 0.0)):
            raise ValueError(f"state is not normalized (norm = {norm:.15g})")
        amps.setflags(write=False)
        object.__setattr__(self, "amplitudes", amps)

    @property
    def n_qubits(self) -> int:
        return num_qubits(self.amplitudes.size)

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.amplitudes, dtype=dtype)

    def __len__(self) -> int:
        return self.amplitudes.size

    def to_json(self) -> dict:
        return {
            "n_qubits": self.n_qubits,
            "re": self.amplitudes.real.tolist(),
            "im": self.amplitudes.imag.tolist(),
        }

    @classmethod
    def from_json(cls, doc: dict) -> "StateVector":
        try:
            n = int(doc["n_qubits"])
            re = np.asarray(doc["re"], dtype=float)
            im = np.asarray(doc.get("im", np.zeros_like(re)), dtype=float)
        except (KeyError, TypeError) as exc:
            raise ValueError(f"malformed state document: {exc}") from exc
        if re.shape != im.shape or re.size != 1 << n:
            raise ValueError(f"state document needs 2**{n} real and imaginary parts")
        return cls(re + 1j * im)


def load_state(path: str | Path) -> StateVector:
    with open(path) as fh:
        return StateVector.from_json(json.load(fh))


def save_state(state, path: str | Path) -> None:
    sv = state if isinstance(state, StateVector) else StateVector(state)
    with open(path, "w") as fh:
        json.dump(sv.to_json(), fh)


def as_state(psi) -> np.ndarray:
    """Return amplitudes as a 1-D complex array of power-of-two length."""
    amps = np.asarray(psi, dtype=complex).reshape(-1)
    num_qubits(amps.size)
    return amps


def as_operator(rho) -> np.ndarray:
    mat = np.asarray(rho, dtype=complex)
    if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {mat.shape}")
    num_qubits(mat.shape[0])
    return mat


def projector(psi) -> np.ndarray:
    v = as_state(psi)
    return np.outer(v, v.conj())


# --------------------------------------------------------------------------- #
# Named states
# --------------------------------------------------------------------------- #

def basis_state(bits: str | Sequence[int]) -> np.ndarray:
    bits = [int(b) for b in bits]
    check_capacity(len(bits))
    idx = 0
    for b in bits:
        idx = (idx << 1) | b
    out = np.zeros(1 << len(bits), dtype=complex)
    out[idx] = 1.0
    return out


def plus_state(n: int) -> np.ndarray:
    check_capacity(n)
    return np.full(1 << n, 2.0 ** (-n / 2), dtype=complex)


def ghz_state(n: int) -> np.ndarray:
    check_capacity(n)
    out = np.zeros(1 << n, dtype=complex)
    out[0] = out[-1] = 1 / np.sqrt(2)
    return out


def w_state(n: int) -> np.ndarray:
    check_capacity(n)
    out = np.zeros(1 << n, dtype=complex)
    for q in range(n):
        out[1 << (n - 1 - q)] = 1 / np.sqrt(n)
    return out


def bell_state() -> np.ndarray:
    return ghz_state(2)


# --------------------------------------------------------------------------- #
# Register manipulation
# --------------------------------------------------------------------------- #

def tensor_product(a, b) -> np.ndarray:
    """State on ``a``'s qubits followed by ``b``'s (``a`` is more significant)."""
    va, vb = as_state(a), as_state(b)
    check_capacity(num_qubits(va.size) + num_qubits(vb.size))
    return np.kron(va, vb)


def apply_local(psi, ops: Sequence[np.ndarray], qubits: Sequence[int]) -> np.ndarray:
    """Apply single-qubit operators ``ops[k]`` to ``qubits[k]``."""
    v = as_state(psi)
    n = num_qubits(v.size)
    t = v.reshape((2,) * n)
    for op, q in zip(ops, qubits):
        t = np.moveaxis(np.tensordot(np.asarray(op), t, axes=([1], [q])), 0, q)
    return t.reshape(-1)


def split_matrix(psi, first: Sequence[int]) -> np.ndarray:
    """Reshape a state into a ``(2**len(first), rest)`` matrix.

    Rows are indexed by the qubits in ``first`` (in the given order), columns by
    the remaining qubits in increasing order.
    """
    v = as_state(psi)
    n = num_qubits(v.size)
    first = list(first)
    rest = complement(first, n)
    t = v.reshape((2,) * n).transpose(first + rest)
    return t.reshape(1 << len(first), 1 << len(rest))


def partial_trace(state, keep: Sequence[int]) -> np.ndarray:
    """Reduced density operator on the qubits in ``keep``.

    ``state`` is either a state vector or a density matrix. The kept qubits are
    ordered increasingly in the result.
    """
    arr = np.asarray(state, dtype=complex)
    if arr.ndim == 1 or (arr.ndim == 2 and 1 in arr.shape):
        v = as_state(arr)
        n = num_qubits(v.size)
        keep = check_mask(keep, n)
        m = split_matrix(v, keep)
        return m @ m.conj().T
    rho = as_operator(arr)
    n = num_qubits(rho.shape[0])
    keep = check_mask(keep, n)
    drop = complement(keep, n)
    t = rho.reshape((2,) * (2 * n))
    perm = keep + drop + [n + q for q in keep] + [n + q for q in drop]
    dk, dd = 1 << len(keep), 1 << len(drop)
    t = t.transpose(perm).reshape(dk, dd, dk, dd)
    return np.einsum("ajbj->ab", t)


def purity(rho) -> float:
    m = as_operator(rho)
    return float(np.real(np.vdot(m.conj().T, m)))


# --------------------------------------------------------------------------- #
# Spectral helpers
# --------------------------------------------------------------------------- #

def hermitian_eig(m) -> tuple[np.ndarray, np.ndarray]:
    """Eigenvalues (descending) and matching eigenvector columns."""
    mat = np.asarray(m, dtype=complex)
    vals, vecs = np.linalg.eigh(mat)
    order = np.argsort(vals, kind="stable")[::-1]
    return vals[order], vecs[:, order]


def svd(m) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """``m = u @ diag(s) @ vh`` with ``s`` descending."""
    return np.linalg.svd(np.asarray(m, dtype=complex))


def max_singular_value(m) -> float:
    return float(np.linalg.svd(np.asarray(m), compute_uv=False)[0])


def _check_psd(rho: np.ndarray, tol: float = 1e-10) -> np.ndarray:
    if not np.allclose(rho, rho.conj().T, atol=tol):
        raise ValueError("operator is not Hermitian")
    vals = np.linalg.eigvalsh(rho)
    if vals[0] < -tol:
        raise ValueError(f"operator is not positive semidefinite (min eigenvalue {vals[0]:.3g})")
    return vals


def psd_sqrt(rho) -> np.ndarray:
    """Square root of a PSD matrix; eigenvalues at round-off level are zeroed."""
    mat = as_operator(rho)
    mat = (mat + mat.conj().T) / 2
    vals, vecs = np.linalg.eigh(mat)
    cutoff = max(vals[-1], 0.0) * mat.shape[0] * 1e-14
    root = np.sqrt(np.where(vals > cutoff, vals, 0.0))
    return (vecs * root) @ vecs.conj().T


def fidelity(rho, sigma) -> float:
    """Uhlmann fidelity ``Tr sqrt(sqrt(rho) sigma sqrt(rho))`` (not squared).

    Evaluated as the trace norm of ``sqrt(rho) sqrt(sigma)``, which keeps
    orthogonal supports at exactly zero up to round-off.
    """
    a, b = as_operator(rho), as_operator(sigma)
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")
    _check_psd(a)
    _check_psd(b)
    s = np.linalg.svd(psd_sqrt(a) @ psd_sqrt(b), compute_uv=False)
    return float(min(max(s.sum(), 0.0), 1.0))


def trace_norm(m) -> float:
    return float(np.linalg.svd(np.asarray(m, dtype=complex), compute_uv=False).sum())


def _as_density(x) -> np.ndarray:
    arr = np.asarray(x, dtype=complex)
    return projector(arr) if arr.ndim == 1 else as_operator(arr)


def trace_distance(a, b) -> float:
    """Unnormalized trace norm ``||a - b||_1`` (orthogonal pure states give 2).

    Vectors are promoted to projectors first.
    """
    da, db = _as_density(a), _as_density(b)
    if da.shape != db.shape:
        raise ValueError(f"dimension mismatch: {da.shape} vs {db.shape}")
    diff = da - db
    return float(np.abs(np.linalg.eigvalsh((diff + diff.conj().T) / 2)).sum())


# --------------------------------------------------------------------------- #
# Spin flip
# --------------------------------------------------------------------------- #

def sigma_y_phases(n: int) -> np.ndarray:
    """Diagonal phases of ``Y^{(x)n}`` viewed as a signed bit-flip.

    ``(Y^{(x)n} v)[x] = phases[x] * v[x ^ (2**n - 1)]``.
    """
    idx = np.arange(1 << n)
    ones = np.zeros(1 << n, dtype=int)
    for q in range(n):
        ones += (idx >> q) & 1
    # sigma_y|1> = -i|0>, sigma_y|0> = i|1>: row bit 1 picks up +i, row bit 0 picks up -i
    return (1j) ** ones * (-1j) ** (n - ones)


def wootters_tilde(x) -> np.ndarray:
    """Spin-flipped state ``Y^{(x)n} conj(psi)`` or operator ``Y^{(x)n} conj(rho) Y^{(x)n}``.

    The global phase of the vector form follows the literal definition with
    ``sigma_y = [[0, -i], [i, 0]]``, so ``|0> -> i|1>``.
    """
    arr = np.asarray(x, dtype=complex)
    if arr.ndim == 1:
        n = num_qubits(arr.size)
        return sigma_y_phases(n) * arr.conj()[::-1]
    rho = as_operator(arr)
    n = num_qubits(rho.shape[0])
    ph = sigma_y_phases(n)
    flipped = rho.conj()[::-1, ::-1]
    return ph[:, None] * flipped * ph.conj()[None, :]


# --------------------------------------------------------------------------- #
# Takagi factorization
# --------------------------------------------------------------------------- #

def takagi_factorization(m, *, sym_tol: float = 1e-10) -> tuple[np.ndarray, np.ndarray]:
    """Factor a complex symmetric ``m`` as ``u @ diag(sigma) @ u.T``.

    Returns ``(u, sigma)`` with ``u`` unitary and ``sigma`` sorted descending.

    Uses the real symmetric embedding ``[[Re m, Im m], [Im m, -Re m]]``, whose
    eigenpairs ``(x; y), s`` with ``s > 0`` give Takagi vectors ``x + i y``.
    Degenerate singular values need no special care there because any
    orthonormal eigenbasis of the embedding works. Round-off-level singular
    values are completed with an orthonormal basis of the remaining space.
    """
    a = np.asarray(m, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {a.shape}")
    scale = max(1.0, float(np.abs(a).max(initial=0.0)))
    if not np.allclose(a, a.T, atol=sym_tol * scale, rtol=0):
        raise ValueError("matrix is not symmetric")
    n = a.shape[0]
    if n == 0:
        return np.zeros((0, 0), dtype=complex), np.zeros(0)
    a = (a + a.T) / 2
    re, im = a.real, a.imag
    big = np.block([[re, im], [im, -re]])
    vals, vecs = np.linalg.eigh(big)
    vals, vecs = vals[::-1][:n], vecs[:, ::-1][:, :n]
    u = vecs[:n] + 1j * vecs[n:]
    sigma = np.clip(vals, 0.0, None)

    cutoff = np.linalg.norm(a, 2) * n * 1e-13
    keep = sigma > cutoff
    if not keep.all():
        u_kept = _orthonormalize(u[:, keep])
        u = np.concatenate([u_kept, _orthonormal_complement(u_kept, n)], axis=1)
        sigma = np.concatenate([sigma[keep], np.zeros(n - keep.sum())])
    else:
        u = _orthonormalize(u)
    return u, sigma


def _orthonormalize(u: np.ndarray) -> np.ndarray:
    """Nearest matrix with orthonormal columns (polar factor)."""
    if u.shape[1] == 0:
        return u
    left, _, right = np.linalg.svd(u, full_matrices=False)
    return left @ right


def _orthonormal_complement(u: np.ndarray, n: int) -> np.ndarray:
    k = u.shape[1]
    if k == n:
        return np.zeros((n, 0), dtype=complex)
    proj = np.eye(n, dtype=complex) - u @ u.conj().T
    left, _, _ = np.linalg.svd(proj)
    return left[:, : n - k]
