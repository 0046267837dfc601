"""Graph states, weighted graph states and their measurement properties."""

from __future__ import annotations

import enum
from dataclasses import dataclass
from itertools import combinations
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .core import check_capacity, check_mask, complement, partial_trace, purity
from .gf2 import f2_rank, f2_solve
from .localization import Ensemble, measure_local, average_entanglement
from .measures import MeasureKind


@dataclass(frozen=True)
class Graph:
    """Simple undirected graph on vertices ``0 .. n-1``."""

    adjacency: np.ndarray

    def __init__(self, adjacency):
        adj = np.asarray(adjacency, dtype=np.uint8)
        if adj.ndim != 2 or adj.shape[0] != adj.shape[1]:
            raise ValueError("adjacency must be square")
        if not np.array_equal(adj, adj.T):
            raise ValueError("adjacency must be symmetric")
        if np.any(np.diag(adj)):
            raise ValueError("self-loops are not allowed")
        if np.any(adj > 1):
            raise ValueError("adjacency entries must be 0 or 1")
        adj = adj.copy()
        adj.setflags(write=False)
        object.__setattr__(self, "adjacency", adj)

    @classmethod
    def from_edges(cls, n: int, edges: Iterable[tuple[int, int]]) -> "Graph":
        adj = np.zeros((n, n), dtype=np.uint8)
        for u, v in edges:
            if not (0 <= u < n and 0 <= v < n):
                raise ValueError(f"edge ({u}, {v}) out of range for {n} vertices")
            if u == v:
                raise ValueError(f"self-loop at vertex {u}")
            adj[u, v] = adj[v, u] = 1
        return cls(adj)

    @property
    def n(self) -> int:
        return self.adjacency.shape[0]

    def edges(self) -> list[tuple[int, int]]:
        us, vs = np.nonzero(np.triu(self.adjacency))
        return list(zip(us.tolist(), vs.tolist()))

    def degree(self) -> np.ndarray:
        return self.adjacency.sum(axis=1).astype(int)

    def induced(self, vertices: Sequence[int]) -> np.ndarray:
        idx = list(vertices)
        return self.adjacency[np.ix_(idx, idx)]

    def block(self, rows: Sequence[int], cols: Sequence[int]) -> np.ndarray:
        return self.adjacency[np.ix_(list(rows), list(cols))]


@dataclass(frozen=True)
class WeightedGraph:
    """Graph whose edges all carry the same controlled-phase angle."""

    graph: Graph
    phase: float

    def __post_init__(self):
        object.__setattr__(self, "phase", float(np.mod(self.phase, 2 * np.pi)))


def path_graph(n: int) -> Graph:
    return Graph.from_edges(n, [(i, i + 1) for i in range(n - 1)])


def cycle_graph(n: int) -> Graph:
    return Graph.from_edges(n, [(i, (i + 1) % n) for i in range(n)])


def complete_graph(n: int) -> Graph:
    return Graph.from_edges(n, combinations(range(n), 2))


def wheel_graph(n_rim: int) -> Graph:
    """Cycle on ``0 .. n_rim-1`` plus a hub ``n_rim`` joined to every rim vertex."""
    edges = [(i, (i + 1) % n_rim) for i in range(n_rim)] + [(i, n_rim) for i in range(n_rim)]
    return Graph.from_edges(n_rim + 1, edges)


def read_graph(path: str | Path) -> Graph:
    """Edge-list file: first line the vertex count, then one ``u v`` pair per line."""
    lines = []
    for raw in Path(path).read_text().splitlines():
        line = raw.split("#", 1)[0].strip()
        if line:
            lines.append(line)
    if not lines:
        raise ValueError(f"{path}: empty graph file")
    try:
        n = int(lines[0])
        edges = []
        for line in lines[1:]:
            u, v = line.split()
            edges.append((int(u), int(v)))
    except ValueError as exc:
        raise ValueError(f"{path}: malformed graph file ({exc})") from exc
    return Graph.from_edges(n, edges)


def write_graph(g: Graph, path: str | Path) -> None:
    body = "\n".join(f"{u} {v}" for u, v in g.edges())
    Path(path).write_text(f"{g.n}\n{body}\n" if body else f"{g.n}\n")


# --------------------------------------------------------------------------- #
# State construction
# --------------------------------------------------------------------------- #

def edge_counts(g: Graph) -> np.ndarray:
    """Number of edges inside the support of every big-endian bit pattern."""
    n = g.n
    check_capacity(n)
    idx = np.arange(1 << n)
    bits = [(idx >> (n - 1 - q)) & 1 for q in range(n)]
    counts = np.zeros(1 << n, dtype=np.int64)
    for u, v in g.edges():
        counts += bits[u] & bits[v]
    return counts


def build_graph_state(g: Graph) -> np.ndarray:
    """CZ on every edge applied to ``|+>^n``."""
    signs = 1 - 2 * (edge_counts(g) & 1)
    return signs * 2.0 ** (-g.n / 2) + 0j


def build_weighted_graph_state(wg: WeightedGraph | Graph, phase: float | None = None) -> np.ndarray:
    """Controlled-phase ``exp(i phase)`` on every edge applied to ``|+>^n``."""
    if isinstance(wg, Graph):
        if phase is None:
            raise ValueError("phase is required when passing a bare graph")
        wg = WeightedGraph(wg, phase)
    counts = edge_counts(wg.graph)
    if np.isclose(wg.phase, np.pi, rtol=0, atol=0):
        return build_graph_state(wg.graph)
    return np.exp(1j * wg.phase * counts) * 2.0 ** (-wg.graph.n / 2)


def weighted_overlap(g: Graph, phi: float, chi: float) -> complex:
    """``<G_chi|G_phi>`` as a sum over bit patterns."""
    counts = edge_counts(g)
    terms = np.exp(1j * (phi - chi) * counts)
    return complex(terms.sum() / terms.size)


def weighted_trace_distance(g: Graph, phi: float, chi: float) -> float:
    """``|| G_phi - G_chi ||_1`` for the two weighted graph states (unnormalized norm)."""
    ov = abs(weighted_overlap(g, phi, chi))
    return float(2.0 * np.sqrt(max(1.0 - ov * ov, 0.0)))


# --------------------------------------------------------------------------- #
# n-tangle classification over GF(2)
# --------------------------------------------------------------------------- #

class TauClass(enum.Enum):
    TAU_ZERO_ONLY = "tau_zero_only"
    TAU_ONE_ACHIEVABLE = "tau_one_achievable"


def _partition(g: Graph, a: Sequence[int]) -> tuple[list[int], list[int]]:
    a = check_mask(a, g.n, allow_empty=True)
    b = complement(a, g.n)
    if not b:
        raise ValueError("kept subsystem must be nonempty")
    return a, b


def _partition_even(g: Graph, a: Sequence[int]) -> tuple[list[int], list[int]]:
    a, b = _partition(g, a)
    if len(b) % 2:
        raise ValueError(f"|B| = {len(b)} is odd; the classification needs an even kept register")
    return a, b


def degree_vector(g: Graph, a: Sequence[int]) -> np.ndarray:
    """``D[b] = 1`` iff kept vertex ``b`` has even degree in the graph with ``A`` removed."""
    _, b = _partition(g, a)
    deg = g.induced(b).sum(axis=1)
    return (1 - deg % 2).astype(np.uint8)


def tau_solution(g: Graph, a: Sequence[int]) -> np.ndarray | None:
    """A bit vector ``x`` over ``A`` with ``Gamma_BA x = D``, or ``None``.

    ``x`` selects the measured vertices to read out in the Y basis (the rest in
    X) so that every outcome leaves a state of unit n-tangle on ``B``.
    """
    a, b = _partition_even(g, a)
    return f2_solve(g.block(b, a), degree_vector(g, a))


def tau_classify(g: Graph, a: Sequence[int]) -> TauClass:
    if tau_solution(g, a) is None:
        return TauClass.TAU_ZERO_ONLY
    return TauClass.TAU_ONE_ACHIEVABLE


def cor10_fast_path(g: Graph, a: Sequence[int]) -> TauClass | None:
    """Sufficient test for ``TAU_ZERO_ONLY``: a kept vertex of even degree in
    the graph without ``A`` that has no neighbor in ``A``. Returns ``None`` when
    the test is inconclusive."""
    a, b = _partition_even(g, a)
    d = degree_vector(g, a)
    touches_a = g.block(b, a).any(axis=1) if a else np.zeros(len(b), bool)
    if np.any((d == 1) & ~touches_a):
        return TauClass.TAU_ZERO_ONLY
    return None


def graph_ce(g: Graph, s: Sequence[int]) -> float:
    """Concentratable entanglement of the graph state from cut ranks over GF(2)."""
    s = check_mask(s, g.n)
    total = 0.0
    for r in range(len(s) + 1):
        for gamma in combinations(s, r):
            rest = complement(gamma, g.n)
            rank = f2_rank(g.block(gamma, rest)) if gamma and rest else 0
            total += 2.0 ** (-rank)
    return 1.0 - total / 2.0 ** len(s)


def is_ame(g: Graph, tol: float = 1e-12) -> bool:
    """True when every ``floor(n/2)``-vertex marginal of the graph state is maximally mixed."""
    psi = build_graph_state(g)
    k = g.n // 2
    for gamma in combinations(range(g.n), k):
        if abs(purity(partial_trace(psi, gamma)) - 2.0**-k) > tol:
            return False
    return True


def ame6_graph() -> Graph:
    """A six-vertex graph whose graph state is absolutely maximally entangled.

    The wheel on five rim vertices; checked with :func:`is_ame` on first use.
    """
    g = wheel_graph(5)
    if not is_ame(g):
        raise RuntimeError("wheel graph failed the AME check")
    return g


# --------------------------------------------------------------------------- #
# Weighted line: rotated-X extraction protocol
# --------------------------------------------------------------------------- #

def rotated_x_operator(phi: float) -> np.ndarray:
    """``exp(-i phi Z/2) X exp(i phi Z/2)``."""
    return np.array([[0, np.exp(-1j * phi)], [np.exp(1j * phi), 0]])


def rotated_x_basis(phi: float) -> tuple[float, float]:
    """Local angles ``(theta, phi)`` whose basis diagonalizes the rotated X.

    The first vector is the +1 eigenvector ``(|0> + e^{i phi}|1>)/sqrt(2)``.
    """
    return (np.pi / 2, float(np.mod(phi, 2 * np.pi)))


def ghz_extraction_probability(n_pairs: int, phi: float) -> float:
    """Chance the line on ``2 n + 1`` vertices yields an exact GHZ state."""
    if n_pairs < 1:
        raise ValueError("n_pairs must be at least 1")
    return float(2.0**-n_pairs * abs(np.sin(phi / 2)) ** n_pairs)


def line_protocol_split(n_pairs: int) -> tuple[list[int], list[int]]:
    """Measured (odd 0-based positions) and kept (even positions) vertices of the line."""
    n = 2 * n_pairs + 1
    return list(range(1, n, 2)), list(range(0, n, 2))


def rotated_x_protocol(g: Graph, phi: float, a: Sequence[int], kind: MeasureKind | None = None):
    """Measure ``A`` of the weighted graph state in the rotated-X basis at angle ``phi``.

    Returns ``(ensemble, average)`` with the average taken for ``kind``
    (the n-tangle by default).
    """
    psi = build_weighted_graph_state(g, phi)
    params = np.array([rotated_x_basis(phi)] * len(a))
    ens = measure_local(psi, a, params)
    kind = kind or MeasureKind.ntangle()
    return ens, average_entanglement(ens, kind)


def line_extraction_protocol(n_pairs: int, phi: float) -> tuple[Ensemble, float]:
    """Rotated-X readout of every second vertex of the weighted line on ``2 n + 1`` vertices.

    The average is the n-tangle of the ``n + 1`` kept qubits, which vanishes
    identically when ``n + 1`` is odd.
    """
    if n_pairs < 1:
        raise ValueError("n_pairs must be at least 1")
    check_capacity(2 * n_pairs + 1)
    a, _ = line_protocol_split(n_pairs)
    return rotated_x_protocol(path_graph(2 * n_pairs + 1), phi, a)
