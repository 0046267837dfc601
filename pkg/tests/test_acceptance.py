"""Acceptance criteria 1-11.

Each criterion records one PASS/FAIL line in ``VERDICTS``; the lines are
printed in the terminal summary. Where a criterion fails as literally stated,
the literal check is a strict xfail and the parts that do hold are asserted in
a separate test.
"""

from itertools import combinations

import networkx as nx
import numpy as np
import pytest
from scipy.stats import unitary_group

from entloc.core import fidelity, partial_trace, trace_distance, wootters_tilde
from entloc.graphs import (
    Graph,
    TauClass,
    ame6_graph,
    build_graph_state,
    build_weighted_graph_state,
    graph_ce,
    is_ame,
    line_extraction_protocol,
    line_protocol_split,
    path_graph,
    tau_classify,
    weighted_trace_distance,
)
from entloc.haar import (
    Estimate,
    HaarSweepConfig,
    concentration_bounds,
    expected_avg_ce,
    expected_purity,
    expected_tilde_overlap,
    haar_sweep,
    moment_samples,
    sample_haar,
)
from entloc.ising import TfimParams, ising_sweep, tfim_grid
from entloc.localization import (
    continuity_rhs,
    fixed_basis_average,
    lme_estimate,
    mea_tau_exact,
    measure_lipschitz_bound,
    optimal_global_basis,
)
from entloc.measures import MeasureKind, concentratable_entanglement, evaluate_batch, weighted_average_batch
from entloc.pso import BoxBounds, PsoConfig, maximize

VERDICTS: dict[int, str] = {}


def record(number: int, ok: bool, detail: str) -> bool:
    VERDICTS[number] = f"criterion {number:>2}: {'PASS' if ok else 'FAIL'}  {detail}"
    return ok


# --------------------------------------------------------------------------- #
# 1. graph CE exact values
# --------------------------------------------------------------------------- #

def test_criterion_1_graph_ce_values():
    checks = []
    for n in (9, 12, 50):
        mid = n // 2
        s = [mid - 1, mid, mid + 1]
        checks.append(abs(graph_ce(path_graph(n), s) - 0.5625))
        if n <= 12:
            checks.append(abs(concentratable_entanglement(build_graph_state(path_graph(n)), s) - 0.5625))
    g = ame6_graph()
    ame_ok = is_ame(g)
    psi = build_graph_state(g)
    for s in combinations(range(6), 3):
        checks.append(abs(graph_ce(g, s) - 0.578125))
        checks.append(abs(concentratable_entanglement(psi, s) - 0.578125))
    worst = max(checks)
    ok = record(1, ame_ok and worst <= 1e-12, f"path 0.5625 and AME6 0.578125, worst error {worst:.1e}")
    assert ok


# --------------------------------------------------------------------------- #
# 2. GF(2) criterion vs direct fidelity on every graph with at most 6 vertices
# --------------------------------------------------------------------------- #

def test_criterion_2_gf2_oracle():
    cases = disagreements = intermediate = 0
    for nxg in nx.graph_atlas_g():
        n = nxg.number_of_nodes()
        if n < 2 or n > 6:
            continue
        g = Graph(nx.to_numpy_array(nxg, nodelist=range(n), dtype=np.uint8))
        psi = build_graph_state(g)
        for size in range(n % 2, n, 2):
            for a in combinations(range(n), size):
                b = [q for q in range(n) if q not in a]
                rho = partial_trace(psi, b)
                f = fidelity(rho, wootters_tilde(rho))
                cases += 1
                if 1e-9 < f < 1 - 1e-9:
                    intermediate += 1
                if (tau_classify(g, list(a)) is TauClass.TAU_ONE_ACHIEVABLE) != (f > 0.5):
                    disagreements += 1
    ok = record(
        2,
        disagreements == 0 and intermediate == 0,
        f"{cases} (graph, partition) cases over all graphs on 2-6 vertices up to isomorphism, "
        f"{disagreements} disagreements, {intermediate} intermediate fidelities",
    )
    assert ok


# --------------------------------------------------------------------------- #
# 3. constructive optimality of the Takagi basis
# --------------------------------------------------------------------------- #

def test_criterion_3_takagi_optimality():
    tau = MeasureKind.ntangle()
    worst_gap, worst_excess = 0.0, -np.inf
    for i in range(100):
        psi = sample_haar(6, seed=3, index=i)
        f = mea_tau_exact(psi, [0, 1])
        achieved = fixed_basis_average(psi, [0, 1], optimal_global_basis(psi, [0, 1]), tau)
        worst_gap = max(worst_gap, abs(achieved - f))
        bases = unitary_group.rvs(4, size=1000, random_state=1000 + i)
        sampled = weighted_average_batch(tau, np.einsum("kai,ab->kib", bases.conj(), psi.reshape(4, 16)))
        worst_excess = max(worst_excess, float(sampled.max() - f))
    ok = record(
        3,
        worst_gap <= 1e-8 and worst_excess <= 1e-9,
        f"100 states: |Takagi - F| <= {worst_gap:.1e}; over 10^5 random bases max(avg - F) = {worst_excess:.1e}",
    )
    assert ok


# --------------------------------------------------------------------------- #
# 4. Haar moments
# --------------------------------------------------------------------------- #

MOMENT_CASES = [(2, 2), (2, 3), (3, 2)]


@pytest.fixture(scope="module")
def moments():
    return {case: moment_samples(*case, samples=10_000, seed=404) for case in MOMENT_CASES}


def _moment_report(moments):
    lines, ok = [], True
    for n_a, n_b in MOMENT_CASES:
        d_a, d_b = 2**n_a, 2**n_b
        purity, overlap, ce = (Estimate.of(x) for x in moments[(n_a, n_b)])
        literal_overlap = (d_a + 1) / (d_a * d_b + 1)
        parts = {
            "purity": purity.within(expected_purity(d_a, d_b)),
            "overlap": overlap.within(literal_overlap),
            "ce": ce.within(expected_avg_ce(n_b, n_b)),
        }
        ok &= all(parts.values())
        bad = [k for k, v in parts.items() if not v]
        lines.append(f"({n_a},{n_b})" + (f" off: {','.join(bad)} [mean {overlap.mean:.4f} vs {literal_overlap:.4f}]" if bad else " ok"))
    return ok, "; ".join(lines)


@pytest.mark.xfail(
    strict=True,
    reason="(d_A+1)/(d_A d_B+1) assumes an even number of kept qubits; at n_b = 3 the mean is (d_A-1)/(d_A d_B+1)",
)
def test_criterion_4_haar_moments_literal(moments):
    ok, detail = _moment_report(moments)
    assert record(4, ok, "10^4 samples, 3 SE: " + detail)


def test_criterion_4_haar_moments_parity_corrected(moments):
    for n_a, n_b in MOMENT_CASES:
        d_a, d_b = 2**n_a, 2**n_b
        purity, overlap, ce = (Estimate.of(x) for x in moments[(n_a, n_b)])
        assert purity.within(expected_purity(d_a, d_b))
        assert overlap.within(expected_tilde_overlap(d_a, d_b))
        assert ce.within(expected_avg_ce(n_b, n_b))


# --------------------------------------------------------------------------- #
# 5. continuity
# --------------------------------------------------------------------------- #

def _pairs(rng, n, count):
    d = 1 << n
    psi = rng.standard_normal((count, d)) + 1j * rng.standard_normal((count, d))
    psi /= np.linalg.norm(psi, axis=1, keepdims=True)
    kick = rng.standard_normal((count, d)) + 1j * rng.standard_normal((count, d))
    kick /= np.linalg.norm(kick, axis=1, keepdims=True)
    scale = 10.0 ** rng.uniform(-7, 0.5, size=(count, 1))
    other = psi + scale * kick
    other /= np.linalg.norm(other, axis=1, keepdims=True)
    ov = np.abs(np.sum(psi.conj() * other, axis=1))
    return psi, other, 2 * np.sqrt(np.clip(1 - ov**2, 0, None))


def test_criterion_5_continuity():
    rng = np.random.default_rng(505)
    count = 10_000
    kinds = {"tau": MeasureKind.ntangle(), "gme": MeasureKind.gme(), "ce": MeasureKind.ce([1, 2, 3])}
    violations = {}
    # raw measures on 4 qubits
    psi, other, t = _pairs(rng, 4, count)
    for name, kind in kinds.items():
        gap = np.abs(evaluate_batch(kind, psi) - evaluate_batch(kind, other))
        bound = np.array([measure_lipschitz_bound(kind, x) for x in t])
        violations[f"raw {name}"] = int(np.sum(gap > bound + 1e-9))
    # fixed-basis averages: 5 qubits, A = {0}, random basis per pair
    psi, other, t = _pairs(rng, 5, count)
    bases = unitary_group.rvs(2, size=count, random_state=506)
    for name, kind in kinds.items():
        local = kind.relabel({q: q - 1 for q in range(1, 5)})
        avg = weighted_average_batch(local, np.einsum("kai,kab->kib", bases.conj(), psi.reshape(-1, 2, 16)))
        avg2 = weighted_average_batch(local, np.einsum("kai,kab->kib", bases.conj(), other.reshape(-1, 2, 16)))
        rhs = np.array([continuity_rhs(kind, x) for x in t])
        violations[f"fixed-basis {name}"] = int(np.sum(np.abs(avg - avg2) > rhs + 1e-9))
    total = sum(violations.values())
    ok = record(5, total == 0, f"10^4 pairs per check, violations {violations}")
    assert ok


# --------------------------------------------------------------------------- #
# 6. bound sandwich on Haar states
# --------------------------------------------------------------------------- #

SANDWICH_CONFIGS = [
    (2, 4, MeasureKind.ntangle()),
    (3, 4, MeasureKind.ntangle()),
    (1, 3, MeasureKind.gme()),
    (2, 3, MeasureKind.gme()),
] + [(n_a, 3, MeasureKind.ce(range(n_a, n_a + k))) for n_a in (1, 2) for k in (1, 2, 3)]

# every 3-qubit pure state: CE over 1 label <= 1/4, over 2 or 3 labels <= 3/8
AME_CEILING = {1: 0.25, 2: 0.375, 3: 0.375}
SANDWICH_PSO = PsoConfig(swarm_size=24, iterations=40, restarts=1)


@pytest.mark.slow
def test_criterion_6_bound_sandwich():
    problems = []
    for n_a, n_b, kind in SANDWICH_CONFIGS:
        rows = haar_sweep(HaarSweepConfig(n_a, n_b, 2500, seed=600 + n_a, measure=kind, pso=SANDWICH_PSO))
        below = sum(r.lme < r.lb for r in rows)
        above = sum(r.lme > r.ub + 1e-8 for r in rows)
        ceiling = 0
        if kind.name == "ce" and n_a == 1:
            ceiling = sum(r.lme > AME_CEILING[len(kind.s)] + 1e-12 for r in rows)
        if below or above or ceiling:
            problems.append(f"{n_a},{n_b},{kind}: lb>lme {below}, lme>ub {above}, over ceiling {ceiling}")
    ok = record(
        6,
        not problems,
        f"{len(SANDWICH_CONFIGS)} configurations x 2500 states" + (": " + "; ".join(problems) if problems else ", no violations"),
    )
    assert ok


# --------------------------------------------------------------------------- #
# 7. weighted line protocol
# --------------------------------------------------------------------------- #

@pytest.mark.slow
def test_criterion_7_weighted_line():
    a, _ = line_protocol_split(3)
    g = path_graph(7)
    tau = MeasureKind.ntangle()
    worst_gap, worst_excess = 0.0, -np.inf
    pi_value = None
    for i, phi in enumerate(np.linspace(0, 2 * np.pi, 17)):
        _, protocol = line_extraction_protocol(3, phi)
        psi = build_weighted_graph_state(g, phi)
        lme, _ = lme_estimate(psi, a, tau, PsoConfig(seed=700 + i))
        worst_gap = max(worst_gap, abs(protocol - lme))
        worst_excess = max(worst_excess, protocol - mea_tau_exact(psi, a))
        if np.isclose(phi, np.pi):
            pi_value = protocol
    ok = record(
        7,
        worst_gap <= 0.01 and worst_excess <= 1e-9 and abs(pi_value - 1) <= 1e-9,
        f"17 phases: |protocol - LME| <= {worst_gap:.1e}, protocol - MEA <= {worst_excess:.1e}, value at pi {pi_value:.12f}",
    )
    assert ok


# --------------------------------------------------------------------------- #
# 8. weighted trace distance formula
# --------------------------------------------------------------------------- #

def test_criterion_8_weighted_trace_distance():
    rng = np.random.default_rng(808)
    worst = 0.0
    for _ in range(100):
        n = int(rng.integers(2, 11))
        upper = np.triu(rng.random((n, n)) < rng.uniform(0.2, 0.8), 1)
        g = Graph((upper | upper.T).astype(np.uint8))
        phi, chi = rng.uniform(0, 2 * np.pi, 2)
        direct = trace_distance(build_weighted_graph_state(g, phi), build_weighted_graph_state(g, chi))
        worst = max(worst, abs(weighted_trace_distance(g, phi, chi) - direct))
    ok = record(8, worst <= 1e-10, f"100 graphs with n <= 10, worst difference {worst:.1e}")
    assert ok


# --------------------------------------------------------------------------- #
# 9. transverse-field Ising sweep
# --------------------------------------------------------------------------- #

ISING_GRID = [0.1, 0.25, 0.5, 0.75, 1.0, 1.25, 1.5, 2.0, 3.0, 5.0]
ISING_MEASURED = [0, 2, 4, 6, 8]  # sites 1, 3, 5, 7, 9


@pytest.fixture(scope="module")
def ising_rows():
    rows = ising_sweep(tfim_grid(9, ISING_GRID), ISING_MEASURED, PsoConfig(seed=900), include_ce=False)
    broken = ising_sweep([TfimParams(9, 5.0, 1.0, 0.05)], ISING_MEASURED, PsoConfig(seed=901), include_ce=False)
    return rows, broken[0]


def _ising_parts(ising_rows):
    rows, broken = ising_rows
    by_ratio = {r.j_over_h: r for r in rows}
    worst = max(abs(r.lme_tau - r.mea_tau) for r in rows)
    return {
        "low": by_ratio[0.1].lme_tau < 0.05,
        "high": by_ratio[5.0].lme_tau > 0.9,
        "saturation": worst < 0.02,
        "symmetry breaking": broken.lme_tau <= by_ratio[5.0].lme_tau - 0.3,
    }, worst, by_ratio, broken


@pytest.mark.slow
@pytest.mark.xfail(
    strict=True,
    reason="near the critical point J/h ~ 1 the best local measurement found stays about 0.035 below F(Psi_B, Psi~_B)",
)
def test_criterion_9_ising_literal(ising_rows):
    parts, worst, by_ratio, broken = _ising_parts(ising_rows)
    gaps = ", ".join(f"{k:g}:{r.mea_tau - r.lme_tau:.3f}" for k, r in by_ratio.items())
    detail = (
        f"L(0.1)={by_ratio[0.1].lme_tau:.2e}, L(5)={by_ratio[5.0].lme_tau:.4f}, "
        f"L(5, h_x=0.05)={broken.lme_tau:.2e}, max |L-F|={worst:.3f} (F-L by J/h {gaps})"
    )
    assert record(9, all(parts.values()), detail)


@pytest.mark.slow
def test_criterion_9_ising_shape(ising_rows):
    parts, _, by_ratio, _ = _ising_parts(ising_rows)
    assert parts["low"] and parts["high"] and parts["symmetry breaking"]
    for r in by_ratio.values():
        assert r.lme_tau <= r.mea_tau + 1e-8
    # away from the critical region the local optimum saturates the bound
    for ratio in (0.1, 0.25, 2.0, 3.0, 5.0):
        assert abs(by_ratio[ratio].lme_tau - by_ratio[ratio].mea_tau) < 0.02


# --------------------------------------------------------------------------- #
# 10. PSO sanity
# --------------------------------------------------------------------------- #

def test_criterion_10_pso():
    def neg_rastrigin(x):
        x = np.atleast_2d(x)
        return -(10 * x.shape[1] + np.sum(x**2 - 10 * np.cos(2 * np.pi * x), axis=1))

    bounds = BoxBounds.uniform(2, -5.12, 5.12)
    best = maximize(neg_rastrigin, bounds, PsoConfig(), vectorized=True)
    one = maximize(neg_rastrigin, bounds, PsoConfig(seed=42), vectorized=True, threads=1)
    eight = maximize(neg_rastrigin, bounds, PsoConfig(seed=42), vectorized=True, threads=8)
    identical = (
        one.best_value == eight.best_value
        and np.array_equal(one.best_point, eight.best_point)
        and all(np.array_equal(h1, h8) for h1, h8 in zip(one.history, eight.history))
    )
    ok = record(
        10,
        best.best_value >= -1e-3 and identical,
        f"Rastrigin optimum {best.best_value:.2e}, 1 vs 8 threads bit-identical: {identical}",
    )
    assert ok


# --------------------------------------------------------------------------- #
# 11. concentration direction
# --------------------------------------------------------------------------- #

def test_criterion_11_concentration():
    bounds = concentration_bounds(6, 2, 0.1)
    values = np.array([mea_tau_exact(sample_haar(8, seed=1100, index=i), list(range(6))) for i in range(1000)])
    below = (values < bounds.tau_threshold).astype(float)
    frac = below.mean()
    se = np.sqrt(max(frac * (1 - frac), 1e-12) / below.size)
    ok = record(
        11,
        frac <= bounds.tail + 3 * se,
        f"threshold {bounds.tau_threshold:.4f}, empirical fraction below {frac:.3f}, tail bound {bounds.tail:.4f}, "
        f"min sample {values.min():.4f}",
    )
    assert ok
