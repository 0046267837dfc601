import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from entloc.core import PAULI_X, PAULI_Z, basis_state
from entloc.ising import (
    IsingRow,
    TfimParams,
    cat_state,
    ground_state,
    ising_sweep,
    parity_operator,
    rows_from_csv,
    rows_to_csv,
    sweep_point,
    tfim_grid,
    tfim_hamiltonian,
)
from entloc.localization import mea_tau_exact
from entloc.pso import PsoConfig

SMALL = PsoConfig(swarm_size=16, iterations=30, restarts=1)


def kron_all(ops):
    out = np.eye(1)
    for op in ops:
        out = np.kron(out, op)
    return out


def dense_oracle(p):
    """Hamiltonian assembled from explicit Kronecker products."""
    eye = np.eye(2)
    h = np.zeros((1 << p.n, 1 << p.n))
    bonds = [(i, i + 1) for i in range(p.n - 1)] + ([(p.n - 1, 0)] if p.periodic else [])
    for u, v in bonds:
        h -= p.j * kron_all([PAULI_X if q in (u, v) else eye for q in range(p.n)]).real
    for q in range(p.n):
        h -= p.h * kron_all([PAULI_Z if k == q else eye for k in range(p.n)]).real
        h -= p.h_x * kron_all([PAULI_X if k == q else eye for k in range(p.n)]).real
    return h


class TestHamiltonian:
    def test_free_spins(self):
        vals = np.linalg.eigvalsh(tfim_hamiltonian(TfimParams(2, 0.0, 1.0)))
        assert_allclose(vals, [-2, 0, 0, 2], atol=1e-14)

    def test_two_site_ring_doubles_bond(self):
        p = TfimParams(2, 1.0, 0.0)
        assert_allclose(tfim_hamiltonian(p), -2 * np.kron(PAULI_X, PAULI_X).real, atol=0)
        assert_allclose(np.linalg.eigvalsh(tfim_hamiltonian(p)), [-2, -2, 2, 2], atol=1e-14)

    @pytest.mark.parametrize(
        "p",
        [TfimParams(3, 0.7, 1.3), TfimParams(4, 1.0, 0.5, 0.2), TfimParams(5, 2.0, 1.0, periodic=False)],
    )
    def test_matches_kron_oracle(self, p):
        h = tfim_hamiltonian(p)
        assert_allclose(h, dense_oracle(p), atol=1e-14)
        assert_allclose(h, h.T, atol=0)

    def test_spin_flip_symmetry(self):
        h = tfim_hamiltonian(TfimParams(5, 1.3, 0.7))
        par = parity_operator(5)
        assert np.abs(h * par[None, :] - par[:, None] * h).max() < 1e-12
        assert_allclose(np.diag(kron_all([PAULI_Z] * 5)).real, par)

    def test_longitudinal_field_breaks_symmetry(self):
        h = tfim_hamiltonian(TfimParams(3, 1.0, 1.0, 0.05))
        par = parity_operator(3)
        assert np.abs(h * par[None, :] - par[:, None] * h).max() > 0.01

    def test_validation(self):
        with pytest.raises(ValueError):
            TfimParams(1, 1.0)
        with pytest.raises(ValueError):
            TfimParams(3, 1.0, -1.0)


class TestGroundState:
    def test_residual(self):
        p = TfimParams(6, 0.8, 1.0, 0.1)
        e, v = ground_state(p)
        h = tfim_hamiltonian(p)
        assert np.linalg.norm(h @ v - e * v) < 1e-9
        assert_allclose(e, np.linalg.eigvalsh(h)[0], atol=1e-12)

    def test_paramagnet(self):
        e, v = ground_state(TfimParams(5, 0.0, 1.0))
        assert_allclose(e, -5.0)
        assert_allclose(v, basis_state("00000"), atol=1e-12)

    def test_cat_state_at_strong_coupling(self):
        fids = [abs(np.vdot(cat_state(4), ground_state(TfimParams(4, r, 1.0))[1])) ** 2 for r in (2, 5, 20, 100)]
        assert np.all(np.diff(fids) > 0)
        assert fids[-1] > 0.9999

    def test_degenerate_tie_break(self):
        e, v = ground_state(TfimParams(4, 1.0, 0.0))
        assert_allclose(e, -4.0)
        assert_allclose(abs(np.vdot(cat_state(4), v)), 1.0, atol=1e-12)
        assert v[0].real > 0
        np.testing.assert_array_equal(v, ground_state(TfimParams(4, 1.0, 0.0))[1])

    def test_energy_non_increasing_in_coupling(self):
        energies = [ground_state(p)[0] for p in tfim_grid(6, np.linspace(0, 3, 13))]
        assert np.all(np.diff(energies) <= 1e-9)

    def test_size_limit(self):
        with pytest.raises(ValueError):
            ground_state(TfimParams(13, 1.0))


class TestSweep:
    def test_grid(self):
        grid = tfim_grid(5, [0.5, 2.0], h=2.0, h_x_ratio=0.05)
        assert [p.j for p in grid] == [1.0, 4.0]
        assert all(p.h_x == pytest.approx(0.1) for p in grid)
        assert grid[1].j_over_h == 2.0

    def test_rows_respect_sandwich(self):
        rows = ising_sweep(tfim_grid(6, [0.2, 1.0, 3.0]), [1, 3], SMALL)
        for r in rows:
            assert r.lme_tau <= r.mea_tau + 1e-8
            assert r.lme_ce <= r.ce_ub + 1e-8
            assert r.ce_lb <= r.ce_ub + 1e-9
        assert rows[0].lme_tau < rows[-1].lme_tau

    def test_odd_kept_gives_zero_tangle(self):
        row = sweep_point(TfimParams(4, 1.0), [1], SMALL)
        assert row.mea_tau == 0.0
        assert row.lme_tau == pytest.approx(0, abs=1e-12)

    def test_skip_ce_and_threads(self):
        grid = tfim_grid(4, [0.5, 2.0])
        one = ising_sweep(grid, [0, 2], SMALL, include_ce=False)
        many = ising_sweep(grid, [0, 2], SMALL, include_ce=False, threads=2)
        assert all(math.isnan(r.lme_ce) for r in one)
        assert rows_to_csv(one) == rows_to_csv(many)

    def test_mea_column(self):
        p = TfimParams(4, 1.5)
        row = sweep_point(p, [0, 2], SMALL, include_ce=False)
        assert row.mea_tau == mea_tau_exact(ground_state(p)[1], [0, 2])

    def test_csv_round_trip(self):
        rows = [IsingRow(0.5, 0.0, -4.1, 0.01, 0.02, 0.1, 0.3, 0.0), IsingRow(5.0, 0.05, -20.0, 0.9, 0.95, math.nan, 0.6, 0.2)]
        text = rows_to_csv(rows)
        assert text.splitlines()[0] == "j_over_h,h_x,energy,lme_tau,mea_tau,lme_ce,ce_ub,ce_lb"
        back = rows_from_csv(text)
        assert back[0] == rows[0]
        assert math.isnan(back[1].lme_ce) and back[1].mea_tau == 0.95
        with pytest.raises(ValueError):
            rows_from_csv("x\n1\n")
