"""Tests for the brute-force 1-D graph oracle.

The oracle shares no algebra with the closed-form dispersion machinery, so
every agreement here is a genuine two-route check: truncated-ladder defect
eigenvalues against `discrete_eigenvalues`, and quasi-periodic cell bands
against `essential_bands` / `bloch_curves`.
"""

import math

import numpy as np
import pytest
import scipy.linalg

from ladderspec.bands import bloch_curves, essential_bands, first_n_gaps
from ladderspec.dispersion import reflection_root
from ladderspec.graph1d import (
    oracle_band_edges,
    oracle_gap_eigenvalues,
    quasiperiodic_cell,
    truncated_half_ladder,
)
from ladderspec.modes import discrete_eigenvalues
from ladderspec.params import SymmetryClass

S = SymmetryClass.SYMMETRIC
A = SymmetryClass.ANTISYMMETRIC


def test_pencil_structure_and_constant_kernel():
    K, M, vertex_ids = truncated_half_ladder(2.0, 1.0, S, 6, h=0.05)
    # exact symmetry, not just allclose: assembly emits matching triplets
    assert abs(K - K.T).max() == 0.0
    assert abs(M - M.T).max() == 0.0
    # mass form is positive definite
    np.linalg.cholesky(M.toarray())
    # with natural ends and mu=1 the constant sits in the stiffness kernel
    ones = np.ones(K.shape[0])
    assert np.abs(K @ ones).max() <= 1e-8
    assert sorted(vertex_ids) == list(range(-6, 7))
    # antisymmetric class clamps the rung tips: constant no longer in kernel
    Ka, Ma, _ = truncated_half_ladder(2.0, 1.0, A, 6, h=0.05)
    assert np.abs(Ka @ np.ones(Ka.shape[0])).max() > 1.0
    np.linalg.cholesky(Ma.toarray())


def test_defect_weight_touches_only_central_rung():
    h = 0.05
    built = {
        mu: truncated_half_ladder(2.0, mu, S, 5, h=h) for mu in (1.0, 1.5, 2.0)
    }
    vertex_ids = built[1.0][2]
    for idx in (0, 1):  # stiffness, then mass
        d_half = (built[1.5][idx] - built[1.0][idx]).toarray()
        d_full = (built[2.0][idx] - built[1.0][idx]).toarray()
        # both forms are affine in mu with the same mu=1 offset
        assert np.allclose(2.0 * d_half, d_full, rtol=1e-12, atol=1e-12)
        rows = np.unique(d_full.nonzero()[0])
        assert rows.size > 0
        assert vertex_ids[0] in rows
        assert vertex_ids[1] not in rows and vertex_ids[-1] not in rows
        # support is the central rung chain: vertex + interiors + free tip
        assert rows.size <= round(0.5 * 2.0 / h) + 1


def test_invalid_truncation_or_step_raises():
    with pytest.raises(ValueError):
        truncated_half_ladder(2.0, 0.5, S, 4)
    with pytest.raises(ValueError):
        truncated_half_ladder(2.0, 0.5, S, 10, h=0.2)
    with pytest.raises(ValueError):
        truncated_half_ladder(2.0, 0.5, S, 10, h=0.0)


def test_oracle_matches_closed_form_symmetric():
    gap = first_n_gaps(2.0, S, 1)[0]
    exact = [e.omega for e in discrete_eigenvalues(2.0, 0.25, S, gap)]
    res = oracle_gap_eigenvalues(2.0, 0.25, S, gap, h=4e-3, n_cells=25)
    assert res.converged
    assert res.omegas.size == 2
    rel = np.abs(res.omegas - exact) / np.abs(exact)
    assert rel.max() <= 1e-4


def test_oracle_matches_closed_form_antisymmetric_leading_gap():
    # the antisymmetric spectrum starts with a gap at omega = 0, so the
    # search window reaches the bottom of the spectrum (lo_open path)
    gap = first_n_gaps(2.0, A, 1)[0]
    assert gap.omega_b == 0.0
    exact = [e.omega for e in discrete_eigenvalues(2.0, 0.25, A, gap)]
    assert len(exact) == 1
    res = oracle_gap_eigenvalues(2.0, 0.25, A, gap, h=4e-3, n_cells=25)
    assert res.converged
    assert res.omegas.size == 1
    assert abs(res.omegas[0] - exact[0]) / exact[0] <= 1e-4


def test_oracle_empty_without_defect():
    for cls in (S, A):
        gap = first_n_gaps(2.0, cls, 1)[0]
        res = oracle_gap_eigenvalues(
            2.0, 1.0, cls, gap, h=4e-3, n_cells=25, check_convergence=False
        )
        assert res.lams.size == 0


def test_truncation_shift_bounded_by_decay_rate():
    gap = first_n_gaps(2.0, S, 1)[0]
    kw = dict(h=8e-3, check_convergence=False)
    narrow = oracle_gap_eigenvalues(2.0, 0.25, S, gap, n_cells=12, **kw)
    wide = oracle_gap_eigenvalues(2.0, 0.25, S, gap, n_cells=20, **kw)
    assert narrow.lams.size == wide.lams.size == 2
    r = max(abs(reflection_root(w, 2.0, S)) for w in narrow.omegas)
    assert np.abs(wide.lams - narrow.lams).max() < 10.0 * r ** (2 * 12)


def test_cell_theta0_constant_and_second_order_convergence():
    roots = np.array(bloch_curves(2.0, S, 12.0, [0.0]).roots[0])
    errs = []
    for h in (1e-2, 5e-3, 2.5e-3):
        K, M = quasiperiodic_cell(2.0, S, 0.0, h=h)
        vals = scipy.linalg.eigh(K, M, eigvals_only=True)
        assert abs(vals[0]) < 1e-9  # constant mode
        om = np.sqrt(np.clip(vals, 0.0, None))
        errs.append(np.abs(om[1:4] - roots[1:4]))
    errs = np.array(errs)
    orders = np.concatenate([np.log2(errs[0] / errs[1]), np.log2(errs[1] / errs[2])])
    assert np.all(orders > 1.8) and np.all(orders < 2.2)


def test_cell_matches_dispersion_roots_midband():
    theta = math.pi / 2
    roots = np.array(bloch_curves(2.0, S, 12.0, [theta]).roots[0])
    K, M = quasiperiodic_cell(2.0, S, theta, h=2.5e-3)
    # quasi-periodic tying makes the pencil genuinely complex yet Hermitian
    assert np.iscomplexobj(K) and np.abs(K.imag).max() > 0.0
    assert np.array_equal(K, K.conj().T)
    assert np.array_equal(M, M.conj().T)
    vals = scipy.linalg.eigh(K, M, eigvals_only=True)
    om = np.sqrt(np.clip(vals, 0.0, None))
    assert np.abs(om[:4] - roots[:4]).max() <= 5e-5


def test_antisymmetric_pi_cell_stays_away_from_zero():
    # antisymmetric Bloch roots exclude omega = 0 at every theta
    K, M = quasiperiodic_cell(2.0, A, math.pi, h=5e-3)
    vals = scipy.linalg.eigh(K, M, eigvals_only=True)
    assert vals[0] > 1.0


def _merge_touching(bands, tol=1e-2):
    merged = [list(bands[0])]
    for lo, hi in bands[1:]:
        if lo - merged[-1][1] <= tol:
            merged[-1][1] = max(merged[-1][1], hi)
        else:
            merged.append([lo, hi])
    return merged


def test_envelope_bands_match_graph_bands():
    # per-index envelopes split graph bands where branches cross (omega = n*pi
    # for L = 2), so merge touching intervals before comparing
    oracle = _merge_touching(oracle_band_edges(2.0, S, 5, h=5e-3, n_theta=41))
    graph = essential_bands(2.0, S, 8.0)
    assert len(oracle) == len(graph) == 3
    for (lo, hi), band in zip(oracle, graph):
        assert abs(lo - band.omega_lo) <= 5e-4
        assert abs(hi - band.omega_hi) <= 5e-4


def test_envelope_reproduces_antisymmetric_flat_band():
    oracle = oracle_band_edges(2.0, A, 4, h=5e-3, n_theta=41)
    graph = essential_bands(2.0, A, 7.0)
    assert len(oracle) == len(graph) == 4
    for (lo, hi), band in zip(oracle, graph):
        assert abs(lo - band.omega_lo) <= 5e-4
        assert abs(hi - band.omega_hi) <= 5e-4
    # the second band is flat: zero width up to discretisation error
    lo, hi = oracle[1]
    assert hi - lo <= 1e-4
    assert abs(0.5 * (lo + hi) - math.pi) <= 2e-4
