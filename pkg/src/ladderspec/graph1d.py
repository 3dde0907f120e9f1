"""Brute-force variational solver on the half-ladder metric graph.

This is the slow, assumption-free cross-check for the closed-form machinery:
piecewise-linear finite elements on every edge of the (symmetry-reduced)
graph, with the defect rung carrying measure weight mu in both the stiffness
and the mass form.  Two geometries are provided:

* a truncated ladder with Dirichlet far ends, for defect eigenvalues in gaps;
* a single quasi-periodic cell, for band edges of the unperturbed ladder.

Nothing here reuses the transfer-matrix algebra, so agreement with
`modes.discrete_eigenvalues` / `bands.essential_bands` is a genuine
two-route consistency check.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .params import SymmetryClass

DEFAULT_H = 1e-3


def _edge_matrices(n_sub, length, weight):
    """COO triplets of the P1 stiffness/mass pair on one subdivided edge.

    Local node numbering is 0..n_sub along the edge; the caller remaps to
    global indices.
    """
    h = length / n_sub
    a = np.arange(n_sub)
    rows = np.concatenate([a, a, a + 1, a + 1])
    cols = np.concatenate([a, a + 1, a, a + 1])
    k_vals = (weight / h) * np.concatenate(
        [np.ones(n_sub), -np.ones(n_sub), -np.ones(n_sub), np.ones(n_sub)]
    )
    m_vals = (weight * h / 6.0) * np.concatenate(
        [2.0 * np.ones(n_sub), np.ones(n_sub), np.ones(n_sub), 2.0 * np.ones(n_sub)]
    )
    return rows, cols, k_vals, m_vals


class _Assembler:
    """Accumulates edge contributions into one global sparse pencil."""

    def __init__(self):
        self.n_nodes = 0
        self.rows, self.cols, self.k_vals, self.m_vals = [], [], [], []

    def new_nodes(self, count):
        out = np.arange(self.n_nodes, self.n_nodes + count)
        self.n_nodes += count
        return out

    def add_edge(self, start, end, n_sub, length, weight):
        """Subdivided edge between existing node ids; returns interior ids.

        end=None allocates a fresh terminal node (free tip); end=-1 clamps the
        far end (homogeneous Dirichlet, the terminal dof is never created and
        the last element keeps only its inner-node coupling).
        """
        interior = self.new_nodes(n_sub - 1)
        if end is None:
            end_id = self.new_nodes(1)[0]
            chain = np.concatenate([[start], interior, [end_id]])
            keep_last = True
        elif end == -1:
            chain = np.concatenate([[start], interior, [interior[-1] if n_sub > 1 else start]])
            keep_last = False
        else:
            chain = np.concatenate([[start], interior, [end]])
            keep_last = True
        rows, cols, kv, mv = _edge_matrices(n_sub, length, weight)
        glob_r, glob_c = chain[rows], chain[cols]
        if not keep_last:
            # Dirichlet tip: drop every entry touching the clamped node, which
            # in local numbering is node n_sub.
            mask = (rows != n_sub) & (cols != n_sub)
            glob_r, glob_c, kv, mv = glob_r[mask], glob_c[mask], kv[mask], mv[mask]
        self.rows.append(glob_r)
        self.cols.append(glob_c)
        self.k_vals.append(kv)
        self.m_vals.append(mv)
        return interior

    def build(self):
        rows = np.concatenate(self.rows)
        cols = np.concatenate(self.cols)
        shape = (self.n_nodes, self.n_nodes)
        K = sp.coo_matrix((np.concatenate(self.k_vals), (rows, cols)), shape).tocsr()
        M = sp.coo_matrix((np.concatenate(self.m_vals), (rows, cols)), shape).tocsr()
        return K, M


def _subdivisions(length, h):
    return max(1, round(length / h))


def truncated_half_ladder(L, mu, sym_class, n_cells, h=DEFAULT_H):
    """Sparse (K, M, vertex_ids) for the half ladder truncated at +-n_cells.

    Rail vertices j = -n_cells..n_cells, each carrying its rung; the rail
    simply stops after the outermost vertices (natural ends, no boundary
    rows needed).  Rungs have length L/2 with a free tip for the symmetric
    class and a clamped tip for the antisymmetric class; the rung at j = 0
    is weighted by mu in both forms.  Returns the assembled pencil and the
    rail-vertex dof indices keyed by j.
    """
    if n_cells < 5:
        raise ValueError("need at least 5 cells per side")
    if not 0.0 < h <= 0.1:
        raise ValueError("mesh step h must lie in (0, 0.1]")
    asm = _Assembler()
    verts = asm.new_nodes(2 * n_cells + 1)  # index j + n_cells
    n_rail = _subdivisions(1.0, h)
    n_rung = _subdivisions(0.5 * L, h)
    for j in range(-n_cells, n_cells):
        asm.add_edge(verts[j + n_cells], verts[j + 1 + n_cells], n_rail, 1.0, 1.0)
    rung_end = None if sym_class is SymmetryClass.SYMMETRIC else -1
    for j in range(-n_cells, n_cells + 1):
        w = mu if j == 0 else 1.0
        asm.add_edge(verts[j + n_cells], rung_end, n_rung, 0.5 * L, w)
    K, M = asm.build()
    vertex_ids = {j: int(verts[j + n_cells]) for j in range(-n_cells, n_cells + 1)}
    return K.tocsc(), M.tocsc(), vertex_ids


def _outer_mass_fraction(vec, vertex_ids, n_cells):
    """Outer-rail amplitude share, used to spot truncation artifacts.

    Defect modes decay geometrically from j = 0, so their amplitude on the
    outer half of the rail is negligible; modes pinned to the artificial
    Dirichlet ends show the opposite profile.
    """
    cut = max(2, n_cells // 2)
    amp_in = max(abs(vec[v]) for j, v in vertex_ids.items() if abs(j) <= cut)
    amp_out = max(
        (abs(vec[v]) for j, v in vertex_ids.items() if abs(j) > cut), default=0.0
    )
    if amp_in == 0.0:
        return 1.0
    return amp_out / (amp_in + amp_out)


@dataclass
class OracleResult:
    """Defect eigenvalues found by the truncated-graph solve."""

    omegas: np.ndarray
    lams: np.ndarray
    n_cells: int
    h: float
    n_dofs: int
    converged: bool
    history: list = field(default_factory=list)


def _gap_eigs_once(L, mu, sym_class, lam_lo, lam_hi, n_cells, h, lo_open=False):
    K, M, vertex_ids = truncated_half_ladder(L, mu, sym_class, n_cells, h)
    sigma = 0.5 * (lam_lo + lam_hi)
    k = 8
    while True:
        k_eff = min(k, K.shape[0] - 2)
        vals, vecs = spla.eigsh(K, k=k_eff, M=M, sigma=sigma, which="LM")
        # lo_open marks a window reaching the bottom of the spectrum (the
        # leading gap): nothing can exist below it, so only the top side
        # needs to be covered by the shift-invert neighbourhood.
        covered_lo = lo_open or vals.min() < lam_lo
        covered_hi = vals.max() > lam_hi
        if (covered_lo and covered_hi) or k_eff == K.shape[0] - 2:
            break
        k *= 2
    kept = []
    for lam, vec in zip(vals, vecs.T):
        if not lam_lo < lam < lam_hi:
            continue
        if _outer_mass_fraction(vec, vertex_ids, n_cells) > 0.45:
            continue  # truncation-boundary artifact, not a defect mode
        kept.append(lam)
    return np.array(sorted(kept)), K.shape[0]


def oracle_gap_eigenvalues(
    L,
    mu,
    sym_class,
    gap,
    *,
    h=DEFAULT_H,
    n_cells=40,
    rel_tol=1e-6,
    check_convergence=True,
    edge_margin=1e-6,
):
    """Eigenvalues of the truncated defect graph inside the given gap.

    The search window is the open gap shrunk by edge_margin (relative to the
    gap width) to avoid grazing the band edges.  Shift-invert Lanczos around
    the gap centre with the requested count doubling until the window is
    covered on both sides; eigenvectors that concentrate near the truncation
    ends are discarded as boundary artifacts.  With check_convergence the run
    is repeated
    with a wider truncation and flagged converged if every eigenvalue moved by
    less than rel_tol relatively.
    """
    pad = edge_margin * gap.width
    lam_lo, lam_hi = (gap.omega_b + pad) ** 2, (gap.omega_t - pad) ** 2
    lo_open = gap.omega_b == 0.0
    lams, ndof = _gap_eigs_once(
        L, mu, sym_class, lam_lo, lam_hi, n_cells, h, lo_open
    )
    history = [(n_cells, lams)]
    converged = not check_convergence
    if check_convergence:
        lams2, _ = _gap_eigs_once(
            L, mu, sym_class, lam_lo, lam_hi, n_cells + 8, h, lo_open
        )
        history.append((n_cells + 8, lams2))
        if lams.size == lams2.size:
            if lams.size == 0 or np.all(
                np.abs(lams2 - lams) <= rel_tol * np.abs(lams)
            ):
                converged = True
                lams = lams2
    return OracleResult(
        np.sqrt(lams), lams, n_cells, h, ndof, converged, history
    )


def quasiperiodic_cell(L, sym_class, theta, h=0.01, mu=1.0):
    """Dense Hermitian (K, M) for one ladder period with Bloch phase theta.

    One rail edge of length 1 plus the rung at its left vertex; the right
    rail end is tied to exp(i*theta) times the left vertex.
    """
    asm = _Assembler()
    v0, v1 = asm.new_nodes(2)
    n_rail = _subdivisions(1.0, h)
    n_rung = _subdivisions(0.5 * L, h)
    asm.add_edge(v0, v1, n_rail, 1.0, 1.0)
    rung_end = None if sym_class is SymmetryClass.SYMMETRIC else -1
    asm.add_edge(v0, rung_end, n_rung, 0.5 * L, mu)
    K, M = asm.build()
    n = asm.n_nodes
    keep = np.setdiff1d(np.arange(n), [v1])
    T = sp.lil_matrix((n, n - 1), dtype=complex)
    for new, old in enumerate(keep):
        T[old, new] = 1.0
    T[v1, 0] = np.exp(1j * theta)  # v0 is column 0 after elimination
    T = T.tocsr()
    Kr = (T.conj().T @ K @ T).toarray()
    Mr = (T.conj().T @ M @ T).toarray()
    Kr = 0.5 * (Kr + Kr.conj().T)
    Mr = 0.5 * (Mr + Mr.conj().T)
    return Kr, Mr


def oracle_band_edges(L, sym_class, n_bands, *, h=0.01, n_theta=61):
    """First n_bands Bloch bands of the unperturbed ladder, as (lo, hi) in omega.

    Sweeps theta over [0, pi] (the spectrum is even in theta), solves the
    dense quasi-periodic cell pencil, and takes the per-index envelope.  Flat
    bands come out with lo == hi up to discretisation error.
    """
    thetas = np.linspace(0.0, math.pi, n_theta)
    per_theta = np.empty((n_theta, n_bands))
    for i, th in enumerate(thetas):
        Kr, Mr = quasiperiodic_cell(L, sym_class, th, h=h)
        vals = scipy.linalg.eigh(Kr, Mr, eigvals_only=True)
        per_theta[i] = vals[:n_bands]
    lo = np.sqrt(np.clip(per_theta.min(axis=0), 0.0, None))
    hi = np.sqrt(per_theta.max(axis=0))
    return list(zip(lo, hi))
