"""2-D P1 finite elements on the thin ladder: Bloch bands, trapped modes,
and the fattened pseudo-mode residual.

Everything operates on the symmetry-reduced lower half of the ladder, so the
class enters only through the boundary condition on the y = 0 line: natural
(Neumann) for the symmetric family, essential (Dirichlet) for the
antisymmetric one.  The essential spectrum comes from theta-quasi-periodic
pencils on the periodicity cell; the discrete spectrum from Neumann-truncated
supercells around the perturbed rung.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from scipy.optimize import minimize_scalar

from .eigen import eig_dense, eig_sparse_shift_invert
from .mesh import Mesh, build_cell_mesh, build_supercell_mesh, rectangle_mesh
from .modes import build_eigenfunction
from .params import LadderParams, SymmetryClass
from .report import SpectralReport

DENSE_CUTOFF = 2200  # below this many dofs the dense eigensolver is used


def assemble_p1(mesh: Mesh):
    """Real stiffness/mass pair for continuous P1 on the triangulation."""
    pts, tris = mesh.nodes, mesh.triangles
    x = pts[tris, 0]  # (m, 3)
    y = pts[tris, 1]
    b = np.stack([y[:, 1] - y[:, 2], y[:, 2] - y[:, 0], y[:, 0] - y[:, 1]], axis=1)
    c = np.stack([x[:, 2] - x[:, 1], x[:, 0] - x[:, 2], x[:, 1] - x[:, 0]], axis=1)
    det = (x[:, 1] - x[:, 0]) * (y[:, 2] - y[:, 0]) - (x[:, 2] - x[:, 0]) * (
        y[:, 1] - y[:, 0]
    )
    if np.any(det <= 0):
        raise ValueError("mesh contains non-positively oriented triangles")
    area = 0.5 * det
    Ke = (
        b[:, :, None] * b[:, None, :] + c[:, :, None] * c[:, None, :]
    ) / (4.0 * area)[:, None, None]
    Me = ((np.ones((3, 3)) + np.eye(3)) / 12.0)[None, :, :] * area[:, None, None]
    rows = np.repeat(tris, 3, axis=1).ravel()
    cols = np.tile(tris, (1, 3)).ravel()
    n = mesh.n_nodes
    K = sp.coo_matrix((Ke.ravel(), (rows, cols)), shape=(n, n)).tocsr()
    M = sp.coo_matrix((Me.ravel(), (rows, cols)), shape=(n, n)).tocsr()
    return K, M


@dataclass
class HermitianPencil:
    """Reduced (K, M) after quasi-periodic tying / Dirichlet elimination.

    T maps reduced dofs to full mesh nodes (u_full = T u_red); free lists the
    full-mesh node ids that survived as their own dofs, in column order.
    """

    K: sp.csr_matrix
    M: sp.csr_matrix
    T: sp.csr_matrix
    free: np.ndarray
    theta: float


def _reduction_matrix(mesh, theta, dirichlet_axis, tie=True):
    n = mesh.n_nodes
    drop = np.zeros(n, dtype=bool)
    if tie:
        if mesh.left.size != mesh.right.size:
            raise ValueError("left/right boundary node counts differ")
        drop[mesh.right] = True
    if dirichlet_axis:
        drop[mesh.axis] = True
    keep = np.nonzero(~drop)[0]
    col_of = -np.ones(n, dtype=int)
    col_of[keep] = np.arange(keep.size)
    rows = [keep]
    cols = [col_of[keep]]
    vals = [np.ones(keep.size)]
    if tie:
        masters = col_of[mesh.left]
        if np.any(masters < 0):
            raise ValueError("a tying master node was eliminated")
        rows.append(mesh.right)
        cols.append(masters)
        # snap the endpoint phases so theta in {0, pi} yields an exactly
        # real symmetric reduced pencil
        if theta == 0.0:
            phase = 1.0
        elif theta == math.pi:
            phase = -1.0
        else:
            phase = np.exp(-1j * theta)
        vals.append(np.full(mesh.right.size, phase))
    T = sp.coo_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(n, keep.size),
    ).tocsr()
    return T, keep


def _reduce_hermitian(A, T):
    B = (T.conj().T @ A @ T).tocsr()
    return (B + B.conj().T) * 0.5


def assemble_bloch_pencil(mesh, theta):
    """Quasi-periodic pencil on a periodicity-cell mesh at Bloch phase theta.

    The right boundary trace is e^{-i theta} times the left one; the class
    stored in the mesh metadata decides the y = 0 condition.
    """
    if not 0.0 <= theta <= math.pi + 1e-12:
        raise ValueError(f"theta={theta} outside [0, pi]")
    K, M = assemble_p1(mesh)
    dirichlet = mesh.meta.get("sym_class") == SymmetryClass.ANTISYMMETRIC.value
    T, keep = _reduction_matrix(mesh, theta, dirichlet)
    return HermitianPencil(
        _reduce_hermitian(K, T), _reduce_hermitian(M, T), T, keep, float(theta)
    )


def _lowest_eigs(Kr, Mr, nev, *, seed=0):
    n = Kr.shape[0]
    nev = min(nev, n)
    if n <= DENSE_CUTOFF:
        return eig_dense(Kr, Mr, subset=(0, nev - 1)).values
    res = eig_sparse_shift_invert(Kr, Mr, -1e-2, min(nev, n - 2), seed=seed)
    return res.values


def fem_bloch_bands(
    params: LadderParams,
    sym_class,
    nev,
    h,
    *,
    theta_grid=None,
    n_theta=17,
    refine_edges=True,
    theta_xatol=1e-5,
    seed=0,
):
    """First nev Bloch bands of the unperturbed thin ladder.

    Sweeps theta over [0, pi] (the pencil spectrum is even in theta), then
    optionally sharpens each band's extremes with a bounded 1-D minimisation
    around the extremal grid point.  Bands and gaps are reported in omega =
    sqrt(lambda); the per-theta eigenvalue grid is kept as a table.
    """
    sym_class = SymmetryClass.parse(sym_class)
    mesh = build_cell_mesh(params, sym_class, h)
    K, M = assemble_p1(mesh)
    dirichlet = sym_class is SymmetryClass.ANTISYMMETRIC
    cache = {}

    def lam_at(theta):
        key = round(float(theta), 12)
        if key not in cache:
            T, _ = _reduction_matrix(mesh, theta, dirichlet)
            cache[key] = _lowest_eigs(
                _reduce_hermitian(K, T), _reduce_hermitian(M, T), nev, seed=seed
            )
        return cache[key]

    if theta_grid is None:
        theta_grid = np.linspace(0.0, math.pi, n_theta)
    thetas = np.asarray(theta_grid, dtype=float)
    grid = np.array([lam_at(t) for t in thetas])

    def _refined_extreme(band, sign):
        """min (sign=+1) or max (sign=-1) of lambda_band(theta)."""
        vals = sign * grid[:, band]
        i0 = int(np.argmin(vals))
        best = vals[i0]
        if refine_edges and thetas.size > 2:
            lo_t = thetas[max(i0 - 1, 0)]
            hi_t = thetas[min(i0 + 1, thetas.size - 1)]
            if hi_t > lo_t:
                r = minimize_scalar(
                    lambda t: sign * lam_at(t)[band],
                    bounds=(lo_t, hi_t),
                    method="bounded",
                    options={"xatol": theta_xatol},
                )
                best = min(best, r.fun)
        return sign * best

    bands = []
    for bnd in range(grid.shape[1]):
        lam_lo = _refined_extreme(bnd, +1)
        lam_hi = _refined_extreme(bnd, -1)
        bands.append(
            (math.sqrt(max(lam_lo, 0.0)), math.sqrt(max(lam_hi, 0.0)))
        )
    gaps = []
    for (lo0, hi0), (lo1, hi1) in zip(bands[:-1], bands[1:]):
        if lo1 > hi0 * (1 + 1e-12) + 1e-12:
            gaps.append({"omega_b": hi0, "omega_t": lo1})
    report = SpectralReport(
        kind="fem_bloch_bands",
        config={
            "L": params.L,
            "eps": params.eps,
            "mu": params.mu,
            "sym_class": sym_class.value,
            "h": h,
            "nev": nev,
            "n_theta": int(thetas.size),
        },
        bands=[list(b) for b in bands],
        gaps=gaps,
        diagnostics={
            "n_nodes": mesh.n_nodes,
            "n_dofs": int(K.shape[0] - mesh.right.size - (mesh.axis.size if dirichlet else 0)),
            "mesh_area": mesh.total_area(),
        },
    )
    rows = [
        (float(t), bnd, float(grid[i, bnd]), math.sqrt(max(float(grid[i, bnd]), 0.0)))
        for i, t in enumerate(thetas)
        for bnd in range(grid.shape[1])
    ]
    report.add_table("theta_eigenvalues", ["theta", "band", "lambda", "omega"], rows)
    return report


def _tri_mass_integrals(mesh, values):
    """Per-triangle integral of |u_h|^2 for nodal values (possibly complex)."""
    v = values[mesh.triangles]
    areas = mesh.areas()
    sq = np.abs(v) ** 2
    cross = (
        v[:, 0] * v[:, 1].conj() + v[:, 0] * v[:, 2].conj() + v[:, 1] * v[:, 2].conj()
    ).real
    return areas / 12.0 * (2.0 * sq.sum(axis=1) + 2.0 * cross)


def per_cell_mass(mesh, values, n_cells):
    """L^2 mass of a nodal field per unit cell j = -n_cells..n_cells."""
    pts, tris = mesh.nodes, mesh.triangles
    cx = pts[tris, 0].mean(axis=1)
    cell = np.clip(np.rint(cx).astype(int), -n_cells, n_cells)
    out = np.zeros(2 * n_cells + 1)
    np.add.at(out, cell + n_cells, _tri_mass_integrals(mesh, values))
    return out


def _fit_decay(profile, n_cells):
    """Fit mass_j ~ C r^(2|j|) on interior cells; returns (r_hat, n_points)."""
    js, logs = [], []
    for j in range(-n_cells, n_cells + 1):
        if abs(j) < 1 or abs(j) > n_cells - 2:
            continue
        m = profile[j + n_cells]
        if m > 0:
            js.append(abs(j))
            logs.append(math.log(m))
    if len(js) < 3 or len(set(js)) < 2:
        return math.nan, len(js)
    slope = np.polyfit(js, logs, 1)[0]
    return math.exp(0.5 * slope), len(js)


def localized_modes(
    params: LadderParams,
    sym_class,
    window,
    n_cells,
    h,
    *,
    max_nev=48,
    seed=0,
    tol=1e-9,
    dump_prefix=None,
):
    """Trapped modes of the perturbed supercell inside a lambda window.

    window must lie inside a spectral gap of the same-eps periodic problem;
    shift-invert Lanczos at the window centre doubles its subspace size until
    converged eigenvalues bracket the window from both sides, so nothing
    inside can be missed.  Each in-window eigenpair gets a per-cell mass
    profile, a fitted geometric decay rate r_hat, and the share of mass in
    the central three cells.
    """
    sym_class = SymmetryClass.parse(sym_class)
    lam_lo, lam_hi = float(window[0]), float(window[1])
    if not lam_lo < lam_hi:
        raise ValueError("empty window")
    mesh = build_supercell_mesh(params, sym_class, n_cells, h)
    K, M = assemble_p1(mesh)
    if sym_class is SymmetryClass.ANTISYMMETRIC:
        T, keep = _reduction_matrix(mesh, 0.0, True, tie=False)
        K = _reduce_hermitian(K, T).real
        M = _reduce_hermitian(M, T).real
    else:
        keep = np.arange(mesh.n_nodes)
    n = K.shape[0]
    sigma = 0.5 * (lam_lo + lam_hi)
    k = 6
    while True:
        k_eff = min(k, n - 2, max_nev)
        res = eig_sparse_shift_invert(K, M, sigma, k_eff, seed=seed, tol=tol)
        vals = res.values
        if (
            vals.size
            and vals.min() < lam_lo
            and vals.max() > lam_hi
        ) or k_eff >= min(max_nev, n - 2):
            break
        k *= 2
    inside = (vals > lam_lo) & (vals < lam_hi)
    report = SpectralReport(
        kind="localized_modes",
        config={
            "L": params.L,
            "eps": params.eps,
            "mu": params.mu,
            "sym_class": sym_class.value,
            "n_cells": n_cells,
            "h": h,
            "window": [lam_lo, lam_hi],
        },
        diagnostics={
            "n_dofs": n,
            "k_used": int(k_eff),
            "solver_converged": bool(res.converged),
            "n_outside_window": int(np.count_nonzero(~inside)),
            "mesh_area": mesh.total_area(),
        },
    )
    mode_rows = []
    profile_rows = []
    for rank, idx in enumerate(np.nonzero(inside)[0]):
        lam = float(vals[idx])
        full = np.zeros(mesh.n_nodes, dtype=res.vectors.dtype)
        full[keep] = res.vectors[:, idx]
        if dump_prefix is not None:
            mesh.save(f"{dump_prefix}{rank}.mesh", values=np.real(full))
        prof = per_cell_mass(mesh, full, n_cells)
        total = prof.sum()
        r_hat, n_fit = _fit_decay(prof, n_cells)
        centre = prof[n_cells - 1 : n_cells + 2].sum() / total if total > 0 else 0.0
        omega = math.sqrt(max(lam, 0.0))
        report.eigenvalues.append(omega)
        mode_rows.append(
            (
                omega,
                lam,
                r_hat,
                float(centre),
                float(res.residuals[idx]),
                n_fit,
            )
        )
        for j in range(-n_cells, n_cells + 1):
            profile_rows.append((omega, j, float(prof[j + n_cells] / total)))
    report.add_table(
        "modes",
        ["omega", "lambda", "r_hat", "center_mass_fraction", "residual", "n_fit_cells"],
        mode_rows,
    )
    report.add_table("mass_profiles", ["omega", "cell", "mass_fraction"], profile_rows)
    return report


# -- pseudo-mode ------------------------------------------------------------


def _interpolate_pseudo_mode(mesh, ef, params):
    """Nodal values of the fattened eigenfunction on a supercell mesh.

    Junction squares carry the vertex value, rungs the rescaled vertical
    trace, strip spans the rescaled horizontal trace, exactly in the lower
    half-domain convention (for the antisymmetric class this flips the sign
    of strip and junction values relative to the upper rail; the rung trace
    produces that sign automatically at y = -L/2).
    """
    L, eps, mu = params.L, params.eps, params.mu
    n_cells = mesh.meta["n_cells"]
    x, y = mesh.nodes[:, 0], mesh.nodes[:, 1]
    w, r, A = ef.ev.omega, ef.r, ef.amplitude
    sym = ef.ev.sym_class is SymmetryClass.SYMMETRIC
    half = 0.5 * w * L
    out = np.empty(mesh.n_nodes)
    in_col = np.zeros(mesh.n_nodes, dtype=bool)
    y_top = -0.5 * L + eps
    t_scale = 1.0 - 2.0 * eps / L
    tol = 1e-12
    sign = 1.0 if sym else -1.0  # lower-rail vertex value relative to u_j

    def vertex(j):
        return A * r ** abs(j)

    for j in range(-n_cells, n_cells + 1):
        wj = mu if j == 0 else 1.0
        col = np.abs(x - j) <= 0.5 * wj * eps + tol
        junc = col & (y <= y_top + tol)
        rung = col & ~junc
        out[junc] = sign * vertex(j)
        t = y[rung] / t_scale
        if sym:
            out[rung] = vertex(j) * np.cos(w * t) / math.cos(half)
        else:
            out[rung] = vertex(j) * np.sin(w * t) / math.sin(half)
        in_col |= col
    strip = ~in_col
    xs = x[strip]
    jf = np.floor(xs).astype(int)
    wl = np.where(jf == 0, mu, 1.0)
    wr = np.where(jf + 1 == 0, mu, 1.0)
    s = (xs - jf - wl * eps / 2.0) / (1.0 - (wl + wr) * eps / 2.0)
    uj = A * r ** np.abs(jf)
    uj1 = A * r ** np.abs(jf + 1)
    out[strip] = (
        sign
        * (uj * np.sin(w * (1.0 - s)) + uj1 * np.sin(w * s))
        / math.sin(w)
    )
    return out


def quasimode_detail(params: LadderParams, sym_class, graph_ev, h, *, n_cells=10):
    """Residual diagnostics for the fattened graph eigenfunction.

    Returns both residual ratios for lambda = omega_graph^2 on the supercell
    pencil: 'ratio_dual' measures the residual in the (K+M)^-1 norm (the
    discrete H^1 dual, mesh-stable), 'ratio_mass' in the M^-1 norm
    (the L^2 dual; singular interface layers make it mesh-sensitive).  The
    denominator is the K+M (full H^1) norm of the pseudo-mode in both cases.
    """
    sym_class = SymmetryClass.parse(sym_class)
    if graph_ev.sym_class is not sym_class:
        raise ValueError("eigenvalue belongs to the other symmetry class")
    if abs(graph_ev.mu - params.mu) > 1e-12:
        raise ValueError("params.mu must match the eigenvalue's mu")
    ef = build_eigenfunction(graph_ev, params.L)
    mesh = build_supercell_mesh(params, sym_class, n_cells, h)
    values = _interpolate_pseudo_mode(mesh, ef, params)
    K, M = assemble_p1(mesh)
    if sym_class is SymmetryClass.ANTISYMMETRIC:
        T, keep = _reduction_matrix(mesh, 0.0, True, tie=False)
        K = _reduce_hermitian(K, T).real.tocsr()
        M = _reduce_hermitian(M, T).real.tocsr()
        vec = values[keep]
    else:
        vec = values
    lam = graph_ev.omega**2
    resid = K @ vec - lam * (M @ vec)
    KM = (K + M).tocsc()
    lu_km = spla.splu(KM)
    lu_m = spla.splu(M.tocsc())
    num_dual = math.sqrt(max(float(resid @ lu_km.solve(resid)), 0.0))
    num_mass = math.sqrt(max(float(resid @ lu_m.solve(resid)), 0.0))
    den = math.sqrt(float(vec @ (K @ vec) + vec @ (M @ vec)))
    return {
        "lambda": lam,
        "omega": graph_ev.omega,
        "ratio_dual": num_dual / den,
        "ratio_mass": num_mass / den,
        "h1_norm": den,
        "n_dofs": K.shape[0],
        "n_cells": n_cells,
        "h": h,
    }


def quasimode_residual(
    params: LadderParams, sym_class, graph_ev, h, *, n_cells=10, metric="dual"
):
    """Scalar residual ratio of the fattened pseudo-mode (see quasimode_detail)."""
    detail = quasimode_detail(params, sym_class, graph_ev, h, n_cells=n_cells)
    try:
        return detail[f"ratio_{metric}"]
    except KeyError:
        raise ValueError(f"unknown metric {metric!r}; use 'dual' or 'mass'") from None


def neumann_rectangle_eigs(a, b, nx, ny, nev):
    """Lowest Neumann eigenvalues of (0,a)x(0,b): computed vs exact.

    The exact values are pi^2 (m^2/a^2 + n^2/b^2) over integer pairs; used as
    the self-check of the assembly + solver chain on a geometry with a known
    closed form.
    """
    mesh = rectangle_mesh(a, b, nx, ny)
    K, M = assemble_p1(mesh)
    vals = _lowest_eigs(K, M, nev)
    exact = sorted(
        math.pi**2 * (m * m / (a * a) + n * n / (b * b))
        for m in range(12)
        for n in range(12)
    )[:nev]
    return np.asarray(vals), np.asarray(exact)
