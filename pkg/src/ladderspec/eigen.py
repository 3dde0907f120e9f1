"""Eigensolvers for symmetric/Hermitian generalized pencils (K, M).

Two routes with one result type:

* `eig_dense` — LAPACK via scipy for moderate sizes (all eigenvalues, or an
  index/value window);
* `eig_sparse_shift_invert` — a self-contained shift-invert Lanczos with full
  reorthogonalisation in the M-inner product, for large sparse pencils where
  only eigenvalues near a target are wanted.

The Lanczos path deliberately avoids ARPACK so that its behaviour (start
vector, reorthogonalisation, stopping rule) is fully pinned down by this file;
it factorises K - sigma*M once with SuperLU and works in the M-inner product,
so M only needs to be positive definite, K only Hermitian.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
import scipy.sparse as sp
import scipy.sparse.linalg as spla


@dataclass
class EigenResult:
    """Solved eigenpairs, ascending by eigenvalue."""

    values: np.ndarray
    vectors: np.ndarray  # column i pairs with values[i]; M-orthonormal
    residuals: np.ndarray  # ||K x - lam M x||_2 per pair
    iterations: int = 0
    converged: bool = True
    n_outside_window: int = 0  # converged pairs discarded by the window filter
    message: str = ""


def eig_dense(K, M, *, window=None, subset=None):
    """All (or a subset of) eigenpairs of the dense Hermitian pencil.

    window=(lo, hi) keeps eigenvalues in [lo, hi]; subset=(i0, i1) keeps the
    inclusive index range.  M must be positive definite.
    """
    Kd = K.toarray() if sp.issparse(K) else np.asarray(K)
    Md = M.toarray() if sp.issparse(M) else np.asarray(M)
    try:
        if subset is not None:
            vals, vecs = scipy.linalg.eigh(Kd, Md, subset_by_index=subset)
        elif window is not None:
            vals, vecs = scipy.linalg.eigh(Kd, Md, subset_by_value=window)
        else:
            vals, vecs = scipy.linalg.eigh(Kd, Md)
    except scipy.linalg.LinAlgError as exc:
        if "positive definite" in str(exc):
            raise ValueError(
                "mass matrix is not positive definite; check mesh/constraint "
                "assembly"
            ) from exc
        raise
    res = _pair_residuals(Kd, Md, vals, vecs)
    return EigenResult(vals, vecs, res)


def _pair_residuals(K, M, vals, vecs):
    if vals.size == 0:
        return np.zeros(0)
    R = K @ vecs - (M @ vecs) * vals[np.newaxis, :]
    return np.linalg.norm(R, axis=0)


def _m_inner(M, x, y, keep_complex):
    """M-inner product <x, y>_M, as a scalar of the working dtype."""
    v = np.vdot(x, M @ y)
    return v if keep_complex else v.real


def eig_sparse_shift_invert(
    K,
    M,
    sigma,
    k,
    *,
    window=None,
    tol=1e-10,
    max_steps=None,
    seed=0,
    jitter_retries=5,
):
    """k eigenpairs of K x = lam M x nearest sigma, by Lanczos on (K-sigma*M)^-1 M.

    Restarts with a slightly moved shift if the factorisation hits a singular
    pencil.  With window=(lo, hi), converged eigenvalues outside the window
    are dropped and counted in n_outside_window — callers use that count to
    detect an under-sized k.
    """
    if not sp.issparse(K):
        K = sp.csr_matrix(K)
    if not sp.issparse(M):
        M = sp.csr_matrix(M)
    n = K.shape[0]
    if k < 1 or k > n - 1:
        raise ValueError(f"k={k} out of range for n={n}")
    shift = sigma
    last_exc = None
    for attempt in range(jitter_retries + 1):
        try:
            lu = spla.splu((K - shift * M).tocsc())
        except RuntimeError as exc:
            last_exc = exc
            shift = sigma + (1e-8 + attempt * 1e-6) * max(1.0, abs(sigma))
            continue
        result = _lanczos_si(K, M, lu, shift, k, tol, max_steps, seed)
        if result is not None:
            vals, vecs, iters, ok, msg = result
            break
        # near-breakdown before anything converged: nudge the shift
        last_exc = RuntimeError("Lanczos breakdown before convergence")
        shift = sigma + (1e-8 + attempt * 1e-6) * max(1.0, abs(sigma))
    else:
        raise RuntimeError(
            f"shift-invert failed after {jitter_retries + 1} attempts: {last_exc}"
        )
    order = np.argsort(vals)
    vals, vecs = vals[order], vecs[:, order]
    n_out = 0
    if window is not None:
        lo, hi = window
        inside = (vals >= lo) & (vals <= hi)
        n_out = int(np.count_nonzero(~inside))
        vals, vecs = vals[inside], vecs[:, inside]
    res = _pair_residuals(K, M, vals, vecs)
    return EigenResult(vals, vecs, res, iters, ok, n_out, msg)


def _lanczos_si(K, M, lu, sigma, k, tol, max_steps, seed):
    """Core Lanczos loop; returns None on unproductive breakdown."""
    n = K.shape[0]
    dtype = np.result_type(K.dtype, M.dtype, np.float64)
    if max_steps is None:
        max_steps = min(n - 1, max(6 * k, 100))
    cplx = dtype.kind == "c"
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(n).astype(dtype)
    if cplx:
        v = (v + 1j * rng.standard_normal(n)).astype(dtype)
    nrm = math.sqrt(abs(_m_inner(M, v, v, cplx)))
    v /= nrm
    V = [v]
    alphas, betas = [], []
    theta = s = None
    for step in range(1, max_steps + 1):
        w = lu.solve(M @ V[-1])
        a = _m_inner(M, V[-1], w, cplx)
        w = w - a * V[-1]
        if len(V) > 1:
            w = w - betas[-1] * V[-2]
        # full reorthogonalisation, twice, against every kept basis vector
        for _ in range(2):
            for u in V:
                w = w - _m_inner(M, u, w, cplx) * u
        alphas.append(a if not cplx else a.real)
        b = math.sqrt(abs(_m_inner(M, w, w, cplx)))
        T_alph = np.array(alphas)
        T_beta = np.array(betas)
        theta, s = scipy.linalg.eigh_tridiagonal(T_alph, T_beta)
        # Ritz values of the inverted operator; largest |theta| sit nearest
        # sigma in the original pencil.
        idx = np.argsort(-np.abs(theta))[: min(k, theta.size)]
        bounds = b * np.abs(s[-1, idx])
        if idx.size == k and np.all(bounds <= tol * np.maximum(np.abs(theta[idx]), 1e-300)):
            return _ritz_to_pairs(V, theta, s, idx, sigma, step, True, "")
        if b <= 1e-14 * max(1.0, abs(a)):
            # invariant subspace; accept what we have if it is usable
            if idx.size == k:
                return _ritz_to_pairs(
                    V, theta, s, idx, sigma, step, True, "breakdown after convergence"
                )
            return None
        betas.append(b)
        V.append(w / b)
    idx = np.argsort(-np.abs(theta))[: min(k, theta.size)]
    return _ritz_to_pairs(
        V,
        theta,
        s,
        idx,
        sigma,
        max_steps,
        False,
        f"no convergence in {max_steps} steps",
    )


def _ritz_to_pairs(V, theta, s, idx, sigma, iters, ok, msg):
    basis = np.column_stack(V[: s.shape[0]])
    vecs = basis @ s[:, idx]
    with np.errstate(divide="ignore"):
        lams = sigma + 1.0 / theta[idx]
    return lams, vecs, iters, ok, msg
