"""Deterministic lowest-eigenpair solver: Krylov iteration with full reorthogonalization.

The basis is kept fully orthonormal (two-pass Gram-Schmidt per step), the
projected matrix is accumulated from the orthogonalization coefficients, and
Rayleigh-Ritz is applied every step.  When the basis reaches `basis_cap` the
iteration thick-restarts from the `keep` lowest Ritz vectors plus the current
residual direction.  The start vector comes from a seeded generator, so equal
inputs give bitwise-equal results.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = ["EigenResult", "NumericsError", "fix_phase", "lowest_eigenpair"]


class NumericsError(RuntimeError):
    """NaN or other numeric breakdown inside an operator application."""


@dataclass
class EigenResult:
    value: float
    vector: np.ndarray
    residual: float
    matvecs: int
    converged: bool


def fix_phase(vec: np.ndarray) -> np.ndarray:
    """Normalize the global phase: the first maximal-magnitude entry becomes real positive."""
    flat = np.abs(vec.ravel())
    i = int(np.argmax(flat))
    pivot = vec.ravel()[i]
    if flat[i] == 0.0:
        return vec
    phase = pivot / flat[i]
    out = vec / phase
    if not np.iscomplexobj(vec):
        out = out.real
    return out


def lowest_eigenpair(matvec, dim: int, *, is_complex: bool = False, seed: int = 0,
                     tol: float = 1e-10, max_matvecs: int = 6000,
                     basis_cap: int = 96, keep: int = 8) -> EigenResult:
    """Lowest eigenpair of a Hermitian operator given through `matvec`.

    `tol` bounds the 2-norm residual ||A x - theta x|| of the returned pair.
    If the budget runs out first, the best pair so far is returned with
    converged=False.
    """
    if dim < 1:
        raise ValueError("dim must be >= 1")
    basis_cap = max(2, min(basis_cap, dim))
    keep = max(1, min(keep, basis_cap - 1))
    dtype = np.complex128 if is_complex else np.float64

    rng = np.random.default_rng(seed)
    v = rng.standard_normal(dim)
    if is_complex:
        v = v + 1j * rng.standard_normal(dim)
    v = v.astype(dtype)
    v /= np.linalg.norm(v)

    V = np.zeros((basis_cap, dim), dtype=dtype)
    H = np.zeros((basis_cap, basis_cap), dtype=dtype)
    V[0] = v
    m = 1
    nmv = 0

    def exact_pair(s):
        nonlocal nmv
        x = V[:m].T @ s
        x /= np.linalg.norm(x)
        hx = matvec(x)
        nmv += 1
        theta = float(np.real(np.vdot(x, hx)))
        res = float(np.linalg.norm(hx - theta * x))
        return theta, x, res

    best = None
    while True:
        w = np.asarray(matvec(V[m - 1]), dtype=dtype)
        nmv += 1
        if not np.all(np.isfinite(w)):
            raise NumericsError("operator application produced non-finite values")
        coeff = V[:m].conj() @ w
        w = w - V[:m].T @ coeff
        second = V[:m].conj() @ w
        w = w - V[:m].T @ second
        coeff = coeff + second
        H[:m, m - 1] = coeff
        H[m - 1, :m] = coeff.conj()
        beta = float(np.linalg.norm(w))

        small = H[:m, :m]
        vals, vecs = np.linalg.eigh(0.5 * (small + small.conj().T))
        if not np.all(np.isfinite(vals)):
            raise NumericsError("projected spectrum is non-finite")
        theta = float(vals[0])
        s = vecs[:, 0]
        res_est = beta * abs(s[-1])

        if res_est <= tol or m == dim or beta <= 1e-14 or nmv >= max_matvecs:
            theta_x, x, res = exact_pair(s)
            if best is None or res < best.residual:
                best = EigenResult(theta_x, x, res, nmv, res <= tol)
            if res <= tol or m == dim or nmv >= max_matvecs:
                best.matvecs = nmv
                best.converged = best.residual <= tol
                return best
            if beta <= 1e-14:
                # invariant subspace missed the target residual: continue in a
                # fresh seeded direction orthogonal to the current basis
                w = rng.standard_normal(dim).astype(dtype)
                if is_complex:
                    w = w + 1j * rng.standard_normal(dim)
                w = w - V[:m].T @ (V[:m].conj() @ w)
                beta = float(np.linalg.norm(w))
                if beta == 0.0:
                    best.matvecs = nmv
                    return best

        if m == basis_cap:
            ritz = (V[:m].T @ vecs[:, :keep]).T
            V[:keep] = ritz
            H.fill(0.0)
            H[:keep, :keep] = np.diag(vals[:keep]).astype(dtype)
            V[keep] = w / beta
            m = keep + 1
        else:
            V[m] = w / beta
            m += 1
