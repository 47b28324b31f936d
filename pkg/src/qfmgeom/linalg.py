"""Dense complex kernels built on a cyclic Jacobi Hermitian eigensolver.

Everything works on stacks of matrices (leading batch axis) so grid sweeps
can push thousands of small matrices through one set of vectorised
rotations.  Single-matrix wrappers are provided for the common case.
"""

from __future__ import annotations

from typing import NamedTuple

import numpy as np

from .pauli import SkewHermitianOp, to_dense

MAX_SWEEPS = 100
OFF_TOL = 1e-12
#: eigenphases this close to the branch cut at -pi are rejected
BRANCH_TOL = 1e-10


class EigenError(ArithmeticError):
    pass


class NotHermitianError(ValueError):
    pass


class BranchCutError(ArithmeticError):
    """An eigenphase sits on the principal-log branch cut."""


class EigenDecomposition(NamedTuple):
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray


def _off_norm(a: np.ndarray, mask: np.ndarray | None = None) -> np.ndarray:
    off = np.abs(a) ** 2
    if mask is not None:
        off = np.where(mask, off, 0.0)
    idx = np.arange(a.shape[-1])
    off[..., idx, idx] = 0.0
    return np.sqrt(off.sum(axis=(-2, -1)))


def jacobi_eigh_batch(h: np.ndarray, allowed: np.ndarray | None = None,
                      tol: float = OFF_TOL, max_sweeps: int = MAX_SWEEPS):
    """Cyclic Jacobi on a stack of Hermitian matrices ``h`` of shape (B, n, n).

    ``allowed`` (B, n, n) bool restricts which pivots may rotate; the
    off-diagonal mass outside allowed pivots is ignored for convergence.
    Returns unsorted ``(eigenvalues, eigenvectors)``.
    """
    a = np.array(h, dtype=complex, copy=True)
    bsz, n, _ = a.shape
    v = np.broadcast_to(np.eye(n, dtype=complex), a.shape).copy()
    if n == 1:
        return a[:, 0, :].real.copy(), v
    scale = np.maximum(1.0, np.linalg.norm(a, axis=(-2, -1)))
    mask = None
    if allowed is not None:
        mask = np.array(allowed, dtype=bool)
        mask = mask & mask.transpose(0, 2, 1)
    pivots = [(p, q) for p in range(n - 1) for q in range(p + 1, n)]

    def residual():
        return _off_norm(a, mask)

    for _ in range(max_sweeps):
        res = residual()
        if np.all(res <= tol * scale):
            break
        for p, q in pivots:
            apq = a[:, p, q]
            mag = np.abs(apq)
            active = mag > 1e-300
            if mask is not None:
                active &= mask[:, p, q]
            if not active.any():
                continue
            app = a[:, p, p].real
            aqq = a[:, q, q].real
            safe = np.where(active, mag, 1.0)
            theta = (aqq - app) / (2.0 * safe)
            big = np.abs(theta) > 1e150
            theta = np.where(big, 0.0, theta)
            t = np.sign(theta) / (np.abs(theta) + np.sqrt(theta * theta + 1.0))
            t = np.where(theta == 0.0, 1.0, t)
            active &= ~big
            t = np.where(active, t, 0.0)
            c = 1.0 / np.sqrt(t * t + 1.0)
            s = t * c
            ph = np.where(active, apq / safe, 1.0)  # e^{i phi}
            # J = [[c, s e^{i phi}], [-s e^{-i phi}, c]] on (p, q)
            sp = (s * ph)[:, None]
            sm = (s * np.conj(ph))[:, None]
            cc = c[:, None]
            # A <- A J (columns)
            colp = a[:, :, p].copy()
            colq = a[:, :, q]
            a[:, :, p] = cc * colp - sm * colq
            a[:, :, q] = sp * colp + cc * colq
            # A <- J^H A (rows)
            rowp = a[:, p, :].copy()
            rowq = a[:, q, :]
            a[:, p, :] = cc * rowp - sp * rowq
            a[:, q, :] = sm * rowp + cc * rowq
            a[:, p, q] = np.where(active, 0.0, a[:, p, q])
            a[:, q, p] = np.where(active, 0.0, a[:, q, p])
            a[:, p, p] = a[:, p, p].real
            a[:, q, q] = a[:, q, q].real
            vp = v[:, :, p].copy()
            vq = v[:, :, q]
            v[:, :, p] = cc * vp - sm * vq
            v[:, :, q] = sp * vp + cc * vq
    else:
        res = residual()
        if np.any(res > tol * scale):
            raise EigenError(
                f"Jacobi did not converge in {max_sweeps} sweeps "
                f"(off-diagonal residual {float(res.max()):.3e})")
    return np.einsum("...ii->...i", a).real.copy(), v


def _check_hermitian(h: np.ndarray) -> None:
    dev = np.linalg.norm(h - np.conj(np.swapaxes(h, -1, -2)), axis=(-2, -1))
    size = np.maximum(1.0, np.linalg.norm(h, axis=(-2, -1)))
    if np.any(dev >= 1e-10 * size):
        raise NotHermitianError(f"matrix is not Hermitian (|H - H^H|_F = {float(np.max(dev)):.3e})")


def herm_eig_batch(h: np.ndarray) -> EigenDecomposition:
    h = np.asarray(h, dtype=complex)
    _check_hermitian(h)
    h = 0.5 * (h + np.conj(np.swapaxes(h, -1, -2)))
    w, v = jacobi_eigh_batch(h)
    order = np.argsort(w, axis=-1)
    w = np.take_along_axis(w, order, axis=-1)
    v = np.take_along_axis(v, order[:, None, :], axis=-1)
    return EigenDecomposition(w, v)


def herm_eig(h: np.ndarray) -> EigenDecomposition:
    """Eigen-decomposition of one Hermitian matrix, eigenvalues ascending."""
    h = np.asarray(h, dtype=complex)
    if h.ndim != 2 or h.shape[0] != h.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {h.shape}")
    w, v = herm_eig_batch(h[None])
    return EigenDecomposition(w[0], v[0])


def expm_skew_dense(a: np.ndarray) -> np.ndarray:
    """exp of a (stack of) skew-Hermitian matrices via ``A = -iH``."""
    a = np.asarray(a, dtype=complex)
    single = a.ndim == 2
    h = 1j * (a[None] if single else a)
    w, v = herm_eig_batch(h)
    u = np.einsum("bij,bj,bkj->bik", v, np.exp(-1j * w), np.conj(v))
    return u[0] if single else u


def expm_skew(a: SkewHermitianOp) -> np.ndarray:
    """Unitary ``exp(a)`` for a Pauli-sum generator."""
    return expm_skew_dense(to_dense(a))


def is_unitary(u: np.ndarray, tol: float = 1e-9) -> bool:
    u = np.asarray(u)
    return bool(np.linalg.norm(np.conj(u.T) @ u - np.eye(u.shape[0])) < tol)


def unitary_eig_batch(u: np.ndarray, cluster_tol: float = 1e-6):
    """Eigenphases in (-pi, pi] and eigenvectors of a stack of unitaries.

    Diagonalises the Hermitian part first, then resolves every cluster of
    equal cosines with the anti-Hermitian part restricted to that cluster
    (``e^{i t}`` and ``e^{-i t}`` share a cosine).
    """
    u = np.asarray(u, dtype=complex)
    uh = np.conj(np.swapaxes(u, -1, -2))
    herm = 0.5 * (u + uh)
    anti = -0.5j * (u - uh)
    cw, v = jacobi_eigh_batch(herm)
    order = np.argsort(cw, axis=-1)
    cw = np.take_along_axis(cw, order, axis=-1)
    v = np.take_along_axis(v, order[:, None, :], axis=-1)
    same = np.abs(cw[:, :, None] - cw[:, None, :]) <= cluster_tol
    n = u.shape[-1]
    if np.any(same & ~np.eye(n, dtype=bool)):
        s = np.einsum("bji,bjk,bkl->bil", np.conj(v), anti, v)
        s = 0.5 * (s + np.conj(np.swapaxes(s, -1, -2)))
        _, w = jacobi_eigh_batch(s, allowed=same)
        v = v @ w
    rq = np.einsum("bji,bjk,bki->bi", np.conj(v), u, v)
    return np.angle(rq), v


def _check_branch(phases: np.ndarray) -> None:
    if np.any(np.abs(phases) > np.pi - BRANCH_TOL):
        worst = float(np.max(np.abs(phases)))
        raise BranchCutError(f"eigenphase {worst:.12f} is on the principal-log branch cut")


def logm_unitary(u: np.ndarray) -> np.ndarray:
    """Principal logarithm of a unitary; returns a skew-Hermitian matrix."""
    u = np.asarray(u, dtype=complex)
    if not is_unitary(u):
        raise ValueError("logm_unitary expects a unitary matrix")
    phases, v = unitary_eig_batch(u[None])
    _check_branch(phases)
    return (v[0] * (1j * phases[0])) @ np.conj(v[0].T)


def su_distances(u1: np.ndarray, u2: np.ndarray, strict: bool = True) -> np.ndarray:
    """``|| log(U1^H U2) ||_F`` for paired stacks of unitaries.

    With ``strict=False`` pairs on the branch cut come back as NaN instead of
    raising.
    """
    w = np.conj(np.swapaxes(u1, -1, -2)) @ u2
    phases, _ = unitary_eig_batch(w)
    bad = np.any(np.abs(phases) > np.pi - BRANCH_TOL, axis=-1)
    if strict and bad.any():
        _check_branch(phases)
    out = np.sqrt(np.sum(phases**2, axis=-1))
    out[bad] = np.nan
    return out


def dist_su(u1: np.ndarray, u2: np.ndarray) -> float:
    """Geodesic distance on SU(n) between two unitaries."""
    u1 = np.asarray(u1, dtype=complex)
    u2 = np.asarray(u2, dtype=complex)
    if u1.shape != u2.shape:
        raise ValueError(f"dimension mismatch {u1.shape} vs {u2.shape}")
    return float(su_distances(u1[None], u2[None])[0])
