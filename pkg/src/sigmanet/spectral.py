"""Hermitian eigendecomposition and Chebyshev spectral filters."""
from __future__ import annotations

from typing import NamedTuple

import numpy as np

from .graph import _require_square

HERMITIAN_TOL = 1e-10


class EigenDecomposition(NamedTuple):
    eigenvalues: np.ndarray  # ascending, real
    eigenvectors: np.ndarray  # columns


def hermitian_eig(M: np.ndarray, tol: float = HERMITIAN_TOL) -> EigenDecomposition:
    M = _require_square(np.asarray(M, dtype=complex))
    asym = np.max(np.abs(M - M.conj().T)) if M.size else 0.0
    if asym > tol:
        raise ValueError(f"matrix is not Hermitian (max |M - M*| = {asym:.3g})")
    w, U = np.linalg.eigh(M)
    return EigenDecomposition(w, U)


def chebyshev_T(k: int, x: float) -> float:
    """Degree-``k`` Chebyshev polynomial of the first kind on ``[-1, 1]``."""
    if k < 0:
        raise ValueError("degree must be nonnegative")
    x = np.asarray(x, dtype=np.float64)
    if np.any(np.abs(x) > 1):
        raise ValueError("Chebyshev argument outside [-1, 1]")
    prev, cur = np.ones_like(x), x
    if k == 0:
        return prev if prev.ndim else float(prev)
    for _ in range(k - 1):
        prev, cur = cur, 2 * x * cur - prev
    return cur if cur.ndim else float(cur)


def _check_dims(M: np.ndarray, x: np.ndarray) -> None:
    if M.shape[0] != x.shape[0]:
        raise ValueError(f"signal has {x.shape[0]} rows, operator is {M.shape[0]}x{M.shape[1]}")


def convolution_apply(M_norm: np.ndarray, x: np.ndarray, theta0: float) -> np.ndarray:
    """First-order filter ``theta0 * (2I - M) x`` (K = 1, theta_1 = -theta_0, lambda_max = 2)."""
    M_norm = _require_square(np.asarray(M_norm, dtype=complex))
    x = np.asarray(x, dtype=complex)
    _check_dims(M_norm, x)
    return theta0 * (2 * x - M_norm @ x)


def convolution_apply_full(M_norm: np.ndarray, x: np.ndarray, theta, lambda_max: float | None = 2.0) -> np.ndarray:
    """``sum_k theta_k T_k(M~) x`` with ``M~ = (2/lambda_max) M - I``, evaluated by
    the three-term recursion on vectors. ``lambda_max=None`` takes the exact
    largest eigenvalue."""
    M_norm = _require_square(np.asarray(M_norm, dtype=complex))
    x = np.asarray(x, dtype=complex)
    _check_dims(M_norm, x)
    theta = np.asarray(theta, dtype=np.float64).reshape(-1)
    if len(theta) < 1:
        raise ValueError("need at least one Chebyshev coefficient")
    if lambda_max is None:
        lambda_max = float(hermitian_eig(M_norm).eigenvalues[-1])
    M_tilde = (2.0 / lambda_max) * M_norm - np.eye(len(M_norm))
    t_prev = x
    out = theta[0] * t_prev
    if len(theta) == 1:
        return out
    t_cur = M_tilde @ x
    out = out + theta[1] * t_cur
    for th in theta[2:]:
        t_prev, t_cur = t_cur, 2 * (M_tilde @ t_cur) - t_prev
        out = out + th * t_cur
    return out


def spectral_filter(M_norm: np.ndarray, x: np.ndarray, theta, lambda_max: float | None = 2.0) -> np.ndarray:
    """Same filter evaluated in the eigenbasis: ``U diag(sum_k theta_k T_k(lambda~)) U^* x``."""
    eig = hermitian_eig(M_norm)
    lam_max = eig.eigenvalues[-1] if lambda_max is None else lambda_max
    lam = np.clip(2.0 * eig.eigenvalues / lam_max - 1.0, -1.0, 1.0)
    response = sum(th * chebyshev_T(k, lam) for k, th in enumerate(np.atleast_1d(theta)))
    U = eig.eigenvectors
    x = np.asarray(x, dtype=complex)
    coeffs = U.conj().T @ x
    scaled = response[:, None] * coeffs if coeffs.ndim == 2 else response * coeffs
    return U @ scaled
