"""Hermitian graph operators for directed, signed, weighted graphs.

Two constructions live here: the Sign-Magnetic Laplacian, whose Hermitian
adjacency encodes a lone edge ``(i, j)`` as ``+i/2 * A_ij`` at ``(i, j)`` and
its conjugate at ``(j, i)``, and the Magnetic Laplacian with charge ``q``,
kept as a comparator.
"""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .graph import _require_square, symmetrize


def sign_magnetic_H(A: np.ndarray) -> np.ndarray:
    A = _require_square(np.asarray(A, dtype=np.float64))
    A_s = symmetrize(A)
    real_gate = 1.0 - np.sign(np.abs(A - A.T))
    imag_gate = np.sign(np.abs(A) - np.abs(A.T))
    return A_s * real_gate + 1j * (A_s * imag_gate)


def _rsqrt(deg: np.ndarray) -> np.ndarray:
    out = np.zeros_like(deg)
    pos = deg > 0
    out[pos] = 1.0 / np.sqrt(deg[pos])
    return out


def _normalize(H: np.ndarray, deg: np.ndarray) -> np.ndarray:
    r = _rsqrt(deg)
    # The outer product is exactly symmetric, so Hermitian input stays Hermitian bit for bit.
    return H * np.outer(r, r)


def sign_magnetic_laplacian(A: np.ndarray, normalized: bool = False) -> np.ndarray:
    """``D - H`` with ``D`` the absolute degrees of the symmetrized graph, or
    ``I - D^-1/2 H D^-1/2`` when ``normalized`` (isolated nodes use rsqrt(0) = 0)."""
    A = _require_square(np.asarray(A, dtype=np.float64))
    H = sign_magnetic_H(A)
    deg = np.abs(symmetrize(A)).sum(axis=1)
    if normalized:
        return np.eye(len(A)) - _normalize(H, deg)
    return np.diag(deg).astype(complex) - H


def magnetic_H(A: np.ndarray, q: float) -> np.ndarray:
    A = _require_square(np.asarray(A, dtype=np.float64))
    if q < 0:
        raise ValueError("charge q must be nonnegative")
    phase = 2.0 * np.pi * q * (A - A.T)
    A_s = symmetrize(A)
    return A_s * np.cos(phase) + 1j * (A_s * np.sin(phase))


def magnetic_laplacian(A: np.ndarray, q: float, normalized: bool = False) -> np.ndarray:
    A = _require_square(np.asarray(A, dtype=np.float64))
    H = magnetic_H(A, q)
    deg = symmetrize(A).sum(axis=1)
    if normalized:
        if np.any(deg < 0):
            raise ValueError("normalized magnetic Laplacian needs nonnegative degrees")
        return np.eye(len(A)) - _normalize(H, deg)
    return np.diag(deg).astype(complex) - H


def renormalized_propagation(A: np.ndarray, use_sign_magnetic: bool = True, q: float = 0.25) -> np.ndarray:
    """Propagation matrix ``D~^-1/2 H~ D~^-1/2`` built on ``A + I``."""
    A = _require_square(np.asarray(A, dtype=np.float64))
    A_tilde = A + np.eye(len(A))
    if use_sign_magnetic:
        H = sign_magnetic_H(A_tilde)
        deg = np.abs(symmetrize(A_tilde)).sum(axis=1)
    else:
        H = magnetic_H(A_tilde, q)
        deg = symmetrize(A_tilde).sum(axis=1)
        if np.any(deg <= 0):
            raise ValueError("magnetic propagation needs positive degrees after adding self-loops")
    return _normalize(H, deg)


@dataclass(frozen=True)
class HermitianCheckReport:
    is_hermitian: bool
    max_asymmetry: float
    min_eigenvalue: float
    max_eigenvalue: float


def verify_hermitian_psd(M: np.ndarray, tol: float = 1e-10) -> HermitianCheckReport:
    """Hermiticity residual plus the extreme eigenvalues.

    Eigenvalues come from the Hermitian part ``(M + M^*)/2``, which is ``M``
    itself whenever the check passes.
    """
    M = _require_square(np.asarray(M, dtype=complex))
    asym = float(np.max(np.abs(M - M.conj().T))) if M.size else 0.0
    ev = np.linalg.eigvalsh(0.5 * (M + M.conj().T)) if M.size else np.zeros(1)
    return HermitianCheckReport(asym <= tol, asym, float(ev[0]), float(ev[-1]))


def write_dump(M: np.ndarray, path) -> None:
    """Text dump: a ``# shape rows cols`` header, then ``row col re im`` per nonzero entry."""
    M = np.asarray(M, dtype=complex)
    rows, cols = np.nonzero(M)
    with Path(path).open("w") as fh:
        fh.write(f"# shape {M.shape[0]} {M.shape[1]}\n")
        for i, j in zip(rows.tolist(), cols.tolist()):
            z = M[i, j]
            fh.write(f"{i} {j} {float(z.real)!r} {float(z.imag)!r}\n")


def read_dump(path) -> np.ndarray:
    path = Path(path)
    M = None
    with path.open() as fh:
        for lineno, line in enumerate(fh, start=1):
            parts = line.split()
            if not parts:
                continue
            if parts[0] == "#":
                if len(parts) == 4 and parts[1] == "shape":
                    M = np.zeros((int(parts[2]), int(parts[3])), dtype=complex)
                continue
            if M is None:
                raise ValueError(f"{path}: missing '# shape' header")
            if len(parts) != 4:
                raise ValueError(f"{path}:{lineno}: expected 'row col re im'")
            M[int(parts[0]), int(parts[1])] = complex(float(parts[2]), float(parts[3]))
    if M is None:
        raise ValueError(f"{path}: empty dump")
    return M
