"""Numerical checks of the structural properties of the Sign-Magnetic Laplacian."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .laplacian import magnetic_H, magnetic_laplacian, sign_magnetic_H, sign_magnetic_laplacian

SIGNFLIP_SCALES = (0.8, 2.0, 5.0, 36.0)


def random_adjacency(rng: np.random.Generator, n: int, edge_prob: float = 0.3, max_weight: float = 10.0,
                     binary: bool = False, digon_free: bool = False) -> np.ndarray:
    """Dense random digraph with zero diagonal. Weights are uniform on
    ``[-max_weight, max_weight]`` minus zero, or 1 when ``binary``."""
    mask = rng.random((n, n)) < edge_prob
    np.fill_diagonal(mask, False)
    if digon_free:
        both = mask & mask.T
        upper = np.triu(both)
        mask &= ~upper  # drop the (i, j) arc of every digon with i < j
    if binary:
        return mask.astype(float)
    w = rng.uniform(-max_weight, max_weight, size=(n, n))
    while np.any(w[mask] == 0):
        w[w == 0] = rng.uniform(-max_weight, max_weight, size=int(np.sum(w == 0)))
    return np.where(mask, w, 0.0)


@dataclass
class CheckResult:
    name: str
    tolerance: float
    worst: float
    passed: bool

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"[{status}] {self.name}: worst residual {self.worst:.3e} (tolerance {self.tolerance:.0e})"


def _graphs(n_graphs: int, seed: int, n_range=(2, 30), **kw):
    rng = np.random.default_rng(seed)
    for _ in range(n_graphs):
        yield random_adjacency(rng, int(rng.integers(n_range[0], n_range[1] + 1)), **kw), rng


def check_psd_and_bound(n_graphs: int = 200, seed: int = 0, tol: float = 1e-8) -> list[CheckResult]:
    hermitian_worst = 0.0
    min_eig, min_eig_norm, max_eig_norm = np.inf, np.inf, -np.inf
    for A, _ in _graphs(n_graphs, seed):
        L = sign_magnetic_laplacian(A)
        hermitian_worst = max(hermitian_worst, float(np.max(np.abs(L - L.conj().T))))
        Ln = sign_magnetic_laplacian(A, normalized=True)
        ev = np.linalg.eigvalsh(L)
        evn = np.linalg.eigvalsh(Ln)
        min_eig = min(min_eig, ev[0])
        min_eig_norm = min(min_eig_norm, evn[0])
        max_eig_norm = max(max_eig_norm, evn[-1])
    return [
        CheckResult("hermitian (bit-exact)", 0.0, hermitian_worst, hermitian_worst == 0.0),
        CheckResult("PSD: min eig of L", tol, max(0.0, -min_eig), min_eig >= -tol),
        CheckResult("PSD: min eig of normalized L", tol, max(0.0, -min_eig_norm), min_eig_norm >= -tol),
        CheckResult("spectrum bound: max eig of normalized L - 2", tol, max(0.0, max_eig_norm - 2), max_eig_norm <= 2 + tol),
    ]


def check_unweighted_equivalence(n_graphs: int = 50, seed: int = 1, tol: float = 1e-12) -> CheckResult:
    worst = 0.0
    for A, _ in _graphs(n_graphs, seed, binary=True):
        diff = sign_magnetic_laplacian(A) - magnetic_laplacian(A, 0.25)
        worst = max(worst, float(np.max(np.abs(diff))))
    return CheckResult("unweighted: L_sigma == L_(q=0.25)", tol, worst, worst <= tol)


def check_homogeneity(n_graphs: int = 200, seed: int = 0, alphas=(0.5, 3.0, 10.0), tol: float = 1e-10) -> CheckResult:
    worst = 0.0
    for A, _ in _graphs(n_graphs, seed):
        L = sign_magnetic_laplacian(A)
        for a in alphas:
            worst = max(worst, float(np.max(np.abs(sign_magnetic_laplacian(a * A) - a * L))))
    return CheckResult("positive homogeneity L(aA) == a L(A)", tol, worst, worst <= tol)


def reverse_and_negate(A: np.ndarray, i: int, j: int) -> np.ndarray:
    B = A.copy()
    B[j, i] = -A[i, j]
    B[i, j] = 0.0
    return B


def check_reversal_invariance(n_graphs: int = 50, seed: int = 2) -> CheckResult:
    worst = 0.0
    for A, rng in _graphs(n_graphs, seed, digon_free=True):
        rows, cols = np.nonzero(A)
        if len(rows) == 0:
            continue
        k = int(rng.integers(len(rows)))
        B = reverse_and_negate(A, rows[k], cols[k])
        worst = max(worst, float(np.max(np.abs(sign_magnetic_laplacian(A) - sign_magnetic_laplacian(B)))))
    return CheckResult("reverse edge + negate weight leaves L unchanged", 0.0, worst, worst == 0.0)


def signflip_table(scales=SIGNFLIP_SCALES, q: float = 0.25) -> list[tuple[float, complex, complex]]:
    """``(scale, H^(q)_01, H^sigma_01)`` for the two-node graph with one edge 0 -> 1."""
    rows = []
    for s in scales:
        A = np.array([[0.0, s], [0.0, 0.0]])
        rows.append((s, complex(magnetic_H(A, q)[0, 1]), complex(sign_magnetic_H(A)[0, 1])))
    return rows


def check_sign_pattern(tol: float = 1e-2) -> CheckResult:
    expected = [0.4 * 0.31 + 0.4 * 0.95j, -1 + 0j, 2.5j, 18 + 0j]
    worst = 0.0
    consistent = True
    for (s, hq, hs), want in zip(signflip_table(), expected):
        worst = max(worst, abs(hq.real - want.real), abs(hq.imag - want.imag))
        consistent &= hs.imag > 0 and hs.real == 0
    return CheckResult("sign-pattern table (q=0.25) and constant sign of Im H_sigma", tol, worst,
                       worst <= tol and consistent)


def theorem_suite(n_graphs: int = 200, seed: int = 0) -> list[CheckResult]:
    return [
        *check_psd_and_bound(n_graphs, seed),
        check_unweighted_equivalence(max(1, n_graphs // 4), seed + 1),
        check_homogeneity(n_graphs, seed),
        check_reversal_invariance(max(1, n_graphs // 4), seed + 2),
        check_sign_pattern(),
    ]
