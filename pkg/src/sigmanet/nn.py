"""SigMaNet: two complex spectral convolution layers, unwind, linear softmax head.

Gradients are hand-derived. For a real loss ``L`` and a complex array ``Z`` the
gradient is stored as ``dL/dRe(Z) + 1j * dL/dIm(Z)``; with that convention a
complex product ``S = A @ B`` back-propagates as ``dA = dS @ B^*`` and
``dB = A^* @ dS``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.sparse import csr_matrix

CHECKPOINT_VERSION = 1
PARAM_NAMES = ("theta1", "theta2", "head_W")


def complex_relu(Z: np.ndarray) -> np.ndarray:
    """Keep ``z`` when ``Re(z) >= 0``, else 0."""
    Z = np.asarray(Z, dtype=complex)
    return np.where(Z.real >= 0, Z, 0)


def unwind(Z: np.ndarray) -> np.ndarray:
    Z = np.asarray(Z, dtype=complex)
    return np.concatenate([Z.real, Z.imag], axis=-1)


def rewind(U: np.ndarray) -> np.ndarray:
    f = U.shape[-1] // 2
    return U[..., :f] + 1j * U[..., f:]


def softmax(logits: np.ndarray) -> np.ndarray:
    z = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def conv_forward(P: np.ndarray, X: np.ndarray, theta: np.ndarray) -> np.ndarray:
    P, X, theta = (np.asarray(a, dtype=complex) for a in (P, X, theta))
    if P.shape[1] != X.shape[0] or X.shape[1] != theta.shape[0]:
        raise ValueError(f"shape mismatch: P {P.shape}, X {X.shape}, theta {theta.shape}")
    return complex_relu(P @ X @ theta)


@dataclass
class SigMaNetModel:
    theta1: np.ndarray
    theta2: np.ndarray
    head_W: np.ndarray
    propagation: np.ndarray
    edge_task: bool = False
    dropout_p: float = 0.5
    seed: int = 0

    def __post_init__(self):
        c, f1 = self.theta1.shape
        f1b, f2 = self.theta2.shape
        width = 2 if self.edge_task else 1
        if f1 != f1b:
            raise ValueError("theta1 and theta2 do not chain")
        if self.head_W.shape[0] != 2 * f2 * width:
            raise ValueError(f"head_W needs {2 * f2 * width} rows, has {self.head_W.shape[0]}")
        n = self.propagation.shape[0]
        if self.propagation.shape != (n, n):
            raise ValueError("propagation must be square")

    @property
    def num_classes(self) -> int:
        return self.head_W.shape[1]

    def params(self) -> dict[str, np.ndarray]:
        return {k: getattr(self, k) for k in PARAM_NAMES}

    def with_params(self, params: dict[str, np.ndarray]) -> "SigMaNetModel":
        return SigMaNetModel(
            params["theta1"], params["theta2"], params["head_W"], self.propagation,
            self.edge_task, self.dropout_p, self.seed,
        )


def _glorot(rng, shape, complex_valued):
    limit = np.sqrt(6.0 / (shape[0] + shape[1]))
    re = rng.uniform(-limit, limit, size=shape)
    if not complex_valued:
        return re
    return re + 1j * rng.uniform(-limit, limit, size=shape)


def init_model(propagation, in_channels: int, num_classes: int, f1: int = 16, f2: int = 16,
               edge_task: bool = False, dropout_p: float = 0.5, seed: int = 0) -> SigMaNetModel:
    propagation = np.asarray(propagation, dtype=complex)
    if not np.allclose(propagation, propagation.conj().T, rtol=0, atol=1e-12):
        raise ValueError("propagation matrix must be Hermitian")
    rng = np.random.default_rng(seed)
    width = 2 if edge_task else 1
    return SigMaNetModel(
        theta1=_glorot(rng, (in_channels, f1), True),
        theta2=_glorot(rng, (f1, f2), True),
        head_W=_glorot(rng, (2 * f2 * width, num_classes), False),
        propagation=propagation,
        edge_task=edge_task,
        dropout_p=dropout_p,
        seed=seed,
    )


def _check_queries(m: SigMaNetModel, queries) -> np.ndarray:
    q = np.asarray(queries, dtype=np.int64)
    n = m.propagation.shape[0]
    if m.edge_task and (q.ndim != 2 or q.shape[1] != 2):
        raise ValueError("edge tasks take an (m, 2) array of node pairs")
    if not m.edge_task and q.ndim != 1:
        raise ValueError("node tasks take a vector of node ids")
    if q.size and (q.min() < 0 or q.max() >= n):
        raise ValueError("query references a node outside the graph")
    return q


def _forward(m: SigMaNetModel, X0, queries, train_mode, rng_seed):
    X0 = np.asarray(X0, dtype=np.float64)
    P = m.propagation
    if X0.shape != (P.shape[0], m.theta1.shape[0]):
        raise ValueError(f"features must be {P.shape[0]}x{m.theta1.shape[0]}, got {X0.shape}")
    q = _check_queries(m, queries)
    A1 = P @ X0.astype(complex)
    S1 = A1 @ m.theta1
    gate1 = S1.real >= 0
    Z1 = np.where(gate1, S1, 0)
    A2 = P @ Z1
    S2 = A2 @ m.theta2
    gate2 = S2.real >= 0
    Z2 = np.where(gate2, S2, 0)
    U = unwind(Z2)
    R = np.concatenate([U[q[:, 0]], U[q[:, 1]]], axis=1) if m.edge_task else U[q]
    if train_mode and m.dropout_p > 0:
        keep = np.random.default_rng(rng_seed).random(R.shape) >= m.dropout_p
        drop = keep / (1.0 - m.dropout_p)
    else:
        drop = None
    Rd = R * drop if drop is not None else R
    probs = softmax(Rd @ m.head_W)
    cache = dict(q=q, A1=A1, gate1=gate1, Z1=Z1, A2=A2, gate2=gate2, U=U, Rd=Rd, drop=drop)
    return probs, cache


def model_forward(m: SigMaNetModel, X0, queries, train_mode: bool = False, rng_seed=None) -> np.ndarray:
    """Class probabilities, one row per query node (or ordered node pair)."""
    return _forward(m, X0, queries, train_mode, rng_seed)[0]


def _scatter_rows(index: np.ndarray, values: np.ndarray, n: int) -> np.ndarray:
    """Sum ``values`` rows into an ``n``-row array at ``index`` (repeats accumulate)."""
    sel = csr_matrix((np.ones(len(index)), (index, np.arange(len(index)))), shape=(n, len(index)))
    return np.asarray(sel @ values)


def loss_and_gradients(m: SigMaNetModel, X0, queries, labels, train_mode: bool = False, rng_seed=None):
    """Mean cross-entropy over the queries and its gradient for every parameter."""
    labels = np.asarray(labels, dtype=np.int64)
    d = m.num_classes
    if labels.size and (labels.min() < 0 or labels.max() >= d):
        raise ValueError(f"labels must lie in [0, {d})")
    probs, c = _forward(m, X0, queries, train_mode, rng_seed)
    N = len(labels)
    if probs.shape[0] != N:
        raise ValueError("one label per query required")
    rows = np.arange(N)
    loss = float(-np.mean(np.log(np.maximum(probs[rows, labels], np.finfo(float).tiny))))

    dlogits = probs.copy()
    dlogits[rows, labels] -= 1.0
    dlogits /= N
    g_W = c["Rd"].T @ dlogits
    dR = dlogits @ m.head_W.T
    if c["drop"] is not None:
        dR = dR * c["drop"]

    q = c["q"]
    n = c["U"].shape[0]
    if m.edge_task:
        w = c["U"].shape[1]
        dU = _scatter_rows(q[:, 0], dR[:, :w], n) + _scatter_rows(q[:, 1], dR[:, w:], n)
    else:
        dU = _scatter_rows(q, dR, n)

    dS2 = np.where(c["gate2"], rewind(dU), 0)
    g_theta2 = c["A2"].conj().T @ dS2
    dA2 = dS2 @ m.theta2.conj().T
    dZ1 = m.propagation @ dA2  # propagation is Hermitian
    dS1 = np.where(c["gate1"], dZ1, 0)
    g_theta1 = c["A1"].conj().T @ dS1
    return loss, {"theta1": g_theta1, "theta2": g_theta2, "head_W": g_W}


@dataclass
class TrainState:
    lr: float = 1e-3
    weight_decay: float = 5e-4
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    step: int = 0
    m: dict = field(default_factory=dict)
    v: dict = field(default_factory=dict)


def _as_real(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a)
    return a.view(np.float64) if np.iscomplexobj(a) else a


def adam_step(state: TrainState, params: dict, grads: dict) -> tuple[dict, TrainState]:
    """One Adam update with decoupled weight decay. Real and imaginary parts of
    complex parameters are treated as independent real coordinates."""
    state.step += 1
    t = state.step
    bc1 = 1.0 - state.beta1 ** t
    bc2 = 1.0 - state.beta2 ** t
    out = {}
    for k, p in params.items():
        p_r = _as_real(p)
        g_r = _as_real(np.asarray(grads[k], dtype=p.dtype))
        if g_r.shape != p_r.shape:
            raise ValueError(f"gradient shape mismatch for {k}")
        m = state.m.get(k, np.zeros_like(p_r))
        v = state.v.get(k, np.zeros_like(p_r))
        m = state.beta1 * m + (1.0 - state.beta1) * g_r
        v = state.beta2 * v + (1.0 - state.beta2) * g_r * g_r
        state.m[k], state.v[k] = m, v
        update = (m / bc1) / (np.sqrt(v / bc2) + state.eps)
        new = p_r - state.lr * update - state.lr * state.weight_decay * p_r
        out[k] = new.view(complex) if np.iscomplexobj(p) else new
    return out, state


def save_checkpoint(m: SigMaNetModel, path, extra: dict | None = None) -> None:
    """Binary ``.npz`` dump of every parameter plus dims and seed. The
    propagation matrix is not stored; it is rebuilt from the graph."""
    meta = dict(extra or {})
    np.savez(
        Path(path),
        version=np.int64(CHECKPOINT_VERSION),
        theta1=m.theta1,
        theta2=m.theta2,
        head_W=m.head_W,
        edge_task=np.bool_(m.edge_task),
        dropout_p=np.float64(m.dropout_p),
        seed=np.int64(m.seed),
        n=np.int64(m.propagation.shape[0]),
        meta=np.array(repr(sorted(meta.items()))),
    )


def load_checkpoint(path, propagation) -> SigMaNetModel:
    with np.load(Path(path)) as z:
        if int(z["version"]) != CHECKPOINT_VERSION:
            raise ValueError(f"unsupported checkpoint version {int(z['version'])}")
        if int(z["n"]) != np.asarray(propagation).shape[0]:
            raise ValueError("checkpoint was trained on a graph of a different size")
        return SigMaNetModel(
            z["theta1"], z["theta2"], z["head_W"], np.asarray(propagation, dtype=complex),
            bool(z["edge_task"]), float(z["dropout_p"]), int(z["seed"]),
        )
