"""Independent oracles shared by the unit and acceptance suites."""
import math

import numpy as np

from sigmanet.nn import PARAM_NAMES, init_model, loss_and_gradients


def loop_sign_magnetic_entry(a_ij: float, a_ji: float) -> complex:
    """Entry (i, j) of the Hermitian adjacency by case analysis on the edge pair."""
    if a_ij == 0 and a_ji == 0:
        return 0j
    if a_ij == a_ji:
        return complex(a_ij, 0)
    half = 0.5 * (a_ij + a_ji)
    if abs(a_ij) > abs(a_ji):
        return complex(0, half)
    if abs(a_ij) < abs(a_ji):
        return complex(0, -half)
    return 0j


def loop_propagation(A) -> list[list[complex]]:
    n = len(A)
    At = [[A[i][j] + (1.0 if i == j else 0.0) for j in range(n)] for i in range(n)]
    deg = [sum(abs(0.5 * (At[i][j] + At[j][i])) for j in range(n)) for i in range(n)]
    return [
        [loop_sign_magnetic_entry(At[i][j], At[j][i]) / math.sqrt(deg[i] * deg[j]) for j in range(n)]
        for i in range(n)
    ]


def loop_forward(A, X0, theta1, theta2, W, queries, edge_task=False):
    """Straight-line forward pass with explicit loops (no dropout)."""
    P = loop_propagation(A)
    n = len(A)

    def matmul(X, Y):
        return [[sum(X[i][k] * Y[k][j] for k in range(len(Y))) for j in range(len(Y[0]))] for i in range(len(X))]

    def relu(Z):
        return [[z if z.real >= 0 else 0j for z in row] for row in Z]

    X = [[complex(v) for v in row] for row in X0]
    Z1 = relu(matmul(matmul(P, X), theta1.tolist()))
    Z2 = relu(matmul(matmul(P, Z1), theta2.tolist()))
    U = [[z.real for z in row] + [z.imag for z in row] for row in Z2]
    out = []
    for q in queries:
        r = U[q[0]] + U[q[1]] if edge_task else U[q]
        logits = [sum(r[k] * W[k][c] for k in range(len(r))) for c in range(W.shape[1])]
        mx = max(logits)
        e = [math.exp(v - mx) for v in logits]
        out.append([v / sum(e) for v in e])
    assert n == len(P)
    return np.array(out)


def tiny_problem(seed, n=None, c=None, f1=None, f2=None, d=None, edge_task=None):
    from sigmanet.laplacian import renormalized_propagation
    from sigmanet.verify import random_adjacency

    rng = np.random.default_rng(seed)
    n = n or int(rng.integers(2, 7))
    c = c or int(rng.integers(1, 4))
    f1 = f1 or int(rng.integers(1, 4))
    f2 = f2 or int(rng.integers(1, 4))
    d = d or int(rng.integers(2, 4))
    edge_task = bool(rng.integers(2)) if edge_task is None else edge_task
    A = random_adjacency(rng, n, edge_prob=0.5, max_weight=3.0)
    model = init_model(renormalized_propagation(A), c, d, f1, f2, edge_task=edge_task, seed=seed)
    X = rng.normal(size=(n, c)) + 1.0
    m = 2 * n
    if edge_task:
        queries = rng.integers(n, size=(m, 2))
    else:
        queries = rng.integers(n, size=m)
    labels = rng.integers(d, size=m)
    return A, model, X, queries, labels


def finite_difference_errors(model, X, queries, labels, h=1e-6, train_mode=False, rng_seed=None,
                             floor=1e-5):
    """Relative error of every analytic gradient coordinate against central
    differences; real and imaginary parts perturbed separately."""
    _, grads = loss_and_gradients(model, X, queries, labels, train_mode, rng_seed)
    params = model.params()
    worst = 0.0
    for name in PARAM_NAMES:
        p = params[name]
        parts = [1.0, 1j] if np.iscomplexobj(p) else [1.0]
        for idx in np.ndindex(p.shape):
            for unit in parts:
                def loss_at(delta):
                    q = {k: v.copy() for k, v in params.items()}
                    q[name][idx] += delta * unit
                    return loss_and_gradients(model.with_params(q), X, queries, labels, train_mode, rng_seed)[0]

                fd = (loss_at(h) - loss_at(-h)) / (2 * h)
                g = grads[name][idx]
                analytic = g.real if unit == 1.0 else g.imag
                err = abs(analytic - fd) / max(abs(analytic), abs(fd), floor)
                worst = max(worst, err)
    return worst


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: multi-minute desk-scale training runs")


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for line in mod.RESULTS:
        terminalreporter.write_line(line)
