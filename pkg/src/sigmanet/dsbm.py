"""Directed stochastic block model with integer edge weights."""
from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .graph import DirectedGraph, NodeLabels, make_labels


@dataclass(frozen=True)
class DsbmConfig:
    """``alpha[i][j]``: probability of an undirected edge between clusters i and j.
    ``beta[i][j]``: probability that an edge between a node of cluster i and a
    node of cluster j points from the cluster-i node, for i < j (within a
    cluster, from the lower node id)."""

    n: int
    C: int
    alpha: tuple[tuple[float, ...], ...]
    beta: tuple[tuple[float, ...], ...]
    weight_lo: int = 2
    weight_hi: int = 1000
    seed: int = 0

    def __post_init__(self):
        alpha = np.asarray(self.alpha, dtype=float)
        beta = np.asarray(self.beta, dtype=float)
        if self.C < 1 or self.n < self.C or self.n % self.C:
            raise ValueError(f"n={self.n} must be a positive multiple of C={self.C}")
        if alpha.shape != (self.C, self.C) or beta.shape != (self.C, self.C):
            raise ValueError("alpha and beta must be C x C")
        if np.any(alpha < 0) or np.any(alpha > 1) or not np.array_equal(alpha, alpha.T):
            raise ValueError("alpha must be symmetric with entries in [0, 1]")
        if np.any(beta < 0) or np.any(beta > 1) or not np.all(beta + beta.T == 1):
            raise ValueError("beta must satisfy beta_ij + beta_ji = 1")
        if not (2 <= self.weight_lo <= self.weight_hi):
            raise ValueError("need 2 <= weight_lo <= weight_hi")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["alpha"] = [list(r) for r in self.alpha]
        d["beta"] = [list(r) for r in self.beta]
        return d


def dsbm_config(n: int, C: int, alpha_intra: float, alpha_inter: float, beta: float,
                weight_lo: int = 2, weight_hi: int = 1000, seed: int = 0) -> DsbmConfig:
    """Uniform DSBM: an edge between clusters i < j points toward the
    lower-index cluster with probability ``beta``."""
    alpha = np.full((C, C), alpha_inter)
    np.fill_diagonal(alpha, alpha_intra)
    b = np.full((C, C), 0.5)
    iu = np.triu_indices(C, 1)
    b[iu] = 1.0 - beta
    b[iu[::-1]] = beta
    return DsbmConfig(n, C, tuple(map(tuple, alpha.tolist())), tuple(map(tuple, b.tolist())),
                      weight_lo, weight_hi, seed)


def generate_dsbm(cfg: DsbmConfig) -> tuple[DirectedGraph, NodeLabels]:
    rng = np.random.default_rng(cfg.seed)
    alpha = np.asarray(cfg.alpha)
    beta = np.asarray(cfg.beta)
    labels = np.repeat(np.arange(cfg.C), cfg.n // cfg.C)
    u, v = np.triu_indices(cfg.n, 1)
    cu, cv = labels[u], labels[v]
    keep = rng.random(len(u)) < alpha[cu, cv]
    u, v, cu, cv = u[keep], v[keep], cu[keep], cv[keep]
    # u < v and clusters are contiguous, so cu <= cv: beta[cu, cv] is the forward probability.
    forward = rng.random(len(u)) < beta[cu, cv]
    src = np.where(forward, u, v)
    dst = np.where(forward, v, u)
    weight = rng.integers(cfg.weight_lo, cfg.weight_hi + 1, size=len(u)).astype(float)
    return DirectedGraph(cfg.n, src, dst, weight), make_labels(labels)


def flip_signs(g: DirectedGraph, frac: float, seed: int, mode: str = "uniform") -> DirectedGraph:
    """Negate ``round(frac * |E|)`` edge weights.

    ``uniform`` picks the edges uniformly at random. ``target`` picks random
    nodes and negates every edge pointing into them until the quota is met
    (the last node only partially), which ties edge sign to the receiving node.
    """
    rng = np.random.default_rng(seed)
    quota = int(round(frac * g.num_edges))
    if mode == "uniform":
        chosen = rng.choice(g.num_edges, size=quota, replace=False)
    elif mode == "target":
        chosen = []
        for node in rng.permutation(g.n):
            if len(chosen) >= quota:
                break
            incoming = np.flatnonzero(g.dst == node)
            take = min(len(incoming), quota - len(chosen))
            chosen.extend(rng.permutation(incoming)[:take].tolist())
        chosen = np.array(chosen, dtype=np.int64)
    else:
        raise ValueError(f"unknown flip mode {mode!r}")
    w = g.weight.copy()
    w[chosen] *= -1
    return g.with_weights(w)
