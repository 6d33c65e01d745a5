"""Task construction, training with early stopping, and evaluation for node
classification, link existence, link direction and link sign prediction."""
from __future__ import annotations

import csv
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
from sklearn.metrics import f1_score

from .dsbm import dsbm_config, flip_signs, generate_dsbm
from .graph import (
    DirectedGraph,
    InfeasibleSplitError,
    NodeLabels,
    adjacency,
    flow_preprocess,
    from_edge_list,
    random_spanning_tree,
    read_labels,
    spanning_tree_split,
)
from .laplacian import renormalized_propagation
from .nn import TrainState, adam_step, init_model, loss_and_gradients, model_forward

log = logging.getLogger(__name__)

TASK_KINDS = ("node", "link-exist", "link-direction", "link-sign")
METRICS = ("accuracy", "micro_f1", "binary_f1", "macro_f1", "auc")


def build_degree_features(g: DirectedGraph, use_abs: bool = False) -> np.ndarray:
    """Column 0: weighted in-degree, column 1: weighted out-degree."""
    w = np.abs(g.weight) if use_abs else g.weight
    X = np.zeros((g.n, 2))
    np.add.at(X[:, 0], g.dst, w)
    np.add.at(X[:, 1], g.src, w)
    return X


@dataclass
class TaskSplit:
    kind: str
    graph: DirectedGraph
    train_queries: np.ndarray
    train_labels: np.ndarray
    val_queries: np.ndarray
    val_labels: np.ndarray
    test_queries: np.ndarray
    test_labels: np.ndarray
    num_classes: int = 2


def _pairs(g: DirectedGraph, idx) -> np.ndarray:
    idx = np.asarray(idx, dtype=np.int64)
    return np.stack([g.src[idx], g.dst[idx]], axis=1).reshape(-1, 2)


def _sign_labels(g: DirectedGraph, idx) -> np.ndarray:
    return (g.weight[np.asarray(idx, dtype=np.int64)] > 0).astype(np.int64)


def make_sign_task(g: DirectedGraph, k: int = 5, seed: int = 0, val_frac: float = 0.05) -> list[TaskSplit]:
    """k folds whose test sets partition the edges off a fixed random spanning
    tree; tree edges always stay in training. A ``val_frac`` share of all edges
    is carved from each fold's remaining off-tree edges for early stopping."""
    pos = g.weight > 0
    if pos.all() or not pos.any():
        raise ValueError("sign prediction needs both positive and negative edges")
    rng = np.random.default_rng(seed)
    tree = random_spanning_tree(g, rng)
    free = rng.permutation(np.setdiff1d(np.arange(g.num_edges), tree))
    if len(free) < k:
        raise InfeasibleSplitError(f"only {len(free)} edges lie off the spanning tree, need at least {k}")
    n_val = int(round(val_frac * g.num_edges))
    folds = []
    for test in np.array_split(free, k):
        rest = rng.permutation(np.setdiff1d(free, test))
        if n_val > len(rest):
            raise InfeasibleSplitError("not enough off-tree edges for a validation slice")
        val = np.sort(rest[:n_val])
        train = np.sort(np.concatenate([tree, rest[n_val:]]))
        test = np.sort(test)
        folds.append(TaskSplit(
            "link-sign", g.subgraph(train),
            _pairs(g, train), _sign_labels(g, train),
            _pairs(g, val), _sign_labels(g, val),
            _pairs(g, test), _sign_labels(g, test),
        ))
    return folds


def _sample_non_edges(g: DirectedGraph, count: int, rng: np.random.Generator) -> np.ndarray:
    """Distinct ordered pairs ``(u, v)``, ``u != v``, with neither orientation in ``g``."""
    adjacent = set(zip(g.src.tolist(), g.dst.tolist()))
    adjacent |= {(d, s) for s, d in adjacent}
    available = g.n * (g.n - 1) - len(adjacent)
    if count > available:
        raise ValueError(f"need {count} non-adjacent pairs, graph only has {available}")
    chosen: dict[tuple[int, int], None] = {}
    if count > available // 2:
        allpairs = [(u, v) for u in range(g.n) for v in range(g.n) if u != v and (u, v) not in adjacent]
        picks = rng.choice(len(allpairs), size=count, replace=False)
        return np.array([allpairs[i] for i in picks], dtype=np.int64).reshape(-1, 2)
    while len(chosen) < count:
        batch = rng.integers(g.n, size=(2 * (count - len(chosen)) + 8, 2))
        for u, v in batch.tolist():
            if u != v and (u, v) not in adjacent and (u, v) not in chosen:
                chosen[(u, v)] = None
                if len(chosen) == count:
                    break
    return np.array(list(chosen), dtype=np.int64).reshape(-1, 2)


def _fold_seed(seed: int, fold: int) -> int:
    return int(np.random.SeedSequence([seed, fold]).generate_state(1)[0])


def make_link_task(g: DirectedGraph, kind: str, k: int = 10, seed: int = 0,
                   test_frac: float = 0.15, val_frac: float = 0.05) -> list[TaskSplit]:
    if kind not in ("exist", "direction"):
        raise ValueError(f"unknown link task {kind!r}")
    folds = []
    for f in range(k):
        fs = _fold_seed(seed, f)
        split = spanning_tree_split(g, test_frac, val_frac, fs)
        parts = [_pairs(g, idx) for idx in split]
        if kind == "direction":
            queries, labels = [], []
            for p in parts:
                queries.append(np.concatenate([p, p[:, ::-1]]))
                labels.append(np.concatenate([np.ones(len(p), np.int64), np.zeros(len(p), np.int64)]))
        else:
            rng = np.random.default_rng(fs)
            negs = _sample_non_edges(g, sum(len(p) for p in parts), rng)
            queries, labels, start = [], [], 0
            for p in parts:
                neg = negs[start:start + len(p)]
                start += len(p)
                queries.append(np.concatenate([p, neg]))
                labels.append(np.concatenate([np.ones(len(p), np.int64), np.zeros(len(neg), np.int64)]))
        folds.append(TaskSplit(
            f"link-{kind}", g.subgraph(split.train),
            queries[0], labels[0], queries[1], labels[1], queries[2], labels[2],
        ))
    return folds


def make_node_task(labels: NodeLabels, seed: int = 0, graph: DirectedGraph | None = None,
                   fractions=(0.6, 0.2, 0.2)) -> TaskSplit:
    """Stratified node split; the whole graph stays visible to the propagation."""
    y = np.asarray(labels.labels)
    rng = np.random.default_rng(seed)
    parts = ([], [], [])
    for c in range(labels.num_classes):
        members = np.flatnonzero(y == c)
        if len(members) < 5:
            raise ValueError(f"class {c} has {len(members)} nodes; need at least 5 to stratify")
        members = rng.permutation(members)
        n_train = int(round(fractions[0] * len(members)))
        n_val = int(round(fractions[1] * len(members)))
        parts[0].append(members[:n_train])
        parts[1].append(members[n_train:n_train + n_val])
        parts[2].append(members[n_train + n_val:])
    tr, va, te = (np.sort(np.concatenate(p)) for p in parts)
    return TaskSplit("node", graph, tr, y[tr], va, y[va], te, y[te], labels.num_classes)


def auc_score(scores: np.ndarray, labels: np.ndarray) -> float:
    """Mann-Whitney U statistic normalised to [0, 1]; ties count one half."""
    from scipy.stats import rankdata

    labels = np.asarray(labels)
    n_pos = int(np.sum(labels == 1))
    n_neg = len(labels) - n_pos
    if n_pos == 0 or n_neg == 0:
        raise ValueError("AUC needs both classes present")
    ranks = rankdata(scores)
    return float((ranks[labels == 1].sum() - n_pos * (n_pos + 1) / 2) / (n_pos * n_neg))


def evaluate(probs: np.ndarray, labels) -> dict[str, float]:
    """Accuracy and F1 scores; binary-F1 and AUC only when there are two classes."""
    probs = np.asarray(probs)
    labels = np.asarray(labels, dtype=np.int64)
    pred = probs.argmax(axis=1)
    classes = np.arange(probs.shape[1])
    out = {
        "accuracy": float(np.mean(pred == labels)),
        "micro_f1": float(f1_score(labels, pred, labels=classes, average="micro", zero_division=0)),
        "macro_f1": float(f1_score(labels, pred, labels=classes, average="macro", zero_division=0)),
    }
    if probs.shape[1] == 2:
        out["binary_f1"] = float(f1_score(labels, pred, pos_label=1, average="binary", zero_division=0))
        out["auc"] = auc_score(probs[:, 1], labels)
    return out


@dataclass
class MetricsReport:
    per_fold: list[dict[str, float]]
    mean: dict[str, float]
    std: dict[str, float]

    @classmethod
    def from_folds(cls, folds: list[dict[str, float]]) -> "MetricsReport":
        keys = [k for k in METRICS if all(k in f for f in folds)]
        mean = {k: float(np.mean([f[k] for f in folds])) for k in keys}
        std = {k: float(np.std([f[k] for f in folds])) for k in keys}
        return cls(folds, mean, std)

    def summary(self) -> str:
        lines = [f"{'metric':<10} {'mean (%)':>9} {'std':>7}"]
        for k in self.mean:
            lines.append(f"{k:<10} {100 * self.mean[k]:>9.2f} {100 * self.std[k]:>7.2f}")
        return "\n".join(lines)


@dataclass
class ExperimentConfig:
    task: str = "node"
    edges: str | None = None
    labels: str | None = None
    dsbm_n: int = 500
    dsbm_C: int = 5
    dsbm_alpha_intra: float = 0.1
    dsbm_alpha_inter: float = 0.1
    dsbm_beta: float = 0.2
    dsbm_weight_lo: int = 2
    dsbm_weight_hi: int = 1000
    sign_flip_frac: float = 0.0
    sign_flip_mode: str = "uniform"
    folds: int = 0  # 0: task default (5 for link-sign, 10 otherwise)
    seed: int = 0
    f1: int = 16
    f2: int = 16
    lr: float = 1e-3
    weight_decay: float = 5e-4
    dropout: float = 0.5
    max_epochs: int = 3000
    patience: int = 500
    flow: str = "auto"  # auto | on | off
    scale_features: bool = True
    shuffle_labels: bool = False

    def validate(self) -> "ExperimentConfig":
        if self.task not in TASK_KINDS:
            raise ValueError(f"task must be one of {TASK_KINDS}")
        if self.flow not in ("auto", "on", "off"):
            raise ValueError("flow must be auto, on or off")
        if self.task == "node" and self.edges and not self.labels:
            raise ValueError("node task on an edge-list dataset needs a labels file")
        if self.folds < 0 or self.max_epochs < 1 or self.patience < 1:
            raise ValueError("folds, max_epochs and patience must be positive")
        if not 0 <= self.dropout < 1:
            raise ValueError("dropout must lie in [0, 1)")
        return self

    @property
    def num_folds(self) -> int:
        return self.folds or (5 if self.task == "link-sign" else 10)

    @property
    def use_flow(self) -> bool:
        if self.flow == "auto":
            return self.task != "link-sign"
        return self.flow == "on"

    def to_dict(self) -> dict:
        return {k: v for k, v in asdict(self).items() if v is not None}


def load_dataset(cfg: ExperimentConfig) -> tuple[DirectedGraph, NodeLabels | None]:
    if cfg.edges:
        g = from_edge_list(cfg.edges)
        labels = read_labels(cfg.labels, g) if cfg.labels else None
    else:
        dc = dsbm_config(cfg.dsbm_n, cfg.dsbm_C, cfg.dsbm_alpha_intra, cfg.dsbm_alpha_inter, cfg.dsbm_beta,
                         cfg.dsbm_weight_lo, cfg.dsbm_weight_hi, cfg.seed)
        g, labels = generate_dsbm(dc)
    if cfg.sign_flip_frac > 0:
        g = flip_signs(g, cfg.sign_flip_frac, cfg.seed, cfg.sign_flip_mode)
    if cfg.shuffle_labels and labels is not None:
        labels = NodeLabels(np.random.default_rng([cfg.seed, 7]).permutation(labels.labels), labels.num_classes)
    return g, labels


def make_folds(cfg: ExperimentConfig, g: DirectedGraph, labels: NodeLabels | None) -> list[TaskSplit]:
    if cfg.task == "node":
        if labels is None:
            raise ValueError("node task needs labels")
        return [make_node_task(labels, _fold_seed(cfg.seed, f), graph=g) for f in range(cfg.num_folds)]
    if cfg.task == "link-sign":
        return make_sign_task(g, cfg.num_folds, cfg.seed)
    return make_link_task(g, cfg.task.split("-")[1], cfg.num_folds, cfg.seed)


@dataclass
class FoldResult:
    fold: int
    metrics: dict[str, float]
    curve: list[tuple[int, float, float]]
    best_epoch: int
    params: dict = field(repr=False, default_factory=dict)


def _scale_features(X: np.ndarray) -> np.ndarray:
    """Divide each column by its standard deviation. No centering: the column
    means carry each node's net in/out flow through the propagation."""
    scale = X.std(axis=0)
    scale[scale == 0] = 1.0
    return X / scale


def train_fold(cfg: ExperimentConfig, split: TaskSplit, fold: int) -> FoldResult:
    g = flow_preprocess(split.graph) if cfg.use_flow else split.graph
    X = build_degree_features(g, use_abs=split.kind == "link-sign")
    if cfg.scale_features:
        X = _scale_features(X)
    P = renormalized_propagation(adjacency(g))
    seed = _fold_seed(cfg.seed, 1000 + fold)
    model = init_model(P, X.shape[1], split.num_classes, cfg.f1, cfg.f2,
                       edge_task=split.kind != "node", dropout_p=cfg.dropout, seed=seed)
    state = TrainState(lr=cfg.lr, weight_decay=cfg.weight_decay)
    params = model.params()
    best = (math.inf, 0, params)
    curve = []
    for epoch in range(cfg.max_epochs):
        loss, grads = loss_and_gradients(model, X, split.train_queries, split.train_labels,
                                         train_mode=True, rng_seed=[seed, epoch])
        if not np.isfinite(loss):
            raise FloatingPointError(f"fold {fold}: non-finite training loss at epoch {epoch}")
        params, state = adam_step(state, params, grads)
        model = model.with_params(params)
        probs = model_forward(model, X, split.val_queries)
        val_loss = float(-np.mean(np.log(np.maximum(
            probs[np.arange(len(split.val_labels)), split.val_labels], np.finfo(float).tiny))))
        curve.append((epoch, loss, val_loss))
        if val_loss < best[0]:
            best = (val_loss, epoch, params)
        elif epoch - best[1] >= cfg.patience:
            break
    model = model.with_params(best[2])
    metrics = evaluate(model_forward(model, X, split.test_queries), split.test_labels)
    log.info("fold %d: best epoch %d, %s", fold, best[1], metrics)
    return FoldResult(fold, metrics, curve, best[1], best[2])


@dataclass
class ExperimentResult:
    report: MetricsReport
    folds: list[FoldResult]
    splits: list[TaskSplit] = field(repr=False, default_factory=list)


def run_experiment(cfg: ExperimentConfig, parallel_folds: int = 1) -> ExperimentResult:
    cfg.validate()
    g, labels = load_dataset(cfg)
    splits = make_folds(cfg, g, labels)
    if parallel_folds > 1:
        with ProcessPoolExecutor(parallel_folds) as pool:
            results = list(pool.map(train_fold, [cfg] * len(splits), splits, range(len(splits))))
    else:
        results = [train_fold(cfg, s, f) for f, s in enumerate(splits)]
    return ExperimentResult(MetricsReport.from_folds([r.metrics for r in results]), results, splits)


def majority_baseline(train_labels, test_labels, num_classes: int = 2) -> dict[str, float]:
    """Metrics of always predicting the most frequent training label."""
    majority = np.bincount(np.asarray(train_labels), minlength=num_classes).argmax()
    probs = np.zeros((len(test_labels), num_classes))
    probs[:, majority] = 1.0
    out = evaluate(probs, test_labels)
    out["auc"] = 0.5
    return out


def write_metrics_csv(report: MetricsReport, path) -> None:
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["fold", "metric", "value"])
        for f, m in enumerate(report.per_fold):
            for k in METRICS:
                if k in m:
                    w.writerow([f, k, repr(m[k])])
        for k, v in report.mean.items():
            w.writerow(["mean", k, repr(v)])
        for k, v in report.std.items():
            w.writerow(["std", k, repr(v)])


def write_loss_curves(folds: list[FoldResult], path) -> None:
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["fold", "epoch", "train_loss", "val_loss"])
        for r in folds:
            for epoch, tl, vl in r.curve:
                w.writerow([r.fold, epoch, repr(tl), repr(vl)])
