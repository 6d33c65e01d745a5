"""Command-line front end: ``sigmanet {laplacian,verify,generate,train}``.

Exit codes: 0 success, 1 validation or input error, 2 numerical or property failure.
"""
from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import fields
from pathlib import Path

import numpy as np
import tomli_w

from . import verify as V
from .dsbm import dsbm_config, flip_signs, generate_dsbm
from .graph import adjacency, flow_preprocess, from_edge_list, write_edge_list, write_id_map, write_labels
from .laplacian import (
    magnetic_H,
    magnetic_laplacian,
    read_dump,
    renormalized_propagation,
    sign_magnetic_H,
    sign_magnetic_laplacian,
    verify_hermitian_psd,
    write_dump,
)
from .nn import init_model, save_checkpoint
from .tasks import ExperimentConfig, build_degree_features, run_experiment, write_loss_curves, write_metrics_csv

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

log = logging.getLogger("sigmanet")

EXIT_OK, EXIT_INPUT, EXIT_PROPERTY = 0, 1, 2


class PropertyFailure(RuntimeError):
    pass


def cmd_laplacian(args) -> int:
    g = from_edge_list(args.edges, merge_parallel=args.merge_parallel)
    A = adjacency(g)
    if args.operator == "sigma":
        H, L = sign_magnetic_H(A), sign_magnetic_laplacian(A, args.normalized)
    else:
        H, L = magnetic_H(A, args.q), magnetic_laplacian(A, args.q, args.normalized)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_dump(H, out / "H.txt")
    write_dump(L, out / "L.txt")
    if g.node_ids is not None:
        write_id_map(g, out / "id_map.csv")
    print(f"wrote {out / 'H.txt'} and {out / 'L.txt'} ({g.n} nodes, {g.num_edges} edges)")
    return EXIT_OK


def _matrix_checks(name: str, M: np.ndarray, args, psd: bool = True) -> list[V.CheckResult]:
    rep = verify_hermitian_psd(M, tol=args.hermitian_tol)
    out = [V.CheckResult(f"{name}: Hermitian", args.hermitian_tol, rep.max_asymmetry, rep.is_hermitian)]
    if psd:
        out.append(V.CheckResult(f"{name}: positive semidefinite", args.psd_tol, max(0.0, -rep.min_eigenvalue),
                                 rep.min_eigenvalue >= -args.psd_tol))
    return out


def cmd_verify(args) -> int:
    if args.demo_signflip:
        print(f"{'scale':>6}  {'H^(0.25)_01':>22}  {'H^sigma_01':>14}")
        for s, hq, hs in V.signflip_table():
            print(f"{s:>6g}  {hq.real:>+10.4f}{hq.imag:>+10.4f}i  {hs.real:>+6g}{hs.imag:>+7g}i")
        return EXIT_OK
    results: list[V.CheckResult] = []
    if args.graph:
        A = adjacency(from_edge_list(args.graph))
        results += _matrix_checks("L_sigma", sign_magnetic_laplacian(A), args)
        Ln = sign_magnetic_laplacian(A, normalized=True)
        results += _matrix_checks("L_sigma normalized", Ln, args)
        lmax = verify_hermitian_psd(Ln).max_eigenvalue
        results.append(V.CheckResult("L_sigma normalized: spectrum <= 2", args.psd_tol,
                                     max(0.0, lmax - 2.0), lmax <= 2.0 + args.psd_tol))
    if args.dump:
        results += _matrix_checks(f"dump {args.dump}", read_dump(args.dump), args, psd=args.expect_psd)
    if args.random or not (args.graph or args.dump):
        n = args.random or 200
        results += V.check_psd_and_bound(n, args.seed, args.psd_tol)
        results.append(V.check_unweighted_equivalence(max(1, n // 4), args.seed + 1, args.equiv_tol))
        results.append(V.check_homogeneity(n, args.seed, tol=args.homogeneity_tol))
        results.append(V.check_reversal_invariance(max(1, n // 4), args.seed + 2))
        results.append(V.check_sign_pattern(args.table_tol))
    for r in results:
        print(r.line())
    failed = [r.name for r in results if not r.passed]
    if failed:
        print(f"FAILED: {', '.join(failed)}", file=sys.stderr)
        return EXIT_PROPERTY
    return EXIT_OK


def cmd_generate(args) -> int:
    cfg = dsbm_config(args.n, args.C, args.alpha_intra, args.alpha_inter, args.beta,
                      args.weight_lo, args.weight_hi, args.seed)
    g, labels = generate_dsbm(cfg)
    if args.sign_flip_frac > 0:
        g = flip_signs(g, args.sign_flip_frac, args.seed, args.sign_flip_mode)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_edge_list(g, out / "edges.csv")
    write_labels(labels, out / "labels.csv")
    record = {**cfg.to_dict(), "sign_flip_frac": args.sign_flip_frac, "sign_flip_mode": args.sign_flip_mode}
    (out / "config.toml").write_text(tomli_w.dumps(record))
    print(f"wrote {g.n} nodes, {g.num_edges} edges to {out}")
    return EXIT_OK


_CONFIG_FIELDS = {f.name: f for f in fields(ExperimentConfig)}


def _load_config(path) -> ExperimentConfig:
    with open(path, "rb") as fh:
        data = tomllib.load(fh)
    unknown = set(data) - set(_CONFIG_FIELDS)
    if unknown:
        raise ValueError(f"{path}: unknown config keys {sorted(unknown)}")
    return ExperimentConfig(**data)


def _config_from_args(args) -> ExperimentConfig:
    if args.config:
        cfg = _load_config(args.config)
    else:
        cfg = ExperimentConfig()
    for name in _CONFIG_FIELDS:
        value = getattr(args, name, None)
        if value is not None:
            setattr(cfg, name, value)
    return cfg.validate()


def cmd_train(args) -> int:
    cfg = _config_from_args(args)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    # Written first so a crashed run can still be reproduced.
    (out / "config.toml").write_text(tomli_w.dumps(cfg.to_dict()))
    try:
        res = run_experiment(cfg, parallel_folds=args.parallel_folds)
    except FloatingPointError as e:
        raise PropertyFailure(str(e)) from e
    write_metrics_csv(res.report, out / "metrics.csv")
    write_loss_curves(res.folds, out / "loss_curves.csv")
    ckpt = out / "checkpoints"
    ckpt.mkdir(exist_ok=True)
    # Checkpoints store parameters only; the propagation is rebuilt from the fold's graph.
    for r, split in zip(res.folds, res.splits):
        g = flow_preprocess(split.graph) if cfg.use_flow else split.graph
        P = renormalized_propagation(adjacency(g))
        in_ch = build_degree_features(g).shape[1]
        model = init_model(P, in_ch, split.num_classes, cfg.f1, cfg.f2, split.kind != "node", cfg.dropout)
        save_checkpoint(model.with_params(r.params), ckpt / f"fold{r.fold}.npz",
                        {"task": cfg.task, "best_epoch": r.best_epoch})
    summary = f"task {cfg.task}, {len(res.folds)} folds\n{res.report.summary()}\n"
    (out / "summary.txt").write_text(summary)
    print(summary, end="")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="sigmanet", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    q = sub.add_parser("laplacian", help="write H and L dumps for an edge list")
    q.add_argument("edges")
    q.add_argument("--operator", choices=("sigma", "q"), default="sigma")
    q.add_argument("--q", type=float, default=0.25, help="charge for the magnetic operator")
    q.add_argument("--normalized", action="store_true")
    q.add_argument("--merge-parallel", action="store_true", help="sum repeated (src, dst) rows")
    q.add_argument("--out", default=".")
    q.set_defaults(func=cmd_laplacian)

    q = sub.add_parser("verify", help="check the operator properties")
    q.add_argument("--random", type=int, metavar="N", help="number of random graphs (default 200)")
    q.add_argument("--seed", type=int, default=0)
    q.add_argument("--graph", help="edge list to check")
    q.add_argument("--dump", help="matrix dump to check for Hermitian PSD structure")
    q.add_argument("--expect-psd", action="store_true", help="also require the dump to be PSD (a Laplacian)")
    q.add_argument("--demo-signflip", action="store_true", help="print the charge 0.25 sign-pattern table")
    q.add_argument("--psd-tol", type=float, default=1e-8)
    q.add_argument("--hermitian-tol", type=float, default=0.0)
    q.add_argument("--equiv-tol", type=float, default=1e-12)
    q.add_argument("--homogeneity-tol", type=float, default=1e-10)
    q.add_argument("--table-tol", type=float, default=1e-2)
    q.set_defaults(func=cmd_verify)

    q = sub.add_parser("generate", help="sample a DSBM graph")
    q.add_argument("--n", type=int, default=500)
    q.add_argument("--C", type=int, default=5)
    q.add_argument("--alpha-intra", type=float, default=0.1)
    q.add_argument("--alpha-inter", type=float, default=0.1)
    q.add_argument("--beta", type=float, default=0.2)
    q.add_argument("--weight-lo", type=int, default=2)
    q.add_argument("--weight-hi", type=int, default=1000)
    q.add_argument("--sign-flip-frac", type=float, default=0.0)
    q.add_argument("--sign-flip-mode", choices=("uniform", "target"), default="uniform")
    q.add_argument("--seed", type=int, default=0)
    q.add_argument("--out", required=True)
    q.set_defaults(func=cmd_generate)

    q = sub.add_parser("train", help="run a k-fold experiment")
    q.add_argument("--config", help="config.toml from a previous run; flags override it")
    q.add_argument("--out", required=True)
    q.add_argument("--parallel-folds", type=int, default=1)
    q.add_argument("--task", choices=("node", "link-exist", "link-direction", "link-sign"))
    q.add_argument("--edges")
    q.add_argument("--labels")
    for name in ("dsbm_n", "dsbm_C", "dsbm_weight_lo", "dsbm_weight_hi", "folds", "seed", "f1", "f2",
                 "max_epochs", "patience"):
        q.add_argument("--" + name.replace("_", "-"), dest=name, type=int)
    for name in ("dsbm_alpha_intra", "dsbm_alpha_inter", "dsbm_beta", "sign_flip_frac", "lr",
                 "weight_decay", "dropout"):
        q.add_argument("--" + name.replace("_", "-"), dest=name, type=float)
    q.add_argument("--sign-flip-mode", dest="sign_flip_mode", choices=("uniform", "target"))
    q.add_argument("--flow", choices=("auto", "on", "off"))
    q.add_argument("--no-scale-features", dest="scale_features", action="store_const", const=False)
    q.add_argument("--shuffle-labels", dest="shuffle_labels", action="store_const", const=True)
    q.set_defaults(func=cmd_train)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        return args.func(args)
    except PropertyFailure as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_PROPERTY
    except (ValueError, OSError, tomllib.TOMLDecodeError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
