"""Command-line interface: ``llgm {normalize,fit,simulate,evaluate,pipeline}``.

Every command writes its artifacts into ``--output-dir`` together with a
``run_manifest.json`` holding the full configuration, the seed and SHA-256
checksums of the artifacts. All randomness is derived from ``--seed``.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
import warnings
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import io
from .core import LLGMError
from .evaluate import degree_stats, roc_from_path, tpr_fpr
from .network import LlgmConfig, StabilityConfig, fit_llgm
from .normalize import DEPTH_METHODS, NormalizationConfig, normalize_pipeline
from .simulate import GRAPH_KINDS, SimulationConfig, simulate
from .solver import SolverConfig, load_paths, save_paths

log = logging.getLogger("llgm")

COMMANDS = ("normalize", "fit", "simulate", "evaluate", "pipeline")


@dataclass
class RunConfig:
    command: str
    output_dir: str
    input: str | None = None
    fit_dir: str | None = None
    truth: str | None = None
    orientation: str = "samples-by-variables"
    threads: int = 1
    seed: int = 0
    normalization: dict = field(default_factory=dict)
    solver: dict = field(default_factory=dict)
    stability: dict = field(default_factory=dict)
    simulation: dict = field(default_factory=dict)
    path: dict = field(default_factory=dict)
    dump_frequencies: bool = False

    def validate(self) -> None:
        if self.command not in COMMANDS:
            raise LLGMError(f"unknown command {self.command!r}")
        if not self.output_dir:
            raise LLGMError("--output-dir is required")
        if self.command in ("normalize", "fit", "pipeline") and not self.input:
            raise LLGMError(f"{self.command}: --input is required")
        if self.command == "evaluate" and not (self.fit_dir and self.truth):
            raise LLGMError("evaluate: --fit-dir and --truth are required")


def _threads(value: str) -> int:
    if value == "auto":
        return os.cpu_count() or 1
    n = int(value)
    if n < 1:
        raise argparse.ArgumentTypeError("--threads must be >= 1 or 'auto'")
    return n


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="llgm", description="Sparse Poisson graphical models for count data.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--output-dir", required=True)
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--threads", type=_threads, default="auto")
        p.add_argument("-v", "--verbose", action="store_true")

    def inputs(p):
        p.add_argument("--input", required=True)
        p.add_argument("--orientation", default="samples-by-variables",
                       choices=io.ORIENTATIONS)

    def normalization(p):
        p.add_argument("--depth-method", default="median-of-ratios", choices=DEPTH_METHODS)
        p.add_argument("--filter-fraction", type=float, default=0.5)
        p.add_argument("--alpha", type=float, default=None,
                       help="fixed overdispersion power (default: estimated)")
        p.add_argument("--no-round", action="store_true",
                       help="keep fractional values after normalization")
        p.add_argument("--skip-normalization", action="store_true")

    def fitting(p):
        p.add_argument("--rho-min", type=float, default=1e-4)
        p.add_argument("--path-length", type=int, default=100)
        p.add_argument("--edge-rule", default="union", choices=("union", "intersection"))
        p.add_argument("--subsamples", type=int, default=100, dest="B")
        p.add_argument("--subsample-size", type=int, default=None)
        p.add_argument("--beta", type=float, default=0.05)
        p.add_argument("--paper-rho-max", action="store_true",
                       help="use max |X_k^T X_j| as the top of the path")
        p.add_argument("--intercept", action="store_true")
        p.add_argument("--standardize", action="store_true")
        p.add_argument("--tol", type=float, default=1e-6)
        p.add_argument("--max-iter", type=int, default=1000)
        p.add_argument("--dump-frequencies", action="store_true",
                       help="also write edge frequencies for every penalty")

    p = sub.add_parser("normalize", help="normalize a count table")
    common(p), inputs(p), normalization(p)

    p = sub.add_parser("fit", help="fit the graph to (already normalized) counts")
    common(p), inputs(p), fitting(p)

    p = sub.add_parser("pipeline", help="normalize, then fit")
    common(p), inputs(p), normalization(p), fitting(p)

    p = sub.add_parser("simulate", help="simulate a Poisson network dataset")
    common(p)
    p.add_argument("--p", type=int, default=50)
    p.add_argument("--n", type=int, default=200)
    p.add_argument("--graph", default="hub", choices=GRAPH_KINDS)
    p.add_argument("--n-hubs", type=int, default=3)
    p.add_argument("--edge-prob", type=float, default=None)
    p.add_argument("--lambda-true", type=float, default=1.0)
    p.add_argument("--lambda-noise", type=float, default=0.5)

    p = sub.add_parser("evaluate", help="score a fit against a true edge list")
    common(p)
    p.add_argument("--fit-dir", required=True)
    p.add_argument("--truth", required=True)
    return parser


def config_from_args(args) -> RunConfig:
    cfg = RunConfig(command=args.command, output_dir=args.output_dir,
                    threads=args.threads, seed=args.seed)
    if hasattr(args, "input"):
        cfg.input, cfg.orientation = args.input, args.orientation
    if hasattr(args, "depth_method"):
        if args.skip_normalization:
            cfg.normalization = asdict(NormalizationConfig.disabled())
        else:
            cfg.normalization = asdict(NormalizationConfig(
                depth_method=args.depth_method, filter_fraction=args.filter_fraction,
                alpha=args.alpha, round_counts=not args.no_round))
    if hasattr(args, "rho_min"):
        cfg.solver = asdict(SolverConfig(
            tol=args.tol, max_iter=args.max_iter, use_intercept=args.intercept,
            standardize=args.standardize))
        cfg.stability = asdict(StabilityConfig(
            B=args.B, beta=args.beta, m=args.subsample_size, seed=args.seed))
        cfg.path = {"rho_min": args.rho_min, "path_length": args.path_length,
                    "edge_rule": args.edge_rule, "paper_rho_max": args.paper_rho_max}
        cfg.dump_frequencies = args.dump_frequencies
    if args.command == "simulate":
        cfg.simulation = asdict(SimulationConfig(
            p=args.p, n=args.n, graph_kind=args.graph, n_hubs=args.n_hubs,
            edge_prob=args.edge_prob, lambda_true=args.lambda_true,
            lambda_noise=args.lambda_noise, seed=args.seed))
    if args.command == "evaluate":
        cfg.fit_dir, cfg.truth = args.fit_dir, args.truth
    return cfg


def _normalization_config(cfg: RunConfig) -> NormalizationConfig:
    d = dict(cfg.normalization)
    d["alpha_grid"] = tuple(d.get("alpha_grid", NormalizationConfig.alpha_grid))
    return NormalizationConfig(**d)


def _write_manifest(cfg: RunConfig, out: Path, artifacts: list[str]) -> None:
    manifest = {
        "command": cfg.command,
        "config": asdict(cfg),
        "seed": cfg.seed,
        "artifacts": {name: io.sha256(out / name) for name in sorted(artifacts)},
    }
    io.write_json(manifest, out / "run_manifest.json")


def _run_normalize(cfg: RunConfig, out: Path, X=None):
    X = io.ingest(cfg.input, cfg.orientation) if X is None else X
    Xn, report = normalize_pipeline(X, _normalization_config(cfg))
    io.write_counts(Xn, out / "normalized_counts.tsv")
    io.write_json(report.to_dict(), out / "normalization_report.json")
    return Xn, report, ["normalized_counts.tsv", "normalization_report.json"]


def _run_fit(cfg: RunConfig, out: Path, X, report=None):
    config = LlgmConfig(
        solver=SolverConfig(**cfg.solver),
        stability=StabilityConfig(**cfg.stability),
        rho_min=cfg.path["rho_min"],
        path_length=cfg.path["path_length"],
        edge_rule=cfg.path["edge_rule"],
        paper_rho_max=cfg.path["paper_rho_max"],
        n_jobs=cfg.threads,
    )
    fit = fit_llgm(X, config)
    fit.normalization = report
    io.write_edge_list(fit.edges(), out / "edges.tsv")
    io.write_json(fit.report(), out / "fit_report.json")
    with (out / "stability.csv").open("w") as fh:
        fh.write("rho,instability,instability_mono\n")
        for r, d, m in fit.stability.curve_rows():
            fh.write(f"{r!r},{d!r},{m!r}\n")
    save_paths(fit.theta_path, out / "theta_path.npz")
    arts = ["edges.tsv", "fit_report.json", "stability.csv", "theta_path.npz"]
    if cfg.dump_frequencies:
        np.savez_compressed(out / "edge_frequency.npz", rhos=fit.stability.rhos,
                            edge_frequency=fit.stability.edge_frequency)
        arts.append("edge_frequency.npz")
    deg = degree_stats(fit.adjacency)
    (out / "degree.csv").write_text(deg.to_csv())
    arts.append("degree.csv")
    return fit, arts


def _run_simulate(cfg: RunConfig, out: Path):
    sim = SimulationConfig(**cfg.simulation)
    X, A = simulate(sim)
    io.write_counts(X, out / "counts.tsv")
    io.write_edge_list(io.adjacency_edges(A), out / "truth_edges.tsv")
    io.write_json(sim.to_dict(), out / "simulation_config.json")
    return ["counts.tsv", "truth_edges.tsv", "simulation_config.json"]


def _run_evaluate(cfg: RunConfig, out: Path):
    fit_dir = Path(cfg.fit_dir)
    report = io.read_json(fit_dir / "fit_report.json")
    labels = report["variable_ids"]
    paths = load_paths(fit_dir / "theta_path.npz")
    # variables removed by filtering are scored on the induced subgraph
    A_true = io.read_edge_list(cfg.truth, labels, drop_unknown=True)
    roc = roc_from_path(paths, A_true, report.get("edge_rule", "union"))
    (out / "roc.csv").write_text(roc.to_csv())
    io.write_json(roc.to_dict(), out / "roc.json")
    A_hat = io.read_edge_list(fit_dir / "edges.tsv", labels)
    tpr, fpr = tpr_fpr(A_hat, A_true)
    deg = degree_stats(A_hat)
    (out / "degree.csv").write_text(deg.to_csv())
    io.write_json(deg.to_dict(), out / "degree.json")
    io.write_json({"auc": roc.auc, "tpr_at_rho_opt": tpr, "fpr_at_rho_opt": fpr,
                   "rho_opt": report["rho_opt"]}, out / "evaluation.json")
    return ["roc.csv", "roc.json", "degree.csv", "degree.json", "evaluation.json"]


def run(cfg: RunConfig) -> int:
    """Execute one command; returns the process exit status."""
    stage = cfg.command
    try:
        cfg.validate()
        out = Path(cfg.output_dir)
        out.mkdir(parents=True, exist_ok=True)
        if cfg.command == "normalize":
            _, _, arts = _run_normalize(cfg, out)
        elif cfg.command == "fit":
            X = io.ingest(cfg.input, cfg.orientation)
            _, arts = _run_fit(cfg, out, X)
        elif cfg.command == "pipeline":
            stage = "normalize"
            Xn, report, arts = _run_normalize(cfg, out)
            stage = "fit"
            _, more = _run_fit(cfg, out, Xn, report)
            arts += more
        elif cfg.command == "simulate":
            arts = _run_simulate(cfg, out)
        else:
            arts = _run_evaluate(cfg, out)
        _write_manifest(cfg, out, arts)
    except (LLGMError, OSError, KeyError) as exc:
        print(f"llgm {cfg.command} [{stage}]: error: {exc}", file=sys.stderr)
        return 1
    log.info("wrote %s", ", ".join(arts))
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if not args.verbose:
        warnings.simplefilter("ignore")
    try:
        cfg = config_from_args(args)
    except LLGMError as exc:
        print(f"llgm {args.command}: error: {exc}", file=sys.stderr)
        return 1
    return run(cfg)


if __name__ == "__main__":
    sys.exit(main())
