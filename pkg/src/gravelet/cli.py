"""``gravelet`` command line: generate, embed, distances, experiment.

Exit codes: 0 ok, 2 bad input, 3 numerical failure, 4 refused protocol
deviation. Failures print one line ``error: <class>: <message>`` to stderr.
Every flag with a default can also be set through ``GRAVELET_<FLAG>``.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import logging
import os
import sys
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import experiments
from . import io as gio
from .embedding import EmbeddingConfig, embed_all
from .evaluation import MetricReport
from .graph import DisconnectedGraphError, GraphError, largest_component
from .spectral import (
    DEFAULT_ORDER,
    EigenConvergenceError,
    NearlyDisconnectedError,
    SpectralError,
)
from .synthgen import RECIPES, GenerationError, generate
from .wavelet import ETA, GAMMA

EXIT_OK, EXIT_INPUT, EXIT_NUMERIC, EXIT_REFUSED = 0, 2, 3, 4

log = logging.getLogger("gravelet")


class CliError(Exception):
    def __init__(self, kind: str, message: str, code: int = EXIT_INPUT):
        super().__init__(message)
        self.kind = kind
        self.code = code


@dataclass
class RunConfig:
    subcommand: str
    inputs: list[str] = field(default_factory=list)
    output: Optional[str] = None
    d: int = 50
    t_max: float = 100.0
    eta: float = ETA
    gamma: float = GAMMA
    J: int = 2
    K: int = DEFAULT_ORDER
    mode: str = "auto"
    scales: Optional[list[float]] = None
    seed: int = 0
    trials: int = 25
    extra: dict = field(default_factory=dict)

    def validate(self) -> None:
        checks = [
            (self.d >= 1, "--d must be >= 1"),
            (self.t_max > 0, "--t-max must be positive"),
            (0 < self.eta <= self.gamma < 1, "need 0 < eta <= gamma < 1"),
            (self.J >= 1, "--J must be >= 1"),
            (self.K >= 1, "--K must be >= 1"),
            (self.mode in ("auto", "dense", "chebyshev"), f"unknown mode {self.mode!r}"),
            (self.trials >= 1, "--trials must be >= 1"),
            (self.seed >= 0, "--seed must be >= 0"),
        ]
        for ok, msg in checks:
            if not ok:
                raise CliError("input-error", msg)
        if self.scales is not None and (not self.scales or min(self.scales) < 0):
            raise CliError("input-error", "--scales must be non-negative")

    def embedding_config(self) -> EmbeddingConfig:
        scales = tuple(self.scales) if self.scales else None
        return EmbeddingConfig(self.d, self.t_max, self.eta, self.gamma, self.J, scales)

    def as_dict(self) -> dict:
        # the output location does not change the content
        out = asdict(self)
        del out["output"]
        return out

    def digest(self, *payloads: bytes) -> str:
        h = hashlib.sha256(json.dumps(self.as_dict(), sort_keys=True).encode())
        for p in payloads:
            h.update(p)
        return h.hexdigest()


def preamble(cfg: RunConfig, input_hash: str) -> list[str]:
    return [f"run_config: {json.dumps(cfg.as_dict(), sort_keys=True)}",
            f"input_hash: {input_hash}"]


# argument parsing

def _env(name: str, default, cast):
    raw = os.environ.get(f"GRAVELET_{name}")
    if raw is None:
        return default
    try:
        return cast(raw)
    except ValueError:
        raise CliError("input-error", f"GRAVELET_{name}={raw!r} is not a valid value") from None


def _float_list(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _int_range(text: str) -> list[int]:
    """``5``, ``1,2,8`` or ``1..25``."""
    try:
        if ".." in text:
            lo, hi = text.split("..")
            return list(range(int(lo), int(hi) + 1))
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected N, N,M,... or N..M, got {text!r}")


def _embedding_flags(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("embedding")
    g.add_argument("--d", type=int, default=_env("D", 50, int), help="sample points per scale")
    g.add_argument("--t-max", type=float, default=_env("T_MAX", 100.0, float))
    g.add_argument("--eta", type=float, default=_env("ETA", ETA, float))
    g.add_argument("--gamma", type=float, default=_env("GAMMA", GAMMA, float))
    g.add_argument("--J", type=int, default=_env("J", 2, int), help="number of scales")
    g.add_argument("--K", type=int, default=_env("K", DEFAULT_ORDER, int),
                   help="Chebyshev order")
    g.add_argument("--mode", choices=("auto", "dense", "chebyshev"),
                   default=_env("MODE", "auto", str))
    g.add_argument("--scales", type=_float_list, default=None,
                   help="explicit scales, overriding automatic selection")
    g.add_argument("--threads", type=int, default=_env("THREADS", os.cpu_count() or 1, int))


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise CliError("input-error", f"{self.prog}: {message}")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="gravelet",
                     description="Structural node embeddings from heat wavelets.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("embed", help="embed every node of an edge-list graph")
    p.add_argument("graph")
    p.add_argument("-o", "--output", required=True, help="embedding CSV; metadata goes to OUTPUT.meta")
    p.add_argument("--largest-component", action="store_true",
                   help="embed only the largest connected component")
    _embedding_flags(p)

    p = sub.add_parser("generate", help="write a synthetic benchmark")
    p.add_argument("recipe", choices=RECIPES)
    p.add_argument("-o", "--output", required=True,
                   help="prefix for PREFIX.edges, PREFIX.roles.csv and PREFIX.meta")
    p.add_argument("--seed", type=int, default=_env("SEED", 0, int))
    p.add_argument("--fraction", type=float, default=None, help="perturbation fraction")
    p.add_argument("--mirror-edges", type=int, default=10)
    p.add_argument("--clique-size", type=int, default=10)
    p.add_argument("--chain-length", type=int, default=11)

    p = sub.add_parser("distances", help="structural distances from an embedding CSV")
    p.add_argument("embedding")
    p.add_argument("--against", help="second embedding CSV for the right-hand nodes")
    p.add_argument("--pair", action="append", default=[], metavar="A,B",
                   help="node pair to measure; repeatable")
    p.add_argument("--knn", type=int, help="list the k nearest nodes")
    p.add_argument("--nodes", default=None, help="comma-separated query nodes for --knn")
    p.add_argument("-o", "--output", help="write CSV here instead of stdout")

    p = sub.add_parser("experiment", help="run an experiment protocol")
    p.add_argument("name", choices=experiments.EXPERIMENTS)
    p.add_argument("-o", "--output", default=".", help="directory for NAME.csv and NAME.txt")
    p.add_argument("--seed", type=int, default=_env("SEED", 0, int))
    p.add_argument("--trials", type=int, default=_env("TRIALS", 25, int))
    p.add_argument("--mirror-edges", type=_int_range, default=list(range(1, 26)))
    p.add_argument("--sizes", type=_int_range, default=list(experiments.DEFAULT_SIZES))
    p.add_argument("--fractions", type=_float_list, default=list(experiments.DEFAULT_NOISE))
    p.add_argument("--runs", type=int, default=10, help="runs per noise level")
    p.add_argument("--graphs", type=int, default=200, help="cross-graph corpus size")
    p.add_argument("--clustering", default="agglomerative",
                   help="clustering for the noise sweep; only 'agglomerative' is supported")
    _embedding_flags(p)
    return parser


def run_config(args: argparse.Namespace) -> RunConfig:
    cfg = RunConfig(args.command)
    for name in ("d", "t_max", "eta", "gamma", "J", "K", "mode", "scales", "seed", "trials"):
        if hasattr(args, name):
            setattr(cfg, name, getattr(args, name))
    cfg.output = getattr(args, "output", None)
    cfg.validate()
    return cfg


# subcommands

def cmd_embed(args) -> int:
    cfg = run_config(args)
    cfg.inputs = [args.graph]
    cfg.extra = {"largest_component": args.largest_component}
    try:
        raw = Path(args.graph).read_bytes()
    except OSError as exc:
        raise CliError("input-error", f"cannot read {args.graph}: {exc.strerror}")
    g = gio.read_edge_list(args.graph)
    if args.largest_component:
        g = largest_component(g)
    emb = embed_all(g, cfg.embedding_config(), mode=cfg.mode, K=cfg.K, threads=args.threads)
    Path(args.output).parent.mkdir(parents=True, exist_ok=True)
    gio.write_embedding_csv(emb, args.output, {
        "run_config": cfg.as_dict(), "input_hash": hashlib.sha256(raw).hexdigest()})
    log.info("wrote %d x %d embedding to %s", *emb.matrix.shape, args.output)
    return EXIT_OK


def cmd_generate(args) -> int:
    cfg = run_config(args)
    kw = {"mirror_edges": args.mirror_edges, "clique_size": args.clique_size,
          "chain_length": args.chain_length}
    if args.fraction is not None:
        kw["fraction"] = args.fraction
    cfg.extra = kw
    b = generate(args.recipe, args.seed, **kw)
    recipe = dict(b.recipe, name=args.recipe, seed=args.seed)
    digest = cfg.digest()
    prefix = args.output
    Path(prefix).parent.mkdir(parents=True, exist_ok=True)
    gio.write_edge_list(b.graph, f"{prefix}.edges", preamble(cfg, digest))
    roles_text = gio.format_roles_csv(b.graph.node_labels, b.roles, b.role_names)
    Path(f"{prefix}.roles.csv").write_text(roles_text, encoding="utf-8")
    meta = {"run_config": cfg.as_dict(), "input_hash": digest, "recipe": recipe,
            "nodes": b.graph.n, "edges": b.graph.num_edges, "roles": b.num_roles,
            "graph_hash": b.graph.content_hash()}
    if b.mirror is not None:
        meta["mirror"] = [int(x) for x in b.mirror]
    Path(f"{prefix}.meta").write_text(gio.format_metadata(meta), encoding="utf-8")
    return EXIT_OK


def _lookup(labels: Sequence[str], node: str) -> int:
    try:
        return labels.index(node)
    except ValueError:
        raise CliError("unknown-node", f"unknown node label {node!r}") from None


def cmd_distances(args) -> int:
    cfg = RunConfig("distances", inputs=[args.embedding] + ([args.against] if args.against else []),
                    output=args.output)
    cfg.extra = {"pairs": args.pair, "knn": args.knn, "nodes": args.nodes}
    left_labels, left, _ = gio.read_embedding_csv(args.embedding)
    right_labels, right = left_labels, left
    if args.against:
        right_labels, right, _ = gio.read_embedding_csv(args.against)
        if right.shape[1] != left.shape[1]:
            raise CliError("input-error", f"embedding dimensions differ: "
                                          f"{left.shape[1]} vs {right.shape[1]}")
    if not args.pair and args.knn is None:
        raise CliError("input-error", "give --pair A,B or --knn K")
    digest = cfg.digest(*(Path(p).read_bytes() for p in cfg.inputs))
    buf = io.StringIO()
    buf.write("".join(f"# {line}\n" for line in preamble(cfg, digest)))
    w = csv.writer(buf, lineterminator="\n")
    if args.pair:
        w.writerow(["a", "b", "distance"])
        for spec in args.pair:
            a, sep, b = spec.partition(",")
            if not sep:
                raise CliError("input-error", f"--pair expects A,B, got {spec!r}")
            i, j = _lookup(left_labels, a), _lookup(right_labels, b)
            w.writerow([a, b, repr(float(np.linalg.norm(left[i] - right[j])))])
    if args.knn is not None:
        queries = args.nodes.split(",") if args.nodes else list(left_labels)
        same = args.against is None
        limit = len(right_labels) - (1 if same else 0)
        if not 1 <= args.knn <= limit:
            raise CliError("input-error", f"--knn must lie in [1, {limit}]")
        w.writerow(["node", "rank", "neighbor", "distance"])
        for q in queries:
            i = _lookup(left_labels, q)
            dist = np.sqrt(((right - left[i]) ** 2).sum(axis=1))
            order = np.lexsort((np.arange(len(dist)), dist))
            if same:
                order = order[order != i]
            for rank, j in enumerate(order[:args.knn], 1):
                w.writerow([q, rank, right_labels[j], repr(float(dist[j]))])
    if args.output:
        Path(args.output).write_text(buf.getvalue(), encoding="utf-8")
    else:
        sys.stdout.write(buf.getvalue())
    return EXIT_OK


def cmd_experiment(args) -> int:
    cfg = run_config(args)
    name = args.name
    if args.clustering != "agglomerative":
        raise CliError("deviation-refused",
                       f"clustering {args.clustering!r} is not available; the noise "
                       "sweep uses agglomerative clustering with the true role count",
                       EXIT_REFUSED)
    extra = {}
    ecfg = cfg.embedding_config()
    common = {"mode": cfg.mode, "K": cfg.K}
    if name == "barbell":
        mode = "dense" if cfg.mode == "auto" else cfg.mode
        report = experiments.barbell(ecfg, mode=mode, K=cfg.K)
    elif name in experiments.BENCHMARKS:
        report = experiments.benchmark(name, ecfg, cfg.trials, cfg.seed,
                                       threads=args.threads, **common)
    elif name == "crossgraph":
        extra["graphs"] = args.graphs
        report = experiments.crossgraph(ecfg, args.graphs, cfg.seed, **common)
    elif name == "karate":
        extra["mirror_edges"] = args.mirror_edges
        report = experiments.karate(ecfg, args.mirror_edges, cfg.seed, **common)
    elif name == "scaling":
        extra["sizes"] = args.sizes
        report = experiments.scaling(ecfg, args.sizes, cfg.seed, cfg.K, threads=args.threads)
    else:
        extra.update(fractions=args.fractions, runs=args.runs, clustering=args.clustering)
        report = experiments.noise_sweep(ecfg, args.fractions, args.runs, cfg.seed, **common)
    cfg.extra = extra
    head = "".join(f"# {line}\n" for line in preamble(cfg, cfg.digest()))
    out = Path(args.output)
    out.mkdir(parents=True, exist_ok=True)
    (out / f"{name}.csv").write_text(head + report.to_csv(), encoding="utf-8")
    (out / f"{name}.txt").write_text(head + report.table() + "\n", encoding="utf-8")
    print(report.table())
    if isinstance(report, MetricReport) and report.failures:
        print(f"{len(report.failures)} of {report.trials} trials failed", file=sys.stderr)
    return EXIT_OK


COMMANDS = {"embed": cmd_embed, "generate": cmd_generate,
            "distances": cmd_distances, "experiment": cmd_experiment}


def _classify(exc: BaseException) -> CliError:
    if isinstance(exc, CliError):
        return exc
    if isinstance(exc, NearlyDisconnectedError):
        return CliError("disconnected", str(exc), EXIT_NUMERIC)
    if isinstance(exc, DisconnectedGraphError):
        return CliError("disconnected", str(exc), EXIT_INPUT)
    if isinstance(exc, gio.ParseError):
        return CliError("parse-error", str(exc), EXIT_INPUT)
    if isinstance(exc, EigenConvergenceError):
        return CliError("eigensolver-failure", str(exc), EXIT_NUMERIC)
    if isinstance(exc, SpectralError):
        return CliError("numerical-failure", str(exc), EXIT_NUMERIC)
    if isinstance(exc, (GraphError, GenerationError, ValueError)):
        return CliError("input-error", str(exc), EXIT_INPUT)
    if isinstance(exc, OSError):
        return CliError("input-error", f"{exc.filename}: {exc.strerror}", EXIT_INPUT)
    raise exc


def main(argv: Optional[Sequence[str]] = None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except CliError as exc:
        print(f"error: {exc.kind}: {exc}", file=sys.stderr)
        return exc.code
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except Exception as exc:
        err = _classify(exc)
        print(f"error: {err.kind}: {err}", file=sys.stderr)
        return err.code


if __name__ == "__main__":
    sys.exit(main())
