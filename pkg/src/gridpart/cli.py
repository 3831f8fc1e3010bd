"""Command-line front end: generate, partition, evaluate, render.

Exit codes: 0 success, 2 no feasible partition, 1 any other error.
"""

from __future__ import annotations

import argparse
import math
import sys
import time
from dataclasses import dataclass, fields

import numpy as np

from .anneal import MAX_RUN_LIMIT, AnnealConfig, Neighborhood, anneal
from .baseline import KMeansConfig, weighted_kmeans
from .dp import BalanceMode, Infeasible, dynamic_partition
from .grid import GridGraph, Partition, Topology, balance_report, is_contiguous, part_perimeters, snake_ordering
from .io import FormatError, Instance, PartitionFile, read_instance, read_partition, write_instance, write_partition
from .render import render_svg
from .stochastic import StochasticInfeasible, normalized_max_part_weight, stochastic_partition
from .striping import phi_cautious_striping
from .synth import random_gev_instance, sparse_smoothed_field

__all__ = ["EXIT_OK", "EXIT_ERROR", "EXIT_INFEASIBLE", "SolveReport", "evaluate", "parse_report", "main"]

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_INFEASIBLE = 2
DEFAULT_EPS = 0.1
DEFAULT_SAMPLES = 1000


class CliError(Exception):
    pass


class InfeasibleError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_ERROR, f"{self.prog}: error: {message}\n")


@dataclass
class SolveReport:
    algorithm: str
    k: int
    eps: float
    seed: int
    cut_edges: int
    max_dev: float
    within_eps: bool
    contiguous: bool
    normalized_max_part_weight: float
    samples: int
    perimeters: tuple[int, ...]
    wall_ms: float = 0.0

    def block(self) -> str:
        out = []
        for f in fields(self):
            val = getattr(self, f.name)
            if isinstance(val, bool):
                txt = "true" if val else "false"
            elif isinstance(val, tuple):
                txt = ",".join(str(x) for x in val)
            elif isinstance(val, float):
                txt = repr(val)
            else:
                txt = str(val)
            out.append(f"{f.name}={txt}")
        return "\n".join(out) + "\n"

    def text(self) -> str:
        head = (f"{self.algorithm}: k={self.k} cut_edges={self.cut_edges} "
                f"max_dev={self.max_dev:.4f} (eps={self.eps:g}, "
                f"{'within' if self.within_eps else 'outside'}) "
                f"contiguous={'yes' if self.contiguous else 'no'} "
                f"normalized_max={self.normalized_max_part_weight:.4f} "
                f"time={self.wall_ms:.1f} ms")
        return head + "\n\n[report]\n" + self.block()


def parse_report(text: str) -> SolveReport:
    """Read the key=value block of a report (any text before it is skipped)."""
    vals = {}
    for line in text.splitlines():
        key, eq, val = line.strip().partition("=")
        if eq:
            vals[key] = val
    kw = {}
    for f in fields(SolveReport):
        if f.name not in vals:
            raise ValueError(f"report lacks {f.name}")
        raw = vals[f.name]
        kind = f.type if isinstance(f.type, str) else f.type.__name__
        if kind == "bool":
            kw[f.name] = raw == "true"
        elif kind == "int":
            kw[f.name] = int(raw)
        elif kind == "float":
            kw[f.name] = float(raw)
        elif kind.startswith("tuple"):
            kw[f.name] = tuple(int(x) for x in raw.split(",")) if raw else ()
        else:
            kw[f.name] = raw
    return SolveReport(**kw)


def evaluate(inst: Instance, labels: np.ndarray, k: int, algorithm: str, eps: float,
             seed: int, samples: int) -> SolveReport:
    """Recompute every report metric from an instance and a labelling."""
    m, n = inst.shape
    if labels.shape != (m, n):
        raise CliError(f"partition is {labels.shape[0]}x{labels.shape[1]}, instance is {m}x{n}")
    g = inst.graph()
    if g.total_weight <= 0:
        raise CliError("instance has zero total weight")
    p = Partition(g, labels.reshape(-1), k)
    bal = balance_report(g, p, eps)
    if inst.dists is not None:
        norm = normalized_max_part_weight(g, inst.dists, p, samples, seed)
    else:
        norm = k * float(p.part_weights.max()) / g.total_weight
    return SolveReport(algorithm, k, float(eps), int(seed), int(p.cut_edges), float(bal.max_dev),
                       bool(bal.within), bool(np.all(is_contiguous(g, p))), float(norm), int(samples),
                       tuple(int(x) for x in part_perimeters(g, p)))


def _stripe_height(args, inst: Instance, k: int) -> int:
    m, _ = inst.shape
    if args.stripe_height is not None:
        s = args.stripe_height
    else:
        s = max(1, round(math.sqrt(inst.weights.size / k)))
    if not 1 <= s <= m:
        raise CliError(f"stripe height must lie in [1, {m}], got {s}")
    return s


def _solve(args, inst: Instance, k: int, eps: float) -> np.ndarray:
    m, n = inst.shape
    g = inst.graph()
    algo = args.algo
    if algo == "stripe":
        w = inst.weights
        if not np.all(w == w.flat[0]) or w.flat[0] <= 0:
            raise CliError("stripe needs uniform positive weights")
        return phi_cautious_striping(m, n, k, inst.kind).partition.labels
    if algo == "kmeans":
        cfg = KMeansConfig(k, max_iters=args.max_iters or 100, restarts=args.restarts, seed=args.seed)
        return weighted_kmeans(g, cfg).labels
    if algo == "stochastic":
        if inst.dists is None:
            raise CliError("stochastic needs an instance with a DISTS section")
        order = snake_ordering(g, _stripe_height(args, inst, k))
        res = stochastic_partition(g, inst.dists, order, k, (args.i_min, args.i_max), args.balance_eps)
        if isinstance(res, StochasticInfeasible):
            raise InfeasibleError(res.describe())
        return res.partition.labels
    if algo == "dp" or (algo == "anneal" and args.init is None):
        mode = BalanceMode.upper_only(eps) if args.upper_only else BalanceMode(eps)
        res = dynamic_partition(g, snake_ordering(g, _stripe_height(args, inst, k)), k, mode)
        if isinstance(res, Infeasible):
            raise InfeasibleError(res.describe())
        if algo == "dp":
            return res.partition.labels
        start = res.partition
    else:
        pf = read_partition(args.init)
        if pf.labels.shape != (m, n) or pf.k != k:
            raise CliError("--init partition does not match the instance and k")
        start = Partition(g, pf.labels.reshape(-1), k)
    cfg = AnnealConfig(temperature=args.temperature, eps=eps, seed=args.seed,
                       neighborhood=args.neighborhood, max_run=args.max_run,
                       max_iters=args.max_iters, no_improve_window=args.no_improve)
    return anneal(g, start, cfg).best.labels


def cmd_generate(args) -> int:
    m, n = args.m, args.n
    if m < 1 or n < 1:
        raise CliError("grid dimensions must be positive")
    dists = None
    if args.kind == "uniform":
        w = np.ones((m, n))
    elif args.kind == "smoothed":
        w = sparse_smoothed_field(m, n, args.seed, args.density, args.iters, args.magnitude)
    else:
        dists = random_gev_instance(m, n, args.seed, args.support_cap)
        w = np.array([d.mean() for d in dists]).reshape(m, n)
    write_instance(Instance(args.topology, w, args.k, args.eps, dists), args.out)
    return EXIT_OK


def cmd_partition(args) -> int:
    inst = read_instance(args.instance)
    k = args.k if args.k is not None else inst.k
    if k is None:
        raise CliError("k not given and the instance header has none")
    eps = args.eps if args.eps is not None else (inst.eps if inst.eps is not None else DEFAULT_EPS)
    if not 1 <= k <= inst.weights.size:
        raise CliError(f"k must lie in [1, {inst.weights.size}]")
    t0 = time.perf_counter()
    labels = _solve(args, inst, k, eps).reshape(inst.shape)
    wall = (time.perf_counter() - t0) * 1000.0
    rep = evaluate(inst, labels, k, args.algo, eps, args.seed, args.samples)
    rep.wall_ms = wall
    meta = {"algorithm": args.algo, "eps": repr(float(eps)), "seed": str(args.seed),
            "samples": str(args.samples), "cut_edges": str(rep.cut_edges)}
    write_partition(PartitionFile(labels, k, meta), args.out)
    _emit(rep, args.report)
    return EXIT_OK


def cmd_evaluate(args) -> int:
    inst = read_instance(args.instance)
    pf = read_partition(args.partition)
    meta = pf.meta
    try:
        eps = args.eps if args.eps is not None else float(meta.get("eps", DEFAULT_EPS))
        samples = args.samples if args.samples is not None else int(meta.get("samples", DEFAULT_SAMPLES))
    except ValueError as exc:
        raise CliError(f"bad partition metadata: {exc}") from None
    t0 = time.perf_counter()
    rep = evaluate(inst, pf.labels, pf.k, meta.get("algorithm", "unknown"), eps, args.seed, samples)
    rep.wall_ms = (time.perf_counter() - t0) * 1000.0
    if "cut_edges" in meta and meta["cut_edges"] != str(rep.cut_edges):
        raise CliError(f"partition file claims cut_edges={meta['cut_edges']}, recomputed {rep.cut_edges}")
    _emit(rep, args.report)
    return EXIT_OK


def cmd_render(args) -> int:
    inst = read_instance(args.instance)
    pf = read_partition(args.partition)
    if pf.labels.shape != inst.shape:
        raise CliError("partition does not match the instance")
    g = GridGraph(inst.kind, *inst.shape, inst.weights.reshape(-1))
    svg = render_svg(g, pf.labels.reshape(-1), shade_weights=args.shade == "weights")
    with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(svg)
    return EXIT_OK


def _emit(rep: SolveReport, path):
    sys.stdout.write(rep.text())
    if path:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(rep.block())


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="gridpart", description="Contiguous balanced partitioning of square and hex grids.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    g = sub.add_parser("generate", help="write a synthetic instance")
    g.add_argument("kind", choices=["smoothed", "gev", "uniform"])
    g.add_argument("m", type=int)
    g.add_argument("n", type=int)
    g.add_argument("out")
    g.add_argument("--seed", type=int, required=True)
    g.add_argument("--topology", choices=[t.value for t in Topology], default="square")
    g.add_argument("--k", type=int, help="default k stored in the header")
    g.add_argument("--eps", type=float, help="default eps stored in the header")
    g.add_argument("--density", type=float, default=0.02, help="spike probability (smoothed)")
    g.add_argument("--iters", type=int, default=40, help="smoothing passes (smoothed)")
    g.add_argument("--magnitude", choices=["uniform", "pareto"], default="uniform")
    g.add_argument("--support-cap", type=int, default=250, help="largest GEV atom index (gev)")
    g.set_defaults(func=cmd_generate)

    s = sub.add_parser("partition", help="solve an instance")
    s.add_argument("instance")
    s.add_argument("algo", choices=["stripe", "dp", "stochastic", "anneal", "kmeans"])
    s.add_argument("out")
    s.add_argument("--seed", type=int, required=True)
    s.add_argument("--k", type=int)
    s.add_argument("--eps", type=float)
    s.add_argument("--samples", type=int, default=DEFAULT_SAMPLES,
                   help="joint draws for the normalized maximum part weight")
    s.add_argument("--report", help="also write the key=value report here")
    s.add_argument("--stripe-height", type=int, help="snake ordering stripe height (dp, stochastic, anneal)")
    s.add_argument("--upper-only", action="store_true", help="dp: enforce only the upper balance bound")
    s.add_argument("--i-min", type=int, default=0)
    s.add_argument("--i-max", type=int, default=13)
    s.add_argument("--balance-eps", type=float, help="stochastic: two-sided window on transformed weights")
    s.add_argument("--init", help="anneal: start from this partition file instead of dp")
    s.add_argument("--temperature", type=float, default=0.5)
    s.add_argument("--neighborhood", choices=[x.value for x in Neighborhood], default="combinatorial")
    s.add_argument("--max-run", type=int, default=4, choices=range(2, MAX_RUN_LIMIT + 1))
    s.add_argument("--max-iters", type=int, help="anneal / kmeans iteration cap")
    s.add_argument("--no-improve", type=int, help="anneal: stop after this many iterations without gain")
    s.add_argument("--restarts", type=int, default=5, help="kmeans restarts")
    s.set_defaults(func=cmd_partition)

    e = sub.add_parser("evaluate", help="recompute the report of a partition file")
    e.add_argument("instance")
    e.add_argument("partition")
    e.add_argument("--seed", type=int, required=True)
    e.add_argument("--eps", type=float)
    e.add_argument("--samples", type=int)
    e.add_argument("--report")
    e.set_defaults(func=cmd_evaluate)

    r = sub.add_parser("render", help="draw a partition as SVG")
    r.add_argument("instance")
    r.add_argument("partition")
    r.add_argument("out")
    r.add_argument("--shade", choices=["parts", "weights"], default="parts")
    r.set_defaults(func=cmd_render)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except InfeasibleError as exc:
        print(exc, file=sys.stderr)
        return EXIT_INFEASIBLE
    except (CliError, FormatError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
