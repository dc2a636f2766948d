"""Command-line interface: ``ergmkit <subcommand> ...``.

Failures print one line ``<token>\\t<message>`` on stderr and exit with
status 2; the token is one of the error vocabulary of :mod:`ergmkit.errors`
(or ``io-error``).
"""

from __future__ import annotations

import argparse
import sys
import warnings
from pathlib import Path

import numpy as np

from . import estimate as E
from . import exact as X
from . import gof as G
from . import io
from . import missing as M
from .errors import ErgmError, ParseError
from .graph import BlockStructure
from .sampler import Chain, McmcConfig, make_rng, set_threads

DEFAULT_SEED = 20240917


def _read(path: str) -> str:
    return Path(path).read_text()


def _emit(text: str, path: str | None) -> None:
    if path is None:
        sys.stdout.write(text)
    else:
        Path(path).write_text(text)


def _cfg(args) -> McmcConfig:
    return McmcConfig(burnin=args.burnin, interval=args.interval, draws=args.draws, seed=args.seed)


def _data(args) -> E.NetworkData:
    graphs = io.read_graphs(_read(args.graphs))
    template = io.parse_model_config(_read(args.model))
    attrs = io.read_attributes(_read(args.attributes)) if getattr(args, "attributes", None) else None
    if attrs is not None and len(attrs) not in (1, len(graphs)):
        raise ParseError(f"{len(attrs)} attribute sections for {len(graphs)} networks")
    if attrs is not None and len(attrs) == 1:
        attrs = attrs * len(graphs)
    masks = None
    if getattr(args, "mask", None):
        masks = io.read_masks(_read(args.mask), [g.n for g in graphs])
    try:
        return E.NetworkData.from_template(template, graphs, attrs, masks=masks)
    except (KeyError, ValueError) as exc:
        raise ParseError(str(exc)) from None


def _spec(args):
    template = io.parse_model_config(_read(args.model))
    try:
        return template.instantiate(args.n)
    except (KeyError, ValueError) as exc:
        raise ParseError(str(exc)) from None


def _theta(values, p: int, what: str = "theta") -> np.ndarray:
    theta = io.parse_theta(values)
    if len(theta) != p:
        raise ParseError(f"{what} has {len(theta)} values, model has {p} parameters")
    return theta


def cmd_fit(args) -> int:
    data = _data(args)
    cfg = _cfg(args)
    theta0 = None if args.theta0 is None else _theta(args.theta0, data.p, "theta0")
    if data.masks is not None:
        method = {"exact": "exact", "mcmle": "mcmle"}.get(args.method)
        if method is None:
            raise ParseError("masked data are fitted with --method mcmle or exact")
        fit = M.incomplete_fit(data, theta0=theta0, cfg=cfg, method=method)
    else:
        kw = {} if theta0 is None else {"theta0": theta0}
        fit = E.fit_pooled(data, args.method, cfg, **kw)
    _emit(io.write_fit_report(fit), args.report)
    _emit(io.write_param_table(fit), args.table)
    return 0


def cmd_simulate(args) -> int:
    spec = _spec(args)
    theta = _theta(args.theta, spec.p)
    cfg = _cfg(args)
    chain = Chain(spec, None, rng=make_rng(cfg.seed, 0))
    stats, rows = chain.run_cfg(theta, cfg, record_graphs=not args.stats_only)
    if args.stats_only:
        _emit(io.write_table(spec.term_names, stats.tolist()), args.out)
    else:
        _emit(io.write_graphs(chain.graphs_from_rows(rows)), args.out)
    return 0


def cmd_gof(args) -> int:
    report = io.read_fit_report(_read(args.fit_report))
    data = _data(args)
    theta = _theta(report["theta"], data.p, "fitted theta")
    seed = args.seed if args.seed is not None else int(report.get("seed", DEFAULT_SEED))
    cfg = McmcConfig(burnin=args.burnin, interval=args.interval, draws=1, seed=seed)
    rep = G.gof_compare(data, theta, draws=args.draws, cfg=cfg)
    _emit(io.write_table(("family", "bin", "observed", "lower", "median", "upper", "outside"), rep.rows()),
          args.out)
    return 0


def cmd_enumerate(args) -> int:
    spec = _spec(args)
    names = spec.term_names
    lines = []
    if args.mle:
        if not args.graphs:
            raise ParseError("--mle needs --graphs")
        graphs = io.read_graphs(_read(args.graphs))
        theta, info = X.exact_fit([spec] * len(graphs), graphs, cap=args.cap)
        lines += [(f"theta_{n}", v) for n, v in zip(spec.param_names, theta)]
        lines += [("loglik", info["loglik"]), ("iterations", info["iterations"])]
    else:
        theta = _theta(args.theta, spec.p)
        if args.normalizer:
            lines.append(("log_normalizer", X.log_normalizer(spec, theta, cap=args.cap)))
        else:
            mom = X.exact_moments(spec, theta, cap=args.cap)
            lines.append(("log_normalizer", mom.log_normalizer))
            lines += [(f"mean_{n}", v) for n, v in zip(names, mom.mean)]
            lines += [(f"cov_{a}_{b}", mom.covariance[i, j]) for i, a in enumerate(names)
                      for j, b in enumerate(names) if j >= i]
    _emit("".join(f"{k}\t{float(v):.12g}\n" for k, v in lines), args.out)
    return 0


def cmd_scan(args) -> int:
    spec = _spec(args)
    grid = io.read_grid(_read(args.grid))
    for t in grid:
        _theta(t, spec.p, "grid row")
    rep = G.degeneracy_scan(spec, grid, cfg=_cfg(args))
    header = [f"theta_{n}" for n in spec.param_names] + ["mean_density", "sd_density", "mc_se", "bimodality_gap"]
    rows = [[*p.theta.tolist(), p.mean_density, p.sd_density, p.mc_se, p.bimodality_gap] for p in rep.points]
    _emit(io.write_table(header, rows), args.out)
    return 0


def cmd_mask(args) -> int:
    graphs = io.read_graphs(_read(args.graphs))
    kind = {"trace": "link-trace"}.get(args.design, args.design)
    design = M.DesignParams(kind, probs=args.prob, waves=args.waves, q=args.q)
    masks = []
    for k, g in enumerate(graphs):
        rng = make_rng(args.seed, k)
        blocks = None
        if kind == "subgraph":
            if args.block_size is None or g.n % args.block_size:
                raise ParseError("subgraph design needs --block-size dividing the node count")
            blocks = BlockStructure.equal_blocks(g.n // args.block_size, args.block_size)
        masks.append(M.generate_mask(g, design, rng, blocks))
    _emit(io.write_masks(masks), args.out)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ergmkit", description="Exponential-family random graph models")
    parser.add_argument("--threads", type=int, default=1, help="maximum concurrent chains")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, draws=1000, seed=True):
        if seed:
            p.add_argument("--seed", type=int, default=DEFAULT_SEED)
        p.add_argument("--draws", type=int, default=draws)
        p.add_argument("--burnin", type=int, default=None)
        p.add_argument("--interval", type=int, default=None)
        p.add_argument("--out", default=None, help="output file (default stdout)")

    p = sub.add_parser("fit", help="estimate parameters")
    p.add_argument("--graphs", required=True)
    p.add_argument("--model", required=True)
    p.add_argument("--attributes")
    p.add_argument("--mask")
    p.add_argument("--method", choices=("mple", "mcmle", "sa", "exact"), default="mcmle")
    p.add_argument("--theta0", nargs="+")
    p.add_argument("--report", help="key/value report file (default stdout)")
    p.add_argument("--table", help="parameter table file (default stdout)")
    common(p)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("simulate", help="draw graphs from a model")
    p.add_argument("--model", required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--theta", nargs="+", required=True)
    p.add_argument("--stats-only", action="store_true")
    common(p, draws=10)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("gof", help="goodness-of-fit envelopes for a fit")
    p.add_argument("--fit-report", required=True)
    p.add_argument("--graphs", required=True)
    p.add_argument("--model", required=True)
    p.add_argument("--attributes")
    p.add_argument("--seed", type=int, default=None, help="default: the seed in the fit report")
    common(p, draws=100, seed=False)
    p.set_defaults(func=cmd_gof)

    p = sub.add_parser("enumerate", help="exact computations on tiny graphs")
    p.add_argument("--model", required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--theta", nargs="+")
    p.add_argument("--graphs")
    p.add_argument("--cap", type=int, default=X.DEFAULT_CAP)
    mode = p.add_mutually_exclusive_group()
    mode.add_argument("--moments", action="store_true", help="(default) log normalizer, means, covariances")
    mode.add_argument("--mle", action="store_true")
    mode.add_argument("--normalizer", action="store_true")
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_enumerate)

    p = sub.add_parser("scan", help="density summaries over a parameter grid")
    p.add_argument("--model", required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--grid", required=True)
    common(p, draws=2000)
    p.set_defaults(func=cmd_scan)

    p = sub.add_parser("mask", help="generate observation masks")
    p.add_argument("--graphs", required=True)
    p.add_argument("--design", choices=("ego", "trace", "subgraph", "mar"), required=True)
    p.add_argument("--prob", type=float, default=1.0, help="inclusion probability of nodes or blocks")
    p.add_argument("--waves", type=int, default=0)
    p.add_argument("--q", type=float, default=0.0, help="dyad masking probability")
    p.add_argument("--block-size", type=int)
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_mask)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        set_threads(args.threads)
        if getattr(args, "theta", None) is None and args.command == "enumerate" and not args.mle:
            raise ParseError("--theta is required unless --mle is given")
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            return args.func(args)
    except ErgmError as exc:
        print(f"{exc.token}\t{exc}", file=sys.stderr)
    except ValueError as exc:
        print(f"{ParseError.token}\t{exc}", file=sys.stderr)
    except OSError as exc:
        print(f"io-error\t{exc}", file=sys.stderr)
    return 2


if __name__ == "__main__":
    sys.exit(main())
