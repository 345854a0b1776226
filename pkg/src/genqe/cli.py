"""Command-line entry point.

Exit codes: 0 success, 1 usage error, 2 data error, 3 backend error.
"""

from __future__ import annotations

import argparse
import sys

from . import __version__, kernels
from .config import ExperimentConfig
from .errors import BackendError, DataError, UsageError
from .evaluation import format_summary
from . import experiment


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse defaults to exit code 2
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _int_list(text: str) -> list[int]:
    try:
        return [int(x) for x in text.split(",") if x.strip() != ""]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="genqe", description="Query expansion with generated texts")
    parser.add_argument("--version", action="version", version=f"genqe {__version__} (kernels: {kernels.BACKEND})")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_config_args(p):
        p.add_argument("-c", "--config", required=True, help="experiment config YAML")
        p.add_argument(
            "--set",
            dest="overrides",
            action="append",
            default=[],
            metavar="KEY=VALUE",
            help="override a config value, e.g. --set model.name=lm_dirichlet",
        )

    p = sub.add_parser("index", help="build the inverted index")
    add_config_args(p)

    p = sub.add_parser("generate", help="populate the generated-text cache for all topics")
    add_config_args(p)

    p = sub.add_parser("run", help="retrieve and write a TREC run file")
    add_config_args(p)
    p.add_argument("--dump-queries", help="also write the weighted queries as jsonl")

    p = sub.add_parser("eval", help="score a run file against the qrels")
    add_config_args(p)
    p.add_argument("--run", required=True, help="run file to evaluate")
    p.add_argument("--out", help="write the per-query TSV report here")

    p = sub.add_parser("ttest", help="paired t-test on per-query AP of two runs")
    add_config_args(p)
    p.add_argument("--run-a", required=True)
    p.add_argument("--run-b", required=True)

    p = sub.add_parser("sweep-k", help="MAP per expansion size and weighting")
    add_config_args(p)
    p.add_argument("--k-values", required=True, type=_int_list, help="e.g. 5,10,20,50")

    p = sub.add_parser("sweep-ndocs", help="MAP per number of generated texts")
    add_config_args(p)
    p.add_argument("--n-values", required=True, type=_int_list, help="e.g. 0,1,5,10,20,100")
    p.add_argument("--repeats", type=int, default=5)

    p = sub.add_parser("export-text", help="dump corpus as plain-text files (fine-tuning input)")
    add_config_args(p)
    p.add_argument("--out", required=True)

    p = sub.add_parser("synth", help="write the bundled synthetic benchmark collection")
    p.add_argument("--out", required=True)
    p.add_argument("--docs", type=int, default=2000)
    p.add_argument("--topics", type=int, default=50)
    p.add_argument("--seed", type=int, default=91501)

    return parser


def _dispatch(args) -> int:
    if args.command == "synth":
        paths = experiment.cmd_synth(args.out, n_docs=args.docs, n_topics=args.topics, seed=args.seed)
        for name, path in paths.items():
            print(f"{name}: {path}")
        return 0

    cfg = ExperimentConfig.from_yaml(args.config, args.overrides)

    if args.command == "index":
        out = experiment.cmd_index(cfg)
        print(f"index written: {out}")
    elif args.command == "generate":
        out = experiment.cmd_generate(cfg)
        print(f"cache populated: {out}")
    elif args.command == "run":
        out = experiment.cmd_run(cfg, dump_queries=args.dump_queries)
        print(f"run written: {out}")
    elif args.command == "eval":
        report = experiment.cmd_eval(cfg, args.run, out_tsv=args.out)
        print(format_summary(report))
    elif args.command == "ttest":
        res = experiment.cmd_ttest(cfg, args.run_a, args.run_b)
        verdict = "significant" if res.significant else "not significant"
        print(f"t = {res.t_statistic:.4f}, p = {res.p_value:.4f}, n = {res.n} ({verdict} at p < 0.05)")
    elif args.command == "sweep-k":
        out = experiment.cmd_sweep_k(cfg, args.k_values)
        print(f"sweep written: {out}")
    elif args.command == "sweep-ndocs":
        out = experiment.cmd_sweep_ndocs(cfg, args.n_values, repeats=args.repeats)
        print(f"sweep written: {out}")
    elif args.command == "export-text":
        out = experiment.cmd_export_text(cfg, args.out)
        print(f"exported: {out}")
    else:  # pragma: no cover
        raise UsageError(f"unknown command {args.command!r}")
    return 0


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return _dispatch(args)
    except UsageError as exc:
        print(f"genqe: usage error: {exc}", file=sys.stderr)
        return 1
    except DataError as exc:
        print(f"genqe: data error: {exc}", file=sys.stderr)
        return 2
    except BackendError as exc:
        print(f"genqe: backend error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
