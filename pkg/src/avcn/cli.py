"""Command line entry point: ``avcn prepare|train|report``.

Exit codes: 0 success, 1 usage error, 2 data error, 3 numerical error.
"""

from __future__ import annotations

import argparse
import logging
import sys

from .errors import DataError, InvalidParameter, NumericalError
from .harness import RunConfig, prepare, read_report, report_path, report_render, run_cv

EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 1, 2, 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _int_list(text):
    try:
        return tuple(int(x) for x in text.replace(",", " ").split())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def _add_config_flags(p):
    d = RunConfig.__dataclass_fields__
    p.add_argument("--dataset-dir", default=d["dataset_dir"].default)
    p.add_argument("--dataset", default=d["dataset"].default)
    p.add_argument("--prototypes", type=int, default=d["prototypes"].default, help="M")
    p.add_argument("--depth", type=int, default=d["depth"].default, help="largest expansion layer L")
    p.add_argument("--channels", type=int, default=d["channels"].default)
    p.add_argument("--filter-sizes", type=_int_list, default=d["filter_sizes"].default)
    p.add_argument("--layers-per-branch", type=int, default=d["layers_per_branch"].default)
    p.add_argument("--dense-units", type=int, default=d["dense_units"].default)
    p.add_argument("--dropout", type=float, default=d["dropout_rate"].default)
    p.add_argument("--lr", type=float, default=d["lr"].default)
    p.add_argument("--epochs", type=int, default=d["epochs"].default)
    p.add_argument("--batch-size", type=int, default=d["batch_size"].default)
    p.add_argument("--folds", type=int, default=d["folds"].default)
    p.add_argument("--seed", type=int, default=d["seed"].default)
    p.add_argument("--repeats", type=int, default=d["repeats"].default)
    p.add_argument("--out", default=d["out"].default)


def _config(args) -> RunConfig:
    return RunConfig(
        dataset_dir=args.dataset_dir, dataset=args.dataset, prototypes=args.prototypes,
        depth=args.depth, channels=args.channels, filter_sizes=args.filter_sizes,
        layers_per_branch=args.layers_per_branch, dense_units=args.dense_units,
        dropout_rate=args.dropout, lr=args.lr, epochs=args.epochs,
        batch_size=args.batch_size, folds=args.folds, seed=args.seed,
        repeats=args.repeats, out=args.out,
    )


def build_parser():
    parser = _Parser(prog="avcn", description="Aligned vertex convolutional networks")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    p = sub.add_parser("prepare", help="compute and cache aligned grids")
    _add_config_flags(p)
    p = sub.add_parser("train", help="run cross-validation and write a report")
    _add_config_flags(p)
    p = sub.add_parser("report", help="print a written report")
    p.add_argument("path", nargs="?", help="report file (default: derived from --out/--dataset)")
    p.add_argument("--dataset", default=RunConfig.dataset)
    p.add_argument("--out", default=RunConfig.out)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse usage errors and --help
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "report":
            path = args.path or report_path(RunConfig(dataset=args.dataset, out=args.out))
            sys.stdout.write(report_render(read_report(path)))
            return 0
        config = _config(args)
        if args.command == "prepare":
            cache = prepare(config)
            print(f"{cache.grids.shape[0]} grids of shape {cache.grids.shape[1]}x{cache.grids.shape[2]}"
                  f" (hash {cache.config_hash[:12]})")
        else:
            report = run_cv(config)
            sys.stdout.write(report_render(report))
    except InvalidParameter as exc:
        print(f"avcn: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DataError, OSError) as exc:
        print(f"avcn: {exc}", file=sys.stderr)
        return EXIT_DATA
    except NumericalError as exc:
        print(f"avcn: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    return 0


if __name__ == "__main__":
    sys.exit(main())
