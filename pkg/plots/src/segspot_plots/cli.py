"""CLI: one subcommand per figure kind; schema violations exit 2 with a line number."""

from __future__ import annotations

import argparse
import sys

from .render import PlotJob, render
from .schema import SchemaError


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def build_parser():
    parser = _Parser(prog="segspot-plots",
                     description="Render figures from segspot report files.")
    sub = parser.add_subparsers(dest="kind", required=True)

    p = sub.add_parser("curves", help="metric-vs-IoU curves, one panel per metric")
    p.add_argument("reports", nargs="+", help="metric report file(s)")
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--metric", help="render only this metric")

    p = sub.add_parser("boxplot", help="IoU boxplot from segquality maxima")
    p.add_argument("maxima", help="segquality maxima file")
    p.add_argument("-o", "--output", required=True)

    p = sub.add_parser("heatmap", help="annotated independence heatmap")
    p.add_argument("matrix", help="independence matrix file")
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--title")
    p.add_argument("--cmap", default="viridis")

    p = sub.add_parser("fusion-bars", help="per-method bars with fusion gains")
    p.add_argument("reports", nargs="+", help="metric report file(s) incl. fusion rows")
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--level", type=float, help="IoU level to chart (default: highest)")
    p.add_argument("--metric", default="mAP")

    return parser


def job_from_args(args) -> PlotJob:
    if args.kind == "curves":
        options = {"metric": args.metric} if args.metric else {}
        return PlotJob("curves", tuple(args.reports), args.output, options)
    if args.kind == "boxplot":
        return PlotJob("boxplot", (args.maxima,), args.output)
    if args.kind == "heatmap":
        options = {"cmap": args.cmap}
        if args.title:
            options["title"] = args.title
        return PlotJob("heatmap", (args.matrix,), args.output, options)
    options = {"metric": args.metric}
    if args.level is not None:
        options["level"] = args.level
    return PlotJob("fusion-bars", tuple(args.reports), args.output, options)


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        out = render(job_from_args(args))
    except SchemaError as exc:
        print(f"segspot-plots: {exc}", file=sys.stderr)
        return 2
    except (OSError, ValueError) as exc:
        print(f"segspot-plots: {exc}", file=sys.stderr)
        return 2
    print(f"wrote {out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
