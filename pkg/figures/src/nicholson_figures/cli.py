"""Command line: nicholson-figures <kind> <in.csv> [<in2.csv>] <out.png> [--xlim a b]"""

from __future__ import annotations

import argparse
import sys

import matplotlib.pyplot as plt

from .render import EXPECTED_HEADERS, FigureDataError, FigureJob, render


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="nicholson-figures",
        description="Render simulation CSVs to 1200x800 PNG images",
    )
    parser.add_argument("kind", choices=sorted(EXPECTED_HEADERS))
    parser.add_argument("files", nargs="+", help="input CSV(s) followed by the output image path")
    parser.add_argument("--xlim", nargs=2, type=float, metavar=("A", "B"),
                        help="x-axis window, e.g. --xlim 800 1000")
    args = parser.parse_args(argv)

    if len(args.files) < 2:
        parser.error("need at least one input CSV and the output image path")
    inputs = tuple(args.files[:-1])
    output = args.files[-1]

    try:
        job = FigureJob(
            kind=args.kind,
            inputs=inputs,
            output=output,
            xlim=tuple(args.xlim) if args.xlim else None,
        )
        fig = render(job)
        plt.close(fig)
    except (FigureDataError, ValueError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 1
    sys.stdout.write(f"wrote {output}\n")
    return 0


if __name__ == "__main__":
    sys.exit(main())
