"""arctomo-plot: render arctomo output files into figures.

    arctomo-plot --kind measurement_rose --in measurement.csv --out rose.png
    arctomo-plot --kind heatmap --in f_hat.bin --out f_hat.png
    arctomo-plot --kind section --in section.csv [--truth other.csv] --out s.png
"""

from __future__ import annotations

import argparse
import sys

from . import readers, render


def main(argv=None) -> int:
    p = argparse.ArgumentParser(prog="arctomo-plot", description=__doc__)
    p.add_argument("--kind", required=True,
                   choices=["measurement_rose", "heatmap", "section"])
    p.add_argument("--in", dest="inp", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--scale", type=float, default=2.0,
                   help="rose curve scale factor")
    p.add_argument("--subsample", type=int, default=4,
                   help="plot every n-th rose curve")
    p.add_argument("--truth", default=None,
                   help="optional second section CSV to overlay")
    p.add_argument("--cmap", default="viridis")
    args = p.parse_args(argv)

    if args.kind == "measurement_rose":
        meas = readers.read_measurement(args.inp)
        render.plot_measurement_rose(meas, args.out, scale=args.scale,
                                     subsample=args.subsample)
    elif args.kind == "heatmap":
        render.plot_heatmap(readers.read_field(args.inp), args.out,
                            cmap=args.cmap)
    else:
        t, vals = readers.read_section(args.inp)
        truth = None
        if args.truth:
            _, truth = readers.read_section(args.truth)
        render.plot_section(t, vals, args.out, truth=truth)
    print(f"wrote {args.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
