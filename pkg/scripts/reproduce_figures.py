"""Write the CSV and SVG data for both figures (c = 1, both branches)."""

import argparse
from pathlib import Path

from normalplanes.cli_io import write_figure


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out-dir", default="figures")
    parser.add_argument("--c", type=float, default=1.0)
    parser.add_argument("--samples", type=int, default=512)
    args = parser.parse_args()

    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for figure in (1, 2):
        for path in write_figure(figure, args.c, out, samples=args.samples):
            print(path)


if __name__ == "__main__":
    main()
