"""Convert a whitespace-delimited plant-data .dat file to the CSV layout the
CLI reads (samples as rows, header x1..xN).

The public distribution stores the training block d00.dat as variables x
samples while every test block is samples x variables; --orientation auto
assumes 52 process variables and transposes whichever axis matches.

Example:
    python3 scripts/convert_tep_dat.py /data/tep/d00.dat /tmp/tep_train.csv
"""

import argparse
from pathlib import Path

import numpy as np


def convert(in_path: Path, out_path: Path, orientation: str,
            n_variables: int = 52) -> tuple[int, int]:
    raw = np.loadtxt(in_path)
    if raw.ndim == 1:
        raw = raw[None, :]
    if orientation == "variables-rows":
        raw = raw.T
    elif orientation == "auto":
        if raw.shape[0] == n_variables and raw.shape[1] != n_variables:
            raw = raw.T
        elif raw.shape[1] != n_variables:
            raise ValueError(
                f"neither axis of {raw.shape} matches {n_variables} variables; "
                "pass --orientation explicitly"
            )
    out_path.parent.mkdir(parents=True, exist_ok=True)
    with open(out_path, "w", encoding="utf-8") as fh:
        fh.write(",".join(f"x{i + 1}" for i in range(raw.shape[1])) + "\n")
        for row in raw:
            fh.write(",".join(repr(float(v)) for v in row) + "\n")
    return raw.shape


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("in_path", type=Path)
    parser.add_argument("out_path", type=Path)
    parser.add_argument("--orientation", default="auto",
                        choices=["auto", "samples-rows", "variables-rows"])
    parser.add_argument("--n-variables", type=int, default=52,
                        help="expected variable count for auto orientation")
    args = parser.parse_args()
    rows, cols = convert(args.in_path, args.out_path, args.orientation,
                         args.n_variables)
    print(f"wrote {args.out_path} ({rows} samples x {cols} variables)")


if __name__ == "__main__":
    main()
