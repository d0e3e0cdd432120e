#!/usr/bin/env python3
"""Convert the corn benchmark's corn.mat into the CSV layout the importer
expects: m5spec.csv, mp5spec.csv, mp6spec.csv (80 x 700 spectra) and
propvals.csv (80 x 4 reference values)."""

import argparse
import os
import sys

import numpy as np
import scipy.io as sio

EXPECTED = {
    "m5spec": (80, 700),
    "mp5spec": (80, 700),
    "mp6spec": (80, 700),
    "propvals": (80, 4),
}


def extract(obj):
    """Pull the numeric matrix out of a loadmat value. The file stores MATLAB
    dataset objects, so the array may hide behind a .data field or inside an
    object array."""
    if isinstance(obj, np.ndarray) and obj.dtype != object:
        return np.asarray(obj, dtype=float)
    data = getattr(obj, "data", None)
    if data is not None:
        return extract(data)
    if isinstance(obj, np.ndarray) and obj.dtype == object:
        for item in obj.ravel():
            try:
                return extract(item)
            except ValueError:
                continue
    raise ValueError(f"no numeric payload in {type(obj)!r}")


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("mat", help="path to corn.mat")
    parser.add_argument("--out-dir", default=".", help="directory for the CSV files")
    args = parser.parse_args()

    raw = sio.loadmat(args.mat, squeeze_me=True, struct_as_record=False)
    os.makedirs(args.out_dir, exist_ok=True)
    for name, shape in EXPECTED.items():
        if name not in raw:
            sys.exit(f"{args.mat}: variable {name!r} not found")
        try:
            data = extract(raw[name])
        except ValueError as e:
            sys.exit(f"{name}: {e}")
        if data.shape != shape:
            sys.exit(f"{name}: expected shape {shape}, got {data.shape}")
        path = os.path.join(args.out_dir, f"{name}.csv")
        np.savetxt(path, data, fmt="%.17g", delimiter=",")
        print(f"wrote {path}")


if __name__ == "__main__":
    main()
