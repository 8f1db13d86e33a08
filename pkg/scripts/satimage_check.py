"""Optional SmartSVM vs OvO comparison on the satimage data (not part of the test gate).

Usage: python3 scripts/satimage_check.py PATH [--seed 42] [--cv-folds 10]

PATH is either a CSV with the label in the last column or the UCI
whitespace-separated ``sat.trn``/``sat.all`` file. The data is split 70/30,
both strategies are trained on the desk C grid, and the ARI gap is compared
with the published reference gap of 0.0065 (OvO 0.7672, SmartSVM 0.7607).
"""

import argparse
import json
import sys
import time

import numpy as np

from hpber.dataset import DataError, from_arrays, load_csv, stratified_split
from hpber.metrics import adjusted_rand_index
from hpber.smartsvm import predict, predict_ovo, train, train_ovo

REFERENCE_GAP = 0.0065


def load(path):
    try:
        return load_csv(path)
    except DataError:
        raw = np.loadtxt(path)
        return from_arrays(raw[:, :-1], [str(int(v)) for v in raw[:, -1]])


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("path")
    ap.add_argument("--seed", type=int, default=42)
    ap.add_argument("--cv-folds", type=int, default=10)
    args = ap.parse_args(argv)

    ds = load(args.path)
    tr, te = stratified_split(ds, 0.7, args.seed)
    report = {"n": ds.n, "d": ds.d, "classes": ds.n_classes}
    for name, fit, pred in [("smartsvm", train, predict), ("ovo", train_ovo, predict_ovo)]:
        t0 = time.perf_counter()
        model = fit(tr, cv_k=args.cv_folds, seed=args.seed, standardize=True)
        report[name] = {"ari": adjusted_rand_index(te.labels, pred(model, te.features)),
                        "seconds": time.perf_counter() - t0}
    gap = report["ovo"]["ari"] - report["smartsvm"]["ari"]
    report["gap"] = gap
    report["reference_gap"] = REFERENCE_GAP
    report["within_0.01_of_reference"] = abs(gap - REFERENCE_GAP) <= 0.01
    json.dump(report, sys.stdout, indent=2)
    sys.stdout.write("\n")


if __name__ == "__main__":
    main()
