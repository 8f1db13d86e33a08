"""Batch command line: ``hpber <command> [options]``.

Exit codes: 0 success, 1 usage error, 2 data error, 3 internal invariant
violation. ``HPBER_SEED`` and ``HPBER_WORKERS`` override the seed and worker
defaults.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
import tempfile
from pathlib import Path

import numpy as np

from . import ber, oracle, smartsvm
from .dataset import DataError, LabeledDataset, load_csv, save_csv, stratified_split
from .metrics import adjusted_rand_index, confusion_rate
from .svm import DESK_C_GRID, PAPER_C_GRID
from .tree import build_class_graph, build_hierarchy

log = logging.getLogger("hpber")

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_INTERNAL = 0, 1, 2, 3
C_GRIDS = {"desk": DESK_C_GRID, "paper": PAPER_C_GRID}


class UsageError(Exception):
    pass


class InvariantError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _env_int(name: str, default: int) -> int:
    raw = os.environ.get(name)
    if raw is None:
        return default
    try:
        return int(raw)
    except ValueError:
        raise UsageError(f"{name} must be an integer, got {raw!r}") from None


class _Outputs:
    """Atomic writers; everything written is removed again if the command fails."""

    def __init__(self):
        self.written: list[Path] = []

    def _write(self, path, text: str) -> None:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
        self.written.append(path)

    def json(self, path, doc) -> None:
        self._write(path, json.dumps(doc, indent=2, allow_nan=False) + "\n")

    def text(self, path, text: str) -> None:
        self._write(path, text)

    def rows(self, path, header, rows) -> None:
        import io
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)
        self._write(path, buf.getvalue())

    def dataset(self, path, ds: LabeledDataset) -> None:
        fd, tmp = tempfile.mkstemp(dir=Path(path).parent or ".", prefix=".ds.")
        os.close(fd)
        save_csv(ds, tmp)
        os.replace(tmp, path)
        self.written.append(Path(path))

    def rollback(self) -> None:
        for p in self.written:
            p.unlink(missing_ok=True)


def _load(args) -> LabeledDataset:
    col = args.label_column
    return load_csv(args.input, int(col) if _looks_int(col) else col)


def _looks_int(s) -> bool:
    try:
        int(s)
    except (TypeError, ValueError):
        return False
    return True


def _load_features(path, drop_column=None) -> np.ndarray:
    """Numeric matrix from a CSV, optionally dropping a (label) column."""
    path = Path(path)
    if not path.is_file():
        raise DataError(f"missing file: {path}")
    with path.open(newline="", encoding="utf-8") as fh:
        rows = [r for r in csv.reader(fh) if any(c.strip() for c in r)]
    if not rows:
        raise DataError(f"empty file: {path}")
    header = None
    try:
        [float(c) for c in rows[0]]
    except ValueError:
        header, rows = rows[0], rows[1:]
    drop = None
    if drop_column is not None:
        if _looks_int(drop_column):
            drop = int(drop_column) % len(rows[0] if rows else header)
        elif header is not None and drop_column in header:
            drop = header.index(drop_column)
        else:
            raise DataError(f"column {drop_column!r} not found")
    out = []
    for r, row in enumerate(rows, start=2 if header else 1):
        try:
            out.append([float(c) for j, c in enumerate(row) if j != drop])
        except ValueError:
            raise DataError(f"non-numeric cell at line {r}") from None
    try:
        return np.array(out, dtype=np.float64)
    except ValueError:
        raise DataError("rows have differing lengths") from None


def _read_predictions(path) -> list[str]:
    path = Path(path)
    if not path.is_file():
        raise DataError(f"missing file: {path}")
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or "label" not in reader.fieldnames:
            raise DataError(f"{path} has no 'label' column")
        return [row["label"].strip() for row in reader]


def cmd_ber(args, out: _Outputs) -> None:
    ds = _load(args)
    est = ber.pairwise_ber_matrix(ds, args.n_trees, args.seed, workers=args.workers)
    out.json(args.output, ber.estimates_to_json(ds, pairwise=est, n_trees=args.n_trees))
    if args.heatmap_csv:
        M = ber.normalized_matrix(est)
        rows = [[name] + ["" if np.isnan(v) else repr(float(v)) for v in row]
                for name, row in zip(ds.label_names, M)]
        out.rows(args.heatmap_csv, ["class"] + list(ds.label_names), rows)


def cmd_ovr(args, out: _Outputs) -> None:
    ds = _load(args)
    est = ber.ovr_ber_estimates(ds, args.n_trees, args.seed)
    out.json(args.output, ber.estimates_to_json(ds, ovr=est, n_trees=args.n_trees))


def cmd_tree(args, out: _Outputs) -> None:
    ds = _load(args)
    est = ber.pairwise_ber_matrix(ds, args.n_trees, args.seed, workers=args.workers)
    tree = build_hierarchy(build_class_graph(est))
    if sorted(tree.leaves()) != list(ds.class_ids):
        raise InvariantError("tree leaves do not cover every class exactly once")
    out.json(args.output, {"classes": list(ds.label_names), "n_trees": args.n_trees,
                           "tree": tree.to_json(ds.label_names)})
    text = tree.render(ds.label_names) + "\n"
    if args.text:
        out.text(args.text, text)
    else:
        sys.stdout.write(text)


def cmd_train(args, out: _Outputs) -> None:
    ds = _load(args)
    kw = dict(c_grid=C_GRIDS[args.c_grid], cv_k=args.cv_folds, seed=args.seed,
              standardize=args.standardize, workers=args.workers)
    if args.strategy == "smartsvm":
        model = smartsvm.train(ds, n_trees=args.n_trees, **kw)
        expected = ds.n_classes - 1
    elif args.strategy == "ovo":
        model = smartsvm.train_ovo(ds, **kw)
        expected = ds.n_classes * (ds.n_classes - 1) // 2
    else:
        model = smartsvm.train_ovr(ds, **kw)
        expected = ds.n_classes
    n_models = len(getattr(model, "node_models", None) or model.models)
    if n_models != expected:
        raise InvariantError(f"{args.strategy} produced {n_models} models, expected {expected}")
    for key, seconds in model.timing.items():
        log.info("%s: %.3f", key, seconds)
    doc = model.to_json()
    if not args.record_timing:
        doc.pop("timing")
    out.json(args.output, doc)


def cmd_predict(args, out: _Outputs) -> None:
    try:
        doc = json.loads(Path(args.model).read_text(encoding="utf-8"))
        model = smartsvm.model_from_json(doc)
    except FileNotFoundError:
        raise DataError(f"missing file: {args.model}") from None
    except (ValueError, KeyError) as exc:
        raise DataError(f"unreadable model: {exc}") from None
    X = _load_features(args.input, args.label_column)
    if X.ndim != 2 or X.shape[1] != model.n_features:
        raise DataError(f"model expects {model.n_features} features, input has "
                        f"{X.shape[1] if X.ndim == 2 else 0}")
    pred = smartsvm.predict_any(model, X)
    out.rows(args.output, ["label"], [[model.label_names[k - 1]] for k in pred])


def cmd_eval(args, out: _Outputs) -> None:
    col = args.label_column
    truth = load_csv(args.truth, int(col) if _looks_int(col) else col)
    y = [truth.name_of(int(k)) for k in truth.labels]
    y_hat = _read_predictions(args.predictions)
    if len(y) != len(y_hat):
        raise DataError(f"{len(y)} true labels but {len(y_hat)} predictions")
    classes = list(dict.fromkeys(y))
    out.json(args.output, {
        "n": len(y),
        "ari": adjusted_rand_index(y, y_hat),
        "accuracy": float(np.mean(np.asarray(y) == np.asarray(y_hat))),
        "confusion_rate": {k: confusion_rate(y, y_hat, k) for k in classes},
    })


def cmd_synth(args, out: _Outputs) -> None:
    priors = [float(p) for p in args.priors.split(",")]
    if len(priors) == 1:
        priors.append(1.0 - priors[0])
    if any(p <= 0 for p in priors) or abs(sum(priors) - 1.0) > 1e-9:
        raise UsageError("priors must be positive and sum to 1")
    specs = []
    for k, p in enumerate(priors):
        mean = np.zeros(args.d)
        mean[0] = k * args.delta * args.sigma
        specs.append(oracle.GaussianSpec(mean, args.sigma, p))
    ds = oracle.sample_gaussian_mixture(specs, args.d, args.n, args.seed)
    out.dataset(args.output, ds)
    pairs = []
    for a in range(len(specs)):
        for b in range(a + 1, len(specs)):
            q = specs[a].prior + specs[b].prior
            s1 = oracle.GaussianSpec(specs[a].mean, args.sigma, specs[a].prior / q)
            s2 = oracle.GaussianSpec(specs[b].mean, args.sigma, 1.0 - specs[a].prior / q)
            pairs.append({"classes": [ds.label_names[a], ds.label_names[b]],
                          "ber": oracle.gaussian_ber(s1, s2),
                          "bhattacharyya": oracle.gaussian_bhattacharyya(s1, s2)})
    if args.json:
        out.json(args.json, {"priors": priors, "delta": args.delta, "sigma": args.sigma,
                             "d": args.d, "n": args.n, "seed": args.seed,
                             "counts": ds.counts.tolist(), "pairs": pairs})


def cmd_split(args, out: _Outputs) -> None:
    ds = _load(args)
    train, test = stratified_split(ds, args.train_fraction, args.seed)
    out.dataset(args.train, train)
    out.dataset(args.test, test)


def run_props(seed: int = 0, scale: float = 1.0) -> dict:
    n = lambda k: max(1, int(k * scale))
    checks = {
        "theorem2_sandwich": oracle.theorem2_sweep(n(1000), seed),
        "js_vs_hp_equal_priors": oracle.js_sweep(n(1000), seed),
        "lemma_inequality": oracle.lemma_sweep(n(10**5), seed),
        "ovr_ber_bounds": oracle.ovr_sweep(n(500), seed),
        "bhattacharyya_bound": oracle.bhattacharyya_sweep(n(1000), seed),
    }
    return {name: {"violations": int(v), "pass": v == 0} for name, v in checks.items()}


def cmd_props(args, out: _Outputs) -> None:
    report = run_props(args.seed, args.scale)
    report = {"seed": args.seed, "checks": report,
              "pass": all(c["pass"] for c in report.values())}
    out.json(args.output, report)
    if not report["pass"]:
        failed = [k for k, c in report["checks"].items() if not c["pass"]]
        raise InvariantError(f"property sweeps failed: {', '.join(failed)}")


def build_parser() -> argparse.ArgumentParser:
    seed = _env_int("HPBER_SEED", 42)
    workers = _env_int("HPBER_WORKERS", os.cpu_count() or 1)
    fmt = argparse.ArgumentDefaultsHelpFormatter
    parser = _Parser(prog="hpber", description=__doc__.splitlines()[0], formatter_class=fmt)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def command(name, func, help, data=True):
        p = sub.add_parser(name, help=help, description=help, formatter_class=fmt)
        p.set_defaults(func=func)
        p.add_argument("--seed", type=int, default=seed, help="random seed")
        p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
        if data:
            p.add_argument("input", help="CSV dataset")
            p.add_argument("--label-column", default="-1",
                           help="label column name or 0-based index")
        return p

    def estimation(p):
        p.add_argument("--n-trees", type=int, default=3, help="orthogonal MSTs to average")
        p.add_argument("--workers", type=int, default=workers, help="parallel workers")

    p = command("ber", cmd_ber, "pairwise BER estimate matrix")
    estimation(p)
    p.add_argument("-o", "--output", required=True, help="JSON output")
    p.add_argument("--heatmap-csv", default=None, help="also write a normalized-estimate grid")

    p = command("ovr", cmd_ovr, "one-vs-rest BER estimate per class")
    estimation(p)
    p.add_argument("-o", "--output", required=True, help="JSON output")

    p = command("tree", cmd_tree, "min-cut classification tree")
    estimation(p)
    p.add_argument("-o", "--output", required=True, help="JSON output")
    p.add_argument("--text", default=None, help="text rendering output (default: stdout)")

    p = command("train", cmd_train, "train a multiclass linear SVM")
    estimation(p)
    p.add_argument("-o", "--output", required=True, help="model JSON output")
    p.add_argument("--strategy", choices=["smartsvm", "ovo", "ovr"], default="smartsvm",
                   help="multiclass strategy")
    p.add_argument("--cv-folds", type=int, default=10, help="folds for selecting C")
    p.add_argument("--c-grid", choices=sorted(C_GRIDS), default="desk",
                   help="desk: 2^-6..2^6, paper: 2^-18..2^18 (even exponents)")
    p.add_argument("--standardize", action="store_true", help="z-score features first")
    p.add_argument("--record-timing", action="store_true",
                   help="store wall times in the model (makes output non-reproducible)")

    p = command("predict", cmd_predict, "predict labels with a trained model", data=False)
    p.add_argument("model", help="model JSON")
    p.add_argument("input", help="CSV of features")
    p.add_argument("--drop-column", dest="label_column", default=None,
                   help="column to ignore in the input (e.g. the true labels)")
    p.add_argument("-o", "--output", required=True, help="CSV output with a 'label' column")

    p = command("eval", cmd_eval, "ARI and per-class confusion rates", data=False)
    p.add_argument("truth", help="CSV holding the true labels")
    p.add_argument("predictions", help="CSV with a 'label' column")
    p.add_argument("--label-column", default="-1", help="label column in the truth CSV")
    p.add_argument("-o", "--output", required=True, help="JSON output")

    p = command("synth", cmd_synth, "sample spherical Gaussian classes", data=False)
    p.add_argument("--priors", default="0.15,0.85", help="comma-separated class priors")
    p.add_argument("--delta", type=float, default=2.0,
                   help="separation of consecutive class means in units of sigma")
    p.add_argument("--n", type=int, default=1000, help="total samples")
    p.add_argument("--d", type=int, default=2, help="dimension")
    p.add_argument("--sigma", type=float, default=1.0, help="spherical standard deviation")
    p.add_argument("-o", "--output", required=True, help="CSV output")
    p.add_argument("--json", default=None, help="exact BER / Bhattacharyya JSON output")

    p = command("split", cmd_split, "stratified train/test split")
    p.add_argument("--train-fraction", type=float, default=0.7, help="training share")
    p.add_argument("--train", required=True, help="training CSV output")
    p.add_argument("--test", required=True, help="test CSV output")

    p = command("props", cmd_props, "run the exact-oracle property sweeps", data=False)
    p.add_argument("--scale", type=float, default=1.0, help="multiplier on sweep sizes")
    p.add_argument("-o", "--output", required=True, help="JSON report")
    return parser


def _fail(code: int, kind: str, message: str) -> int:
    print(f"error code={code} kind={kind} message={json.dumps(str(message))}", file=sys.stderr)
    return code


def main(argv=None) -> int:
    out = _Outputs()
    try:
        args = build_parser().parse_args(argv)
        logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                            format="%(name)s: %(message)s")
        args.func(args, out)
        return EXIT_OK
    except UsageError as exc:
        out.rollback()
        return _fail(EXIT_USAGE, "usage", exc)
    except (DataError, OSError) as exc:
        out.rollback()
        return _fail(EXIT_DATA, "data", exc)
    except InvariantError as exc:
        out.rollback()
        return _fail(EXIT_INTERNAL, "invariant", exc)
    except ValueError as exc:
        out.rollback()
        return _fail(EXIT_DATA, "data", exc)
    except Exception as exc:  # noqa: BLE001
        out.rollback()
        return _fail(EXIT_INTERNAL, "internal", f"{type(exc).__name__}: {exc}")


if __name__ == "__main__":
    sys.exit(main())
