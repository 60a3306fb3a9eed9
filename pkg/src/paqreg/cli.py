"""Command-line surface.

Every command reads an optional JSON config file, applies flag overrides on
top, and echoes the effective config into its JSON output so a run can be
reproduced exactly. Seed precedence: PAQREG_SEED env var, then --seed, then
the config file, then 0. Exit codes: 0 ok, 2 input error, 3 numeric failure.
"""

from __future__ import annotations

import argparse
import csv
import os
import sys
from pathlib import Path

import numpy as np

from . import chem, ingest, synth
from .errors import InputError, NumericError
from .jsonio import dumps, read_json, write_json
from .models import (
    GradientBoosting,
    HybridModel,
    HybridSpec,
    Mlp,
    RandomForest,
    VotingEnsemble,
    hybrid_param_count,
    load_model,
    save_model,
    select_features,
)
from .qsim import generate_circuit, grad_adjoint, grad_param_shift, run_circuit
from .train import TrainConfig, all_metrics, cross_validate, fit_any

_UNSET = object()


class _Options:
    """Layered option lookup: flags override the config file, which
    overrides defaults. The seed additionally honors PAQREG_SEED."""

    def __init__(self, args: argparse.Namespace):
        self.args = args
        self.file: dict = {}
        config_path = getattr(args, "config", None)
        if config_path:
            data = read_json(config_path)
            if not isinstance(data, dict):
                raise InputError("config file must hold a JSON object")
            self.file = data
        self.effective: dict = {}

    def get(self, key: str, default):
        value = getattr(self.args, key.replace("-", "_"), None)
        if value is None:
            value = self.file.get(key, default)
        self.effective[key] = value
        return value

    def seed(self) -> int:
        env = os.environ.get("PAQREG_SEED")
        if env is not None:
            try:
                value = int(env)
            except ValueError:
                raise InputError(f"PAQREG_SEED must be an integer, got {env!r}") from None
        else:
            value = self.get("seed", 0)
        self.effective["seed"] = value
        return value

    def threads(self) -> int:
        value = self.get("threads", os.cpu_count() or 1)
        if value < 1:
            raise InputError("threads must be at least 1")
        return value


def _write_output(path: str | None, payload: dict) -> None:
    text = dumps(payload)
    if path:
        Path(path).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _load_table(path: str):
    records, features = ingest.read_dataset(path)
    return records, features


def _prepare(opts: _Options, path: str):
    """Shared pipeline head: read, curate, filter. Returns records, matrix,
    target vector, and the filter log."""
    records, features = _load_table(path)
    tolerance = opts.get("stereo-tolerance", 1.0)
    curated, report = ingest.curate(records, stereo_tolerance=tolerance)
    kept = ingest.FeatureMatrix(
        features.column_names, features.values[report.kept_input_indices]
    )
    corr = opts.get("corr-threshold", 0.9)
    var = opts.get("var-threshold", 1e-8)
    filtered, filter_log = ingest.filter_features(kept, corr_threshold=corr, var_threshold=var)
    y = np.asarray([r.pa for r in curated])
    return curated, filtered, y, report, filter_log


def _train_config(opts: _Options, seed: int) -> TrainConfig:
    return TrainConfig(
        epochs=opts.get("epochs", 200),
        batch_size=opts.get("batch-size", 32),
        lr=opts.get("lr", 1e-3),
        optimizer=opts.get("optimizer", "adam"),
        momentum=opts.get("momentum", 0.0),
        seed=seed,
        patience=opts.get("patience", None),
    )


def _rank_columns(X: np.ndarray, y: np.ndarray, seed: int) -> np.ndarray:
    """Importance order (best first) from a boosted-tree fit."""
    ranker = GradientBoosting(seed=seed)
    ranker.fit(X, y)
    return np.argsort(-ranker.feature_importances(), kind="stable")


def _make_model(kind: str, opts: _Options, seed: int, n_features: int):
    if kind == "gbdt":
        return GradientBoosting(
            n_trees=opts.get("trees", 200),
            learning_rate=opts.get("tree-lr", 0.1),
            max_depth=opts.get("depth", 3),
            min_samples_leaf=opts.get("min-leaf", 2),
            seed=seed,
        )
    if kind == "rf":
        return RandomForest(
            n_trees=opts.get("trees", 100),
            max_depth=opts.get("depth", 16),
            min_samples_leaf=opts.get("min-leaf", 2),
            feature_fraction=opts.get("feature-fraction", 1.0 / 3.0),
            seed=seed,
        )
    if kind == "mlp":
        return Mlp(n_features, seed=seed)
    if kind == "hybrid":
        spec = HybridSpec(
            n_qubits=opts.get("qubits", 8),
            n_circuits=opts.get("sub-encoders", 4),
            features_per_circuit=opts.get("features-per-qc", 16),
            params_per_circuit=opts.get("params-per-qc", 40),
            seed=seed,
        )
        return HybridModel(spec)
    if kind == "voting":
        return VotingEnsemble(
            [
                ("gbdt", _make_model("gbdt", opts, seed, n_features), 1.5),
                ("rf", _make_model("rf", opts, seed + 1, n_features), 1.0),
            ]
        )
    raise InputError(f"unknown model kind {kind!r}")


def _hybrid_width(opts: _Options) -> int:
    return opts.get("sub-encoders", 4) * opts.get("features-per-qc", 16)


def cmd_curate(args: argparse.Namespace) -> int:
    opts = _Options(args)
    opts.seed()
    records, features = _load_table(args.input)
    if not records:
        print("warning: input has no data rows", file=sys.stderr)
    tolerance = opts.get("stereo-tolerance", 1.0)
    curated, report = ingest.curate(records, stereo_tolerance=tolerance)
    kept = ingest.FeatureMatrix(
        features.column_names, features.values[report.kept_input_indices]
    )
    ingest.write_dataset(args.out, curated, kept)
    payload = report.as_dict()
    payload["config"] = dict(opts.effective, input=args.input, out=args.out)
    _write_output(args.report, payload)
    return 0


def cmd_cluster(args: argparse.Namespace) -> int:
    opts = _Options(args)
    opts.seed()
    ids, prints = chem.read_fingerprints(args.input)
    threshold = opts.get("threshold", 0.7)
    result = chem.butina_cluster(prints, threshold)
    if len(prints) >= 2:
        sim_mean, sim_std = chem.mean_pairwise_similarity(prints)
    else:
        sim_mean = sim_std = None
    payload = {
        "n_items": len(prints),
        "n_clusters": len(result.clusters),
        "singleton_count": result.singleton_count,
        "mean_similarity": sim_mean,
        "std_similarity": sim_std,
        "clusters": [[ids[i] for i in members] for members in result.clusters],
        "config": dict(opts.effective, input=args.input),
    }
    _write_output(args.out, payload)
    return 0


def cmd_select(args: argparse.Namespace) -> int:
    opts = _Options(args)
    seed = opts.seed()
    _, filtered, y, _, _ = _prepare(opts, args.input)
    cfg = _train_config(opts, seed)
    n_trees = opts.get("eval-trees", 60)
    depth = opts.get("depth", 3)

    def factory(fold_seed: int):
        return GradientBoosting(n_trees=n_trees, max_depth=depth, seed=fold_seed)

    result = select_features(
        filtered.values,
        y,
        filtered.column_names,
        factory,
        cfg,
        n_folds=opts.get("folds", 5),
        n_iterations=opts.get("iterations", 1),
        seed=seed,
        tolerance=opts.get("tolerance", 0.02),
        threads=opts.threads(),
    )
    payload = {
        "retained": list(result.retained),
        "retained_ranked": list(result.retained_ranked),
        "ranking": list(result.ranking),
        "history": [dict(h) for h in result.history],
        "config": dict(opts.effective, input=args.input),
    }
    _write_output(args.out, payload)
    return 0


def _ranked_matrix(opts: _Options, filtered, y, seed, width):
    """Top `width` columns in importance order, as the hybrid consumes them."""
    normed = ingest.apply_normalizer(filtered, ingest.fit_normalizer(filtered, np.arange(filtered.n_rows)))
    order = _rank_columns(normed.values, y, seed)
    if width > filtered.n_cols:
        raise InputError(
            f"model needs {width} features, only {filtered.n_cols} available"
        )
    cols = order[:width]
    names = tuple(filtered.column_names[j] for j in cols)
    return ingest.FeatureMatrix(names, filtered.values[:, cols])


def cmd_train(args: argparse.Namespace) -> int:
    opts = _Options(args)
    seed = opts.seed()
    kind = opts.get("model", "gbdt")
    _, filtered, y, _, _ = _prepare(opts, args.input)

    if kind == "hybrid":
        matrix = _ranked_matrix(opts, filtered, y, seed, _hybrid_width(opts))
    else:
        matrix = filtered
    stats = ingest.fit_normalizer(matrix, np.arange(matrix.n_rows))
    normed = ingest.apply_normalizer(matrix, stats)

    model = _make_model(kind, opts, seed, matrix.n_cols)
    cfg = _train_config(opts, seed)
    trace = fit_any(model, normed.values, y, cfg)

    train_metrics = all_metrics(y, model.predict(normed.values))
    payload = {
        "model": kind,
        "n_rows": matrix.n_rows,
        "n_features": matrix.n_cols,
        "train_metrics": train_metrics,
        "config": dict(opts.effective, input=args.input, checkpoint=args.out),
    }
    if trace is not None:
        payload["epochs_run"] = trace.n_epochs
        payload["final_loss"] = trace.epoch_losses[-1]
    if kind == "voting":
        print("note: voting ensembles are not checkpointable; metrics only", file=sys.stderr)
    else:
        save_model(args.out, model, stats, matrix.column_names, opts.effective)
    _write_output(args.report, payload)
    return 0


def cmd_cv(args: argparse.Namespace) -> int:
    opts = _Options(args)
    seed = opts.seed()
    kind = opts.get("model", "gbdt")
    _, filtered, y, _, _ = _prepare(opts, args.input)

    if kind == "hybrid":
        matrix = _ranked_matrix(opts, filtered, y, seed, _hybrid_width(opts))
    else:
        matrix = filtered

    n_folds = opts.get("folds", 5)
    n_iterations = opts.get("iterations", 20)
    fold_plan = ingest.make_folds(matrix.n_rows, n_folds, n_iterations, seed)
    cfg = _train_config(opts, seed)

    def factory(fold_seed: int):
        return _make_model(kind, opts, fold_seed, matrix.n_cols)

    summary = cross_validate(
        factory, matrix.values, y, fold_plan, cfg, threads=opts.threads()
    )
    payload = summary.as_dict()
    payload["model"] = kind
    payload["config"] = dict(opts.effective, input=args.input)
    _write_output(args.out, payload)
    if args.csv:
        with Path(args.csv).open("w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(
                ["model", "r2_mean", "r2_std", "mae_mean", "mae_std", "rmse_mean", "rmse_std"]
            )
            writer.writerow(
                [
                    kind,
                    repr(summary.r2_mean),
                    repr(summary.r2_std),
                    repr(summary.mae_mean),
                    repr(summary.mae_std),
                    repr(summary.rmse_mean),
                    repr(summary.rmse_std),
                ]
            )
    return 0


def cmd_predict(args: argparse.Namespace) -> int:
    opts = _Options(args)
    opts.seed()
    model, stats, feature_names, _ = load_model(args.checkpoint)
    records, features = _load_table(args.input)
    missing = [n for n in feature_names if n not in features.column_names]
    if missing:
        raise InputError(f"input is missing model feature column(s) {missing}")
    index = {n: i for i, n in enumerate(features.column_names)}
    cols = [index[n] for n in feature_names]
    X = features.values[:, cols]
    if stats is not None:
        X = (X - stats.means) / stats.stds
    preds = model.predict(X)
    y = np.asarray([r.pa for r in records])
    payload = {
        "predictions": [
            {"id": rec.id, "prediction": float(p)} for rec, p in zip(records, preds)
        ],
        "config": dict(opts.effective, checkpoint=args.checkpoint, input=args.input),
    }
    if len(records) >= 2 and float(np.std(y)) > 0:
        payload["metrics"] = all_metrics(y, preds)
    _write_output(args.out, payload)
    return 0


def cmd_params(args: argparse.Namespace) -> int:
    opts = _Options(args)
    qubits = opts.get("qubits", 8)
    k = opts.get("sub-encoders", 4)
    ppqc = opts.get("params-per-qc", 40)
    total = hybrid_param_count(qubits, k, ppqc)
    print(total)
    if args.out:
        _write_output(
            args.out,
            {
                "total_params": total,
                "circuit_params": k * ppqc,
                "head_params": total - k * ppqc,
                "config": dict(opts.effective),
            },
        )
    return 0


def cmd_gradcheck(args: argparse.Namespace) -> int:
    opts = _Options(args)
    seed = opts.seed()
    qubits = opts.get("qubits", 4)
    n_params = opts.get("params", 12)
    n_features = opts.get("features", qubits)
    h = opts.get("h", 1e-4)

    spec = generate_circuit(qubits, n_features, n_params, seed)
    rng = np.random.default_rng(seed)
    features = rng.uniform(-np.pi, np.pi, size=n_features)
    params = rng.uniform(-np.pi, np.pi, size=n_params)

    shift = grad_param_shift(spec, features, params)
    adjoint = grad_adjoint(spec, features, params)
    fd = np.zeros_like(shift)
    for p in range(n_params):
        bumped = params.copy()
        bumped[p] += h
        e_plus = run_circuit(spec, features, bumped)
        bumped[p] -= 2 * h
        e_minus = run_circuit(spec, features, bumped)
        fd[:, p] = (e_plus - e_minus) / (2 * h)

    dev_fd = float(np.max(np.abs(shift - fd))) if n_params else 0.0
    dev_adj = float(np.max(np.abs(shift - adjoint))) if n_params else 0.0
    payload = {
        "max_dev_shift_vs_fd": dev_fd,
        "max_dev_adjoint_vs_shift": dev_adj,
        "tol_fd": 1e-6,
        "tol_adjoint": 1e-10,
        "config": dict(opts.effective),
    }
    _write_output(args.out, payload)
    if dev_fd >= 1e-6 or dev_adj >= 1e-10:
        print(
            f"gradient check failed: shift-vs-fd {dev_fd:.3e}, adjoint-vs-shift {dev_adj:.3e}",
            file=sys.stderr,
        )
        return 3
    return 0


def cmd_gen_data(args: argparse.Namespace) -> int:
    opts = _Options(args)
    seed = opts.seed()
    records, features = synth.make_dataset(
        n_rows=opts.get("rows", 1000),
        n_features=opts.get("features", 186),
        n_informative=opts.get("informative", 64),
        seed=seed,
    )
    ingest.write_dataset(args.out, records, features)
    if args.fingerprints:
        ids, prints = synth.make_fingerprints(
            n_items=opts.get("fp-items", 60),
            width=opts.get("fp-width", 512),
            seed=seed,
        )
        chem.write_fingerprints(args.fingerprints, ids, prints)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="paqreg",
        description="Molecular property regression with classical and hybrid quantum models.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--config", help="JSON config file; flags override its values")
        p.add_argument("--seed", type=int, help="global RNG seed (PAQREG_SEED overrides)")
        p.add_argument("--threads", type=int, help="worker threads for CV evaluations")

    p = sub.add_parser("curate", help="apply element filter and stereo merging")
    common(p)
    p.add_argument("input")
    p.add_argument("--out", required=True, help="curated CSV path")
    p.add_argument("--report", help="JSON report path (stdout when omitted)")
    p.add_argument("--stereo-tolerance", type=float)
    p.set_defaults(func=cmd_curate)

    p = sub.add_parser("cluster", help="Butina clustering over a fingerprint file")
    common(p)
    p.add_argument("input")
    p.add_argument("--out", help="JSON output path (stdout when omitted)")
    p.add_argument("--threshold", type=float)
    p.set_defaults(func=cmd_cluster)

    p = sub.add_parser("select", help="backward feature elimination by CV error")
    common(p)
    p.add_argument("input")
    p.add_argument("--out", help="JSON output path (stdout when omitted)")
    p.add_argument("--tolerance", type=float)
    p.add_argument("--folds", type=int)
    p.add_argument("--iterations", type=int)
    p.add_argument("--eval-trees", type=int)
    p.add_argument("--depth", type=int)
    p.add_argument("--stereo-tolerance", type=float)
    p.add_argument("--corr-threshold", type=float)
    p.add_argument("--var-threshold", type=float)
    p.set_defaults(func=cmd_select)

    def model_flags(p: argparse.ArgumentParser) -> None:
        p.add_argument("--model", choices=["gbdt", "rf", "mlp", "hybrid", "voting"])
        p.add_argument("--trees", type=int)
        p.add_argument("--depth", type=int)
        p.add_argument("--min-leaf", type=int)
        p.add_argument("--tree-lr", type=float)
        p.add_argument("--feature-fraction", type=float)
        p.add_argument("--qubits", type=int)
        p.add_argument("--sub-encoders", type=int)
        p.add_argument("--features-per-qc", type=int)
        p.add_argument("--params-per-qc", type=int)
        p.add_argument("--epochs", type=int)
        p.add_argument("--batch-size", type=int)
        p.add_argument("--lr", type=float)
        p.add_argument("--optimizer", choices=["adam", "sgd"])
        p.add_argument("--patience", type=int)
        p.add_argument("--stereo-tolerance", type=float)
        p.add_argument("--corr-threshold", type=float)
        p.add_argument("--var-threshold", type=float)

    p = sub.add_parser("train", help="fit one model on a dataset and checkpoint it")
    common(p)
    model_flags(p)
    p.add_argument("input")
    p.add_argument("--out", required=True, help="checkpoint JSON path")
    p.add_argument("--report", help="JSON report path (stdout when omitted)")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("cv", help="repeated k-fold evaluation")
    common(p)
    model_flags(p)
    p.add_argument("input")
    p.add_argument("--out", help="JSON output path (stdout when omitted)")
    p.add_argument("--csv", help="also write a one-row summary CSV table")
    p.add_argument("--folds", type=int)
    p.add_argument("--iterations", type=int)
    p.set_defaults(func=cmd_cv)

    p = sub.add_parser("predict", help="apply a checkpoint to new rows")
    common(p)
    p.add_argument("checkpoint")
    p.add_argument("input")
    p.add_argument("--out", help="JSON output path (stdout when omitted)")
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("params", help="trainable-parameter count for a hybrid layout")
    common(p)
    p.add_argument("--qubits", type=int)
    p.add_argument("--sub-encoders", type=int)
    p.add_argument("--params-per-qc", type=int)
    p.add_argument("--out", help="optional JSON output path")
    p.set_defaults(func=cmd_params)

    p = sub.add_parser("gradcheck", help="compare the three gradient routes")
    common(p)
    p.add_argument("--qubits", type=int)
    p.add_argument("--params", type=int)
    p.add_argument("--features", type=int)
    p.add_argument("--h", type=float)
    p.add_argument("--out", help="JSON output path (stdout when omitted)")
    p.set_defaults(func=cmd_gradcheck)

    p = sub.add_parser("gen-data", help="write the bundled synthetic dataset")
    common(p)
    p.add_argument("--out", required=True, help="dataset CSV path")
    p.add_argument("--rows", type=int)
    p.add_argument("--features", type=int)
    p.add_argument("--informative", type=int)
    p.add_argument("--fingerprints", help="also write synthetic fingerprints here")
    p.add_argument("--fp-items", type=int)
    p.add_argument("--fp-width", type=int)
    p.set_defaults(func=cmd_gen_data)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except NumericError as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return 3
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
