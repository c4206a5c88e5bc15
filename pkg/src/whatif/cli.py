"""Command-line pipeline: synth, train, evaluate, explain, serve.

Every run writes a manifest JSON capturing the resolved arguments, seeds,
a config hash, and the package version; rerunning a command with
`--config <manifest>` reproduces its outputs byte-identically apart from
manifest timestamps. A JSON config file may supply any flag (explicit
flags win). Relative input paths are resolved against $WHATIF_DATA_DIR
when set. Exit codes: 0 success, 1 usage error, 2 data/model error,
3 when explain finds no feasible counterfactual.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import os
import sys
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from .cf_core import CfQuery
from .cf_moc import MocConfig
from .cohort import CohortConfig, WindowSpec, build_dataset, generate_cohort, match_controls, save_timelines
from .evaluation import evaluate_scores, save_report_json, save_roc_csv
from .gbm import GbmConfig, GbmModel, ModelError, cross_validate, train
from .hybrid import generate
from .schema import Dataset, SchemaError, load_dataset, save_dataset, save_schema

DATA_DIR_ENV = "WHATIF_DATA_DIR"


class UsageError(Exception):
    pass


class DataError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # usage problems exit 1, not argparse's default 2
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _resolve_input(path: str | None) -> str | None:
    if path is None:
        return None
    base = os.environ.get(DATA_DIR_ENV)
    if base and not os.path.isabs(path) and not os.path.exists(path):
        return os.path.join(base, path)
    return path


def _merge_config(args: argparse.Namespace, defaults: dict) -> dict:
    """CLI value if given, else config-file value, else the declared default."""
    cfg = {}
    if getattr(args, "config", None):
        with open(_resolve_input(args.config), encoding="utf-8") as fh:
            obj = json.load(fh)
        if isinstance(obj.get("args"), dict):
            obj = obj["args"]
        cfg = {str(k).replace("-", "_"): v for k, v in obj.items()}
    out = {}
    for name, default in defaults.items():
        v = getattr(args, name, None)
        if v is None:
            v = cfg.get(name, default)
        out[name] = v
    return out


def _write_manifest(out_dir: Path, command: str, resolved: dict, outputs: dict) -> None:
    body = {
        "command": command,
        "args": resolved,
        "config_hash": hashlib.sha256(
            json.dumps(resolved, sort_keys=True, separators=(",", ":")).encode()
        ).hexdigest(),
        "version": __version__,
        "outputs": outputs,
        "timestamp": datetime.now(timezone.utc).isoformat(),
    }
    path = out_dir / f"manifest_{command}.json"
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(body, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _load_data(resolved: dict) -> tuple[Dataset, str | None]:
    schema_path = _resolve_input(resolved["schema"])
    data_path = _resolve_input(resolved["data"])
    schema_json = None
    label = None
    if schema_path:
        with open(schema_path, encoding="utf-8") as fh:
            schema_json = json.load(fh)
        label = schema_json.get("label")
    try:
        return load_dataset(data_path, schema_json=schema_json), label
    except FileNotFoundError as e:
        raise DataError(str(e)) from None


def _load_model(resolved: dict, dataset: Dataset) -> GbmModel:
    try:
        model = GbmModel.load(_resolve_input(resolved["model"]))
    except FileNotFoundError as e:
        raise DataError(str(e)) from None
    if model.schema_fingerprint != dataset.schema.fingerprint():
        raise DataError("model/schema mismatch: fingerprints differ")
    return model


# ---------------------------------------------------------------------------
# synth

SYNTH_DEFAULTS = {
    "out_dir": None,
    "n": 2744,
    "seed": 0,
    "ratio": 6,
    "intercept": CohortConfig().intercept,
    "noise_sd": CohortConfig().noise_sd,
    "planted": None,  # JSON object string, e.g. '{"HTN": 3.0}'
}


def cmd_synth(args) -> int:
    r = _merge_config(args, SYNTH_DEFAULTS)
    if not r["out_dir"]:
        raise UsageError("--out-dir is required")
    planted = dict(CohortConfig().planted)
    if r["planted"]:
        planted = json.loads(r["planted"]) if isinstance(r["planted"], str) else dict(r["planted"])
    cfg = CohortConfig(
        n=int(r["n"]),
        seed=int(r["seed"]),
        intercept=float(r["intercept"]),
        planted=planted,
        noise_sd=float(r["noise_sd"]),
    )
    r["planted"] = planted
    timelines, labels = generate_cohort(cfg)
    cases = [t for t, y in zip(timelines, labels) if y == 1]
    pool = [t for t, y in zip(timelines, labels) if y == 0]
    matching = match_controls(cases, pool, ratio=int(r["ratio"]))
    cohort = list(cases) + list(matching.controls)
    cohort_labels = [1] * len(cases) + [0] * len(matching.controls)
    dataset = build_dataset(cohort, cohort_labels, WindowSpec())

    out_dir = Path(r["out_dir"])
    out_dir.mkdir(parents=True, exist_ok=True)
    save_timelines(cohort, out_dir / "timelines.jsonl", cohort_labels)
    save_dataset(dataset, out_dir / "cohort.csv")
    save_schema(dataset.schema, out_dir / "schema.json", label="label")
    with open(out_dir / "matching.json", "w", encoding="utf-8") as fh:
        json.dump(
            {
                "ratio": int(r["ratio"]),
                "cases": len(cases),
                "controls": len(matching.controls),
                "matched": {k: list(v) for k, v in matching.matched.items()},
                "under_matched": [list(u) for u in matching.under_matched],
            },
            fh,
            indent=2,
            sort_keys=True,
        )
        fh.write("\n")
    _write_manifest(
        out_dir,
        "synth",
        r,
        {
            "timelines": "timelines.jsonl",
            "cohort": "cohort.csv",
            "schema": "schema.json",
            "matching": "matching.json",
        },
    )
    print(
        f"synth: {len(cases)} cases, {len(matching.controls)} matched controls "
        f"({len(matching.under_matched)} under-matched), {dataset.n_features} features -> {out_dir}"
    )
    return 0


# ---------------------------------------------------------------------------
# train

TRAIN_DEFAULTS = {
    "data": None,
    "schema": None,
    "out_dir": None,
    "test_fraction": 0.3,
    "folds": 5,
    "n_trees": 200,
    "max_depth": 3,
    "learning_rate": 0.1,
    "l2": 1.0,
    "min_samples_leaf": 5,
    "seed": 0,
}


def _split_indices(labels, fraction: float, seed: int) -> tuple[list[int], list[int]]:
    rng = np.random.default_rng(seed)
    y = np.asarray(labels)
    test: list[int] = []
    for cls in np.unique(y):
        members = np.nonzero(y == cls)[0]
        members = members[rng.permutation(members.size)]
        n_test = int(round(members.size * fraction))
        test.extend(members[:n_test].tolist())
    test_set = set(test)
    train_idx = [i for i in range(y.size) if i not in test_set]
    return train_idx, sorted(test)


def cmd_train(args) -> int:
    r = _merge_config(args, TRAIN_DEFAULTS)
    for req in ("data", "schema", "out_dir"):
        if not r[req]:
            raise UsageError(f"--{req.replace('_', '-')} is required")
    dataset, _ = _load_data(r)
    if dataset.labels is None:
        raise DataError("training data has no label column")
    cfg = GbmConfig(
        n_trees=int(r["n_trees"]),
        max_depth=int(r["max_depth"]),
        learning_rate=float(r["learning_rate"]),
        l2_leaf_penalty=float(r["l2"]),
        min_samples_leaf=int(r["min_samples_leaf"]),
        seed=int(r["seed"]),
    )
    train_idx, test_idx = _split_indices(dataset.labels, float(r["test_fraction"]), int(r["seed"]))
    train_ds = dataset.subset(train_idx)
    cv_scores = cross_validate(train_ds, cfg, folds=int(r["folds"]))
    model = train(train_ds, cfg)

    out_dir = Path(r["out_dir"])
    out_dir.mkdir(parents=True, exist_ok=True)
    model.save(out_dir / "model.json")
    with open(out_dir / "split.json", "w", encoding="utf-8") as fh:
        json.dump(
            {
                "seed": int(r["seed"]),
                "test_fraction": float(r["test_fraction"]),
                "train": train_idx,
                "test": test_idx,
            },
            fh,
            sort_keys=True,
        )
        fh.write("\n")
    with open(out_dir / "cv.json", "w", encoding="utf-8") as fh:
        json.dump({"folds": int(r["folds"]), "auroc": cv_scores}, fh, indent=2, sort_keys=True)
        fh.write("\n")
    _write_manifest(out_dir, "train", r, {"model": "model.json", "split": "split.json", "cv": "cv.json"})
    print(
        f"train: {len(train_idx)} rows, {int(r['folds'])}-fold CV AUROC "
        f"{np.mean(cv_scores):.3f} +/- {np.std(cv_scores):.3f} -> {out_dir / 'model.json'}"
    )
    return 0


# ---------------------------------------------------------------------------
# evaluate

EVAL_DEFAULTS = {
    "data": None,
    "schema": None,
    "model": None,
    "split": None,
    "out_dir": None,
    "n_boot": 1000,
    "level": 0.95,
    "seed": 0,
}


def cmd_evaluate(args) -> int:
    r = _merge_config(args, EVAL_DEFAULTS)
    for req in ("data", "schema", "model", "out_dir"):
        if not r[req]:
            raise UsageError(f"--{req.replace('_', '-')} is required")
    dataset, _ = _load_data(r)
    if dataset.labels is None:
        raise DataError("evaluation data has no label column")
    model = _load_model(r, dataset)
    rows_used = "all"
    eval_ds = dataset
    if r["split"]:
        with open(_resolve_input(r["split"]), encoding="utf-8") as fh:
            split = json.load(fh)
        eval_ds = dataset.subset(split["test"])
        rows_used = "test"
    scores = model.predict_proba(eval_ds.rows)[:, 1]
    report = evaluate_scores(
        scores, eval_ds.label_array(), n_boot=int(r["n_boot"]), level=float(r["level"]), seed=int(r["seed"])
    )

    out_dir = Path(r["out_dir"])
    out_dir.mkdir(parents=True, exist_ok=True)
    save_report_json(report, out_dir / "eval_report.json")
    save_roc_csv(report, out_dir / "roc.csv")
    importance = model.feature_importance()
    with open(out_dir / "feature_importance.csv", "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["feature", "importance"])
        for name, value in sorted(importance.items(), key=lambda kv: (-kv[1], kv[0])):
            writer.writerow([name, repr(float(value))])
    _write_manifest(
        out_dir,
        "evaluate",
        {**r, "rows_used": rows_used},
        {"report": "eval_report.json", "roc": "roc.csv", "importance": "feature_importance.csv"},
    )
    print(
        f"evaluate[{rows_used}]: AUROC {report.auroc:.3f} "
        f"(95% CI {report.ci_low:.3f}-{report.ci_high:.3f}), threshold {report.threshold:.3f}, "
        f"sensitivity {report.sensitivity:.3f}, specificity {report.specificity:.3f}"
    )
    return 0


# ---------------------------------------------------------------------------
# explain

EXPLAIN_DEFAULTS = {
    "data": None,
    "schema": None,
    "model": None,
    "eval_report": None,
    "row": None,
    "instance": None,
    "target_class": 1,
    "p_min": 0.0,
    "p_max": None,
    "fix": "",
    "k": 3,
    "alpha": 1.0,
    "beta": 1.0,
    "m_max": 16,
    "seed": 0,
    "threads": 1,
    "moc_population": 40,
    "moc_generations": 60,
    "moc_trace": None,  # CSV path: generation, best prob_gap, front size
    "out": None,
}


def cmd_explain(args) -> int:
    r = _merge_config(args, EXPLAIN_DEFAULTS)
    for req in ("data", "schema", "model"):
        if not r[req]:
            raise UsageError(f"--{req.replace('_', '-')} is required")
    dataset, _ = _load_data(r)
    model = _load_model(r, dataset)
    schema = dataset.schema

    if (r["row"] is None) == (r["instance"] is None):
        raise UsageError("provide exactly one of --row or --instance")
    if r["row"] is not None:
        row_id = int(r["row"])
        if row_id < 0 or row_id >= dataset.n_rows:
            raise DataError(f"row {row_id} out of range (dataset has {dataset.n_rows} rows)")
        x0 = dataset.rows[row_id]
    else:
        with open(_resolve_input(r["instance"]), encoding="utf-8") as fh:
            values = json.load(fh)
        missing = [n for n in schema.names if n not in values]
        if missing:
            raise UsageError(f"instance is missing features: {missing}")
        x0 = schema.validate_instance(tuple(values[n] for n in schema.names))

    p_max = r["p_max"]
    if p_max is None:
        if not r["eval_report"]:
            raise UsageError("--p-max required (or pass --eval-report to use the stored threshold)")
        with open(_resolve_input(r["eval_report"]), encoding="utf-8") as fh:
            p_max = float(json.load(fh)["threshold"])

    fix_names = [n for n in str(r["fix"]).split(",") if n] if r["fix"] else []
    try:
        fixed = frozenset(schema.index_of(n) for n in fix_names)
    except SchemaError as e:
        raise UsageError(str(e)) from None

    try:
        query = CfQuery(
            x0=x0,
            target_class=int(r["target_class"]),
            p_min=float(r["p_min"]),
            p_max=float(p_max),
            fixed=fixed,
            k=int(r["k"]),
            alpha=float(r["alpha"]),
            beta=float(r["beta"]),
            m_max=int(r["m_max"]),
            seed=int(r["seed"]),
        )
        moc = MocConfig(population=int(r["moc_population"]), generations=int(r["moc_generations"]))
    except ValueError as e:
        raise UsageError(str(e)) from None

    trace_rows: list = []
    on_gen = (lambda gen, gap, front: trace_rows.append((gen, gap, front))) if r["moc_trace"] else None
    report = generate(
        query, model, dataset, moc_config=moc, threads=int(r["threads"]), on_moc_generation=on_gen
    )
    if r["moc_trace"] and trace_rows:
        with open(r["moc_trace"], "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["generation", "best_prob_gap", "front_size"])
            for gen, gap, front in trace_rows:
                writer.writerow([gen, repr(float(gap)), front])
    body = report.to_json(schema, include_timings=False)  # keep the file byte-reproducible
    body["query"] = {
        "target_class": query.target_class,
        "p_min": query.p_min,
        "p_max": query.p_max,
        "fixed": sorted(schema[j].name for j in query.fixed),
        "k": query.k,
        "alpha": query.alpha,
        "beta": query.beta,
        "m_max": query.m_max,
        "seed": query.seed,
    }

    out_path = Path(r["out"]) if r["out"] else Path("hybrid_report.json")
    out_path.parent.mkdir(parents=True, exist_ok=True)
    with open(out_path, "w", encoding="utf-8") as fh:
        json.dump(body, fh, indent=2, sort_keys=True)
        fh.write("\n")
    _write_manifest(
        out_path.parent,
        "explain",
        {**r, "p_max": p_max},
        {"report": out_path.name, "timings": report.timings},
    )

    print(f"explain: stage={report.stage_used} m={report.m} evaluated={report.candidates_evaluated}")
    for cf in report.counterfactuals:
        changes = ", ".join(
            f"{schema[j].name}: {x0[j]!r} -> {cf.x_prime[j]!r}" for j in sorted(cf.changed)
        )
        print(f"  p {report.p_origin:.3f} -> {cf.p_target:.3f} (score {cf.score:.3f}) via {changes}")
    if report.stage_used == "none":
        print("  no feasible counterfactual under these constraints")
        return 3
    return 0


# ---------------------------------------------------------------------------
# serve

SERVE_DEFAULTS = {
    "data": None,
    "schema": None,
    "model": None,
    "eval_report": None,
    "host": "127.0.0.1",
    "port": 8000,
    "timeout": 30.0,
    "seed": 0,
    "cors": "*",
    "static_dir": None,
}


def build_service(r: dict):
    from .evaluation import EvalReport
    from .service import ServiceBundle, create_app

    dataset, _ = _load_data(r)
    model = _load_model(r, dataset)
    eval_report = None
    if r["eval_report"]:
        with open(_resolve_input(r["eval_report"]), encoding="utf-8") as fh:
            eval_report = EvalReport.from_json(json.load(fh))
    bundle = ServiceBundle(
        model=model,
        dataset=dataset,
        eval_report=eval_report,
        default_seed=int(r["seed"]),
        timeout_s=float(r["timeout"]),
    )
    return create_app(bundle, cors_origins=[o for o in str(r["cors"]).split(",") if o], static_dir=r["static_dir"])


def cmd_serve(args) -> int:
    import uvicorn

    r = _merge_config(args, SERVE_DEFAULTS)
    for req in ("data", "schema", "model"):
        if not r[req]:
            raise UsageError(f"--{req.replace('_', '-')} is required")
    app = build_service(r)
    uvicorn.run(app, host=r["host"], port=int(r["port"]), log_level="info")
    return 0


# ---------------------------------------------------------------------------


def _add_options(sub: argparse.ArgumentParser, defaults: dict, flags: dict) -> None:
    sub.add_argument("--config", help="JSON file (or a manifest) supplying any flag")
    for name in defaults:
        kwargs = flags.get(name, {})
        sub.add_argument(f"--{name.replace('_', '-')}", default=None, **kwargs)


def build_parser() -> _Parser:
    parser = _Parser(prog="whatif", description=__doc__)
    parser.add_argument("--version", action="version", version=__version__)
    subs = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = subs.add_parser("synth", help="generate a matched synthetic cohort")
    _add_options(s, SYNTH_DEFAULTS, {"planted": {"help": 'JSON coefficients, e.g. \'{"HTN": 3.0}\''}})
    s.set_defaults(func=cmd_synth)

    s = subs.add_parser("train", help="fit the boosted-tree classifier")
    _add_options(s, TRAIN_DEFAULTS, {})
    s.set_defaults(func=cmd_train)

    s = subs.add_parser("evaluate", help="AUROC, bootstrap CI, operating point, ROC/importance exports")
    _add_options(s, EVAL_DEFAULTS, {})
    s.set_defaults(func=cmd_evaluate)

    s = subs.add_parser("explain", help="run the hybrid counterfactual search for one instance")
    _add_options(s, EXPLAIN_DEFAULTS, {"fix": {"help": "comma-separated feature names to hold fixed"}})
    s.set_defaults(func=cmd_explain)

    s = subs.add_parser("serve", help="start the HTTP service")
    _add_options(s, SERVE_DEFAULTS, {})
    s.set_defaults(func=cmd_serve)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except SystemExit as e:
        return int(e.code or 0)
    except UsageError as e:
        print(f"whatif: error: {e}", file=sys.stderr)
        return 1
    except (DataError, SchemaError, ModelError, OSError, json.JSONDecodeError, ValueError) as e:
        print(f"whatif: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
