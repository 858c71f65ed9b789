"""End-to-end experiment: ingest, label, split, train the four models, evaluate."""

from __future__ import annotations

import csv
import io
import json
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np

from . import __version__, boosting, knn, logistic, metrics, tree
from ._jsonio import dumps
from .dataset import (
    FEATURE_NAMES,
    LabeledDataset,
    LabelingRule,
    SplitSpec,
    StandardScaler,
    label,
    parse_csv,
    split_indices,
    standardize_split,
    table1_text,
    validate,
)

MODEL_NAMES = ("logistic", "gbm", "tree", "knn")
MODEL_TITLES = {
    "logistic": "Logistic Classification",
    "gbm": "Gradient Boosting Classification",
    "tree": "Decision Tree Classification",
    "knn": "K-Nearest Neighbours Classification",
}
# Published F1 and AUC for the bundled experiment; None where no number was given.
REFERENCE_F1 = {"logistic": 0.7143, "gbm": 0.5714, "tree": 0.4286, "knn": 0.7143}
REFERENCE_AUC = {"logistic": None, "gbm": None, "tree": None, "knn": 0.79}
BUNDLED_INPUT = "<bundled:table1.csv>"


class SchemaMismatch(ValueError):
    pass


@dataclass(frozen=True)
class ExperimentConfig:
    input: str = BUNDLED_INPUT
    base_uts: float = 60.0
    fraction: float = 0.8
    boundary_label: int = 1
    outlier_policy: str = "drop"
    uts_ceiling: float = 100.0
    test_fraction: float = 0.25
    seed: int = 42
    stratified: bool = True
    raw_features: bool = False
    logistic: logistic.GdConfig = field(default_factory=logistic.GdConfig)
    tree: tree.TreeHyperparams = field(default_factory=tree.TreeHyperparams)
    gbm: boosting.GbmConfig = field(default_factory=boosting.GbmConfig)
    k: int = 5

    @property
    def rule(self) -> LabelingRule:
        return LabelingRule(self.base_uts, self.fraction, self.boundary_label)

    @property
    def split(self) -> SplitSpec:
        return SplitSpec(self.test_fraction, self.seed, self.stratified)

    def to_dict(self) -> dict:
        data = asdict(self)
        data["knn"] = {"k": data.pop("k"), "tie_policy": knn.TIE_POLICY}
        if data["logistic"]["initial_weights"] is not None:
            data["logistic"]["initial_weights"] = list(data["logistic"]["initial_weights"])
        return data

    @classmethod
    def from_dict(cls, data: dict) -> ExperimentConfig:
        """Build from a (possibly partial) mapping; missing keys keep defaults."""
        data = dict(data)
        nested = {
            "logistic": logistic.GdConfig,
            "tree": tree.TreeHyperparams,
            "gbm": boosting.GbmConfig,
        }
        for key, kind in nested.items():
            if key in data and isinstance(data[key], dict):
                sub = dict(data[key])
                if sub.get("initial_weights") is not None:
                    sub["initial_weights"] = tuple(sub["initial_weights"])
                data[key] = kind(**sub)
        if "knn" in data:
            data["k"] = data.pop("knn").get("k", 5)
        unknown = set(data) - {f for f in cls.__dataclass_fields__}
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(**data)


@dataclass
class Prepared:
    """Everything the models see for one split."""

    validation: object
    labeled: LabeledDataset
    train: LabeledDataset
    test: LabeledDataset
    scaler: StandardScaler | None


def read_input(path: str) -> str:
    if path == BUNDLED_INPUT:
        return table1_text()
    return Path(path).read_text(encoding="utf-8")


def prepare(config: ExperimentConfig, text: str | None = None) -> Prepared:
    records = parse_csv(read_input(config.input) if text is None else text)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        report = validate(records, config.outlier_policy, config.uts_ceiling)
    labeled = label(report.records, config.rule)
    train_idx, test_idx = split_indices(labeled.labels, config.split)
    train, test = labeled.subset(train_idx), labeled.subset(test_idx)
    scaler = None
    if not config.raw_features:
        train, test, scaler = standardize_split(train, test)
    return Prepared(report, labeled, train, test, scaler)


def fit_model(name: str, config: ExperimentConfig, train: LabeledDataset, k: int | None = None):
    if name == "logistic":
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            return logistic.train(train, config.logistic)
    if name == "gbm":
        return boosting.train(train, config.gbm)
    if name == "tree":
        return tree.grow(train, config.tree)
    if name == "knn":
        return knn.fit(train, config.k if k is None else k)
    raise ValueError(f"unknown model {name!r}")


def model_scores(model, x) -> tuple[np.ndarray, np.ndarray]:
    """(labels, positive-class scores) for each row of ``x``."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    if isinstance(model, logistic.LogisticModel):
        return logistic.predict(model, x), logistic.predict_proba(model, x)
    if isinstance(model, boosting.GbmModel):
        return boosting.predict(model, x), boosting.predict_proba(model, x)
    if isinstance(model, tree.TreeModel):
        return tree.predict(model, x), tree.predict_score(model, x)
    if isinstance(model, knn.KnnModel):
        return knn.predict(model, x), knn.predict_score(model, x)
    raise TypeError(f"not a model: {type(model).__name__}")


def evaluate(model, test: LabeledDataset) -> tuple[dict, metrics.RocCurve]:
    labels, scores = model_scores(model, test.features)
    cm = metrics.confusion_matrix(test.labels, labels)
    curve = metrics.roc_curve(test.labels, scores)
    return metrics.metric_report(cm, metrics.auc(curve)), curve


# -- persistence -------------------------------------------------------------

_MODEL_TYPES = {
    "logistic": logistic.LogisticModel,
    "gbm": boosting.GbmModel,
    "tree": tree.TreeModel,
    "knn": knn.KnnModel,
}


def model_to_dict(model, scaler: StandardScaler | None) -> dict:
    data = model.to_dict()
    data["feature_names"] = list(FEATURE_NAMES)
    data["scaler"] = None if scaler is None else scaler.to_dict()
    return data


def model_from_dict(data: dict):
    """Rebuild ``(model, scaler)`` from persisted JSON data."""
    if not isinstance(data, dict) or data.get("type") not in _MODEL_TYPES:
        raise SchemaMismatch(f"unknown model type: {data.get('type') if isinstance(data, dict) else data!r}")
    try:
        model = _MODEL_TYPES[data["type"]].from_dict(data)
        scaler = None if data.get("scaler") is None else StandardScaler.from_dict(data["scaler"])
    except (KeyError, TypeError, ValueError) as exc:
        raise SchemaMismatch(f"malformed {data['type']} model: {exc}") from exc
    return model, scaler


def _expected_width(model) -> int | None:
    if isinstance(model, logistic.LogisticModel):
        return model.weights.shape[0] - 1
    if isinstance(model, knn.KnnModel):
        return model.features.shape[1]
    return None


def predict_csv(model_data: dict, features_text: str) -> str:
    """Apply a persisted model (scaler first) to a feature CSV; returns ``row,label,score``."""
    from .dataset import parse_features_csv

    model, scaler = model_from_dict(model_data)
    x = parse_features_csv(features_text)
    width = _expected_width(model)
    if width is not None and width != x.shape[1]:
        raise SchemaMismatch(f"model expects {width} features, file has {x.shape[1]}")
    if scaler is not None:
        if scaler.means.shape[0] != x.shape[1]:
            raise SchemaMismatch("scaler width does not match the feature file")
        x = scaler.transform(x)
    out = io.StringIO()
    out.write("row,label,score\n")
    if x.shape[0]:
        labels, scores = model_scores(model, x)
        for i, (lab, s) in enumerate(zip(labels, scores)):
            out.write(f"{i},{int(lab)},{float(s):.17g}\n")
    return out.getvalue()


# -- single run --------------------------------------------------------------


@dataclass
class RunResult:
    report: dict
    models: dict = field(default_factory=dict)
    curves: dict = field(default_factory=dict)
    scaler: StandardScaler | None = None


def run(config: ExperimentConfig = ExperimentConfig(), text: str | None = None) -> RunResult:
    """Train and evaluate all four models on one split (no file output)."""
    prep = prepare(config, text)
    result = RunResult(report={}, scaler=prep.scaler)
    entries = {}
    complete = True
    for name in MODEL_NAMES:
        try:
            model = fit_model(name, config, prep.train)
            summary, curve = evaluate(model, prep.test)
        except Exception as exc:  # noqa: BLE001 - attributed in the report
            complete = False
            entries[name] = {"error": f"{type(exc).__name__}: {exc}"}
            continue
        result.models[name] = model
        result.curves[name] = curve
        entries[name] = {
            "title": MODEL_TITLES[name],
            "confusion": {key: summary[key] for key in ("tp", "fp", "fn", "tn")},
            **{key: summary[key] for key in ("tpr", "fpr", "precision", "recall", "f1", "auc")},
            "degenerate_flags": summary["degenerate_flags"],
            "roc_file": f"roc_{name}.csv",
            "model_file": f"model_{name}.json",
            "reference": {"f1": REFERENCE_F1[name], "auc": REFERENCE_AUC[name]},
        }

    validation = prep.validation
    result.report = {
        "toolkit": {"name": "fdm_uts", "version": __version__},
        "status": "complete" if complete else "incomplete",
        "config": config.to_dict(),
        "dataset": {
            "n_records": len(validation.records) + len(validation.dropped),
            "n_used": len(prep.labeled),
            "dropped_rows": list(validation.dropped),
            "flagged_rows": [w.row_index for w in validation.warnings],
            "threshold_mpa": config.rule.threshold,
            "class_counts": {
                "all": list(prep.labeled.class_counts()),
                "train": list(prep.train.class_counts()),
                "test": list(prep.test.class_counts()),
            },
            "n_train": len(prep.train),
            "n_test": len(prep.test),
            "train_rows": [int(i) for i in prep.train.indices],
            "test_rows": [int(i) for i in prep.test.indices],
            "standardized": prep.scaler is not None,
        },
        "models": entries,
    }
    return result


def format_table(report: dict) -> str:
    ds = report["dataset"]
    lines = [
        f"fdm_uts {report['toolkit']['version']}  status={report['status']}",
        f"records={ds['n_records']} used={ds['n_used']} dropped={ds['dropped_rows']} "
        f"threshold={ds['threshold_mpa']:g} MPa  train={ds['n_train']} test={ds['n_test']} "
        f"(test class counts {ds['class_counts']['test']})",
        "",
        f"{'model':<38}{'TP':>4}{'FP':>4}{'FN':>4}{'TN':>4}{'prec':>8}{'recall':>8}"
        f"{'F1':>8}{'AUC':>8}{'ref F1':>10}{'ref AUC':>11}",
    ]
    for name in MODEL_NAMES:
        entry = report["models"][name]
        if "error" in entry:
            lines.append(f"{MODEL_TITLES[name]:<38}ERROR {entry['error']}")
            continue
        c = entry["confusion"]
        reference_auc = entry["reference"]["auc"]
        lines.append(
            f"{entry['title']:<38}{c['tp']:>4}{c['fp']:>4}{c['fn']:>4}{c['tn']:>4}"
            f"{entry['precision']:>8.4f}{entry['recall']:>8.4f}{entry['f1']:>8.4f}{entry['auc']:>8.4f}"
            f"{entry['reference']['f1']:>10.4f}{'n/a' if reference_auc is None else f'{reference_auc:.2f}':>11}"
        )
    return "\n".join(lines) + "\n"


def write_outputs(result: RunResult, out_dir) -> Path:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "report.json").write_text(dumps(result.report) + "\n", encoding="utf-8")
    (out / "report.txt").write_text(format_table(result.report), encoding="utf-8")
    for name, model in result.models.items():
        (out / f"roc_{name}.csv").write_text(result.curves[name].to_csv(), encoding="utf-8")
        (out / f"model_{name}.json").write_text(dumps(model_to_dict(model, result.scaler)) + "\n", encoding="utf-8")
    from .plotting import comparison_plot

    comparison_plot(out, [n for n in MODEL_NAMES if n in result.models], out / "comparison.svg")
    return out


# -- seed sweep --------------------------------------------------------------


def _sweep_one(args):
    config, seed, k_values, text = args
    cfg = replace(config, seed=seed)
    rows = []
    try:
        prep = prepare(cfg, text)
    except Exception as exc:  # noqa: BLE001
        return [(seed, name, None, None, None, f"{type(exc).__name__}: {exc}") for name in MODEL_NAMES]
    for name in MODEL_NAMES:
        ks = k_values if (name == "knn" and k_values) else [None]
        for k in ks:
            try:
                model = fit_model(name, cfg, prep.train, k)
                summary, _ = evaluate(model, prep.test)
                rows.append((seed, name, k, summary["f1"], summary["auc"], None))
            except Exception as exc:  # noqa: BLE001
                rows.append((seed, name, k, None, None, f"{type(exc).__name__}: {exc}"))
    return rows


def sweep(config: ExperimentConfig, seeds, k_values=None, workers: int = 1, text: str | None = None) -> list[tuple]:
    """Rows ``(seed, model, k, f1, auc, error)`` ordered by seed then model."""
    seeds = list(seeds)
    k_values = list(k_values) if k_values else None
    if not seeds:
        raise ValueError("seed range is empty")
    if text is None:
        text = read_input(config.input)
    jobs = [(config, s, k_values, text) for s in seeds]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            chunks = list(pool.map(_sweep_one, jobs))
    else:
        chunks = [_sweep_one(job) for job in jobs]
    return [row for chunk in chunks for row in chunk]


def sweep_csv(rows, with_k: bool) -> str:
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(["seed", "model"] + (["k"] if with_k else []) + ["f1", "auc"])
    for seed, name, k, f1v, aucv, _ in rows:
        fmt = lambda v: "" if v is None else f"{v:.17g}"  # noqa: E731
        writer.writerow([seed, name] + ([("" if k is None else k)] if with_k else []) + [fmt(f1v), fmt(aucv)])
    return out.getvalue()


def summarize_sweep(rows, tolerance: float = 0.15) -> dict:
    """Per-model F1/AUC distribution next to the published reference values."""
    summary = {}
    groups = {}
    for seed, name, k, f1v, aucv, err in rows:
        key = name if k is None else f"{name}[k={k}]"
        groups.setdefault((key, name), []).append((f1v, aucv))
    for (key, name), values in groups.items():
        f1s = np.array([v[0] for v in values if v[0] is not None], dtype=float)
        aucs = np.array([v[1] for v in values if v[1] is not None], dtype=float)
        reference_f1 = REFERENCE_F1[name]
        entry = {
            "runs": len(values),
            "failed": len(values) - f1s.size,
            "reference_f1": reference_f1,
            "reference_auc": REFERENCE_AUC[name],
        }
        if f1s.size:
            q1, med, q3 = np.percentile(f1s, [25, 50, 75])
            entry.update(
                f1_median=float(med),
                f1_iqr=[float(q1), float(q3)],
                f1_min=float(f1s.min()),
                f1_max=float(f1s.max()),
                seeds_within_tolerance=int(np.sum(np.abs(f1s - reference_f1) <= tolerance)),
            )
        if aucs.size:
            a1, amed, a3 = np.percentile(aucs, [25, 50, 75])
            entry.update(auc_median=float(amed), auc_iqr=[float(a1), float(a3)])
        entry["reproduced_f1"] = bool(entry.get("seeds_within_tolerance", 0) > 0)
        summary[key] = entry
    return summary


def format_sweep_summary(summary: dict) -> str:
    lines = [
        f"{'model':<16}{'runs':>6}{'F1 med':>9}{'F1 IQR':>16}{'ref F1':>10}{'within':>8}"
        f"{'AUC med':>9}{'ref AUC':>11}"
    ]
    for key, e in summary.items():
        iqr = e.get("f1_iqr")
        iqr_text = "n/a" if iqr is None else f"[{iqr[0]:.3f}, {iqr[1]:.3f}]"
        reference_auc = "n/a" if e["reference_auc"] is None else f"{e['reference_auc']:.2f}"
        lines.append(
            f"{key:<16}{e['runs']:>6}{e.get('f1_median', float('nan')):>9.4f}{iqr_text:>16}"
            f"{e['reference_f1']:>10.4f}{e.get('seeds_within_tolerance', 0):>8}"
            f"{e.get('auc_median', float('nan')):>9.4f}{reference_auc:>11}"
        )
    return "\n".join(lines) + "\n"


def write_sweep(rows, summary: dict, out_dir, with_k: bool) -> Path:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "sweep.csv").write_text(sweep_csv(rows, with_k), encoding="utf-8")
    (out / "sweep_summary.json").write_text(dumps(summary) + "\n", encoding="utf-8")
    (out / "sweep_summary.txt").write_text(format_sweep_summary(summary), encoding="utf-8")
    return out


def load_config(path) -> dict:
    return json.loads(Path(path).read_text(encoding="utf-8"))
