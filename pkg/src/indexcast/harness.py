"""Experiment orchestration: config parsing, the train/evaluate pipeline,
report and prediction emission, model files, and a synthetic data source.

The pipeline per dataset: ingest -> fit min-max scaler on the training
portion -> scale -> window into supervised pairs -> chronological split ->
train each configured model -> evaluate train and test.  Scaled values feed
the RMSE; percentage and correlation metrics run on raw index values.
"""

from __future__ import annotations

import json
import math
import re
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from datetime import date, timedelta
from pathlib import Path

import numpy as np

from .anfis import AnfisModel, AnfisRegressor
from .dataio import (
    MinMaxScaler,
    SupervisedDataset,
    TimeSeriesFrame,
    chrono_split,
    load_ohlc_csv,
    make_supervised,
    split_index,
    write_ohlc_csv,
)
from .dbnn import DbnnRegressor
from .metrics import EvalStats, evaluate
from .mlp import MlpNetwork, MlpRegressor
from .svm import KernelSVR, SvmModel

MODEL_KINDS = ("mlp", "svm", "anfis", "dbnn")
MODEL_FILE_FORMAT = "indexcast-model"
MODEL_FILE_VERSION = 1
REPORT_COLUMNS = ("model", "dataset", "phase", "rmse_scaled", "map", "mape", "corr", "train_seconds")


# --------------------------------------------------------------------------
# configuration


@dataclass(frozen=True)
class ModelSpec:
    name: str
    kind: str
    params: dict = field(default_factory=dict)


@dataclass
class ExperimentConfig:
    data_files: list
    models: list
    feature_columns: tuple = ("open", "low", "high", "close")
    target_column: str = "close"
    horizon: int = 1
    train_fraction: float = 0.5
    scaler: str = "minmax"
    seed: int = 0
    workers: int = 1

    def validate(self) -> "ExperimentConfig":
        self.data_files = tuple(self.data_files)
        self.models = tuple(self.models)
        self.feature_columns = tuple(self.feature_columns)
        if not self.data_files:
            raise ValueError("config names no data files")
        if not self.models:
            raise ValueError("config names no models")
        if not 0.0 < self.train_fraction < 1.0:
            raise ValueError(f"train_fraction must lie in (0, 1), got {self.train_fraction}")
        if self.horizon < 1:
            raise ValueError(f"horizon must be >= 1, got {self.horizon}")
        if self.scaler != "minmax":
            raise ValueError(f"unknown scaler {self.scaler!r}; only 'minmax' is supported")
        if self.workers < 1:
            raise ValueError(f"workers must be >= 1, got {self.workers}")
        for spec in self.models:
            if spec.kind not in MODEL_KINDS:
                raise ValueError(f"unknown model {spec.kind!r} (named {spec.name!r})")
        return self


def parse_kv(text: str) -> dict:
    """Flat `key = value` lines; `#` starts a comment; keys may be dotted."""
    out = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"config line {lineno}: expected 'key = value', got {raw!r}")
        key, value = line.split("=", 1)
        key = key.strip()
        if not key:
            raise ValueError(f"config line {lineno}: empty key")
        if key in out:
            raise ValueError(f"config line {lineno}: duplicate key {key!r}")
        out[key] = value.strip()
    return out


def _split_list(value: str) -> list:
    return [item.strip() for item in value.split(",") if item.strip()]


def parse_config(text: str) -> ExperimentConfig:
    """Build an :class:`ExperimentConfig` from flat key-value text.

    Recognized keys (all optional except ``data.files`` and ``models``):
    ``data.files``, ``data.features``, ``data.target``, ``data.horizon``,
    ``data.train_fraction``, ``data.scaler``, ``run.seed``, ``run.workers``,
    ``models`` (comma list of model names), and per-model dotted options
    such as ``mlp.hidden=26``.  A model named after one of mlp/svm/anfis/
    dbnn is of that kind; other names need ``<name>.kind``.
    """
    kv = parse_kv(text)
    taken = set()

    def take(key, default=None):
        taken.add(key)
        return kv.get(key, default)

    files = _split_list(take("data.files", "") or "")
    features = _split_list(take("data.features", "") or "")
    model_names = _split_list(take("models", "") or "")

    config = ExperimentConfig(
        data_files=files,
        models=[],
        feature_columns=tuple(features) if features else ExperimentConfig.feature_columns,
        target_column=take("data.target", "close"),
        horizon=int(take("data.horizon", "1")),
        train_fraction=float(take("data.train_fraction", "0.5")),
        scaler=take("data.scaler", "minmax"),
        seed=int(take("run.seed", "0")),
        workers=int(take("run.workers", "1")),
    )

    specs = []
    for name in model_names:
        params = {}
        for key, value in kv.items():
            if key.startswith(name + "."):
                params[key[len(name) + 1 :]] = value
                taken.add(key)
        if name in MODEL_KINDS:
            kind = name
        else:
            kind = params.pop("kind", None)
            if kind is None:
                raise ValueError(f"model {name!r} is not a known kind and has no {name}.kind key")
        specs.append(ModelSpec(name=name, kind=kind, params=params))
    config.models = specs

    unknown = sorted(set(kv) - taken)
    if unknown:
        raise ValueError(f"unknown config key(s): {', '.join(unknown)}")
    return config.validate()


def load_config(path) -> ExperimentConfig:
    return parse_config(Path(path).read_text(encoding="utf-8"))


def build_estimator(spec: ModelSpec, seed: int):
    """Instantiate the estimator a model spec describes."""
    P = dict(spec.params)

    def pop_float(key, default):
        return float(P.pop(key, default))

    def pop_int(key, default):
        return int(P.pop(key, default))

    if spec.kind == "mlp":
        est = MlpRegressor(
            n_hidden=pop_int("hidden", 26),
            max_epochs=pop_int("epochs", 50),
            epsilon_init=pop_float("epsilon_init", 1e-3),
            init_scale=pop_float("init_scale", 0.5),
            random_state=seed,
        )
    elif spec.kind == "svm":
        gamma = P.pop("gamma", None)
        max_updates = P.pop("max_updates", None)
        est = KernelSVR(
            kernel=P.pop("kernel", "rbf"),
            C=pop_float("C", 10.0),
            epsilon_tube=pop_float("epsilon_tube", 0.01),
            degree=pop_int("degree", 3),
            coef0=pop_float("coef0", 1.0),
            gamma=None if gamma is None else float(gamma),
            tol=pop_float("tol", 1e-4),
            max_updates=None if max_updates is None else int(max_updates),
        )
    elif spec.kind == "anfis":
        est = AnfisRegressor(
            n_mfs=pop_int("mfs", 3),
            mf_kind=P.pop("mf_kind", P.pop("kind", "triangular")),
            epochs=pop_int("epochs", 12),
            eta=pop_float("eta", 0.01),
        )
    elif spec.kind == "dbnn":
        est = DbnnRegressor(
            n_bins=pop_int("K", 16),
            n_target_bins=pop_int("K_t", 32),
            rounds=pop_int("rounds", 50),
            learn_rate=pop_float("learn_rate", 0.5),
        )
    else:
        raise ValueError(f"unknown model {spec.kind!r}")
    if P:
        raise ValueError(f"unknown option(s) for model {spec.name!r}: {', '.join(sorted(P))}")
    return est


# --------------------------------------------------------------------------
# pipeline


@dataclass
class PreparedDataset:
    """One dataset scaled, windowed, and split, with raw counterparts."""

    label: str
    frame: TimeSeriesFrame
    scaler: MinMaxScaler
    train: SupervisedDataset
    test: SupervisedDataset
    raw_train: SupervisedDataset
    raw_test: SupervisedDataset


def prepare_dataset(frame: TimeSeriesFrame, config: ExperimentConfig, label: str) -> PreparedDataset:
    features = tuple(config.feature_columns)
    target = config.target_column
    horizon = config.horizon
    n_pairs = len(frame) - horizon
    if n_pairs < 2:
        raise ValueError(f"dataset {label!r}: too few records ({len(frame)}) for horizon {horizon}")
    k = split_index(n_pairs, config.train_fraction)

    # Fit the scaler on exactly the values training consumes: feature
    # columns over the train feature days, target column over the train
    # target days.  Nothing from the test split touches the parameters.
    fit_values = {}
    for name in features:
        fit_values[name] = frame.column(name)[:k]
    target_train = frame.column(target)[horizon : k + horizon]
    if target in fit_values:
        fit_values[target] = np.concatenate([fit_values[target], target_train])
    else:
        fit_values[target] = target_train
    scaler = MinMaxScaler().fit_values(fit_values)

    scaled = scaler.transform(frame)
    dataset = make_supervised(scaled, features, target, horizon)
    train, test = chrono_split(dataset, config.train_fraction)
    raw_dataset = make_supervised(frame, features, target, horizon)
    raw_train, raw_test = chrono_split(raw_dataset, config.train_fraction)
    return PreparedDataset(
        label=label,
        frame=frame,
        scaler=scaler,
        train=train,
        test=test,
        raw_train=raw_train,
        raw_test=raw_test,
    )


def persistence_baseline(prep: PreparedDataset, config: ExperimentConfig) -> EvalStats:
    """Test-phase stats for the naive "tomorrow equals today" forecast."""
    target = config.target_column
    horizon = config.horizon
    scaled_target = prep.scaler.scale_values(prep.frame.column(target), target)
    raw_target = prep.frame.column(target)
    n_pairs = len(prep.frame) - horizon
    k = split_index(n_pairs, config.train_fraction)
    idx = np.arange(k, n_pairs)  # test pairs: feature day i, target day i+horizon
    return evaluate(
        scaled_target[idx + horizon],
        scaled_target[idx],
        raw_target[idx + horizon],
        raw_target[idx],
    )


@dataclass
class TrainedEntry:
    dataset: str
    model_name: str
    kind: str
    estimator: object
    train_seconds: float
    stats: dict  # phase -> EvalStats
    test_dates: list
    test_actual_raw: np.ndarray
    test_predicted_raw: np.ndarray


def train_and_evaluate(prep: PreparedDataset, spec: ModelSpec, seed: int, target: str) -> TrainedEntry:
    est = build_estimator(spec, seed)
    t0 = time.perf_counter()
    est.fit(prep.train.X, prep.train.t)
    seconds = time.perf_counter() - t0

    stats = {}
    preds = {}
    for phase, ds, raw_ds in (
        ("train", prep.train, prep.raw_train),
        ("test", prep.test, prep.raw_test),
    ):
        predicted_scaled = np.asarray(est.predict(ds.X), dtype=float)
        predicted_raw = prep.scaler.inverse_values(predicted_scaled, target)
        stats[phase] = evaluate(ds.t, predicted_scaled, raw_ds.t, predicted_raw)
        preds[phase] = predicted_raw
    return TrainedEntry(
        dataset=prep.label,
        model_name=spec.name,
        kind=spec.kind,
        estimator=est,
        train_seconds=seconds,
        stats=stats,
        test_dates=list(prep.test.dates),
        test_actual_raw=np.asarray(prep.raw_test.t, dtype=float),
        test_predicted_raw=preds["test"],
    )


@dataclass(frozen=True)
class ReportRow:
    model: str
    dataset: str
    phase: str
    rmse_scaled: float
    map: float
    mape: float
    corr: object
    train_seconds: float


@dataclass
class EvalReport:
    rows: list

    @classmethod
    def from_csv(cls, text: str) -> "EvalReport":
        lines = [ln for ln in text.splitlines() if ln.strip()]
        if not lines or lines[0] != ",".join(REPORT_COLUMNS):
            raise ValueError("not a report CSV: bad header")
        rows = []
        for ln in lines[1:]:
            parts = ln.split(",")
            if len(parts) != len(REPORT_COLUMNS):
                raise ValueError(f"bad report line: {ln!r}")
            model, dataset, phase, rmse_s, map_s, mape_s, corr_s, secs_s = parts
            rows.append(
                ReportRow(
                    model=model,
                    dataset=dataset,
                    phase=phase,
                    rmse_scaled=float(rmse_s),
                    map=float(map_s),
                    mape=float(mape_s),
                    corr=None if corr_s == "NA" else float(corr_s),
                    train_seconds=math.nan if secs_s == "NA" else float(secs_s),
                )
            )
        return cls(rows=rows)


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    report: EvalReport
    entries: list
    baselines: dict  # dataset label -> test-phase persistence EvalStats
    scalers: dict  # dataset label -> fitted MinMaxScaler


def _dataset_labels(paths) -> list:
    labels = []
    for p in paths:
        stem = Path(p).stem
        label = stem
        n = 2
        while label in labels:
            label = f"{stem}_{n}"
            n += 1
        labels.append(label)
    return labels


def run_experiment(config: ExperimentConfig, base_dir=None) -> ExperimentResult:
    """Train every configured model on every dataset and assemble the report.

    Deterministic for a fixed config and seed, regardless of ``workers``.
    """
    config.validate()
    base = Path(base_dir) if base_dir is not None else Path(".")
    labels = _dataset_labels(config.data_files)

    prepared = []
    for path, label in zip(config.data_files, labels):
        p = Path(path)
        frame = load_ohlc_csv(p if p.is_absolute() else base / p, index_name=label)
        prepared.append(prepare_dataset(frame, config, label))

    tasks = [(di, mi) for di in range(len(prepared)) for mi in range(len(config.models))]

    def run_task(key):
        di, mi = key
        spec = config.models[mi]
        try:
            return train_and_evaluate(prepared[di], spec, config.seed, config.target_column)
        except Exception as exc:
            raise RuntimeError(
                f"model {spec.name!r} failed on dataset {prepared[di].label!r}: {exc}"
            ) from exc

    if config.workers == 1:
        results = {key: run_task(key) for key in tasks}
    else:
        with ThreadPoolExecutor(max_workers=config.workers) as pool:
            futures = {key: pool.submit(run_task, key) for key in tasks}
            results = {key: fut.result() for key, fut in futures.items()}

    entries = [results[key] for key in tasks]  # canonical dataset-major order
    rows = []
    for entry in entries:
        for phase in ("train", "test"):
            s = entry.stats[phase]
            rows.append(
                ReportRow(
                    model=entry.model_name,
                    dataset=entry.dataset,
                    phase=phase,
                    rmse_scaled=s.rmse_scaled,
                    map=s.map,
                    mape=s.mape,
                    corr=s.corr,
                    train_seconds=entry.train_seconds,
                )
            )

    baselines = {prep.label: persistence_baseline(prep, config) for prep in prepared}
    scalers = {prep.label: prep.scaler for prep in prepared}
    return ExperimentResult(
        config=config,
        report=EvalReport(rows=rows),
        entries=entries,
        baselines=baselines,
        scalers=scalers,
    )


# --------------------------------------------------------------------------
# emission


def _fmt(value) -> str:
    if value is None:
        return "NA"
    if isinstance(value, float):
        return repr(float(value))  # plain-float repr even for numpy scalars
    return str(value)


def emit_report(report: EvalReport, fmt: str = "csv", include_timing: bool = True) -> str:
    """Render the report; timing cells become NA when excluded.

    Wall-clock timing is inherently non-reproducible, so byte-level
    comparisons should pass ``include_timing=False``.
    """
    if not report.rows:
        raise ValueError("empty report")
    if fmt == "csv":
        lines = [",".join(REPORT_COLUMNS)]
        for r in report.rows:
            secs = _fmt(r.train_seconds) if include_timing else "NA"
            lines.append(
                ",".join(
                    [
                        r.model,
                        r.dataset,
                        r.phase,
                        _fmt(r.rmse_scaled),
                        _fmt(r.map),
                        _fmt(r.mape),
                        _fmt(r.corr),
                        secs,
                    ]
                )
            )
        return "\n".join(lines) + "\n"
    if fmt == "text":
        by_dataset = {}
        for r in report.rows:
            by_dataset.setdefault(r.dataset, []).append(r)
        blocks = []
        head = f"{'model':<12} {'phase':<6} {'rmse_scaled':>12} {'map':>10} {'mape':>10} {'corr':>8} {'secs':>8}"
        for dataset, rows in by_dataset.items():
            lines = [f"== {dataset} ==", head]
            for r in rows:
                corr = "NA" if r.corr is None else f"{r.corr:.4f}"
                secs = f"{r.train_seconds:.3f}" if include_timing else "NA"
                lines.append(
                    f"{r.model:<12} {r.phase:<6} {r.rmse_scaled:>12.6f} "
                    f"{r.map:>10.3f} {r.mape:>10.3f} {corr:>8} {secs:>8}"
                )
            blocks.append("\n".join(lines))
        return "\n\n".join(blocks) + "\n"
    raise ValueError(f"unknown report format {fmt!r}")


def emit_predictions(dates, actual, predicted) -> str:
    """Plot-ready CSV of dated actual/predicted pairs in raw index units."""
    actual = np.asarray(actual, dtype=float)
    predicted = np.asarray(predicted, dtype=float)
    if not (len(dates) == actual.shape[0] == predicted.shape[0]):
        raise ValueError("dates, actual, and predicted must have equal lengths")
    lines = ["date,actual,predicted"]
    for d, a, p in zip(dates, actual, predicted):
        lines.append(f"{d.isoformat()},{float(a)!r},{float(p)!r}")
    return "\n".join(lines) + "\n"


def emit_trace(trace_rows) -> str:
    """Damping-trace CSV (one row per proposal)."""
    lines = ["epoch,psi,epsilon,accepted"]
    for row in trace_rows:
        lines.append(
            f"{row['epoch']},{float(row['psi'])!r},{float(row['epsilon'])!r},{row['accepted']}"
        )
    return "\n".join(lines) + "\n"


# --------------------------------------------------------------------------
# model files


def _model_payload(kind: str, estimator) -> dict:
    if kind == "mlp":
        return estimator.network_.to_dict()
    if kind == "svm":
        return estimator.model_.to_dict()
    if kind == "anfis":
        return estimator.model_.to_dict()
    if kind == "dbnn":
        return estimator.to_dict()
    raise ValueError(f"unknown model {kind!r}")


def _model_from_payload(kind: str, payload: dict):
    if kind == "mlp":
        return MlpNetwork.from_dict(payload)
    if kind == "svm":
        return SvmModel.from_dict(payload)
    if kind == "anfis":
        return AnfisModel.from_dict(payload)
    if kind == "dbnn":
        return DbnnRegressor.from_dict(payload)
    raise ValueError(f"unknown model {kind!r}")


def model_predict(kind: str, model, X) -> np.ndarray:
    """Uniform prediction interface over the four loaded model types."""
    X = np.asarray(X, dtype=float)
    if kind == "mlp":
        return model.forward(X)
    if kind == "svm":
        return model.predict(X)
    if kind == "anfis":
        return model.forward(X)
    if kind == "dbnn":
        return model.predict(X)
    raise ValueError(f"unknown model {kind!r}")


def save_model(path, kind: str, estimator, pipeline: dict = None) -> None:
    """Write a trained model (plus optional pipeline context) as JSON."""
    if kind not in MODEL_KINDS:
        raise ValueError(f"unknown model {kind!r}")
    payload = {
        "format": MODEL_FILE_FORMAT,
        "version": MODEL_FILE_VERSION,
        "kind": kind,
        "model": _model_payload(kind, estimator),
    }
    if pipeline is not None:
        payload["pipeline"] = pipeline
    Path(path).write_text(json.dumps(payload, indent=1), encoding="utf-8")


def load_model(path, expect_kind: str = None):
    """Read a model file; returns ``(kind, model, pipeline_or_None)``."""
    try:
        payload = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ValueError(f"{path}: not a model file ({exc})") from None
    if not isinstance(payload, dict) or payload.get("format") != MODEL_FILE_FORMAT:
        raise ValueError(f"{path}: not a {MODEL_FILE_FORMAT} file")
    if payload.get("version") != MODEL_FILE_VERSION:
        raise ValueError(f"{path}: unsupported version {payload.get('version')!r}")
    kind = payload.get("kind")
    if kind not in MODEL_KINDS:
        raise ValueError(f"{path}: unknown model {kind!r}")
    if expect_kind is not None and kind != expect_kind:
        raise TypeError(f"{path}: holds a {kind!r} model, not {expect_kind!r}")
    model = _model_from_payload(kind, payload["model"])
    return kind, model, payload.get("pipeline")


def pipeline_context(config: ExperimentConfig, scaler: MinMaxScaler) -> dict:
    return {
        "scaler": scaler.to_dict(),
        "features": list(config.feature_columns),
        "target": config.target_column,
        "horizon": config.horizon,
    }


def _safe_name(text: str) -> str:
    return re.sub(r"[^A-Za-z0-9._-]+", "_", text)


def write_outputs(result: ExperimentResult, out_dir) -> list:
    """Write report, per-model predictions, model files, and traces."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []

    def emit(name, text):
        p = out / name
        p.write_text(text, encoding="utf-8")
        written.append(p)

    emit("report.csv", emit_report(result.report, "csv"))
    emit("report.txt", emit_report(result.report, "text"))
    for entry in result.entries:
        tag = f"{_safe_name(entry.dataset)}_{_safe_name(entry.model_name)}"
        emit(
            f"predictions_{tag}.csv",
            emit_predictions(entry.test_dates, entry.test_actual_raw, entry.test_predicted_raw),
        )
        model_path = out / f"model_{tag}.json"
        save_model(
            model_path,
            entry.kind,
            entry.estimator,
            pipeline=pipeline_context(result.config, result.scalers[entry.dataset]),
        )
        written.append(model_path)
        trace = getattr(entry.estimator, "trace_", None)
        if trace:
            emit(f"trace_{tag}.csv", emit_trace(trace))
    return written


# --------------------------------------------------------------------------
# synthetic data


def make_synthetic_ohlc(n_days: int, seed: int = 0, start=date(2018, 1, 2), index_name: str = "synthetic") -> TimeSeriesFrame:
    """Chaotic but learnable OHLC series from the logistic map.

    The close follows 1000 + 2000*x with x iterated under x <- 3.9*x*(1-x);
    open jitters off the previous close, high/low wrap the open/close
    envelope.  Dates are consecutive weekdays.
    """
    if n_days < 2:
        raise ValueError(f"need at least 2 days, got {n_days}")
    rng = np.random.default_rng(seed)
    x = rng.uniform(0.1, 0.9)
    xs = np.empty(n_days)
    for i in range(n_days):
        xs[i] = x
        x = 3.9 * x * (1.0 - x)
    close = 1000.0 + 2000.0 * xs

    open_jitter = rng.uniform(-0.005, 0.005, size=n_days)
    open_ = np.empty(n_days)
    open_[0] = close[0] * (1.0 + open_jitter[0])
    open_[1:] = close[:-1] * (1.0 + open_jitter[1:])
    hi_jitter = np.abs(rng.normal(0.0, 0.003, size=n_days))
    lo_jitter = np.abs(rng.normal(0.0, 0.003, size=n_days))
    high = np.maximum(open_, close) * (1.0 + hi_jitter)
    low = np.minimum(open_, close) * (1.0 - lo_jitter)

    dates = []
    d = start
    while len(dates) < n_days:
        if d.weekday() < 5:
            dates.append(d)
        d += timedelta(days=1)
    frame = TimeSeriesFrame(
        dates=dates, open=open_, high=high, low=low, close=close, index_name=index_name
    )
    return frame.validate()


__all__ = [
    "ModelSpec",
    "ExperimentConfig",
    "parse_kv",
    "parse_config",
    "load_config",
    "build_estimator",
    "PreparedDataset",
    "prepare_dataset",
    "persistence_baseline",
    "TrainedEntry",
    "ReportRow",
    "EvalReport",
    "ExperimentResult",
    "run_experiment",
    "emit_report",
    "emit_predictions",
    "emit_trace",
    "model_predict",
    "save_model",
    "load_model",
    "pipeline_context",
    "write_outputs",
    "make_synthetic_ohlc",
]
