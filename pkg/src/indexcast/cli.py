"""Command-line entry points.

Three subcommands: ``run`` trains and evaluates every configured model,
``predict`` applies a saved model file to fresh OHLC data, and ``synth``
generates a synthetic quote series for offline experiments.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .dataio import MinMaxScaler, load_ohlc_csv, make_supervised, write_ohlc_csv
from .harness import (
    emit_predictions,
    emit_report,
    load_config,
    load_model,
    make_synthetic_ohlc,
    model_predict,
    run_experiment,
    write_outputs,
)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="indexcast",
        description="Train, evaluate, and apply next-day index forecasting models.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="train and evaluate the models a config file describes")
    run_p.add_argument("--config", required=True, help="flat key=value config file")
    run_p.add_argument("--out", default="out", help="directory for reports, predictions, and models")
    run_p.add_argument("--seed", type=int, default=None, help="override the config's run.seed")

    pred_p = sub.add_parser("predict", help="apply a saved model to an OHLC CSV")
    pred_p.add_argument("--model", required=True, help="model file written by `run`")
    pred_p.add_argument("--data", required=True, help="OHLC CSV to predict on")

    synth_p = sub.add_parser("synth", help="write a synthetic OHLC series")
    synth_p.add_argument("--n", type=int, required=True, help="number of trade days")
    synth_p.add_argument("--out", required=True, help="output CSV path")
    synth_p.add_argument("--seed", type=int, default=0)
    return parser


def _cmd_run(args) -> int:
    config = load_config(args.config)
    if args.seed is not None:
        config.seed = args.seed
    result = run_experiment(config, base_dir=Path(args.config).resolve().parent)
    written = write_outputs(result, args.out)
    sys.stdout.write(emit_report(result.report, "text"))
    print(f"wrote {len(written)} files under {args.out}")
    return 0


def _cmd_predict(args) -> int:
    kind, model, pipeline = load_model(args.model)
    if pipeline is None:
        raise ValueError(f"{args.model}: file has no pipeline section; cannot prepare features")
    frame = load_ohlc_csv(args.data)
    scaler = MinMaxScaler.from_dict(pipeline["scaler"])
    features = tuple(pipeline["features"])
    target = pipeline["target"]
    horizon = int(pipeline["horizon"])

    scaled = scaler.transform(frame)
    dataset = make_supervised(scaled, features, target, horizon)
    raw_dataset = make_supervised(frame, features, target, horizon)
    predicted_scaled = model_predict(kind, model, dataset.X)
    predicted_raw = scaler.inverse_values(predicted_scaled, target)
    sys.stdout.write(emit_predictions(dataset.dates, raw_dataset.t, predicted_raw))
    return 0


def _cmd_synth(args) -> int:
    frame = make_synthetic_ohlc(args.n, seed=args.seed)
    out = Path(args.out)
    if out.parent and not out.parent.exists():
        out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(write_ohlc_csv(frame), encoding="utf-8")
    print(f"wrote {args.n} days to {out}")
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    handlers = {"run": _cmd_run, "predict": _cmd_predict, "synth": _cmd_synth}
    try:
        return handlers[args.command](args)
    except Exception as exc:  # CLI boundary: one diagnostic line, nonzero exit
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
