"""Command-line surface composing the library into the diagnostic experiments.

Subcommands: train, scan, sweep, adv, disagree, watermark, surface, ks.
Shared flags: ``--config`` (flat key=value file), ``--seed``, ``--out-dir``,
``--workers``.  Explicit flags override config values, which override
defaults.  Exit codes: 0 success, 2 validation error, 3 I/O or parse error,
4 numeric error.

Every command validates its inputs, computes the full result, and only then
writes its output files (atomically), so a failing run leaves nothing
behind.  Report JSON is byte-reproducible from (config, seed) except for the
timestamp inside the ``meta`` object.
"""

from __future__ import annotations

import argparse
import os
import sys

import numpy as np

from . import experiments, reportio
from .cliconfig import ExperimentConfig, load_dataset, parse_radii
from .data import save_points_csv
from .errors import DataError, NumericError, ParseError, ValidationError
from .model import init_mlp, load_model, save_model
from .scan import ScanConfig, class_surface, radius_sweep, zonnscan
from .stats import ks_two_sample, summarize
from .training import TrainConfig, train

_DEFAULT_SCAN_SAMPLES = 10_000
_DEFAULT_DIST_RADIUS = 0.025
_DEFAULT_WM_SAMPLES = 1_000
_DEFAULT_WM_RUNS = 100


def _first(*values):
    for v in values:
        if v is not None:
            return v
    return None


def _load_config(args) -> ExperimentConfig:
    if args.config:
        return ExperimentConfig.load(args.config)
    return ExperimentConfig.empty()


def _out_dir(args, cfg) -> str:
    out = _first(args.out_dir, cfg.get("out_dir"), ".")
    os.makedirs(out, exist_ok=True)
    return out


def _seed(args, cfg, *extra_keys) -> int:
    keys = [cfg.get_int(k) for k in extra_keys] + [cfg.get_int("seed")]
    return int(_first(args.seed, *keys, 0))


def _workers(args, cfg) -> int:
    return int(_first(args.workers, cfg.get_int("workers"), 1))


def _model_path(args, cfg) -> str:
    path = _first(getattr(args, "model", None), cfg.get("model"))
    if path is None:
        raise ValidationError("no model given; pass --model or set 'model' in the config")
    return path


def _parse_point(text: str) -> np.ndarray:
    try:
        return np.array([float(v) for v in text.split(",")], dtype=np.float64)
    except ValueError as exc:
        raise ValidationError(f"bad point spec {text!r}: {exc}") from exc


def _scan_target(args, cfg) -> np.ndarray:
    if args.point is not None and args.index is not None:
        raise ValidationError("give either --point or --index, not both")
    if args.point is not None:
        return _parse_point(args.point)
    if args.index is not None:
        data = load_dataset(cfg, args.split)
        if not 0 <= args.index < data.n:
            raise ValidationError(f"--index {args.index} outside dataset of size {data.n}")
        return data.inputs[args.index]
    raise ValidationError("give --point or --index to choose the input to scan")


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------


def cmd_train(args) -> int:
    cfg = _load_config(args)
    out = _out_dir(args, cfg)
    data = load_dataset(cfg, "train")
    seed = _seed(args, cfg, "train.seed")
    hidden_spec = _first(args.hidden, cfg.get("train.hidden"), "")
    hidden = [int(v) for v in hidden_spec.split(",") if v.strip()]
    activation = _first(args.activation, cfg.get("train.activation"), "relu")
    model = init_mlp([data.dim, *hidden, data.num_classes], activation, seed=seed)
    tc = TrainConfig(
        learning_rate=float(_first(args.learning_rate, cfg.get_float("train.learning_rate"), 0.1)),
        epochs=int(_first(args.epochs, cfg.get_int("train.epochs"), 50)),
        batch_size=int(_first(args.batch_size, cfg.get_int("train.batch_size"), 32)),
        seed=seed,
    )
    result = train(model, data, tc)
    model_path = os.path.join(out, args.model_out)
    save_model(result.model, model_path)
    reportio.write_rows_csv(
        os.path.join(out, "train_history.csv"),
        ["epoch", "loss", "accuracy"],
        [(s.epoch, float(s.loss), float(s.accuracy)) for s in result.history],
    )
    final = result.history[-1]
    print(f"trained {result.model!r}: loss={final.loss:.4f} accuracy={final.accuracy:.4f}")
    print(f"wrote {model_path} and {os.path.join(out, 'train_history.csv')}")
    return 0


def cmd_scan(args) -> int:
    cfg = _load_config(args)
    out = _out_dir(args, cfg)
    model = load_model(_model_path(args, cfg))
    x = _scan_target(args, cfg)
    sc = ScanConfig(
        radius=float(_first(args.radius, cfg.get_float("scan.radius"))),
        num_samples=int(_first(args.samples, cfg.get_int("scan.samples"), _DEFAULT_SCAN_SAMPLES)),
        seed=_seed(args, cfg, "scan.seed"),
        keep_entropies=args.keep_entropies,
    )
    report = zonnscan(model, x, sc, workers=_workers(args, cfg))
    path = os.path.join(out, "scan_report.json")
    reportio.write_json(path, report.to_dict())
    if args.keep_entropies:
        ent_path = os.path.join(out, "scan_entropies.csv")
        reportio.write_values_csv(ent_path, report.entropy_samples)
        print(f"wrote {ent_path}")
    print(f"index={report.index_value!r}")
    print(f"wrote {path}")
    return 0


def cmd_sweep(args) -> int:
    cfg = _load_config(args)
    out = _out_dir(args, cfg)
    model = load_model(_model_path(args, cfg))
    x = _scan_target(args, cfg)
    radii = parse_radii(_first(args.radii, "0:1:0.05"))
    reports = radius_sweep(
        model, x, radii,
        num_samples=int(_first(args.samples, cfg.get_int("scan.samples"), _DEFAULT_SCAN_SAMPLES)),
        seed=_seed(args, cfg, "scan.seed"),
        workers=_workers(args, cfg),
    )
    header = ["radius", "index_value"] + [f"mean_confidence_{c}" for c in range(model.num_classes)]
    rows = [
        [float(r.config.radius), float(r.index_value)] + [float(v) for v in r.mean_confidence]
        for r in reports
    ]
    path = os.path.join(out, "sweep.csv")
    reportio.write_rows_csv(path, header, rows)
    print(f"swept {len(radii)} radii; wrote {path}")
    return 0


def cmd_adv(args) -> int:
    cfg = _load_config(args)
    out = _out_dir(args, cfg)
    model = load_model(_model_path(args, cfg))
    data = load_dataset(cfg, "test")
    result = experiments.adv_experiment(
        model, data,
        n=int(_first(args.count, cfg.get_int("attack.count"), 100)),
        epsilon=float(_first(args.epsilon, cfg.get_float("attack.epsilon"))),
        radius=float(_first(args.radius, cfg.get_float("scan.radius"), _DEFAULT_DIST_RADIUS)),
        num_samples=int(_first(args.samples, cfg.get_int("scan.samples"), _DEFAULT_SCAN_SAMPLES)),
        seed=_seed(args, cfg, "scan.seed"),
        workers=_workers(args, cfg),
    )
    reportio.write_json(os.path.join(out, "adv_report.json"), result.to_dict())
    reportio.write_values_csv(os.path.join(out, "adv_clean_values.csv"), result.clean_values)
    reportio.write_values_csv(os.path.join(out, "adv_adversarial_values.csv"), result.adv_values)
    reportio.write_rows_csv(
        os.path.join(out, "adv_pairs.csv"),
        ["index", "orig_label", "adv_label", "linf_distance"],
        result.adversarial_set.rows(),
    )
    print(
        f"clean mean={result.clean_summary.mean:.4f} "
        f"adversarial mean={result.adv_summary.mean:.4f} "
        f"KS D={result.ks.statistic:.4f} p={result.ks.p_value:.3e}"
    )
    print(f"wrote adv_report.json and distributions in {out}")
    return 0


def cmd_disagree(args) -> int:
    cfg = _load_config(args)
    out = _out_dir(args, cfg)
    paths = list(args.model or [])
    if not paths and cfg.get("models"):
        paths = [p.strip() for p in cfg.get("models").split(";") if p.strip()]
    if len(paths) < 2:
        raise ValidationError("disagree needs at least two --model paths (or 'models' in config)")
    models = [load_model(p) for p in paths]
    data = load_dataset(cfg, "test")
    result = experiments.disagreement_experiment(
        models, data,
        baseline_count=int(_first(args.baseline_count, 200)),
        radius=float(_first(args.radius, cfg.get_float("scan.radius"), _DEFAULT_DIST_RADIUS)),
        num_samples=int(_first(args.samples, cfg.get_int("scan.samples"), _DEFAULT_SCAN_SAMPLES)),
        seed=_seed(args, cfg, "scan.seed"),
        workers=_workers(args, cfg),
    )
    reportio.write_json(os.path.join(out, "disagree_report.json"), result.to_dict())
    reportio.write_rows_csv(
        os.path.join(out, "corner_indices.csv"), ["index"],
        [(int(i),) for i in result.corner_indices],
    )
    reportio.write_values_csv(os.path.join(out, "corner_values.csv"), result.corner_values)
    reportio.write_values_csv(os.path.join(out, "baseline_values.csv"), result.baseline_values)
    if result.diagnostic:
        print(result.diagnostic)
    else:
        print(
            f"{result.corner_indices.size} corner cases; "
            f"corner mean={result.corner_summary.mean:.4f} "
            f"baseline mean={result.baseline_summary.mean:.4f} "
            f"KS p={result.ks.p_value:.3e}"
        )
    print(f"wrote disagree_report.json and distributions in {out}")
    return 0


def cmd_watermark(args) -> int:
    cfg = _load_config(args)
    out = _out_dir(args, cfg)
    model = load_model(_model_path(args, cfg))
    data = load_dataset(cfg, "test")
    seed = _seed(args, cfg, "scan.seed")
    ft = TrainConfig(
        learning_rate=float(_first(cfg.get_float("finetune.learning_rate"), 0.5)),
        epochs=int(_first(cfg.get_int("finetune.epochs"), 200)),
        batch_size=int(_first(cfg.get_int("finetune.batch_size"), 8)),
        seed=seed,
    )
    result = experiments.watermark_experiment(
        model, data,
        key_size=int(_first(args.key_size, cfg.get_int("watermark.key_size"), 20)),
        epsilon=float(_first(args.epsilon, cfg.get_float("attack.epsilon"))),
        finetune_config=ft,
        radius=float(_first(args.radius, cfg.get_float("scan.radius"), _DEFAULT_DIST_RADIUS)),
        num_samples=int(_first(args.samples, cfg.get_int("scan.samples"), _DEFAULT_WM_SAMPLES)),
        runs=int(_first(args.runs, cfg.get_int("watermark.runs"), _DEFAULT_WM_RUNS)),
        seed=seed,
        workers=_workers(args, cfg),
    )
    reportio.write_json(os.path.join(out, "watermark_report.json"), result.to_dict())
    reportio.write_values_csv(os.path.join(out, "watermark_pre_values.csv"), result.pre_values)
    reportio.write_values_csv(os.path.join(out, "watermark_post_values.csv"), result.post_values)
    save_model(result.finetune.model, os.path.join(out, "watermarked_model.json"))
    save_points_csv(
        result.key.inputs, result.key.target_labels, os.path.join(out, "watermark_key.csv")
    )
    print(
        f"key accuracy={result.finetune.key_accuracy:.2f} "
        f"pre mean={result.pre_summary.mean:.4f} post mean={result.post_summary.mean:.4f} "
        f"KS p={result.ks.p_value:.3e}"
    )
    print(f"wrote watermark_report.json and distributions in {out}")
    return 0


def cmd_surface(args) -> int:
    cfg = _load_config(args)
    out = _out_dir(args, cfg)
    model = load_model(_model_path(args, cfg))
    shares = class_surface(
        model,
        num_samples=int(_first(args.samples, cfg.get_int("scan.samples"), _DEFAULT_SCAN_SAMPLES)),
        seed=_seed(args, cfg, "scan.seed"),
        workers=_workers(args, cfg),
    )
    path = os.path.join(out, "surface.json")
    reportio.write_json(path, {"class_shares": shares.tolist()})
    print("class shares:", ", ".join(f"{v:.4f}" for v in shares))
    print(f"wrote {path}")
    return 0


def cmd_ks(args) -> int:
    cfg = _load_config(args)
    out = _out_dir(args, cfg)
    a = reportio.read_values_csv(args.a)
    b = reportio.read_values_csv(args.b)
    result = ks_two_sample(a, b)
    payload = {
        "ks": result.to_dict(),
        "a_summary": summarize(a).to_dict(),
        "b_summary": summarize(b).to_dict(),
    }
    path = os.path.join(out, "ks.json")
    reportio.write_json(path, payload)
    print(f"D={result.statistic!r} p={result.p_value!r}")
    print(f"wrote {path}")
    return 0


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="zonnscan",
        description="Boundary-entropy scanning of neural classifiers",
    )
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="flat key=value config file")
    common.add_argument("--seed", type=int, help="base seed (overrides config)")
    common.add_argument("--out-dir", help="output directory (default '.')")
    common.add_argument("--workers", type=int, help="worker threads per scan (default 1)")

    point = argparse.ArgumentParser(add_help=False)
    point.add_argument("--model", help="model JSON path")
    point.add_argument("--point", help="inline input point, e.g. '0.5,0.5'")
    point.add_argument("--index", type=int, help="row of the config dataset to scan")
    point.add_argument("--split", choices=("train", "test"), default="test",
                       help="dataset split used with --index")

    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", parents=[common], help="train a model on the config dataset")
    p.add_argument("--hidden", help="comma-separated hidden layer sizes, e.g. '32,16'")
    p.add_argument("--activation", help="hidden activation (relu/sigmoid/tanh/identity)")
    p.add_argument("--learning-rate", type=float)
    p.add_argument("--epochs", type=int)
    p.add_argument("--batch-size", type=int)
    p.add_argument("--model-out", default="model.json", help="model filename inside out-dir")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("scan", parents=[common, point], help="index around one input")
    p.add_argument("--radius", type=float, help="ball radius (required unless in config)")
    p.add_argument("--samples", type=int, help="Monte Carlo sample count")
    p.add_argument("--keep-entropies", action="store_true",
                   help="also write the per-sample entropies CSV")
    p.set_defaults(func=cmd_scan)

    p = sub.add_parser("sweep", parents=[common, point], help="index across radii")
    p.add_argument("--radii", help="'start:stop:step' or comma list (default 0:1:0.05)")
    p.add_argument("--samples", type=int)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("adv", parents=[common], help="clean vs adversarial distributions")
    p.add_argument("--model", help="model JSON path")
    p.add_argument("--count", type=int, help="number of attacked inputs (default 100)")
    p.add_argument("--epsilon", type=float, help="attack step size")
    p.add_argument("--radius", type=float, help="scan radius (default 0.025)")
    p.add_argument("--samples", type=int, help="samples per scan (default 10000)")
    p.set_defaults(func=cmd_adv)

    p = sub.add_parser("disagree", parents=[common], help="corner-case distributions")
    p.add_argument("--model", action="append", help="model JSON path (repeat for each model)")
    p.add_argument("--baseline-count", type=int, help="random baseline size (default 200)")
    p.add_argument("--radius", type=float)
    p.add_argument("--samples", type=int)
    p.set_defaults(func=cmd_disagree)

    p = sub.add_parser("watermark", parents=[common], help="pre/post watermark distributions")
    p.add_argument("--model", help="model JSON path")
    p.add_argument("--key-size", type=int, help="key size, even (default 20)")
    p.add_argument("--epsilon", type=float, help="attack step for the adversarial half")
    p.add_argument("--runs", type=int, help="scans per key input (default 100)")
    p.add_argument("--radius", type=float)
    p.add_argument("--samples", type=int, help="samples per scan (default 1000)")
    p.set_defaults(func=cmd_watermark)

    p = sub.add_parser("surface", parents=[common], help="class shares of the input cube")
    p.add_argument("--model", help="model JSON path")
    p.add_argument("--samples", type=int)
    p.set_defaults(func=cmd_surface)

    p = sub.add_parser("ks", parents=[common], help="KS test between two value CSVs")
    p.add_argument("--a", required=True, help="first values CSV")
    p.add_argument("--b", required=True, help="second values CSV")
    p.set_defaults(func=cmd_ks)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ValidationError, DataError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ParseError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except NumericError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
