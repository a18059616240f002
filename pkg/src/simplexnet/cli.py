"""Command line pipeline: simplex, gen-data, train, eval, embed.

Every command is driven by a single JSON run config (see config.py) plus a
few overriding flags.  Exit codes: 0 success, 2 config or format error,
3 training divergence.  Output files are written atomically and floats are
printed with 17 significant digits so they round-trip exactly.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import tempfile

import numpy as np

from .config import ConfigError, load_run_config
from .data import (
    LabeledDataset,
    gen_background_blobs,
    gen_blobs,
    load_csv,
    load_feature_csv,
    load_idx,
    make_open_split,
    materialize_split,
    train_test_blobs,
)
from .inference import nearest_center, open_set_scores
from .losses import LossSpec
from .metrics import (
    EvalReport,
    auc_roc,
    center_distance_matrix,
    closed_set_accuracy,
    scatter_stats,
)
from .network import attach_dam, build_mlp, init_parameters, load_checkpoint, save_checkpoint
from .simplex import build_centers
from .training import DivergedError, TrainConfig, train

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DIVERGED = 3


def _fmt(v: float) -> str:
    return f"{float(v):.17g}"


def _atomic_write_text(path: str, text: str) -> None:
    directory = os.path.dirname(os.path.abspath(path)) or "."
    fd, tmp = tempfile.mkstemp(dir=directory)
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _write_matrix_csv(path: str, matrix: np.ndarray, header: list[str] | None = None) -> None:
    lines = []
    if header is not None:
        lines.append(",".join(header))
    for row in np.atleast_2d(matrix):
        lines.append(",".join(_fmt(v) for v in row))
    _atomic_write_text(path, "\n".join(lines) + "\n")


def _load_datasets(data_cfg: dict):
    """Returns (train_dataset, test_dataset_or_None) per the data section."""
    source = data_cfg["source"]
    if source == "blobs":
        test_counts = data_cfg.get("test_samples_per_class", data_cfg["samples_per_class"])
        return train_test_blobs(
            data_cfg["num_classes"],
            data_cfg["dim"],
            data_cfg["samples_per_class"],
            test_counts,
            data_cfg["spread"],
            data_cfg["seed"],
        )
    if source == "idx":
        train = load_idx(data_cfg["images"], data_cfg["labels"])
        test = None
        if "test_images" in data_cfg and "test_labels" in data_cfg:
            test = load_idx(data_cfg["test_images"], data_cfg["test_labels"])
        return train, test
    train = load_csv(data_cfg["path"], data_cfg["label_column"])
    test = None
    if "test_path" in data_cfg:
        test = load_csv(data_cfg["test_path"], data_cfg["label_column"])
    return train, test


def _load_background(data_cfg: dict, dim: int) -> np.ndarray | None:
    bg = data_cfg.get("background")
    if bg is None:
        return None
    if bg["kind"] == "blobs":
        rows = gen_background_blobs(
            bg["num_blobs"], dim, bg["samples_per_blob"], bg["spread"], bg["seed"]
        )
    else:
        rows = load_feature_csv(bg["path"])
    if rows.shape[1] != dim:
        raise ConfigError(
            f"background width {rows.shape[1]} does not match data width {dim}"
        )
    return rows


def _expected_out_dim(cfg: dict, num_classes: int) -> int:
    if cfg["model"].get("dam", False):
        return num_classes - 1
    return cfg["model"]["feature_dim"]


def _build_model(cfg: dict, in_dim: int, num_classes: int, seed: int):
    model_cfg = cfg["model"]
    widths = [in_dim, *model_cfg["hidden"], model_cfg["feature_dim"]]
    model = build_mlp(widths, seed=seed)
    if model_cfg.get("dam", False):
        attach_dam(model, num_classes, activations=model_cfg.get("dam_activations", True))
    init_parameters(model, seed)
    centers = build_centers(num_classes, model.out_dim, cfg["simplex"]["u"])
    return model, centers


def _loss_spec(cfg: dict) -> LossSpec:
    loss_cfg = cfg["loss"]
    return LossSpec(kind=loss_cfg["kind"], m=loss_cfg.get("m"), lam=loss_cfg.get("lambda"))


def _train_config(cfg: dict, seed: int) -> TrainConfig:
    t = cfg["train"]
    return TrainConfig(
        epochs=t["epochs"],
        batch_size=t["batch_size"],
        optimizer=t["optimizer"],
        lr=t["lr"],
        momentum=t.get("momentum", 0.0),
        seed=seed,
        loss=_loss_spec(cfg),
        shuffle=t.get("shuffle", True),
    )


def cmd_simplex(args) -> int:
    centers = build_centers(args.classes, args.dim, args.radius)
    lines = [",".join(_fmt(v) for v in row) for row in centers.centers]
    text = "\n".join(lines) + "\n"
    if args.out:
        _atomic_write_text(args.out, text)
        print(f"wrote {centers.num_classes}x{centers.dim} centers to {args.out}")
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_gen_data(args) -> int:
    dataset = gen_blobs(args.classes, args.dim, args.per_class, args.spread, args.seed)
    header = [f"x{j}" for j in range(dataset.dim)] + ["label"]
    rows = np.concatenate([dataset.samples, dataset.labels[:, None].astype(float)], axis=1)
    _write_matrix_csv(args.out, rows, header=header)
    print(f"wrote {dataset.samples.shape[0]} samples to {args.out}")
    return EXIT_OK


def cmd_train(args) -> int:
    cfg = load_run_config(args.config)
    if args.seed is not None:
        cfg["train"]["seed"] = args.seed
    seed = cfg["train"]["seed"]
    os.makedirs(args.out_dir, exist_ok=True)

    train_ds, _ = _load_datasets(cfg["data"])
    model, centers = _build_model(cfg, train_ds.dim, train_ds.num_classes, seed)
    background = _load_background(cfg["data"], train_ds.dim)
    tconf = _train_config(cfg, seed)

    callback = None
    if args.checkpoint_every:
        def callback(m, record):
            if (record.epoch + 1) % args.checkpoint_every == 0:
                save_checkpoint(m, os.path.join(args.out_dir, f"checkpoint_epoch{record.epoch}.json"))

    model, log = train(model, train_ds, centers, tconf, background=background,
                       epoch_callback=callback)

    save_checkpoint(model, os.path.join(args.out_dir, "checkpoint.json"))
    lines = [
        json.dumps(
            {
                "epoch": r.epoch,
                "mean_loss": r.mean_loss,
                "mean_sqdist": r.mean_sqdist,
                "wall_time": r.wall_time,
            }
        )
        for r in log.records
    ]
    _atomic_write_text(os.path.join(args.out_dir, "trainlog.jsonl"), "\n".join(lines) + "\n")

    preds, _ = nearest_center(model.forward(train_ds.samples), centers)
    accuracy = closed_set_accuracy(preds, train_ds.labels)
    final = log.final()
    print(
        f"final: epochs={len(log.records)} mean_loss={final.mean_loss:.6g} "
        f"mean_sqdist={final.mean_sqdist:.6g} train_accuracy={accuracy:.4f}"
    )
    return EXIT_OK


def _eval_closed(cfg: dict, args) -> EvalReport:
    if not args.checkpoint:
        raise ConfigError("closed-set eval requires --checkpoint")
    train_ds, test_ds = _load_datasets(cfg["data"])
    if test_ds is None:
        raise ConfigError("closed-set eval requires a test dataset in the data section")
    num_classes = train_ds.num_classes
    model = load_checkpoint(args.checkpoint)
    expected = _expected_out_dim(cfg, num_classes)
    if model.out_dim != expected:
        raise ConfigError(
            f"checkpoint output width {model.out_dim} does not match config width {expected}"
        )
    if model.in_dim != train_ds.dim:
        raise ConfigError(
            f"checkpoint input width {model.in_dim} does not match data width {train_ds.dim}"
        )
    centers = build_centers(num_classes, model.out_dim, cfg["simplex"]["u"])
    features = model.forward(test_ds.samples)
    preds, _ = nearest_center(features, centers)
    accuracy = closed_set_accuracy(preds, test_ds.labels)
    scatter = scatter_stats(features, test_ds.labels, centers)
    ids, matrix = center_distance_matrix(features, test_ds.labels)
    return EvalReport(
        closed_accuracy=accuracy,
        per_class_scatter=[None if np.isnan(v) else float(v) for v in scatter],
        center_distance_ids=ids,
        center_distances=matrix.tolist(),
    )


def _eval_open_set(cfg: dict) -> EvalReport:
    eval_cfg = cfg.get("eval", {})
    if "num_known" not in eval_cfg:
        raise ConfigError("open-set eval requires eval.num_known")
    num_known = eval_cfg["num_known"]
    trials = eval_cfg.get("trials", 1)
    test_fraction = eval_cfg.get("test_fraction", 0.25)

    train_ds, test_ds = _load_datasets(cfg["data"])
    if test_ds is not None:
        full_samples = np.concatenate([train_ds.samples, test_ds.samples])
        full_labels = np.concatenate([train_ds.labels, test_ds.labels])
    else:
        full_samples, full_labels = train_ds.samples, train_ds.labels
    full = LabeledDataset(full_samples, full_labels)
    background = _load_background(cfg["data"], full.dim)

    aucs, accs = [], []
    for t in range(trials):
        trial_seed = cfg["train"]["seed"] + t
        split = make_open_split(full, num_known, trial_seed, test_fraction=test_fraction)
        trial = materialize_split(full, split)
        model, centers = _build_model(cfg, full.dim, num_known, trial_seed)
        tconf = _train_config(cfg, trial_seed)
        model, _ = train(model, trial.train, centers, tconf, background=background)

        features = model.forward(trial.test_samples)
        scores = open_set_scores(features, centers)
        known = trial.test_labels >= 0
        aucs.append(auc_roc(scores[known], scores[~known]))
        preds, _ = nearest_center(features[known], centers)
        accs.append(closed_set_accuracy(preds, trial.test_labels[known]))

    aucs_arr, accs_arr = np.asarray(aucs), np.asarray(accs)
    std = lambda a: float(a.std(ddof=1)) if len(a) > 1 else 0.0  # noqa: E731
    report = EvalReport(
        closed_accuracy=float(accs_arr.mean()),
        auc=float(aucs_arr.mean()),
        auc_std=std(aucs_arr),
        per_trial_auc=[float(v) for v in aucs_arr],
        per_trial_accuracy=[float(v) for v in accs_arr],
        accuracy_std=std(accs_arr),
        extra={"trials": trials, "num_known": num_known},
    )
    print(f"AUC (%): {100 * report.auc:.1f} ± {100 * report.auc_std:.1f} over {trials} trials")
    print(
        f"closed-set accuracy (%): {100 * report.closed_accuracy:.1f} "
        f"± {100 * report.accuracy_std:.1f}"
    )
    return report


def cmd_eval(args) -> int:
    cfg = load_run_config(args.config)
    if cfg.get("eval", {}).get("open_set", False):
        report = _eval_open_set(cfg)
    else:
        report = _eval_closed(cfg, args)
        print(f"closed-set accuracy: {report.closed_accuracy:.4f}")
    if args.out:
        _atomic_write_text(args.out, report.to_json() + "\n")
        if report.center_distances is not None:
            base, _ = os.path.splitext(args.out)
            _write_matrix_csv(
                base + ".centers.csv",
                np.asarray(report.center_distances),
                header=[str(i) for i in report.center_distance_ids],
            )
    else:
        print(report.to_json())
    return EXIT_OK


def cmd_embed(args) -> int:
    cfg = load_run_config(args.config)
    train_ds, test_ds = _load_datasets(cfg["data"])
    if args.split == "train":
        dataset = train_ds
    elif args.split == "test":
        if test_ds is None:
            raise ConfigError("no test dataset configured; use --split train")
        dataset = test_ds
    else:
        if test_ds is None:
            dataset = train_ds
        else:
            dataset = LabeledDataset(
                np.concatenate([train_ds.samples, test_ds.samples]),
                np.concatenate([train_ds.labels, test_ds.labels]),
            )

    num_classes = train_ds.num_classes
    model = load_checkpoint(args.checkpoint)
    expected = _expected_out_dim(cfg, num_classes)
    if model.out_dim != expected:
        raise ConfigError(
            f"checkpoint output width {model.out_dim} does not match config width {expected}"
        )
    if model.in_dim != dataset.dim:
        raise ConfigError(
            f"checkpoint input width {model.in_dim} does not match data width {dataset.dim}"
        )
    centers = build_centers(num_classes, model.out_dim, cfg["simplex"]["u"])
    features = model.forward(dataset.samples)
    preds, _ = nearest_center(features, centers)
    scores = open_set_scores(features, centers)

    header = [f"feature_{j}" for j in range(features.shape[1])] + [
        "predicted_label",
        "open_set_score",
    ]
    rows = np.concatenate(
        [features, preds[:, None].astype(float), scores[:, None]], axis=1
    )
    _write_matrix_csv(args.out, rows, header=header)
    print(f"wrote {rows.shape[0]} rows to {args.out}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="simplexnet",
        description="Fixed simplex-prototype classifier pipeline",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simplex", help="dump simplex class centers as CSV")
    p.add_argument("--classes", type=int, required=True)
    p.add_argument("--dim", type=int, required=True)
    p.add_argument("--radius", type=float, default=64.0)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_simplex)

    p = sub.add_parser("gen-data", help="generate a blob dataset CSV")
    p.add_argument("--classes", type=int, required=True)
    p.add_argument("--dim", type=int, required=True)
    p.add_argument("--per-class", type=int, required=True)
    p.add_argument("--spread", type=float, default=1.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_gen_data)

    p = sub.add_parser("train", help="train per a JSON run config")
    p.add_argument("--config", required=True)
    p.add_argument("--out-dir", default=".")
    p.add_argument("--seed", type=int, default=None, help="override train.seed")
    p.add_argument("--checkpoint-every", type=int, default=0, metavar="K",
                   help="also write a checkpoint every K epochs")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="evaluate a checkpoint or run the open-set protocol")
    p.add_argument("--config", required=True)
    p.add_argument("--checkpoint", default=None)
    p.add_argument("--out", default=None, help="write the report JSON here")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("embed", help="dump per-sample features, labels and scores")
    p.add_argument("--config", required=True)
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--split", choices=["train", "test", "all"], default="test")
    p.set_defaults(func=cmd_embed)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except DivergedError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DIVERGED
    except (ConfigError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
