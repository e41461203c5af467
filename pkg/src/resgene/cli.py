"""Command-line front door: synth, train, tune, and report.

Exit codes: 0 on success, 1 on runtime failure, 2 on usage errors.  The
``RESGENE_SEED`` environment variable supplies the seed when ``--seed``
is omitted (falling back to 0).
"""

from __future__ import annotations

import argparse
import itertools
import json
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .errors import ResgeneError
from .genio import build_dataset, load_genotypes, load_phenotypes
from .network import ModelConfig
from .report import (
    build_pcc_grid,
    collect_runs,
    report_from_runs,
    write_bar_svgs,
    write_rank_csv,
    write_report_json,
)
from .results import RunResult
from .ridge import RidgeModelSpec
from .stats import cross_validate, fold_seed_for, pcc
from .synth import SynthSpec, write_synth_files
from .tensorize import IMAGE_2D, TENSOR_3D, plan_layout
from .training import ResGeneModelSpec, TrainConfig

MODEL_NAMES = ("resgene-2d", "resgene-t", "ridge")

DEFAULT_GRID_BS = (32, 64)
DEFAULT_GRID_LR = (0.001, 0.01)
DEFAULT_GRID_DROPOUT = (0.1, 0.3)
DEFAULT_GRID_CHANNELS = (20, 50)


class UsageError(Exception):
    """Flag validation failure: maps to exit code 2."""


def _env_seed() -> int:
    raw = os.environ.get("RESGENE_SEED", "0")
    try:
        return int(raw)
    except ValueError:
        raise UsageError(f"RESGENE_SEED must be an integer, got {raw!r}") from None


def default_grid(model: str) -> list[dict]:
    """Enumerate the default tuning grid for a model, in ascending flag order."""
    if model == "resgene-t":
        cells = itertools.product(DEFAULT_GRID_BS, DEFAULT_GRID_LR,
                                  DEFAULT_GRID_DROPOUT, DEFAULT_GRID_CHANNELS)
        return [dict(bs=b, lr=l, dropout=d, channels=c) for b, l, d, c in cells]
    cells = itertools.product(DEFAULT_GRID_BS, DEFAULT_GRID_LR,
                              DEFAULT_GRID_DROPOUT)
    return [dict(bs=b, lr=l, dropout=d, channels=None) for b, l, d in cells]


def load_grid_file(path, model: str) -> list[dict]:
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    bs = sorted(doc.get("bs", DEFAULT_GRID_BS))
    lr = sorted(doc.get("lr", DEFAULT_GRID_LR))
    dropout = sorted(doc.get("dropout", DEFAULT_GRID_DROPOUT))
    channels = sorted(doc.get("channels", DEFAULT_GRID_CHANNELS)) \
        if model == "resgene-t" else [None]
    cells = [dict(bs=b, lr=l, dropout=d, channels=c)
             for b, l, d, c in itertools.product(bs, lr, dropout, channels)]
    if not cells:
        raise UsageError(f"grid file {path} enumerates no configurations")
    return cells


def _load_trait(args) -> tuple[np.ndarray, np.ndarray]:
    raw = load_genotypes(args.geno, delimiter=args.delimiter)
    pheno = load_phenotypes(args.pheno, delimiter=args.delimiter)
    dataset = build_dataset(raw, pheno)
    return dataset.trait_rows(args.trait)


def _make_spec(model: str, d: int, bs: int, lr: float, dropout: float,
               channels: int | None, epochs: int, momentum: float,
               dtype: str, seed: int):
    """Build the CV model spec plus its serializable config description."""
    if model == "ridge":
        return RidgeModelSpec(), {"model": "ridge",
                                  "lambda_grid": list(RidgeModelSpec().lambdas)}
    if model == "resgene-t":
        layout = plan_layout(d, TENSOR_3D, channels)
    else:
        layout = plan_layout(d, IMAGE_2D, 1)
    model_cfg = ModelConfig(
        input_channels=layout.channels, input_side=layout.side,
        dropout=dropout, init_seed=seed, dtype=dtype,
    )
    train_cfg = TrainConfig(batch_size=bs, lr=lr, momentum=momentum,
                            epochs=epochs, seed=seed)
    spec = ResGeneModelSpec(model_config=model_cfg, train_config=train_cfg,
                            layout=layout)
    desc = {
        "model": model,
        "layout": {"d": layout.d, "mode": layout.mode,
                   "channels": layout.channels, "side": layout.side,
                   "pad_count": layout.pad_count},
        "model_config": {
            "input_channels": model_cfg.input_channels,
            "input_side": model_cfg.input_side,
            "stem_kernel": model_cfg.stem_kernel,
            "stage_widths": list(model_cfg.stage_widths),
            "blocks_per_stage": list(model_cfg.blocks_per_stage),
            "dropout": model_cfg.dropout,
            "dtype": model_cfg.dtype,
        },
        "train_config": {
            "batch_size": train_cfg.batch_size, "lr": train_cfg.lr,
            "momentum": train_cfg.momentum, "epochs": train_cfg.epochs,
            "standardize_targets": train_cfg.standardize_targets,
        },
    }
    return spec, desc


def cmd_synth(args) -> int:
    spec = SynthSpec(
        n=args.n, d=args.d, causal=args.q, effect_scale=args.effect_scale,
        epistatic_pairs=args.pairs, heritability=args.h2,
        missing_rate=args.missing_rate, seed=args.seed,
        trait_name=args.trait,
    )
    paths = write_synth_files(args.out, spec)
    print(f"wrote {paths['genotype']}, {paths['phenotype']}, {paths['truth']}")
    return 0


def cmd_train(args) -> int:
    if args.model == "resgene-t" and args.channels is None:
        raise UsageError("--model resgene-t requires --channels")
    x, y = _load_trait(args)
    started = time.perf_counter()
    spec, desc = _make_spec(
        args.model, x.shape[1], args.bs, args.lr, args.dropout, args.channels,
        args.epochs, args.momentum, args.dtype, args.seed,
    )
    report = cross_validate(x, y, spec, k=args.folds, seed=args.seed,
                            trait=args.trait, model=args.model, jobs=args.jobs)
    elapsed = time.perf_counter() - started

    result = RunResult(
        model=args.model,
        trait=args.trait,
        config=desc | {"folds": args.folds},
        fold_pccs=[None if np.isnan(v) else v for v in report.fold_pccs],
        mean_pcc=None if np.isnan(report.mean_pcc) else report.mean_pcc,
        undefined_folds=report.undefined_folds,
        loss_traces=report.loss_traces,
        seed=args.seed,
        version=__version__,
        wall_clock_seconds=round(elapsed, 3) if args.timing else None,
    )
    result.write(args.out)
    mean = "undefined" if result.mean_pcc is None else f"{result.mean_pcc:.4f}"
    print(f"{args.model} on {args.trait}: mean PCC {mean} "
          f"({args.folds}-fold, seed {args.seed}) -> {args.out}")
    print(f"wall clock: {elapsed:.1f}s", file=sys.stderr)
    return 0


def _tune_cell(model: str, x, y, cell: dict, epochs: int, folds: int,
               momentum: float, dtype: str, seed: int, jobs: int) -> dict:
    spec, _ = _make_spec(model, x.shape[1], cell["bs"], cell["lr"],
                         cell["dropout"], cell["channels"], epochs, momentum,
                         dtype, seed)
    report = cross_validate(x, y, spec, k=folds, seed=seed, model=model,
                            jobs=jobs)
    return {
        **{k: v for k, v in cell.items() if v is not None},
        "mean_pcc": None if np.isnan(report.mean_pcc) else report.mean_pcc,
        "fold_pccs": [None if np.isnan(v) else v for v in report.fold_pccs],
        "undefined_folds": report.undefined_folds,
    }


def _cell_key(cell: dict) -> tuple:
    return (cell["bs"], cell["lr"], cell["dropout"],
            cell["channels"] if cell.get("channels") is not None else -1)


def cmd_tune(args) -> int:
    if args.model not in ("resgene-2d", "resgene-t"):
        raise UsageError("tuning applies to resgene-2d or resgene-t")
    grid = load_grid_file(args.grid, args.model) if args.grid \
        else default_grid(args.model)
    epochs = args.epochs if args.epochs is not None \
        else (2 if args.preset == "tiny" else 100)
    folds = args.folds if args.folds is not None \
        else (2 if args.preset == "tiny" else 10)

    x, y = _load_trait(args)

    if args.nested:
        doc = _nested_tune(args, grid, x, y, epochs, folds)
    else:
        rows = []
        for cell in grid:
            rows.append(_tune_cell(args.model, x, y, cell, epochs, folds,
                                   args.momentum, args.dtype, args.seed,
                                   args.jobs))
        scored = [r for r in rows if r["mean_pcc"] is not None]
        if not scored:
            raise ResgeneError("every grid cell produced an undefined mean PCC")
        best_score = max(r["mean_pcc"] for r in scored)
        # Deterministic tie-break: lexicographically first flag tuple.
        best = min((r for r in scored if r["mean_pcc"] == best_score),
                   key=lambda r: _cell_key({**r, "channels": r.get("channels")}))
        doc = {
            "schema": "resgene.tune/1",
            "model": args.model,
            "trait": args.trait,
            "mode": "full-cv",
            "epochs": epochs,
            "folds": folds,
            "seed": args.seed,
            "rows": rows,
            "best": {k: best[k] for k in
                     ("bs", "lr", "dropout", "channels", "mean_pcc")
                     if k in best},
        }

    text = json.dumps(doc, sort_keys=True, separators=(",", ": "), indent=2) + "\n"
    Path(args.out).write_text(text, encoding="utf-8")
    if args.nested:
        mean = "undefined" if doc["mean_pcc"] is None else f"{doc['mean_pcc']:.4f}"
        print(f"nested tuning of {args.model} on {args.trait}: "
              f"mean PCC {mean} -> {args.out}")
    else:
        print(f"tuned {args.model} on {args.trait}: best {doc['best']} "
              f"over {len(grid)} configurations -> {args.out}")
    return 0


def _nested_tune(args, grid, x, y, epochs, folds) -> dict:
    """Proper nested CV: per outer fold, pick the cell by inner CV only."""
    from .stats import kfold_split

    outer = kfold_split(len(y), folds, args.seed)
    outer_pccs: list[float | None] = []
    chosen: list[dict] = []
    for i, test_idx in enumerate(outer):
        train_idx = np.setdiff1d(np.arange(len(y)), test_idx,
                                 assume_unique=True)
        inner_seed = fold_seed_for(args.seed, i)
        inner_k = min(folds, max(2, len(train_idx) // 2))
        best_cell, best_score = None, -np.inf
        for cell in grid:
            row = _tune_cell(args.model, x[train_idx], y[train_idx], cell,
                             epochs, inner_k, args.momentum, args.dtype,
                             inner_seed, args.jobs)
            score = row["mean_pcc"] if row["mean_pcc"] is not None else -np.inf
            key = _cell_key(cell)
            if score > best_score or (score == best_score and best_cell is not None
                                      and key < _cell_key(best_cell)):
                best_cell, best_score = cell, score
        spec, _ = _make_spec(args.model, x.shape[1], best_cell["bs"],
                             best_cell["lr"], best_cell["dropout"],
                             best_cell["channels"], epochs, args.momentum,
                             args.dtype, args.seed)
        predictor = spec(x[train_idx], y[train_idx], inner_seed)
        preds = predictor(x[test_idx])
        try:
            outer_pccs.append(pcc(y[test_idx], preds))
        except ResgeneError:
            outer_pccs.append(None)
        chosen.append({k: v for k, v in best_cell.items() if v is not None})
    defined = [v for v in outer_pccs if v is not None]
    return {
        "schema": "resgene.tune/1",
        "model": args.model,
        "trait": args.trait,
        "mode": "nested-cv",
        "epochs": epochs,
        "folds": folds,
        "seed": args.seed,
        "outer_fold_pccs": outer_pccs,
        "chosen_configs": chosen,
        "mean_pcc": float(np.mean(defined)) if defined else None,
    }


def cmd_report(args) -> int:
    runs = collect_runs(args.runs)
    report = report_from_runs(runs)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_rank_csv(out / "report.csv", report)
    write_report_json(out / "report.json", report)
    if args.plots:
        table, models, traits = build_pcc_grid(runs)
        written = write_bar_svgs(out, table, models, traits)
        print(f"wrote {len(written)} chart(s)")
    chi2 = report.rank_table.chi2
    chi2_msg = "undefined (single model)" if chi2 is None else f"{chi2:.3f}"
    print(f"report over {len(report.rank_table.traits)} trait(s) x "
          f"{len(report.rank_table.models)} model(s); Friedman chi2 {chi2_msg} "
          f"-> {out / 'report.csv'}, {out / 'report.json'}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="resgene",
        description="Genomic prediction toolkit: SNP encodings, residual "
                    "network regression, and rank statistics.",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic dataset")
    p.add_argument("--n", type=int, required=True, help="number of varieties")
    p.add_argument("--d", type=int, required=True, help="number of SNPs")
    p.add_argument("--q", type=int, default=10, help="causal SNP count")
    p.add_argument("--pairs", type=int, default=0, help="epistatic pair count")
    p.add_argument("--h2", type=float, required=True, help="heritability in [0,1]")
    p.add_argument("--effect-scale", type=float, default=1.0)
    p.add_argument("--missing-rate", type=float, default=0.0)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--trait", default="PH", help="trait column name")
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("train", help="cross-validate one model on one trait")
    p.add_argument("--model", required=True, choices=MODEL_NAMES)
    p.add_argument("--geno", required=True, help="genotype csv")
    p.add_argument("--pheno", required=True, help="phenotype csv")
    p.add_argument("--trait", required=True)
    p.add_argument("--delimiter", default=",")
    p.add_argument("--channels", type=int, default=None,
                   help="tensor channels (resgene-t only)")
    p.add_argument("--bs", type=int, default=32, help="batch size")
    p.add_argument("--lr", type=float, default=0.001, help="learning rate")
    p.add_argument("--dropout", type=float, default=0.1)
    p.add_argument("--momentum", type=float, default=0.0)
    p.add_argument("--epochs", type=int, default=100)
    p.add_argument("--folds", type=int, default=10)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--dtype", choices=("float32", "float64"), default="float32")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--timing", action="store_true",
                   help="record wall-clock seconds in the result file")
    p.add_argument("--out", required=True, help="run result json path")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("tune", help="grid-search hyperparameters by CV mean PCC")
    p.add_argument("--model", required=True, choices=("resgene-2d", "resgene-t"))
    p.add_argument("--geno", required=True)
    p.add_argument("--pheno", required=True)
    p.add_argument("--trait", required=True)
    p.add_argument("--delimiter", default=",")
    p.add_argument("--grid", default=None, help="JSON grid file")
    p.add_argument("--preset", choices=("paper", "tiny"), default="paper",
                   help="paper: 100 epochs, 10 folds; tiny: 2 epochs, 2 folds")
    p.add_argument("--epochs", type=int, default=None)
    p.add_argument("--folds", type=int, default=None)
    p.add_argument("--momentum", type=float, default=0.0)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--dtype", choices=("float32", "float64"), default="float32")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--nested", action="store_true",
                   help="nested CV: select per outer fold on inner folds only")
    p.add_argument("--out", required=True, help="tuning result json path")
    p.set_defaults(func=cmd_tune)

    p = sub.add_parser("report", help="rank models across run results")
    p.add_argument("--runs", required=True, help="directory of run json files")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--plots", action="store_true", help="emit SVG bar charts")
    p.set_defaults(func=cmd_report)

    return parser


def _validate(args) -> None:
    if getattr(args, "seed", None) is None and hasattr(args, "seed"):
        args.seed = _env_seed()
    if args.command == "synth":
        if not 0.0 <= args.h2 <= 1.0:
            raise UsageError(f"--h2 must be in [0, 1], got {args.h2}")
        if args.n < 2 or args.d < 1:
            raise UsageError("--n must be >= 2 and --d >= 1")
        if args.q < 0 or args.q > args.d:
            raise UsageError(f"--q must be in [0, {args.d}]")
        if not 0.0 <= args.missing_rate < 1.0:
            raise UsageError("--missing-rate must be in [0, 1)")
        if args.pairs < 0:
            raise UsageError("--pairs must be >= 0")
    if args.command in ("train", "tune"):
        if getattr(args, "folds", None) is not None and args.folds is not None \
                and args.folds < 2:
            raise UsageError("--folds must be >= 2")
        if getattr(args, "epochs", None) is not None and args.epochs is not None \
                and args.epochs < 1:
            raise UsageError("--epochs must be >= 1")
        if args.jobs < 1:
            raise UsageError("--jobs must be >= 1")
    if args.command == "train":
        if args.bs < 1:
            raise UsageError("--bs must be >= 1")
        if args.lr <= 0:
            raise UsageError("--lr must be > 0")
        if not 0.0 <= args.dropout < 1.0:
            raise UsageError("--dropout must be in [0, 1)")
        if args.channels is not None and args.channels < 1:
            raise UsageError("--channels must be >= 1")


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else 2
    try:
        _validate(args)
        return args.func(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        parser.print_usage(sys.stderr)
        return 2
    except (ResgeneError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
