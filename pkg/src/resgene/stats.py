"""Correlation, cross-validation, and nonparametric ranking statistics.

Models are compared by Pearson correlation between observed and predicted
phenotypes, averaged over k folds.  Across traits, per-trait ranks (1 is
best, ties get average ranks) feed the Friedman chi-square statistic

    chi2_F = 12N / (M(M+1)) * (sum_j R_j^2 - M(M+1)^2 / 4)

whose upper tail on M-1 degrees of freedom decides whether the rank
differences are significant.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import gammaincc

from .errors import StatsError


def pcc(x, y) -> float:
    """Pearson correlation coefficient between two non-constant vectors.

    Raises
    ------
    StatsError
        For unequal lengths, fewer than two observations, or a constant
        input (undefined correlation).
    """
    x = np.asarray(x, dtype=np.float64).ravel()
    y = np.asarray(y, dtype=np.float64).ravel()
    if x.size != y.size:
        raise StatsError(f"length mismatch: {x.size} vs {y.size}")
    if x.size < 2:
        raise StatsError("correlation needs at least two observations")
    xc = x - x.mean()
    yc = y - y.mean()
    sx = float(xc @ xc)
    sy = float(yc @ yc)
    if sx == 0.0 or sy == 0.0:
        raise StatsError("undefined correlation: constant input vector")
    r = float(xc @ yc) / np.sqrt(sx * sy)
    return float(min(1.0, max(-1.0, r)))


def kfold_split(n: int, k: int, seed: int) -> list[np.ndarray]:
    """Shuffle 0..n-1 with the seed and cut into k folds of near-equal size.

    Fold sizes differ by at most one; the union covers every index exactly
    once.  Indices within a fold are sorted for stable reporting.
    """
    if k < 2:
        raise StatsError(f"need at least 2 folds, got {k}")
    if n < k:
        raise StatsError(f"cannot split {n} rows into {k} folds")
    perm = np.random.default_rng(seed).permutation(n)
    base, extra = divmod(n, k)
    folds = []
    start = 0
    for i in range(k):
        size = base + (1 if i < extra else 0)
        folds.append(np.sort(perm[start:start + size]))
        start += size
    return folds


@dataclass
class CvReport:
    """Per-fold PCCs for one (trait, model) cell; NaN marks undefined folds."""

    trait: str
    model: str
    fold_pccs: list[float]
    mean_pcc: float
    undefined_folds: int = 0
    loss_traces: list[list[float]] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "trait": self.trait,
            "model": self.model,
            "fold_pccs": [None if np.isnan(v) else v for v in self.fold_pccs],
            "mean_pcc": None if np.isnan(self.mean_pcc) else self.mean_pcc,
            "undefined_folds": self.undefined_folds,
            "loss_traces": self.loss_traces,
        }


def fold_seed_for(seed: int, fold_index: int) -> int:
    """Deterministic per-fold sub-seed derived from the run seed."""
    return int(np.random.SeedSequence([seed, fold_index]).generate_state(1)[0])


def _run_fold(model_spec, x_train, y_train, x_test, fold_seed):
    predictor = model_spec(x_train, y_train, fold_seed)
    preds = np.asarray(predictor(x_test), dtype=np.float64).ravel()
    trace = [float(v) for v in getattr(predictor, "loss_trace", [])]
    return preds, trace


def cross_validate(x: np.ndarray, y: np.ndarray, model_spec, k: int,
                   seed: int, trait: str = "", model: str = "",
                   jobs: int = 1) -> CvReport:
    """k-fold cross-validation of one model on one trait.

    ``model_spec(x_train, y_train, fold_seed)`` must return a callable
    mapping test rows to predictions.  Each fold's held-out PCC is
    recorded; folds with constant predictions (or constant truth) are
    flagged undefined and excluded from the mean.  With ``jobs > 1`` folds
    run as independent processes; results are identical to the serial
    order.
    """
    x = np.asarray(x)
    y = np.asarray(y, dtype=np.float64)
    folds = kfold_split(len(y), k, seed)
    tasks = []
    for i, test_idx in enumerate(folds):
        train_idx = np.setdiff1d(np.arange(len(y)), test_idx, assume_unique=True)
        tasks.append((x[train_idx], y[train_idx], x[test_idx],
                      fold_seed_for(seed, i)))

    if jobs > 1:
        import concurrent.futures as cf
        import multiprocessing as mp

        ctx = mp.get_context("spawn")
        with cf.ProcessPoolExecutor(max_workers=jobs, mp_context=ctx) as pool:
            outcomes = list(pool.map(
                _run_fold,
                [model_spec] * len(tasks),
                [t[0] for t in tasks], [t[1] for t in tasks],
                [t[2] for t in tasks], [t[3] for t in tasks],
            ))
    else:
        outcomes = [_run_fold(model_spec, *t) for t in tasks]

    fold_pccs: list[float] = []
    traces: list[list[float]] = []
    undefined = 0
    for test_idx, (p, trace) in zip(folds, outcomes):
        traces.append(trace)
        try:
            fold_pccs.append(pcc(y[test_idx], p))
        except StatsError:
            fold_pccs.append(float("nan"))
            undefined += 1
    defined = [v for v in fold_pccs if not np.isnan(v)]
    mean = float(np.mean(defined)) if defined else float("nan")
    return CvReport(trait=trait, model=model, fold_pccs=fold_pccs,
                    mean_pcc=mean, undefined_folds=undefined,
                    loss_traces=traces)


def rank_models(pcc_row) -> np.ndarray:
    """Rank one trait's models by PCC: rank 1 is best, ties averaged."""
    row = np.asarray(pcc_row, dtype=np.float64)
    if row.size < 2:
        raise StatsError("ranking needs at least two models")
    order = np.argsort(-row, kind="stable")
    ranks = np.empty(row.size, dtype=np.float64)
    pos = 0
    while pos < row.size:
        end = pos
        while end + 1 < row.size and row[order[end + 1]] == row[order[pos]]:
            end += 1
        avg = (pos + end) / 2.0 + 1.0  # average of positions, 1-based
        for j in range(pos, end + 1):
            ranks[order[j]] = avg
        pos = end + 1
    return ranks


def average_ranks(rank_table) -> np.ndarray:
    """Column means of an (N traits x M models) rank table."""
    table = np.asarray(rank_table, dtype=np.float64)
    if table.ndim != 2:
        raise StatsError("rank table must be 2-D")
    return table.mean(axis=0)


def friedman_chi2(avg_ranks, n_traits: int, n_models: int) -> float:
    """Friedman statistic from average ranks over N traits and M models."""
    r = np.asarray(avg_ranks, dtype=np.float64)
    if n_models < 2 or r.size != n_models:
        raise StatsError("need average ranks for at least two models")
    if n_traits < 1:
        raise StatsError("need at least one trait")
    m = n_models
    return float(12.0 * n_traits / (m * (m + 1))
                 * (float(r @ r) - m * (m + 1) ** 2 / 4.0))


def chi2_sf(x: float, df: int) -> float:
    """Upper-tail chi-square probability via the regularized incomplete gamma."""
    if x < 0:
        raise StatsError(f"chi-square statistic must be >= 0, got {x}")
    if df < 1:
        raise StatsError(f"degrees of freedom must be >= 1, got {df}")
    return float(gammaincc(df / 2.0, x / 2.0))


@dataclass
class RankTable:
    """Per-trait ranks with the Friedman summary."""

    traits: list[str]
    models: list[str]
    ranks: np.ndarray  # (N, M)
    avg_ranks: np.ndarray
    chi2: float | None
    p_value: float | None


@dataclass
class AggregateReport:
    """Everything a model-comparison table needs, from a PCC grid."""

    rank_table: RankTable
    average_pcc: np.ndarray
    reference_model: str
    relative_gain_pct: list[float | None]
    final_ranking: list[tuple[int, int]] = field(default_factory=list)


def aggregate_report(pcc_table, models, traits,
                     reference: str | None = None) -> AggregateReport:
    """Rank a (traits x models) PCC table and derive the aggregate rows.

    Average PCC is the column mean.  The relative gain of the reference
    model (default: the one with the best average PCC) over model j is
    100 * (mean_ref / mean_j - 1).  Final ranking counts rank-1 finishes
    per model out of the number of traits.
    """
    table = np.asarray(pcc_table, dtype=np.float64)
    models = list(models)
    traits = list(traits)
    if table.shape != (len(traits), len(models)):
        raise StatsError(
            f"PCC table shape {table.shape} does not match "
            f"{len(traits)} traits x {len(models)} models"
        )
    n, m = table.shape

    if m >= 2:
        ranks = np.vstack([rank_models(row) for row in table])
        avg = average_ranks(ranks)
        chi2 = friedman_chi2(avg, n, m)
        p = chi2_sf(chi2, m - 1)
    else:
        ranks = np.ones((n, 1))
        avg = np.ones(1)
        chi2 = None
        p = None

    mean_pcc = table.mean(axis=0)
    if reference is None:
        reference = models[int(np.argmax(mean_pcc))]
    if reference not in models:
        raise StatsError(f"reference model {reference!r} not in table")
    ref_mean = mean_pcc[models.index(reference)]

    gains: list[float | None] = []
    for j, name in enumerate(models):
        if name == reference:
            gains.append(None)
            continue
        if mean_pcc[j] == 0.0:
            raise StatsError(f"zero average PCC for {name!r}: gain undefined")
        gains.append(100.0 * (ref_mean / mean_pcc[j] - 1.0))

    wins = [(int(np.sum(ranks[:, j] == 1.0)), n) for j in range(m)]

    return AggregateReport(
        rank_table=RankTable(traits=traits, models=models, ranks=ranks,
                             avg_ranks=avg, chi2=chi2, p_value=p),
        average_pcc=mean_pcc,
        reference_model=reference,
        relative_gain_pct=gains,
        final_ranking=wins,
    )
