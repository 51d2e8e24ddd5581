"""Reconstruction metrics, the repeated-subsampling protocol, and an exact
Wilcoxon signed-rank test.

DepthCorr here is normative for this repo: the per-axis Pearson correlation
between predicted and ground-truth coordinates across landmarks, reported as
100 * trace(diag correlations) / 3.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateInputError, DimensionMismatchError
from .geometry import procrustes_align
from .landmarks import LandmarkSet3D


def landmark_mse(
    pred: LandmarkSet3D,
    gt: LandmarkSet3D,
    align: bool = True,
    squared: bool = True,
) -> float:
    """Mean (squared) Euclidean distance between corresponding landmarks.

    With ``align`` the prediction is first Procrustes-aligned to the ground
    truth (similarity transform, reflection allowed), so global pose and
    scale do not count as error.  ``squared=False`` averages plain distances
    instead of squared ones.
    """
    if len(pred) != len(gt):
        raise DimensionMismatchError(
            f"landmark counts differ: {len(pred)} vs {len(gt)}"
        )
    p = pred.points
    if align:
        p = procrustes_align(pred, gt)[0].points
    sq = ((p - gt.points) ** 2).sum(axis=1)
    return float(sq.mean()) if squared else float(np.sqrt(sq).mean())


def _pearson(x: np.ndarray, y: np.ndarray) -> float:
    xc = x - x.mean()
    yc = y - y.mean()
    denom = math.sqrt(float((xc * xc).sum()) * float((yc * yc).sum()))
    if denom == 0.0:
        raise DegenerateInputError(
            "correlation undefined: a coordinate axis has zero variance"
        )
    return float((xc * yc).sum()) / denom


def depth_corr(pred: LandmarkSet3D, gt: LandmarkSet3D) -> float:
    """100 * mean of the three per-axis Pearson correlations.

    Identical shapes give 100; negating one axis of a perfect prediction
    gives (1 + 1 - 1)/3 = 33.33.
    """
    if len(pred) != len(gt):
        raise DimensionMismatchError(
            f"landmark counts differ: {len(pred)} vs {len(gt)}"
        )
    if len(gt) < 3:
        raise DimensionMismatchError("depth correlation needs at least 3 landmarks")
    trace = sum(
        _pearson(pred.points[:, axis], gt.points[:, axis]) for axis in range(3)
    )
    return 100.0 * trace / 3.0


@dataclass(frozen=True)
class EvalReport:
    """Repeated-subsampling evaluation: per-sample values, per-repetition
    means, and their summary statistics."""

    mse_mean: float
    mse_std: float
    depthcorr_mean: float
    depthcorr_std: float
    per_sample_mse: tuple[float, ...]
    per_sample_depthcorr: tuple[float, ...]
    rep_mse: tuple[float, ...]
    rep_depthcorr: tuple[float, ...]
    subsample_size: int
    repetitions: int
    seed: int

    def to_json(self) -> str:
        return json.dumps(
            {
                "mse_mean": self.mse_mean,
                "mse_std": self.mse_std,
                "depthcorr_mean": self.depthcorr_mean,
                "depthcorr_std": self.depthcorr_std,
                "per_sample_mse": list(self.per_sample_mse),
                "per_sample_depthcorr": list(self.per_sample_depthcorr),
                "rep_mse": list(self.rep_mse),
                "rep_depthcorr": list(self.rep_depthcorr),
                "subsample_size": self.subsample_size,
                "repetitions": self.repetitions,
                "seed": self.seed,
            },
            sort_keys=True,
            indent=2,
        )

    @classmethod
    def from_json(cls, text: str) -> "EvalReport":
        d = json.loads(text)
        return cls(
            mse_mean=d["mse_mean"],
            mse_std=d["mse_std"],
            depthcorr_mean=d["depthcorr_mean"],
            depthcorr_std=d["depthcorr_std"],
            per_sample_mse=tuple(d["per_sample_mse"]),
            per_sample_depthcorr=tuple(d["per_sample_depthcorr"]),
            rep_mse=tuple(d["rep_mse"]),
            rep_depthcorr=tuple(d["rep_depthcorr"]),
            subsample_size=d["subsample_size"],
            repetitions=d["repetitions"],
            seed=d["seed"],
        )

    def to_csv(self) -> str:
        lines = ["rep,mse,depthcorr"]
        lines += [
            f"{i},{m:.17g},{c:.17g}"
            for i, (m, c) in enumerate(zip(self.rep_mse, self.rep_depthcorr))
        ]
        lines.append(f"mean,{self.mse_mean:.17g},{self.depthcorr_mean:.17g}")
        lines.append(f"std,{self.mse_std:.17g},{self.depthcorr_std:.17g}")
        return "\n".join(lines) + "\n"


def _gt_of(item) -> LandmarkSet3D:
    return item.gt_3d if hasattr(item, "gt_3d") else item


def subsample_indices(total: int, size: int, reps: int, seed: int) -> list[np.ndarray]:
    """The deterministic index draws behind ``subsample_protocol``."""
    rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(0xE7A1,)))
    return [rng.choice(total, size=size, replace=False) for _ in range(reps)]


def subsample_protocol(
    test_set,
    outputs,
    size: int = 500,
    reps: int = 10,
    seed: int = 0,
    align: bool = True,
) -> EvalReport:
    """Evaluate predictions by repeated random subsampling of the test set.

    Each repetition draws ``size`` samples without replacement and averages
    the per-sample metrics; the report carries the repetition means plus
    their mean and (population) standard deviation.  Everything is
    regenerable from the stored seed.

    With ``align`` each prediction is Procrustes-aligned to its ground truth
    before either metric: embeddings carry no preferred orientation, so
    per-axis correlations are only defined after alignment.
    """
    gts = [_gt_of(t) for t in test_set]
    preds = list(outputs)
    if len(gts) != len(preds):
        raise DimensionMismatchError(
            f"{len(gts)} test samples vs {len(preds)} outputs"
        )
    if not gts:
        raise DegenerateInputError("empty test set")
    if size < 1 or reps < 1:
        raise ValueError("size and reps must be positive")
    if size > len(gts):
        raise DegenerateInputError(
            f"subsample size {size} exceeds test set size {len(gts)}"
        )
    if align:
        preds = [procrustes_align(p, g)[0] for p, g in zip(preds, gts)]
    sample_mse = np.array(
        [landmark_mse(p, g, align=False) for p, g in zip(preds, gts)]
    )
    sample_dc = np.array([depth_corr(p, g) for p, g in zip(preds, gts)])
    rep_mse, rep_dc = [], []
    for idx in subsample_indices(len(gts), size, reps, seed):
        rep_mse.append(float(sample_mse[idx].mean()))
        rep_dc.append(float(sample_dc[idx].mean()))
    rep_mse = np.array(rep_mse)
    rep_dc = np.array(rep_dc)
    return EvalReport(
        mse_mean=float(rep_mse.mean()),
        mse_std=float(rep_mse.std()),
        depthcorr_mean=float(rep_dc.mean()),
        depthcorr_std=float(rep_dc.std()),
        per_sample_mse=tuple(sample_mse.tolist()),
        per_sample_depthcorr=tuple(sample_dc.tolist()),
        rep_mse=tuple(rep_mse.tolist()),
        rep_depthcorr=tuple(rep_dc.tolist()),
        subsample_size=size,
        repetitions=reps,
        seed=seed,
    )


def format_method_table(reports: dict[str, EvalReport]) -> str:
    """Fixed-width comparison table: method x {avgDepthCorr, avgMSE}."""
    rows = [("Method", "avgDepthCorr (%)", "avgMSE")]
    for name, r in reports.items():
        rows.append(
            (
                name,
                f"{r.depthcorr_mean:.2f} +/- {r.depthcorr_std:.2f}",
                f"{r.mse_mean:.6f} +/- {r.mse_std:.6f}",
            )
        )
    widths = [max(len(row[c]) for row in rows) for c in range(3)]
    lines = []
    for i, row in enumerate(rows):
        lines.append("  ".join(cell.ljust(widths[c]) for c, cell in enumerate(row)))
        if i == 0:
            lines.append("  ".join("-" * w for w in widths))
    return "\n".join(lines) + "\n"


EXACT_LIMIT = 20


def _signed_midranks(diffs: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Midranks of |d| (ties averaged) and the tie-group sizes."""
    mags = np.abs(diffs)
    order = np.argsort(mags, kind="stable")
    ranks = np.empty(len(mags))
    ties = []
    i = 0
    while i < len(mags):
        j = i
        while j < len(mags) and mags[order[j]] == mags[order[i]]:
            j += 1
        # positions i..j-1 share the same magnitude: average their ranks
        ranks[order[i:j]] = 0.5 * (i + 1 + j)
        ties.append(j - i)
        i = j
    return ranks, np.array(ties)


def wilcoxon_signed_rank(a, b) -> tuple[float, float]:
    """Two-sided Wilcoxon signed-rank test for paired samples.

    Returns (W, p) where W is the positive-rank sum.  Zero differences are
    dropped.  For m <= 20 remaining pairs the p-value is exact (all 2^m sign
    assignments, via a rank-sum count table); beyond that a tie-corrected
    normal approximation is used.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape or a.ndim != 1:
        raise DimensionMismatchError(
            f"paired vectors must share one dimension, got {a.shape} and {b.shape}"
        )
    diffs = a - b
    diffs = diffs[diffs != 0.0]
    m = diffs.size
    if m == 0:
        raise DegenerateInputError("all differences are zero")
    if m < 5:
        raise DegenerateInputError(
            f"need at least 5 nonzero differences, got {m}"
        )
    ranks, ties = _signed_midranks(diffs)
    w_plus = float(ranks[diffs > 0].sum())

    if m <= EXACT_LIMIT:
        # doubled midranks are integers; count rank-sum multiplicities over
        # all sign assignments with a subset-sum table
        doubled = np.rint(2.0 * ranks).astype(np.int64)
        total = int(doubled.sum())
        counts = np.zeros(total + 1, dtype=np.float64)
        counts[0] = 1.0
        for r in doubled:
            counts[r:] += counts[: total + 1 - r]
        w2 = int(round(2.0 * w_plus))
        denom = 2.0**m
        cdf = counts[: w2 + 1].sum() / denom
        sf = counts[w2:].sum() / denom
        p = min(1.0, 2.0 * min(cdf, sf))
    else:
        mu = m * (m + 1) / 4.0
        var = m * (m + 1) * (2 * m + 1) / 24.0 - float(
            ((ties**3 - ties).sum())
        ) / 48.0
        if var <= 0:
            raise DegenerateInputError("all magnitudes tied; variance is zero")
        # continuity correction: the rank sum moves in discrete steps
        shift = abs(w_plus - mu) - 0.5 if abs(w_plus - mu) > 0.5 else 0.0
        z = shift / math.sqrt(var)
        p = min(1.0, math.erfc(z / math.sqrt(2.0)))
    return w_plus, p
