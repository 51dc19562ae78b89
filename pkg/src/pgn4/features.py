"""Correlation-driven feature selection and adjacency arrangement.

The selection step ranks features by the magnitude of their Pearson
correlation with the flag labels and keeps the top N.  The arrangement
step then orders those N candidates so that strongly inter-correlated
features end up next to each other in the 1-D input: sliding filters only
mix neighboring positions, so adjacency decides which raw features the
first convolution can combine.

Arrangement is a greedy anchor/neighbor chain: take the strongest-ranked
unplaced candidate as an anchor, place right after it the unplaced
candidate with the largest |pairwise correlation| to that anchor, and
repeat.  All ties break by original column index, so the output is a pure
function of its inputs.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import DatasetTable


def pearson(x, y) -> float:
    """Pearson product-moment correlation of two equal-length vectors.

    Returns 0.0 when either vector has zero variance (the coefficient is
    undefined there); callers that need to distinguish that case should
    check variances, as :func:`correlation_report` does.
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError(f"need equal-length vectors, got shapes {x.shape} and {y.shape}")
    if x.size < 2:
        raise ValueError("need at least 2 observations")
    dx = x - x.mean()
    dy = y - y.mean()
    vx = float(dx @ dx)
    vy = float(dy @ dy)
    if vx == 0.0 or vy == 0.0:
        return 0.0
    return float(dx @ dy) / np.sqrt(vx * vy)


@dataclass
class CorrelationReport:
    """Per-feature flag correlations and the full pairwise correlation matrix.

    ``degenerate`` marks zero-variance features; their entries in
    ``flag_corr`` and ``pairwise`` (including the diagonal) are 0 by the
    :func:`pearson` convention, and they are never selection candidates.
    """

    feature_names: list[str]
    flag_corr: np.ndarray  # (F,)
    pairwise: np.ndarray  # (F, F), symmetric, unit diagonal off degenerates
    degenerate: np.ndarray  # (F,) bool

    def ranked(self, signed: bool = False) -> list[tuple[str, float]]:
        """(name, flag correlation) for non-degenerate features, best first.

        Default ranking is by |correlation| descending; ``signed=True``
        ranks by the raw coefficient instead.  Ties keep column order.
        """
        order = _rank_order(self.flag_corr, self.degenerate, signed)
        return [(self.feature_names[i], float(self.flag_corr[i])) for i in order]


def _rank_order(flag_corr: np.ndarray, degenerate: np.ndarray, signed: bool) -> list[int]:
    eligible = [i for i in range(len(flag_corr)) if not degenerate[i]]
    key = (lambda i: (-flag_corr[i], i)) if signed else (lambda i: (-abs(flag_corr[i]), i))
    return sorted(eligible, key=key)


def correlation_report(table: DatasetTable) -> CorrelationReport:
    """Compute flag correlations and the pairwise matrix in one pass.

    Columns are centered and scaled once, so the pairwise matrix is the
    normalized Gram matrix; results match per-pair :func:`pearson` calls
    to floating-point accuracy.
    """
    if table.n_rows < 2:
        raise ValueError("need at least 2 rows to correlate")
    X = table.features
    n = table.n_rows
    centered = X - X.mean(axis=0)
    norms = np.sqrt((centered**2).sum(axis=0))
    degenerate = norms == 0.0
    safe = np.where(degenerate, 1.0, norms)
    Z = centered / safe

    y = table.labels.astype(np.float64)
    dy = y - y.mean()
    ny = np.sqrt(float(dy @ dy))
    if ny == 0.0:
        flag_corr = np.zeros(table.n_features)
    else:
        flag_corr = Z.T @ (dy / ny)
    flag_corr[degenerate] = 0.0

    pairwise = Z.T @ Z
    pairwise[degenerate, :] = 0.0
    pairwise[:, degenerate] = 0.0
    # symmetrize away accumulation-order noise; clip rounding overshoot
    pairwise = np.clip((pairwise + pairwise.T) / 2.0, -1.0, 1.0)
    idx = np.arange(table.n_features)
    pairwise[idx[~degenerate], idx[~degenerate]] = 1.0

    return CorrelationReport(
        feature_names=list(table.feature_names),
        flag_corr=np.clip(flag_corr, -1.0, 1.0),
        pairwise=pairwise,
        degenerate=degenerate,
    )


@dataclass
class FeatureArrangement:
    """An ordered subset of feature names ready to feed the 1-D input.

    ``candidate_pool`` is the top-N ranked set (rank order);
    ``ordered_names`` is its adjacency-arranged permutation.
    """

    ordered_names: list[str]
    candidate_pool: list[str]

    def __post_init__(self):
        if sorted(self.ordered_names) != sorted(self.candidate_pool):
            raise ValueError("ordered_names must be a permutation of candidate_pool")
        if len(set(self.ordered_names)) != len(self.ordered_names):
            raise ValueError("duplicate feature names in arrangement")

    @property
    def n_selected(self) -> int:
        return len(self.ordered_names)


def select_and_arrange(
    report: CorrelationReport, n: int, signed: bool = False
) -> FeatureArrangement:
    """Pick the N best-ranked features and order them for adjacency.

    ``signed=False`` (default) ranks candidates by |flag correlation|;
    ``signed=True`` ranks by the raw value.  Neighbor placement always
    uses |pairwise correlation|: adjacency is about relatedness strength,
    not direction.
    """
    order = _rank_order(report.flag_corr, report.degenerate, signed)
    if not 1 <= n <= len(order):
        raise ValueError(
            f"n must be in [1, {len(order)}] (non-degenerate features), got {n}"
        )
    pool = order[:n]
    pool_rank = {i: r for r, i in enumerate(pool)}
    unplaced = set(pool)
    ordered: list[int] = []
    while unplaced:
        anchor = min(unplaced, key=lambda i: pool_rank[i])
        ordered.append(anchor)
        unplaced.remove(anchor)
        if unplaced:
            neighbor = min(
                unplaced, key=lambda j: (-abs(report.pairwise[anchor, j]), j)
            )
            ordered.append(neighbor)
            unplaced.remove(neighbor)
    return FeatureArrangement(
        ordered_names=[report.feature_names[i] for i in ordered],
        candidate_pool=[report.feature_names[i] for i in pool],
    )


def project(table: DatasetTable, arrangement: FeatureArrangement) -> DatasetTable:
    """Reorder/subset a table's columns to exactly the arranged names."""
    index = {name: i for i, name in enumerate(table.feature_names)}
    missing = [name for name in arrangement.ordered_names if name not in index]
    if missing:
        raise KeyError(f"features not in table: {missing}")
    cols = [index[name] for name in arrangement.ordered_names]
    return DatasetTable(
        feature_names=list(arrangement.ordered_names),
        features=table.features[:, cols],
        labels=table.labels.copy(),
        row_ids=list(table.row_ids) if table.row_ids is not None else None,
    )
