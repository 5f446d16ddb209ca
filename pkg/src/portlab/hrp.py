"""Hierarchical risk parity: tree clustering, quasi-diagonalization, bisection.

The allocation runs in three phases. Agglomerative clustering over a
correlation-derived distance matrix builds a merge tree (Ward criterion by
default, updated with the Lance-Williams recurrence). The tree's leaf order
then seriates the assets so correlated names sit next to each other. Finally
capital is split top-down: each contiguous slice is halved at its midpoint
and the two halves receive mass in inverse proportion to their
inverse-variance-portfolio variances.

Nothing in the pipeline inverts the covariance matrix, so singular or
rank-deficient covariances are handled without special casing.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from datetime import date
from typing import Any, Literal, NamedTuple, Sequence

import numpy as np

from .errors import MalformedTree, ZeroVarianceAsset
from .portfolio import PortfolioWeights
from .returns_stats import (
    VARIANCE_FLOOR,
    CorrelationMatrix,
    CovarianceMatrix,
    ReturnsMatrix,
    correlation,
    sample_covariance,
)

DistanceMode = Literal["sqrt_half", "euclidean_returns"]
LinkageMethod = Literal["ward", "single", "complete", "average"]

UNDATED = date(1970, 1, 1)  # built_on placeholder for matrix-level calls


@dataclass(frozen=True)
class DistanceMatrix:
    """Symmetric nonnegative pairwise distances with a zero diagonal."""

    tickers: tuple[str, ...]
    values: np.ndarray = field(repr=False)

    def __post_init__(self) -> None:
        values = np.asarray(self.values, dtype=float)
        values.flags.writeable = False
        object.__setattr__(self, "values", values)
        n = len(self.tickers)
        if values.shape != (n, n):
            raise ValueError(f"distance shape {values.shape} does not match {n} tickers")
        if not np.isfinite(values).all() or (values < 0).any():
            raise ValueError("distances must be finite and >= 0")
        if np.abs(values - values.T).max() > 1e-12:
            raise ValueError("distance matrix not symmetric within 1e-12")
        if np.abs(np.diag(values)).max() != 0.0:
            raise ValueError("distance diagonal must be exactly 0")


class Merge(NamedTuple):
    """One agglomeration step: children ids, merge height, merged leaf count."""

    left_id: int
    right_id: int
    height: float
    size: int


@dataclass(frozen=True)
class LinkageTree:
    """N-1 merges over leaf ids 0..N-1; merge k creates cluster id N+k."""

    n_leaves: int
    rows: tuple[Merge, ...]

    def __post_init__(self) -> None:
        n = self.n_leaves
        if len(self.rows) != n - 1:
            raise MalformedTree(f"{len(self.rows)} rows for {n} leaves, expected {n - 1}")
        sizes = {leaf: 1 for leaf in range(n)}
        consumed: set[int] = set()
        previous_height = 0.0
        for k, row in enumerate(self.rows):
            for child in (row.left_id, row.right_id):
                if child not in sizes:
                    raise MalformedTree(f"row {k}: dangling child id {child}")
                if child in consumed:
                    raise MalformedTree(f"row {k}: child id {child} consumed twice")
                consumed.add(child)
            if row.left_id >= row.right_id:
                raise MalformedTree(f"row {k}: children not ordered left < right")
            if row.height < previous_height - 1e-9 * max(1.0, abs(previous_height)):
                raise MalformedTree(f"row {k}: height {row.height} below previous {previous_height}")
            if row.size != sizes[row.left_id] + sizes[row.right_id]:
                raise MalformedTree(f"row {k}: size {row.size} != sum of children sizes")
            sizes[n + k] = row.size
            previous_height = max(previous_height, row.height)
        if self.rows and self.rows[-1].size != n:
            raise MalformedTree(f"root size {self.rows[-1].size} != {n} leaves")

    @property
    def root_id(self) -> int:
        return self.n_leaves + len(self.rows) - 1


@dataclass(frozen=True)
class SeriationOrder:
    """Dendrogram leaf order: a permutation of 0..N-1."""

    order: tuple[int, ...]

    def __post_init__(self) -> None:
        if sorted(self.order) != list(range(len(self.order))):
            raise ValueError(f"not a permutation of 0..{len(self.order) - 1}: {self.order}")

    def tickers(self, labels: Sequence[str]) -> tuple[str, ...]:
        return tuple(labels[index] for index in self.order)


def correlation_distance(
    corr: CorrelationMatrix,
    mode: DistanceMode = "sqrt_half",
    returns: ReturnsMatrix | None = None,
) -> DistanceMatrix:
    """Leaf-level distances between assets.

    ``sqrt_half`` maps correlation into [0, 1] via d = sqrt((1 - rho) / 2).
    ``euclidean_returns`` measures the Euclidean distance between z-scored
    return columns instead and therefore needs the returns; it equals the
    sqrt_half metric up to the constant factor 2 * sqrt(T - 1).
    """
    if mode == "sqrt_half":
        values = np.sqrt(np.clip((1.0 - corr.values) / 2.0, 0.0, 1.0))
    elif mode == "euclidean_returns":
        if returns is None:
            raise ValueError("euclidean_returns mode requires the returns matrix")
        if returns.tickers != corr.tickers:
            raise ValueError("returns tickers do not match correlation tickers")
        x = returns.values
        variances = x.var(axis=0, ddof=1)
        dead = [t for t, v in zip(returns.tickers, variances) if v <= VARIANCE_FLOOR]
        if dead:
            raise ZeroVarianceAsset(dead)
        z = (x - x.mean(axis=0)) / np.sqrt(variances)
        gram = z.T @ z
        norms = np.diag(gram)
        squared = norms[:, None] + norms[None, :] - 2.0 * gram
        values = np.sqrt(np.maximum(squared, 0.0))
    else:
        raise ValueError(f"unknown distance mode {mode!r}")
    values = (values + values.T) / 2.0
    np.fill_diagonal(values, 0.0)
    return DistanceMatrix(tickers=corr.tickers, values=values)


def ward_linkage(dist: DistanceMatrix, method: LinkageMethod = "ward") -> LinkageTree:
    """Agglomerative clustering via the Lance-Williams recurrence.

    At every step the pair of active clusters at minimum distance merges;
    exact ties break on the smallest (left_id, right_id) pair. For the Ward
    criterion the distance from the merged cluster ij to any k is

        d(ij,k) = sqrt(((ni+nk) d_ik^2 + (nj+nk) d_jk^2 - nk d_ij^2) / (ni+nj+nk))

    which keeps merge heights nondecreasing. ``single``, ``complete`` and
    ``average`` are available behind the same interface.
    """
    n = len(dist.tickers)
    if n < 2:
        raise ValueError("linkage needs at least 2 assets")
    if method not in ("ward", "single", "complete", "average"):
        raise ValueError(f"unknown linkage method {method!r}")

    d = dist.values.copy()
    np.fill_diagonal(d, np.inf)
    cluster_id = np.arange(n)
    sizes = np.ones(n, dtype=np.int64)
    active = np.ones(n, dtype=bool)
    rows: list[Merge] = []

    for step in range(n - 1):
        height = d.min()
        ii, jj = np.nonzero(d == height)
        upper = ii < jj
        ii, jj = ii[upper], jj[upper]
        lo = np.minimum(cluster_id[ii], cluster_id[jj])
        hi = np.maximum(cluster_id[ii], cluster_id[jj])
        pick = np.lexsort((hi, lo))[0]
        i, j = int(ii[pick]), int(jj[pick])
        left, right = int(lo[pick]), int(hi[pick])

        merged_size = int(sizes[i] + sizes[j])
        rows.append(Merge(left, right, float(height), merged_size))

        others = active.copy()
        others[i] = others[j] = False
        k = np.nonzero(others)[0]
        if k.size:
            d_ik, d_jk = d[i, k], d[j, k]
            if method == "ward":
                ni, nj, nk = sizes[i], sizes[j], sizes[k]
                numerator = (ni + nk) * d_ik**2 + (nj + nk) * d_jk**2 - nk * height**2
                updated = np.sqrt(np.maximum(numerator, 0.0) / (ni + nj + nk))
            elif method == "single":
                updated = np.minimum(d_ik, d_jk)
            elif method == "complete":
                updated = np.maximum(d_ik, d_jk)
            else:
                updated = (sizes[i] * d_ik + sizes[j] * d_jk) / (sizes[i] + sizes[j])
            d[i, k] = updated
            d[k, i] = updated

        d[j, :] = np.inf
        d[:, j] = np.inf
        active[j] = False
        cluster_id[i] = n + step
        sizes[i] = merged_size

    return LinkageTree(n_leaves=n, rows=tuple(rows))


def quasi_diagonalize(tree: LinkageTree) -> SeriationOrder:
    """Leaf order of the dendrogram, read off by expanding from the root.

    Every internal id in the working sequence is replaced in place by its two
    children, preserving left-to-right order, until only leaves remain. This
    puts similar assets next to each other, concentrating large covariance
    entries near the diagonal of the reordered matrix.
    """
    n = tree.n_leaves
    if not tree.rows:
        return SeriationOrder(order=(0,))
    root = tree.rows[-1]
    sequence: list[int] = [root.left_id, root.right_id]
    while True:
        expanded: list[int] = []
        saw_internal = False
        for node in sequence:
            if node < n:
                expanded.append(node)
                continue
            row_index = node - n
            if row_index >= len(tree.rows):
                raise MalformedTree(f"dangling id {node} during expansion")
            row = tree.rows[row_index]
            expanded.extend((row.left_id, row.right_id))
            saw_internal = True
        sequence = expanded
        if not saw_internal:
            return SeriationOrder(order=tuple(sequence))


def inverse_variance_weights(cov: CovarianceMatrix, subset: Sequence[int]) -> np.ndarray:
    """Weights proportional to 1/variance over the given asset indices."""
    indices = list(subset)
    variances = cov.values[indices, indices]
    dead = [cov.tickers[i] for i, v in zip(indices, variances) if v <= VARIANCE_FLOOR]
    if dead:
        raise ZeroVarianceAsset(dead)
    inverse = 1.0 / variances
    return inverse / inverse.sum()


def cluster_variance(cov: CovarianceMatrix, subset: Sequence[int]) -> float:
    """Variance of the inverse-variance allocation over a cluster: w' V w."""
    indices = list(subset)
    w = inverse_variance_weights(cov, indices)
    block = cov.values[np.ix_(indices, indices)]
    return float(w @ block @ w)


def recursive_bisection(
    cov: CovarianceMatrix,
    order: SeriationOrder,
    built_on: date = UNDATED,
    extra_metadata: dict[str, Any] | None = None,
) -> PortfolioWeights:
    """Top-down inverse-variance capital split along the seriation order.

    Starting from the full seriated list with unit mass, every slice of
    length >= 2 is cut at its midpoint; the left half's weights scale by
    alpha = 1 - V_left / (V_left + V_right) and the right half's by
    1 - alpha. When both half variances underflow the numerical floor the
    split falls back to alpha = 0.5 and the event is counted in metadata.
    """
    if sorted(order.order) != list(range(len(cov.tickers))):
        raise ValueError("seriation order does not cover the covariance tickers")

    weights = np.ones(len(cov.tickers))
    queue: deque[list[int]] = deque([list(order.order)])
    degenerate_splits = 0
    while queue:
        items = queue.popleft()
        if len(items) < 2:
            continue
        mid = len(items) // 2
        left_items, right_items = items[:mid], items[mid:]
        v_left = max(cluster_variance(cov, left_items), 0.0)
        v_right = max(cluster_variance(cov, right_items), 0.0)
        total = v_left + v_right
        if total <= VARIANCE_FLOOR:
            alpha = 0.5
            degenerate_splits += 1
        else:
            alpha = 1.0 - v_left / total
        weights[left_items] *= alpha
        weights[right_items] *= 1.0 - alpha
        queue.append(left_items)
        queue.append(right_items)

    total_weight = float(weights.sum())
    if abs(total_weight - 1.0) > 1e-9:
        raise ValueError(f"bisection weights sum to {total_weight!r}")
    metadata: dict[str, Any] = {"degenerate_splits": degenerate_splits}
    metadata.update(extra_metadata or {})
    return PortfolioWeights(
        tickers=cov.tickers,
        weights=weights,
        method="HRP",
        built_on=built_on,
        metadata=metadata,
    )


class HrpResult(NamedTuple):
    weights: PortfolioWeights
    tree: LinkageTree
    order: SeriationOrder


def build_hrp_portfolio(
    returns: ReturnsMatrix,
    distance_mode: DistanceMode = "sqrt_half",
    linkage_method: LinkageMethod = "ward",
) -> HrpResult:
    """Run the full pipeline on training returns, keeping the intermediates.

    Covariance and correlation feed the distance matrix, the linkage tree
    seriates the assets, and recursive bisection allocates the weights. The
    tree and seriation come back alongside the weights for export.
    """
    cov = sample_covariance(returns)
    corr = correlation(cov)
    dist = correlation_distance(corr, mode=distance_mode, returns=returns)
    tree = ward_linkage(dist, method=linkage_method)
    order = quasi_diagonalize(tree)
    weights = recursive_bisection(
        cov,
        order,
        built_on=returns.dates[-1],
        extra_metadata={"distance": distance_mode, "linkage": linkage_method},
    )
    return HrpResult(weights=weights, tree=tree, order=order)


def dendrogram_dict(tree: LinkageTree, tickers: Sequence[str]) -> dict[str, Any]:
    """Nested {id, height, children} tree with ticker labels on the leaves."""
    if len(tickers) != tree.n_leaves:
        raise ValueError(f"{len(tickers)} labels for {tree.n_leaves} leaves")
    nodes: list[dict[str, Any]] = [
        {"id": index, "ticker": ticker, "height": 0.0} for index, ticker in enumerate(tickers)
    ]
    for k, row in enumerate(tree.rows):
        nodes.append(
            {
                "id": tree.n_leaves + k,
                "height": row.height,
                "children": [nodes[row.left_id], nodes[row.right_id]],
            }
        )
    return nodes[-1]
