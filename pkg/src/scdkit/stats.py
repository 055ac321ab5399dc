"""Significance testing and series statistics for semantic-change scores.

A change score between two years is deemed significant via a one-sided
permutation test: the two years' embeddings are pooled and repeatedly
re-partitioned (without replacement, preserving group sizes), and the
inverted-cosine change score of each re-partition is compared with the
observed one. Multiple year pairs are corrected with Benjamini-Hochberg.
Series-level helpers (Pearson correlation with an inner join on years,
centered rolling mean) support cross-metric comparison and smoothing.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Sequence

import numpy as np

from .metrics import MetricSeries, NonPositiveSimilarityError
from .store import EmbeddingStore, TimeSlice, slice_by_year
from .validation import check_vector

MAX_PERMUTATIONS = 100_000
SIGNIFICANCE_THRESHOLD = 0.05
_PERM_CHUNK = 64


@dataclass(frozen=True)
class PermutationResult:
    """Outcome of one permutation test between two years.

    ``count_ge`` counts re-partitions scoring >= the observed score,
    including ``n_degenerate`` ones whose score is undefined (non-positive
    cosine); those are folded in as extreme, which can only raise the
    p-value. ``p_adj`` stays None until a multiple-comparison correction
    fills it in.
    """

    year_pair: tuple[int, int]
    observed: float
    r: int
    count_ge: int
    p_raw: float
    n_degenerate: int = 0
    seed: int = 0
    p_adj: float | None = None

    def __post_init__(self) -> None:
        if not 0.0 < self.p_raw <= 1.0:
            raise ValueError(f"p_raw {self.p_raw} outside (0, 1]")
        if not 0 <= self.count_ge <= self.r:
            raise ValueError("count_ge must be in [0, r]")
        if self.p_adj is not None and not self.p_raw <= self.p_adj <= 1.0:
            raise ValueError(f"p_adj {self.p_adj} must lie in [p_raw, 1]")


def _inverted_cosine(sum_a: np.ndarray, n_a: int, sum_b: np.ndarray, n_b: int) -> float | None:
    """Inverted cosine of the two group means; None when undefined (cs <= 0)."""
    mean_a = sum_a / n_a
    mean_b = sum_b / n_b
    na = float(np.linalg.norm(mean_a))
    nb = float(np.linalg.norm(mean_b))
    if na == 0.0 or nb == 0.0:
        return None
    cs = min(1.0, max(-1.0, float(mean_a @ mean_b) / (na * nb)))
    if cs <= 0.0:
        return None
    return 1.0 / cs


def permutation_test_prt(
    store: EmbeddingStore,
    slice_t: TimeSlice,
    slice_t2: TimeSlice,
    r: int = 1000,
    seed: int | np.random.SeedSequence = 0,
    workers: int = 1,
    r_max: int = MAX_PERMUTATIONS,
) -> PermutationResult:
    """One-sided pooled permutation test of the inverted-cosine change score.

    The number of re-partitions is ``min(r, r_max)``. Each re-partition
    draws its randomness from a counter-indexed child of
    ``SeedSequence(seed)``, so the result does not depend on the worker
    count or scheduling order.
    """
    if r < 1:
        raise ValueError(f"r must be >= 1, got {r}")
    if len(slice_t) < 2 or len(slice_t2) < 2:
        raise ValueError(
            f"both slices need >= 2 embeddings, got {len(slice_t)} (year {slice_t.year}) "
            f"and {len(slice_t2)} (year {slice_t2.year})"
        )
    r = min(r, r_max)
    rows_a = store.matrix[slice_t.indices].astype(np.float64)
    rows_b = store.matrix[slice_t2.indices].astype(np.float64)
    n1 = rows_a.shape[0]
    pool = np.concatenate([rows_a, rows_b], axis=0)
    total = pool.sum(axis=0)
    n = pool.shape[0]
    n2 = n - n1

    sum_first = rows_a.sum(axis=0)
    observed = _inverted_cosine(sum_first, n1, total - sum_first, n2)
    if observed is None:
        raise NonPositiveSimilarityError(
            f"observed change score for ({slice_t.year}, {slice_t2.year}) is undefined: "
            "cosine similarity of the prototypes is not positive"
        )

    if isinstance(seed, np.random.SeedSequence):
        root, seed_label = seed, -1
    else:
        root, seed_label = np.random.SeedSequence(int(seed)), int(seed)
    children = root.spawn(r)

    def run_chunk(lo: int) -> tuple[int, int]:
        hi = min(lo + _PERM_CHUNK, r)
        ge = degenerate = 0
        for j in range(lo, hi):
            rng = np.random.default_rng(children[j])
            left = rng.permutation(n)[:n1]
            sum_a = pool[left].sum(axis=0)
            stat = _inverted_cosine(sum_a, n1, total - sum_a, n2)
            if stat is None:
                degenerate += 1
                ge += 1
            elif stat >= observed:
                ge += 1
        return ge, degenerate

    starts = range(0, r, _PERM_CHUNK)
    if workers <= 1:
        parts = [run_chunk(lo) for lo in starts]
    else:
        with ThreadPoolExecutor(max_workers=workers) as executor:
            parts = list(executor.map(run_chunk, starts))
    count_ge = sum(p[0] for p in parts)
    n_degenerate = sum(p[1] for p in parts)
    return PermutationResult(
        year_pair=(slice_t.year, slice_t2.year),
        observed=float(observed),
        r=r,
        count_ge=count_ge,
        p_raw=(count_ge + 1) / (r + 1),
        n_degenerate=n_degenerate,
        seed=seed_label,
    )


def permutation_scan(
    store: EmbeddingStore,
    r: int = 1000,
    seed: int = 0,
    workers: int = 1,
    year_range: tuple[int, int] | None = None,
) -> tuple[PermutationResult, ...]:
    """Permutation-test every consecutive pair of populated years, then apply
    Benjamini-Hochberg jointly across the pairs (fills ``p_adj``)."""
    years = store.years()
    if year_range is not None:
        lo, hi = year_range
        if lo > hi:
            raise ValueError(f"year_range lo {lo} > hi {hi}")
        years = [y for y in years if lo <= y <= hi]
    pairs = list(zip(years, years[1:]))
    if not pairs:
        return ()
    pair_seeds = np.random.SeedSequence(int(seed)).spawn(len(pairs))
    results = [
        permutation_test_prt(
            store,
            slice_by_year(store, t1),
            slice_by_year(store, t2),
            r=r,
            seed=pair_seeds[i],
            workers=workers,
        )
        for i, (t1, t2) in enumerate(pairs)
    ]
    adjusted = bh_adjust([res.p_raw for res in results])
    return tuple(
        replace(res, p_adj=float(adj), seed=int(seed))
        for res, adj in zip(results, adjusted)
    )


def bh_adjust(pvalues) -> np.ndarray:
    """Benjamini-Hochberg step-up adjusted p-values, in the input order.

    adjusted for the i-th smallest p is ``min_{j >= i} p_(j) * m / j``,
    capped at 1. Inputs must lie in (0, 1]; a p-value of exactly 0 cannot
    arise from the (count+1)/(r+1) estimator and is rejected.
    """
    p = np.asarray(pvalues, dtype=np.float64)
    if p.ndim != 1 or p.size == 0:
        raise ValueError("pvalues must be a non-empty 1-D sequence")
    if np.any(~np.isfinite(p)) or p.min() <= 0.0 or p.max() > 1.0:
        raise ValueError("pvalues must lie in (0, 1]")
    m = p.size
    order = np.argsort(p, kind="stable")
    scaled = p[order] * m / np.arange(1, m + 1)
    scaled[-1] = p[order[-1]]  # m/m == 1 exactly; avoid (p*m)/m rounding
    stepped = np.minimum.accumulate(scaled[::-1])[::-1]
    # min_{j>=i} p_(j)*m/j >= p_(i) holds exactly; clamp away the rounding
    # error of (p*m)/j, which can otherwise land one ULP below the input.
    np.maximum(stepped, p[order], out=stepped)
    np.minimum(stepped, 1.0, out=stepped)
    out = np.empty(m, dtype=np.float64)
    out[order] = stepped
    return out


def _join_series(x: MetricSeries, y: MetricSeries) -> tuple[np.ndarray, np.ndarray]:
    """Inner-join two series on their year keys, preserving ascending order."""
    y_map = dict(zip(y.years, y.values))
    xs, ys = [], []
    for key, value in zip(x.years, x.values):
        if key in y_map:
            xs.append(value)
            ys.append(y_map[key])
    return np.asarray(xs, dtype=np.float64), np.asarray(ys, dtype=np.float64)


def pearson(x, y) -> float:
    """Sample Pearson correlation, in [-1, 1].

    Two ``MetricSeries`` are inner-joined on shared years first; plain
    sequences are correlated positionally. Rejects fewer than 2 shared
    points and zero-variance input.
    """
    if isinstance(x, MetricSeries) and isinstance(y, MetricSeries):
        xv, yv = _join_series(x, y)
        if xv.size < 2:
            raise ValueError(f"need >= 2 shared years, found {xv.size}")
    else:
        xv = check_vector(x, name="x")
        yv = check_vector(y, name="y")
        if xv.size != yv.size:
            raise ValueError(f"length mismatch: {xv.size} vs {yv.size}")
        if xv.size < 2:
            raise ValueError("pearson requires at least 2 points")
    xc = xv - xv.mean()
    yc = yv - yv.mean()
    denom = math.sqrt(float((xc * xc).sum()) * float((yc * yc).sum()))
    if denom == 0.0:
        raise ValueError("pearson undefined for zero-variance input")
    return min(1.0, max(-1.0, float((xc * yc).sum()) / denom))


def rolling_mean(series, window: int = 3):
    """Centered rolling mean; edge windows shrink to the available neighbors.

    Windows run over consecutive series entries; missing years stay missing
    (no interpolation). Accepts a ``MetricSeries`` (returns a smoothed
    ``MetricSeries``) or a plain sequence (returns an array). The window
    must be odd so the center is well defined.
    """
    if window < 1 or window % 2 == 0:
        raise ValueError(f"window must be a positive odd integer, got {window}")
    if isinstance(series, MetricSeries):
        smoothed = _rolling_mean_values(np.asarray(series.values, dtype=np.float64), window)
        return replace(series, values=tuple(float(v) for v in smoothed))
    return _rolling_mean_values(check_vector(series, name="values"), window)


def _rolling_mean_values(v: np.ndarray, window: int) -> np.ndarray:
    half = window // 2
    out = np.empty(v.size, dtype=np.float64)
    for i in range(v.size):
        lo = max(0, i - half)
        hi = min(v.size, i + half + 1)
        out[i] = v[lo:hi].mean()
    return out


def permutation_results_to_csv_text(results: Sequence[PermutationResult]) -> str:
    lines = ["year_pair,observed,r,p_raw,p_adj"]
    for res in results:
        adj = "" if res.p_adj is None else repr(res.p_adj)
        lines.append(
            f"{res.year_pair[0]}-{res.year_pair[1]},{res.observed!r},{res.r},"
            f"{res.p_raw!r},{adj}"
        )
    return "\n".join(lines) + "\n"


def write_permutation_csv(results: Sequence[PermutationResult], path) -> Path:
    out = Path(path)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(permutation_results_to_csv_text(results), encoding="utf-8")
    return out
