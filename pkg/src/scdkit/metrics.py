"""Semantic-change and polysemy metrics over embedding stores.

Dominant-meaning shift is measured form-based via inverted cosine similarity
between yearly word prototypes (mean vectors), and sense-based via
Jensen-Shannon divergence between yearly cluster distributions. Polysemy is
measured via normalized Shannon entropy of the cluster distribution and via
the aggregate pairwise Euclidean distance of a year's embeddings (average
inner distance). All arithmetic runs in float64 over the float32 stores.
"""

from __future__ import annotations

import hashlib
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Literal, Sequence

import numpy as np

from .store import EmbeddingStore, TimeSlice, slice_by_year
from .validation import as_rows, check_probabilities, check_vector

AidMode = Literal["paper", "pair_mean"]
AID_MODES = ("paper", "pair_mean")

METRICS = ("prt", "jsd", "entropy", "aid")
PAIR_METRICS = ("prt", "jsd")

_AID_BLOCK_ROWS = 512


class NonPositiveSimilarityError(ValueError):
    """Cosine similarity of the prototypes is <= 0; inverted similarity undefined."""


@dataclass(frozen=True)
class Prototype:
    """Mean embedding of one year's occurrences; proxy for the dominant meaning."""

    year: int
    vector: np.ndarray
    support: int

    def __post_init__(self) -> None:
        vec = check_vector(self.vector, name="prototype vector")
        vec.flags.writeable = False
        object.__setattr__(self, "vector", vec)
        if self.support < 1:
            raise ValueError("prototype support must be >= 1")


@dataclass(frozen=True)
class ClusterDistribution:
    """Probability of each sense cluster among one year's occurrences."""

    year: int
    probs: np.ndarray
    support: int

    def __post_init__(self) -> None:
        p = check_probabilities(self.probs, name="probs")
        p.flags.writeable = False
        object.__setattr__(self, "probs", p)
        if self.support < 1:
            raise ValueError("distribution support must be >= 1")

    def __len__(self) -> int:
        return int(self.probs.size)


@dataclass(frozen=True)
class MetricSeries:
    """Per-year (entropy, aid) or per-year-pair (prt, jsd) metric values.

    Years are strictly increasing; years skipped for lack of data are listed
    in ``gaps`` rather than zero-filled.
    """

    metric: str
    variant: str
    years: tuple
    values: tuple[float, ...]
    gaps: tuple[int, ...] = ()
    params_digest: str = ""

    def __post_init__(self) -> None:
        if self.metric not in METRICS:
            raise ValueError(f"unknown metric {self.metric!r}")
        if len(self.years) != len(self.values):
            raise ValueError("years and values length mismatch")
        for a, b in zip(self.years, self.years[1:]):
            if not a < b:
                raise ValueError("series years must be strictly increasing")
        if any(not math.isfinite(v) for v in self.values):
            raise ValueError("series values must be finite")

    def __len__(self) -> int:
        return len(self.values)

    def is_pairwise(self) -> bool:
        return self.metric in PAIR_METRICS


def prototype(store: EmbeddingStore, sl: TimeSlice) -> Prototype:
    """Component-wise float64 mean of the slice's vectors."""
    if len(sl) == 0:
        raise ValueError(f"cannot build a prototype from an empty slice (year {sl.year})")
    rows = store.matrix[sl.indices].astype(np.float64)
    return Prototype(year=sl.year, vector=rows.mean(axis=0), support=len(sl))


def cosine_similarity(a, b) -> float:
    """Dot product over the product of norms, clipped into [-1, 1]."""
    va = check_vector(a, name="a")
    vb = check_vector(b, name="b")
    if va.shape != vb.shape:
        raise ValueError(f"dimension mismatch: {va.shape} vs {vb.shape}")
    na = float(np.linalg.norm(va))
    nb = float(np.linalg.norm(vb))
    if na == 0.0 or nb == 0.0:
        raise ValueError("cosine similarity undefined for zero-norm input")
    if np.array_equal(va, vb):
        return 1.0
    cs = float(va @ vb) / (na * nb)
    return min(1.0, max(-1.0, cs))


def prt(mu_t, mu_t2) -> float:
    """Inverted cosine similarity between two prototypes; >= 1 when aligned."""
    a = mu_t.vector if isinstance(mu_t, Prototype) else mu_t
    b = mu_t2.vector if isinstance(mu_t2, Prototype) else mu_t2
    cs = cosine_similarity(a, b)
    if cs <= 0.0:
        raise NonPositiveSimilarityError(
            f"cosine similarity {cs} <= 0: inverted similarity undefined"
        )
    return 1.0 / cs


def cluster_distribution(model, sl: TimeSlice) -> ClusterDistribution:
    """Share of each cluster among the slice's rows; zero entries allowed."""
    if len(sl) == 0:
        raise ValueError(f"cannot build a distribution from an empty slice (year {sl.year})")
    labels = np.asarray(model.labels)
    if sl.indices.size and int(sl.indices[-1]) >= labels.size:
        raise ValueError("cluster model labels do not cover the slice rows")
    counts = np.bincount(labels[sl.indices], minlength=model.n_clusters)
    probs = counts.astype(np.float64) / float(len(sl))
    return ClusterDistribution(year=sl.year, probs=probs, support=len(sl))


def entropy_normalized(dist) -> float:
    """Shannon entropy over the distribution divided by log N, in [0, 1].

    A single-cluster distribution has entropy 0 by definition; zero
    probabilities contribute 0 (0 log 0 := 0).
    """
    p = dist.probs if isinstance(dist, ClusterDistribution) else check_probabilities(dist)
    n = p.size
    if n == 1:
        return 0.0
    nz = p[p > 0.0]
    h = float(-(nz * np.log(nz)).sum())
    eta = h / math.log(n)
    return min(1.0, max(0.0, eta))


def jsd(p, q) -> float:
    """Jensen-Shannon divergence of two cluster distributions, via normalized
    entropy of the mixture minus the mean of the normalized entropies."""
    pa = p.probs if isinstance(p, ClusterDistribution) else check_probabilities(p)
    qa = q.probs if isinstance(q, ClusterDistribution) else check_probabilities(q)
    if pa.size != qa.size:
        raise ValueError(f"distribution length mismatch: {pa.size} vs {qa.size}")
    if pa.size < 2:
        raise ValueError("jsd requires distributions over at least 2 clusters")
    mix = 0.5 * (pa + qa)
    value = entropy_normalized(mix) - 0.5 * (entropy_normalized(pa) + entropy_normalized(qa))
    return max(0.0, value)


def aid(data, sl: TimeSlice | None = None, mode: AidMode = "paper", workers: int = 1) -> float:
    """Aggregate pairwise Euclidean distance of a slice's embeddings.

    ``paper`` divides the pair-sum by the number of embeddings (the value
    grows roughly linearly with slice size); ``pair_mean`` divides by the
    number of unordered pairs and is size-robust.
    """
    if mode not in AID_MODES:
        raise ValueError(f"unknown aid mode {mode!r}")
    rows = as_rows(data, name="embeddings")
    if sl is not None:
        rows = rows[sl.indices]
    n = rows.shape[0]
    if n < 2:
        raise ValueError(f"aid requires at least 2 embeddings, got {n}")
    total = _pair_distance_sum(rows, workers=workers)
    if mode == "paper":
        return total / n
    return total / (n * (n - 1) / 2.0)


def _pair_distance_sum(X: np.ndarray, workers: int = 1) -> float:
    """Sum of Euclidean distances over all unordered row pairs.

    Blocked Gram-matrix kernel; entries where cancellation could bite are
    recomputed from direct differences, so exact duplicates contribute
    exactly zero. Block boundaries and the reduction order are fixed, making
    the result independent of the worker count.
    """
    n, d = X.shape
    sq = np.einsum("ij,ij->i", X, X)
    tau_scale = d * 1e-13
    starts = list(range(0, n, _AID_BLOCK_ROWS))

    def block_sum(s: int) -> float:
        e = min(s + _AID_BLOCK_ROWS, n)
        block = X[s:e]
        d2 = sq[s:e, None] + sq[None, s:] - 2.0 * (block @ X[s:].T)
        suspicious = d2 < (sq[s:e, None] + sq[None, s:]) * tau_scale
        if suspicious.any():
            bi, bj = np.nonzero(suspicious)
            diff = X[bi + s] - X[bj + s]
            d2[bi, bj] = np.einsum("ij,ij->i", diff, diff)
        np.maximum(d2, 0.0, out=d2)
        np.sqrt(d2, out=d2)
        m = e - s
        return float(np.triu(d2[:, :m], k=1).sum()) + float(d2[:, m:].sum())

    if workers <= 1:
        parts = [block_sum(s) for s in starts]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(block_sum, starts))
    return float(np.sum(np.asarray(parts, dtype=np.float64)))


def compute_series(
    store: EmbeddingStore,
    metric: str,
    model=None,
    variant: str | None = None,
    year_range: tuple[int, int] | None = None,
    workers: int = 1,
) -> MetricSeries:
    """Evaluate one metric across the store's populated years.

    ``prt`` and ``jsd`` compare each populated year with the immediately
    preceding populated year; ``entropy`` and ``aid`` are per-year. Years
    without data (or with a single embedding, for aid) are skipped and
    recorded as gaps. ``jsd`` and ``entropy`` require a cluster model fitted
    on this store; for ``aid`` the variant selects the normalization mode.
    """
    if metric not in METRICS:
        raise ValueError(f"unknown metric {metric!r}")
    if metric in ("jsd", "entropy"):
        if model is None:
            raise ValueError(f"metric {metric!r} requires a fitted cluster model")
        if np.asarray(model.labels).size != store.count:
            raise ValueError(
                "cluster model labels do not match the store "
                f"({np.asarray(model.labels).size} labels for {store.count} rows)"
            )
    if metric == "aid":
        mode = variant or "paper"
        if mode not in AID_MODES:
            raise ValueError(f"unknown aid variant {mode!r}")
        variant = mode
    elif variant is None:
        variant = model.method if model is not None else "prototype"

    all_years = store.years()
    if year_range is not None:
        lo, hi = year_range
        if lo > hi:
            raise ValueError(f"year_range lo {lo} > hi {hi}")
        populated = [y for y in all_years if lo <= y <= hi]
        span = range(lo, hi + 1)
    elif all_years:
        populated = all_years
        span = range(all_years[0], all_years[-1] + 1)
    else:
        populated = []
        span = range(0)
    gaps = [y for y in span if y not in set(populated)]

    years: list = []
    values: list[float] = []
    if metric in PAIR_METRICS:
        reps = {}
        for y in populated:
            sl = slice_by_year(store, y)
            reps[y] = prototype(store, sl) if metric == "prt" else cluster_distribution(model, sl)
        for prev, cur in zip(populated, populated[1:]):
            value = prt(reps[prev], reps[cur]) if metric == "prt" else jsd(reps[prev], reps[cur])
            years.append((prev, cur))
            values.append(float(value))
    elif metric == "entropy":
        for y in populated:
            years.append(y)
            values.append(entropy_normalized(cluster_distribution(model, slice_by_year(store, y))))
    else:  # aid
        for y in populated:
            sl = slice_by_year(store, y)
            if len(sl) < 2:
                gaps.append(y)
                continue
            years.append(y)
            values.append(aid(store, sl, mode=variant, workers=workers))

    digest = _params_digest(metric, variant, year_range, model)
    return MetricSeries(
        metric=metric,
        variant=variant,
        years=tuple(years),
        values=tuple(values),
        gaps=tuple(sorted(gaps)),
        params_digest=digest,
    )


def _params_digest(metric, variant, year_range, model) -> str:
    payload = {
        "metric": metric,
        "variant": variant,
        "year_range": list(year_range) if year_range else None,
        "model": None
        if model is None
        else {
            "method": model.method,
            "n_clusters": int(model.n_clusters),
            "params": getattr(model, "params", None),
        },
    }
    blob = json.dumps(payload, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()[:12]


def series_to_csv_text(series: MetricSeries) -> str:
    """CSV rendering: one row per value, deterministic float formatting."""
    key = "year_pair" if series.is_pairwise() else "year"
    lines = [f"{key},value,metric,variant"]
    for y, v in zip(series.years, series.values):
        label = f"{y[0]}-{y[1]}" if series.is_pairwise() else str(y)
        lines.append(f"{label},{v!r},{series.metric},{series.variant}")
    return "\n".join(lines) + "\n"


def series_to_json_text(series: MetricSeries) -> str:
    payload = {
        "metric": series.metric,
        "variant": series.variant,
        "params_digest": series.params_digest,
        "years": [list(y) if series.is_pairwise() else y for y in series.years],
        "values": list(series.values),
        "gaps": list(series.gaps),
    }
    return json.dumps(payload, sort_keys=True, indent=2) + "\n"


def write_series(series: MetricSeries, path_stem) -> list[Path]:
    """Write ``<stem>.csv`` and ``<stem>.json``; returns the paths written."""
    stem = Path(path_stem)
    stem.parent.mkdir(parents=True, exist_ok=True)
    csv_path = stem.with_name(stem.name + ".csv")
    json_path = stem.with_name(stem.name + ".json")
    csv_path.write_text(series_to_csv_text(series), encoding="utf-8")
    json_path.write_text(series_to_json_text(series), encoding="utf-8")
    return [csv_path, json_path]


def read_series_json(path) -> MetricSeries:
    obj = json.loads(Path(path).read_text(encoding="utf-8"))
    pairwise = obj["metric"] in PAIR_METRICS
    years = tuple(tuple(y) if pairwise else int(y) for y in obj["years"])
    return MetricSeries(
        metric=obj["metric"],
        variant=obj["variant"],
        years=years,
        values=tuple(float(v) for v in obj["values"]),
        gaps=tuple(int(g) for g in obj.get("gaps", ())),
        params_digest=obj.get("params_digest", ""),
    )
