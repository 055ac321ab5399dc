"""Sense induction: clustering of contextualized occurrence embeddings.

Two scikit-learn style estimators are provided. ``SenseKMeans`` partitions
occurrences into a fixed number of sense clusters (k-means++ seeding, Lloyd
iterations, empty clusters reseeded to the point farthest from its assigned
center). ``SenseAffinityPropagation`` lets the number of senses emerge from
the data via exemplar message passing over negative squared Euclidean
similarities. Fitted results are frozen into a ``ClusterModel`` that can be
saved to and loaded from disk and fed to the metric layer.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np
from sklearn.base import BaseEstimator, ClusterMixin

from .store import EmbeddingStore, read_vec_matrix, write_vec_matrix
from .validation import as_rows

KMEANS_METHOD = "kmeans"
AP_METHOD = "affinity_propagation"
MODEL_FORMAT_VERSION = 1


class ConvergenceError(RuntimeError):
    """Affinity propagation did not stabilize within ``max_iter`` iterations.

    Carries the exemplar set of the final iteration so callers can inspect
    the partial solution.
    """

    def __init__(self, message: str, exemplar_indices: np.ndarray, n_iter: int):
        super().__init__(message)
        self.exemplar_indices = np.asarray(exemplar_indices, dtype=np.int64)
        self.n_iter = int(n_iter)


def _squared_distances(X: np.ndarray, C: np.ndarray) -> np.ndarray:
    """Squared Euclidean distances (n, k) via the Gram expansion, clipped at 0."""
    sq_x = np.einsum("ij,ij->i", X, X)
    sq_c = np.einsum("ij,ij->i", C, C)
    d2 = sq_x[:, None] + sq_c[None, :] - 2.0 * (X @ C.T)
    np.maximum(d2, 0.0, out=d2)
    return d2


def _kmeans_plusplus(X: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    """k-means++ seeding with greedy local trials."""
    n = X.shape[0]
    centers = np.empty((k, X.shape[1]), dtype=np.float64)
    centers[0] = X[int(rng.integers(n))]
    closest = _squared_distances(X, centers[:1])[:, 0]
    n_trials = 2 + int(math.log(k)) if k > 1 else 1
    for c in range(1, k):
        total = float(closest.sum())
        if total <= 0.0:
            centers[c] = X[int(rng.integers(n))]
            continue
        candidates = rng.choice(n, size=n_trials, replace=True, p=closest / total)
        cand_d2 = _squared_distances(X, X[candidates])
        pooled = np.minimum(closest[:, None], cand_d2)
        best = int(np.argmin(pooled.sum(axis=0)))
        centers[c] = X[candidates[best]]
        closest = pooled[:, best]
    return centers


class SenseKMeans(ClusterMixin, BaseEstimator):
    """K-means sense clustering with deterministic seeding.

    Parameters
    ----------
    n_clusters : int, default=10
        Number of sense clusters.
    seed : int, default=0
        Seed for k-means++ center selection.
    max_iter : int, default=300
        Upper bound on Lloyd iterations.
    tol : float, default=1e-6
        Stop when the summed squared center movement drops to or below
        ``tol``; label stability stops earlier.
    n_init : int, default=1
        Independent seeded restarts; the run with the lowest inertia wins.
    """

    def __init__(
        self,
        n_clusters: int = 10,
        seed: int = 0,
        max_iter: int = 300,
        tol: float = 1e-6,
        n_init: int = 1,
    ):
        self.n_clusters = n_clusters
        self.seed = seed
        self.max_iter = max_iter
        self.tol = tol
        self.n_init = n_init

    def fit(self, X, y=None):
        rows = as_rows(X, name="X")
        n, dim = rows.shape
        k = int(self.n_clusters)
        if k < 1:
            raise ValueError(f"n_clusters must be >= 1, got {k}")
        if n < k:
            raise ValueError(f"n_samples={n} must be >= n_clusters={k}")
        if self.max_iter < 1:
            raise ValueError(f"max_iter must be >= 1, got {self.max_iter}")
        if self.n_init < 1:
            raise ValueError(f"n_init must be >= 1, got {self.n_init}")

        best = None
        for child in np.random.SeedSequence(self.seed).spawn(int(self.n_init)):
            result = self._fit_single(rows, k, np.random.default_rng(child))
            if best is None or result[2] < best[2]:
                best = result
        centers, labels, inertia, history, n_iter = best
        self.cluster_centers_ = centers
        self.labels_ = labels
        self.inertia_ = inertia
        self.inertia_history_ = history
        self.n_iter_ = n_iter
        self.n_features_in_ = dim
        return self

    def _fit_single(self, rows, k, rng):
        """One seeded k-means++ plus Lloyd run; returns the fitted tuple."""
        n = rows.shape[0]
        centers = _kmeans_plusplus(rows, k, rng)
        labels = np.full(n, -1, dtype=np.int32)
        history: list[float] = []
        n_iter = 0
        for n_iter in range(1, self.max_iter + 1):
            d2 = _squared_distances(rows, centers)
            new_labels = d2.argmin(axis=1).astype(np.int32)
            new_labels, d2 = self._fill_empty_clusters(rows, centers, new_labels, d2)

            onehot = np.zeros((n, k), dtype=np.float64)
            onehot[np.arange(n), new_labels] = 1.0
            counts = onehot.sum(axis=0)
            new_centers = (onehot.T @ rows) / counts[:, None]

            history.append(float(d2[np.arange(n), new_labels].sum()))
            shift = float(((new_centers - centers) ** 2).sum())
            stable = np.array_equal(new_labels, labels)
            centers, labels = new_centers, new_labels
            if stable or shift <= self.tol:
                break

        # Final fixed-point assignment; repair any cluster emptied by it so
        # the model never carries empty clusters.
        d2 = _squared_distances(rows, centers)
        labels = d2.argmin(axis=1).astype(np.int32)
        for _ in range(k):
            if np.bincount(labels, minlength=k).min() > 0:
                break
            labels, d2 = self._fill_empty_clusters(rows, centers, labels, d2)
            labels = d2.argmin(axis=1).astype(np.int32)
        else:
            raise RuntimeError(
                "k-means could not populate every cluster; the data has fewer "
                f"than {k} distinct points"
            )
        inertia = float(d2[np.arange(n), labels].sum())
        return centers, labels, inertia, tuple(history), n_iter

    def _fill_empty_clusters(self, rows, centers, labels, d2):
        """Reseed each empty cluster to the point farthest from its center."""
        counts = np.bincount(labels, minlength=centers.shape[0])
        empty = np.flatnonzero(counts == 0)
        if empty.size == 0:
            return labels, d2
        nearest = d2[np.arange(rows.shape[0]), labels]
        victims = np.argsort(-nearest, kind="stable")
        for rank, cluster in enumerate(empty):
            victim = int(victims[rank])
            centers[cluster] = rows[victim]
            labels[victim] = cluster
        d2 = _squared_distances(rows, centers)
        return labels, d2

    def predict(self, X) -> np.ndarray:
        self._check_fitted()
        rows = as_rows(X, name="X")
        if rows.shape[1] != self.n_features_in_:
            raise ValueError(
                f"X has {rows.shape[1]} features, expected {self.n_features_in_}"
            )
        return _squared_distances(rows, self.cluster_centers_).argmin(axis=1).astype(np.int32)

    def transform(self, X) -> np.ndarray:
        """Euclidean distance of each row to each cluster center."""
        self._check_fitted()
        rows = as_rows(X, name="X")
        return np.sqrt(_squared_distances(rows, self.cluster_centers_))

    def to_model(self) -> "ClusterModel":
        self._check_fitted()
        return ClusterModel(
            method=KMEANS_METHOD,
            n_clusters=int(self.cluster_centers_.shape[0]),
            labels=self.labels_,
            centers=self.cluster_centers_.astype(np.float32),
            params={
                "n_clusters": int(self.n_clusters),
                "max_iter": int(self.max_iter),
                "tol": float(self.tol),
                "n_init": int(self.n_init),
            },
            seed=int(self.seed),
        )

    def _check_fitted(self) -> None:
        if not hasattr(self, "labels_"):
            raise RuntimeError("estimator is not fitted; call fit first")


class SenseAffinityPropagation(ClusterMixin, BaseEstimator):
    """Affinity propagation over negative squared Euclidean similarities.

    The preference defaults to the median similarity. A tiny seeded noise
    term breaks exact ties in the messages. Exemplars are the points whose
    self-responsibility plus self-availability is positive; the exemplar set
    must stay unchanged for ``convergence_iter`` consecutive iterations,
    otherwise ``ConvergenceError`` is raised with the partial exemplar set.

    Parameters
    ----------
    damping : float, default=0.5
        Message damping factor in [0.5, 1).
    max_iter : int, default=1000
        Hard iteration bound.
    convergence_iter : int, default=50
        Iterations the exemplar set must stay stable.
    preference : float or None, default=None
        Self-similarity; ``None`` uses the median of the similarity matrix.
    seed : int, default=0
        Seed for the tie-breaking noise.
    max_rows : int, default=50000
        Refuse inputs with more rows (the similarity matrix is dense n x n).
    """

    def __init__(
        self,
        damping: float = 0.5,
        max_iter: int = 1000,
        convergence_iter: int = 50,
        preference: float | None = None,
        seed: int = 0,
        max_rows: int = 50000,
    ):
        self.damping = damping
        self.max_iter = max_iter
        self.convergence_iter = convergence_iter
        self.preference = preference
        self.seed = seed
        self.max_rows = max_rows

    def fit(self, X, y=None):
        rows = as_rows(X, name="X")
        n, dim = rows.shape
        if n < 2:
            raise ValueError(f"affinity propagation needs at least 2 rows, got {n}")
        if n > self.max_rows:
            raise ValueError(
                f"affinity propagation is quadratic in rows: {n} exceeds max_rows={self.max_rows}; "
                "subsample first (e.g. stratified_sample)"
            )
        if not 0.5 <= self.damping < 1.0:
            raise ValueError(f"damping must be in [0.5, 1), got {self.damping}")
        if self.max_iter < 1 or self.convergence_iter < 1:
            raise ValueError("max_iter and convergence_iter must be >= 1")
        if np.all(rows == rows[0]):
            # All-identical input makes every similarity zero and message
            # passing fully degenerate; the only sensible answer is one
            # cluster, so short-circuit instead of letting tie noise pick
            # an arbitrary exemplar set.
            self.cluster_centers_indices_ = np.zeros(1, dtype=np.int64)
            self.cluster_centers_ = rows[:1].copy()
            self.labels_ = np.zeros(n, dtype=np.int32)
            self.n_clusters_ = 1
            self.n_iter_ = 0
            self.n_features_in_ = dim
            return self
        rng = np.random.default_rng(self.seed)

        S = -_squared_distances(rows, rows)
        preference = float(np.median(S)) if self.preference is None else float(self.preference)
        idx = np.arange(n)
        S[idx, idx] = preference
        S += (np.finfo(np.float64).eps * S + np.finfo(np.float64).tiny * 100) * rng.standard_normal(
            (n, n)
        )

        R = np.zeros((n, n))
        A = np.zeros((n, n))
        stability = np.zeros((n, self.convergence_iter), dtype=bool)
        exemplar_mask = np.zeros(n, dtype=bool)
        converged = False
        n_iter = 0
        for n_iter in range(1, self.max_iter + 1):
            # Responsibilities: r(i,k) = s(i,k) - max_{k'!=k}(a(i,k') + s(i,k'))
            tmp = A + S
            top = tmp.argmax(axis=1)
            first = tmp[idx, top]
            tmp[idx, top] = -np.inf
            second = tmp.max(axis=1)
            new_R = S - first[:, None]
            new_R[idx, top] = S[idx, top] - second
            R = self.damping * R + (1.0 - self.damping) * new_R

            # Availabilities: a(i,k) = min(0, r(k,k) + sum_{i' not in {i,k}} max(0, r(i',k)))
            Rp = np.maximum(R, 0.0)
            Rp[idx, idx] = R[idx, idx]
            colsum = Rp.sum(axis=0)
            new_A = np.minimum(0.0, colsum[None, :] - Rp)
            new_A[idx, idx] = colsum - Rp[idx, idx]
            A = self.damping * A + (1.0 - self.damping) * new_A

            exemplar_mask = (np.diag(A) + np.diag(R)) > 0.0
            stability[:, (n_iter - 1) % self.convergence_iter] = exemplar_mask
            if n_iter >= self.convergence_iter:
                seen = stability.sum(axis=1)
                stable = np.all((seen == self.convergence_iter) | (seen == 0))
                if stable and exemplar_mask.any():
                    converged = True
                    break

        exemplars = np.flatnonzero(exemplar_mask)
        if not converged:
            raise ConvergenceError(
                f"affinity propagation did not converge in {self.max_iter} iterations "
                f"({exemplars.size} unstable exemplars); raise max_iter or damping",
                exemplar_indices=exemplars,
                n_iter=n_iter,
            )

        labels, exemplars = self._refine(S, exemplars)
        order = np.argsort(exemplars)
        exemplars = exemplars[order]
        remap = np.empty(order.size, dtype=np.int32)
        remap[order] = np.arange(order.size, dtype=np.int32)
        labels = remap[labels]

        self.cluster_centers_indices_ = exemplars.astype(np.int64)
        self.cluster_centers_ = rows[exemplars].copy()
        self.labels_ = labels.astype(np.int32)
        self.n_clusters_ = int(exemplars.size)
        self.n_iter_ = n_iter
        self.n_features_in_ = dim
        return self

    @staticmethod
    def _refine(S: np.ndarray, exemplars: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Assign rows to exemplars, then re-pick each cluster's best exemplar."""
        k = exemplars.size
        labels = S[:, exemplars].argmax(axis=1)
        labels[exemplars] = np.arange(k)
        refined = exemplars.copy()
        for c in range(k):
            members = np.flatnonzero(labels == c)
            within = S[np.ix_(members, members)].sum(axis=0)
            refined[c] = members[int(within.argmax())]
        labels = S[:, refined].argmax(axis=1)
        labels[refined] = np.arange(k)
        return labels, refined

    def predict(self, X) -> np.ndarray:
        self._check_fitted()
        rows = as_rows(X, name="X")
        if rows.shape[1] != self.n_features_in_:
            raise ValueError(
                f"X has {rows.shape[1]} features, expected {self.n_features_in_}"
            )
        return _squared_distances(rows, self.cluster_centers_).argmin(axis=1).astype(np.int32)

    def to_model(self) -> "ClusterModel":
        self._check_fitted()
        preference = None if self.preference is None else float(self.preference)
        return ClusterModel(
            method=AP_METHOD,
            n_clusters=self.n_clusters_,
            labels=self.labels_,
            centers=self.cluster_centers_.astype(np.float32),
            params={
                "damping": float(self.damping),
                "max_iter": int(self.max_iter),
                "convergence_iter": int(self.convergence_iter),
                "preference": preference,
                "max_rows": int(self.max_rows),
            },
            seed=int(self.seed),
            exemplar_rows=self.cluster_centers_indices_,
        )

    def _check_fitted(self) -> None:
        if not hasattr(self, "labels_"):
            raise RuntimeError("estimator is not fitted; call fit first")


@dataclass(frozen=True)
class ClusterModel:
    """Frozen clustering result: per-row labels plus cluster centers.

    ``centers`` holds centroids for k-means and exemplar vectors for
    affinity propagation; ``exemplar_rows`` (affinity propagation only)
    holds the exemplars' row indices in the fitted data. Every cluster must
    be non-empty, and each exemplar must be labeled with its own cluster.
    """

    method: str
    n_clusters: int
    labels: np.ndarray
    centers: np.ndarray
    params: dict = field(default_factory=dict)
    seed: int = 0
    exemplar_rows: np.ndarray | None = None

    def __post_init__(self) -> None:
        if self.method not in (KMEANS_METHOD, AP_METHOD):
            raise ValueError(f"unknown clustering method {self.method!r}")
        labels = np.ascontiguousarray(self.labels, dtype=np.int32)
        centers = np.ascontiguousarray(self.centers, dtype=np.float32)
        if centers.ndim != 2 or centers.shape[0] != self.n_clusters:
            raise ValueError(
                f"centers shape {centers.shape} does not match n_clusters={self.n_clusters}"
            )
        if labels.ndim != 1:
            raise ValueError("labels must be 1-D")
        counts = np.bincount(labels, minlength=self.n_clusters) if labels.size else None
        if counts is None or labels.min() < 0 or labels.max() >= self.n_clusters:
            raise ValueError("labels out of range for n_clusters")
        if counts.min() == 0:
            raise ValueError("every cluster must be non-empty")
        labels.flags.writeable = False
        centers.flags.writeable = False
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "centers", centers)
        if self.exemplar_rows is not None:
            rows = np.ascontiguousarray(self.exemplar_rows, dtype=np.int64)
            if rows.shape != (self.n_clusters,):
                raise ValueError(
                    f"exemplar_rows shape {rows.shape} does not match n_clusters={self.n_clusters}"
                )
            if rows.min() < 0 or rows.max() >= labels.size:
                raise ValueError("exemplar_rows out of range for labels")
            if not np.array_equal(labels[rows], np.arange(self.n_clusters)):
                raise ValueError("each exemplar must be labeled with its own cluster")
            rows.flags.writeable = False
            object.__setattr__(self, "exemplar_rows", rows)

    def save(self, path_stem) -> list[Path]:
        """Write ``<stem>.cluster.json``, ``<stem>.labels.bin``, ``<stem>.centers.vec``."""
        stem = Path(path_stem)
        stem.parent.mkdir(parents=True, exist_ok=True)
        json_path = stem.with_name(stem.name + ".cluster.json")
        labels_path = stem.with_name(stem.name + ".labels.bin")
        centers_path = stem.with_name(stem.name + ".centers.vec")
        labels_path.write_bytes(self.labels.astype("<i4").tobytes())
        write_vec_matrix(centers_path, self.centers)
        meta = {
            "format_version": MODEL_FORMAT_VERSION,
            "method": self.method,
            "n_clusters": int(self.n_clusters),
            "n_rows": int(self.labels.size),
            "dim": int(self.centers.shape[1]),
            "params": self.params,
            "seed": int(self.seed),
            "exemplar_rows": None
            if self.exemplar_rows is None
            else [int(i) for i in self.exemplar_rows],
            "labels_file": labels_path.name,
            "centers_file": centers_path.name,
        }
        json_path.write_text(json.dumps(meta, sort_keys=True, indent=2) + "\n", encoding="utf-8")
        return [json_path, labels_path, centers_path]

    @classmethod
    def load(cls, path_stem) -> "ClusterModel":
        stem = Path(path_stem)
        json_path = stem.with_name(stem.name + ".cluster.json")
        meta = json.loads(json_path.read_text(encoding="utf-8"))
        if meta.get("format_version") != MODEL_FORMAT_VERSION:
            raise ValueError(f"unsupported cluster model version {meta.get('format_version')!r}")
        labels_path = stem.with_name(meta["labels_file"])
        centers_path = stem.with_name(meta["centers_file"])
        labels = np.frombuffer(labels_path.read_bytes(), dtype="<i4")
        if labels.size != meta["n_rows"]:
            raise ValueError(
                f"labels file holds {labels.size} entries, expected {meta['n_rows']}"
            )
        centers = read_vec_matrix(centers_path)
        exemplar_rows = meta.get("exemplar_rows")
        return cls(
            method=meta["method"],
            n_clusters=int(meta["n_clusters"]),
            labels=labels,
            centers=centers,
            params=meta.get("params", {}),
            seed=int(meta.get("seed", 0)),
            exemplar_rows=None if exemplar_rows is None else np.asarray(exemplar_rows),
        )


def stratified_sample(
    store: EmbeddingStore,
    fraction: float = 0.25,
    min_per_year: int = 400,
    seed: int = 0,
) -> EmbeddingStore:
    """Per-year subsample without replacement, preserving row order.

    Each populated year keeps ``min(n, max(ceil(fraction * n), min_per_year))``
    of its ``n`` rows. Selection within a year is seeded independently per
    year, so adding or removing other years does not change a year's draw.
    """
    if not 0.0 < fraction <= 1.0:
        raise ValueError(f"fraction must be in (0, 1], got {fraction}")
    if min_per_year < 0:
        raise ValueError(f"min_per_year must be >= 0, got {min_per_year}")
    keep: list[np.ndarray] = []
    for year in store.years():
        sl_indices = np.flatnonzero(store.year_of_row == year)
        n = sl_indices.size
        m = min(n, max(math.ceil(fraction * n), min_per_year))
        rng = np.random.default_rng(np.random.SeedSequence([seed, year]))
        chosen = rng.choice(n, size=m, replace=False)
        keep.append(sl_indices[np.sort(chosen)])
    if not keep:
        return store
    indices = np.sort(np.concatenate(keep))
    return store.take(indices)
