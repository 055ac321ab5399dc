"""Synthetic embedding corpora with known ground truth.

Generates per-year Gaussian-mixture embeddings: each sense component has a
center and a per-year weight schedule, and drift events displace the whole
distribution from a given year onward. Because the ground truth (sense
labels, event years, per-year component counts) is returned alongside the
store, the generated corpora serve as oracles for the metric, clustering,
and significance layers. Generation is deterministic per (spec, seed) and
independent of which other years or components exist: every (year,
component) block draws from its own counter-derived seed.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .store import YEAR_MAX, YEAR_MIN, EmbeddingRecord, EmbeddingStore

_WEIGHT_ATOL = 1e-9


@dataclass(frozen=True)
class SenseComponent:
    """One mixture component (sense) of the generated word.

    ``weights`` is either a constant share or a per-year schedule (one entry
    per generated year). The center is drawn from a seeded standard normal
    scaled by the corpus sigma unless an explicit ``center`` is given.
    """

    weights: float | tuple[float, ...]
    center_seed: int = 0
    center: tuple[float, ...] | None = None

    def weight_at(self, year_index: int) -> float:
        if isinstance(self.weights, (int, float)):
            return float(self.weights)
        return float(self.weights[year_index])


@dataclass(frozen=True)
class DriftEvent:
    """Persistent displacement of the whole distribution from ``year`` onward.

    ``magnitude`` is measured in units of the noise scale sigma, applied
    along a seeded random unit direction.
    """

    year: int
    magnitude: float


@dataclass(frozen=True)
class SynthSpec:
    """Generator specification: year window, mixture layout, drift events."""

    year_start: int
    year_end: int
    per_year: int
    dim: int
    components: tuple[SenseComponent, ...]
    drift_events: tuple[DriftEvent, ...] = ()
    sigma: float = 1.0
    journal: str = "synthetic"
    token: str = "synthetic"

    def __post_init__(self) -> None:
        object.__setattr__(self, "components", tuple(self.components))
        object.__setattr__(self, "drift_events", tuple(self.drift_events))
        if self.dim < 2:
            raise ValueError(f"dim must be >= 2, got {self.dim}")
        if self.per_year < 1:
            raise ValueError(f"per_year must be >= 1, got {self.per_year}")
        if not (YEAR_MIN <= self.year_start <= self.year_end <= YEAR_MAX):
            raise ValueError(
                f"years must satisfy {YEAR_MIN} <= start <= end <= {YEAR_MAX}, "
                f"got [{self.year_start}, {self.year_end}]"
            )
        if not self.components:
            raise ValueError("at least one sense component is required")
        if self.sigma <= 0.0:
            raise ValueError(f"sigma must be positive, got {self.sigma}")
        for comp in self.components:
            if not isinstance(comp.weights, (int, float)):
                if len(comp.weights) != self.n_years:
                    raise ValueError(
                        f"weight schedule length {len(comp.weights)} != {self.n_years} years"
                    )
            if comp.center is not None and len(comp.center) != self.dim:
                raise ValueError(
                    f"explicit center length {len(comp.center)} != dim {self.dim}"
                )
        for yi in range(self.n_years):
            weights = [comp.weight_at(yi) for comp in self.components]
            if min(weights) < 0.0:
                raise ValueError(f"negative component weight in year index {yi}")
            if abs(sum(weights) - 1.0) > _WEIGHT_ATOL:
                raise ValueError(
                    f"component weights for year index {yi} sum to {sum(weights)}, expected 1"
                )
        for event in self.drift_events:
            if not (self.year_start <= event.year <= self.year_end):
                raise ValueError(
                    f"drift event year {event.year} outside [{self.year_start}, {self.year_end}]"
                )

    @property
    def n_years(self) -> int:
        return self.year_end - self.year_start + 1

    @property
    def years(self) -> range:
        return range(self.year_start, self.year_end + 1)


@dataclass(frozen=True)
class SynthTruth:
    """Ground truth emitted with a generated store.

    ``labels[i]`` is the sense-component index of store row ``i``;
    ``counts[yi][ci]`` is the exact number of rows drawn for component
    ``ci`` in the ``yi``-th year.
    """

    labels: np.ndarray
    events: tuple[DriftEvent, ...]
    counts: tuple[tuple[int, ...], ...]

    def __post_init__(self) -> None:
        labels = np.ascontiguousarray(self.labels, dtype=np.int32)
        labels.flags.writeable = False
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "events", tuple(self.events))
        object.__setattr__(self, "counts", tuple(tuple(c) for c in self.counts))

    @property
    def event_years(self) -> tuple[int, ...]:
        return tuple(event.year for event in self.events)


def orthogonal_centers(n: int, dim: int, separation: float) -> tuple[tuple[float, ...], ...]:
    """``n`` explicit centers along distinct axes, each pair exactly
    ``separation`` apart (scaled standard basis vectors)."""
    if n > dim:
        raise ValueError(f"need dim >= n for orthogonal centers, got n={n}, dim={dim}")
    radius = separation / math.sqrt(2.0)
    centers = []
    for i in range(n):
        vec = [0.0] * dim
        vec[i] = radius
        centers.append(tuple(vec))
    return tuple(centers)


def _allocate(total: int, weights: Sequence[float]) -> list[int]:
    """Largest-remainder allocation: exact integer counts summing to total."""
    raw = [w * total for w in weights]
    base = [math.floor(x) for x in raw]
    short = total - sum(base)
    order = sorted(range(len(weights)), key=lambda i: (-(raw[i] - base[i]), i))
    for i in order[:short]:
        base[i] += 1
    return base


def generate_synthetic(spec: SynthSpec, seed: int = 0) -> tuple[EmbeddingStore, SynthTruth]:
    """Generate a store plus ground truth; bitwise deterministic per seed."""
    centers = np.empty((len(spec.components), spec.dim), dtype=np.float64)
    for ci, comp in enumerate(spec.components):
        if comp.center is not None:
            centers[ci] = np.asarray(comp.center, dtype=np.float64)
        else:
            rng = np.random.default_rng(np.random.SeedSequence([int(comp.center_seed), 11]))
            centers[ci] = spec.sigma * rng.standard_normal(spec.dim)

    shifts = np.zeros((len(spec.drift_events), spec.dim), dtype=np.float64)
    for ei, event in enumerate(spec.drift_events):
        rng = np.random.default_rng(np.random.SeedSequence([int(seed), 1, ei]))
        direction = rng.standard_normal(spec.dim)
        direction /= np.linalg.norm(direction)
        shifts[ei] = event.magnitude * spec.sigma * direction

    rows = np.empty((spec.n_years * spec.per_year, spec.dim), dtype=np.float64)
    labels = np.empty(spec.n_years * spec.per_year, dtype=np.int32)
    records = []
    counts_per_year = []
    cursor = 0
    for yi, year in enumerate(spec.years):
        weights = [comp.weight_at(yi) for comp in spec.components]
        counts = _allocate(spec.per_year, weights)
        counts_per_year.append(counts)
        offset = np.zeros(spec.dim, dtype=np.float64)
        for ei, event in enumerate(spec.drift_events):
            if year >= event.year:
                offset += shifts[ei]
        within_year = 0
        for ci, m in enumerate(counts):
            if m == 0:
                continue
            rng = np.random.default_rng(np.random.SeedSequence([int(seed), 0, yi, ci]))
            block = centers[ci] + offset + spec.sigma * rng.standard_normal((m, spec.dim))
            rows[cursor : cursor + m] = block
            labels[cursor : cursor + m] = ci
            for j in range(m):
                row = cursor + j
                records.append(
                    EmbeddingRecord(
                        occurrence_id=row,
                        doc_id=f"synth-{year}-{within_year + j}",
                        year=year,
                        journal=spec.journal,
                        token=spec.token,
                        row=row,
                    )
                )
            cursor += m
            within_year += m
    store = EmbeddingStore(rows.astype(np.float32), records)
    truth = SynthTruth(labels=labels, events=spec.drift_events, counts=counts_per_year)
    return store, truth


def write_truth(truth: SynthTruth, path_stem) -> list[Path]:
    """Write ``<stem>.truth.json`` and ``<stem>.truth.labels.bin``."""
    stem = Path(path_stem)
    stem.parent.mkdir(parents=True, exist_ok=True)
    labels_path = stem.with_name(stem.name + ".truth.labels.bin")
    json_path = stem.with_name(stem.name + ".truth.json")
    labels_path.write_bytes(truth.labels.astype("<i4").tobytes())
    payload = {
        "events": [{"year": e.year, "magnitude": e.magnitude} for e in truth.events],
        "counts": [list(c) for c in truth.counts],
        "labels_file": labels_path.name,
    }
    json_path.write_text(json.dumps(payload, sort_keys=True, indent=2) + "\n", encoding="utf-8")
    return [json_path, labels_path]
