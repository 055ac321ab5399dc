"""End-to-end orchestration: config → slicing → clustering → metrics → stats.

A pipeline run is driven by a single JSON config file and writes every
artifact (cluster models, metric series, permutation tables, smoothed
series, report, manifest) under one output directory. All outputs are
deterministic functions of (inputs, config, seed): files contain no
timestamps, dict keys are sorted, and floats are rendered with shortest
round-trip precision, so re-runs are byte-identical.

Stage errors abort the run with a stage-tagged ``PipelineError``; if any
artifacts were already written, a manifest flagging the partial run is left
behind.
"""

from __future__ import annotations

import hashlib
import json
import platform
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from . import __version__
from .cluster import (
    AP_METHOD,
    KMEANS_METHOD,
    ClusterModel,
    SenseAffinityPropagation,
    SenseKMeans,
    stratified_sample,
)
from .depfreq import read_dependency_records, tabulate_top_dependencies, write_dep_table_csv
from .metrics import AID_MODES, METRICS, MetricSeries, compute_series, write_series
from .stats import (
    SIGNIFICANCE_THRESHOLD,
    permutation_scan,
    rolling_mean,
    write_permutation_csv,
)
from .store import EmbeddingStore, filter_store, read_store, write_store
from .synthetic import DriftEvent, SenseComponent, SynthSpec, generate_synthetic, write_truth

_DEFAULT_KMEANS = {"n_clusters": 10, "max_iter": 300, "tol": 1e-6, "n_init": 1}
_DEFAULT_AP = {
    "damping": 0.5,
    "preference": None,
    "max_iter": 1000,
    "convergence_iter": 50,
    "max_rows": 50000,
}
_DEFAULT_SAMPLING = {"enabled": False, "fraction": 0.25, "min_per_year": 400}


class PipelineError(RuntimeError):
    """A pipeline stage failed; ``stage`` names the failing stage."""

    def __init__(self, stage: str, message: str):
        super().__init__(f"[{stage}] {message}")
        self.stage = stage


@dataclass(frozen=True)
class PipelineConfig:
    """Validated pipeline configuration (see ``from_file`` for the JSON schema)."""

    store: str
    out: str
    target: str | None = None
    year_range: tuple[int, int] | None = None
    journals: tuple[str, ...] | None = None
    cluster_methods: tuple[str, ...] = (KMEANS_METHOD,)
    kmeans_params: dict = field(default_factory=lambda: dict(_DEFAULT_KMEANS))
    ap_params: dict = field(default_factory=lambda: dict(_DEFAULT_AP))
    sampling: dict = field(default_factory=lambda: dict(_DEFAULT_SAMPLING))
    metrics: tuple[dict, ...] = ()
    permutation_enabled: bool = True
    permutation_r: int = 1000
    smoothing_window: int | None = 3
    significance_threshold: float = SIGNIFICANCE_THRESHOLD
    seed: int = 0
    workers: int = 1

    def __post_init__(self) -> None:
        if not self.metrics:
            raise ValueError("at least one metric must be requested")
        for method in self.cluster_methods:
            if method not in (KMEANS_METHOD, AP_METHOD):
                raise ValueError(f"unknown clustering method {method!r}")
        for entry in self.metrics:
            metric = entry.get("metric")
            if metric not in METRICS:
                raise ValueError(f"unknown metric {metric!r}")
            if metric in ("jsd", "entropy"):
                method = entry.get("cluster")
                if method not in self.cluster_methods:
                    raise ValueError(
                        f"metric {metric!r} requires one of the configured clustering "
                        f"methods {self.cluster_methods}, got {method!r}"
                    )
            if metric == "aid" and entry.get("variant") not in AID_MODES:
                raise ValueError(f"aid variant must be one of {AID_MODES}")
        if self.year_range is not None and self.year_range[0] > self.year_range[1]:
            raise ValueError(f"year_range lo > hi: {self.year_range}")
        if self.permutation_r < 1:
            raise ValueError("permutation r must be >= 1")

    @classmethod
    def from_dict(cls, obj: dict, seed=None, out=None) -> "PipelineConfig":
        clustering = dict(obj.get("clustering", {}))
        methods = tuple(clustering.get("methods", [KMEANS_METHOD]))
        kmeans_params = {**_DEFAULT_KMEANS, **clustering.get("kmeans", {})}
        ap_params = {**_DEFAULT_AP, **clustering.get(AP_METHOD, {})}
        sampling = {**_DEFAULT_SAMPLING, **clustering.get("sampling", {})}
        raw_metrics = obj.get("metrics", [])
        metrics = []
        for entry in raw_metrics:
            metric = entry.get("metric")
            normalized = {"metric": metric}
            if metric in ("jsd", "entropy"):
                normalized["cluster"] = entry.get(
                    "cluster", methods[0] if methods else None
                )
            if metric == "aid":
                normalized["variant"] = entry.get("variant", "paper")
            metrics.append(normalized)
        permutation = obj.get("permutation", {})
        year_range = obj.get("year_range")
        journals = obj.get("journals")
        return cls(
            store=str(obj.get("store", "")),
            out=str(out if out is not None else obj.get("out", "results")),
            target=obj.get("target"),
            year_range=None if year_range is None else (int(year_range[0]), int(year_range[1])),
            journals=None if journals is None else tuple(str(j) for j in journals),
            cluster_methods=methods,
            kmeans_params=kmeans_params,
            ap_params=ap_params,
            sampling=sampling,
            metrics=tuple(metrics),
            permutation_enabled=bool(permutation.get("enabled", True)),
            permutation_r=int(permutation.get("r", 1000)),
            smoothing_window=obj.get("smoothing_window", 3),
            significance_threshold=float(
                obj.get("significance_threshold", SIGNIFICANCE_THRESHOLD)
            ),
            seed=int(seed if seed is not None else obj.get("seed", 0)),
            workers=int(obj.get("workers", 1)),
        )

    @classmethod
    def from_file(cls, path, seed=None, out=None) -> "PipelineConfig":
        try:
            obj = json.loads(Path(path).read_text(encoding="utf-8"))
        except FileNotFoundError as exc:
            raise PipelineError("config", f"config file not found: {path}") from exc
        except json.JSONDecodeError as exc:
            raise PipelineError("config", f"{path}: malformed JSON: {exc}") from exc
        try:
            return cls.from_dict(obj, seed=seed, out=out)
        except (ValueError, TypeError, KeyError, IndexError) as exc:
            raise PipelineError("config", f"{path}: {exc}") from exc

    def canonical(self) -> dict:
        """Full effective configuration as a JSON-serializable dict."""
        return {
            "store": self.store,
            "out": self.out,
            "target": self.target,
            "year_range": None if self.year_range is None else list(self.year_range),
            "journals": None if self.journals is None else list(self.journals),
            "clustering": {
                "methods": list(self.cluster_methods),
                "kmeans": self.kmeans_params,
                AP_METHOD: self.ap_params,
                "sampling": self.sampling,
            },
            "metrics": [dict(entry) for entry in self.metrics],
            "permutation": {"enabled": self.permutation_enabled, "r": self.permutation_r},
            "smoothing_window": self.smoothing_window,
            "significance_threshold": self.significance_threshold,
            "seed": self.seed,
            "workers": self.workers,
        }

    def digest(self) -> str:
        blob = json.dumps(self.canonical(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode("utf-8")).hexdigest()


def _series_name(entry: dict) -> str:
    metric = entry["metric"]
    if metric in ("jsd", "entropy"):
        return f"{metric}_{entry['cluster']}"
    if metric == "aid":
        return f"{metric}_{entry['variant']}"
    return metric


FULL_STAGES = frozenset({"cluster", "metrics", "permtest", "smooth", "report"})


def run_pipeline(config: PipelineConfig, stages: frozenset | set | None = None) -> dict:
    """Execute the selected stages (default: all) and return the manifest dict.

    The store is always loaded and filtered first; ``stages`` restricts the
    optional stages {cluster, metrics, permtest, smooth, report}.
    """
    selected = FULL_STAGES if stages is None else frozenset(stages)
    unknown = selected - FULL_STAGES
    if unknown:
        raise PipelineError("config", f"unknown stages {sorted(unknown)}")
    outdir = Path(config.out)
    artifacts: list[str] = []
    stages_log: list[dict] = []

    def run_stage(name: str, fn: Callable):
        try:
            result = fn()
        except PipelineError:
            raise
        except Exception as exc:
            stages_log.append({"name": name, "status": "failed", "error": str(exc)})
            if artifacts:
                _write_manifest(config, outdir, artifacts, stages_log, partial=True)
            raise PipelineError(name, str(exc)) from exc
        stages_log.append({"name": name, "status": "ok"})
        return result

    def load() -> EmbeddingStore:
        store = read_store(config.store)
        if config.target is not None:
            keep = [r.row for r in store.records if r.token == config.target]
            store = store.take(np.asarray(keep, dtype=np.int64))
        if config.journals is not None or config.year_range is not None:
            store = filter_store(
                store, journal_set=config.journals, year_range=config.year_range
            )
        if store.count == 0:
            raise ValueError("no rows left after filtering")
        return store

    base = run_stage("load", load)

    def sample() -> EmbeddingStore:
        if not config.sampling.get("enabled", False):
            return base
        return stratified_sample(
            base,
            fraction=float(config.sampling.get("fraction", 0.25)),
            min_per_year=int(config.sampling.get("min_per_year", 400)),
            seed=config.seed,
        )

    cluster_store = run_stage("sample", sample)

    def fit_models() -> dict[str, ClusterModel]:
        models: dict[str, ClusterModel] = {}
        for method in config.cluster_methods:
            if method == KMEANS_METHOD:
                est = SenseKMeans(seed=config.seed, **config.kmeans_params)
            else:
                est = SenseAffinityPropagation(seed=config.seed, **config.ap_params)
            model = est.fit(cluster_store).to_model()
            for path in model.save(outdir / f"cluster_{method}"):
                artifacts.append(path.name)
            models[method] = model
        return models

    need_models = bool(config.cluster_methods) and bool(
        selected & {"cluster", "metrics"}
    )
    models = run_stage("cluster", fit_models) if need_models else {}

    def metrics_stage() -> dict[str, MetricSeries]:
        series: dict[str, MetricSeries] = {}
        for entry in config.metrics:
            metric = entry["metric"]
            name = _series_name(entry)
            if metric in ("jsd", "entropy"):
                result = compute_series(
                    cluster_store,
                    metric,
                    model=models[entry["cluster"]],
                    year_range=config.year_range,
                    workers=config.workers,
                )
            elif metric == "aid":
                result = compute_series(
                    base,
                    metric,
                    variant=entry["variant"],
                    year_range=config.year_range,
                    workers=config.workers,
                )
            else:
                result = compute_series(
                    base, metric, year_range=config.year_range, workers=config.workers
                )
            for path in write_series(result, outdir / f"series_{name}"):
                artifacts.append(path.name)
            series[name] = result
        return series

    all_series = run_stage("metrics", metrics_stage) if "metrics" in selected else {}

    scan = ()
    if "permtest" in selected and config.permutation_enabled:

        def permtest():
            results = permutation_scan(
                base,
                r=config.permutation_r,
                seed=config.seed,
                workers=config.workers,
                year_range=config.year_range,
            )
            path = write_permutation_csv(results, outdir / "permutations.csv")
            artifacts.append(path.name)
            return results

        scan = run_stage("permtest", permtest)

    if "smooth" in selected and config.smoothing_window is not None and all_series:

        def smooth():
            for name in sorted(all_series):
                smoothed = rolling_mean(all_series[name], window=int(config.smoothing_window))
                for path in write_series(smoothed, outdir / f"smoothed_{name}"):
                    artifacts.append(path.name)

        run_stage("smooth", smooth)

    def report():
        significant = [
            {"year_pair": list(res.year_pair), "p_adj": res.p_adj, "observed": res.observed}
            for res in scan
            if res.p_adj is not None and res.p_adj <= config.significance_threshold
        ]
        payload = {
            "threshold": config.significance_threshold,
            "n_tests": len(scan),
            "significant_pairs": significant,
            "series": sorted(all_series),
        }
        path = outdir / "report.json"
        path.write_text(
            json.dumps(payload, sort_keys=True, indent=2) + "\n", encoding="utf-8"
        )
        artifacts.append(path.name)

    if "report" in selected:
        run_stage("report", report)
    outdir.mkdir(parents=True, exist_ok=True)
    return _write_manifest(config, outdir, artifacts, stages_log, partial=False)


def _write_manifest(
    config: PipelineConfig,
    outdir: Path,
    artifacts: Sequence[str],
    stages: Sequence[dict],
    partial: bool,
) -> dict:
    manifest = {
        "config": config.canonical(),
        "config_digest": config.digest(),
        "versions": {
            "python": platform.python_version(),
            "numpy": np.__version__,
            "scdkit": __version__,
        },
        "artifacts": sorted(set(artifacts)),
        "stages": list(stages),
        "partial": partial,
    }
    path = outdir / "manifest.json"
    path.write_text(json.dumps(manifest, sort_keys=True, indent=2) + "\n", encoding="utf-8")
    return manifest


def parse_synth_spec(obj: dict) -> SynthSpec:
    """Build a generator spec from its JSON form (see the synth subcommand)."""
    components = []
    for comp in obj.get("components", []):
        weights = comp.get("weights", 1.0)
        if isinstance(weights, list):
            weights = tuple(float(w) for w in weights)
        else:
            weights = float(weights)
        center = comp.get("center")
        components.append(
            SenseComponent(
                weights=weights,
                center_seed=int(comp.get("center_seed", 0)),
                center=None if center is None else tuple(float(c) for c in center),
            )
        )
    events = tuple(
        DriftEvent(year=int(e["year"]), magnitude=float(e["magnitude"]))
        for e in obj.get("drift_events", [])
    )
    return SynthSpec(
        year_start=int(obj["year_start"]),
        year_end=int(obj["year_end"]),
        per_year=int(obj["per_year"]),
        dim=int(obj["dim"]),
        components=tuple(components),
        drift_events=events,
        sigma=float(obj.get("sigma", 1.0)),
        journal=str(obj.get("journal", "synthetic")),
        token=str(obj.get("token", "synthetic")),
    )


def run_synth(obj: dict, seed=None, out=None) -> list[Path]:
    """Generate a synthetic store + ground truth from a config dict."""
    try:
        spec = parse_synth_spec(obj.get("synth", obj))
    except (ValueError, TypeError, KeyError) as exc:
        raise PipelineError("config", f"invalid synth spec: {exc}") from exc
    effective_seed = int(seed if seed is not None else obj.get("seed", 0))
    outdir = Path(out if out is not None else obj.get("out", "results"))
    name = str(obj.get("name", "synth"))
    try:
        store, truth = generate_synthetic(spec, seed=effective_seed)
        outdir.mkdir(parents=True, exist_ok=True)
        stem = outdir / name
        write_store(store, stem)
        paths = [Path(f"{stem}.vec"), Path(f"{stem}.meta.jsonl")]
        paths.extend(write_truth(truth, stem))
    except PipelineError:
        raise
    except Exception as exc:
        raise PipelineError("synth", str(exc)) from exc
    return paths


def run_ingest(obj: dict, out=None) -> tuple[Path, EmbeddingStore]:
    """Validate a store, apply configured filters, and write the result."""
    try:
        config = PipelineConfig.from_dict(
            {**obj, "metrics": [{"metric": "prt"}]}, out=out
        )
    except (ValueError, TypeError, KeyError) as exc:
        raise PipelineError("config", str(exc)) from exc
    try:
        store = read_store(config.store)
        if config.target is not None:
            keep = [r.row for r in store.records if r.token == config.target]
            store = store.take(np.asarray(keep, dtype=np.int64))
        if config.journals is not None or config.year_range is not None:
            store = filter_store(
                store, journal_set=config.journals, year_range=config.year_range
            )
        outdir = Path(config.out)
        outdir.mkdir(parents=True, exist_ok=True)
        stem = outdir / str(obj.get("name", "store"))
        write_store(store, stem)
    except PipelineError:
        raise
    except Exception as exc:
        raise PipelineError("ingest", str(exc)) from exc
    return stem, store


def run_deps(obj: dict, out=None) -> Path:
    """Tabulate dependency records per the ``deps`` section of the config."""
    deps = obj.get("deps", {})
    records_path = deps.get("records")
    if not records_path:
        raise PipelineError("config", "deps.records path is required")
    group_by = str(deps.get("group_by", "decade"))
    k = deps.get("k")
    try:
        records = read_dependency_records(records_path)
        table = tabulate_top_dependencies(
            records, group_by=group_by, k=None if k is None else int(k)
        )
        outdir = Path(out if out is not None else obj.get("out", "results"))
        return write_dep_table_csv(table, outdir / f"deps_{group_by}.csv")
    except PipelineError:
        raise
    except Exception as exc:
        raise PipelineError("deps", str(exc)) from exc
