"""``scd`` command line: config-driven semantic-change analysis runs.

Every subcommand reads one JSON config file; ``--seed`` and ``--out``
override the config's seed and output directory. Outputs are written under
the output directory only, and are byte-reproducible for fixed inputs.
Errors are reported on stderr tagged with the failing stage, and the
process exits nonzero.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .pipeline import (
    PipelineConfig,
    PipelineError,
    run_deps,
    run_ingest,
    run_pipeline,
    run_synth,
)

_PIPELINE_STAGES = {
    "cluster": {"cluster"},
    "metrics": {"cluster", "metrics", "smooth"},
    "permtest": {"permtest"},
    "report": {"cluster", "metrics", "permtest", "smooth", "report"},
}

_SUBCOMMAND_HELP = {
    "ingest": "validate a store, apply filters, and write the converted store",
    "synth": "generate a synthetic store with ground truth",
    "cluster": "fit the configured clustering methods and save the models",
    "metrics": "compute the configured metric series (fits clusters as needed)",
    "permtest": "run the permutation scan over consecutive year pairs",
    "deps": "tabulate dependency-record frequencies",
    "report": "run the full pipeline and bundle plot-ready outputs",
}


def _read_json(path: str) -> dict:
    try:
        return json.loads(Path(path).read_text(encoding="utf-8"))
    except FileNotFoundError as exc:
        raise PipelineError("config", f"config file not found: {path}") from exc
    except json.JSONDecodeError as exc:
        raise PipelineError("config", f"{path}: malformed JSON: {exc}") from exc


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="scd",
        description="Diachronic semantic change detection over embedding stores.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in _SUBCOMMAND_HELP.items():
        cmd = sub.add_parser(name, help=help_text)
        cmd.add_argument("--config", required=True, help="path to the JSON config file")
        cmd.add_argument("--seed", type=int, default=None, help="override the config seed")
        cmd.add_argument("--out", default=None, help="override the output directory")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "synth":
            paths = run_synth(_read_json(args.config), seed=args.seed, out=args.out)
            for path in paths:
                print(path)
        elif args.command == "ingest":
            stem, store = run_ingest(_read_json(args.config), out=args.out)
            years = store.years()
            span = f"{years[0]}-{years[-1]}" if years else "none"
            print(f"{store.count} rows, dim {store.dim}, years {span} -> {stem}.vec")
        elif args.command == "deps":
            print(run_deps(_read_json(args.config), out=args.out))
        else:
            config = PipelineConfig.from_file(args.config, seed=args.seed, out=args.out)
            manifest = run_pipeline(config, stages=_PIPELINE_STAGES[args.command])
            for name in manifest["artifacts"]:
                print(Path(config.out) / name)
    except PipelineError as exc:
        print(f"scd: error {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
