"""Command line interface: ``xindex {ingest,fetch,analyze,report,run}``.

Settings are layered: built-in defaults, then a JSON ``--config`` file, then
flags given explicitly on the command line.

Exit status: 0 success, 1 usage error, 2 data error, 3 fetch error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import __version__
from .fetcher import FetchAuthError, FetchConfig, fetch_corpus
from .pipeline import (
    SUMMARY_NAME,
    DataError,
    IngestResult,
    RunConfig,
    analyze,
    chart_for_table,
    dump_summary,
    ingest,
    load_catalog_file,
    run,
    write_outputs,
)
from .ris import load_corpus_manifest
from .validation import ANALYSES

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_FETCH = 0, 1, 2, 3

log = logging.getLogger("xindex")

RUN_DEFAULTS = {
    "catalog_path": None,
    "cutoff_date": "2023-01",
    "venues": [],
    "analyses": list(ANALYSES),
    "trajectory_mode": "per_year",
    "seed": 0,
    "resamples": 1000,
}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _csv_list(text: str) -> list[str]:
    return [t.strip() for t in text.split(",") if t.strip()]


def _add_run_options(p: argparse.ArgumentParser, *, inputs: bool) -> None:
    # Defaults are None so that only explicitly given flags override --config.
    p.add_argument("--config", type=Path, help="JSON file with run settings")
    if inputs:
        p.add_argument("--manifest", dest="manifest_path", type=Path)
        p.add_argument("--ris-dir", dest="ris_dir", type=Path)
    p.add_argument("--catalog", dest="catalog_path", type=Path,
                   help="venue catalog CSV (default: shipped core-hci)")
    p.add_argument("--cutoff", dest="cutoff_date", help="collection date YYYY-MM (default 2023-01)")
    p.add_argument("--venues", type=_csv_list, help="comma separated venue acronyms (default: all)")
    p.add_argument("--analyses", type=_csv_list,
                   help=f"comma separated subset of {','.join(ANALYSES)} (default: all)")
    p.add_argument("--trajectory-mode", dest="trajectory_mode", choices=["per_year", "cumulative"])
    p.add_argument("--seed", type=int)
    p.add_argument("--resamples", type=int, help="bootstrap resamples for the summary")
    p.add_argument("--out-dir", dest="output_dir", type=Path)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="xindex", description="Out-of-field citation share (X-index) analyses.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("ingest", help="parse RIS files for a manifest into a corpus JSON file")
    p.add_argument("--manifest", required=True, type=Path)
    p.add_argument("--ris-dir", required=True, type=Path)
    p.add_argument("--out", required=True, type=Path)

    p = sub.add_parser("fetch", help="download citing records for every manifest DOI into a cache")
    p.add_argument("--manifest", required=True, type=Path)
    p.add_argument("--config", required=True, type=Path, help="JSON fetch config")
    p.add_argument("--cache-dir", type=Path, help="overrides cache_dir from the config")
    p.add_argument("--workers", type=int)

    p = sub.add_parser("analyze", help="run analyses on a corpus JSON file, writing CSV tables")
    p.add_argument("--corpus", required=True, type=Path)
    _add_run_options(p, inputs=False)

    p = sub.add_parser("report", help="render SVG charts for the CSV tables in a directory")
    p.add_argument("--in-dir", required=True, type=Path)
    p.add_argument("--out-dir", type=Path, help="default: same as --in-dir")

    p = sub.add_parser("run", help="ingest, analyze and report in one go")
    _add_run_options(p, inputs=True)
    return parser


def _layered(args: argparse.Namespace, required: tuple[str, ...]) -> dict:
    settings = dict(RUN_DEFAULTS)
    if getattr(args, "config", None) is not None:
        try:
            settings.update(json.loads(args.config.read_text(encoding="utf-8")))
        except FileNotFoundError:
            raise UsageError(f"config file not found: {args.config}")
        except json.JSONDecodeError as exc:
            raise UsageError(f"bad config file {args.config}: {exc}")
    for key in ("manifest_path", "ris_dir", "catalog_path", "cutoff_date", "venues", "analyses",
                "trajectory_mode", "seed", "resamples", "output_dir"):
        value = getattr(args, key, None)
        if value is not None:
            settings[key] = value
    missing = [k for k in required if settings.get(k) is None]
    if missing:
        raise UsageError("missing setting(s): " + ", ".join(missing))
    unknown = set(settings) - set(RUN_DEFAULTS) - {"manifest_path", "ris_dir", "output_dir"}
    if unknown:
        raise UsageError("unknown setting(s) in config: " + ", ".join(sorted(unknown)))
    return settings


def _run_config(args, required) -> RunConfig:
    settings = _layered(args, required)
    settings.setdefault("manifest_path", "")
    settings.setdefault("ris_dir", "")
    try:
        return RunConfig(**settings)
    except (TypeError, ValueError) as exc:
        raise UsageError(str(exc))


def cmd_ingest(args) -> int:
    data = ingest(args.manifest, args.ris_dir)
    if not data.citations:
        raise DataError(f"no parsable citations under {args.ris_dir}")
    write_outputs({args.out.name: data.to_json()}, args.out.parent)
    print(f"{len(data.papers)} papers, {len(data.citations)} citing records -> {args.out}")
    return EXIT_OK


def cmd_fetch(args) -> int:
    if not args.manifest.is_file():
        raise DataError(f"manifest not found: {args.manifest}")
    overrides = {"cache_dir": args.cache_dir, "workers": args.workers}
    try:
        config = FetchConfig.from_file(args.config, **overrides)
    except FileNotFoundError:
        raise UsageError(f"fetch config not found: {args.config}")
    except (TypeError, ValueError) as exc:
        raise UsageError(f"bad fetch config: {exc}")
    manifest = load_corpus_manifest(args.manifest.read_bytes())
    try:
        report = fetch_corpus(manifest, config)
    except FetchAuthError as exc:
        print(f"xindex: fetch error: {exc}", file=sys.stderr)
        return EXIT_FETCH
    print(json.dumps(report.as_dict(), sort_keys=True))
    return EXIT_FETCH if report.failed else EXIT_OK


def cmd_analyze(args) -> int:
    config = _run_config(args, required=("output_dir",))
    if not args.corpus.is_file():
        raise DataError(f"corpus file not found: {args.corpus}")
    data = IngestResult.from_json(args.corpus.read_text(encoding="utf-8"))
    catalog = load_catalog_file(config.catalog_path)
    result = analyze(data, catalog, config)
    files = dict(result.tables)
    files[SUMMARY_NAME] = dump_summary(result.summary)
    write_outputs(files, config.output_dir)
    print(f"wrote {len(files)} files to {config.output_dir}")
    return EXIT_OK


def cmd_report(args) -> int:
    in_dir = args.in_dir
    summary_path = in_dir / SUMMARY_NAME
    if not summary_path.is_file():
        raise DataError(f"no {SUMMARY_NAME} in {in_dir}; run 'xindex analyze' first")
    summary = json.loads(summary_path.read_text(encoding="utf-8"))
    charts = {}
    for name, meta in sorted(summary.get("files", {}).items()):
        path = in_dir / name
        if not path.is_file():
            raise DataError(f"table listed in summary is missing: {path}")
        charts[name[: -len(".csv")] + ".svg"] = chart_for_table(
            path.read_text(encoding="utf-8"), meta["analysis"], meta["venue"]
        )
    write_outputs(charts, args.out_dir or in_dir)
    print(f"wrote {len(charts)} charts")
    return EXIT_OK


def cmd_run(args) -> int:
    config = _run_config(args, required=("manifest_path", "ris_dir", "output_dir"))
    paths = run(config)
    print(f"wrote {len(paths)} files to {config.output_dir}")
    return EXIT_OK


COMMANDS = {
    "ingest": cmd_ingest,
    "fetch": cmd_fetch,
    "analyze": cmd_analyze,
    "report": cmd_report,
    "run": cmd_run,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.WARNING - 10 * min(args.verbose, 2),
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"xindex: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DataError, ValueError) as exc:
        print(f"xindex: data error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
