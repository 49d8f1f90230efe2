"""Command-line interface: process, compare, batch, roc, synth, inspect."""
from __future__ import annotations

import argparse
import concurrent.futures
import hashlib
import json
import os
import sys

import numpy as np

from . import signals as signals_mod
from . import synth as synth_mod
from . import x3p as x3p_mod
from .errors import (MalformedLabel, NotZip, MissingManifest, ParseError,
                     WirecutError)
from .pipeline import StageFailure, run_pipeline
from .surface import PipelineParams, parse_label

EXIT_OK = 0
EXIT_PARSE = 2
EXIT_PIPELINE = 3

_OVERRIDES = {
    "margin_px": "--margin-px",
    "delta": "--delta",
    "n_theta": "--theta-bins",
    "loess_span": "--loess-span",
    "min_overlap_frac": "--min-overlap",
    "downsample": "--downsample",
}


def _add_param_flags(sub):
    sub.add_argument("--params", help="JSON file with pipeline parameters")
    sub.add_argument("--margin-px", type=int)
    sub.add_argument("--delta", type=int)
    sub.add_argument("--theta-bins", type=int)
    sub.add_argument("--loess-span", type=float)
    sub.add_argument("--min-overlap", type=float)
    sub.add_argument("--downsample", type=int)


def _resolve_params(args):
    values = {}
    if getattr(args, "params", None):
        with open(args.params) as fh:
            values.update(json.load(fh))
    for field, flag in _OVERRIDES.items():
        v = getattr(args, flag.lstrip("-").replace("-", "_"), None)
        if v is not None:
            values[field] = v
    return PipelineParams.from_dict(values)


def _sha256(path):
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()


def _read_surface(path):
    if path.endswith(".txt"):
        return x3p_mod.read_matrix_text(path), None
    surface, meta = x3p_mod.read_x3p(path)
    return surface, meta


def _label_or_name(path):
    stem = os.path.splitext(os.path.basename(path))[0]
    try:
        return parse_label(stem)
    except MalformedLabel:
        return stem


def cmd_process(args):
    try:
        surface, _ = _read_surface(args.input)
    except (NotZip, MissingManifest, ParseError, WirecutError, OSError) as e:
        print(f"error: cannot read {args.input}: {e}", file=sys.stderr)
        return EXIT_PARSE
    params = _resolve_params(args)
    source = _label_or_name(args.input)
    try:
        sig, report = run_pipeline(surface, params, dump_dir=args.dump_stages,
                                   source=source)
    except StageFailure as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_PIPELINE
    signals_mod.write_signal_csv(sig, args.out)
    report["input"] = {"path": args.input, "sha256": _sha256(args.input)}
    report_path = args.report or args.out + ".report.json"
    with open(report_path, "w") as fh:
        json.dump(report, fh, indent=2)
    return EXIT_OK


def cmd_compare(args):
    try:
        a = signals_mod.read_signal_csv(args.a, source=_label_or_name(args.a))
        b = signals_mod.read_signal_csv(args.b, source=_label_or_name(args.b))
    except (ValueError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_PARSE
    try:
        res = signals_mod.ccf_max(a, b, min_overlap_frac=args.min_overlap or 0.1)
    except WirecutError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_PIPELINE
    print(json.dumps({"ccf_max": res.ccf_max, "lag_um": res.lag_um,
                      "overlap": res.overlap}))
    return EXIT_OK


def _batch_worker(job):
    path, params_dict = job
    surface, _ = _read_surface(path)
    sig, _ = run_pipeline(surface, PipelineParams.from_dict(params_dict),
                          source=_label_or_name(path))
    return path, sig.x, sig.values, sig.source


def cmd_batch(args):
    entries = sorted(os.listdir(args.dir)) if os.path.isdir(args.dir) else []
    x3ps = [os.path.join(args.dir, n) for n in entries
            if n.lower().endswith((".x3p", ".txt"))]
    csvs = [os.path.join(args.dir, n) for n in entries
            if n.lower().endswith(".csv")]
    if not x3ps and not csvs:
        print(f"error: no .x3p/.txt scans or .csv signals in {args.dir}",
              file=sys.stderr)
        return EXIT_PARSE
    params = _resolve_params(args)

    signals = []
    for path in csvs:
        signals.append(signals_mod.read_signal_csv(path, source=_label_or_name(path)))
    if x3ps:
        jobs = [(p, params.to_dict()) for p in x3ps]
        if args.jobs and args.jobs > 1:
            with concurrent.futures.ProcessPoolExecutor(max_workers=args.jobs) as ex:
                outputs = list(ex.map(_batch_worker, jobs))
        else:
            outputs = [_batch_worker(j) for j in jobs]
        for _, x, vals, source in outputs:
            signals.append(signals_mod.Signal(x=x, values=vals, source=source))

    signals.sort(key=lambda s: s.name)
    results, failures = signals_mod.batch_compare(
        signals, min_overlap_frac=params.min_overlap_frac)
    signals_mod.write_results_csv(results, args.out)
    signals_mod.results_to_json(results, args.out + ".json")
    for pair, msg in failures:
        print(f"warning: pair {pair[0]} / {pair[1]} failed: {msg}",
              file=sys.stderr)
    return EXIT_OK


def cmd_roc(args):
    try:
        results = signals_mod.read_results_csv(args.results)
    except (ValueError, KeyError, OSError) as e:
        print(f"error: cannot read {args.results}: {e}", file=sys.stderr)
        return EXIT_PARSE
    try:
        summary = signals_mod.roc(
            results,
            include_same_tool_different_site=not args.exclude_same_tool)
    except WirecutError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_PIPELINE
    signals_mod.write_roc_csv(summary, args.out)
    print(json.dumps({"auc": summary.auc}))
    return EXIT_OK


def cmd_synth(args):
    try:
        with open(args.spec) as fh:
            data = json.load(fh)
    except (OSError, json.JSONDecodeError) as e:
        print(f"error: cannot read spec {args.spec}: {e}", file=sys.stderr)
        return EXIT_PARSE
    scans = data.get("scans", [data]) if isinstance(data, dict) else data
    os.makedirs(args.out_dir, exist_ok=True)
    for entry in scans:
        name = entry.pop("name", None)
        spec = synth_mod.SynthSpec.from_dict(entry)
        if name is None:
            name = f"scan{spec.seed:05d}"
        surface, truth = synth_mod.generate(spec)
        x3p_mod.write_x3p(surface, path=os.path.join(args.out_dir, name + ".x3p"))
        truth.to_json(os.path.join(args.out_dir, name + ".truth.json"))
    return EXIT_OK


def cmd_inspect(args):
    try:
        surface, meta = _read_surface(args.input)
    except (WirecutError, OSError) as e:
        print(f"error: cannot read {args.input}: {e}", file=sys.stderr)
        return EXIT_PARSE
    frac = surface.n_missing / surface.heights.size
    print(f"{surface.h} x {surface.w} @ {surface.res_x:g} µm")
    print(f"missing: {surface.n_missing} cells ({100 * frac:.2f}%)")
    if meta is not None:
        for key in ("creator", "instrument", "comment", "data_kind"):
            v = getattr(meta, key)
            if v:
                print(f"{key}: {v}")
    return EXIT_OK


def build_parser():
    ap = argparse.ArgumentParser(
        prog="wirecut",
        description="Extract and compare striation signals from wire-cut scans")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("process", help="run the full pipeline on one scan")
    p.add_argument("input")
    p.add_argument("--out", required=True, help="output signal CSV")
    p.add_argument("--report", help="run report JSON (default: OUT.report.json)")
    p.add_argument("--dump-stages", help="directory for intermediate artifacts")
    _add_param_flags(p)
    p.set_defaults(func=cmd_process)

    p = sub.add_parser("compare", help="CCF of two signal CSVs")
    p.add_argument("a")
    p.add_argument("b")
    p.add_argument("--min-overlap", type=float)
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("batch", help="pairwise comparison of a folder of scans")
    p.add_argument("dir")
    p.add_argument("--out", required=True, help="results CSV")
    p.add_argument("--jobs", type=int, default=1)
    _add_param_flags(p)
    p.set_defaults(func=cmd_batch)

    p = sub.add_parser("roc", help="ROC curve from a results CSV")
    p.add_argument("results")
    p.add_argument("--out", required=True, help="roc CSV")
    p.add_argument("--exclude-same-tool", action="store_true",
                   help="drop the same-tool-different-site pairs from the negatives")
    p.set_defaults(func=cmd_roc)

    p = sub.add_parser("synth", help="generate synthetic scans from a spec JSON")
    p.add_argument("spec")
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("inspect", help="print scan dimensions and metadata")
    p.add_argument("input")
    p.set_defaults(func=cmd_inspect)
    return ap


def main(argv=None):
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
