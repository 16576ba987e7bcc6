"""Command-line driver: ``reusesim {gen,run,compare,analyze,area}``.

Exit codes: 0 success, 2 usage/config/input error, 3 internal invariant
violation.  Diagnostics go to stderr; data goes to ``--out`` or stdout.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
from concurrent.futures import ProcessPoolExecutor

from . import analysis, trace as tr
from .errors import ConfigError, LogicError, ReuseSimError, TraceParseError
from .hierarchy import ALL_SCHEMES, HierarchyConfig, Scheme, shared_lines, simulate
from .metrics import dump_json, emit_report


def _write(out, text):
    if out in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)


def _load_json(path):
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except OSError as e:
        raise ConfigError("cannot read %s: %s" % (path, e.strerror)) from None
    except json.JSONDecodeError as e:
        raise ConfigError("invalid JSON in %s: %s" % (path, e)) from None


def load_config(path) -> HierarchyConfig:
    if path is None:
        return HierarchyConfig()
    return HierarchyConfig.from_dict(_load_json(path))


def load_trace(path) -> list:
    try:
        records = tr.read_trace(path)
    except OSError as e:
        raise ConfigError("cannot read trace %s: %s" % (path, e.strerror)) from None
    if not records:
        raise ConfigError("trace %s is empty" % path)
    return records


def trace_echo(path, records) -> dict:
    h = hashlib.sha256()
    for rec in records:
        h.update(rec.format().encode())
        h.update(b"\n")
    return {"path": str(path), "records": len(records), "sha256": h.hexdigest()}


def _warn_overlap(records, config):
    if config.llc_scheme is Scheme.GPU_BYPASS:
        overlap = shared_lines(records, config.line_bytes)
        if overlap:
            print("warning: GpuBypass: %d line(s) are shared by CPU and GPU sources; "
                  "no coherence is modelled for them" % len(overlap), file=sys.stderr)


def cmd_gen(args):
    doc = _load_json(args.spec)
    if args.seed is not None:
        doc = _override_seed(doc, args.seed)
    records = tr.load_workload(doc)
    header = "generated from %s\nspec %s" % (args.spec, json.dumps(doc, sort_keys=True))
    if args.out in (None, "-"):
        sys.stdout.write("".join("# %s\n" % h for h in header.splitlines()))
        sys.stdout.writelines(r.format() + "\n" for r in records)
        print("%d records" % len(records), file=sys.stderr)
    else:
        n = tr.write_trace(args.out, records, header)
        print("%d records" % n)
    return 0


def _override_seed(doc, seed):
    doc = dict(doc)
    if "streams" in doc:
        # per-stream seeds derive from the manifest seed so streams stay independent
        doc["streams"] = [dict(s, seed=(seed + k) % (1 << 64)) for k, s in enumerate(doc["streams"])]
    doc["seed"] = seed
    return doc


def _run_one(config, records, seed):
    return simulate(records, config, seed=seed)


def cmd_run(args):
    config = load_config(args.config)
    if args.scheme:
        config = config.with_scheme(args.scheme)
    records = load_trace(args.trace)
    _warn_overlap(records, config)
    report = simulate(records, config, seed=args.seed)
    _write(args.out, emit_report(report, args.format))
    return 0


def parse_schemes(text):
    if text in (None, "", "all"):
        return list(ALL_SCHEMES)
    out = []
    for tok in text.split(","):
        try:
            out.append(Scheme(tok.strip()))
        except ValueError:
            raise ConfigError("unknown scheme %r (choose from %s)" % (
                tok, ", ".join(s.value for s in ALL_SCHEMES))) from None
    if not out:
        raise ConfigError("no schemes given")
    return out


def compare(records, config, schemes, seed=None, jobs=1):
    configs = [config.with_scheme(s) for s in schemes]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            return list(ex.map(_run_one, configs, [records] * len(configs), [seed] * len(configs)))
    return [_run_one(c, records, seed) for c in configs]


def cmd_compare(args):
    config = load_config(args.config)
    schemes = parse_schemes(args.schemes)
    records = load_trace(args.trace)
    for s in schemes:
        _warn_overlap(records, config.with_scheme(s))
    reports = compare(records, config, schemes, args.seed, args.jobs)
    echo = trace_echo(args.trace, records)
    if args.format == "json":
        doc = {
            "schemes": [s.value for s in schemes],
            "seed": args.seed,
            "sections": [
                {"scheme": s.value, "trace": echo, "report": r.to_dict()}
                for s, r in zip(schemes, reports)
            ],
        }
        _write(args.out, dump_json(doc))
    else:
        parts = []
        for k, r in enumerate(reports):
            lines = emit_report(r, "csv").splitlines()
            head = ["scheme," + lines[0]] if k == 0 else []
            parts.extend(head + ["%s,%s" % (r.scheme, ln) for ln in lines[1:]])
        _write(args.out, "\n".join(parts) + "\n")
    return 0


def cmd_analyze(args):
    records = load_trace(args.trace)
    line = args.line_bytes
    hist = analysis.reuse_distances(records, line)
    llc_lines = args.llc_lines
    if llc_lines is None:
        llc_lines = HierarchyConfig().llc.geometry.lines
    doc = {
        "trace": trace_echo(args.trace, records),
        "llc_lines": llc_lines,
        "class": analysis.classify(hist, llc_lines).value,
        "histogram": hist.to_dict(),
    }
    _write(args.out, dump_json(doc))
    return 0


def cmd_area(args):
    config = load_config(args.config)
    conv = config.llc.geometry
    reuse = config.reuse_geometry()
    reports = analysis.area_comparison(conv, [reuse], args.address_bits)
    doc = {"address_bits": args.address_bits, "structures": [r.to_dict() for r in reports]}
    _write(args.out, dump_json(doc))
    return 0


def _u64(text):
    try:
        v = int(text, 0)
    except ValueError:
        raise argparse.ArgumentTypeError("not an integer: %r" % text) from None
    if not 0 <= v < 1 << 64:
        raise argparse.ArgumentTypeError("seed must fit in 64 unsigned bits")
    return v


def build_parser():
    p = argparse.ArgumentParser(prog="reusesim", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", help="generate a trace from a generator or mix spec")
    g.add_argument("--spec", "--config", dest="spec", required=True)
    g.add_argument("--out")
    g.add_argument("--seed", type=_u64)
    g.set_defaults(func=cmd_gen)

    r = sub.add_parser("run", help="simulate one scheme")
    r.add_argument("--config")
    r.add_argument("--trace", required=True)
    r.add_argument("--out")
    r.add_argument("--format", choices=("json", "csv"), default="json")
    r.add_argument("--scheme", choices=[s.value for s in ALL_SCHEMES])
    r.add_argument("--seed", type=_u64)
    r.set_defaults(func=cmd_run)

    c = sub.add_parser("compare", help="simulate several schemes on one trace")
    c.add_argument("--config")
    c.add_argument("--trace", required=True)
    c.add_argument("--schemes", default="all")
    c.add_argument("--out")
    c.add_argument("--format", choices=("json", "csv"), default="json")
    c.add_argument("--seed", type=_u64)
    c.add_argument("--jobs", type=int, default=1)
    c.set_defaults(func=cmd_compare)

    a = sub.add_parser("analyze", help="reuse-distance histogram and workload class")
    a.add_argument("--trace", required=True)
    a.add_argument("--llc-lines", type=int)
    a.add_argument("--line-bytes", type=int, default=64)
    a.add_argument("--out")
    a.set_defaults(func=cmd_analyze)

    ar = sub.add_parser("area", help="storage-bit area of the conventional and reuse LLC")
    ar.add_argument("--config")
    ar.add_argument("--address-bits", type=int, default=48)
    ar.add_argument("--out")
    ar.set_defaults(func=cmd_area)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return 0 if e.code == 0 else 2
    try:
        return args.func(args)
    except (ConfigError, TraceParseError) as e:
        print("error: %s" % e, file=sys.stderr)
        return 2
    except LogicError as e:
        print("internal error: %s" % e, file=sys.stderr)
        return 3
    except ReuseSimError as e:
        print("error: %s" % e, file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
