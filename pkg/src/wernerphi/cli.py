"""Command line entry point: ``wernerphi <command> [options]``.

Exit codes: 0 all checks passed, 1 at least one violation record was
written, 2 usage or configuration error.

Output (``--format jsonl``, the default) is one JSON object per line: a
``header`` with the effective configuration, the per-sample ``record``
lines, a ``summary`` and a terminal ``status`` line. Only the header's
``timestamp`` field changes between identical runs. ``--format csv``
writes the records as CSV with the header as a leading ``#`` comment.
"""

from __future__ import annotations

import argparse
import csv
import datetime as _dt
import json
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

from .runs import DEFAULT_TOLERANCES, DRIVERS

EXIT_OK, EXIT_VIOLATION, EXIT_USAGE = 0, 1, 2

COMMAND_HELP = {
    "identities": "unitary invariance of Phi, (AB) and GL2 covariance of H, determinant identities. "
    "Record: {seed, index, d, invariance, ab, lambda, det_unitary, det_gl, failed, violation}",
    "psd-scan": "lambda_min(H(X, Y)) on random pairs, unrestricted and diagonal-X. "
    "Record: {seed, index, mode, d, lambda_min, norm_H, lambda_min_minor, violation}",
    "diag-verify": "block decomposition and positive definiteness for diagonal pairs. "
    "Record: {seed, index, d, generic, lambda_min_H, min_block_eig, residual, violation}",
    "det-sample": "D(X, Y) = det H on generic pairs from three distributions. "
    "Record: {seed, index, d, distribution, generic, value, log_abs, sign, log_rel, zero_candidate, violation}",
    "search": "alternating minimization of Phi at unit block norms. "
    "Record: {restart, value, iterations, lambda_H, lambda_G, trace, violation}",
    "onedistill-scan": "one-copy minimum of <psi|sigma_W(t)|psi>/<psi|psi> over Schmidt rank 2 on a t grid. "
    "Record: {t, min_value}",
    "oracle-crosscheck": "four-way equality of the Phi formulations. "
    "Record: {seed, index, d, phi_vector, phi_matrix, quadratic_eval, phi_oracle, max_rel_dev, violation}",
    "continuation": "PD certification of random generic targets by path continuation. "
    "Record: {seed, index, d, verdict, lambda_min_direct, consistent, samples[...], violation}",
}


class UsageError(Exception):
    pass


@dataclass
class RunConfig:
    command: str
    d: int = 3
    samples: int = 100
    restarts: int = 100
    seed: int | None = None
    tolerances: dict = field(default_factory=lambda: dict(DEFAULT_TOLERANCES))
    output: str = "-"
    format: str = "jsonl"
    threads: int = 1
    mode: str = "both"
    minor_order: int = 10
    max_iters: int = 500
    search_tol: float = 1e-12
    steps: int = 32
    t_min: float = 0.3
    t_max: float = 0.6
    t_step: float = 0.01
    traces: str | None = None

    def validate(self):
        if self.command not in DRIVERS:
            raise UsageError(f"unknown command {self.command!r}")
        if self.d < 1:
            raise UsageError("--d must be >= 1")
        if self.seed is None:
            raise UsageError(f"{self.command} is randomized; --seed is required")
        if self.samples < 1 or self.restarts < 1 or self.threads < 1 or self.steps < 1:
            raise UsageError("--samples, --restarts, --steps and --threads must be >= 1")
        if self.format not in ("jsonl", "csv"):
            raise UsageError("--format must be jsonl or csv")
        if self.mode not in ("both", "unrestricted", "diagonal"):
            raise UsageError("--mode must be both, unrestricted or diagonal")
        if not (-1 <= self.t_min <= self.t_max <= 1) or self.t_step <= 0:
            raise UsageError("need -1 <= t_min <= t_max <= 1 and t_step > 0")
        unknown = set(self.tolerances) - set(DEFAULT_TOLERANCES)
        if unknown:
            raise UsageError(f"unknown tolerance names: {sorted(unknown)}")
        return self


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _tolerance(text: str) -> tuple[str, float]:
    name, sep, value = text.partition("=")
    if not sep:
        raise argparse.ArgumentTypeError(f"expected name=value, got {text!r}")
    try:
        return name, float(value)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from exc


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="wernerphi", description=__doc__,
                     formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    S = argparse.SUPPRESS
    for name, text in COMMAND_HELP.items():
        p = sub.add_parser(name, help=text.split(". ")[0], description=text)
        p.add_argument("--config", help="JSON file with option values; flags override it")
        p.add_argument("--d", type=int, default=S, help="local dimension")
        p.add_argument("--samples", type=int, default=S)
        p.add_argument("--restarts", type=int, default=S)
        p.add_argument("--seed", type=int, default=S, help="master seed (required)")
        p.add_argument("--tol", dest="tolerances", type=_tolerance, action="append", default=S,
                       metavar="NAME=VALUE",
                       help=f"override a tolerance; names: {', '.join(DEFAULT_TOLERANCES)}")
        p.add_argument("--output", "-o", default=S, help="output path, '-' for stdout")
        p.add_argument("--format", choices=["jsonl", "csv"], default=S)
        p.add_argument("--threads", type=int, default=S,
                       help="worker cap (default: $WERNER_THREADS or 1)")
        p.add_argument("--mode", choices=["both", "unrestricted", "diagonal"], default=S)
        p.add_argument("--minor-order", dest="minor_order", type=int, default=S)
        p.add_argument("--max-iters", dest="max_iters", type=int, default=S)
        p.add_argument("--search-tol", dest="search_tol", type=float, default=S)
        p.add_argument("--steps", type=int, default=S)
        p.add_argument("--t-min", dest="t_min", type=float, default=S)
        p.add_argument("--t-max", dest="t_max", type=float, default=S)
        p.add_argument("--t-step", dest="t_step", type=float, default=S)
        p.add_argument("--traces", default=S, help="CSV path for search traces")
    return parser


def parse_config(argv=None, environ=None) -> RunConfig:
    environ = os.environ if environ is None else environ
    ns = vars(build_parser().parse_args(argv))
    command = ns.pop("command")
    values: dict = {}

    if env := environ.get("WERNER_THREADS"):
        try:
            values["threads"] = int(env)
        except ValueError as exc:
            raise UsageError(f"WERNER_THREADS={env!r} is not an integer") from exc

    if path := ns.pop("config", None):
        try:
            with open(path) as fh:
                file_values = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read config {path}: {exc}") from exc
        file_values.pop("command", None)
        allowed = set(RunConfig.__dataclass_fields__) - {"command"}
        unknown = set(file_values) - allowed
        if unknown:
            raise UsageError(f"unknown keys in config file: {sorted(unknown)}")
        values.update(file_values)

    tol_flags = ns.pop("tolerances", None)
    values.update(ns)
    tolerances = dict(DEFAULT_TOLERANCES)
    tolerances.update(values.pop("tolerances", {}) or {})
    if tol_flags:
        tolerances.update(dict(tol_flags))
    try:
        cfg = RunConfig(command=command, tolerances=tolerances, **values)
    except TypeError as exc:
        raise UsageError(str(exc)) from exc
    return cfg.validate()


# --- output ------------------------------------------------------------------

def _clean(obj):
    """JSON-safe copy: non-finite floats become strings."""
    if isinstance(obj, float):
        if math.isfinite(obj):
            return obj
        return "nan" if math.isnan(obj) else ("inf" if obj > 0 else "-inf")
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if hasattr(obj, "item"):
        return _clean(obj.item())
    return obj


def dumps(obj) -> str:
    # float repr round-trips exactly, so no precision is lost
    return json.dumps(_clean(obj), sort_keys=False, allow_nan=False)


class _Writer:
    def __init__(self, stream, fmt: str, header: dict):
        self.stream = stream
        self.fmt = fmt
        self.csv = None
        self.fields = None
        if fmt == "jsonl":
            self.stream.write(dumps(header) + "\n")
        else:
            self.stream.write("# " + dumps(header) + "\n")

    def write(self, rec: dict):
        if self.fmt == "jsonl":
            self.stream.write(dumps(rec) + "\n")
            return
        if rec.get("type") != "record":
            self.stream.write("# " + dumps(rec) + "\n")
            return
        flat = {k: (dumps(v) if isinstance(v, (dict, list, tuple)) else _clean(v))
                for k, v in rec.items() if k != "type"}
        if self.csv is None:
            self.fields = list(flat)
            self.csv = csv.DictWriter(self.stream, fieldnames=self.fields, extrasaction="ignore",
                                      lineterminator="\n")
            self.csv.writeheader()
        self.csv.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in flat.items()})

    def flush(self):
        self.stream.flush()


def _write_traces(path: str, records: list):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["restart", "iter", "value"])
        for rec in records:
            for it, v in enumerate(rec["trace"]):
                w.writerow([rec["restart"], it, repr(float(v))])


def run(cfg: RunConfig, stdout=None) -> int:
    stdout = sys.stdout if stdout is None else stdout
    config = asdict(cfg)
    header = {"type": "header", "config": config,
              "timestamp": _dt.datetime.now(_dt.timezone.utc).isoformat()}
    to_stdout = cfg.output == "-"
    stream = stdout if to_stdout else open(cfg.output, "w", newline="")
    note = sys.stderr if to_stdout else stdout
    writer = _Writer(stream, cfg.format, header)

    executor = ThreadPoolExecutor(cfg.threads) if cfg.threads > 1 else None
    mapper = executor.map if executor else map
    violations = 0
    summary = None
    search_records = []
    status = "complete"
    try:
        for rec in DRIVERS[cfg.command](cfg, mapper):
            if rec.get("type") == "record":
                violations += bool(rec.get("violation"))
                if cfg.command == "search":
                    search_records.append(rec)
            if rec.get("type") == "summary":
                summary = rec
                if cfg.command == "search" and cfg.traces:
                    _write_traces(cfg.traces, search_records)
                    rec["traces_path"] = cfg.traces
            writer.write(rec)
            writer.flush()
    except KeyboardInterrupt:
        status = "interrupted"
    finally:
        writer.write({"type": "status", "status": status, "violations": violations})
        writer.flush()
        if executor:
            executor.shutdown(wait=False, cancel_futures=True)
        if not to_stdout:
            stream.close()

    message = summary["message"] if summary else status
    verdict = "FAIL" if violations else "ok"
    print(f"[{cfg.command}] {verdict}: {message}", file=note)
    if status == "interrupted":
        return EXIT_USAGE
    return EXIT_VIOLATION if violations else EXIT_OK


def main(argv=None) -> int:
    try:
        cfg = parse_config(argv)
    except UsageError as exc:
        print(f"wernerphi: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    return run(cfg)


if __name__ == "__main__":
    sys.exit(main())
