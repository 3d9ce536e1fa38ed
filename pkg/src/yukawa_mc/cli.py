"""Command-line interface: ``yukawa-mc {psi,solve,measure,validate}``.

Run settings come from a JSON file (``--config``) and are overridden field by
field by flags. Exit codes: 0 success, 1 failed validation, 2 usage or
configuration error, 3 runtime error.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import math
import sys
import time
from dataclasses import dataclass, field
from decimal import Decimal, InvalidOperation
from pathlib import Path

import numpy as np

from . import __version__

EXIT_OK, EXIT_FAILED, EXIT_USAGE, EXIT_RUNTIME = 0, 1, 2, 3
ESTIMATOR_CHOICES = ("discounted", "killed", "duffin", "wos", "all")
DEFAULT_PSI_DIMS = (2, 3, 4, 10)
DEFAULT_PSI_GRID = "0:10:0.1"


class UsageError(Exception):
    """Bad arguments or configuration (exit code 2)."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


# --- configuration ---------------------------------------------------------


@dataclass
class RunConfig:
    domain: dict | None = None
    pole: list | None = None
    mu: float = 0.0
    estimator: str = "discounted"
    f: dict = field(default_factory=lambda: {"kind": "constant", "value": 1.0})
    n_samples: int = 10_000
    seed: int = 0
    walk: dict = field(default_factory=dict)
    binning: dict | None = None
    time_bins: int | None = None

    @classmethod
    def from_dict(cls, spec: dict) -> "RunConfig":
        known = set(cls.__dataclass_fields__)
        extra = set(spec) - known - {"out", "workers", "n", "grid", "suite"}
        if extra:
            raise UsageError(f"unknown config fields: {sorted(extra)}")
        return cls(**{k: v for k, v in spec.items() if k in known})

    def to_dict(self) -> dict:
        return {k: getattr(self, k) for k in self.__dataclass_fields__}

    def build(self, need_binning: bool = False):
        """Validate and turn the record into library objects."""
        from .domains import BoundaryBinning, domain_from_dict
        from .estimators import BoundaryFn
        from .sampling import WalkConfig

        if self.domain is None:
            raise UsageError("a domain is required")
        try:
            d = domain_from_dict(self.domain)
            pole = np.asarray(self.pole if self.pole is not None else _default_pole(d), dtype=float)
            if pole.shape != (d.dim,):
                raise UsageError(f"pole must have {d.dim} coordinates")
            if not d.contains(pole):
                raise UsageError(f"pole {pole.tolist()} is not inside the domain")
            mu = float(self.mu)
            if not mu >= 0.0:
                raise UsageError("mu must be >= 0")
            if self.estimator not in ESTIMATOR_CHOICES:
                raise UsageError(f"estimator must be one of {ESTIMATOR_CHOICES}")
            if mu == 0.0 and self.estimator in ("killed", "duffin"):
                raise UsageError(f"estimator {self.estimator!r} needs mu > 0")
            n = int(self.n_samples)
            if n < 2:
                raise UsageError("n_samples must be at least 2")
            if not 0 <= int(self.seed) < 2**64:
                raise UsageError("seed must be an unsigned 64-bit integer")
            f = BoundaryFn.from_dict(self.f)
            f.check(d)
            cfg = WalkConfig.from_dict(dict(self.walk)).with_mu(mu)
            cfg.resolve(d)
            binning = None
            if self.binning is not None:
                binning = BoundaryBinning.from_dict(self.binning)
                binning.check(d)
            elif need_binning:
                raise UsageError("a binning is required")
            if self.time_bins is not None and int(self.time_bins) < 2:
                raise UsageError("time_bins must be at least 2")
        except (ValueError, TypeError, KeyError) as exc:
            raise UsageError(str(exc)) from None
        return d, pole, f, cfg, binning


def _default_pole(d):
    if hasattr(d, "center"):
        return d.center
    if hasattr(d, "lower"):
        return (np.asarray(d.lower) + np.asarray(d.upper)) / 2.0
    raise UsageError("a pole is required for this domain")


def _load_config(path: str | None) -> dict:
    if path is None:
        return {}
    try:
        with open(path, encoding="utf-8") as fh:
            spec = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from None
    if not isinstance(spec, dict):
        raise UsageError("config file must hold a JSON object")
    return spec


def _json_arg(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise argparse.ArgumentTypeError(f"invalid JSON: {exc}") from None


def _float_list(text: str) -> list:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _overrides(args) -> dict:
    """Flag values that were actually given, in config-field form."""
    out = {}
    for key in ("domain", "pole", "mu", "estimator", "f", "n_samples", "seed", "binning", "time_bins"):
        value = getattr(args, key, None)
        if value is not None:
            out[key] = value
    walk = {}
    for key in ("step_h", "eps_shell", "max_steps", "bridge_correction"):
        value = getattr(args, key, None)
        if value is not None:
            walk[key] = value
    if walk:
        out["walk"] = walk
    return out


def _merge(base: dict, over: dict) -> dict:
    merged = dict(base)
    for key, value in over.items():
        if key == "walk":
            merged["walk"] = {**merged.get("walk", {}), **value}
        else:
            merged[key] = value
    return merged


def _config_hash(spec: dict) -> str:
    text = json.dumps(spec, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(text.encode()).hexdigest()[:16]


# --- output ----------------------------------------------------------------


def _num(x) -> str:
    """Shortest round-trip decimal form."""
    if isinstance(x, (bool, np.bool_)):
        return str(bool(x)).lower()
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return repr(float(x))


def _clean(obj):
    """JSON-ready copy with numpy scalars unwrapped and non-finite floats as null."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple, np.ndarray)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else None
    return obj


def _meta(command: str, seed: int, spec: dict) -> dict:
    return {"command": command, "version": __version__, "seed": int(seed), "config_hash": _config_hash(spec)}


def _write(text: str, out: str | None) -> None:
    if out is None:
        sys.stdout.write(text)
        return
    Path(out).parent.mkdir(parents=True, exist_ok=True)
    with open(out, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def _json_text(obj: dict) -> str:
    return json.dumps(_clean(obj), indent=2, allow_nan=False) + "\n"


def _csv_text(meta: dict, header: list, rows: list) -> str:
    buf = io.StringIO()
    for key, value in meta.items():
        buf.write(f"# {key}: {value}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([v if isinstance(v, str) else _num(v) for v in row])
    return buf.getvalue()


# --- commands --------------------------------------------------------------


def parse_grid(text: str) -> list:
    """``start:stop:step`` (inclusive, exact decimal steps) or a comma list of values."""
    text = text.strip()
    if ":" not in text:
        values = _float_list(text)
    else:
        parts = text.split(":")
        if len(parts) != 3:
            raise UsageError(f"grid must be start:stop:step, got {text!r}")
        try:
            start, stop, step = (Decimal(p) for p in parts)
        except InvalidOperation:
            raise UsageError(f"grid must be start:stop:step, got {text!r}") from None
        if step <= 0 or stop < start:
            raise UsageError("grid needs step > 0 and stop >= start")
        count = int((stop - start) / step) + 1
        values = [float(start + i * step) for i in range(count)]
    if not values:
        raise UsageError("empty mu grid")
    if any(not (math.isfinite(v) and v >= 0.0) for v in values):
        raise UsageError("mu grid values must be finite and >= 0")
    return values


def cmd_psi(args, spec: dict) -> int:
    from .specfun import psi

    dims = args.n if args.n is not None else spec.get("n", list(DEFAULT_PSI_DIMS))
    if isinstance(dims, str):
        dims = [v for v in dims.split(",") if v.strip()]
    if not dims:
        raise UsageError("empty dimension list")
    try:
        dims = [int(n) for n in dims]
    except (TypeError, ValueError):
        raise UsageError(f"dimensions must be integers, got {dims!r}") from None
    if any(n < 2 for n in dims):
        raise UsageError("dimensions must be >= 2")
    grid_text = args.grid if args.grid is not None else spec.get("grid", DEFAULT_PSI_GRID)
    grid = parse_grid(grid_text)
    rows = []
    for mu in grid:
        try:
            rows.append([mu] + [psi(n, mu) for n in dims])
        except (OverflowError, ValueError) as exc:
            raise UsageError(f"psi undefined at mu={mu!r}: {exc}") from None
    record = {"n": dims, "grid": grid_text}
    text = _csv_text(_meta("psi", args.seed or 0, record), ["mu"] + [f"psi_{n}" for n in dims], rows)
    _write(text, args.out)
    return EXIT_OK


def _prepare(args, base: dict, need_binning: bool = False):
    spec = _merge(base, _overrides(args))
    cfg = RunConfig.from_dict(spec)
    objects = cfg.build(need_binning=need_binning)
    return cfg, objects


def cmd_solve(args, base: dict) -> int:
    from .estimators import compare_estimators, solve
    from .rng import RngStream

    run, (d, pole, f, cfg, _) = _prepare(args, base)
    rng = RngStream(int(run.seed))
    t0 = time.perf_counter()
    if run.estimator == "all":
        if cfg.mu == 0.0:
            raise UsageError("estimator 'all' needs mu > 0")
        report = compare_estimators(d, pole, f, cfg.mu, run.n_samples, cfg, rng)
        body = {"estimator": "all", **report.to_dict(), "all_overlap": report.all_overlap}
    else:
        est = solve(run.estimator, d, pole, f, cfg.mu, run.n_samples, cfg, rng)
        body = {"estimator": run.estimator, **est.to_dict()}
    elapsed = time.perf_counter() - t0
    body["elapsed"] = elapsed if args.timing else None
    out = {"meta": _meta("solve", run.seed, run.to_dict()), **body}
    _write(_json_text(out), args.out)
    return EXIT_OK


def cmd_measure(args, base: dict) -> int:
    from .estimators import measure_histogram
    from .rng import RngStream

    run, (d, pole, _, cfg, binning) = _prepare(args, base, need_binning=True)
    if run.estimator == "all":
        raise UsageError("measure takes a single estimator")
    if run.estimator == "wos" and run.time_bins:
        raise UsageError("walk-on-spheres records no exit times; time bins are unavailable")
    hist = measure_histogram(
        d, pole, cfg.mu, binning, run.n_samples, cfg, RngStream(int(run.seed)),
        kind=run.estimator, time_bins=run.time_bins,
    )
    meta = _meta("measure", run.seed, run.to_dict())
    meta["n_paths"] = hist.n_paths
    meta["truncation_fraction"] = _num(hist.truncation_fraction)
    if hist.overflow_count:
        meta["overflow_count"] = hist.overflow_count
    rows = [
        [i, binning.descriptor(d, i), hist.unweighted_mass[i], hist.weighted_mass[i], hist.z_ratio[i], hist.counts[i]]
        for i in range(len(hist.counts))
    ]
    header = ["bin_index", "bin_descriptor", "harmonic_mass", "panharmonic_mass", "z_ratio", "count"]
    text = _csv_text(meta, header, rows)
    if hist.time_counts is not None:
        edges = hist.time_edges
        mass = hist.time_mass
        trows = [
            [edges[k], edges[k + 1], b, mass[k, b]]
            for k in range(mass.shape[0])
            for b in range(mass.shape[1])
            if hist.time_counts[k, b]
        ]
        ttext = _csv_text(meta, ["time_lo", "time_hi", "bin_index", "mass"], trows)
        if args.out is None:
            text += "\n" + ttext
        else:
            out = Path(args.out)
            _write(ttext, str(out.with_name(out.stem + ".time" + (out.suffix or ".csv"))))
    _write(text, args.out)
    return EXIT_OK


def cmd_validate(args, spec: dict) -> int:
    from .oracles import SUITES, run_suite

    suite = args.suite if args.suite is not None else spec.get("suite", "all")
    if suite != "all" and suite not in SUITES:
        raise UsageError(f"unknown suite {suite!r}; choose from {sorted(SUITES) + ['all']}")
    seed = args.seed if args.seed is not None else spec.get("seed", 0)
    report = run_suite(suite, int(seed))
    report["meta"] = _meta("validate", seed, {"suite": suite, "seed": int(seed)})
    _write(_json_text(report), args.out)
    return EXIT_OK if report["passed"] else EXIT_FAILED


# --- parser ----------------------------------------------------------------


def _seed(text: str) -> int:
    try:
        value = int(text, 0)
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid seed {text!r}") from None
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return value


def _positive_int(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
    if value < 1:
        raise argparse.ArgumentTypeError("expected a positive integer")
    return value


def _global_flags(p: argparse.ArgumentParser, suppress: bool) -> None:
    default = argparse.SUPPRESS if suppress else None
    p.add_argument("--config", default=default, help="JSON run configuration")
    p.add_argument("--seed", type=_seed, default=default, help="root seed (unsigned 64-bit)")
    p.add_argument("--workers", type=_positive_int, default=default, help="worker threads (default: all cores)")
    p.add_argument("--out", default=default, help="output file (default: stdout)")


def _run_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--domain", type=_json_arg, help='domain record, e.g. \'{"kind":"ball","center":[0,0,0],"radius":1}\'')
    p.add_argument("--pole", type=_float_list, help="comma-separated start point")
    p.add_argument("--mu", type=float)
    p.add_argument("--estimator", choices=ESTIMATOR_CHOICES)
    p.add_argument("--f", type=_json_arg, help='boundary function record, e.g. \'{"kind":"indicator","axis":1}\'')
    p.add_argument("--n-samples", dest="n_samples", type=int)
    p.add_argument("--step-h", dest="step_h", type=float)
    p.add_argument("--eps-shell", dest="eps_shell", type=float)
    p.add_argument("--max-steps", dest="max_steps", type=int)
    p.add_argument("--bridge", dest="bridge_correction", action="store_true", default=None,
                   help="Brownian-bridge crossing correction")
    p.add_argument("--no-bridge", dest="bridge_correction", action="store_false")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="yukawa-mc", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    _global_flags(parser, suppress=False)
    sub = parser.add_subparsers(dest="command", parser_class=_Parser, required=True)

    p = sub.add_parser("psi", help="tabulate the killing constant psi_n(mu)")
    _global_flags(p, suppress=True)
    p.add_argument("--n", help="comma-separated dimensions (default 2,3,4,10)")
    p.add_argument("--grid", help="mu grid start:stop:step or comma list (default 0:10:0.1)")

    p = sub.add_parser("solve", help="estimate u(pole) for boundary data f")
    _global_flags(p, suppress=True)
    _run_flags(p)
    p.add_argument("--timing", action="store_true", help="record wall-clock seconds in 'elapsed'")

    p = sub.add_parser("measure", help="binned harmonic and panharmonic exit measures")
    _global_flags(p, suppress=True)
    _run_flags(p)
    p.add_argument("--binning", type=_json_arg, help='binning record, e.g. \'{"scheme":"cap","bins":8}\'')
    p.add_argument("--time-bins", dest="time_bins", type=int, help="add a joint exit time-place table")

    p = sub.add_parser("validate", help="run oracle suites")
    _global_flags(p, suppress=True)
    p.add_argument("--suite", help="specfun, mean-value, domination, uniformity, cross, stepper or all")
    return parser


COMMANDS = {"psi": cmd_psi, "solve": cmd_solve, "measure": cmd_measure, "validate": cmd_validate}


def _set_workers(n: int | None) -> None:
    import numba

    if n is None:
        return
    if n > numba.config.NUMBA_NUM_THREADS:
        raise UsageError(f"--workers must be at most {numba.config.NUMBA_NUM_THREADS}")
    numba.set_num_threads(n)


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        spec = _load_config(args.config)
        if args.seed is None and "seed" in spec:
            args.seed = spec["seed"]
        workers = args.workers if args.workers is not None else spec.get("workers")
        if args.out is None and "out" in spec:
            args.out = spec["out"]
        _set_workers(workers)
        return COMMANDS[args.command](args, spec)
    except UsageError as exc:
        print(f"yukawa-mc: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (OverflowError, RuntimeError, FloatingPointError, MemoryError, OSError) as exc:
        print(f"yukawa-mc: runtime error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
