"""Command-line entry point: verify | evolve | study | counterexample.

Configuration comes from a flat ``key = value`` file (``--config``) or the
``config`` section of a previous ``manifest.json`` (``--manifest``); flags
override both. Exit codes: 0 pass, 1 check failure, 2 usage/config error.
"""
from __future__ import annotations

import argparse
from dataclasses import asdict, dataclass, fields
import json
import math
import os
import platform
import sys
import tempfile
import time
from typing import Optional

import numpy as np
import scipy

from . import __version__
from .hermitian import HermitianMatrix, basis_projector, trace_norm
from .semigroup import (
    FAMILY_KINDS,
    KATO,
    ModelParams,
    RegularizationFamily,
    build_generator,
    build_H,
    evolve,
    random_states,
    regularization_sweep,
)
from .superop import propagate
from .verify import EULER_STEPS, euler_errors, evolution_support, run_suite, scan_generator_form

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    dim: int = 40
    buffer: int = 4
    energy: float = 1.0
    # None means "command default": 1 / 0.25, or 1 / 1 for the counterexample scan
    sigma_minus: float = None
    sigma_plus: float = None
    family: str = "cutoff"
    index: str = ""
    kato_r: str = "0,0.5,0.9,0.99,0.999999"
    time_start: float = 0.0
    time_stop: float = 1.0
    time_steps: int = 21
    euler_steps: str = ",".join(str(n) for n in EULER_STEPS)
    samples: int = 50
    seed: int = 42
    out_dir: str = "."
    strict_iii: bool = False
    require_markov: bool = False
    # command-specific
    generator: str = "full"
    state: str = "random"
    axis: str = "cutoff"
    dims: str = "20,40,80"
    k_values: str = "2..20"
    lambda_values: str = "0.1,0.2,0.3,0.4,0.5,0.6,0.7,0.8,0.9"

    def params(self) -> ModelParams:
        try:
            return ModelParams.make(self.dim, self.buffer, self.energy, self.sigma_minus, self.sigma_plus)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None

    def time_grid(self) -> list:
        if self.time_steps < 1:
            raise ConfigError("time_steps must be >= 1")
        if self.time_steps == 1:
            return [self.time_start]
        return [float(t) for t in np.linspace(self.time_start, self.time_stop, self.time_steps)]


FIELD_TYPES = {f.name: f.type for f in fields(RunConfig)}


def _convert(key: str, raw):
    kind = FIELD_TYPES[key]
    if not isinstance(raw, str):
        raw = json.dumps(raw) if kind == "bool" else str(raw)
    raw = raw.strip()
    try:
        if kind == "int":
            return int(raw)
        if kind == "float":
            return float(raw)
        if kind == "bool":
            low = raw.lower()
            if low in ("1", "true", "yes", "on"):
                return True
            if low in ("0", "false", "no", "off"):
                return False
            raise ValueError(raw)
    except ValueError:
        raise ConfigError(f"invalid value {raw!r} for config key '{key}'") from None
    return raw


def parse_config_text(text: str) -> dict:
    out = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {line!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in FIELD_TYPES:
            raise ConfigError(f"unknown config key '{key}'")
        out[key] = _convert(key, value)
    return out


def parse_int_list(text: str) -> list:
    """Comma list of integers; ``a..b`` expands to an inclusive range."""
    out = []
    try:
        for part in filter(None, (p.strip() for p in text.split(","))):
            if ".." in part:
                lo, hi = part.split("..")
                out.extend(range(int(lo), int(hi) + 1))
            else:
                out.append(int(part))
    except ValueError:
        raise ConfigError(f"expected a comma list of integers, got {text!r}") from None
    return out


def parse_float_list(text: str) -> list:
    try:
        return [float(p) for p in text.split(",") if p.strip()]
    except ValueError:
        raise ConfigError(f"expected a comma list of numbers, got {text!r}") from None


def resolve_config(args) -> RunConfig:
    values = {}
    if args.manifest:
        with open(args.manifest) as fh:
            manifest = json.load(fh)
        for key, value in manifest.get("config", {}).items():
            if key not in FIELD_TYPES:
                raise ConfigError(f"unknown config key '{key}'")
            values[key] = _convert(key, value)
    if args.config:
        with open(args.config) as fh:
            values.update(parse_config_text(fh.read()))
    for key in FIELD_TYPES:
        flag = getattr(args, key, None)
        if flag not in (None, False):
            values[key] = _convert(key, flag)
    return RunConfig(**values)


def _fmt(x) -> str:
    x = float(x)
    return f"{x:.12g}" if math.isfinite(x) else str(x)


def _write_atomic(path: str, text: str):
    directory = os.path.dirname(path) or "."
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-")
    with os.fdopen(fd, "w", newline="") as fh:
        fh.write(text)
    os.replace(tmp, path)


def _write_csv(path: str, header, rows):
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(v if isinstance(v, str) else _fmt(v) for v in row))
    _write_atomic(path, "\n".join(lines) + "\n")


def write_manifest(cfg: RunConfig, command: str, started: float, extra: Optional[dict] = None):
    manifest = {
        "command": command,
        "config": asdict(cfg),
        "seed": cfg.seed,
        "versions": {
            "katoreg": __version__,
            "numpy": np.__version__,
            "scipy": scipy.__version__,
            "python": platform.python_version(),
        },
        "wall_time_s": round(time.time() - started, 3),
    }
    manifest.update(extra or {})
    _write_atomic(os.path.join(cfg.out_dir, "manifest.json"), json.dumps(manifest, indent=2, sort_keys=True) + "\n")


def initial_state(cfg: RunConfig, p: ModelParams) -> HermitianMatrix:
    spec = cfg.state
    try:
        if spec == "random":
            return random_states(p, 1, cfg.seed, support=evolution_support(p))[0]
        if spec.startswith("basis:"):
            n = int(spec.split(":", 1)[1])
            if not 0 <= n < p.dim:
                raise ValueError(f"basis index {n} outside [0, {p.dim - 1}]")
            return basis_projector(n, p.dim)
        if spec.startswith("file:"):
            m = np.load(spec.split(":", 1)[1])
            if m.shape != (p.dim, p.dim):
                raise ValueError(f"state file has shape {m.shape}, expected {(p.dim, p.dim)}")
            return HermitianMatrix(m)
    except (ValueError, OSError) as exc:
        raise ConfigError(f"bad state spec {spec!r}: {exc}") from None
    raise ConfigError(f"bad state spec {spec!r}: use random, basis:N or file:PATH")


def _family_from_config(cfg: RunConfig, p: ModelParams) -> RegularizationFamily:
    if cfg.family not in FAMILY_KINDS:
        raise ConfigError(f"family must be one of {FAMILY_KINDS}, got {cfg.family!r}")
    if cfg.family == KATO:
        values = parse_float_list(cfg.kato_r)
    else:
        values = parse_int_list(cfg.index) or [p.dim - 2]
    fam = RegularizationFamily(cfg.family, values[0])
    try:
        fam.validate(p.trunc)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    return fam


COMMAND_SIGMA_DEFAULTS = {"counterexample": (1.0, 1.0)}


def fill_command_defaults(cfg: RunConfig, command: str) -> RunConfig:
    sm, spl = COMMAND_SIGMA_DEFAULTS.get(command, (1.0, 0.25))
    if cfg.sigma_minus is None:
        cfg.sigma_minus = sm
    if cfg.sigma_plus is None:
        cfg.sigma_plus = spl
    return cfg


def cmd_verify(cfg: RunConfig) -> int:
    started = time.time()
    p = cfg.params()
    s = cfg.samples
    reports = run_suite(p, cfg.seed, {"large": 4 * s, "medium": 2 * s, "small": s})
    payload = json.dumps([r.to_dict() for r in reports], indent=2, sort_keys=True) + "\n"
    _write_atomic(os.path.join(cfg.out_dir, "reports.json"), payload)
    failed = [r.name for r in reports if not r.passed and (cfg.strict_iii or not r.informational)]
    if cfg.require_markov:
        failed += [r.name for r in reports if r.name == "trace_preservation" and r.verdict == "skipped"]
    for r in reports:
        status = "PASS" if r.passed else ("INFO" if r.informational and not cfg.strict_iii else "FAIL")
        if r.verdict == "skipped":
            status = "SKIP"
        print(f"{status:4s} {r.name:28s} worst={_fmt(r.worst_violation)} tol={_fmt(r.tolerance)}")
    write_manifest(cfg, "verify", started, {"failed": failed, "checks": len(reports)})
    if failed:
        print("failed: " + ", ".join(failed), file=sys.stderr)
        return EXIT_FAIL
    return EXIT_OK


TRAJECTORY_HEADER = ("t", "trace", "trace_norm", "min_eig", "purity", "mean_occupation")


def cmd_evolve(cfg: RunConfig) -> int:
    started = time.time()
    p = cfg.params()
    rho0 = initial_state(cfg, p)
    if cfg.generator == "H":
        L = build_H(p)
    elif cfg.generator == "full":
        L = build_generator(p)
    elif cfg.generator == "family":
        L = build_generator(p, _family_from_config(cfg, p))
    else:
        raise ConfigError(f"generator must be H, full or family, got {cfg.generator!r}")
    rec = evolve(L, rho0, cfg.time_grid())
    _write_csv(os.path.join(cfg.out_dir, "trajectory.csv"), TRAJECTORY_HEADER, rec.rows())
    write_manifest(cfg, "evolve", started)
    return EXIT_OK


STUDY_HEADER = ("axis", "value", "error", "margin", "resolvent_error", "resolvent_margin", "trace_drift")
NAN = float("nan")


def cmd_study(cfg: RunConfig) -> int:
    started = time.time()
    p = cfg.params()
    t = cfg.time_stop
    extra = {}
    rows = []
    if cfg.axis in ("cutoff", "compress", "kato"):
        rho0 = initial_state(cfg, p)
        if cfg.axis == KATO:
            indices = parse_float_list(cfg.kato_r)
        else:
            indices = parse_int_list(cfg.index) or list(range(p.dim - 1))
        try:
            sweep = regularization_sweep(p, cfg.axis, indices, t, rho0)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        for r in sweep:
            rows.append((cfg.axis, r.index, r.evo_error, r.evo_margin, r.res_error, r.res_margin,
                         abs(r.evo_trace - rho0.trace())))
    elif cfg.axis == "euler":
        steps = parse_int_list(cfg.euler_steps)
        errs = euler_errors(p, t, steps, initial_state(cfg, p))
        slope = float(np.polyfit(np.log(steps), np.log(errs), 1)[0]) if len(steps) > 1 else NAN
        extra["euler_slope"] = _fmt(slope)
        rows = [("euler", n, e, NAN, NAN, NAN, NAN) for n, e in zip(steps, errs)]
    elif cfg.axis == "dim":
        dims = parse_int_list(cfg.dims)
        small = p.with_dim(min(dims))
        base = random_states(small, 1, cfg.seed, support=evolution_support(small))[0]
        finals = {}
        for d in dims:
            q = p.with_dim(d)
            m = np.zeros((d, d), dtype=complex)
            m[: base.dim, : base.dim] = base.entries
            finals[d] = propagate(-build_generator(q), [t], HermitianMatrix(m))[-1]
        ref = finals[max(dims)]
        for d in dims:
            block = ref.entries[:d, :d]
            err = trace_norm(finals[d].entries - block) + trace_norm(ref.entries) - trace_norm(block)
            rows.append(("dim", d, err, NAN, NAN, NAN, abs(finals[d].trace() - base.trace())))
    else:
        raise ConfigError(f"axis must be cutoff, compress, kato, euler or dim, got {cfg.axis!r}")
    _write_csv(os.path.join(cfg.out_dir, "study.csv"), STUDY_HEADER, rows)
    write_manifest(cfg, "study", started, extra)
    return EXIT_OK


COUNTEREXAMPLE_HEADER = ("k", "lambda", "closed_form_value", "matrix_value", "negative")


def cmd_counterexample(cfg: RunConfig) -> int:
    started = time.time()
    p = cfg.params()
    if cfg.energy != 1.0:
        raise ConfigError("counterexample scan assumes energy = 1")
    ks = parse_int_list(cfg.k_values)
    lams = parse_float_list(cfg.lambda_values)
    if not ks or not lams:
        raise ConfigError("k_values and lambda_values must be nonempty")
    if min(ks) < 2 or max(ks) > p.dim - 2:
        raise ConfigError(f"k values must lie in [2, {p.dim - 2}] for dim {p.dim}")
    rows = scan_generator_form(p, ks, lams)
    _write_csv(
        os.path.join(cfg.out_dir, "counterexample.csv"),
        COUNTEREXAMPLE_HEADER,
        [(str(k), lam, c, m, "true" if m < 0 else "false") for k, lam, c, m in rows],
    )
    disagreement = max(abs(c - m) for _, _, c, m in rows)
    negatives = sum(m < 0 for *_, m in rows)
    write_manifest(cfg, "counterexample", started, {"max_disagreement": _fmt(disagreement), "negatives": negatives})
    if disagreement > 1e-9 or negatives == 0:
        print(f"disagreement {disagreement:.3e}, negatives found: {negatives}", file=sys.stderr)
        return EXIT_FAIL
    return EXIT_OK


COMMANDS = {"verify": cmd_verify, "evolve": cmd_evolve, "study": cmd_study, "counterexample": cmd_counterexample}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="katoreg", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--config", help="flat key = value config file")
        sp.add_argument("--manifest", help="re-run from the config recorded in a manifest.json")
        for f in fields(RunConfig):
            opt = "--" + f.name.replace("_", "-")
            if f.type == "bool":
                sp.add_argument(opt, dest=f.name, action="store_true", default=None)
            else:
                sp.add_argument(opt, dest=f.name, default=None, metavar=f.name.upper())
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    try:
        cfg = fill_command_defaults(resolve_config(args), args.command)
        return COMMANDS[args.command](cfg)
    except (ConfigError, OSError, json.JSONDecodeError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
