"""``qtm`` command-line entry point.

Exit status: 0 when no record is violated, 1 on any violation, 2 on a
configuration or I/O error.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from dataclasses import fields

from .errors import ConfigError
from .experiments import EXPERIMENTS, ExperimentConfig, format_records, run_experiment, write_outputs

EXIT_OK, EXIT_VIOLATION, EXIT_CONFIG = 0, 1, 2
SEED_ENV = "QTM_SEED"


def parse_beta(text) -> float | tuple[float, float]:
    """``"0.5"`` or ``"random:lo,hi"`` (brackets optional)."""
    if isinstance(text, (int, float)):
        return float(text)
    if isinstance(text, (list, tuple)):
        return tuple(float(x) for x in text)
    s = str(text).strip()
    try:
        if s.startswith("random:"):
            body = s[len("random:") :].strip().strip("[]")
            lo, hi = (float(x) for x in body.split(","))
            return (lo, hi)
        return float(s)
    except ValueError as exc:
        raise ConfigError(f"beta: cannot parse {text!r}") from exc


def parse_s(text) -> float:
    s = str(text).strip().lower()
    if s in ("inf", "infinity", "∞"):
        return math.inf
    try:
        return float(s)
    except ValueError as exc:
        raise ConfigError(f"petrov_s: cannot parse {text!r}") from exc


def parse_int_list(text) -> tuple[int, ...]:
    if isinstance(text, (list, tuple)):
        items = list(text)
    else:
        items = [x for x in str(text).split(",") if x.strip()]
    try:
        return tuple(int(x) for x in items)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"d_E_choices: cannot parse {text!r}") from exc


def _parse_seed(text, source: str) -> int:
    try:
        return int(str(text).strip(), 0)
    except ValueError as exc:
        raise ConfigError(f"{source}: cannot parse seed {text!r}") from exc


_FILE_KEYS = {f.name for f in fields(ExperimentConfig)}


def load_config_file(path: str) -> dict:
    """Read a JSON object of :class:`ExperimentConfig` fields."""
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"config: cannot read {path}: {exc.strerror}") from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config: {path}: line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc
    if not isinstance(data, dict):
        raise ConfigError(f"config: {path}: top level must be an object")
    unknown = sorted(set(data) - _FILE_KEYS)
    if unknown:
        raise ConfigError(f"config: {path}: unknown field(s) {', '.join(unknown)}")
    out = dict(data)
    if "beta" in out:
        out["beta"] = parse_beta(out["beta"])
    if "petrov_s" in out:
        out["petrov_s"] = parse_s(out["petrov_s"])
    if "d_E_choices" in out:
        out["d_E_choices"] = parse_int_list(out["d_E_choices"])
    return out


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="qtm",
        description="Seeded numerical checks of precision limits for quantum thermal machines.",
    )
    p.add_argument("experiment", choices=EXPERIMENTS)
    p.add_argument("--trials", type=int)
    p.add_argument("--seed", help=f"unsigned 64-bit master seed (overridden by ${SEED_ENV})")
    p.add_argument("--ds", type=int, dest="d_S", help="system dimension")
    p.add_argument("--de-choices", dest="d_E_choices", help="comma-separated environment dimensions")
    p.add_argument("--beta", help="inverse temperature: a value or random:lo,hi")
    p.add_argument("--r", type=float, dest="petrov_r", help="lower moment order")
    p.add_argument("--s", dest="petrov_s", help="upper moment order or inf")
    p.add_argument("--out", dest="output_path", help="record file; stdout when omitted")
    p.add_argument("--format", choices=("csv", "json"))
    p.add_argument("--config", help="JSON file with default values for the fields above")
    p.add_argument("--workers", type=int, help="worker processes (output is order-preserving)")
    p.add_argument("--identity-unitary", action="store_true", default=None,
                   help="replace random joint unitaries by the identity")
    return p


def resolve_config(args: argparse.Namespace, environ=os.environ) -> ExperimentConfig:
    values: dict = {}
    if args.config:
        values.update(load_config_file(args.config))
    values["experiment"] = args.experiment
    for key in ("trials", "d_S", "petrov_r", "output_path", "format", "workers", "identity_unitary"):
        v = getattr(args, key)
        if v is not None:
            values[key] = v
    if args.seed is not None:
        values["seed"] = _parse_seed(args.seed, "--seed")
    if args.d_E_choices is not None:
        values["d_E_choices"] = parse_int_list(args.d_E_choices)
    if args.beta is not None:
        values["beta"] = parse_beta(args.beta)
    if args.petrov_s is not None:
        values["petrov_s"] = parse_s(args.petrov_s)
    if environ.get(SEED_ENV):
        values["seed"] = _parse_seed(environ[SEED_ENV], SEED_ENV)
    try:
        return ExperimentConfig(**values)
    except TypeError as exc:
        raise ConfigError(f"config: {exc}") from exc


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = resolve_config(args)
        summary, records = run_experiment(cfg)
        if cfg.output_path:
            write_outputs(cfg, summary, records)
        else:
            sys.stdout.write(format_records(records, cfg.format))
    except ConfigError as exc:
        print(f"qtm: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"qtm: cannot write output: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    s = summary
    print(
        f"{cfg.experiment}: {s.total} records, {s.satisfied} satisfied, {s.violations} violated, "
        f"{s.skipped} skipped, {s.invalid} outside validity; min slack {s.min_slack:.3e}",
        file=sys.stderr,
    )
    for seed, trial, bound_id in s.violating[:10]:
        print(f"  violation: bound={bound_id} seed={seed} trial={trial}", file=sys.stderr)
    return EXIT_VIOLATION if s.violations else EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
