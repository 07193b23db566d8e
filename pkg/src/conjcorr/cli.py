"""Command-line entry point.

Subcommands:
    report     correlation report for one state (JSON or long-format CSV)
    figure     A-K / causal slope ratio sweep for Gaussian packets (CSV)
    sample     heterodyne Monte Carlo samples (CSV) plus estimate summary (JSON)
    composite  pair-marginal verification of a two-mode product density (JSON)

Exit codes: 0 success, 2 configuration error, 3 numerical-tolerance failure.
Infeasible convex combinations are reported inside the output and do not
fail the run. Nothing is written when the configuration is invalid.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path
from typing import List, Literal, Optional, Tuple, Union

import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError

from . import arthurs_kelly as ak
from . import report as rp
from .errors import ConfigError, NumericalToleranceError
from .states import build_state

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid")


class GaussianState(_Strict):
    kind: Literal["gaussian"]
    alpha: float = Field(gt=0)
    beta: float = 0.0
    t0_over_m: float = 0.0


class CoherentState(_Strict):
    kind: Literal["coherent"]
    n: int = Field(ge=0, le=64)
    A: float = Field(default=0.0, ge=0)
    theta: float = 0.0
    omega: float = Field(default=1.0, gt=0)
    t0: float = 0.0


class CustomState(_Strict):
    kind: Literal["custom"]
    hermite_coefficients: List[Tuple[float, float]] = Field(min_length=1, max_length=65)


StateSpec = Union[GaussianState, CoherentState, CustomState]


class GridOverrides(_Strict):
    n: Optional[int] = Field(default=None, ge=16)
    span: Optional[float] = Field(default=None, gt=0)


class RunConfig(_Strict):
    state: StateSpec = Field(discriminator="kind")
    b: Optional[float] = Field(default=None, gt=0)
    b_schedule: Optional[List[float]] = Field(default=None, min_length=1)
    grid: GridOverrides = GridOverrides()
    seed: int = Field(default=0, ge=0)
    samples: int = Field(default=100_000, ge=100)
    output: Optional[str] = None
    format: Literal["json", "csv"] = "json"

    def b_values(self) -> list[float]:
        if self.b_schedule is not None:
            if any(b <= 0 for b in self.b_schedule):
                raise ConfigError("b_schedule entries must be positive")
            return list(self.b_schedule)
        return [self.b if self.b is not None else 1.0]


class EPRConfig(_Strict):
    alpha1: float = Field(gt=0)
    alpha2: float = Field(gt=0)
    q0: float = 0.0
    P0: float = 0.0


class EntangledCoherentConfig(_Strict):
    m: int = Field(ge=0, le=64)
    n: int = Field(ge=0, le=64)
    alpha: Tuple[float, float] = (0.0, 0.0)
    beta: Tuple[float, float] = (0.0, 0.0)
    omega: float = Field(default=1.0, gt=0)
    t0: float = 0.0


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(f"{self.prog}: error: {message}")


def _load_document(path: str) -> dict:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"cannot parse {path}: {exc}") from exc
    if not isinstance(doc, dict):
        raise ConfigError(f"{path} must contain a mapping")
    return doc


def _float_list(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"not a comma-separated list of numbers: {text!r}") from exc


def _run_config(args) -> RunConfig:
    doc = _load_document(args.config) if args.config else {}
    if args.state:
        doc["state"] = _load_document(args.state)
    if "state" not in doc:
        raise ConfigError("a state is required (--state or a config file with a 'state' entry)")
    overrides = {"b": args.b, "b_schedule": args.b_schedule, "seed": getattr(args, "seed", None),
                 "samples": getattr(args, "samples", None), "output": args.out,
                 "format": getattr(args, "format", None)}
    for key, val in overrides.items():
        if val is not None:
            doc[key] = val
    grid = dict(doc.get("grid") or {})
    if args.grid_n is not None:
        grid["n"] = args.grid_n
    if args.grid_span is not None:
        grid["span"] = args.grid_span
    doc["grid"] = grid
    return RunConfig.model_validate(doc)


def _state(cfg: RunConfig):
    spec = cfg.state.model_dump()
    return build_state(spec, n_points=cfg.grid.n, half_span=cfg.grid.span), spec


def _emit(text: str, out: Optional[str]):
    if out:
        with open(out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def cmd_report(args) -> int:
    cfg = _run_config(args)
    b_values = cfg.b_values()
    wf, spec = _state(cfg)
    doc = rp.build_report(wf, spec, b_values)
    if cfg.format == "json":
        text = rp.to_json(doc)
    else:
        text = rp.to_csv(("section", "quantity", "b", "x", "value"), rp.report_rows(doc))
    _emit(text, cfg.output)
    return EXIT_OK if rp.report_passed(doc) else EXIT_NUMERIC


def cmd_figure(args) -> int:
    try:
        rows = rp.figure_rows(args.b_over_dq, args.dqdp)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    _emit(rp.to_csv(rp.FIGURE_HEADER, rows), args.out)
    return EXIT_OK


def cmd_sample(args) -> int:
    cfg = _run_config(args)
    if len(cfg.b_values()) != 1:
        raise ConfigError("sample takes a single b")
    if not cfg.output:
        raise ConfigError("sample needs --out for the samples CSV")
    b = cfg.b_values()[0]
    wf, _ = _state(cfg)
    joint = ak.joint_distribution(wf, b)
    samples = ak.sample_heterodyne(joint, cfg.samples, cfg.seed)
    est = ak.estimate_from_samples(samples, seed=cfg.seed)
    summary = rp.estimate_summary(est, ak.joint_moments(joint), b)
    summary_path = args.summary or str(Path(cfg.output).with_suffix(".summary.json"))
    _emit(rp.to_csv(("x1", "x2"), ((float(a), float(c)) for a, c in samples)), cfg.output)
    _emit(rp.to_json(summary), summary_path)
    return EXIT_OK


def cmd_composite(args) -> int:
    params = _load_document(args.params) if args.params else {}
    try:
        if args.kind == "epr":
            params = EPRConfig.model_validate(params or {"alpha1": 1.0, "alpha2": 1.0, "q0": 1.0}).model_dump()
        else:
            params = EntangledCoherentConfig.model_validate(params or {"m": 2, "n": 1}).model_dump()
            params["alpha"], params["beta"] = list(params["alpha"]), list(params["beta"])
    except ValidationError as exc:
        raise ConfigError(str(exc)) from exc
    doc = rp.composite_report(args.kind, params)
    _emit(rp.to_json(doc), args.out)
    return EXIT_OK if doc["passed"] else EXIT_NUMERIC


def _state_flags(p: argparse.ArgumentParser):
    p.add_argument("--config", help="YAML/JSON document matching RunConfig")
    p.add_argument("--state", help="YAML/JSON document with the state specification")
    p.add_argument("--b", type=float, help="apparatus balance parameter")
    p.add_argument("--b-schedule", type=_float_list, help="comma-separated b values")
    p.add_argument("--grid-n", type=int, help="grid points per axis")
    p.add_argument("--grid-span", type=float, help="grid half-span per axis")
    p.add_argument("--out", help="output path (default: stdout)")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="conjcorr", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("report", help="correlation report for one state")
    _state_flags(p)
    p.add_argument("--format", choices=("json", "csv"))
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("figure", help="slope-ratio sweep for Gaussian packets")
    p.add_argument("--b-over-dq", type=_float_list, default=[0.1, 0.5, 1.0, 2.0])
    p.add_argument("--dqdp", type=_float_list, default=[0.5, 0.75, 1.0, 2.0, 5.0])
    p.add_argument("--out")
    p.set_defaults(func=cmd_figure)

    p = sub.add_parser("sample", help="heterodyne Monte Carlo samples")
    _state_flags(p)
    p.add_argument("--samples", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--summary", help="summary JSON path (default: <out>.summary.json)")
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("composite", help="verify a two-mode product density")
    p.add_argument("--kind", required=True, choices=("epr", "entangled-coherent"))
    p.add_argument("--params", help="YAML/JSON document with the state parameters")
    p.add_argument("--out")
    p.set_defaults(func=cmd_composite)
    return parser


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        return args.func(args)
    except _UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_CONFIG
    except ValidationError as exc:
        print(f"invalid configuration:\n{exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalToleranceError as exc:
        print(f"numerical tolerance failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ConfigError, ValueError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
