"""Command-line front end.

    tripod-hom spectrum --config run.yaml --out spectrum.csv
    tripod-hom hom      --config run.yaml --out stats.json --oracle
    tripod-hom dip      --config run.yaml --out dip.csv --jobs 4
    tripod-hom sweep    --config run.yaml --out sweep.csv

Config files are YAML (JSON also parses). Command-line flags override the
file. Exit codes: 0 ok, 1 invalid config, 2 unphysical kernel, 3 oracle
disagreement, 4 partial sweep failure.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Optional

import numpy as np
import yaml

from .core import DimensionlessParams, UnitsConfig, format_float, make_grid, to_dimensionless
from .errors import (
    DegenerateKernelError,
    InsufficientModesError,
    InvalidParameterError,
    NonSymmetricKernelError,
    TripodHomError,
    UnphysicalKernelError,
)
from .interference import (
    DEFAULT_TRUNCATION_BOUND,
    MAX_ORACLE_MODES,
    TwoPhotonInput,
    analytic_statistics,
    delay_sweep,
    fock_oracle,
    hom_metrics,
    statistics_to_dict,
    write_sweep_csv,
)
from .kernel import (
    commutator_min_eigenvalue,
    kernel_fast_memory,
    kernel_gaussian_toy,
    kernel_ideal,
    load_kernel,
)
from .schmidt import (
    decompose,
    envelope_from_samples,
    gaussian_envelope,
    mode_envelope,
    schmidt_number,
    write_modes_csv,
    write_spectrum_csv,
)

log = logging.getLogger("tripod_hom")

EXIT_OK, EXIT_CONFIG, EXIT_UNPHYSICAL, EXIT_ORACLE, EXIT_PARTIAL = 0, 1, 2, 3, 4

SWEEP_PARAMETERS = ("L", "T_W", "sigma", "mu1")


class ConfigError(InvalidParameterError):
    pass


@dataclass(frozen=True)
class ExperimentConfig:
    kernel: dict
    grid_n: int = 64
    grid_rule: str = "gauss-legendre"
    units: Optional[UnitsConfig] = None
    dimensionless: Optional[DimensionlessParams] = None
    envelopes: tuple = ()
    mode_cutoff: Optional[int] = None
    schmidt_cutoff: float = 0.0
    truncation_bound: float = DEFAULT_TRUNCATION_BOUND
    sweep_parameter: Optional[str] = None
    sweep_values: tuple = ()
    output: Optional[str] = None
    modes_output: Optional[str] = None
    seed: int = 0
    oracle_tolerance: float = 1e-8
    base_dir: str = "."

    def __post_init__(self):
        if (self.units is None) == (self.dimensionless is None):
            raise ConfigError("config needs exactly one of 'units' or 'dimensionless'")

    @property
    def params(self) -> DimensionlessParams:
        return self.dimensionless if self.dimensionless is not None else to_dimensionless(self.units)

    def resolve(self, path: str) -> Path:
        p = Path(path)
        return p if p.is_absolute() else Path(self.base_dir) / p


def _require(mapping: dict, key: str, where: str):
    try:
        return mapping[key]
    except (KeyError, TypeError):
        raise ConfigError(f"{where}: missing required key {key!r}") from None


def parse_config(raw: dict, base_dir: str = ".") -> ExperimentConfig:
    if not isinstance(raw, dict):
        raise ConfigError("config must be a mapping")
    known = {"kernel", "grid", "units", "dimensionless", "envelopes", "mode_cutoff", "schmidt_cutoff",
             "truncation_bound", "sweep", "output", "seed", "oracle_tolerance"}
    unknown = set(raw) - known
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    kernel = dict(_require(raw, "kernel", "config"))
    if "kind" not in kernel:
        raise ConfigError("kernel: missing required key 'kind'")
    grid = raw.get("grid") or {}
    units = dimless = None
    try:
        if raw.get("units") is not None:
            units = UnitsConfig(**{k: float(v) for k, v in raw["units"].items()})
        if raw.get("dimensionless") is not None:
            dimless = DimensionlessParams(**{k: float(v) for k, v in raw["dimensionless"].items()})
    except (TypeError, ValueError, AttributeError) as exc:
        raise ConfigError(f"bad units/dimensionless block: {exc}") from None
    sweep = raw.get("sweep") or {}
    output = raw.get("output") or {}
    if isinstance(output, str):
        output = {"path": output}
    envelopes = raw.get("envelopes") or []
    for i, env in enumerate(envelopes):
        if not isinstance(env, dict) or "shape" not in env:
            raise ConfigError(f"envelopes[{i}]: needs a 'shape'")
        if env["shape"] == "sampled-file" and not Path(base_dir, _require(env, "path", f"envelopes[{i}]")).exists():
            raise ConfigError(f"envelopes[{i}]: sample file {env['path']!r} does not exist")
    return ExperimentConfig(
        kernel=kernel,
        grid_n=int(grid.get("n", 64)),
        grid_rule=grid.get("rule", "gauss-legendre"),
        units=units,
        dimensionless=dimless,
        envelopes=tuple(dict(e) for e in envelopes),
        mode_cutoff=raw.get("mode_cutoff"),
        schmidt_cutoff=float(raw.get("schmidt_cutoff", 0.0)),
        truncation_bound=float(raw.get("truncation_bound", DEFAULT_TRUNCATION_BOUND)),
        sweep_parameter=sweep.get("parameter"),
        sweep_values=tuple(float(v) for v in sweep.get("values", ())),
        output=output.get("path"),
        modes_output=output.get("modes"),
        seed=int(raw.get("seed", 0)),
        oracle_tolerance=float(raw.get("oracle_tolerance", 1e-8)),
        base_dir=str(base_dir),
    )


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    try:
        raw = yaml.safe_load(path.read_text())
    except (OSError, yaml.YAMLError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    return parse_config(raw, base_dir=str(path.parent))


# ---------- building blocks ----------

def build_kernel(config: ExperimentConfig):
    spec = config.kernel
    kind = spec["kind"]
    if kind == "external":
        return load_kernel(config.resolve(_require(spec, "path", "kernel")))
    params = config.params
    grid = make_grid(config.grid_n, params.T_W, config.grid_rule)
    if kind == "ideal":
        return kernel_ideal(grid)
    if kind == "gaussian-toy":
        return kernel_gaussian_toy(grid, float(_require(spec, "sigma", "kernel")), float(spec.get("mu1", 1.0)))
    if kind == "fast-memory":
        return kernel_fast_memory(grid, params.L, int(spec.get("nz", 64)))
    raise ConfigError(f"unknown kernel kind {kind!r}")


def build_envelope(spec: dict, dec, config: ExperimentConfig):
    shape = spec["shape"]
    if shape == "gaussian":
        return gaussian_envelope(dec.grid, float(_require(spec, "center", "envelope")),
                                 float(_require(spec, "width", "envelope")), float(spec.get("phase", 0.0)))
    if shape == "schmidt-mode-index":
        if "coefficients" in spec:
            coeffs = np.asarray(spec["coefficients"], dtype=float) + 1j * np.asarray(
                spec.get("imag", [0.0] * len(spec["coefficients"])), dtype=float)
            return mode_envelope(dec, coeffs)
        return mode_envelope(dec, int(_require(spec, "index", "envelope")))
    if shape == "sampled-file":
        data = np.loadtxt(config.resolve(spec["path"]), ndmin=2)
        samples = data[:, 0] + (1j * data[:, 1] if data.shape[1] > 1 else 0)
        return envelope_from_samples(dec.grid, samples)
    raise ConfigError(f"unknown envelope shape {shape!r}")


def build_input(config: ExperimentConfig, dec) -> TwoPhotonInput:
    specs = config.envelopes or ({"shape": "schmidt-mode-index", "index": 1},)
    if len(specs) == 1:
        specs = specs * 2
    env_1 = build_envelope(specs[0], dec, config)
    env_2 = build_envelope(specs[1], dec, config)
    return TwoPhotonInput(env_1, env_2, dec)


def _with_parameter(config: ExperimentConfig, name: str, value: float) -> ExperimentConfig:
    if name in ("sigma", "mu1"):
        return replace(config, kernel={**config.kernel, name: value})
    params = config.params
    new = DimensionlessParams(T_W=value if name == "T_W" else params.T_W, L=value if name == "L" else params.L)
    return replace(config, units=None, dimensionless=new)


# ---------- output helpers ----------

class _AtomicWriter:
    """Write to ``path.partial`` and move into place only on success."""

    def __init__(self, path):
        self.path = Path(path)
        self.partial = self.path.with_name(self.path.name + ".partial")

    def write(self, text: str):
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self.partial.write_text(text)
        os.replace(self.partial, self.path)


def _json(payload: dict) -> str:
    return json.dumps(payload, indent=2, sort_keys=True) + "\n"


def _out_path(args, config: ExperimentConfig, default: str) -> Path:
    if args.out:
        return Path(args.out)
    if config.output:
        return config.resolve(config.output)
    return Path(default)


def _map(func, items, jobs: int):
    items = list(items)
    if jobs <= 1 or len(items) <= 1:
        return [func(item) for item in items]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(func, items))


# ---------- subcommands ----------

def cmd_spectrum(config: ExperimentConfig, args) -> int:
    kernel = build_kernel(config)
    dec = decompose(kernel, config.schmidt_cutoff)
    out = _out_path(args, config, "spectrum.csv")
    buf = io.StringIO()
    write_spectrum_csv(dec, buf)
    lam = dec.eigenvalues
    summary = {
        "kernel": kernel.kind,
        "kernel_params": kernel.params,
        "n": kernel.n,
        "T_W": kernel.grid.T_W,
        "rule": kernel.grid.rule,
        "retained_count": dec.retained_count,
        "lambda_1": float(lam[0]),
        "lambda_2": float(lam[1]) if lam.size > 1 else 0.0,
        "schmidt_number": schmidt_number(dec),
        "commutator_min_eigenvalue": commutator_min_eigenvalue(kernel),
    }
    _AtomicWriter(out).write(buf.getvalue())
    _AtomicWriter(out.with_suffix(".summary.json")).write(_json(summary))
    if config.modes_output:
        modes = io.StringIO()
        write_modes_csv(dec, modes)
        _AtomicWriter(config.resolve(config.modes_output)).write(modes.getvalue())
    log.info("spectrum: lambda_1=%s schmidt_number=%s -> %s", lam[0], summary["schmidt_number"], out)
    return EXIT_OK


def cmd_hom(config: ExperimentConfig, args) -> int:
    kernel = build_kernel(config)
    dec = decompose(kernel, config.schmidt_cutoff)
    inp = build_input(config, dec)
    stats = analytic_statistics(inp, config.mode_cutoff, config.truncation_bound)
    metrics = hom_metrics(stats)
    payload = statistics_to_dict(stats, metrics)
    payload["mode_cutoff"] = stats.mode_cutoff
    payload["truncation_weight"] = stats.truncation_weight
    payload["seed"] = config.seed
    code = EXIT_OK
    if args.oracle:
        K = stats.mode_cutoff
        if K > MAX_ORACLE_MODES:
            raise ConfigError(f"--oracle needs mode_cutoff <= {MAX_ORACLE_MODES}, got {K}")
        deviation = stats.max_deviation(fock_oracle(inp, K))
        payload["oracle"] = {"max_deviation": deviation, "tolerance": config.oracle_tolerance}
        if deviation > config.oracle_tolerance:
            log.error("oracle disagreement %.3g exceeds %.3g", deviation, config.oracle_tolerance)
            code = EXIT_ORACLE
    _AtomicWriter(_out_path(args, config, "hom.json")).write(_json(payload))
    return code


def _dip_point(job):
    config, delay = job
    dec = decompose(build_kernel(config), config.schmidt_cutoff)
    inp = build_input(config, dec)
    return delay_sweep(dec, inp.envelope_1, [delay], config.mode_cutoff, config.truncation_bound)[0]


def cmd_dip(config: ExperimentConfig, args) -> int:
    if config.sweep_parameter != "delay":
        raise ConfigError("dip needs sweep.parameter = 'delay'")
    if args.jobs > 1:
        points = _map(_dip_point, [(config, d) for d in config.sweep_values], args.jobs)
    else:
        dec = decompose(build_kernel(config), config.schmidt_cutoff)
        base = build_input(config, dec).envelope_1
        points = delay_sweep(dec, base, config.sweep_values, config.mode_cutoff, config.truncation_bound)
    buf = io.StringIO()
    write_sweep_csv(points, buf)
    _AtomicWriter(_out_path(args, config, "dip.csv")).write(buf.getvalue())
    return EXIT_OK


SWEEP_COLUMNS = ("parameter", "value", "lambda_1", "lambda_2", "schmidt_number",
                 "total_efficiency", "noon_fidelity", "status")


def _sweep_point(job):
    config, name, value = job
    row = {"parameter": name, "value": value}
    try:
        point = _with_parameter(config, name, value)
        dec = decompose(build_kernel(point), point.schmidt_cutoff)
        lam = dec.eigenvalues
        metrics = hom_metrics(analytic_statistics(build_input(point, dec), point.mode_cutoff,
                                                  point.truncation_bound))
        row.update(lambda_1=lam[0], lambda_2=lam[1] if lam.size > 1 else 0.0,
                   schmidt_number=schmidt_number(dec), total_efficiency=metrics.total_efficiency,
                   noon_fidelity=metrics.noon_fidelity, status="ok")
    except (UnphysicalKernelError, DegenerateKernelError, InsufficientModesError, InvalidParameterError) as exc:
        row["status"] = f"{type(exc).__name__}: {exc}"
    return row


def cmd_sweep(config: ExperimentConfig, args) -> int:
    name = config.sweep_parameter
    if name not in SWEEP_PARAMETERS:
        raise ConfigError(f"sweep.parameter must be one of {SWEEP_PARAMETERS}, got {name!r}")
    if name in ("sigma", "mu1") and config.kernel["kind"] != "gaussian-toy":
        raise ConfigError(f"sweeping {name} needs a gaussian-toy kernel")
    rows = _map(_sweep_point, [(config, name, v) for v in config.sweep_values], args.jobs)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(SWEEP_COLUMNS)
    for row in rows:
        writer.writerow([row.get(c) if c in ("parameter", "status") else
                         ("" if row.get(c) is None else format_float(row[c])) for c in SWEEP_COLUMNS])
    _AtomicWriter(_out_path(args, config, "sweep.csv")).write(buf.getvalue())
    failed = [r for r in rows if r["status"] != "ok"]
    for r in failed:
        log.error("%s=%s failed: %s", r["parameter"], r["value"], r["status"])
    return EXIT_PARTIAL if failed else EXIT_OK


COMMANDS = {"spectrum": cmd_spectrum, "hom": cmd_hom, "dip": cmd_dip, "sweep": cmd_sweep}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="tripod-hom", description=__doc__.split("\n")[0])
    parser.add_argument("command", choices=sorted(COMMANDS))
    parser.add_argument("--config", required=True, help="YAML/JSON experiment config")
    parser.add_argument("--out", help="output path (overrides output.path)")
    parser.add_argument("--jobs", type=int, default=1, help="parallel workers for sweeps")
    parser.add_argument("--oracle", action="store_true", help="hom: cross-check with the Fock-space oracle")
    parser.add_argument("--seed", type=int, help="random seed recorded with the run")
    parser.add_argument("-v", "--verbose", action="store_true")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        config = load_config(args.config)
        if args.seed is not None:
            config = replace(config, seed=args.seed)
        return COMMANDS[args.command](config, args)
    except InsufficientModesError as exc:
        print(f"error: insufficient modes (truncation weight {exc.truncation_weight:.6g}): {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (UnphysicalKernelError, DegenerateKernelError) as exc:
        print(f"error: physicality violated: {exc}", file=sys.stderr)
        return EXIT_UNPHYSICAL
    except (InvalidParameterError, NonSymmetricKernelError, TripodHomError) as exc:
        print(f"error: invalid config: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
