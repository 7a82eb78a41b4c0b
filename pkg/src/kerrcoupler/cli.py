"""Command-line front end: single runs, 1-D parameter sweeps, event detection.

Configuration comes from a plain key=value text file plus command-line
overrides (flags mirror the parameter names). Every output file starts with
`# key=value` comment lines echoing the fully resolved configuration.

Exit codes: 0 success, 1 configuration error, 2 numerical abort, 3 I/O or
file-format error.
"""

from __future__ import annotations

import argparse
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from . import __version__
from .analysis import DetectorConfig, detect_birth_events, detect_death_intervals, write_event_csv
from .entanglement import bell_state_vector
from .hilbert import DensityMatrix, HilbertSpec, basis_state
from .master_eq import (
    CsvFormatError,
    IntegrationError,
    IntegratorConfig,
    evolve,
    read_trajectory_csv,
    write_trajectory_csv,
)
from .model import CouplerParams, build_model

WORKERS_ENV = "KERRCOUPLER_WORKERS"

SWEEPABLE = ("nbar_a", "nbar_b", "alpha", "gamma_a", "gamma_b", "epsilon")

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_NUMERICAL = 2
EXIT_IO = 3


class ConfigError(ValueError):
    """Invalid run configuration (bad flag, bad file, bad value)."""


@dataclass(frozen=True)
class RunConfig:
    params: CouplerParams
    spec: HilbertSpec
    integ: IntegratorConfig
    init: str = "B1"
    out: str | None = None
    figure: str | None = None
    time_scale: str = "raw"      # "raw" or "chi" (t column multiplied by chi_a)

    @property
    def scale_factor(self) -> float:
        return self.params.chi_a if self.time_scale == "chi" else 1.0


@dataclass(frozen=True)
class SweepConfig:
    run: RunConfig
    param: str
    start: float
    stop: float
    steps: int

    def __post_init__(self):
        if self.param not in SWEEPABLE:
            raise ConfigError(f"cannot sweep {self.param!r}; choose one of {SWEEPABLE}")
        if self.steps < 2:
            raise ConfigError("a sweep needs at least 2 steps")
        if not self.start <= self.stop:
            raise ConfigError("sweep range must satisfy from <= to")

    def values(self) -> np.ndarray:
        return np.linspace(self.start, self.stop, self.steps)


# ---------------------------------------------------------------------------
# configuration plumbing

_DEFAULTS = {
    "chi_a": 25.0, "chi_b": 25.0,
    "epsilon_re": np.pi / 25.0, "epsilon_im": 0.0,
    "alpha_re": 0.0, "alpha_im": 0.0,
    "gamma_a": 0.0, "gamma_b": 0.0,
    "nbar_a": 0.0, "nbar_b": 0.0,
    "dims": "10,10",
    "dt": 1e-3, "tmax": 25.0, "record_every": 100,
    "trace_drift_tol": 1e-8, "dt_halvings": 2,
    "init": "B1", "time_scale": "raw",
}

_FLOAT_KEYS = {"chi_a", "chi_b", "epsilon_re", "epsilon_im", "alpha_re", "alpha_im",
               "gamma_a", "gamma_b", "nbar_a", "nbar_b", "dt", "tmax", "trace_drift_tol"}
_INT_KEYS = {"record_every", "dt_halvings"}


def read_config_file(path) -> dict[str, str]:
    """Parse `key=value` lines; blank lines and # comments are skipped."""
    values: dict[str, str] = {}
    try:
        with open(path, "r", encoding="utf-8") as fh:
            for line_no, raw in enumerate(fh, start=1):
                line = raw.strip()
                if not line or line.startswith("#"):
                    continue
                if "=" not in line:
                    raise ConfigError(f"{path}:{line_no}: expected key=value, got {line!r}")
                key, _, val = line.partition("=")
                values[key.strip()] = val.strip()
    except OSError as err:
        raise ConfigError(f"cannot read config file {path}: {err}") from None
    return values


def _coerce(key: str, raw) -> object:
    try:
        if key in _FLOAT_KEYS:
            return float(raw)
        if key in _INT_KEYS:
            return int(raw)
    except (TypeError, ValueError):
        raise ConfigError(f"invalid value for {key}: {raw!r}") from None
    return raw


def resolve_run_config(file_values: dict, overrides: dict,
                       out=None, figure=None) -> RunConfig:
    """Merge defaults < config file < CLI overrides into a RunConfig."""
    merged = dict(_DEFAULTS)
    for key, val in file_values.items():
        if key in ("out", "figure"):
            continue
        if key not in merged:
            raise ConfigError(f"unknown configuration key {key!r}")
        merged[key] = _coerce(key, val)
    for key, val in overrides.items():
        if val is not None:
            merged[key] = _coerce(key, val)
    out = out if out is not None else file_values.get("out")
    figure = figure if figure is not None else file_values.get("figure")

    dims = str(merged["dims"]).split(",")
    if len(dims) != 2:
        raise ConfigError(f"dims must be 'A,B', got {merged['dims']!r}")
    try:
        spec = HilbertSpec(int(dims[0]), int(dims[1]))
    except ValueError as err:
        raise ConfigError(str(err)) from None

    if merged["time_scale"] not in ("raw", "chi"):
        raise ConfigError(f"time-scale must be 'raw' or 'chi', got {merged['time_scale']!r}")

    try:
        params = CouplerParams(
            chi_a=merged["chi_a"], chi_b=merged["chi_b"],
            epsilon=complex(merged["epsilon_re"], merged["epsilon_im"]),
            alpha=complex(merged["alpha_re"], merged["alpha_im"]),
            gamma_a=merged["gamma_a"], gamma_b=merged["gamma_b"],
            nbar_a=merged["nbar_a"], nbar_b=merged["nbar_b"],
        )
        integ = IntegratorConfig(
            dt=merged["dt"], t_max=merged["tmax"],
            record_every=merged["record_every"],
            trace_drift_tol=merged["trace_drift_tol"],
            dt_halvings=merged["dt_halvings"],
        )
    except ValueError as err:
        raise ConfigError(str(err)) from None

    return RunConfig(params=params, spec=spec, integ=integ,
                     init=str(merged["init"]), out=out, figure=figure,
                     time_scale=str(merged["time_scale"]))


def resolve_initial_state(init: str, spec: HilbertSpec) -> DensityMatrix:
    """Named initial state: B1 | B2 | fock(NA,NB) | file:PATH."""
    if init in ("B1", "B2"):
        vec = bell_state_vector(init, spec)
        return DensityMatrix(np.outer(vec, vec.conj()), spec)
    if init.startswith("fock(") and init.endswith(")"):
        body = init[len("fock("):-1]
        parts = body.split(",")
        if len(parts) != 2:
            raise ConfigError(f"expected fock(NA,NB), got {init!r}")
        try:
            na, nb = int(parts[0]), int(parts[1])
        except ValueError:
            raise ConfigError(f"expected integer Fock indices in {init!r}") from None
        try:
            rho, _ = basis_state(na, nb, spec)
        except ValueError as err:
            raise ConfigError(str(err)) from None
        return rho
    if init.startswith("file:"):
        path = init[len("file:"):]
        if not os.path.exists(path):
            raise ConfigError(f"initial-state file not found: {path}")
        try:
            data = np.load(path)
        except Exception as err:
            raise ConfigError(f"cannot load initial state from {path}: {err}") from None
        data = np.asarray(data, dtype=complex)
        if data.ndim == 1:
            if data.shape[0] != spec.total_dim:
                raise ConfigError(f"state vector length {data.shape[0]} != {spec.total_dim}")
            norm = np.linalg.norm(data)
            if norm == 0:
                raise ConfigError("state vector is zero")
            vec = data / norm
            return DensityMatrix(np.outer(vec, vec.conj()), spec)
        if data.ndim == 2:
            if data.shape != (spec.total_dim, spec.total_dim):
                raise ConfigError(f"density matrix shape {data.shape} != "
                                  f"({spec.total_dim}, {spec.total_dim})")
            tr = np.trace(data).real
            if tr <= 0:
                raise ConfigError("density matrix has nonpositive trace")
            rho = DensityMatrix(data / tr, spec)
            try:
                rho.validate()
            except ValueError as err:
                raise ConfigError(f"invalid density matrix in {path}: {err}") from None
            return rho
        raise ConfigError(f"initial-state array must be 1-d or 2-d, got ndim={data.ndim}")
    raise ConfigError(f"unknown initial state {init!r}; use B1, B2, fock(NA,NB) or file:PATH")


def config_echo(cfg: RunConfig, command: str, **extra) -> dict[str, str]:
    p, integ = cfg.params, cfg.integ

    def fmt(v):
        return repr(v) if isinstance(v, float) else str(v)   # shortest exact form

    echo = {
        "generator": f"kerrcoupler {__version__}",
        "command": command,
        "chi_a": fmt(p.chi_a), "chi_b": fmt(p.chi_b),
        "epsilon_re": fmt(p.epsilon.real), "epsilon_im": fmt(p.epsilon.imag),
        "alpha_re": fmt(p.alpha.real), "alpha_im": fmt(p.alpha.imag),
        "gamma_a": fmt(p.gamma_a), "gamma_b": fmt(p.gamma_b),
        "nbar_a": fmt(p.nbar_a), "nbar_b": fmt(p.nbar_b),
        "dim_a": str(cfg.spec.dim_a), "dim_b": str(cfg.spec.dim_b),
        "dt": fmt(integ.dt), "tmax": fmt(integ.t_max),
        "record_every": str(integ.record_every),
        "trace_drift_tol": fmt(integ.trace_drift_tol),
        "dt_halvings": str(integ.dt_halvings),
        "init": cfg.init, "time_scale": cfg.time_scale,
    }
    echo.update({k: fmt(v) if isinstance(v, float) else str(v) for k, v in extra.items()})
    return echo


def sample_times(integ: IntegratorConfig) -> np.ndarray:
    """The time grid evolve() samples on, without running the integration."""
    n_steps = int(round(integ.t_max / integ.dt))
    steps = list(range(0, n_steps + 1, integ.record_every))
    if steps[-1] != n_steps:
        steps.append(n_steps)
    return np.array([s * integ.dt for s in steps])


# ---------------------------------------------------------------------------
# subcommands

def cmd_simulate(cfg: RunConfig) -> int:
    if cfg.out is None:
        raise ConfigError("simulate requires an output path (--out)")
    rho0 = resolve_initial_state(cfg.init, cfg.spec)
    model = build_model(cfg.params, cfg.spec)
    traj = evolve(rho0, model, cfg.integ)
    echo = config_echo(cfg, "simulate")
    try:
        write_trajectory_csv(traj, cfg.out, echo=echo, time_scale=cfg.scale_factor)
    except OSError as err:
        raise _io_error(cfg.out, err)
    try:
        n_deaths = str(len(detect_death_intervals(traj)))
    except ValueError:
        n_deaths = "n/a (sampling coarser than default min_duration)"
    print(f"wrote {cfg.out}: {len(traj)} samples, final trace {traj.trace[-1]:.10f}, "
          f"max concurrence {traj.concurrence.max():.6f}, "
          f"{n_deaths} death interval(s)")
    if not traj.truncation_ok():
        print("warning: top Fock-level population exceeded 1e-05; "
              "truncation may be inadequate", file=sys.stderr)
    if cfg.figure:
        from .plotting import render_trajectory
        render_trajectory(traj, cfg.figure)
        print(f"wrote {cfg.figure}")
    return EXIT_OK


def _sweep_point(task) -> tuple[int, np.ndarray | None, str | None]:
    idx, param, value, cfg = task
    if param in ("alpha", "epsilon"):
        params = replace(cfg.params, **{param: complex(value, 0.0)})
    else:
        params = replace(cfg.params, **{param: float(value)})
    rho0 = resolve_initial_state(cfg.init, cfg.spec)
    model = build_model(params, cfg.spec)
    try:
        traj = evolve(rho0, model, cfg.integ)
    except IntegrationError as err:
        return idx, None, str(err)
    return idx, traj.concurrence, None


def worker_count() -> int:
    raw = os.environ.get(WORKERS_ENV)
    if raw is None:
        return os.cpu_count() or 1
    try:
        n = int(raw)
    except ValueError:
        raise ConfigError(f"{WORKERS_ENV} must be an integer >= 1, got {raw!r}") from None
    if n < 1:
        raise ConfigError(f"{WORKERS_ENV} must be >= 1, got {n}")
    return n


def cmd_sweep(sweep: SweepConfig) -> int:
    cfg = sweep.run
    if cfg.out is None:
        raise ConfigError("sweep requires an output path (--out)")
    resolve_initial_state(cfg.init, cfg.spec)   # fail early on bad config
    values = sweep.values()
    times = sample_times(cfg.integ)
    tasks = [(i, sweep.param, float(v), cfg) for i, v in enumerate(values)]

    workers = min(worker_count(), len(tasks))
    if workers <= 1:
        outcomes = [_sweep_point(t) for t in tasks]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(_sweep_point, tasks))
    results: list[np.ndarray | None] = [None] * len(values)
    failures: list[str | None] = [None] * len(values)
    for idx, conc, err in outcomes:
        results[idx] = conc
        failures[idx] = err

    scale = cfg.scale_factor
    echo = config_echo(cfg, "sweep", param=sweep.param,
                       sweep_from=sweep.start, sweep_to=sweep.stop,
                       sweep_steps=sweep.steps)
    try:
        with open(cfg.out, "w", encoding="utf-8", newline="") as fh:
            for key, val in echo.items():
                fh.write(f"# {key}={val}\n")
            fh.write("param_value,t,concurrence\n")
            for value, conc in zip(values, results):
                col = conc if conc is not None else np.full(len(times), np.nan)
                for t, c in zip(times, col):
                    fh.write(f"{value:.17g},{t * scale:.17g},{c:.17g}\n")
    except OSError as err:
        raise _io_error(cfg.out, err)

    n_failed = sum(1 for f in failures if f is not None)
    for value, err in zip(values, failures):
        if err is not None:
            print(f"warning: {sweep.param}={value:g} failed ({err}); marked NaN",
                  file=sys.stderr)
    print(f"wrote {cfg.out}: {len(values)} grid points, {n_failed} failed")
    if cfg.figure:
        from .plotting import render_sweep_map
        cmap = np.array([r if r is not None else np.full(len(times), np.nan)
                         for r in results])
        render_sweep_map(values, times * scale, cmap, cfg.figure,
                         param_name=sweep.param)
        print(f"wrote {cfg.figure}")
    return EXIT_OK


def cmd_detect(input_path: str, det: DetectorConfig, out: str,
               figure: str | None = None) -> int:
    try:
        traj, _echo = read_trajectory_csv(input_path)
    except OSError as err:
        raise _io_error(input_path, err)
    try:
        intervals = detect_death_intervals(traj, det)
        births = detect_birth_events(intervals, traj, det)
    except ValueError as err:
        raise ConfigError(str(err)) from None
    echo = {
        "generator": f"kerrcoupler {__version__}",
        "command": "detect",
        "input": str(input_path),
        "eps": f"{det.eps:.17g}",
        "min_duration": f"{det.min_duration:.17g}",
    }
    try:
        write_event_csv(intervals, traj, out, cfg=det, echo=echo)
    except OSError as err:
        raise _io_error(out, err)
    if not intervals:
        print("no death intervals")
    for iv in intervals:
        revive = next((b for b in births if b > iv.t_end), None)
        tail = f", birth at t={revive:g}" if revive is not None else ", no birth"
        print(f"death interval [{iv.t_start:g}, {iv.t_end:g}] "
              f"duration {iv.duration:g}{tail}")
    print(f"wrote {out}")
    if figure:
        from .plotting import render_events
        render_events(traj, intervals, births, figure)
        print(f"wrote {figure}")
    return EXIT_OK


def _io_error(path, err) -> OSError:
    return OSError(f"cannot write/read {path}: {err}")


# ---------------------------------------------------------------------------
# argument parsing

class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(message)


def _add_run_flags(p: argparse.ArgumentParser):
    p.add_argument("--config", help="key=value configuration file")
    p.add_argument("--chi-a", dest="chi_a", type=float)
    p.add_argument("--chi-b", dest="chi_b", type=float)
    p.add_argument("--epsilon-re", dest="epsilon_re", type=float)
    p.add_argument("--epsilon-im", dest="epsilon_im", type=float)
    p.add_argument("--alpha-re", dest="alpha_re", type=float)
    p.add_argument("--alpha-im", dest="alpha_im", type=float)
    p.add_argument("--gamma-a", dest="gamma_a", type=float)
    p.add_argument("--gamma-b", dest="gamma_b", type=float)
    p.add_argument("--nbar-a", dest="nbar_a", type=float)
    p.add_argument("--nbar-b", dest="nbar_b", type=float)
    p.add_argument("--dims", dest="dims", help="Fock truncation 'A,B'")
    p.add_argument("--dt", dest="dt", type=float)
    p.add_argument("--tmax", dest="tmax", type=float)
    p.add_argument("--record-every", dest="record_every", type=int)
    p.add_argument("--trace-drift-tol", dest="trace_drift_tol", type=float)
    p.add_argument("--dt-halvings", dest="dt_halvings", type=int)
    p.add_argument("--init", dest="init", help="B1 | B2 | fock(NA,NB) | file:PATH")
    p.add_argument("--time-scale", dest="time_scale", choices=("raw", "chi"))
    p.add_argument("--out", dest="out", help="output CSV path")
    p.add_argument("--figure", dest="figure", help="also render a figure to this path")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="kerrcoupler",
                     description="Damped Kerr-coupler entanglement dynamics")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_sim = sub.add_parser("simulate", help="run one trajectory and write its CSV")
    _add_run_flags(p_sim)

    p_sweep = sub.add_parser("sweep", help="run a 1-D parameter sweep (long-format CSV)")
    _add_run_flags(p_sweep)
    p_sweep.add_argument("--param", required=True, choices=SWEEPABLE)
    p_sweep.add_argument("--from", dest="sweep_from", type=float, required=True)
    p_sweep.add_argument("--to", dest="sweep_to", type=float, required=True)
    p_sweep.add_argument("--steps", dest="sweep_steps", type=int, required=True)

    p_det = sub.add_parser("detect", help="detect death intervals in a trajectory CSV")
    p_det.add_argument("input", help="trajectory CSV from simulate")
    p_det.add_argument("--eps", type=float, default=DetectorConfig().eps)
    p_det.add_argument("--min-duration", dest="min_duration", type=float,
                       default=DetectorConfig().min_duration)
    p_det.add_argument("--out", dest="out", required=True)
    p_det.add_argument("--figure", dest="figure")
    return parser


_RUN_KEYS = ("chi_a", "chi_b", "epsilon_re", "epsilon_im", "alpha_re", "alpha_im",
             "gamma_a", "gamma_b", "nbar_a", "nbar_b", "dims", "dt", "tmax",
             "record_every", "trace_drift_tol", "dt_halvings", "init", "time_scale")


def _run_config_from_args(args) -> RunConfig:
    file_values = read_config_file(args.config) if args.config else {}
    overrides = {k: getattr(args, k) for k in _RUN_KEYS}
    return resolve_run_config(file_values, overrides, out=args.out, figure=args.figure)


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command == "simulate":
            return cmd_simulate(_run_config_from_args(args))
        if args.command == "sweep":
            cfg = _run_config_from_args(args)
            return cmd_sweep(SweepConfig(run=cfg, param=args.param,
                                         start=args.sweep_from, stop=args.sweep_to,
                                         steps=args.sweep_steps))
        if args.command == "detect":
            try:
                det = DetectorConfig(eps=args.eps, min_duration=args.min_duration)
            except ValueError as err:
                raise ConfigError(str(err)) from None
            return cmd_detect(args.input, det, args.out, figure=args.figure)
        raise ConfigError(f"unknown command {args.command!r}")
    except ConfigError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_CONFIG
    except IntegrationError as err:
        print(f"numerical abort: {err}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (CsvFormatError, OSError) as err:
        print(f"i/o error: {err}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
