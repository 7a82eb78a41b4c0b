"""Fixed-step RK4 integration of the Lindblad master equation.

The equation of motion is

    drho/dt = -i [H, rho] + sum_k ( C_k rho C_k† - 1/2 {C_k† C_k, rho} )

with H and the collapse operators C_k taken from a ModelOperators bundle.
`lindblad_rhs` evaluates the right-hand side directly on a matrix; `evolve`
compiles the same generator once into a sparse superoperator on vec(rho)
and steps it with classical RK4, re-Hermitizing after every step and
aborting if the trace drifts. The two paths agree to rounding and are
pinned together by the test suite.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .entanglement import bell_state_vector, concurrence
from .hilbert import DensityMatrix, HilbertSpec
from .model import ModelOperators

TRAJECTORY_COLUMNS = (
    "t", "concurrence", "fid_B1", "fid_B2", "fid_B3",
    "trace", "purity", "mean_na", "mean_nb",
)

# Marginal population of the topmost Fock level above which a run is flagged
# as truncation-limited.
TRUNCATION_TOL = 1e-5


class IntegrationError(RuntimeError):
    """Numerical abort of a master-equation integration."""


class TraceDriftError(IntegrationError):
    def __init__(self, t: float, drift: float, tol: float):
        super().__init__(f"trace drift {drift:.3e} exceeds {tol:.3e} at t={t:.6g} "
                         "(step too large or model inconsistent)")
        self.t = t
        self.drift = drift


class NonFiniteStateError(IntegrationError):
    def __init__(self, t: float):
        super().__init__(f"non-finite entries in the state at t={t:.6g}")
        self.t = t


class CsvFormatError(ValueError):
    def __init__(self, line_number: int, message: str):
        super().__init__(f"line {line_number}: {message}")
        self.line_number = line_number


@dataclass(frozen=True)
class IntegratorConfig:
    """Fixed-step integration controls."""

    dt: float = 1e-3
    t_max: float = 25.0
    record_every: int = 100        # steps between trajectory samples
    trace_drift_tol: float = 1e-8
    dt_halvings: int = 2           # automatic retries with dt/2 if the trace monitor trips
    store_states: bool = False

    def __post_init__(self):
        if self.dt <= 0 or self.t_max <= 0:
            raise ValueError("dt and t_max must be positive")
        if self.dt >= self.t_max:
            raise ValueError("dt must be smaller than t_max")
        if self.record_every < 1:
            raise ValueError("record_every must be at least 1")
        if self.trace_drift_tol <= 0:
            raise ValueError("trace_drift_tol must be positive")
        if self.dt_halvings < 0:
            raise ValueError("dt_halvings must be nonnegative")


@dataclass
class Trajectory:
    """Sampled observables of one integration run (lean mode by default)."""

    times: np.ndarray
    concurrence: np.ndarray
    fid_b1: np.ndarray
    fid_b2: np.ndarray
    fid_b3: np.ndarray
    trace: np.ndarray
    purity: np.ndarray
    mean_na: np.ndarray
    mean_nb: np.ndarray
    top_pop_a: np.ndarray | None = None
    top_pop_b: np.ndarray | None = None
    extras: dict[str, np.ndarray] = field(default_factory=dict)
    states: list[DensityMatrix] | None = None
    spec: HilbertSpec | None = None
    dt_used: float | None = None

    def __len__(self) -> int:
        return len(self.times)

    def truncation_ok(self, tol: float = TRUNCATION_TOL) -> bool:
        """True when the top Fock level of both modes stays below `tol`."""
        if self.top_pop_a is None or self.top_pop_b is None:
            raise ValueError("trajectory carries no top-level populations")
        return bool(self.top_pop_a.max() < tol and self.top_pop_b.max() < tol)


@dataclass(frozen=True)
class ConvergenceReport:
    """Sup-norm concurrence deviation between a dt run and a dt/2 run."""

    deviation: float
    tol: float
    dt_coarse: float
    dt_fine: float

    @property
    def converged(self) -> bool:
        return self.deviation < self.tol


def lindblad_rhs(rho: DensityMatrix | np.ndarray, model: ModelOperators) -> np.ndarray:
    """Right-hand side of the master equation evaluated on a density matrix."""
    r = rho.entries if isinstance(rho, DensityMatrix) else np.asarray(rho, dtype=complex)
    h = model.hamiltonian.entries
    if r.shape != h.shape:
        raise ValueError(f"state shape {r.shape} does not match operators {h.shape}")
    out = -1j * (h @ r - r @ h)
    for op in model.collapse_ops:
        c = op.entries
        cd = c.conj().T
        cdc = cd @ c
        out += c @ r @ cd - 0.5 * (cdc @ r + r @ cdc)
    return out


def liouvillian_matrix(model: ModelOperators) -> sp.csr_matrix:
    """Sparse generator on vec(rho) (row-major), same map as lindblad_rhs."""
    n = model.spec.total_dim
    if model.hamiltonian.dim != n:
        raise ValueError("hamiltonian dimension does not match the Hilbert spec")
    ident = sp.identity(n, format="csr", dtype=complex)
    h = sp.csr_matrix(model.hamiltonian.entries)
    gen = -1j * (sp.kron(h, ident) - sp.kron(ident, h.T))
    for op in model.collapse_ops:
        c = sp.csr_matrix(op.entries)
        cdc = (c.conj().T @ c).tocsr()
        gen = gen + sp.kron(c, c.conj()) - 0.5 * (sp.kron(cdc, ident) + sp.kron(ident, cdc.T))
    return gen.tocsr()


def _integrate(rho0: DensityMatrix, gen: sp.csr_matrix,
               dt: float, record_every: int, cfg: IntegratorConfig,
               observers) -> Trajectory:
    spec = rho0.spec
    n = spec.total_dim
    n_steps = int(round(cfg.t_max / dt))
    if n_steps < 1:
        raise ValueError("t_max shorter than one step")

    b1 = bell_state_vector("B1", spec)
    b2 = bell_state_vector("B2", spec)
    b3 = bell_state_vector("B3", spec)
    qubit_idx = np.array([spec.flatten(na, nb) for na in (0, 2) for nb in (0, 2)])
    na_diag = np.repeat(np.arange(spec.dim_a), spec.dim_b).astype(float)
    nb_diag = np.tile(np.arange(spec.dim_b), spec.dim_a).astype(float)

    samples: dict[str, list] = {k: [] for k in (
        "t", "concurrence", "fid_b1", "fid_b2", "fid_b3",
        "trace", "purity", "mean_na", "mean_nb", "top_pop_a", "top_pop_b",
    )}
    extra_samples: dict[str, list] = {}
    states: list[DensityMatrix] | None = [] if cfg.store_states else None

    def record(t: float, x: np.ndarray):
        if not np.all(np.isfinite(x.view(np.float64))):
            raise NonFiniteStateError(t)
        r = x.reshape(n, n)
        diag = np.real(np.diag(r))
        block = r[np.ix_(qubit_idx, qubit_idx)]
        samples["t"].append(t)
        try:
            samples["concurrence"].append(concurrence(block))
        except ValueError as err:
            # non-PSD block = integrator damage; let the dt-halving retry see it
            raise IntegrationError(f"at t={t:.6g}: {err}") from None
        samples["fid_b1"].append(float(np.real(b1.conj() @ r @ b1)))
        samples["fid_b2"].append(float(np.real(b2.conj() @ r @ b2)))
        samples["fid_b3"].append(float(np.real(b3.conj() @ r @ b3)))
        samples["trace"].append(float(diag.sum()))
        samples["purity"].append(float(np.sum(np.abs(r) ** 2)))
        samples["mean_na"].append(float(na_diag @ diag))
        samples["mean_nb"].append(float(nb_diag @ diag))
        marg = diag.reshape(spec.dim_a, spec.dim_b)
        samples["top_pop_a"].append(float(marg[-1, :].sum()))
        samples["top_pop_b"].append(float(marg[:, -1].sum()))
        for obs in observers:
            for key, val in obs(t, r).items():
                extra_samples.setdefault(key, []).append(float(val))
        if states is not None:
            states.append(DensityMatrix(r.copy(), spec))

    x = rho0.entries.astype(complex).reshape(-1).copy()
    record(0.0, x)

    half = 0.5 * dt
    sixth = dt / 6.0
    diag_stride = slice(0, n * n, n + 1)
    for step in range(1, n_steps + 1):
        k1 = gen @ x
        k2 = gen @ (x + half * k1)
        k3 = gen @ (x + half * k2)
        k4 = gen @ (x + dt * k3)
        x = x + sixth * (k1 + 2.0 * (k2 + k3) + k4)
        r = x.reshape(n, n)
        x = (0.5 * (r + r.conj().T)).reshape(-1)

        t = step * dt
        tr = x[diag_stride].sum().real
        if not abs(tr - 1.0) <= cfg.trace_drift_tol:
            raise TraceDriftError(t, abs(tr - 1.0), cfg.trace_drift_tol)
        if step % record_every == 0 or step == n_steps:
            record(t, x)

    return Trajectory(
        times=np.array(samples["t"]),
        concurrence=np.array(samples["concurrence"]),
        fid_b1=np.array(samples["fid_b1"]),
        fid_b2=np.array(samples["fid_b2"]),
        fid_b3=np.array(samples["fid_b3"]),
        trace=np.array(samples["trace"]),
        purity=np.array(samples["purity"]),
        mean_na=np.array(samples["mean_na"]),
        mean_nb=np.array(samples["mean_nb"]),
        top_pop_a=np.array(samples["top_pop_a"]),
        top_pop_b=np.array(samples["top_pop_b"]),
        extras={k: np.array(v) for k, v in extra_samples.items()},
        states=states,
        spec=spec,
        dt_used=dt,
    )


def evolve(rho0: DensityMatrix, model: ModelOperators, cfg: IntegratorConfig,
           observers=()) -> Trajectory:
    """Integrate the master equation, sampling observables along the way.

    Classical RK4 with fixed step cfg.dt; the state is re-Hermitized after
    every step. If the trace monitor trips, the run restarts with dt/2 (and
    doubled record_every, so sample times are unchanged) up to
    cfg.dt_halvings times before the abort is propagated.
    """
    rho0.validate()
    if rho0.spec != model.spec:
        raise ValueError("initial state and model live on different Hilbert spaces")
    gen = liouvillian_matrix(model)
    dt, rec = cfg.dt, cfg.record_every
    last_err: IntegrationError | None = None
    for _ in range(cfg.dt_halvings + 1):
        try:
            return _integrate(rho0, gen, dt, rec, cfg, observers)
        except IntegrationError as err:
            last_err = err
            dt *= 0.5
            rec *= 2
    raise last_err


def check_convergence(rho0: DensityMatrix, model: ModelOperators,
                      cfg: IntegratorConfig, tol: float = 1e-6) -> ConvergenceReport:
    """Sup-norm difference of sampled concurrence between dt and dt/2 runs."""
    coarse = evolve(rho0, model, cfg)
    fine_cfg = IntegratorConfig(
        dt=cfg.dt / 2.0, t_max=cfg.t_max, record_every=cfg.record_every * 2,
        trace_drift_tol=cfg.trace_drift_tol, dt_halvings=cfg.dt_halvings,
    )
    fine = evolve(rho0, model, fine_cfg)
    if len(coarse.times) != len(fine.times) or not np.array_equal(coarse.times, fine.times):
        raise RuntimeError("sample grids of the two runs do not line up")
    deviation = float(np.abs(coarse.concurrence - fine.concurrence).max())
    return ConvergenceReport(deviation=deviation, tol=tol,
                             dt_coarse=coarse.dt_used, dt_fine=fine.dt_used)


def write_trajectory_csv(traj: Trajectory, path, echo: dict | None = None,
                         time_scale: float = 1.0) -> None:
    """Write the trajectory in the package CSV format.

    Leading `# key=value` comment lines echo the resolved configuration;
    numbers carry 17 significant digits so float64 values round-trip exactly.
    """
    cols = (traj.times * time_scale, traj.concurrence, traj.fid_b1, traj.fid_b2,
            traj.fid_b3, traj.trace, traj.purity, traj.mean_na, traj.mean_nb)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        for key, val in (echo or {}).items():
            fh.write(f"# {key}={val}\n")
        fh.write(",".join(TRAJECTORY_COLUMNS) + "\n")
        for row in zip(*cols):
            fh.write(",".join(f"{v:.17g}" for v in row) + "\n")


def read_trajectory_csv(path) -> tuple[Trajectory, dict[str, str]]:
    """Parse a trajectory CSV back into a Trajectory plus its config echo."""
    echo: dict[str, str] = {}
    rows: list[list[float]] = []
    header_seen = False
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line:
                continue
            if line.startswith("#"):
                body = line.lstrip("#").strip()
                if "=" in body:
                    key, _, val = body.partition("=")
                    echo[key.strip()] = val.strip()
                continue
            if not header_seen:
                if [c.strip() for c in line.split(",")] != list(TRAJECTORY_COLUMNS):
                    raise CsvFormatError(line_no, f"expected header {','.join(TRAJECTORY_COLUMNS)!r}")
                header_seen = True
                continue
            parts = line.split(",")
            if len(parts) != len(TRAJECTORY_COLUMNS):
                raise CsvFormatError(line_no, f"expected {len(TRAJECTORY_COLUMNS)} fields, got {len(parts)}")
            try:
                rows.append([float(p) for p in parts])
            except ValueError as err:
                raise CsvFormatError(line_no, str(err)) from None
    if not header_seen:
        raise CsvFormatError(1, "missing header row (empty or comment-only file)")
    if not rows:
        raise CsvFormatError(1, "no data rows")
    data = np.array(rows)
    spec = None
    if "dim_a" in echo and "dim_b" in echo:
        try:
            spec = HilbertSpec(int(echo["dim_a"]), int(echo["dim_b"]))
        except (ValueError, TypeError):
            spec = None
    traj = Trajectory(
        times=data[:, 0], concurrence=data[:, 1], fid_b1=data[:, 2],
        fid_b2=data[:, 3], fid_b3=data[:, 4], trace=data[:, 5],
        purity=data[:, 6], mean_na=data[:, 7], mean_nb=data[:, 8],
        spec=spec,
    )
    return traj, echo
