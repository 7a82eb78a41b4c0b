"""Command-line interface: config resolution, CSV outputs, exit codes, figures."""

import os

import numpy as np
import pytest

import kerrcoupler as kc
from kerrcoupler.cli import main, resolve_initial_state, sample_times
from kerrcoupler.master_eq import TRAJECTORY_COLUMNS

FAST = ["--dims", "3,3", "--dt", "0.001", "--tmax", "0.5", "--record-every", "50"]


def run_cli(*argv):
    return main(list(argv))


def read_echo(path):
    echo = {}
    with open(path) as fh:
        for line in fh:
            if not line.startswith("#"):
                break
            key, _, val = line.lstrip("#").strip().partition("=")
            echo[key] = val
    return echo


# ---------------------------------------------------------------------------
# simulate

def test_simulate_writes_csv_with_echo(tmp_path, capsys):
    out = tmp_path / "traj.csv"
    code = run_cli("simulate", *FAST, "--gamma-a", "0.01", "--gamma-b", "0.01",
                   "--out", str(out))
    assert code == 0
    assert "wrote" in capsys.readouterr().out
    echo = read_echo(out)
    assert echo["gamma_a"] == "0.01"
    assert echo["dim_a"] == "3"
    assert echo["init"] == "B1"
    traj, _ = kc.read_trajectory_csv(out)
    assert traj.times[0] == 0.0
    assert traj.times[-1] == pytest.approx(0.5)
    assert abs(traj.concurrence[0] - 1.0) < 1e-12


def test_simulate_requires_out(capsys):
    assert run_cli("simulate", *FAST) == 1
    assert "error" in capsys.readouterr().err


def test_simulate_numerical_abort_exit_2(tmp_path, capsys):
    out = tmp_path / "x.csv"
    code = run_cli("simulate", *FAST, "--gamma-a", "1e9", "--dt-halvings", "0",
                   "--out", str(out))
    assert code == 2
    assert "numerical abort" in capsys.readouterr().err


def test_simulate_io_error_exit_3(tmp_path):
    out = tmp_path / "no_such_dir" / "x.csv"
    assert run_cli("simulate", *FAST, "--out", str(out)) == 3


def test_simulate_bad_flag_exit_1(tmp_path):
    assert run_cli("simulate", "--dims", "oops", "--out", str(tmp_path / "x.csv")) == 1
    assert run_cli("simulate", "--init", "B7", "--out", str(tmp_path / "x.csv")) == 1


def test_config_file_and_override(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text(
        "# weak-damping baseline, small box\n"
        "chi_a=25\nchi_b=25\ngamma_a=0.004\ngamma_b=0.004\n"
        "dims=3,3\ndt=0.001\ntmax=0.5\nrecord_every=50\n"
    )
    out = tmp_path / "traj.csv"
    code = run_cli("simulate", "--config", str(cfg), "--gamma-a", "0.02",
                   "--out", str(out))
    assert code == 0
    echo = read_echo(out)
    assert echo["gamma_a"] == "0.02"      # CLI overrides file
    assert echo["gamma_b"] == "0.004"     # file overrides default


def test_config_file_unknown_key(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("gamma_q=1\n")
    assert run_cli("simulate", "--config", str(cfg), "--out", str(tmp_path / "x.csv")) == 1


def test_echo_is_sufficient_to_rerun_exactly(tmp_path):
    out1 = tmp_path / "a.csv"
    code = run_cli("simulate", *FAST, "--gamma-a", "0.013", "--nbar-a", "0.7",
                   "--alpha-re", "0.21", "--epsilon-im", "0.04", "--init", "fock(2,0)",
                   "--out", str(out1))
    assert code == 0
    echo = read_echo(out1)
    rerun_flags = [
        "--chi-a", echo["chi_a"], "--chi-b", echo["chi_b"],
        "--epsilon-re", echo["epsilon_re"], "--epsilon-im", echo["epsilon_im"],
        "--alpha-re", echo["alpha_re"], "--alpha-im", echo["alpha_im"],
        "--gamma-a", echo["gamma_a"], "--gamma-b", echo["gamma_b"],
        "--nbar-a", echo["nbar_a"], "--nbar-b", echo["nbar_b"],
        "--dims", f"{echo['dim_a']},{echo['dim_b']}",
        "--dt", echo["dt"], "--tmax", echo["tmax"],
        "--record-every", echo["record_every"],
        "--trace-drift-tol", echo["trace_drift_tol"],
        "--dt-halvings", echo["dt_halvings"],
        "--init", echo["init"], "--time-scale", echo["time_scale"],
    ]
    out2 = tmp_path / "b.csv"
    assert run_cli("simulate", *rerun_flags, "--out", str(out2)) == 0
    assert out1.read_bytes() == out2.read_bytes()


def test_time_scale_chi(tmp_path):
    out_raw = tmp_path / "raw.csv"
    out_chi = tmp_path / "chi.csv"
    base = FAST + ["--chi-a", "25"]
    assert run_cli("simulate", *base, "--time-scale", "raw", "--out", str(out_raw)) == 0
    assert run_cli("simulate", *base, "--time-scale", "chi", "--out", str(out_chi)) == 0
    raw, _ = kc.read_trajectory_csv(out_raw)
    chi, _ = kc.read_trajectory_csv(out_chi)
    assert np.allclose(chi.times, raw.times * 25.0, rtol=0, atol=1e-12)
    assert np.array_equal(chi.concurrence, raw.concurrence)


# ---------------------------------------------------------------------------
# initial states

def test_simulate_lossless_run_keeps_full_entanglement(tmp_path):
    # no damping, no drive: the pair-exchange oscillation returns C to 1
    # every period and the peak never decays
    out = tmp_path / "lossless.csv"
    code = run_cli("simulate", "--dims", "3,3", "--gamma-a", "0", "--gamma-b", "0",
                   "--dt", "0.0005", "--tmax", "6.25", "--record-every", "25",
                   "--out", str(out))
    assert code == 0
    traj, _ = kc.read_trajectory_csv(out)
    eps = np.pi / 25.0
    assert np.abs(traj.concurrence - np.abs(np.cos(4 * eps * traj.times))).max() < 1e-8
    assert abs(traj.concurrence.max() - 1.0) < 1e-8


def test_initial_state_selectors(tmp_path):
    spec = kc.HilbertSpec(4, 4)
    b2 = resolve_initial_state("B2", spec)
    vec = kc.bell_state_vector("B2", spec)
    assert np.abs(b2.entries - np.outer(vec, vec.conj())).max() < 1e-15

    fock = resolve_initial_state("fock(2,1)", spec)
    assert fock.entries[spec.flatten(2, 1), spec.flatten(2, 1)] == 1.0

    path = tmp_path / "state.npy"
    raw = np.zeros(16, dtype=complex)
    raw[0], raw[5] = 3.0, 4.0              # unnormalized on purpose
    np.save(path, raw)
    loaded = resolve_initial_state(f"file:{path}", spec)
    assert abs(loaded.trace() - 1.0) < 1e-12
    assert abs(loaded.entries[0, 0] - 9.0 / 25.0) < 1e-12

    dm_path = tmp_path / "dm.npy"
    np.save(dm_path, np.eye(16, dtype=complex) * 2.0)
    mixed = resolve_initial_state(f"file:{dm_path}", spec)
    assert abs(mixed.trace() - 1.0) < 1e-12

    from kerrcoupler.cli import ConfigError
    with pytest.raises(ConfigError):
        resolve_initial_state("file:/nonexistent.npy", spec)
    with pytest.raises(ConfigError):
        resolve_initial_state("fock(9,0)", spec)
    with pytest.raises(ConfigError):
        resolve_initial_state("nonsense", spec)


# ---------------------------------------------------------------------------
# detect

def synthetic_csv(tmp_path):
    t = np.arange(0.0, 10.05, 0.05)
    c = np.where(t < 4.0, 0.8, np.where(t <= 7.0, 0.0, 0.2))
    zeros = np.zeros_like(t)
    traj = kc.Trajectory(times=t, concurrence=c, fid_b1=zeros, fid_b2=zeros,
                         fid_b3=zeros, trace=np.ones_like(t), purity=zeros,
                         mean_na=zeros, mean_nb=zeros)
    path = tmp_path / "synthetic.csv"
    kc.write_trajectory_csv(traj, path, echo={"dim_a": "3", "dim_b": "3"})
    return path, traj


def test_detect_round_trips_in_process_detection(tmp_path, capsys):
    path, traj = synthetic_csv(tmp_path)
    out = tmp_path / "events.csv"
    assert run_cli("detect", str(path), "--out", str(out)) == 0
    printed = capsys.readouterr().out
    assert "death interval" in printed

    expected = kc.detect_death_intervals(traj)
    lines = [l for l in out.read_text().splitlines() if l and not l.startswith("#")]
    assert lines[0] == "t_start,t_end,duration,birth_time"
    got = [tuple(float(x) for x in l.split(",")[:2]) for l in lines[1:]]
    assert got == [(iv.t_start, iv.t_end) for iv in expected]


def test_detect_matches_simulated_output_exactly(tmp_path):
    out = tmp_path / "traj.csv"
    run_cli("simulate", *FAST, "--gamma-a", "0.05", "--gamma-b", "0.05",
            "--nbar-a", "1", "--nbar-b", "1", "--out", str(out))
    traj, _ = kc.read_trajectory_csv(out)
    det = kc.DetectorConfig(eps=1e-4, min_duration=0.2)
    expected = kc.detect_death_intervals(traj, det)
    events = tmp_path / "events.csv"
    assert run_cli("detect", str(out), "--out", str(events)) == 0
    lines = [l for l in events.read_text().splitlines() if l and not l.startswith("#")]
    got = [tuple(float(x) for x in l.split(",")[:2]) for l in lines[1:]]
    assert got == [(iv.t_start, iv.t_end) for iv in expected]


def test_detect_missing_file_exit_3(tmp_path):
    assert run_cli("detect", str(tmp_path / "nope.csv"), "--out", str(tmp_path / "e.csv")) == 3


def test_detect_empty_file_exit_3(tmp_path, capsys):
    empty = tmp_path / "empty.csv"
    empty.write_text("")
    assert run_cli("detect", str(empty), "--out", str(tmp_path / "e.csv")) == 3
    assert "line 1" in capsys.readouterr().err


def test_detect_malformed_file_reports_line(tmp_path, capsys):
    bad = tmp_path / "bad.csv"
    bad.write_text(",".join(TRAJECTORY_COLUMNS) + "\n" + ",".join(["0"] * 9) + "\nbroken\n")
    assert run_cli("detect", str(bad), "--out", str(tmp_path / "e.csv")) == 3
    assert "line 3" in capsys.readouterr().err


# ---------------------------------------------------------------------------
# sweep

SWEEP_FAST = ["--dims", "3,3", "--dt", "0.001", "--tmax", "0.3", "--record-every", "50"]


def test_sweep_degenerate_range_gives_identical_blocks(tmp_path):
    out = tmp_path / "sweep.csv"
    code = run_cli("sweep", *SWEEP_FAST, "--gamma-a", "0.01",
                   "--param", "nbar_a", "--from", "1", "--to", "1", "--steps", "2",
                   "--out", str(out))
    assert code == 0
    lines = [l for l in out.read_text().splitlines() if l and not l.startswith("#")]
    assert lines[0] == "param_value,t,concurrence"
    rows = [l.split(",") for l in lines[1:]]
    n = len(rows) // 2
    first = [(r[1], r[2]) for r in rows[:n]]
    second = [(r[1], r[2]) for r in rows[n:]]
    assert first == second
    assert all(r[0] == "1" for r in rows)


def test_sweep_byte_identical_across_worker_counts(tmp_path):
    args = ["sweep", *SWEEP_FAST, "--gamma-a", "0.02", "--param", "nbar_a",
            "--from", "0", "--to", "2", "--steps", "3"]
    out1 = tmp_path / "w1.csv"
    out2 = tmp_path / "w2.csv"
    old = os.environ.get("KERRCOUPLER_WORKERS")
    try:
        os.environ["KERRCOUPLER_WORKERS"] = "1"
        assert run_cli(*args, "--out", str(out1)) == 0
        os.environ["KERRCOUPLER_WORKERS"] = "2"
        assert run_cli(*args, "--out", str(out2)) == 0
    finally:
        if old is None:
            os.environ.pop("KERRCOUPLER_WORKERS", None)
        else:
            os.environ["KERRCOUPLER_WORKERS"] = old
    assert out1.read_bytes() == out2.read_bytes()


def test_sweep_failed_point_marked_nan(tmp_path, capsys):
    out = tmp_path / "sweep.csv"
    code = run_cli("sweep", *SWEEP_FAST, "--dt-halvings", "0",
                   "--param", "gamma_a", "--from", "0.001", "--to", "1e9",
                   "--steps", "3", "--out", str(out))
    assert code == 0
    assert "marked NaN" in capsys.readouterr().err
    lines = [l for l in out.read_text().splitlines() if l and not l.startswith("#")]
    rows = [l.split(",") for l in lines[1:]]
    by_param = {}
    for param_value, _, conc in rows:
        by_param.setdefault(param_value, []).append(conc)
    assert any(all(c == "nan" for c in cs) for cs in by_param.values())
    good = [cs for cs in by_param.values() if all(c != "nan" for c in cs)]
    assert good   # surviving points keep real data
    # grid stays complete and mergeable
    expected_times = sample_times(kc.IntegratorConfig(dt=0.001, t_max=0.3, record_every=50))
    assert len(rows) == 3 * len(expected_times)


def test_sweep_rejects_bad_param(tmp_path):
    assert run_cli("sweep", *SWEEP_FAST, "--param", "chi_a", "--from", "0",
                   "--to", "1", "--steps", "2", "--out", str(tmp_path / "s.csv")) == 1


def test_sweep_rejects_reversed_range(tmp_path):
    assert run_cli("sweep", *SWEEP_FAST, "--param", "alpha", "--from", "1",
                   "--to", "0", "--steps", "2", "--out", str(tmp_path / "s.csv")) == 1


def test_sample_times_matches_evolve_grid():
    spec = kc.HilbertSpec(3, 3)
    model = kc.build_model(kc.CouplerParams(gamma_a=0.01), spec)
    vec = kc.bell_state_vector("B1", spec)
    rho0 = kc.DensityMatrix(np.outer(vec, vec.conj()), spec)
    cfg = kc.IntegratorConfig(dt=1e-3, t_max=0.55, record_every=100)
    traj = kc.evolve(rho0, model, cfg)
    assert np.array_equal(sample_times(cfg), traj.times)


# ---------------------------------------------------------------------------
# figures

def test_simulate_renders_figure(tmp_path):
    out = tmp_path / "traj.csv"
    fig = tmp_path / "traj.png"
    assert run_cli("simulate", *FAST, "--out", str(out), "--figure", str(fig)) == 0
    assert fig.stat().st_size > 0


def test_sweep_renders_figure(tmp_path):
    out = tmp_path / "sweep.csv"
    fig = tmp_path / "sweep.png"
    assert run_cli("sweep", *SWEEP_FAST, "--param", "nbar_a", "--from", "0",
                   "--to", "1", "--steps", "2", "--out", str(out),
                   "--figure", str(fig)) == 0
    assert fig.stat().st_size > 0


def test_detect_renders_figure(tmp_path):
    path, _ = synthetic_csv(tmp_path)
    out = tmp_path / "events.csv"
    fig = tmp_path / "events.png"
    assert run_cli("detect", str(path), "--out", str(out), "--figure", str(fig)) == 0
    assert fig.stat().st_size > 0
