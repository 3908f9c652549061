import subprocess
import sys
import xml.etree.ElementTree as ET

import numpy as np

from akpz.cli import main
from akpz.harness import rows_from_csv
from akpz.heights import HeightField, height_from_profile, make_profile
from akpz.hjpde import GridFunction1D, GridFunction2D
from akpz.lattice import ParticleConfig, build_config

SIM_CFG = """\
profile = bump
profile.rho1 = 0.3333333333333333
profile.rho2 = 0.3333333333333333
profile.a = 0.12
scale = 10
box.ell_lo = -12
box.ell_hi = 12
box.z2_lo = -24
box.z2_hi = 24
pad_z2 = 16
t_end = 2.0
seed = 5
sample_times = 1.0,2.0
probe = 0,1
probe = 1,2
"""


def _run(argv):
    return main(argv)


def _cfg(tmp_path, text, name="run.cfg"):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


def test_simulate_smoke_rerun_and_manifest_replay(tmp_path):
    cfg = _cfg(tmp_path, SIM_CFG)
    out1, out2, out3 = (tmp_path / d for d in ("o1", "o2", "o3"))
    assert _run(["simulate", "--config", cfg, "--out", str(out1)]) == 0
    final = ParticleConfig.from_text((out1 / "config_final.txt").read_text())
    assert final.validate() == []
    traj = (out1 / "trajectory.csv").read_text().splitlines()
    assert traj[0] == "time,line,z2bar,crossings,height"
    assert len(traj) >= 5  # 2 probes x at least 2 sample times
    manifest = (out1 / "manifest.txt").read_text()
    assert "meta.subcommand = simulate" in manifest
    assert "meta.output = trajectory.csv" in manifest

    # bit-exact re-run
    assert _run(["simulate", "--config", cfg, "--out", str(out2)]) == 0
    for name in ("config_final.txt", "trajectory.csv", "manifest.txt"):
        assert (out1 / name).read_bytes() == (out2 / name).read_bytes()

    # the manifest doubles as a config reproducing the run
    assert _run(["simulate", "--config", str(out1 / "manifest.txt"),
                 "--out", str(out3)]) == 0
    for name in ("config_final.txt", "trajectory.csv"):
        assert (out1 / name).read_bytes() == (out3 / name).read_bytes()


def test_simulate_seed_override(tmp_path):
    cfg = _cfg(tmp_path, SIM_CFG)
    out1, out2 = tmp_path / "a", tmp_path / "b"
    assert _run(["simulate", "--config", cfg, "--out", str(out1)]) == 0
    assert _run(["simulate", "--config", cfg, "--out", str(out2),
                 "--seed", "99"]) == 0
    assert "seed = 99" in (out2 / "manifest.txt").read_text()
    assert (out1 / "trajectory.csv").read_text() != (out2 / "trajectory.csv").read_text()


def test_simulate_from_config_file(tmp_path):
    window = build_config(
        [(0, [0, 2, 8]), (0, [1, 5, 9]), (0, [2, 6, 10]), (0, [3, 7, 11])],
        ell0=0, anchored=False,
    )
    wpath = tmp_path / "window.txt"
    wpath.write_text(window.to_text())
    cfg = _cfg(tmp_path, (
        f"config_file = {wpath}\n"
        "box.ell_lo = 0\nbox.ell_hi = 3\nbox.z2_lo = 2\nbox.z2_hi = 6\n"
        "t_end = 0.5\nseed = 11\n"
    ))
    out = tmp_path / "o"
    assert _run(["simulate", "--config", cfg, "--out", str(out)]) == 0
    final = ParticleConfig.from_text((out / "config_final.txt").read_text())
    assert final.validate() == []


def test_simulate_window_drain_hits_resource_guard(tmp_path):
    window = build_config(
        [(0, [0, 2, 4, 6]), (0, [1, 3, 5, 7]), (0, [2, 4, 6, 8])],
        ell0=0, anchored=False,
    )
    wpath = tmp_path / "w.txt"
    wpath.write_text(window.to_text())
    cfg = _cfg(tmp_path, (
        f"config_file = {wpath}\n"
        "box.ell_lo = 0\nbox.ell_hi = 2\nbox.z2_lo = -40\nbox.z2_hi = 40\n"
        "t_end = 50\nseed = 1\n"
    ))
    assert _run(["simulate", "--config", cfg, "--out", str(tmp_path / "o")]) == 4


def test_missing_key_and_bad_domain_exit_2(tmp_path):
    cfg = _cfg(tmp_path, "profile = bump\nprofile.rho1 = 0.3\n"
                         "profile.rho2 = 0.3\nprofile.a = 0.1\n")
    assert _run(["simulate", "--config", cfg, "--out", str(tmp_path / "o")]) == 2
    bad = _cfg(tmp_path, "n = 24\nrho1 = 0.9\nrho2 = 0.9\nseed = 1\n", "g.cfg")
    assert _run(["gibbs", "--config", bad, "--out", str(tmp_path / "o2")]) == 2


def test_gibbs_smoke_and_determinism(tmp_path):
    cfg = _cfg(tmp_path, (
        "n = 24\nrho1 = 0.3333333333333333\nrho2 = 0.3333333333333333\n"
        "seed = 3\nsweeps = 500\n"
        "drift.t_end = 1.0\ndrift.seeds = 2\n"
    ))
    out1, out2 = tmp_path / "g1", tmp_path / "g2"
    assert _run(["gibbs", "--config", cfg, "--out", str(out1)]) == 0
    hf = HeightField.from_csv(out1 / "heights.csv")
    assert hf.values.shape == (25, 25)
    sample_cfg = ParticleConfig.from_text((out1 / "sample_config.txt").read_text())
    assert sample_cfg.validate() == []
    stats = (out1 / "stats.csv").read_text().splitlines()
    assert stats[0] == "stat,param,value"
    assert sum(ln.startswith("density,") for ln in stats) == 4
    assert sum(ln.startswith("fluctuation,") for ln in stats) == 3
    drift = (out1 / "drift.csv").read_text().splitlines()
    assert drift[0] == "rho1,rho2,N,T,seed,estimate,stderr"
    assert len(drift) == 4  # 2 per-seed rows + pooled row
    assert drift[-1].split(",")[4] == "all"

    assert _run(["gibbs", "--config", cfg, "--out", str(out2)]) == 0
    for name in ("heights.csv", "sample_config.txt", "stats.csv",
                 "drift.csv", "manifest.txt"):
        assert (out1 / name).read_bytes() == (out2 / name).read_bytes()


def test_pde_characteristics_and_hopf(tmp_path):
    base = (
        "profile = ridge\nprofile.rho1m = 0.45\nprofile.rho2m = 0.25\n"
        "profile.rho1p = 0.25\nprofile.rho2p = 0.45\n"
        "t = 0.3\ngrid.lo = -0.5\ngrid.hi = 0.5\ngrid.res = 17\n"
    )
    cfg_c = _cfg(tmp_path, "mode = characteristics\n" + base, "c.cfg")
    cfg_h = _cfg(tmp_path, "mode = hopf\n" + base, "h.cfg")
    out_c, out_h = tmp_path / "pc", tmp_path / "ph"
    assert _run(["pde", "--config", cfg_c, "--out", str(out_c)]) == 0
    assert _run(["pde", "--config", cfg_h, "--out", str(out_h)]) == 0
    fc = GridFunction2D.from_csv(out_c / "phi.csv")
    fh = GridFunction2D.from_csv(out_h / "phi.csv")
    assert fc.vals.shape == (17, 17)
    assert np.abs(fc.vals - fh.vals).max() < 1e-2


def test_pde_riemann_and_envelope(tmp_path):
    cfg_r = _cfg(tmp_path, (
        "mode = riemann\nt = 0.6\n"
        "rho_minus = 0.45,0.25\nrho_plus = 0.25,0.45\n"
        "y.lo = -1.5\ny.hi = 1.5\ny.res = 301\n"
    ), "r.cfg")
    out_r = tmp_path / "pr"
    assert _run(["pde", "--config", cfg_r, "--out", str(out_r)]) == 0
    waves = (out_r / "waves.txt").read_text()
    assert "classification = shock" in waves
    assert sum(ln.startswith("shock = ") for ln in waves.splitlines()) == 1
    psi = GridFunction1D.from_csv(out_r / "psi.csv")
    assert len(psi.xs) == 301
    GridFunction1D.from_csv(out_r / "u.csv")

    xs = np.linspace(-2.0, 2.0, 201)
    src = tmp_path / "well.csv"
    GridFunction1D(xs, (xs ** 2 - 1.0) ** 2).to_csv(src)
    cfg_e = _cfg(tmp_path, f"mode = envelope\ninput = {src}\n", "e.cfg")
    out_e = tmp_path / "pe"
    assert _run(["pde", "--config", cfg_e, "--out", str(out_e)]) == 0
    env = GridFunction1D.from_csv(out_e / "envelope.csv")
    assert (env.vals <= (xs ** 2 - 1.0) ** 2 + 1e-9).all()

    bad = _cfg(tmp_path, "mode = telepathy\nt = 1\n", "bad.cfg")
    assert _run(["pde", "--config", bad, "--out", str(tmp_path / "pb")]) == 2


def test_pde_characteristics_past_focusing_exits_3(tmp_path):
    cfg = _cfg(tmp_path, (
        "mode = characteristics\nprofile = bump\n"
        "profile.rho1 = 0.3333333333333333\nprofile.rho2 = 0.3333333333333333\n"
        "profile.a = 0.12\nt = 0.97\n"
        "grid.lo = -0.8\ngrid.hi = 0.8\ngrid.res = 61\n"
    ))
    assert _run(["pde", "--config", cfg, "--out", str(tmp_path / "o")]) == 3


def test_hydro_tiny_run_and_manifest_replay(tmp_path, capsys):
    cfg = _cfg(tmp_path, (
        "profile = bump\nprofile.rho1 = 0.3333333333333333\n"
        "profile.rho2 = 0.3333333333333333\nprofile.a = 0.12\n"
        "t = 0.15\nL = 8,12\nseeds_per_L = 2\n"
        "probe = 0,0\nprobe = 0.25,0.25\n"
    ))
    out1, out2 = tmp_path / "h1", tmp_path / "h2"
    assert _run(["hydro", "--config", cfg, "--out", str(out1)]) == 0
    printed = capsys.readouterr().out
    assert printed.startswith("VERDICT mode=smooth profile=bump")
    rows = rows_from_csv(str(out1 / "rows.csv"))
    assert len(rows) == 2 * 2 * 2
    summary = (out1 / "summary.txt").read_text()
    assert "VERDICT" in summary and "median_err" in summary

    # the manifest replays the experiment bit-exactly
    assert _run(["hydro", "--config", str(out1 / "manifest.txt"),
                 "--out", str(out2)]) == 0
    assert (out1 / "rows.csv").read_bytes() == (out2 / "rows.csv").read_bytes()
    assert (out1 / "summary.txt").read_bytes() == (out2 / "summary.txt").read_bytes()


def test_snapshot_profile_and_heights_input(tmp_path):
    cfg = _cfg(tmp_path, (
        "profile = bump\nprofile.rho1 = 0.3333333333333333\n"
        "profile.rho2 = 0.3333333333333333\nprofile.a = 0.12\n"
        "scale = 8\nrect.x1_lo = 0\nrect.x1_hi = 10\n"
        "rect.x2_lo = 0\nrect.x2_hi = 10\n"
    ))
    out = tmp_path / "s1"
    assert _run(["snapshot", "--config", cfg, "--out", str(out)]) == 0
    svg = (out / "snapshot.svg").read_text()
    root = ET.fromstring(svg)
    assert root.tag.endswith("svg")

    prof = make_profile("bump", rho1=1 / 3, rho2=1 / 3, a=0.12)
    i = np.arange(0, 9)
    vals = height_from_profile(prof, 8, i[:, None], i[None, :])
    hpath = tmp_path / "hf.csv"
    HeightField(0, 0, vals).to_csv(hpath)
    cfg2 = _cfg(tmp_path, f"heights = {hpath}\nunit = 10\n", "s2.cfg")
    out2 = tmp_path / "s2"
    assert _run(["snapshot", "--config", cfg2, "--out", str(out2)]) == 0
    ET.fromstring((out2 / "snapshot.svg").read_text())


def test_module_and_script_entry_points():
    r = subprocess.run([sys.executable, "-m", "akpz", "--version"],
                       capture_output=True, text=True)
    assert r.returncode == 0 and r.stdout.strip() == "akpz 0.1.0"
    r2 = subprocess.run(["akpz", "--version"], capture_output=True, text=True)
    assert r2.returncode == 0 and r2.stdout.strip() == "akpz 0.1.0"
