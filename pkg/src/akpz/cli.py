"""Command-line front door.

Subcommands: simulate | gibbs | pde | hydro | snapshot. Each reads one flat
key-value config file, writes its artifacts plus a manifest into --out, and
is bit-exactly reproducible: the manifest is itself a valid config carrying
every resolved parameter (meta.* lines are ignored on read).

Exit codes: 0 success, 2 config error, 3 numerical failure, 4 resource guard.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .configio import coerce, format_kv, one, read_kv
from .errors import (
    ConfigError,
    DomainError,
    InstanceTooLargeError,
    NumericalError,
    ResourceGuardError,
    WindowExhaustedError,
)
from .gibbs import density_stats, drift_estimate, fluctuation_stats, sample_gibbs, unroll_window
from .growth import simulate
from .harness import aggregate, run_experiment, rows_to_csv, summary_text, verdict_line, Experiment
from .heights import (
    HeightField,
    config_from_profile,
    height_from_profile,
    make_profile,
    svg_snapshot,
)
from .hjpde import (
    GridFunction1D,
    GridFunction2D,
    characteristics_solve,
    convex_envelope,
    hopf_solve,
    riemann_from_slopes,
    riemann_solve,
    RiemannSpec,
)
from .lattice import LocalizationBox, ParticleConfig


def _parser():
    p = argparse.ArgumentParser(
        prog="akpz",
        description="Event-driven anisotropic growth simulator and PDE toolkit",
    )
    p.add_argument("--version", action="version", version=f"akpz {__version__}")
    sub = p.add_subparsers(dest="subcommand", required=True)
    for name, doc in (
        ("simulate", "run the growth dynamics on a particle window"),
        ("gibbs", "draw an equilibrium tiling and its statistics"),
        ("pde", "solve the limiting equation (characteristics/hopf/riemann/envelope)"),
        ("hydro", "run a convergence experiment and report a verdict"),
        ("snapshot", "render a height field as an SVG tiling"),
    ):
        q = sub.add_parser(name, help=doc)
        q.add_argument("--config", required=True, help="flat key-value config file")
        q.add_argument("--out", default="akpz-out", help="output directory")
        q.add_argument("--seed", type=int, default=None, help="override the config seed")
        q.add_argument("--threads", type=int, default=1, help="worker threads where supported")
    return p


def _req(kv, key, kind, source):
    return coerce(one(kv, key, required=True, source=source), kind, key, source)


def _opt(kv, key, kind, default, source):
    raw = one(kv, key, source=source)
    return default if raw is None else coerce(raw, kind, key, source)


def _profile_from_kv(kv, source):
    name = one(kv, "profile", required=True, source=source)
    params = {
        key[len("profile."):]: coerce(vals[-1], float, key, source)
        for key, vals in kv.items()
        if key.startswith("profile.")
    }
    try:
        return make_profile(name, **params)
    except TypeError as exc:
        raise ConfigError(f"{source}: bad profile parameters: {exc}") from None


def _box_from_kv(kv, source, prefix="box"):
    vals = [
        _req(kv, f"{prefix}.{k}", int, source)
        for k in ("ell_lo", "ell_hi", "z2_lo", "z2_hi")
    ]
    return LocalizationBox(*vals)


def _pairs_list(kv, key, kind, source):
    out = []
    for raw in kv.get(key, []):
        parts = raw.split(",")
        if len(parts) != 2:
            raise ConfigError(f"{source}: key {key!r} needs 'a,b', got {raw!r}")
        out.append((coerce(parts[0].strip(), kind, key, source),
                    coerce(parts[1].strip(), kind, key, source)))
    return out


def _write(outdir, name, text):
    path = outdir / name
    with open(path, "w") as fh:
        fh.write(text)
    return name


def _fmt_row(vals):
    out = []
    for v in vals:
        out.append(f"{v:.17g}" if isinstance(v, float) else str(v))
    return ",".join(out) + "\n"


# ---------------------------------------------------------------------------
# subcommands (each returns the list of files written, without the manifest)


def _cmd_simulate(kv, outdir, source):
    if "config_file" in kv:
        path = one(kv, "config_file", source=source)
        with open(path) as fh:
            cfg = ParticleConfig.from_text(fh.read())
        box = _box_from_kv(kv, source)
    else:
        profile = _profile_from_kv(kv, source)
        scale = _req(kv, "scale", float, source)
        box = _box_from_kv(kv, source)
        pad = _opt(kv, "pad_z2", int, 32, source)
        cfg = config_from_profile(profile, scale, box, pad_z2=pad)
    t_end = _req(kv, "t_end", float, source)
    seed = _req(kv, "seed", int, source)
    sample_raw = one(kv, "sample_times", source=source)
    sample_times = (
        [float(s) for s in sample_raw.split(",")] if sample_raw else None
    )
    probes = _pairs_list(kv, "probe", int, source)
    res = simulate(
        cfg, t_end, gen_box=box, seed=seed,
        sample_times=sample_times, probes=probes or None,
    )
    files = [_write(outdir, "config_final.txt", res.config.to_text())]
    buf = ["time,line,z2bar,crossings,height\n"]
    if probes:
        h0 = res.probe_heights(0) + res.crossings[0]  # initial absolute heights
        for k, tau in enumerate(res.sample_times):
            for j, (ell, z2) in enumerate(res.probes):
                c = int(res.crossings[k, j])
                buf.append(_fmt_row([float(tau), int(ell), int(z2), c, int(h0[j]) - c]))
    files.append(_write(outdir, "trajectory.csv", "".join(buf)))
    return files


def _cmd_gibbs(kv, outdir, source):
    n = _req(kv, "n", int, source)
    rho1 = _req(kv, "rho1", float, source)
    rho2 = _req(kv, "rho2", float, source)
    seed = _req(kv, "seed", int, source)
    sweeps = _opt(kv, "sweeps", int, None, source)
    sample = sample_gibbs(n, rho1, rho2, seed, sweeps=sweeps)
    files = []
    hf = sample.heights(0, n, 0, n)
    buf_h = []
    hf.to_csv(_Buf(buf_h))
    files.append(_write(outdir, "heights.csv", "".join(buf_h)))
    ell_lo = _opt(kv, "window.ell_lo", int, -4, source)
    ell_hi = _opt(kv, "window.ell_hi", int, 4, source)
    z2_lo = _opt(kv, "window.z2_lo", int, -2 * n, source)
    z2_hi = _opt(kv, "window.z2_hi", int, 2 * n, source)
    cfg = unroll_window(sample, ell_lo, ell_hi, z2_lo, z2_hi, anchored=True)
    files.append(_write(outdir, "sample_config.txt", cfg.to_text()))
    stats = ["stat,param,value\n"]
    for r in (8, 16, 32, 60):
        stats.append(_fmt_row(["density", r, float(density_stats(sample, 0, r)) / r]))
    for lw in (16, 32, 64):
        stats.append(_fmt_row(["fluctuation", lw, fluctuation_stats(sample, Lwin=lw)]))
    files.append(_write(outdir, "stats.csv", "".join(stats)))
    t_end = _opt(kv, "drift.t_end", float, None, source)
    if t_end is not None:
        seeds = _opt(kv, "drift.seeds", int, 4, source)
        kappa = _opt(kv, "drift.kappa", float, 4.0, source)
        est = drift_estimate(
            rho1, rho2, n, t_end, seeds, kappa=kappa, sweeps=sweeps, base_seed=seed,
        )
        buf = ["rho1,rho2,N,T,seed,estimate,stderr\n"]
        for s, v in est["per_seed"]:
            buf.append(_fmt_row([est["rho1"], est["rho2"], n, float(t_end), s, v, ""]))
        buf.append(_fmt_row([
            est["rho1"], est["rho2"], n, float(t_end), "all",
            est["estimate"], est["stderr"],
        ]))
        files.append(_write(outdir, "drift.csv", "".join(buf)))
    return files


class _Buf:
    """Minimal text sink adapting writers that expect .write to a list."""

    def __init__(self, chunks):
        self.chunks = chunks

    def write(self, text):
        self.chunks.append(text)


def _grid_from_kv(kv, source):
    lo = _opt(kv, "grid.lo", float, -1.0, source)
    hi = _opt(kv, "grid.hi", float, 1.0, source)
    res = _opt(kv, "grid.res", int, 65, source)
    if hi <= lo or res < 2:
        raise ConfigError(f"{source}: grid needs lo < hi and res >= 2")
    return np.linspace(lo, hi, res)


def _cmd_pde(kv, outdir, source):
    mode = one(kv, "mode", required=True, source=source)
    files = []
    if mode in ("characteristics", "hopf"):
        profile = _profile_from_kv(kv, source)
        t = _req(kv, "t", float, source)
        xs = _grid_from_kv(kv, source)
        X1, X2 = np.meshgrid(xs, xs, indexing="ij")
        if mode == "characteristics":
            vals = characteristics_solve(profile, t, X1, X2).phi
        else:
            vals = hopf_solve(profile, t, X1, X2)
        chunks = []
        GridFunction2D(xs, xs, vals).to_csv(_Buf(chunks))
        files.append(_write(outdir, "phi.csv", "".join(chunks)))
    elif mode == "riemann":
        t = _req(kv, "t", float, source)
        if "rho_minus" in kv:
            rm = _pairs_list(kv, "rho_minus", float, source)[0]
            rp = _pairs_list(kv, "rho_plus", float, source)[0]
            spec = riemann_from_slopes(rm, rp)
        else:
            beta = _pairs_list(kv, "beta", float, source)
            nvec = _pairs_list(kv, "n_hat", float, source)
            if not beta or not nvec:
                raise ConfigError(
                    f"{source}: riemann needs rho_minus/rho_plus or c,beta,n_hat,u_minus,u_plus"
                )
            spec = RiemannSpec(
                _req(kv, "c", float, source), beta[0], nvec[0],
                _req(kv, "u_minus", float, source), _req(kv, "u_plus", float, source),
            )
        lo = _opt(kv, "y.lo", float, -2.0, source)
        hi = _opt(kv, "y.hi", float, 2.0, source)
        res = _opt(kv, "y.res", int, 401, source)
        ysg = np.linspace(lo, hi, res)
        sol = riemann_solve(spec, ysg, t)
        for nm, arr in (("psi", sol.psi), ("u", sol.u)):
            chunks = []
            GridFunction1D(ysg, arr).to_csv(_Buf(chunks))
            files.append(_write(outdir, f"{nm}.csv", "".join(chunks)))
        waves = [f"classification = {sol.classification}\n"]
        for s_lo, s_hi, speed in sol.shocks:
            waves.append(f"shock = {s_lo:.17g},{s_hi:.17g},{speed:.17g}\n")
        for s_lo, s_hi, v_lo, v_hi in sol.fans:
            waves.append(f"fan = {s_lo:.17g},{s_hi:.17g},{v_lo:.17g},{v_hi:.17g}\n")
        files.append(_write(outdir, "waves.txt", "".join(waves)))
    elif mode == "envelope":
        path = one(kv, "input", required=True, source=source)
        gf = GridFunction1D.from_csv(path)
        env = convex_envelope(gf)
        chunks = []
        env.to_csv(_Buf(chunks))
        files.append(_write(outdir, "envelope.csv", "".join(chunks)))
    else:
        raise ConfigError(
            f"{source}: mode must be characteristics, hopf, riemann, or envelope"
        )
    return files


def _cmd_hydro(kv_path, outdir, threads, seed_override):
    exp = Experiment.read(kv_path)
    if seed_override is not None:
        exp = Experiment(
            profile=exp.profile, t=exp.t, Llist=exp.Llist, probes=exp.probes,
            seeds_per_L=exp.seeds_per_L, kappa=exp.kappa, mode=exp.mode,
            threshold=exp.threshold, base_seed=seed_override,
        )
    rows = run_experiment(exp, workers=max(1, threads))
    files = []
    chunks = []
    rows_to_csv(rows, _Buf(chunks))
    files.append(_write(outdir, "rows.csv", "".join(chunks)))
    agg = aggregate(rows, exp.threshold)
    files.append(_write(outdir, "summary.txt", summary_text(agg, exp) + "\n"))
    print(verdict_line(agg, exp))
    return files, exp


def _cmd_snapshot(kv, outdir, source):
    unit = _opt(kv, "unit", float, 12.0, source)
    if "heights" in kv:
        hf = HeightField.from_csv(one(kv, "heights", source=source))
    else:
        profile = _profile_from_kv(kv, source)
        scale = _req(kv, "scale", float, source)
        x1_lo = _opt(kv, "rect.x1_lo", int, 0, source)
        x1_hi = _opt(kv, "rect.x1_hi", int, 16, source)
        x2_lo = _opt(kv, "rect.x2_lo", int, 0, source)
        x2_hi = _opt(kv, "rect.x2_hi", int, 16, source)
        i = np.arange(x1_lo, x1_hi + 1)
        j = np.arange(x2_lo, x2_hi + 1)
        vals = height_from_profile(profile, scale, i[:, None], j[None, :])
        hf = HeightField(x1_lo, x2_lo, vals)
    return [_write(outdir, "snapshot.svg", svg_snapshot(hf, unit=unit) + "\n")]


# ---------------------------------------------------------------------------
# driver


def _manifest(kv, args, files):
    pairs = []
    for key, vals in kv.items():
        if key.startswith("meta."):
            continue
        for v in vals:
            pairs.append((key, v))
    pairs.append(("meta.subcommand", args.subcommand))
    pairs.append(("meta.version", __version__))
    for name in files:
        pairs.append(("meta.output", name))
    return format_kv(pairs)


def main(argv=None):
    args = _parser().parse_args(argv)
    source = args.config
    try:
        outdir = Path(args.out)
        outdir.mkdir(parents=True, exist_ok=True)
        kv = read_kv(args.config)
        kv = {k: v for k, v in kv.items() if not k.startswith("meta.")}
        if args.seed is not None and args.subcommand != "hydro":
            kv["seed"] = [str(args.seed)]
        if args.subcommand == "simulate":
            files = _cmd_simulate(kv, outdir, source)
        elif args.subcommand == "gibbs":
            files = _cmd_gibbs(kv, outdir, source)
        elif args.subcommand == "pde":
            files = _cmd_pde(kv, outdir, source)
        elif args.subcommand == "hydro":
            files, exp = _cmd_hydro(args.config, outdir, args.threads, args.seed)
            kv = parse_hydro_kv(args.config, exp)
        else:
            files = _cmd_snapshot(kv, outdir, source)
        _write(outdir, "manifest.txt", _manifest(kv, args, files))
        return 0
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (DomainError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3
    except (ResourceGuardError, WindowExhaustedError, InstanceTooLargeError) as exc:
        print(f"resource guard: {exc}", file=sys.stderr)
        return 4


def parse_hydro_kv(path, exp):
    """Resolved manifest pairs for a hydro run (the experiment's own
    serialization, which includes every default)."""
    from .configio import parse_kv

    return parse_kv(exp.to_text(), source=str(path))


if __name__ == "__main__":
    sys.exit(main())
