"""Desk-scale convergence experiments: grown heights against the PDE.

An experiment fixes a macroscopic profile, a macroscopic time t, a ladder of
scales L, and probe points x. For each (L, seed) the profile is floored into
a particle window at scale L, grown for microscopic time t * L inside a box
whose frozen margins exceed kappa * t * L sites in every lattice direction,
and the rescaled probe heights H(floor(x L), t L) / L are compared with the
PDE value phi(x, t). Convergence is judged by the trend of the per-L median
error plus a final absolute threshold.
"""

from __future__ import annotations

import io
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .configio import coerce, format_kv, one, parse_kv
from .errors import ConfigError, DomainError, NumericalError
from .growth import simulate
from .heights import config_from_profile, gap_bound, height_from_profile, make_profile
from .hjpde import (
    GridFunction2D,
    characteristics_solve,
    detect_gradient_jumps,
    estimate_Tf,
    hopf_solve,
    riemann_from_slopes,
    riemann_solve,
)
from .lattice import LocalizationBox

DEFAULT_LLIST = (32, 64, 128)
DEFAULT_PROBES = (
    (0.0, 0.0),
    (0.35, 0.0), (-0.35, 0.0), (0.0, 0.35), (0.0, -0.35),
    (0.25, 0.25), (-0.25, 0.25), (0.25, -0.25), (-0.25, -0.25),
)
SHOCK_STRIP = 0.1


@dataclass(frozen=True)
class Experiment:
    """One convergence study; see the module docstring for the semantics."""

    profile: object
    t: float
    Llist: tuple = DEFAULT_LLIST
    probes: tuple = DEFAULT_PROBES
    seeds_per_L: int = 8
    kappa: float = 4.0
    mode: str = "smooth"
    threshold: float = 0.05
    base_seed: int = 0

    def __post_init__(self):
        if self.t < 0:
            raise ConfigError("t must be nonnegative")
        if self.mode not in ("smooth", "shock"):
            raise ConfigError(f"mode must be smooth or shock, not {self.mode!r}")
        if not self.Llist or any(L < 4 for L in self.Llist):
            raise ConfigError("Llist must hold scales >= 4")
        if list(self.Llist) != sorted(set(self.Llist)):
            raise ConfigError("Llist must be strictly increasing")
        if self.seeds_per_L < 1:
            raise ConfigError("seeds_per_L must be >= 1")
        if not self.probes:
            raise ConfigError("at least one probe is required")

    def seed_for(self, L, i):
        """Deterministic per-task seed."""
        return self.base_seed + 1000003 * int(L) + int(i)

    def to_text(self):
        pairs = [("mode", self.mode), ("profile", self.profile.name)]
        pairs += [(f"profile.{k}", float(v)) for k, v in self.profile.params]
        pairs += [
            ("t", float(self.t)),
            ("L", list(int(L) for L in self.Llist)),
            ("seeds_per_L", self.seeds_per_L),
            ("kappa", float(self.kappa)),
            ("threshold", float(self.threshold)),
            ("base_seed", self.base_seed),
        ]
        pairs += [("probe", (float(a), float(b))) for a, b in self.probes]
        return format_kv(pairs)

    @classmethod
    def from_text(cls, text, source="<experiment>"):
        kv = parse_kv(text, source)
        name = one(kv, "profile", required=True, source=source)
        params = {}
        for key, vals in kv.items():
            if key.startswith("profile."):
                params[key[len("profile."):]] = coerce(vals[-1], float, key, source)
        try:
            profile = make_profile(name, **params)
        except (TypeError, DomainError) as exc:
            raise ConfigError(f"{source}: bad profile: {exc}") from None
        probes = []
        for val in kv.get("probe", []):
            parts = val.split(",")
            if len(parts) != 2:
                raise ConfigError(f"{source}: probe needs 'x1,x2', got {val!r}")
            probes.append((float(parts[0]), float(parts[1])))
        def opt(*names, default=None):
            for nm in names:
                if nm in kv:
                    return one(kv, nm, source=source)
            return default

        Lval = opt("L", "l")
        Llist = tuple(int(s) for s in Lval.split(",")) if Lval else DEFAULT_LLIST
        return cls(
            profile=profile,
            t=coerce(one(kv, "t", required=True, source=source), float, "t", source),
            Llist=Llist,
            probes=tuple(probes) if probes else DEFAULT_PROBES,
            seeds_per_L=int(opt("seeds_per_L", "seeds_per_l", default="8")),
            kappa=float(opt("kappa", default="4")),
            mode=opt("mode", default="smooth"),
            threshold=float(opt("threshold", default="0.05")),
            base_seed=int(opt("base_seed", default="0")),
        )

    @classmethod
    def read(cls, path):
        with open(path) as fh:
            return cls.from_text(fh.read(), source=str(path))


@dataclass(frozen=True)
class ConvergenceRow:
    L: int
    seed: int
    probe: tuple      # macroscopic (x1, x2)
    h_scaled: float   # H(floor(x L), t L) / L
    reference: float  # phi(x, t)
    error: float


def rows_to_csv(rows, path_or_buf):
    buf = io.StringIO()
    buf.write("L,seed,x1,x2,h_scaled,reference,error\n")
    for r in rows:
        buf.write(
            f"{r.L},{r.seed},{r.probe[0]:.17g},{r.probe[1]:.17g},"
            f"{r.h_scaled:.17g},{r.reference:.17g},{r.error:.17g}\n"
        )
    text = buf.getvalue()
    if hasattr(path_or_buf, "write"):
        path_or_buf.write(text)
    else:
        with open(path_or_buf, "w") as fh:
            fh.write(text)


def rows_from_csv(path_or_buf):
    if hasattr(path_or_buf, "read"):
        text = path_or_buf.read()
    else:
        with open(path_or_buf) as fh:
            text = fh.read()
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines or lines[0] != "L,seed,x1,x2,h_scaled,reference,error":
        raise ValueError("not a convergence-row CSV")
    out = []
    for ln in lines[1:]:
        c = ln.split(",")
        out.append(ConvergenceRow(
            int(c[0]), int(c[1]), (float(c[2]), float(c[3])),
            float(c[4]), float(c[5]), float(c[6]),
        ))
    return out


# ---------------------------------------------------------------------------
# geometry shared by the run modes


def _micro_probes(probes, L):
    """Macroscopic probes -> micro vertices -> (line, doubled coordinate)."""
    verts = [(math.floor(a * L), math.floor(b * L)) for a, b in probes]
    sites = [(m2 - m1, m1 + m2 - 1) for m1, m2 in verts]
    return verts, sites


def _active_box(exp, L, sites, kappa=None):
    kappa = exp.kappa if kappa is None else kappa
    m = max(4, math.ceil(kappa * exp.t * L))
    ls = [ell for ell, _ in sites]
    zs = [z for _, z in sites]
    return LocalizationBox(
        min(ls) - 2 * m, max(ls) + 2 * m, min(zs) - 2 * m, max(zs) + 2 * m
    )


def _pad_z2(profile, t_micro, kappa):
    # static slack for the gap structure plus the ballistic horizon: the
    # generated events keep consuming particles from beyond the box edge
    # for the whole run, so the supply must scale with kappa * T
    return (4 * math.ceil(gap_bound(profile)) + 16
            + 2 * int(math.ceil(kappa * t_micro)))


def _run_one(exp, L, seed, keep_idx):
    """Rows for one (L, seed) task, including the per-run invariants:
    the t = 0 floor identity and the floor/ceil same-stream sandwich."""
    verts, sites = _micro_probes(exp.probes, L)
    T = exp.t * L
    active = _active_box(exp, L, sites)
    pad = _pad_z2(exp.profile, T, exp.kappa)
    m1s = np.array([v[0] for v in verts])
    m2s = np.array([v[1] for v in verts])
    h0 = height_from_profile(exp.profile, L, m1s, m2s)
    h0_up = height_from_profile(exp.profile, L, m1s, m2s, rounding="ceil")

    cfg = config_from_profile(exp.profile, L, active, pad_z2=pad)
    # the pipeline must reproduce the floored profile exactly at time zero
    c_global = int(height_from_profile(exp.profile, L, np.array([0]), np.array([0]))[0]) - 1
    pr = np.asarray(sites, dtype=np.int64)
    from .growth import _probe_abs_heights

    if not np.array_equal(_probe_abs_heights(cfg, pr) + c_global, h0):
        raise NumericalError("discretized window disagrees with the floored profile")

    res = simulate(cfg, T, gen_box=active, seed=seed, probes=sites)
    H = h0 - res.crossings[-1]

    # coupled sandwich: the ceil discretization dominates the floor one and
    # exceeds it by at most 1, so the same-stream runs must bracket H
    cfg_up = config_from_profile(exp.profile, L, active, pad_z2=pad, rounding="ceil")
    res_up = simulate(cfg_up, T, gen_box=active, seed=seed, probes=sites)
    H_up = h0_up - res_up.crossings[-1]
    gap = H_up - H
    if (gap < 0).any() or (gap > 1).any():
        raise NumericalError(
            f"floor/ceil sandwich violated at L={L} seed={seed}: "
            f"spread {int(gap.min())}..{int(gap.max())}"
        )

    rows = []
    for k in keep_idx:
        hs = float(H[k]) / L
        ref = float(exp._refs[k])
        rows.append(ConvergenceRow(L, seed, exp.probes[k], hs, ref, abs(hs - ref)))
    return rows


def _run_tasks(exp, keep_idx, workers):
    tasks = [(L, i) for L in exp.Llist for i in range(exp.seeds_per_L)]
    if workers and workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            chunks = list(
                pool.map(lambda a: _run_one(exp, a[0], exp.seed_for(*a), keep_idx), tasks)
            )
    else:
        chunks = [_run_one(exp, L, exp.seed_for(L, i), keep_idx) for L, i in tasks]
    return [row for chunk in chunks for row in chunk]


def _with_refs(exp, refs):
    object.__setattr__(exp, "_refs", refs)  # cache, not a dataclass field
    return exp


def run_smooth(exp, workers=1):
    """Convergence rows for a smooth profile, referenced to characteristics.

    Requires t at most 0.8 of the estimated focusing time so the backward
    Newton solve is well posed everywhere.
    """
    if exp.mode != "smooth":
        raise ConfigError("experiment mode is not smooth")
    if not exp.profile.smooth:
        raise DomainError(f"profile {exp.profile.name} is not smooth")
    tf = estimate_Tf(exp.profile)
    if exp.t > 0.8 * tf.t_f:
        raise DomainError(
            f"t={exp.t:g} exceeds 0.8 * estimated focusing time {tf.t_f:g}"
        )
    xs = np.array([p[0] for p in exp.probes])
    ys = np.array([p[1] for p in exp.probes])
    refs = characteristics_solve(exp.profile, exp.t, xs, ys).phi
    _with_refs(exp, refs)
    return _run_tasks(exp, range(len(exp.probes)), workers)


def _shock_keep(exp):
    """Indices of probes off the exclusion strip around non-smooth lines of
    the PDE solution at time t, plus the Riemann cross-reference when the
    profile is planar two-slope data."""
    p = exp.profile
    xs = np.array([a for a, _ in exp.probes])
    ys = np.array([b for _, b in exp.probes])
    if p.name == "two_affine":
        d = dict(p.params)
        spec = riemann_from_slopes((d["rho1m"], d["rho2m"]), (d["rho1p"], d["rho2p"]))
        span = float(np.abs(spec.n[0] * xs + spec.n[1] * ys).max()) + 1.0
        rs = riemann_solve(spec, np.linspace(-span, span, 801), exp.t)
        yp = spec.n[0] * xs + spec.n[1] * ys
        keep = np.ones(len(xs), dtype=bool)
        for pos in rs.shock_positions():
            keep &= np.abs(yp - pos) >= SHOCK_STRIP
        return [int(i) for i in np.flatnonzero(keep)], rs
    radius = float(np.hypot(xs, ys).max()) + 0.5
    grid = np.linspace(-radius, radius, 161)
    G1, G2 = np.meshgrid(grid, grid, indexing="ij")
    vals = hopf_solve(p, exp.t, G1, G2)
    pts = detect_gradient_jumps(GridFunction2D(grid, grid, vals), threshold=0.05)
    if len(pts) == 0:
        return list(range(len(xs))), None
    dist = np.hypot(pts[None, :, 0] - xs[:, None], pts[None, :, 1] - ys[:, None]).min(axis=1)
    return [int(i) for i in np.flatnonzero(dist >= SHOCK_STRIP)], None


def run_shock(exp, workers=1):
    """Convergence rows for convex data past gradient blow-up, referenced to
    the variational slope formula; probes near detected shocks are dropped.

    For planar two-slope profiles the reference is cross-checked against the
    one-dimensional reduction before any simulation runs.
    """
    if exp.mode != "shock":
        raise ConfigError("experiment mode is not shock")
    if not exp.profile.convex:
        raise DomainError(f"profile {exp.profile.name} is not convex")
    keep_idx, rs = _shock_keep(exp)
    if not keep_idx:
        raise ConfigError("all probes fall inside the shock exclusion strip")
    xs = np.array([p[0] for p in exp.probes])
    ys = np.array([p[1] for p in exp.probes])
    refs = hopf_solve(exp.profile, exp.t, xs, ys)
    if rs is not None:
        alt = rs.phi(xs[keep_idx], ys[keep_idx])
        dev = float(np.abs(alt - refs[keep_idx]).max())
        if dev > 1e-2:
            raise NumericalError(
                f"planar reduction disagrees with the variational reference by {dev:g}"
            )
    _with_refs(exp, refs)
    return _run_tasks(exp, keep_idx, workers)


def run_experiment(exp, workers=1):
    return run_smooth(exp, workers) if exp.mode == "smooth" else run_shock(exp, workers)


def margin_insensitivity_check(exp, L, seed):
    """True when doubling the margin speed kappa leaves every probe's final
    crossing count unchanged under the coupled (shared-stream) comparison."""
    _, sites = _micro_probes(exp.probes, L)
    T = exp.t * L
    small = _active_box(exp, L, sites)
    big = _active_box(exp, L, sites, kappa=2 * exp.kappa)
    cfg = config_from_profile(
        exp.profile, L, big, pad_z2=_pad_z2(exp.profile, T, 2 * exp.kappa)
    )
    r_big = simulate(cfg, T, gen_box=big, seed=seed, probes=sites)
    r_small = simulate(cfg, T, gen_box=big, seed=seed, active_box=small, probes=sites)
    return bool(np.array_equal(r_big.crossings[-1], r_small.crossings[-1]))


# ---------------------------------------------------------------------------
# aggregation


def aggregate(rows, threshold=None):
    """Per-L medians/maxima and the pass/fail verdict: medians nonincreasing
    along the ladder and the final one below the threshold (when given)."""
    if not rows:
        raise ValueError("empty row table")
    by_L = {}
    for r in rows:
        by_L.setdefault(int(r.L), []).append(float(r.error))
    Ls = sorted(by_L)
    per_L = [
        {
            "L": L,
            "n": len(by_L[L]),
            "median": float(np.median(by_L[L])),
            "max": float(np.max(by_L[L])),
        }
        for L in Ls
    ]
    medians = [p["median"] for p in per_L]
    trend_ok = all(medians[i + 1] <= medians[i] + 1e-12 for i in range(len(medians) - 1))
    final_ok = threshold is None or medians[-1] <= threshold
    return {
        "per_L": per_L,
        "trend_ok": bool(trend_ok),
        "final_ok": bool(final_ok),
        "final_median": medians[-1],
        "threshold": threshold,
        "verdict": "pass" if trend_ok and final_ok else "fail",
    }


def summary_text(agg, exp=None):
    lines = []
    if exp is not None:
        lines.append(
            f"experiment: mode={exp.mode} profile={exp.profile.describe()} "
            f"t={exp.t:g} seeds_per_L={exp.seeds_per_L} kappa={exp.kappa:g}"
        )
    lines.append(f"{'L':>6} {'rows':>6} {'median_err':>12} {'max_err':>12}")
    for p in agg["per_L"]:
        lines.append(
            f"{p['L']:>6} {p['n']:>6} {p['median']:>12.6f} {p['max']:>12.6f}"
        )
    thr = agg["threshold"]
    lines.append(
        f"trend {'ok' if agg['trend_ok'] else 'VIOLATED'}; final median "
        f"{agg['final_median']:.6f}"
        + (f" vs threshold {thr:g}" if thr is not None else "")
    )
    lines.append(verdict_line(agg, exp))
    return "\n".join(lines)


def verdict_line(agg, exp=None):
    """Single machine-readable line summarizing the outcome."""
    tag = f"mode={exp.mode} profile={exp.profile.name} " if exp is not None else ""
    thr = agg["threshold"]
    return (
        f"VERDICT {tag}verdict={agg['verdict']} "
        f"final_median={agg['final_median']:.6g}"
        + (f" threshold={thr:g}" if thr is not None else "")
    )
