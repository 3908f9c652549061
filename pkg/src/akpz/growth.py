"""Event-driven growth dynamics on interlaced particle windows.

Clock rings form a rate-1 Poisson process per site; the process is realized
as one merged exponential stream over all sites of a generation box, with an
independent uniform site mark per arrival. Restricting application to a
smaller active box discards the marks outside it while consuming the same
draws, so runs with nested active boxes are exactly coupled (the restricted
run sees the subset of rings it should). A one-event look-ahead is carried
across pauses, which makes the draw sequence independent of how a run is
segmented by sample times, and makes fused generate-and-apply bit-identical
to materializing the stream first and replaying it.

A ring at a free site z moves the left-most particle right of z onto z iff
both interlacing partners of that particle sit strictly left of z; the jump
preserves the order on the line, so it is an in-place position update.
Heights only decrease: each jump across a probe vertex lowers the height
there by one, so h(x, t) = h(x, 0) - (crossings at x by time t).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import _kernels as K
from ._xi import oracle_evolve as variational_oracle  # noqa: F401  (re-export)
from .errors import ResourceGuardError, WindowExhaustedError
from .lattice import LocalizationBox, ParticleConfig

SALT_GROWTH = 1


def _default_budget(total_sites, t_end):
    lam = total_sites * t_end
    return int(lam + 10.0 * math.sqrt(lam + 1.0) + 1024.0)


def _raise_status(status, where):
    if status == 0:
        return
    if status == 1:
        raise WindowExhaustedError(
            f"{where}: a ring found no particle to its right inside the window; "
            "increase the horizontal padding"
        )
    if status == 2:
        raise WindowExhaustedError(
            f"{where}: an interlacing partner is not represented; "
            "increase the line or horizontal padding"
        )
    if status == 3:
        raise ResourceGuardError(f"{where}: crossing-record capacity exhausted")
    if status == 4:
        raise ResourceGuardError(f"{where}: event budget exceeded")
    raise RuntimeError(f"{where}: unknown kernel status {status}")


@dataclass
class EventStream:
    """A materialized ring stream for a generation box over [0, t_end]."""

    gen_box: LocalizationBox
    seed: int
    t_end: float
    times: np.ndarray
    lines: np.ndarray
    z2s: np.ndarray

    def __len__(self):
        return len(self.times)


def generate_events(gen_box, t_end, seed, max_events=None):
    """Materialize the merged ring stream in increasing time order."""
    ell0g, nl, c0, c1, zlo2g, total = gen_box.site_params()
    if total <= 0:
        raise ValueError("generation box holds no sites")
    if max_events is None:
        max_events = _default_budget(total, t_end)
    rng = K.seed_state(seed, SALT_GROWTH)
    clock = np.zeros(1)
    pend_t = np.full(1, -1.0)
    pend_site = np.zeros(2, dtype=np.int64)
    cap = int(total * t_end + 6.0 * math.sqrt(total * t_end + 1.0) + 64.0)
    times = np.empty(cap)
    lines = np.empty(cap, dtype=np.int64)
    z2s = np.empty(cap, dtype=np.int64)
    k = 0
    while True:
        k, status = K._gen_events(
            rng, clock, pend_t, pend_site, float(t_end),
            ell0g, c0, c1, zlo2g, total,
            times, lines, z2s, k,
        )
        if status == 0:
            break
        # capacity reached: grow and continue (look-ahead is parked in pend)
        if k > max_events:
            raise ResourceGuardError(
                f"event stream exceeded the budget of {max_events} events"
            )
        cap = int(cap * 1.6 + 64)
        times = np.concatenate([times[:k], np.empty(cap - k)])
        lines = np.concatenate([lines[:k], np.empty(cap - k, dtype=np.int64)])
        z2s = np.concatenate([z2s[:k], np.empty(cap - k, dtype=np.int64)])
    if k > max_events:
        raise ResourceGuardError(f"event stream exceeded the budget of {max_events} events")
    return EventStream(gen_box, seed, float(t_end), times[:k].copy(), lines[:k].copy(), z2s[:k].copy())


def _probe_abs_heights(cfg, pr):
    out = np.empty(len(pr), dtype=np.int64)
    for ell in np.unique(pr[:, 0]):
        m = pr[:, 0] == ell
        out[m] = cfg.abs_height(int(ell), pr[m, 1])
    return out


@dataclass
class GrowthResult:
    initial: Optional[ParticleConfig]
    config: ParticleConfig
    gen_box: LocalizationBox
    active_box: LocalizationBox
    t_end: float
    seed: Optional[int]
    sample_times: np.ndarray
    probes: Optional[np.ndarray]
    crossings: Optional[np.ndarray]  # cumulative counts, shape (n_times, n_probes)
    events_generated: int
    jumps: int
    crossing_log: Optional[tuple]

    def probe_heights(self, time_index=-1):
        """Heights at the probes (absolute convention) at a sampled time:
        initial height minus the cumulative crossing count."""
        if self.probes is None or self.initial is None:
            raise ValueError("run recorded no probes")
        h0 = _probe_abs_heights(self.initial, self.probes)
        return h0 - self.crossings[time_index]

    def crossing_counts(self, time_index=-1):
        """Probe vertex -> cumulative crossings, as a plain dict."""
        if self.probes is None:
            raise ValueError("run recorded no probes")
        return {
            (int(l), int(z)): int(c)
            for (l, z), c in zip(self.probes, self.crossings[time_index])
        }


def simulate(
    cfg,
    t_end,
    *,
    gen_box=None,
    seed=None,
    events=None,
    active_box=None,
    sample_times=None,
    probes=None,
    record_crossings=False,
    max_events=None,
    crossing_capacity=None,
    copy=True,
):
    """Run the growth dynamics to t_end.

    Either pass `gen_box` and `seed` (fused generation) or a materialized
    `events` stream; both produce bit-identical trajectories. `active_box`
    (default: the generation box) restricts which rings are applied.
    `probes` is an (n, 2) array of star vertices (line, doubled coordinate)
    whose crossing counts are reported cumulatively at each sample time.
    """
    if events is not None:
        if gen_box is not None and gen_box != events.gen_box:
            raise ValueError("gen_box disagrees with events.gen_box")
        gen_box = events.gen_box
        if t_end > events.t_end + 1e-12:
            raise ValueError("event stream is shorter than t_end")
    elif gen_box is None or seed is None:
        raise ValueError("need gen_box and seed, or a materialized event stream")

    active = active_box if active_box is not None else gen_box
    if not (
        gen_box.ell_lo <= active.ell_lo
        and active.ell_hi <= gen_box.ell_hi
        and gen_box.z2_lo <= active.z2_lo
        and active.z2_hi <= gen_box.z2_hi
    ):
        raise ValueError("active box must sit inside the generation box")
    if not (cfg.ell0 <= active.ell_lo and cfg.ell_hi >= active.ell_hi):
        raise ValueError(
            f"config lines [{cfg.ell0}, {cfg.ell_hi}] do not cover the active box "
            f"[{active.ell_lo}, {active.ell_hi}]"
        )

    work = cfg.copy() if copy else cfg
    initial = cfg if copy else cfg.copy()
    if sample_times is None:
        st = np.array([float(t_end)])
    else:
        st = np.asarray(sample_times, dtype=float)
        if len(st) == 0 or (np.diff(st) <= 0).any() or st[0] < 0 or st[-1] > t_end + 1e-12:
            raise ValueError("sample times must be increasing and inside [0, t_end]")
        if abs(st[-1] - t_end) > 1e-12:
            st = np.append(st, float(t_end))

    if probes is None:
        pr = np.zeros((0, 2), dtype=np.int64)
    else:
        pr = np.asarray(probes, dtype=np.int64).reshape(-1, 2)
        if (((pr[:, 1] - pr[:, 0]) % 2) == 0).any():
            raise ValueError("probe vertices must have the dual parity of their line")
    order = np.lexsort((pr[:, 1], pr[:, 0]))
    probe_line = np.ascontiguousarray(pr[order, 0])
    probe_z2 = np.ascontiguousarray(pr[order, 1])
    npr = len(pr)
    probe_cross = np.zeros(npr, dtype=np.int64)

    if record_crossings:
        rec_cap = crossing_capacity or int(4 * (1.0 + t_end) * max(npr, 1) + 1024)
    else:
        rec_cap = 1
    rec_t = np.zeros(rec_cap)
    rec_p = np.zeros(rec_cap, dtype=np.int64)
    rec_n = np.zeros(1, dtype=np.int64)

    ell0g, nl, c0, c1, zlo2g, total = gen_box.site_params()
    if max_events is None:
        max_events = _default_budget(total, t_end)
    counters = np.zeros(2, dtype=np.int64)
    crossings = np.zeros((len(st), npr), dtype=np.int64)

    pos = np.ascontiguousarray(work.pos2)
    line_start = np.ascontiguousarray(work.line_start)
    base = np.ascontiguousarray(work.base)
    work.pos2 = pos
    work.line_start = line_start
    work.base = base
    rec_flag = 1 if record_crossings else 0

    if events is None:
        rng = K.seed_state(seed, SALT_GROWTH)
        clock = np.zeros(1)
        pend_t = np.full(1, -1.0)
        pend_site = np.zeros(2, dtype=np.int64)
        for k, tau in enumerate(st):
            status = K._growth_fused(
                pos, line_start, base, work.ell0,
                ell0g, c0, c1, zlo2g, total,
                active.ell_lo, active.ell_hi, active.z2_lo, active.z2_hi,
                rng, clock, pend_t, pend_site, float(tau), max_events, counters,
                probe_line, probe_z2, probe_cross,
                rec_cap, rec_t, rec_p, rec_n, rec_flag,
            )
            _raise_status(status, f"growth segment ending {tau:g}")
            if npr:
                crossings[k][order] = probe_cross
    else:
        bounds = np.searchsorted(events.times, st, side="right")
        i0 = 0
        for k, tau in enumerate(st):
            i1 = int(bounds[k])
            status = K._apply_events(
                pos, line_start, base, work.ell0,
                events.times, events.lines, events.z2s, i0, i1,
                active.ell_lo, active.ell_hi, active.z2_lo, active.z2_hi,
                max_events, counters,
                probe_line, probe_z2, probe_cross,
                rec_cap, rec_t, rec_p, rec_n, rec_flag,
            )
            _raise_status(status, f"growth segment ending {tau:g}")
            i0 = i1
            if npr:
                crossings[k][order] = probe_cross
    log = None
    if record_crossings:
        n = int(rec_n[0])
        log = (rec_t[:n].copy(), order[rec_p[:n]])
    if counters[1] > 0:
        work.anchored = False  # the t=0 labeling convention, not an invariant
    return GrowthResult(
        initial=initial,
        config=work,
        gen_box=gen_box,
        active_box=active,
        t_end=float(t_end),
        seed=seed,
        sample_times=st,
        probes=pr if npr else None,
        crossings=crossings if npr else None,
        events_generated=int(counters[0]),
        jumps=int(counters[1]),
        crossing_log=log,
    )


def step(cfg, ell, z2):
    """Apply one ring at site (ell, z2) in plain Python (reference path).

    Returns the jumping particle's (label, old doubled position) or None when
    the ring has no effect; mutates cfg in place. Raises WindowExhaustedError
    when the window cannot decide the outcome.
    """
    if (z2 - ell) % 2 != 0:
        raise ValueError(f"site parity mismatch: line {ell}, doubled coord {z2}")
    if not (cfg.ell0 < ell < cfg.ell_hi):
        raise WindowExhaustedError(f"line {ell} lacks both neighbour lines in the window")
    seg = cfg.positions2(ell)
    j = int(np.searchsorted(seg, z2, side="right"))
    if j == len(seg):
        raise WindowExhaustedError(f"no particle right of site ({ell}, {z2}) in the window")
    if j > 0 and seg[j - 1] == z2:
        return None
    p = int(cfg.labels(ell)[j])
    up = cfg.position_of(p - 1, ell + 1)
    down = cfg.position_of(p, ell - 1)
    if up < z2 and down < z2:
        old = int(seg[j])
        seg[j] = z2
        return p, old
    return None


def run_pair_same_noise(cfg_a, cfg_b, gen_box, t_end, seed, **kw):
    """Evolve two initial conditions under one realization of the clocks."""
    ra = simulate(cfg_a, t_end, gen_box=gen_box, seed=seed, **kw)
    rb = simulate(cfg_b, t_end, gen_box=gen_box, seed=seed, **kw)
    return ra, rb


def run_pair_nested(cfg, gen_box, inner_box, t_end, seed, **kw):
    """Evolve one initial condition under the full and the restricted clocks
    of a single realization (exact subset coupling)."""
    r_full = simulate(cfg, t_end, gen_box=gen_box, seed=seed, **kw)
    r_inner = simulate(cfg, t_end, gen_box=gen_box, seed=seed, active_box=inner_box, **kw)
    return r_full, r_inner


def couple_monotone(cfg_low, cfg_high, t_end, *, gen_box=None, seed=None,
                    events=None, active_box=None, sample_times=None,
                    probes=None):
    """Run two height-ordered initial conditions against one clock stream and
    report whether the ordering survives at every sampled time.

    The default probe set is every star vertex of the active box covered by
    both windows. The initial ordering h_low <= h_high at the probes is a
    precondition; a violation raises instead of being reported.
    """
    box = active_box
    if box is None:
        box = gen_box if gen_box is not None else (
            events.gen_box if events is not None else None
        )
    if box is None:
        raise ValueError("need an active box, a gen_box, or an event stream")
    if probes is None:
        probes = []
        for ell in range(box.ell_lo + 1, box.ell_hi):
            if not (cfg_low.has_line(ell) and cfg_high.has_line(ell)):
                continue
            sa = cfg_low.positions2(ell)
            sb = cfg_high.positions2(ell)
            lo = max(box.z2_lo - 1, int(sa[0]), int(sb[0]))
            hi = min(box.z2_hi + 1, int(sa[-1]), int(sb[-1]))
            lo += (lo - ell + 1) & 1  # dual parity: z2bar - ell odd
            probes.extend((ell, z) for z in range(lo, hi + 1, 2))
    pr = np.asarray(probes, dtype=np.int64).reshape(-1, 2)
    if len(pr) == 0:
        raise ValueError("no comparable probe vertices in the active box")
    h0_low = _probe_abs_heights(cfg_low, pr)
    h0_high = _probe_abs_heights(cfg_high, pr)
    bad = np.flatnonzero(h0_low > h0_high)
    if len(bad):
        k = int(bad[0])
        raise ValueError(
            f"initial heights are not ordered at probe {tuple(int(v) for v in pr[k])}"
        )
    kw = dict(gen_box=gen_box, seed=seed, events=events, active_box=active_box,
              sample_times=sample_times, probes=pr)
    r_low = simulate(cfg_low, t_end, **kw)
    r_high = simulate(cfg_high, t_end, **kw)
    diff = (h0_high[None, :] - r_high.crossings) - (h0_low[None, :] - r_low.crossings)
    ordered = bool((diff >= 0).all())
    first = None
    if not ordered:
        kt, kp = np.argwhere(diff < 0)[0]
        first = (float(r_low.sample_times[kt]), (int(pr[kp, 0]), int(pr[kp, 1])))
    return {
        "ordered": ordered,
        "n_probes": int(len(pr)),
        "n_times": int(len(r_low.sample_times)),
        "min_margin": int(diff.min()),
        "max_margin": int(diff.max()),
        "first_violation": first,
        "low": r_low,
        "high": r_high,
    }


def propagation_check(cfg, x, n, t_end, seed=None, *, gen_box=None, events=None):
    """Compare the crossing history at a star vertex between the full run and
    the run whose rings are restricted to the box of n sites around x (2n
    lines, strict). True exactly when the two histories agree on [0, t_end].
    """
    ell_bar, z2bar = int(x[0]), int(x[1])
    if (z2bar - ell_bar) % 2 == 0:
        raise ValueError("x must be a star vertex (dual parity)")
    if n < 1:
        raise ValueError("n must be >= 1")
    rn = LocalizationBox(ell_bar - 2 * n, ell_bar + 2 * n, z2bar - 2 * n, z2bar + 2 * n)
    if gen_box is None and events is None:
        # keep rings a drift margin away from both window edges: particles
        # move left over time, so the right side drains at O(t_end) sites
        m2 = 2 * (2 + math.ceil(4.0 * t_end))
        lo = max(int(cfg.positions2(l)[0]) for l in range(cfg.ell0, cfg.ell_hi + 1)) + m2
        hi = min(int(cfg.positions2(l)[-1]) for l in range(cfg.ell0, cfg.ell_hi + 1)) - m2
        if lo > hi:
            raise WindowExhaustedError("window too narrow to host a generation box")
        gen_box = LocalizationBox(cfg.ell0, cfg.ell_hi, lo, hi)
    kw = dict(gen_box=gen_box, seed=seed, events=events,
              probes=[(ell_bar, z2bar)], record_crossings=True)
    r_full = simulate(cfg, t_end, **kw)
    r_loc = simulate(cfg, t_end, active_box=rn, **kw)
    ta, pa = r_full.crossing_log
    tb, pb = r_loc.crossing_log
    return bool(np.array_equal(ta, tb) and np.array_equal(pa, pb))
