"""Hot loops: event-driven growth, cube-flip sweeps, 2-D Legendre scan.

Every kernel is written once in numba-compatible Python and compiled with
``@njit`` unless the environment variable ``AKPZ_NO_NUMBA`` is set to a truthy
value (or numba is missing), in which case the same source runs interpreted.
The two paths are bit-identical: the RNG is an explicit splitmix64 on uint64
numpy scalars, so results do not depend on which path executed (the
interpreted path merely silences benign unsigned-overflow warnings).

Layout conventions shared with the rest of the package:

* particle positions are doubled integers ``pos2`` (so half-integer lines stay
  exact), stored per line in one sorted int64 array with CSR offsets
  ``line_start``; the particle in slot ``j`` of line index ``li`` carries label
  ``base[li] + (j - line_start[li])``;
* a clock site is ``(ell, z2)`` with ``z2 = 2z`` and ``z2 === ell (mod 2)``;
* probe vertices are ``(ell, z2bar)`` with ``z2bar`` of the opposite parity,
  so position/probe comparisons are never ties.

Kernel status codes: 0 ok, 1 no particle right of a rung site (window
exhausted), 2 interlacing partner outside the window, 3 crossing-record
buffer full, 4 event budget exceeded.
"""

from __future__ import annotations

import functools
import os

import numpy as np

try:
    from numba import njit

    HAS_NUMBA = True
except ImportError:  # pragma: no cover - numba is an install dependency
    HAS_NUMBA = False

NUMBA_ENABLED = HAS_NUMBA and os.environ.get("AKPZ_NO_NUMBA", "").lower() not in (
    "1",
    "true",
    "yes",
)

U64 = np.uint64
_SM64_GAMMA = U64(0x9E3779B97F4A7C15)
_SM64_M1 = U64(0xBF58476D1CE4E5B9)
_SM64_M2 = U64(0x94D049BB133111EB)
_INV_2_53 = 1.1102230246251565e-16  # 2**-53
_BIG = 1.0e307  # finite/infinite threshold for grid values


# The bodies below reference each other through the module-level names that
# get rebound to the compiled versions, so the call graph stays inside njit
# when compilation is on and stays raw-python when it is off.


def _rng_next_body(state):
    """Advance splitmix64 state (uint64[1] array), return uint64."""
    state[0] = state[0] + _SM64_GAMMA
    z = state[0]
    z = (z ^ (z >> U64(30))) * _SM64_M1
    z = (z ^ (z >> U64(27))) * _SM64_M2
    return z ^ (z >> U64(31))


def _rng_uniform_body(state):
    """Uniform double in (0, 1]."""
    x = _rng_next(state)
    return (np.float64(x >> U64(11)) + 1.0) * _INV_2_53


def _bisect_gt_body(a, x, lo, hi):
    """First index in [lo, hi) with a[idx] > x."""
    while lo < hi:
        mid = (lo + hi) >> 1
        if a[mid] > x:
            hi = mid
        else:
            lo = mid + 1
    return lo


def _bisect_ge_body(a, x, lo, hi):
    """First index in [lo, hi) with a[idx] >= x."""
    while lo < hi:
        mid = (lo + hi) >> 1
        if a[mid] >= x:
            hi = mid
        else:
            lo = mid + 1
    return lo


def _apply_ring_body(
    pos,
    line_start,
    base,
    ell0,
    ell,
    z2,
    t,
    probe_line,
    probe_z2,
    probe_cross,
    rec_cap,
    rec_t,
    rec_p,
    rec_n,
    record_times,
):
    """Apply one clock ring at site (ell, z2).

    Returns 1 if a particle jumped, 0 if nothing happened, -1 if no particle
    sits right of the site inside the window, -2 if an interlacing partner is
    not represented, -3 on crossing-record overflow.
    """
    li = ell - ell0
    s = line_start[li]
    e = line_start[li + 1]
    j = _bisect_gt(pos, z2, s, e)
    if j == e:
        return -1
    if j > s and pos[j - 1] == z2:
        return 0  # occupied site
    p = base[li] + (j - s)
    # partner (p - 1, ell + 1)
    su = line_start[li + 1]
    eu = line_start[li + 2]
    ju = su + (p - 1 - base[li + 1])
    if ju < su or ju >= eu:
        return -2
    # partner (p, ell - 1)
    sd = line_start[li - 1]
    ed = line_start[li]
    jd = sd + (p - base[li - 1])
    if jd < sd or jd >= ed:
        return -2
    if pos[ju] < z2 and pos[jd] < z2:
        old2 = pos[j]
        pos[j] = z2  # order on the line is preserved: z2 > left neighbour
        npr = probe_line.shape[0]
        if npr > 0:
            plo = _bisect_ge(probe_line, ell, 0, npr)
            phi = _bisect_gt(probe_line, ell, 0, npr)
            if plo < phi:
                i1 = _bisect_gt(probe_z2, z2, plo, phi)
                i2 = _bisect_ge(probe_z2, old2, plo, phi)
                for i in range(i1, i2):
                    probe_cross[i] += 1
                    if record_times != 0:
                        k = rec_n[0]
                        if k >= rec_cap:
                            return -3
                        rec_t[k] = t
                        rec_p[k] = i
                        rec_n[0] = k + 1
        return 1
    return 0


def _decode_site_body(uu, ell0g, c0, c1, zlo2g):
    """Map a flat site index to (ell, z2) for the generation box."""
    pair = c0 + c1
    q = uu // pair
    r = uu - q * pair
    if r < c0:
        ell = ell0g + 2 * q
        off = r
    else:
        ell = ell0g + 2 * q + 1
        off = r - c0
    z2 = zlo2g + ((ell - zlo2g) & 1) + 2 * off
    return ell, z2


def _growth_fused_body(
    pos,
    line_start,
    base,
    ell0,
    ell0g,
    c0,
    c1,
    zlo2g,
    total_sites,
    al_lo,
    al_hi,
    azlo2,
    azhi2,
    rng,
    clock,
    pend_t,
    pend_site,
    t_stop,
    max_events,
    counters,
    probe_line,
    probe_z2,
    probe_cross,
    rec_cap,
    rec_t,
    rec_p,
    rec_n,
    record_times,
):
    """Generate the superposed Poisson stream and apply it on the fly.

    counters[0] counts generated events (including filtered ones),
    counters[1] counts jumps. pend_t/pend_site carry the one look-ahead event
    across calls so the draw sequence is independent of segmentation.
    """
    inv_sites = 1.0 / total_sites
    while True:
        if pend_t[0] >= 0.0:
            t = pend_t[0]
            ell = pend_site[0]
            z2 = pend_site[1]
            pend_t[0] = -1.0
        else:
            u = _rng_uniform(rng)
            t = clock[0] - np.log(u) * inv_sites
            w = _rng_next(rng)
            uu = np.int64(w % U64(total_sites))
            ell, z2 = _decode_site(uu, ell0g, c0, c1, zlo2g)
        if t > t_stop:
            pend_t[0] = t
            pend_site[0] = ell
            pend_site[1] = z2
            return 0
        clock[0] = t
        counters[0] += 1
        if counters[0] > max_events:
            return 4
        if ell <= al_lo or ell >= al_hi or z2 < azlo2 or z2 > azhi2:
            continue
        st = _apply_ring(
            pos,
            line_start,
            base,
            ell0,
            ell,
            z2,
            t,
            probe_line,
            probe_z2,
            probe_cross,
            rec_cap,
            rec_t,
            rec_p,
            rec_n,
            record_times,
        )
        if st == 1:
            counters[1] += 1
        elif st == -1:
            return 1
        elif st == -2:
            return 2
        elif st == -3:
            return 3


def _gen_events_body(
    rng,
    clock,
    pend_t,
    pend_site,
    t_stop,
    ell0g,
    c0,
    c1,
    zlo2g,
    total_sites,
    times,
    lines,
    z2s,
    start_idx,
):
    """Materialize the stream into arrays; same draw order as the fused loop.

    Returns (next_index, status); status 3 means the capacity was reached and
    the caller should grow the arrays and call again (the look-ahead event is
    parked in pend).
    """
    inv_sites = 1.0 / total_sites
    cap = times.shape[0]
    k = start_idx
    while True:
        if pend_t[0] >= 0.0:
            t = pend_t[0]
            ell = pend_site[0]
            z2 = pend_site[1]
            pend_t[0] = -1.0
        else:
            u = _rng_uniform(rng)
            t = clock[0] - np.log(u) * inv_sites
            w = _rng_next(rng)
            uu = np.int64(w % U64(total_sites))
            ell, z2 = _decode_site(uu, ell0g, c0, c1, zlo2g)
        if t > t_stop:
            pend_t[0] = t
            pend_site[0] = ell
            pend_site[1] = z2
            return k, 0
        if k >= cap:
            pend_t[0] = t
            pend_site[0] = ell
            pend_site[1] = z2
            return k, 3
        clock[0] = t
        times[k] = t
        lines[k] = ell
        z2s[k] = z2
        k += 1


def _apply_events_body(
    pos,
    line_start,
    base,
    ell0,
    times,
    lines,
    z2s,
    i0,
    i1,
    al_lo,
    al_hi,
    azlo2,
    azhi2,
    max_events,
    counters,
    probe_line,
    probe_z2,
    probe_cross,
    rec_cap,
    rec_t,
    rec_p,
    rec_n,
    record_times,
):
    """Apply a materialized event slice [i0, i1)."""
    for k in range(i0, i1):
        counters[0] += 1
        if counters[0] > max_events:
            return 4
        ell = lines[k]
        z2 = z2s[k]
        if ell <= al_lo or ell >= al_hi or z2 < azlo2 or z2 > azhi2:
            continue
        st = _apply_ring(
            pos,
            line_start,
            base,
            ell0,
            ell,
            z2,
            times[k],
            probe_line,
            probe_z2,
            probe_cross,
            rec_cap,
            rec_t,
            rec_p,
            rec_n,
            record_times,
        )
        if st == 1:
            counters[1] += 1
        elif st == -1:
            return 1
        elif st == -2:
            return 2
        elif st == -3:
            return 3
    return 0


def _gibbs_sweeps_body(h, n, k1, k2, rng, n_proposals, counters):
    """Symmetric single-vertex cube flips on the quasi-periodic height torus.

    h is int64[n, n] with h(x + n*e1) = h + k1, h(x + n*e2) = h + k2. A +1
    flip needs all three forward increments equal to 1 and all three backward
    increments equal to 0 (mirrored for -1), which keeps every increment in
    {0, 1}. counters: [proposals, accepted].
    """
    un = U64(n)
    for _ in range(n_proposals):
        i = np.int64(_rng_next(rng) % un)
        j = np.int64(_rng_next(rng) % un)
        up = (_rng_next(rng) & U64(1)) == U64(1)
        hc = h[i, j]
        ip = i + 1
        jp = j + 1
        if ip == n:
            a1 = h[0, j] + k1
        else:
            a1 = h[ip, j]
        if jp == n:
            a2 = h[i, 0] + k2
        else:
            a2 = h[i, jp]
        if ip == n and jp == n:
            a3 = h[0, 0] + k1 + k2
        elif ip == n:
            a3 = h[0, jp] + k1
        elif jp == n:
            a3 = h[ip, 0] + k2
        else:
            a3 = h[ip, jp]
        im = i - 1
        jm = j - 1
        if im < 0:
            b1 = h[n - 1, j] - k1
        else:
            b1 = h[im, j]
        if jm < 0:
            b2 = h[i, n - 1] - k2
        else:
            b2 = h[i, jm]
        if im < 0 and jm < 0:
            b3 = h[n - 1, n - 1] - k1 - k2
        elif im < 0:
            b3 = h[n - 1, jm] - k1
        elif jm < 0:
            b3 = h[im, n - 1] - k2
        else:
            b3 = h[im, jm]
        counters[0] += 1
        if up:
            if (
                a1 - hc == 1
                and a2 - hc == 1
                and a3 - hc == 1
                and hc - b1 == 0
                and hc - b2 == 0
                and hc - b3 == 0
            ):
                h[i, j] = hc + 1
                counters[1] += 1
        else:
            if (
                a1 - hc == 0
                and a2 - hc == 0
                and a3 - hc == 0
                and hc - b1 == 1
                and hc - b2 == 1
                and hc - b3 == 1
            ):
                h[i, j] = hc - 1
                counters[1] += 1
    return 0


def _lf2d_body(z1, z2, f, y1, y2, out):
    """out[a, b] = max over finite f of z1[i]*y1[a] + z2[j]*y2[b] - f[i, j]."""
    n1 = z1.shape[0]
    n2 = z2.shape[0]
    m1 = y1.shape[0]
    m2 = y2.shape[0]
    for a in range(m1):
        ya = y1[a]
        for b in range(m2):
            yb = y2[b]
            best = -1.7e308
            for i in range(n1):
                zya = z1[i] * ya
                for j in range(n2):
                    fij = f[i, j]
                    if fij < _BIG:
                        val = zya + z2[j] * yb - fij
                        if val > best:
                            best = val
            out[a, b] = best
    return 0


_BODIES = {
    "_rng_next": _rng_next_body,
    "_rng_uniform": _rng_uniform_body,
    "_bisect_gt": _bisect_gt_body,
    "_bisect_ge": _bisect_ge_body,
    "_apply_ring": _apply_ring_body,
    "_decode_site": _decode_site_body,
    "_growth_fused": _growth_fused_body,
    "_gen_events": _gen_events_body,
    "_apply_events": _apply_events_body,
    "_gibbs_sweeps": _gibbs_sweeps_body,
    "_lf2d": _lf2d_body,
}

if NUMBA_ENABLED:
    # nogil lets independent harness runs share a thread pool
    for _name, _body in _BODIES.items():
        globals()[_name] = njit(cache=True, nogil=True)(_body)
else:
    # Helpers stay raw so nested calls do not pay a context-manager per call;
    # only the public entry points wrap the uint64 overflow warning filter.
    for _name, _body in _BODIES.items():
        globals()[_name] = _body

    def _errstate_wrap(fn):
        @functools.wraps(fn)
        def wrapper(*args):
            with np.errstate(over="ignore"):
                return fn(*args)

        return wrapper

    for _name in ("_growth_fused", "_gen_events", "_gibbs_sweeps", "_lf2d", "_apply_events"):
        globals()[_name] = _errstate_wrap(globals()[_name])


def seed_state(seed, salt=0):
    """Build a splitmix64 state array from a user seed and a purpose salt."""
    s = np.zeros(1, dtype=np.uint64)
    with np.errstate(over="ignore"):
        s[0] = (U64(int(seed) & 0xFFFFFFFFFFFFFFFF) ^ (_SM64_GAMMA * U64(salt + 1))) * _SM64_M1
        _rng_next_body(s)
        _rng_next_body(s)
    return s


def rng_next(state):
    """Single RNG step, callable from regular Python (test/diagnostic use)."""
    with np.errstate(over="ignore"):
        return _rng_next_body(state)


# Raw sources, for the dual-path benchmark.
PY_IMPLS = _BODIES
