"""Shared fixtures and the acceptance report hook.

Acceptance tests record one line per criterion through `record_criterion`;
the terminal summary prints them all so a run ends with a visible
per-criterion verdict block.
"""

import numpy as np
import pytest

from akpz.lattice import LocalizationBox
from akpz.heights import config_from_profile, make_profile

_CRITERIA = {}


@pytest.fixture(scope="session")
def record_criterion():
    def _rec(cid, ok, detail):
        _CRITERIA[cid] = (bool(ok), str(detail))
        return bool(ok)

    return _rec


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for cid in sorted(_CRITERIA):
        ok, detail = _CRITERIA[cid]
        status = "PASS" if ok else "FAIL"
        terminalreporter.write_line(f"ACCEPTANCE {cid}: {status} ({detail})")


@pytest.fixture(scope="session")
def small_window():
    """A modest anchored window around the origin at slope (1/3, 1/3)."""
    prof = make_profile("affine", rho1=1 / 3, rho2=1 / 3)
    box = LocalizationBox(-10, 10, -24, 24)
    cfg = config_from_profile(prof, 1, box, pad_z2=16)
    return cfg, box


def random_interlaced(rng, n_lines=5, n_part=None):
    """A random valid window built line by line: equal particle counts, each
    position drawn from its interlacing slot on the previous line."""
    from akpz.lattice import build_config

    if n_part is None:
        n_part = int(rng.integers(2, 4))
    ell0 = int(rng.integers(-2, 3))
    first = ell0 & 1
    pos = first + 2 * np.cumsum(rng.integers(1, 4, size=n_part))
    per = [pos.astype(np.int64)]
    for li in range(1, n_lines):
        prev = per[-1]
        cur = np.empty(n_part, dtype=np.int64)
        for p in range(n_part):
            lo = int(prev[p]) + 1  # opposite parity of prev = this line's parity
            if p + 1 < n_part:
                k = (int(prev[p + 1]) - 1 - lo) // 2
            else:
                k = 2
            cur[p] = lo + 2 * int(rng.integers(0, k + 1))
        per.append(cur)
    cfg = build_config([(0, seg) for seg in per], ell0, anchored=False)
    assert cfg.validate() == []
    return cfg


def make_oracle_case(rng):
    """(cfg, events, t_end, box) for a tiny instance within the oracle guards,
    or None when the drawn window is unsuitable (caller retries)."""
    from akpz.errors import WindowExhaustedError
    from akpz.growth import generate_events

    cfg = random_interlaced(rng)
    active = range(cfg.ell0 + 1, cfg.ell_hi)
    lo = max(int(cfg.positions2(l)[0]) for l in active)
    hi = min(int(cfg.positions2(l)[-1]) for l in active) - 1
    if hi < lo + 1:
        return None
    box = LocalizationBox(cfg.ell0, cfg.ell_hi, lo, hi)
    t_end = float(rng.uniform(0.5, 2.0))
    try:
        ev = generate_events(box, t_end, seed=int(rng.integers(1 << 30)))
    except WindowExhaustedError:
        return None
    n_inside = int(np.searchsorted(ev.times, t_end, side="right"))
    if n_inside > 8:
        t_end = float(0.5 * (ev.times[7] + ev.times[8]))
    return cfg, ev, t_end, box


def tiny_instance(rng, max_extent=6, n_tweaks=6):
    """A random small window: an affine floor plus random valid -1 tweaks."""
    from akpz.heights import HeightField, config_from_height

    n1 = int(rng.integers(4, max_extent + 1))
    n2 = int(rng.integers(4, max_extent + 1))
    r1 = float(rng.uniform(0.15, 0.55))
    r2 = float(rng.uniform(0.15, min(0.55, 0.92 - r1)))
    x1 = np.arange(-1, n1 + 1)
    x2 = np.arange(-1, n2 + 1)
    base = np.floor(r1 * x1[:, None] + r2 * x2[None, :]).astype(np.int64)
    for _ in range(n_tweaks):
        i = int(rng.integers(0, base.shape[0]))
        j = int(rng.integers(0, base.shape[1]))
        base[i, j] -= 1
        if HeightField(-1, -1, base).validate():
            base[i, j] += 1
    hf = HeightField(-1, -1, base)
    assert not hf.validate()
    return config_from_height(hf, anchored=False)
