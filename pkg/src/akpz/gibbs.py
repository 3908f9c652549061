"""Uniform sampling of fixed-slope tilings on a torus.

State: an int64 height array on the n x n fundamental domain of a
quasi-periodic height function, h(x + n e1) = h(x) + k1 and
h(x + n e2) = h(x) + k2, with every increment (e1, e2 and diagonal) in
{0, 1}. The integers (k1, k2) pin the average slope to (k1/n, k2/n); the
number of particles per line is then n - k1 - k2 automatically. Single-vertex
cube flips (+1 where all three forward increments are 1 and all backward ones
are 0, mirrored for -1) are symmetric and connect the state space, so running
them as a Metropolis chain with uniform proposals converges to the uniform
distribution over admissible arrays with the given (k1, k2).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels as K
from .errors import DomainError, WindowExhaustedError
from .heights import HeightField, config_from_height, reanchor
from .lattice import Slope, build_config

SALT_GIBBS = 2


def make_counts(n, rho1, rho2):
    """Integer slope counts (k1, k2, k3) for an n-torus targeting the given
    tile fractions; k3 (particles per line) is rounded first so the particle
    density is matched as closely as possible."""
    Slope(rho1, rho2).validate(0.0)
    rho3 = 1.0 - rho1 - rho2
    k3 = int(round(n * rho3))
    k1 = int(round(rho1 / (rho1 + rho2) * (n - k3)))
    k2 = n - k3 - k1
    if min(k1, k2, k3) < 1:
        raise DomainError(
            f"counts ({k1}, {k2}, {k3}) leave a species empty at n={n}; "
            "use a larger torus or a less extreme slope"
        )
    return k1, k2, k3


def even_tiling(n, k1, k2):
    """The maximally even admissible array: floor((k1 x1 + k2 x2) / n)."""
    i = np.arange(n, dtype=np.int64)
    return (k1 * i[:, None] + k2 * i[None, :]) // n


@dataclass
class TorusTiling:
    """A quasi-periodic height sample plus the chain counters that made it."""

    n: int
    k1: int
    k2: int
    values: np.ndarray  # int64 (n, n), the fundamental domain
    proposals: int = 0
    accepted: int = 0

    @property
    def rho1(self):
        return self.k1 / self.n

    @property
    def rho2(self):
        return self.k2 / self.n

    @property
    def rho3(self):
        return (self.n - self.k1 - self.k2) / self.n

    def value(self, x1, x2):
        """Quasi-periodic height at arbitrary integer vertices (vectorized)."""
        x1 = np.asarray(x1, dtype=np.int64)
        x2 = np.asarray(x2, dtype=np.int64)
        q1, r1 = np.divmod(x1, self.n)
        q2, r2 = np.divmod(x2, self.n)
        out = self.values[r1, r2] + q1 * self.k1 + q2 * self.k2
        return out if out.ndim else int(out)

    def heights(self, x1_lo, x1_hi, x2_lo, x2_hi):
        i = np.arange(x1_lo, x1_hi + 1, dtype=np.int64)
        j = np.arange(x2_lo, x2_hi + 1, dtype=np.int64)
        vals = self.value(i[:, None], j[None, :])
        return HeightField(x1_lo, x2_lo, vals)

    def validate(self):
        hf = self.heights(0, self.n, 0, self.n)  # wraps one step past the domain
        return hf.validate()

    def particle_positions(self, ell, x1_lo, x1_hi):
        """Doubled positions of the particles on a line, from the diagonal
        height increments between x1_lo and x1_hi."""
        x1 = np.arange(x1_lo, x1_hi + 1, dtype=np.int64)
        h = self.value(x1, x1 + ell)
        occ = np.flatnonzero(np.diff(h) == 0)
        return 2 * x1[occ] + ell


def sample_gibbs(n, rho1, rho2, seed, sweeps=None, chain=None):
    """Draw a tiling of the n-torus at the slope closest to (rho1, rho2).

    One sweep is n^2 proposed flips; the default budget of 10 * n^2 sweeps is
    far past the mixing scale observed for these sizes. Pass a TorusTiling as
    `chain` (with a fresh seed) to extend an existing run instead of starting
    from the even tiling.
    """
    k1, k2, k3 = make_counts(n, rho1, rho2)
    if chain is not None:
        if chain.n != n or chain.k1 != k1 or chain.k2 != k2:
            raise ValueError("chain state does not match the requested ensemble")
        h = chain.values.copy()
        prev_prop, prev_acc = chain.proposals, chain.accepted
    else:
        h = even_tiling(n, k1, k2)
        prev_prop = prev_acc = 0
    if sweeps is None:
        sweeps = 10 * n * n
    rng = K.seed_state(seed, SALT_GIBBS)
    counters = np.zeros(2, dtype=np.int64)
    K._gibbs_sweeps(h, n, k1, k2, rng, int(sweeps) * n * n, counters)
    return TorusTiling(
        n, k1, k2, h,
        proposals=prev_prop + int(counters[0]),
        accepted=prev_acc + int(counters[1]),
    )


def unroll_to_config(tiling, x1_lo, x1_hi, x2_lo, x2_hi, anchored=True):
    """Materialize the particle window encoded on a coordinate rectangle."""
    hf = tiling.heights(x1_lo, x1_hi, x2_lo, x2_hi)
    cfg = config_from_height(hf, anchored=False)
    if anchored:
        cfg = reanchor(cfg)
    return cfg


def unroll_window(tiling, ell_lo, ell_hi, z2_lo, z2_hi, anchored=False):
    """Materialize the lines ell_lo..ell_hi over a doubled-position span.

    Labels follow the absolute height/label correspondence, so heights read
    back from the window agree with the tiling's own (up to reanchoring).
    """
    per_line = []
    for ell in range(ell_lo, ell_hi + 1):
        a = -((ell - z2_lo) // 2)  # ceil((z2_lo - ell) / 2)
        b = (z2_hi - ell) // 2
        if b < a:
            raise WindowExhaustedError(f"span too narrow for line {ell}")
        x1 = np.arange(a, b + 2, dtype=np.int64)
        h = tiling.value(x1, x1 + ell)
        occ = np.flatnonzero(np.diff(h) == 0)
        if len(occ) < 2:
            raise WindowExhaustedError(
                f"line {ell}: fewer than two particles in the span"
            )
        base = int(x1[occ[0]] - h[occ[0]] + 1)
        per_line.append((base, 2 * x1[occ] + ell))
    cfg = build_config(per_line, ell_lo, anchored=False)
    return reanchor(cfg) if anchored else cfg


# ---------------------------------------------------------------------------
# sample statistics


def density_stats(sample, line, r):
    """Number of particles on the line with horizontal coordinate in 1..r.

    A particle sits on the diagonal step out of vertex (x1, x1 + line)
    exactly when that height increment vanishes, so the count is r minus the
    height gain along the diagonal.
    """
    if r < 1:
        raise ValueError("r must be >= 1")
    lo = sample.value(1, 1 + line)
    hi = sample.value(r + 1, r + 1 + line)
    return int(r - (hi - lo))


def fluctuation_stats(sample, rho=None, Lwin=64):
    """max over the square |x1|, |x2| <= Lwin of |h(x) - h(0) - rho . x|.

    Default rho is the sample's own realized slope, which removes the
    rounding part of the deviation on a torus.
    """
    if rho is None:
        rho = (sample.rho1, sample.rho2)
    x1 = np.arange(-Lwin, Lwin + 1, dtype=np.int64)
    x2 = np.arange(-Lwin, Lwin + 1, dtype=np.int64)
    h = sample.heights(-Lwin, Lwin, -Lwin, Lwin).values
    h0 = sample.value(0, 0)
    plane = rho[0] * x1[:, None] + rho[1] * x2[None, :]
    return float(np.abs(h - h0 - plane).max())


# ---------------------------------------------------------------------------
# drift measurement


def drift_estimate(rho1, rho2, n, t_end, seeds, *, kappa=4.0, sweeps=None,
                   n_probes=16, base_seed=0):
    """Average interface speed at a fixed slope, from equilibrium starts.

    Each seed draws a torus sample, unrolls it into a window whose margins
    exceed kappa * t_end in every lattice direction (boundary frozen), runs
    the growth for t_end, and reads the mean probe drop J / t_end at vertices
    near the origin. The horizontal padding beyond the event box also scales
    with kappa * t_end: edge sites keep pulling particles inward for the whole
    run, so the boundary supply must cover that flux. Returns the seed-mean,
    its standard error, and the per-seed values.
    """
    from .growth import simulate
    from .lattice import LocalizationBox

    if t_end <= 0:
        raise ValueError("t_end must be positive")
    margin = max(8, int(math.ceil(kappa * t_end)))
    ml = 2 * margin
    mz2 = 2 * margin
    probes = [(0, 2 * k + 1) for k in range(-(n_probes // 2), n_probes - n_probes // 2)]
    probe_z2 = max(abs(z) for _, z in probes) + 1
    active = LocalizationBox(-ml, ml, -(mz2 + probe_z2), mz2 + probe_z2)
    k1, k2, k3 = make_counts(n, rho1, rho2)
    gap = int(math.ceil(n / max(1, k3)))
    pad2 = 8 * gap + 32 + 2 * margin * gap
    per_seed = []
    for i in range(int(seeds)):
        seed = base_seed + i
        sample = sample_gibbs(n, rho1, rho2, seed, sweeps=sweeps)
        cfg = unroll_window(
            sample, -ml, ml, active.z2_lo - pad2, active.z2_hi + pad2,
        )
        res = simulate(
            cfg, t_end, gen_box=active, seed=seed, probes=probes,
        )
        vhat = float(res.crossings[-1].mean()) / t_end
        per_seed.append((seed, vhat))
    vals = np.array([v for _, v in per_seed])
    stderr = float(vals.std(ddof=1) / math.sqrt(len(vals))) if len(vals) > 1 else 0.0
    return {
        "rho1": k1 / n,
        "rho2": k2 / n,
        "n": n,
        "t_end": float(t_end),
        "seeds": int(seeds),
        "estimate": float(vals.mean()),
        "stderr": stderr,
        "per_seed": per_seed,
    }
