"""Height functions, macroscopic profiles, and their discretizations.

A height function assigns an integer to every vertex of the square grid so
that the increments along +e1, +e2 and the diagonal +e1+e2 all lie in {0, 1}.
Such functions are in bijection (up to a constant) with interlaced particle
configurations: a particle sits between vertices x and x + (1,1) exactly when
the two heights agree, and the label of the right-most particle strictly left
of a vertex x on its line is recovered from the height as x1 - h(x) + C.

Macroscopic profiles are real-valued functions on R^2 whose gradient stays in
(an inner region of) the open triangle {rho1 > 0, rho2 > 0, rho1 + rho2 < 1}.
`config_from_profile` discretizes a profile at scale L by flooring L * f(x/L)
on the vertices of a window; the floor of any function with increments inside
the open unit interval automatically satisfies the {0, 1} increment rule, so
no repair pass is needed (the extraction still verifies it).
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .errors import DomainError, NumericalError, WindowExhaustedError
from .lattice import (
    DEFAULT_SLOPE_MARGIN,
    LocalizationBox,
    ParticleConfig,
    build_config,
)


# ---------------------------------------------------------------------------
# slope regions


@dataclass(frozen=True)
class SlopeRegion:
    """Convex region of the slope triangle covering a profile's gradients.

    kind is one of "point", "segment" (anchor + t * extent, t in [0, 1]) or
    "ball" (center anchor, radius extent[0]).
    """

    kind: str
    anchor: tuple
    extent: tuple

    def support(self, w):
        """max of w . rho over the region (exact, by shape)."""
        a = np.asarray(self.anchor)
        w = np.asarray(w, dtype=float)
        if self.kind == "point":
            return float(w @ a)
        if self.kind == "segment":
            return float(max(w @ a, w @ (a + np.asarray(self.extent))))
        if self.kind == "ball":
            return float(w @ a + self.extent[0] * math.hypot(w[0], w[1]))
        raise ValueError(f"unknown region kind {self.kind!r}")

    def check_margin(self, margin=DEFAULT_SLOPE_MARGIN):
        bad = (
            self.support((-1.0, 0.0)) > -margin
            or self.support((0.0, -1.0)) > -margin
            or self.support((1.0, 1.0)) > 1.0 - margin
        )
        if bad:
            raise DomainError(
                f"slope region ({self.kind}) closer than {margin} to the triangle boundary"
            )
        return self

    def max_rho12(self):
        return self.support((1.0, 1.0))

    def sample(self, res):
        """Point cloud covering the region (used as a slope grid)."""
        a = np.asarray(self.anchor, dtype=float)
        if self.kind == "point":
            return a[None, :]
        if self.kind == "segment":
            t = np.linspace(0.0, 1.0, res)
            return a[None, :] + t[:, None] * np.asarray(self.extent, dtype=float)[None, :]
        if self.kind == "ball":
            r = self.extent[0]
            g = np.linspace(-r, r, res)
            gx, gy = np.meshgrid(g, g, indexing="ij")
            m = gx * gx + gy * gy <= r * r * (1.0 + 1e-12)
            inner = np.stack([gx[m], gy[m]], axis=1)
            th = np.linspace(0.0, 2.0 * np.pi, 4 * res, endpoint=False)
            rim = r * np.stack([np.cos(th), np.sin(th)], axis=1)
            return a[None, :] + np.concatenate([inner, rim], axis=0)
        raise ValueError(f"unknown region kind {self.kind!r}")


# ---------------------------------------------------------------------------
# profiles


@dataclass(frozen=True)
class ProfileSpec:
    """A macroscopic profile with the derivatives and metadata the numerics
    need: f/grad/hess are vectorized over float coordinate arrays; `region`
    bounds the gradient range; `reduction` describes how to conjugate the
    non-affine part one-dimensionally (None when the profile is not convex).
    """

    name: str
    params: tuple
    convex: bool
    smooth: bool
    f: Callable
    grad: Callable
    hess: Callable
    region: SlopeRegion
    reduction: Optional[tuple]
    primal_radius: float

    def describe(self):
        ps = ", ".join(f"{k}={v:g}" for k, v in self.params)
        return f"{self.name}({ps})"


def affine_profile(rho1, rho2, margin=DEFAULT_SLOPE_MARGIN):
    region = SlopeRegion("point", (rho1, rho2), ()).check_margin(margin)

    def f(x1, x2):
        return rho1 * np.asarray(x1, float) + rho2 * np.asarray(x2, float)

    def grad(x1, x2):
        s = np.broadcast(np.asarray(x1, float), np.asarray(x2, float)).shape
        return np.full(s, rho1), np.full(s, rho2)

    def hess(x1, x2):
        s = np.broadcast(np.asarray(x1, float), np.asarray(x2, float)).shape
        z = np.zeros(s)
        return z, z.copy(), z.copy()

    return ProfileSpec(
        "affine", (("rho1", rho1), ("rho2", rho2)), True, True,
        f, grad, hess, region, ("zero",), 4.0,
    )


def _bump_radius(a, r_out):
    # max over u in [0,1] of |(1-u)^2 (1-4u)| sqrt(u), times a * r_out
    u = np.linspace(0.0, 1.0, 4097)
    m = np.abs((1.0 - u) ** 2 * (1.0 - 4.0 * u)) * np.sqrt(u)
    return abs(a) * r_out * float(m.max())


def quadratic_bump_profile(rho1, rho2, a=0.12, cx=0.0, cy=0.0, r_out=1.0,
                           margin=DEFAULT_SLOPE_MARGIN):
    """Affine background plus a compactly supported C^2 bump (not convex)."""
    rmax = _bump_radius(a, r_out)
    region = SlopeRegion("ball", (rho1, rho2), (rmax,)).check_margin(margin)
    inv_r2 = 1.0 / (r_out * r_out)

    def _du(x1, x2):
        d1 = np.asarray(x1, float) - cx
        d2 = np.asarray(x2, float) - cy
        u = np.minimum((d1 * d1 + d2 * d2) * inv_r2, 1.0)
        return d1, d2, u

    def f(x1, x2):
        d1, d2, u = _du(x1, x2)
        s = d1 * d1 + d2 * d2
        core = 0.5 * a * s * (1.0 - u) ** 3
        return rho1 * np.asarray(x1, float) + rho2 * np.asarray(x2, float) + core

    def grad(x1, x2):
        d1, d2, u = _du(x1, x2)
        g = a * (1.0 - u) ** 2 * (1.0 - 4.0 * u)
        return rho1 + g * d1, rho2 + g * d2

    def hess(x1, x2):
        d1, d2, u = _du(x1, x2)
        g = a * (1.0 - u) ** 2 * (1.0 - 4.0 * u)
        c = -6.0 * a * (1.0 - u) * (1.0 - 2.0 * u) * (2.0 * inv_r2)
        return g + c * d1 * d1, c * d1 * d2, g + c * d2 * d2

    return ProfileSpec(
        "bump",
        (("rho1", rho1), ("rho2", rho2), ("a", a), ("cx", cx), ("cy", cy), ("r_out", r_out)),
        False, True, f, grad, hess, region, None, 4.0 * r_out,
    )


def two_affine_profile(rho1m, rho2m, rho1p, rho2p, margin=DEFAULT_SLOPE_MARGIN):
    """max of two affine pieces through the origin (convex, one slope jump)."""
    w = (rho1p - rho1m, rho2p - rho2m)
    if w == (0.0, 0.0):
        raise DomainError("the two slopes coincide")
    region = SlopeRegion("segment", (rho1m, rho2m), w).check_margin(margin)

    def f(x1, x2):
        x1 = np.asarray(x1, float)
        x2 = np.asarray(x2, float)
        return np.maximum(rho1m * x1 + rho2m * x2, rho1p * x1 + rho2p * x2)

    def grad(x1, x2):
        t = w[0] * np.asarray(x1, float) + w[1] * np.asarray(x2, float)
        up = t > 0
        return np.where(up, rho1p, rho1m), np.where(up, rho2p, rho2m)

    def hess(x1, x2):
        s = np.broadcast(np.asarray(x1, float), np.asarray(x2, float)).shape
        z = np.zeros(s)
        return z, z.copy(), z.copy()

    def ridge_part(s):
        return np.maximum(np.asarray(s, float), 0.0)

    return ProfileSpec(
        "two_affine",
        (("rho1m", rho1m), ("rho2m", rho2m), ("rho1p", rho1p), ("rho2p", rho2p)),
        True, False, f, grad, hess, region,
        ("segment", w, ridge_part), 4.0,
    )


def smoothed_ridge_profile(rho1m, rho2m, rho1p, rho2p, eps=0.25,
                           margin=DEFAULT_SLOPE_MARGIN):
    """Softplus smoothing of two_affine: convex, C-infinity, slopes span the
    whole segment between the two corner slopes."""
    if eps <= 0:
        raise DomainError("eps must be positive")
    w = (rho1p - rho1m, rho2p - rho2m)
    if w == (0.0, 0.0):
        raise DomainError("the two slopes coincide")
    region = SlopeRegion("segment", (rho1m, rho2m), w).check_margin(margin)

    def _sig(t):
        out = np.empty_like(t)
        pos = t >= 0
        out[pos] = 1.0 / (1.0 + np.exp(-t[pos]))
        e = np.exp(t[~pos])
        out[~pos] = e / (1.0 + e)
        return out

    def f(x1, x2):
        x1 = np.asarray(x1, float)
        x2 = np.asarray(x2, float)
        t = (w[0] * x1 + w[1] * x2) / eps
        soft = np.maximum(t, 0.0) + np.log1p(np.exp(-np.abs(t)))
        return rho1m * x1 + rho2m * x2 + eps * soft

    def grad(x1, x2):
        t = (w[0] * np.asarray(x1, float) + w[1] * np.asarray(x2, float)) / eps
        s = _sig(np.atleast_1d(t))
        s = s.reshape(np.shape(t))
        return rho1m + s * w[0], rho2m + s * w[1]

    def hess(x1, x2):
        t = (w[0] * np.asarray(x1, float) + w[1] * np.asarray(x2, float)) / eps
        s = _sig(np.atleast_1d(t)).reshape(np.shape(t))
        c = s * (1.0 - s) / eps
        return c * w[0] * w[0], c * w[0] * w[1], c * w[1] * w[1]

    def ridge_part(s):
        t = np.asarray(s, float) / eps
        return eps * (np.maximum(t, 0.0) + np.log1p(np.exp(-np.abs(t))))

    return ProfileSpec(
        "ridge",
        (("rho1m", rho1m), ("rho2m", rho2m), ("rho1p", rho1p), ("rho2p", rho2p), ("eps", eps)),
        True, True, f, grad, hess, region,
        ("segment", w, ridge_part), max(8.0, 60.0 * eps),
    )


def capped_paraboloid_profile(rho1c, rho2c, a=0.25, r_cap=0.5,
                              margin=DEFAULT_SLOPE_MARGIN):
    """Affine plus a * (Huber of |x|): convex, C^1, gradient range is the
    full closed ball of radius a * r_cap (a genuinely two-dimensional range)."""
    if a <= 0 or r_cap <= 0:
        raise DomainError("a and r_cap must be positive")
    region = SlopeRegion("ball", (rho1c, rho2c), (a * r_cap,)).check_margin(margin)

    def f(x1, x2):
        x1 = np.asarray(x1, float)
        x2 = np.asarray(x2, float)
        r = np.hypot(x1, x2)
        psi = np.where(r <= r_cap, 0.5 * r * r, r_cap * r - 0.5 * r_cap * r_cap)
        return rho1c * x1 + rho2c * x2 + a * psi

    def grad(x1, x2):
        x1 = np.asarray(x1, float)
        x2 = np.asarray(x2, float)
        r = np.hypot(x1, x2)
        scale = a * np.where(r <= r_cap, 1.0, np.divide(r_cap, r, out=np.ones_like(r), where=r > 0))
        return rho1c + scale * x1, rho2c + scale * x2

    def hess(x1, x2):
        x1 = np.asarray(x1, float)
        x2 = np.asarray(x2, float)
        r = np.hypot(x1, x2)
        inside = r <= r_cap
        rs = np.where(r > 0, r, 1.0)
        c = a * r_cap / rs
        h11 = np.where(inside, a, c * (1.0 - x1 * x1 / (rs * rs)))
        h12 = np.where(inside, 0.0, -c * x1 * x2 / (rs * rs))
        h22 = np.where(inside, a, c * (1.0 - x2 * x2 / (rs * rs)))
        return h11, h12, h22

    def radial_part(r):
        r = np.asarray(r, float)
        return a * np.where(r <= r_cap, 0.5 * r * r, r_cap * r - 0.5 * r_cap * r_cap)

    return ProfileSpec(
        "cap",
        (("rho1c", rho1c), ("rho2c", rho2c), ("a", a), ("r_cap", r_cap)),
        True, False, f, grad, hess, region,
        ("radial", radial_part), 6.0 * r_cap,
    )


PROFILE_BUILDERS = {
    "affine": affine_profile,
    "bump": quadratic_bump_profile,
    "two_affine": two_affine_profile,
    "ridge": smoothed_ridge_profile,
    "cap": capped_paraboloid_profile,
}


def make_profile(name, **params):
    try:
        builder = PROFILE_BUILDERS[name]
    except KeyError:
        raise DomainError(
            f"unknown profile {name!r}; available: {sorted(PROFILE_BUILDERS)}"
        ) from None
    return builder(**params)


def gap_bound(profile):
    """Uniform bound on inter-particle gaps (in whole sites) for windows
    discretized from the profile: 2 / (1 - max over the slope region of
    rho1 + rho2). Any k consecutive empty sites force a height stretch that
    the slope bound caps."""
    return 2.0 / (1.0 - profile.region.max_rho12())


# ---------------------------------------------------------------------------
# discretization


def height_from_profile(profile, scale, x1, x2, rounding="floor"):
    """floor(L * f(x / L)) on integer vertex arrays, as int64.

    rounding="ceil" gives the matching upper discretization (also within the
    {0, 1} increment rule, and at most one above the floor one), used for
    coupling sandwiches.
    """
    v = profile.f(np.asarray(x1, float) / scale, np.asarray(x2, float) / scale)
    if rounding == "floor":
        return np.floor(scale * v).astype(np.int64)
    if rounding == "ceil":
        return np.ceil(scale * v).astype(np.int64)
    raise ValueError(f"unknown rounding {rounding!r}")


def config_from_profile(profile, scale, box, pad_z2=32, rounding="floor"):
    """Discretize a profile into an anchored particle window.

    The window holds every line of `box` (both closed boundary lines) over the
    doubled horizontal span [z2_lo - pad_z2, z2_hi + pad_z2]; labels follow
    the global height/label correspondence so the anchor holds automatically.
    """
    if pad_z2 < 2:
        raise ValueError("pad_z2 must be at least 2")
    h00 = int(
        height_from_profile(profile, scale, np.array([0]), np.array([0]), rounding)[0]
    )
    c_global = h00 - 1
    z_lo = box.z2_lo - pad_z2
    z_hi = box.z2_hi + pad_z2
    per_line = []
    for ell in range(box.ell_lo, box.ell_hi + 1):
        a = z_lo + ((ell - z_lo) & 1)  # first site coordinate with line parity
        z2s = np.arange(a, z_hi + 1, 2, dtype=np.int64)
        verts = np.arange(a - 1, z_hi + 2, 2, dtype=np.int64)
        vx1 = (verts - ell + 1) // 2
        hv = height_from_profile(profile, scale, vx1, vx1 + ell, rounding)
        dh = np.diff(hv)
        if ((dh < 0) | (dh > 1)).any():
            raise NumericalError(f"profile discretization broke increments on line {ell}")
        occ = np.flatnonzero(dh == 0)
        if len(occ) < 2:
            raise WindowExhaustedError(
                f"line {ell}: fewer than two particles in the padded span; increase pad_z2"
            )
        positions = z2s[occ]
        k0 = occ[0]
        base = int(vx1[k0] - hv[k0] + c_global + 1)
        per_line.append((base, positions))
    return build_config(per_line, box.ell_lo, anchored=True)


# ---------------------------------------------------------------------------
# height fields


@dataclass
class HeightField:
    """Integer heights on a coordinate rectangle [x1_lo..] x [x2_lo..]."""

    x1_lo: int
    x2_lo: int
    values: np.ndarray  # int64, shape (n1, n2)

    @property
    def n1(self):
        return self.values.shape[0]

    @property
    def n2(self):
        return self.values.shape[1]

    @property
    def x1_hi(self):
        return self.x1_lo + self.n1 - 1

    @property
    def x2_hi(self):
        return self.x2_lo + self.n2 - 1

    def value(self, x1, x2):
        return int(self.values[x1 - self.x1_lo, x2 - self.x2_lo])

    def __eq__(self, other):
        return (
            isinstance(other, HeightField)
            and self.x1_lo == other.x1_lo
            and self.x2_lo == other.x2_lo
            and np.array_equal(self.values, other.values)
        )

    def validate(self):
        """Check the {0, 1} increment rule in both directions and on diagonals."""
        problems = []
        v = self.values
        if v.shape[0] > 1:
            d1 = np.diff(v, axis=0)
            if ((d1 < 0) | (d1 > 1)).any():
                problems.append("+e1 increments leave {0, 1}")
        if v.shape[1] > 1:
            d2 = np.diff(v, axis=1)
            if ((d2 < 0) | (d2 > 1)).any():
                problems.append("+e2 increments leave {0, 1}")
        if v.shape[0] > 1 and v.shape[1] > 1:
            dd = v[1:, 1:] - v[:-1, :-1]
            if ((dd < 0) | (dd > 1)).any():
                problems.append("diagonal increments leave {0, 1}")
        return problems

    def to_csv(self, path_or_buf):
        buf = io.StringIO()
        buf.write("x1,x2,h\n")
        for i in range(self.n1):
            x1 = self.x1_lo + i
            row = self.values[i]
            for j in range(self.n2):
                buf.write(f"{x1},{self.x2_lo + j},{int(row[j])}\n")
        text = buf.getvalue()
        if hasattr(path_or_buf, "write"):
            path_or_buf.write(text)
        else:
            with open(path_or_buf, "w") as fh:
                fh.write(text)

    @classmethod
    def from_csv(cls, path_or_buf):
        if hasattr(path_or_buf, "read"):
            text = path_or_buf.read()
        else:
            with open(path_or_buf) as fh:
                text = fh.read()
        rows = [ln for ln in text.splitlines() if ln.strip()]
        if not rows or rows[0] != "x1,x2,h":
            raise ValueError("not a height CSV")
        data = np.array(
            [[int(c) for c in ln.split(",")] for ln in rows[1:]], dtype=np.int64
        )
        x1_lo, x2_lo = int(data[:, 0].min()), int(data[:, 1].min())
        n1 = int(data[:, 0].max()) - x1_lo + 1
        n2 = int(data[:, 1].max()) - x2_lo + 1
        if len(data) != n1 * n2:
            raise ValueError("height CSV does not cover a full rectangle")
        vals = np.zeros((n1, n2), dtype=np.int64)
        vals[data[:, 0] - x1_lo, data[:, 1] - x2_lo] = data[:, 2]
        return cls(x1_lo, x2_lo, vals)


def height_from_config(cfg, x1_lo, x1_hi, x2_lo, x2_hi, anchor=None):
    """Reconstruct heights on a rectangle from a particle window.

    With anchor None the absolute convention h = x1 - (label left of x) is
    used, which matches `config_from_height` round trips; anchor=((a1, a2),
    value) shifts so the given vertex takes the given value.
    """
    n1 = x1_hi - x1_lo + 1
    n2 = x2_hi - x2_lo + 1
    if n1 < 1 or n2 < 1:
        raise ValueError("empty rectangle")
    vals = np.zeros((n1, n2), dtype=np.int64)
    for ell in range(x2_lo - x1_hi, x2_hi - x1_lo + 1):
        a = max(x1_lo, x2_lo - ell)
        b = min(x1_hi, x2_hi - ell)
        if a > b:
            continue
        x1s = np.arange(a, b + 1, dtype=np.int64)
        labels = cfg.left_label(ell, 2 * x1s + ell - 1)
        vals[x1s - x1_lo, x1s + ell - x2_lo] = x1s - labels
    if anchor is not None:
        (a1, a2), target = anchor
        raw = a1 - cfg.left_label(a2 - a1, a1 + a2 - 1)
        vals += np.int64(target - raw)
    return HeightField(x1_lo, x2_lo, vals)


def config_from_height(hf, anchored=False):
    """Extract the particle window encoded by a height rectangle.

    Labels follow the absolute convention (h = x1 - label_left_of_vertex), so
    round-tripping through `height_from_config` with anchor None is exact.
    Only lines whose diagonal meets the rectangle in >= 2 vertices appear.
    """
    problems = hf.validate()
    if problems:
        raise ValueError("invalid height field: " + "; ".join(problems))
    per_line = []
    ells = []
    for ell in range(hf.x2_lo - hf.x1_hi, hf.x2_hi - hf.x1_lo + 1):
        a = max(hf.x1_lo, hf.x2_lo - ell)
        b = min(hf.x1_hi, hf.x2_hi - ell)
        if b - a < 1:
            continue
        x1s = np.arange(a, b + 1, dtype=np.int64)
        hv = hf.values[x1s - hf.x1_lo, x1s + ell - hf.x2_lo]
        occ = np.flatnonzero(np.diff(hv) == 0)
        if len(occ) == 0:
            continue
        k0 = occ[0]
        base = int(x1s[k0] - hv[k0] + 1)
        positions = 2 * x1s[occ] + ell
        per_line.append((ell, base, positions))
        ells.append(ell)
    if not per_line:
        raise ValueError("no particles in the rectangle")
    lo, hi = min(ells), max(ells)
    if ells != list(range(lo, hi + 1)):
        raise ValueError("rectangle too thin: particle lines not consecutive")
    cfg = build_config([(b, p) for _, b, p in per_line], lo, anchored=False)
    if anchored:
        cfg = reanchor(cfg)
    return cfg


def reanchor(cfg):
    """Shift all labels so the left-most non-negative particle of line 0 gets
    label 0."""
    seg = cfg.positions2(0)
    nn = int(np.searchsorted(seg, 0))
    if nn >= len(seg):
        raise WindowExhaustedError("line 0 has no particle at a non-negative position")
    li = 0 - cfg.ell0
    lbl = int(cfg.base[li] + nn)
    out = cfg.copy()
    out.base -= lbl
    out.anchored = True
    return out


# ---------------------------------------------------------------------------
# rendering


_TILE_FILL = {"v": "#e9e4d8", "a": "#f4b860", "b": "#4d7ea8"}
_SQ3 = math.sqrt(3.0)


def svg_snapshot(hf, unit=12.0):
    """Render a height rectangle as the lozenge tiling it encodes.

    Vertices (x1, x2, h) are projected along (1,1,1); each unit square of the
    rectangle splits into two lattice triangles whose increment pattern picks
    which of the three rhombus species covers it.
    """
    v = hf.values
    if v.shape[0] < 2 or v.shape[1] < 2:
        raise ValueError("rectangle too small to render")

    # projected vertex coordinates (e1 -> (sq3/2, 1/2 - d), e2 -> (-sq3/2, 1/2 - d))
    i = np.arange(v.shape[0])[:, None] + hf.x1_lo
    j = np.arange(v.shape[1])[None, :] + hf.x2_lo
    px = (i - j) * (_SQ3 / 2.0) * unit
    py = ((i + j) * 0.5 - v) * unit
    py = -py  # SVG y grows downward

    polys = []
    d1 = np.diff(v, axis=0)
    d2 = np.diff(v, axis=1)
    for ii in range(v.shape[0] - 1):
        for jj in range(v.shape[1] - 1):
            # lower triangle: x, x+e1, x+e1+e2. Diagonal increment 0 marks the
            # vertical (particle) species; otherwise the +1 step picks a side.
            a, b = int(d1[ii, jj]), int(d2[ii + 1, jj])
            kind = "v" if (a, b) == (0, 0) else ("a" if a == 1 else "b")
            pts = [(px[ii, jj], py[ii, jj]), (px[ii + 1, jj], py[ii + 1, jj]), (px[ii + 1, jj + 1], py[ii + 1, jj + 1])]
            polys.append((kind, pts))
            # upper triangle: x, x+e2, x+e1+e2
            a, b = int(d2[ii, jj]), int(d1[ii, jj + 1])
            kind = "v" if (a, b) == (0, 0) else ("b" if a == 1 else "a")
            pts = [(px[ii, jj], py[ii, jj]), (px[ii, jj + 1], py[ii, jj + 1]), (px[ii + 1, jj + 1], py[ii + 1, jj + 1])]
            polys.append((kind, pts))

    xs = [p[0] for _, tri in polys for p in tri]
    ys = [p[1] for _, tri in polys for p in tri]
    x0, x1_ = min(xs) - unit / 2, max(xs) + unit / 2
    y0, y1_ = min(ys) - unit / 2, max(ys) + unit / 2
    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" viewBox="{x0:.2f} {y0:.2f} '
        f'{x1_ - x0:.2f} {y1_ - y0:.2f}">',
        f'<rect x="{x0:.2f}" y="{y0:.2f}" width="{x1_ - x0:.2f}" height="{y1_ - y0:.2f}" fill="white"/>',
    ]
    for kind, tri in polys:
        pts = " ".join(f"{x:.2f},{y:.2f}" for x, y in tri)
        c = _TILE_FILL[kind]
        out.append(f'<polygon points="{pts}" fill="{c}" stroke="{c}" stroke-width="0.4"/>')
    out.append("</svg>")
    return "\n".join(out)
