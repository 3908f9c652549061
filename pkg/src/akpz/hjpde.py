"""Numerical toolkit for the limiting growth PDE  d/dt phi = -v(grad phi).

The drift v is smooth on the open slope triangle and its Hessian has strictly
negative determinant there (one growing and one shrinking principal
direction). Smooth initial data are integrated along straight characteristics
until the first focusing time; weak solutions past gradient jumps come from
the variational slope formula (valid for convex data); planar two-slope data
reduce to a one-dimensional conservation law whose wave pattern (shocks vs
rarefaction fans) is read off the convex envelope of the directional drift.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass

import numpy as np

from . import _kernels as K
from .errors import DomainError, NumericalError
from .heights import SlopeRegion
from .lattice import DEFAULT_SLOPE_MARGIN


# ---------------------------------------------------------------------------
# the drift function and its derivatives


def _tri_arrays(rho1, rho2):
    r1 = np.asarray(rho1, dtype=float)
    r2 = np.asarray(rho2, dtype=float)
    if (r1 <= 0).any() or (r2 <= 0).any() or (r1 + r2 >= 1).any():
        raise DomainError("slope outside the open triangle")
    return r1, r2


def drift_v(rho1, rho2):
    """Average downward interface speed at a fixed slope."""
    r1, r2 = _tri_arrays(rho1, rho2)
    out = np.sin(np.pi * r1) * np.sin(np.pi * r2) / (np.pi * np.sin(np.pi * (r1 + r2)))
    return float(out) if out.ndim == 0 else out


def grad_v(rho1, rho2):
    r1, r2 = _tri_arrays(rho1, rho2)
    s2 = np.sin(np.pi * (r1 + r2)) ** 2
    g1 = np.sin(np.pi * r2) ** 2 / s2
    g2 = np.sin(np.pi * r1) ** 2 / s2
    if np.ndim(g1) == 0:
        return float(g1), float(g2)
    return g1, g2


def hessian_v(rho1, rho2):
    """Components (h11, h12, h22); the determinant is negative throughout."""
    r1, r2 = _tri_arrays(rho1, rho2)
    s = np.pi * (r1 + r2)
    c = 2.0 * np.pi / np.sin(s) ** 3
    h11 = -c * np.sin(np.pi * r2) ** 2 * np.cos(s)
    h12 = c * np.sin(np.pi * r1) * np.sin(np.pi * r2)
    h22 = -c * np.sin(np.pi * r1) ** 2 * np.cos(s)
    if np.ndim(h11) == 0:
        return float(h11), float(h12), float(h22)
    return h11, h12, h22


def hessian_signature(rho1, rho2):
    """Signs of the two eigenvalues at a scalar slope, as (+1, -1) style ints."""
    h11, h12, h22 = hessian_v(float(rho1), float(rho2))
    ev = np.linalg.eigvalsh(np.array([[h11, h12], [h12, h22]]))
    return tuple(int(np.sign(e)) for e in ev)


# ---------------------------------------------------------------------------
# grid functions (uniform grids; +inf marks nodes outside the domain)


def _fmt(v):
    return f"{v:.17g}"


def _write_text(path_or_buf, text):
    if hasattr(path_or_buf, "write"):
        path_or_buf.write(text)
    else:
        with open(path_or_buf, "w") as fh:
            fh.write(text)


def _read_lines(path_or_buf):
    if hasattr(path_or_buf, "read"):
        text = path_or_buf.read()
    else:
        with open(path_or_buf) as fh:
            text = fh.read()
    return [ln for ln in text.splitlines() if ln.strip()]


def _check_uniform(xs, name):
    xs = np.asarray(xs, dtype=float)
    if len(xs) < 2:
        raise ValueError(f"{name}: need at least two nodes")
    d = np.diff(xs)
    if (d <= 0).any():
        raise ValueError(f"{name}: nodes must increase")
    if np.abs(d - d[0]).max() > 1e-9 * (abs(d[0]) + 1.0):
        raise ValueError(f"{name}: grid must be uniform")
    return xs


@dataclass
class GridFunction1D:
    """Real values on a uniform interval grid."""

    xs: np.ndarray
    vals: np.ndarray

    def __post_init__(self):
        self.xs = _check_uniform(self.xs, "xs")
        self.vals = np.asarray(self.vals, dtype=float)
        if self.vals.shape != self.xs.shape:
            raise ValueError("value/grid shape mismatch")

    def to_csv(self, path_or_buf):
        buf = io.StringIO()
        buf.write(f"box,{_fmt(self.xs[0])},{_fmt(self.xs[-1])}\n")
        buf.write(f"res,{len(self.xs)}\n")
        for x, v in zip(self.xs, self.vals):
            buf.write(f"{_fmt(x)},{_fmt(v)}\n")
        _write_text(path_or_buf, buf.getvalue())

    @classmethod
    def from_csv(cls, path_or_buf):
        lines = _read_lines(path_or_buf)
        if len(lines) < 3 or not lines[0].startswith("box,") or not lines[1].startswith("res,"):
            raise ValueError("not a 1-D grid CSV (expects box/res header lines)")
        lo, hi = (float(c) for c in lines[0].split(",")[1:3])
        n = int(lines[1].split(",")[1])
        rows = [ln.split(",") for ln in lines[2:]]
        if len(rows) != n:
            raise ValueError("row count disagrees with the res header")
        vals = np.array([float(r[1]) for r in rows])
        return cls(np.linspace(lo, hi, n), vals)


@dataclass
class GridFunction2D:
    """Real values on a uniform product grid, shape (len(x1s), len(x2s))."""

    x1s: np.ndarray
    x2s: np.ndarray
    vals: np.ndarray

    def __post_init__(self):
        self.x1s = _check_uniform(self.x1s, "x1s")
        self.x2s = _check_uniform(self.x2s, "x2s")
        self.vals = np.asarray(self.vals, dtype=float)
        if self.vals.shape != (len(self.x1s), len(self.x2s)):
            raise ValueError("value/grid shape mismatch")

    def to_csv(self, path_or_buf):
        buf = io.StringIO()
        buf.write(
            f"box,{_fmt(self.x1s[0])},{_fmt(self.x1s[-1])},"
            f"{_fmt(self.x2s[0])},{_fmt(self.x2s[-1])}\n"
        )
        buf.write(f"res,{len(self.x1s)},{len(self.x2s)}\n")
        for i, a in enumerate(self.x1s):
            for j, b in enumerate(self.x2s):
                buf.write(f"{_fmt(a)},{_fmt(b)},{_fmt(self.vals[i, j])}\n")
        _write_text(path_or_buf, buf.getvalue())

    @classmethod
    def from_csv(cls, path_or_buf):
        lines = _read_lines(path_or_buf)
        if len(lines) < 3 or not lines[0].startswith("box,") or not lines[1].startswith("res,"):
            raise ValueError("not a 2-D grid CSV (expects box/res header lines)")
        b = [float(c) for c in lines[0].split(",")[1:5]]
        n1, n2 = (int(c) for c in lines[1].split(",")[1:3])
        rows = [ln.split(",") for ln in lines[2:]]
        if len(rows) != n1 * n2:
            raise ValueError("row count disagrees with the res header")
        vals = np.array([float(r[2]) for r in rows]).reshape(n1, n2)
        return cls(np.linspace(b[0], b[1], n1), np.linspace(b[2], b[3], n2), vals)


# ---------------------------------------------------------------------------
# Legendre transforms and envelopes


def _lf1d(xs, vals, ys, chunk=4096):
    xs = np.asarray(xs, dtype=float)
    vals = np.asarray(vals, dtype=float)
    ys = np.asarray(ys, dtype=float)
    fin = np.isfinite(vals)
    if not fin.any():
        raise DomainError("no finite values to transform")
    xf = xs[fin]
    vf = vals[fin]
    out = np.empty(len(ys))
    for a in range(0, len(ys), chunk):
        b = min(a + chunk, len(ys))
        out[a:b] = (ys[a:b, None] * xf[None, :] - vf[None, :]).max(axis=1)
    return out


def _lf2d(x1s, x2s, vals, y1s, y2s):
    if not np.isfinite(np.asarray(vals)).any():
        raise DomainError("no finite values to transform")
    if not K.NUMBA_ENABLED:
        # vectorized fallback; grouping ((x.y1 + x.y2) - f) matches the kernel
        x1s = np.asarray(x1s, dtype=float)
        x2s = np.asarray(x2s, dtype=float)
        v = np.asarray(vals, dtype=float)
        v = np.where(np.isnan(v) | (v >= 1.0e307), np.inf, v)
        out = np.empty((len(y1s), len(y2s)))
        cross = x2s[None, :, None] * np.asarray(y2s, dtype=float)[None, None, :]
        for i, y1 in enumerate(y1s):
            val = (y1 * x1s[:, None, None] + cross) - v[:, :, None]
            out[i] = val.max(axis=(0, 1))
        return out
    out = np.empty((len(y1s), len(y2s)))
    K._lf2d(
        np.ascontiguousarray(x1s, dtype=np.float64),
        np.ascontiguousarray(x2s, dtype=np.float64),
        np.ascontiguousarray(vals, dtype=np.float64),
        np.ascontiguousarray(y1s, dtype=np.float64),
        np.ascontiguousarray(y2s, dtype=np.float64),
        out,
    )
    return out


def legendre_transform(f, dual_grid):
    """f*(y) = max over finite nodes x of x . y - f(x), on the dual grid.

    `f` is a GridFunction1D with dual_grid an array, or a GridFunction2D with
    dual_grid a pair of axis arrays.
    """
    if isinstance(f, GridFunction1D):
        ys = np.asarray(dual_grid, dtype=float)
        return GridFunction1D(ys, _lf1d(f.xs, f.vals, ys))
    if isinstance(f, GridFunction2D):
        y1s = np.asarray(dual_grid[0], dtype=float)
        y2s = np.asarray(dual_grid[1], dtype=float)
        return GridFunction2D(y1s, y2s, _lf2d(f.x1s, f.x2s, f.vals, y1s, y2s))
    raise TypeError("expected a GridFunction1D or GridFunction2D")


def _slope_span(xs, vals, factor):
    fin = np.isfinite(vals)
    d = np.diff(vals[fin]) / np.diff(xs[fin])
    lo, hi = float(d.min()), float(d.max())
    pad = 1e-3 * (hi - lo + 1.0)
    return np.linspace(lo - pad, hi + pad, factor * len(xs))


def _lower_hull(xs, vals):
    """Vertex indices of the lower convex hull of the graph (monotone chain;
    collinear nodes are kept, so linear stretches count as touching)."""
    hull = []
    for i in range(len(xs)):
        while len(hull) >= 2:
            a, b = hull[-2], hull[-1]
            # pop b when it lies strictly above chord a-i
            if (vals[b] - vals[a]) * (xs[i] - xs[a]) > (vals[i] - vals[a]) * (xs[b] - xs[a]):
                hull.pop()
            else:
                break
        hull.append(i)
    return hull


def _hull_envelope(xs, vals):
    """(largest convex minorant on the nodes, exact contact mask).

    Exact in the hull arithmetic: a node touches iff it is a hull vertex, so
    flat-piece detection needs no tolerance.
    """
    xs = np.asarray(xs, dtype=float)
    vals = np.asarray(vals, dtype=float)
    hull = _lower_hull(xs, vals)
    env = np.interp(xs, xs[hull], vals[hull])
    env = np.minimum(env, vals)
    contact = np.zeros(len(xs), dtype=bool)
    contact[hull] = True
    return env, contact


def envelope_flat_pieces(f):
    """Maximal intervals where the convex envelope bridges strictly below the
    values: list of (x_left, x_right) pairs of touching endpoints. Empty for
    convex data."""
    if isinstance(f, GridFunction1D):
        xs, vals = f.xs, f.vals
    else:
        xs, vals = np.asarray(f[0], float), np.asarray(f[1], float)
    hull = _lower_hull(xs, vals)
    return [
        (float(xs[a]), float(xs[b]))
        for a, b in zip(hull[:-1], hull[1:])
        if b > a + 1
    ]


def convex_envelope(f, slope_res_factor=4):
    """Biconjugate f** by two Legendre transforms, back onto the original
    nodes (below f by at most the dual resolution error; equal to f where f
    is convex)."""
    if isinstance(f, GridFunction1D):
        ys = _slope_span(f.xs, f.vals, slope_res_factor)
        star = _lf1d(f.xs, f.vals, ys)
        env = np.minimum(_lf1d(ys, star, f.xs), f.vals)
        return GridFunction1D(f.xs, env)
    if isinstance(f, GridFunction2D):
        fin = np.isfinite(f.vals)
        d1 = np.diff(f.vals, axis=0) / np.diff(f.x1s)[:, None]
        d2 = np.diff(f.vals, axis=1) / np.diff(f.x2s)[None, :]
        d1 = d1[np.isfinite(d1)]
        d2 = d2[np.isfinite(d2)]
        if len(d1) == 0 or len(d2) == 0:
            raise DomainError("too few finite values for an envelope")
        pad1 = 1e-3 * (d1.max() - d1.min() + 1.0)
        pad2 = 1e-3 * (d2.max() - d2.min() + 1.0)
        y1 = np.linspace(d1.min() - pad1, d1.max() + pad1, slope_res_factor * len(f.x1s))
        y2 = np.linspace(d2.min() - pad2, d2.max() + pad2, slope_res_factor * len(f.x2s))
        star = _lf2d(f.x1s, f.x2s, f.vals, y1, y2)
        env = _lf2d(y1, y2, star, f.x1s, f.x2s)
        np.minimum(env, f.vals, out=env, where=fin)
        return GridFunction2D(f.x1s, f.x2s, env)
    raise TypeError("expected a GridFunction1D or GridFunction2D")


def detect_gradient_jumps_1d(xs, vals, threshold):
    """Interior nodes where the one-sided difference quotients disagree by
    more than the threshold; returns (positions, jump sizes)."""
    xs = np.asarray(xs, dtype=float)
    vals = np.asarray(vals, dtype=float)
    dm = (vals[1:-1] - vals[:-2]) / (xs[1:-1] - xs[:-2])
    dp = (vals[2:] - vals[1:-1]) / (xs[2:] - xs[1:-1])
    jump = dp - dm
    idx = np.flatnonzero(np.abs(jump) > threshold)
    return xs[idx + 1], jump[idx]


def detect_gradient_jumps(f, threshold=None):
    """Nodes of a 2-D grid where a one-sided difference quotient along either
    axis jumps by more than the threshold; returns an (m, 2) array of node
    coordinates. Default threshold: 10 * grid step * a drift-curvature scale.
    """
    if not isinstance(f, GridFunction2D):
        raise TypeError("expected a GridFunction2D")
    h1 = f.x1s[1] - f.x1s[0]
    h2 = f.x2s[1] - f.x2s[0]
    if threshold is None:
        threshold = 10.0 * max(h1, h2) * 4.0 * math.pi
    hits = np.zeros(f.vals.shape, dtype=bool)
    v = f.vals
    d1 = np.diff(v, axis=0) / h1
    hits[1:-1, :] |= np.abs(d1[1:, :] - d1[:-1, :]) > threshold
    d2 = np.diff(v, axis=1) / h2
    hits[:, 1:-1] |= np.abs(d2[:, 1:] - d2[:, :-1]) > threshold
    ii, jj = np.nonzero(hits)
    return np.stack([f.x1s[ii], f.x2s[jj]], axis=1)


# ---------------------------------------------------------------------------
# characteristics


@dataclass
class CharResult:
    x0_1: np.ndarray
    x0_2: np.ndarray
    phi: np.ndarray
    grad1: np.ndarray
    grad2: np.ndarray
    converged: np.ndarray
    iterations: int


def characteristics_solve(profile, t, x1, x2, *, tol=1e-11, max_iter=60,
                          require_converged=True):
    """Integrate the smooth solution backward along straight characteristics.

    Solves x0 + t * grad_v(grad phi0(x0)) = x per target point by a damped
    Newton iteration with the analytic Jacobian, then transports the value
    along the line. Valid while characteristics have not crossed (t below the
    focusing time); non-smooth profiles are rejected.
    """
    if not profile.smooth:
        raise DomainError(f"profile {profile.name} is not smooth; use hopf_solve")
    X1 = np.asarray(x1, dtype=float).ravel()
    X2 = np.asarray(x2, dtype=float).ravel()
    shape = np.shape(x1)
    g1, g2 = profile.grad(X1, X2)
    v1, v2 = grad_v(g1, g2)
    a1 = X1 - t * np.asarray(v1)
    a2 = X2 - t * np.asarray(v2)

    def residual(b1, b2):
        q1, q2 = profile.grad(b1, b2)
        w1, w2 = grad_v(q1, q2)
        return b1 + t * w1 - X1, b2 + t * w2 - X2, q1, q2

    f1, f2, g1, g2 = residual(a1, a2)
    norm = np.hypot(f1, f2)
    scale = tol * (1.0 + np.hypot(X1, X2))
    it = 0
    for it in range(1, max_iter + 1):
        if (norm <= scale).all():
            break
        h11, h12, h22 = hessian_v(g1, g2)
        p11, p12, p22 = profile.hess(a1, a2)
        # J = I + t * Hv(grad phi0) Hphi0
        j11 = 1.0 + t * (h11 * p11 + h12 * p12)
        j12 = t * (h11 * p12 + h12 * p22)
        j21 = t * (h12 * p11 + h22 * p12)
        j22 = 1.0 + t * (h12 * p12 + h22 * p22)
        det = j11 * j22 - j12 * j21
        det = np.where(np.abs(det) < 1e-300, 1e-300, det)
        s1 = (j22 * f1 - j12 * f2) / det
        s2 = (-j21 * f1 + j11 * f2) / det
        alpha = np.ones_like(norm)
        best1, best2, bestn = None, None, None
        for _ in range(6):
            c1 = a1 - alpha * s1
            c2 = a2 - alpha * s2
            t1, t2, _, _ = residual(c1, c2)
            cn = np.hypot(t1, t2)
            if bestn is None:
                best1, best2, bestn = c1, c2, cn
            else:
                better = cn < bestn
                best1 = np.where(better, c1, best1)
                best2 = np.where(better, c2, best2)
                bestn = np.where(better, cn, bestn)
            if (bestn <= norm).all():
                break
            alpha = np.where(bestn > norm, alpha * 0.5, alpha)
        a1, a2 = best1, best2
        f1, f2, g1, g2 = residual(a1, a2)
        norm = np.hypot(f1, f2)
    converged = norm <= scale
    if require_converged and not converged.all():
        raise NumericalError(
            f"characteristics failed to converge at {int((~converged).sum())} points; "
            "t may exceed the focusing time"
        )
    vv = drift_v(g1, g2)
    v1, v2 = grad_v(g1, g2)
    phi = profile.f(a1, a2) + t * (v1 * g1 + v2 * g2 - vv)
    return CharResult(
        a1.reshape(shape), a2.reshape(shape), np.asarray(phi).reshape(shape),
        np.asarray(g1).reshape(shape), np.asarray(g2).reshape(shape),
        converged.reshape(shape), it,
    )


@dataclass
class TfEstimate:
    t_f: float
    x_at_min: tuple
    radius: float
    res: int


def estimate_Tf(profile, *, radius=None, res=129, t_cap=1.0e6, tol=1e-9):
    """Smallest t with min over the sample box of det(I + t Hv Hphi0) <= 0.

    The determinant is quadratic in t per sample point, so each evaluation of
    the grid minimum is cheap; the root is bracketed by doubling, then
    bisected. Returns +inf when no focusing happens below the cap.
    """
    if not profile.smooth:
        raise DomainError(f"profile {profile.name} is not smooth")
    if radius is None:
        radius = profile.primal_radius
    xs = np.linspace(-radius, radius, res)
    X1, X2 = np.meshgrid(xs, xs, indexing="ij")
    X1 = X1.ravel()
    X2 = X2.ravel()
    g1, g2 = profile.grad(X1, X2)
    h11, h12, h22 = hessian_v(g1, g2)
    p11, p12, p22 = profile.hess(X1, X2)
    a11 = h11 * p11 + h12 * p12
    a12 = h11 * p12 + h12 * p22
    a21 = h12 * p11 + h22 * p12
    a22 = h12 * p12 + h22 * p22
    tr = a11 + a22
    dt = a11 * a22 - a12 * a21

    def gmin(t):
        return float((1.0 + t * tr + t * t * dt).min())

    hi = 1.0
    while gmin(hi) > 0.0:
        hi *= 2.0
        if hi > t_cap:
            return TfEstimate(math.inf, (math.nan, math.nan), radius, res)
    lo = 0.0
    while hi - lo > tol * (1.0 + hi):
        mid = 0.5 * (lo + hi)
        if gmin(mid) > 0.0:
            lo = mid
        else:
            hi = mid
    t_f = 0.5 * (lo + hi)
    vals = 1.0 + t_f * tr + t_f * t_f * dt
    k = int(np.argmin(vals))
    return TfEstimate(t_f, (float(X1[k]), float(X2[k])), radius, res)


# ---------------------------------------------------------------------------
# Hopf formula for convex data


def _conjugate_on_region(profile, res):
    """Slope grid over the profile's gradient range plus the numerically
    conjugated initial data on it (reduced to one dimension by shape)."""
    if profile.reduction is None or not profile.convex:
        raise DomainError(
            f"profile {profile.name} is not convex; the variational formula does not apply"
        )
    kind = profile.reduction[0]
    anchor = np.asarray(profile.region.anchor, dtype=float)
    if kind == "zero":
        return anchor[None, :], np.zeros(1)
    if kind == "segment":
        w = np.asarray(profile.reduction[1], dtype=float)
        ridge = profile.reduction[2]
        tau = np.linspace(0.0, 1.0, res)
        ys = anchor[None, :] + tau[:, None] * w[None, :]
        S = profile.primal_radius
        s = np.linspace(-S, S, 4097)
        conj = (tau[:, None] * s[None, :] - ridge(s)[None, :]).max(axis=1)
        return ys, conj
    if kind == "radial":
        g = profile.reduction[1]
        ys = profile.region.sample(res)
        eta = ys - anchor[None, :]
        m = np.hypot(eta[:, 0], eta[:, 1])
        r = np.linspace(0.0, profile.primal_radius, 4097)
        gr = g(r)
        conj = np.empty(len(ys))
        for a in range(0, len(ys), 2048):
            b = min(a + 2048, len(ys))
            conj[a:b] = (m[a:b, None] * r[None, :] - gr[None, :]).max(axis=1)
        return ys, conj
    raise ValueError(f"unknown reduction {kind!r}")


def hopf_solve(profile, t, x1, x2, *, slope_res=257, chunk=1024):
    """Viscosity solution by the variational slope formula: the maximum over
    gradient-range slopes y of y . x - t v(y) - phi0*(y), with the conjugate
    phi0* evaluated numerically on the same slope grid. Exact for convex
    initial data at any t >= 0; other profiles are rejected."""
    ys, conj = _conjugate_on_region(profile, slope_res)
    offset = t * drift_v(ys[:, 0], ys[:, 1]) + conj
    X1 = np.asarray(x1, dtype=float).ravel()
    X2 = np.asarray(x2, dtype=float).ravel()
    out = np.empty(len(X1))
    # keep the broadcast block around a few MB regardless of the slope count
    chunk = max(1, min(chunk, 4_000_000 // max(1, len(ys))))
    for a in range(0, len(X1), chunk):
        b = min(a + chunk, len(X1))
        vals = (
            X1[a:b, None] * ys[None, :, 0]
            + X2[a:b, None] * ys[None, :, 1]
            - offset[None, :]
        )
        out[a:b] = vals.max(axis=1)
    return out.reshape(np.shape(x1))


# ---------------------------------------------------------------------------
# planar two-slope (Riemann) problems


@dataclass(frozen=True)
class RiemannSpec:
    """Planar data: slope c*beta + u(n . x) * n with u = u_minus left of the
    interface (n . x < 0) and u_plus right of it. The whole slope segment
    must stay inside the margin triangle."""

    c: float
    beta: tuple
    n: tuple
    u_minus: float
    u_plus: float

    def __post_init__(self):
        for name in ("beta", "n"):
            vec = np.asarray(getattr(self, name), dtype=float)
            if abs(np.hypot(vec[0], vec[1]) - 1.0) > 1e-9:
                raise DomainError(f"{name} must be a unit vector")

    def slope_at(self, u):
        u = np.asarray(u, dtype=float)
        r1 = self.c * self.beta[0] + u * self.n[0]
        r2 = self.c * self.beta[1] + u * self.n[1]
        if r1.ndim == 0:
            return float(r1), float(r2)
        return r1, r2

    def check_margin(self, margin=DEFAULT_SLOPE_MARGIN):
        lo = min(self.u_minus, self.u_plus)
        hi = max(self.u_minus, self.u_plus)
        a = np.asarray(self.slope_at(lo), dtype=float)
        w = np.asarray(self.slope_at(hi), dtype=float) - a
        SlopeRegion("segment", tuple(a), tuple(w)).check_margin(margin)
        return self


def riemann_from_slopes(rho_minus, rho_plus):
    """RiemannSpec whose left/right slopes are the two given triangle points."""
    rm = np.asarray(rho_minus, dtype=float)
    rp = np.asarray(rho_plus, dtype=float)
    w = rp - rm
    wn = float(np.hypot(w[0], w[1]))
    if wn == 0.0:
        raise DomainError("the two slopes coincide")
    n = (w[0] / wn, w[1] / wn)
    c = float(np.hypot(rm[0], rm[1]))
    if c == 0.0:
        raise DomainError("left slope at the triangle corner")
    beta = (rm[0] / c, rm[1] / c)
    return RiemannSpec(c, beta, n, 0.0, wn)


@dataclass
class RiemannResult:
    """1-D reduction of a planar two-slope problem at a fixed time.

    psi/u are sampled on `ys`; the classification is "constant",
    "rarefaction" (the directional drift's relevant envelope touches
    everywhere) or "shock" (it has flat bridges; one wave per bridge).
    """

    spec: RiemannSpec
    t: float
    ys: np.ndarray
    psi: np.ndarray
    u: np.ndarray
    classification: str
    shocks: list   # (u at left of jump, u at right, speed)
    fans: list     # (u_lo, u_hi, speed_lo, speed_hi)
    s_grid: np.ndarray
    V: np.ndarray
    envelope: np.ndarray
    contact: np.ndarray

    def psi_at(self, y):
        return _riemann_psi(self.spec, self.s_grid, self.V, np.asarray(y, float), self.t)

    def phi(self, x1, x2):
        """The planar 2-D solution at the stored time."""
        X1 = np.asarray(x1, dtype=float)
        X2 = np.asarray(x2, dtype=float)
        y = self.spec.n[0] * X1 + self.spec.n[1] * X2
        base = self.spec.c * (self.spec.beta[0] * X1 + self.spec.beta[1] * X2)
        return base + self.psi_at(y)

    def shock_positions(self):
        """y-coordinates (along n) of the shocks at the stored time."""
        return [self.t * sp for _, _, sp in self.shocks]


def _riemann_psi(spec, s_grid, V, Y, t):
    decreasing = spec.u_minus > spec.u_plus
    flat = np.shape(Y)
    Yr = Y.ravel()
    vals = Yr[:, None] * s_grid[None, :] - t * V[None, :]
    out = vals.min(axis=1) if decreasing else vals.max(axis=1)
    return out.reshape(flat)


def riemann_solve(spec, ys, t, *, res=2001, margin=DEFAULT_SLOPE_MARGIN):
    """Solve and classify the planar two-slope problem at one time.

    Increasing data (u- < u+) use the max form over the slope interval and
    the lower convex envelope of V; decreasing data mirror to the min form
    and the upper concave envelope.
    """
    spec.check_margin(margin)
    ys = np.asarray(ys, dtype=float)
    if t < 0:
        raise DomainError("t must be nonnegative")
    lo = min(spec.u_minus, spec.u_plus)
    hi = max(spec.u_minus, spec.u_plus)
    if hi - lo < 1e-15:
        u0 = spec.u_minus
        r1, r2 = spec.slope_at(u0)
        V0 = drift_v(float(r1), float(r2))
        psi = u0 * ys - t * V0
        u = np.full_like(ys, u0)
        s_grid = np.array([u0])
        V = np.array([V0])
        return RiemannResult(
            spec, t, ys, psi, u, "constant", [], [], s_grid, V, V.copy(),
            np.array([True]),
        )
    decreasing = spec.u_minus > spec.u_plus
    s_grid = np.linspace(lo, hi, res)
    r1, r2 = spec.slope_at(s_grid)
    V = drift_v(r1, r2)
    if decreasing:
        env_neg, contact = _hull_envelope(s_grid, -V)
        env = -env_neg
    else:
        env, contact = _hull_envelope(s_grid, V)
    dVds = np.gradient(V, s_grid)
    shocks = []
    fans = []
    i, n = 0, len(s_grid)
    while i < n:
        if contact[i]:
            j = i
            while j + 1 < n and contact[j + 1]:
                j += 1
            if j > i:
                fans.append(
                    (float(s_grid[i]), float(s_grid[j]), float(dVds[i]), float(dVds[j]))
                )
            i = j + 1
        else:
            j = i
            while j + 1 < n and not contact[j + 1]:
                j += 1
            a, b = i - 1, j + 1  # bracketing contact nodes (endpoints always touch)
            speed = (V[b] - V[a]) / (s_grid[b] - s_grid[a])
            shocks.append((float(s_grid[a]), float(s_grid[b]), float(speed)))
            i = j + 1
    classification = "shock" if shocks else "rarefaction"
    psi = _riemann_psi(spec, s_grid, V, ys, t)
    if len(ys) >= 2:
        u = np.gradient(psi, ys)
    else:
        u = np.full_like(ys, np.nan)
    return RiemannResult(
        spec, t, ys, psi, u, classification, shocks, fans, s_grid, V, env, contact,
    )
