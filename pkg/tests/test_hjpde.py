import io
import math
from fractions import Fraction

import numpy as np
import pytest

from akpz.errors import DomainError, NumericalError
from akpz.heights import make_profile
from akpz.hjpde import (
    GridFunction1D,
    GridFunction2D,
    RiemannSpec,
    characteristics_solve,
    convex_envelope,
    detect_gradient_jumps,
    detect_gradient_jumps_1d,
    drift_v,
    envelope_flat_pieces,
    estimate_Tf,
    grad_v,
    hessian_signature,
    hessian_v,
    hopf_solve,
    legendre_transform,
    riemann_from_slopes,
    riemann_solve,
)

SQ3_OVER_2PI = math.sqrt(3.0) / (2.0 * math.pi)


def test_drift_frozen_values():
    assert drift_v(1 / 3, 1 / 3) == pytest.approx(SQ3_OVER_2PI, abs=1e-15)
    assert drift_v(1 / 2, 1 / 4) == pytest.approx(1.0 / math.pi, abs=1e-15)
    assert drift_v(0.3, 0.4) == drift_v(0.4, 0.3)
    with pytest.raises(DomainError):
        drift_v(0.6, 0.5)
    with pytest.raises(DomainError):
        drift_v(0.0, 0.3)


def test_grad_v_matches_fd():
    rng = np.random.default_rng(1)
    r1 = rng.uniform(0.08, 0.6, size=200)
    r2 = rng.uniform(0.08, np.minimum(0.6, 0.9 - r1))
    g1, g2 = grad_v(r1, r2)
    eps = 1e-7
    d1 = (drift_v(r1 + eps, r2) - drift_v(r1 - eps, r2)) / (2 * eps)
    d2 = (drift_v(r1, r2 + eps) - drift_v(r1, r2 - eps)) / (2 * eps)
    assert np.abs(g1 - d1).max() < 1e-5
    assert np.abs(g2 - d2).max() < 1e-5


def test_hessian_v_matches_fd_and_is_saddle():
    rng = np.random.default_rng(2)
    r1 = rng.uniform(0.1, 0.55, size=100)
    r2 = rng.uniform(0.1, np.minimum(0.55, 0.88 - r1))
    h11, h12, h22 = hessian_v(r1, r2)
    eps = 1e-6
    g1p, g2p = grad_v(r1 + eps, r2)
    g1m, g2m = grad_v(r1 - eps, r2)
    assert np.abs((g1p - g1m) / (2 * eps) - h11).max() < 2e-4
    assert np.abs((g2p - g2m) / (2 * eps) - h12).max() < 2e-4
    g1p, g2p = grad_v(r1, r2 + eps)
    g1m, g2m = grad_v(r1, r2 - eps)
    assert np.abs((g2p - g2m) / (2 * eps) - h22).max() < 2e-4
    det = h11 * h22 - h12 ** 2
    assert (det < 0).all()
    assert hessian_signature(1 / 3, 1 / 3) == (-1, 1)


def test_legendre_transform_quadratic_oracle():
    xs = np.linspace(-4.0, 4.0, 801)
    f = GridFunction1D(xs, 0.5 * xs ** 2)
    ys = np.linspace(-2.0, 2.0, 101)
    star = legendre_transform(f, ys)
    assert np.abs(star.vals - 0.5 * ys ** 2).max() < 1e-4
    # 2D paraboloid with distinct axis weights
    a, b = 1.5, 0.5
    g1 = np.linspace(-4.0, 4.0, 201)
    f2 = GridFunction2D(g1, g1, 0.5 * (a * g1[:, None] ** 2 + b * g1[None, :] ** 2))
    y = np.linspace(-1.5, 1.5, 41)
    star2 = legendre_transform(f2, (y, y))
    want = 0.5 * (y[:, None] ** 2 / a + y[None, :] ** 2 / b)
    assert np.abs(star2.vals - want).max() < 2e-3


def test_convex_envelope_identity_and_double_well():
    xs = np.linspace(-2.0, 2.0, 801)
    g = GridFunction1D(xs, xs ** 2)
    assert np.array_equal(convex_envelope(g).vals, g.vals)
    f = GridFunction1D(xs, (xs ** 2 - 1.0) ** 2)
    env = convex_envelope(f)
    assert (env.vals <= f.vals + 1e-12).all()
    inner = np.abs(xs) <= 0.9
    assert np.abs(env.vals[inner]).max() < 2e-2
    assert envelope_flat_pieces(f) == [(-1.0, 1.0)]
    assert envelope_flat_pieces(g) == []


def test_convex_envelope_2d():
    g1 = np.linspace(-1.5, 1.5, 101)
    r2 = g1[:, None] ** 2 + g1[None, :] ** 2
    f = GridFunction2D(g1, g1, (r2 - 1.0) ** 2)
    env = convex_envelope(f)
    assert (env.vals <= f.vals + 1e-9).all()
    inner = r2 <= 0.8
    assert np.abs(env.vals[inner]).max() < 0.1
    # convex data reproduce themselves within the dual grid resolution
    q = GridFunction2D(g1, g1, r2)
    assert np.abs(convex_envelope(q).vals - q.vals).max() < 5e-3


def _brute_flat_pieces(xs, vals):
    """Exact rational lower-hull flat pieces, independently of the package."""
    n = len(xs)
    X = [Fraction(int(x)) for x in xs]
    V = [Fraction(int(v)) for v in vals]
    env = []
    for k in range(n):
        best = V[k]
        for i in range(k + 1):
            for j in range(k, n):
                if i == j:
                    continue
                chord = V[i] + (V[j] - V[i]) * (X[k] - X[i]) / (X[j] - X[i])
                best = min(best, chord)
        env.append(best)
    contact = [env[k] == V[k] for k in range(n)]
    out = []
    run = None
    for k in range(n):
        if contact[k]:
            if run is not None:
                out.append((float(xs[run]), float(xs[k])))
                run = None
        else:
            if run is None:
                run = k - 1
    return out


def test_flat_pieces_against_brute_force():
    rng = np.random.default_rng(5)
    for _ in range(25):
        n = int(rng.integers(8, 28))
        xs = np.arange(n, dtype=float)
        vals = rng.integers(-12, 13, size=n).astype(float)
        got = envelope_flat_pieces(GridFunction1D(xs, vals))
        want = _brute_flat_pieces(xs, vals)
        assert got == want


def test_grid_function_csv_round_trips(tmp_path):
    xs = np.linspace(-1.0, 2.0, 7)
    vals = np.array([0.1, np.inf, -3.0, 1.0 / 3.0, 2.0, 5.0, -0.25])
    f = GridFunction1D(xs, vals)
    buf = io.StringIO()
    f.to_csv(buf)
    back = GridFunction1D.from_csv(io.StringIO(buf.getvalue()))
    assert np.array_equal(back.xs, f.xs)
    assert np.array_equal(back.vals, f.vals)
    g1 = np.linspace(0.0, 1.0, 4)
    g2 = np.linspace(-1.0, 1.0, 5)
    f2 = GridFunction2D(g1, g2, np.arange(20.0).reshape(4, 5) / 3.0)
    p = tmp_path / "g.csv"
    f2.to_csv(p)
    back2 = GridFunction2D.from_csv(p)
    assert np.array_equal(back2.vals, f2.vals)
    assert np.allclose(back2.x2s, f2.x2s)


def test_characteristics_match_hopf_on_smooth_convex():
    prof = make_profile("ridge", rho1m=0.45, rho2m=0.25, rho1p=0.25, rho2p=0.45)
    t = 0.4
    xg = np.linspace(-0.7, 0.7, 29)
    X1, X2 = np.meshgrid(xg, xg, indexing="ij")
    ch = characteristics_solve(prof, t, X1, X2)
    assert ch.converged.all()
    hv = hopf_solve(prof, t, X1, X2)
    assert np.abs(ch.phi - hv).max() < 1e-2
    # t = 0 reduces to the initial data
    ch0 = characteristics_solve(prof, 0.0, X1, X2)
    assert np.abs(ch0.phi - prof.f(X1, X2)).max() < 1e-12


def test_characteristics_reject_past_focusing():
    prof = make_profile("bump", rho1=1 / 3, rho2=1 / 3, a=0.12)
    tf = estimate_Tf(prof).t_f
    xg = np.linspace(-0.8, 0.8, 61)
    X1, X2 = np.meshgrid(xg, xg, indexing="ij")
    with pytest.raises(NumericalError):
        characteristics_solve(prof, 1.5 * tf, X1, X2)
    ch = characteristics_solve(prof, 1.5 * tf, X1, X2, require_converged=False)
    assert not ch.converged.all()


def test_estimate_tf_against_quadratic_roots():
    prof = make_profile("bump", rho1=1 / 3, rho2=1 / 3, a=0.12)
    est = estimate_Tf(prof, res=129)
    # independent evaluation: per-node smallest positive root of
    # det(I + t Hv Hphi0) = 1 + t tr + t^2 dt
    radius = est.radius
    xs = np.linspace(-radius, radius, 129)
    X1, X2 = np.meshgrid(xs, xs, indexing="ij")
    g1, g2 = prof.grad(X1.ravel(), X2.ravel())
    h11, h12, h22 = hessian_v(g1, g2)
    p11, p12, p22 = prof.hess(X1.ravel(), X2.ravel())
    a11 = h11 * p11 + h12 * p12
    a12 = h11 * p12 + h12 * p22
    a21 = h12 * p11 + h22 * p12
    a22 = h12 * p12 + h22 * p22
    tr = a11 + a22
    dt = a11 * a22 - a12 * a21
    best = math.inf
    for trk, dtk in zip(tr, dt):
        if dtk == 0.0:
            if trk < 0.0:
                best = min(best, -1.0 / trk)
            continue
        disc = trk * trk - 4.0 * dtk
        if disc < 0:
            continue
        for root in ((-trk - math.sqrt(disc)) / (2 * dtk),
                     (-trk + math.sqrt(disc)) / (2 * dtk)):
            if root > 0:
                best = min(best, root)
    assert est.t_f == pytest.approx(best, rel=1e-6)
    assert math.isfinite(est.t_f)
    # affine data never focus
    flat = make_profile("affine", rho1=1 / 3, rho2=1 / 3)
    assert estimate_Tf(flat).t_f == math.inf


def test_hopf_at_time_zero_is_initial_data():
    for name, params in (
        ("two_affine", dict(rho1m=0.45, rho2m=0.25, rho1p=0.25, rho2p=0.45)),
        ("cap", dict(rho1c=0.3, rho2c=0.3)),
    ):
        prof = make_profile(name, **params)
        xg = np.linspace(-0.6, 0.6, 21)
        X1, X2 = np.meshgrid(xg, xg, indexing="ij")
        hv = hopf_solve(prof, 0.0, X1, X2)
        assert np.abs(hv - prof.f(X1, X2)).max() < 5e-3


def test_riemann_spec_validation():
    with pytest.raises(DomainError):
        RiemannSpec(0.5, (1.0, 1.0), (1.0, 0.0), 0.0, 0.1)  # beta not unit
    sp = riemann_from_slopes((0.2, 0.2), (0.45, 0.45))
    r1, r2 = sp.slope_at(sp.u_minus)
    assert (r1, r2) == pytest.approx((0.2, 0.2), abs=1e-12)
    r1, r2 = sp.slope_at(sp.u_plus)
    assert (r1, r2) == pytest.approx((0.45, 0.45), abs=1e-12)


def test_riemann_shock_standing_and_hopf_agreement():
    sp = riemann_from_slopes((0.45, 0.25), (0.25, 0.45))
    ys = np.linspace(-2.0, 2.0, 801)
    r = riemann_solve(sp, ys, 0.6)
    assert r.classification == "shock"
    assert len(r.shocks) == 1
    assert r.shocks[0][2] == pytest.approx(0.0, abs=1e-12)
    assert r.shock_positions() == [pytest.approx(0.0, abs=1e-12)]
    prof = make_profile("two_affine", rho1m=0.45, rho2m=0.25,
                        rho1p=0.25, rho2p=0.45)
    xg = np.linspace(-0.8, 0.8, 17)
    X1, X2 = np.meshgrid(xg, xg, indexing="ij")
    assert np.abs(r.phi(X1, X2) - hopf_solve(prof, 0.6, X1, X2)).max() < 1e-9


def test_riemann_rarefaction_and_decreasing_mirror():
    sp = riemann_from_slopes((0.2, 0.2), (0.45, 0.45))
    ys = np.linspace(-2.0, 2.0, 801)
    r = riemann_solve(sp, ys, 0.6)
    assert r.classification == "rarefaction"
    assert r.shocks == []
    assert len(r.fans) == 1
    prof = make_profile("two_affine", rho1m=0.2, rho2m=0.2,
                        rho1p=0.45, rho2p=0.45)
    xg = np.linspace(-0.8, 0.8, 17)
    X1, X2 = np.meshgrid(xg, xg, indexing="ij")
    assert np.abs(r.phi(X1, X2) - hopf_solve(prof, 0.6, X1, X2)).max() < 1e-4
    # swapping u- and u+ flips the relevant envelope and the classification
    m = RiemannSpec(sp.c, sp.beta, sp.n, sp.u_plus, sp.u_minus)
    rm = riemann_solve(m, ys, 0.6)
    assert rm.classification == "shock"


def test_riemann_time_zero_identity():
    sp = riemann_from_slopes((0.3, 0.2), (0.25, 0.4))
    ys = np.linspace(-1.5, 1.5, 501)
    r = riemann_solve(sp, ys, 0.0)
    want = np.maximum(sp.u_minus * ys, sp.u_plus * ys) \
        if sp.u_minus < sp.u_plus else np.minimum(sp.u_minus * ys, sp.u_plus * ys)
    assert np.abs(r.psi - want).max() < 1e-12


def test_riemann_classification_equals_flat_piece_test():
    rng = np.random.default_rng(17)
    for _ in range(20):
        while True:
            rm = rng.uniform(0.15, 0.45, size=2)
            rp = rng.uniform(0.15, 0.45, size=2)
            if np.abs(rp - rm).max() > 0.05 and rm.sum() < 0.9 and rp.sum() < 0.9:
                break
        sp = riemann_from_slopes(tuple(rm), tuple(rp))
        r = riemann_solve(sp, np.linspace(-2, 2, 201), 0.5)
        s = np.linspace(min(sp.u_minus, sp.u_plus), max(sp.u_minus, sp.u_plus), 2001)
        r1, r2 = sp.slope_at(s)
        V = drift_v(r1, r2)
        vals = V if sp.u_minus < sp.u_plus else -V
        flats = envelope_flat_pieces(GridFunction1D(s, vals))
        assert (r.classification == "shock") == (len(flats) > 0)


def test_gradient_jump_detector():
    xs = np.linspace(-1, 1, 201)
    vals = np.abs(xs)
    pos, jump = detect_gradient_jumps_1d(xs, vals, 0.5)
    assert len(pos) == 1 and abs(pos[0]) < 2e-2 and jump[0] == pytest.approx(2.0, abs=1e-6)
    # 2D: kink of the two-affine solution stays on the interface normal line
    prof = make_profile("two_affine", rho1m=0.45, rho2m=0.25,
                        rho1p=0.25, rho2p=0.45)
    g = np.linspace(-0.8, 0.8, 81)
    X1, X2 = np.meshgrid(g, g, indexing="ij")
    f = GridFunction2D(g, g, hopf_solve(prof, 0.5, X1, X2))
    hits = detect_gradient_jumps(f, threshold=0.05)
    assert len(hits) > 0
    n = np.array(riemann_from_slopes((0.45, 0.25), (0.25, 0.45)).n)
    dist = hits @ n  # standing shock: kink on the line n . x = 0
    assert np.abs(dist).max() < 0.05
    smooth = GridFunction2D(g, g, X1 ** 2 + X2 ** 2)
    assert len(detect_gradient_jumps(smooth)) == 0
