"""Independent reference evolution for tiny instances.

A particle's position at time t is characterized variationally: it is the
smallest ring site x on its line that can be reached through an admissible
chain of rings. A chain is a finite set of (ring, particle-label) points such
that (a) the target particle owns the unique right-most point, (b) whenever a
point sits left of one of its particle's interlacing partners (at the
partner's *initial* position), the set contains exactly one point of that
partner further left and no later in time, and (c) every non-root point is
demanded that way by some other point. The empty chain is admissible and
yields the initial position, so positions never increase.

This module evaluates that minimum by depth-first search over chains, which
is exponential in the worst case and therefore guarded; it exists to check
the event-driven simulator on small windows, not to be fast.
"""

from __future__ import annotations

from .errors import InstanceTooLargeError
from .lattice import neighbor_labels


def _event_list(events):
    if hasattr(events, "times"):
        return list(zip(events.times.tolist(), events.lines.tolist(), events.z2s.tolist()))
    return [(float(t), int(ell), int(z2)) for t, ell, z2 in events]


class _Search:
    """Backtracking over admissible chains for one initial configuration."""

    def __init__(self, cfg, by_line, node_budget):
        self.cfg = cfg
        self.by_line = by_line
        self.budget = node_budget
        self.nodes = 0

    def z_init(self, p, ell):
        return self.cfg.position_of(p, ell)

    def _obligations(self, pt):
        z2, s, p, ell = pt
        out = []
        for pp, ll in neighbor_labels(p, ell):
            if z2 < self.z_init(pp, ll):
                out.append((pt, pp, ll))
        return out

    def _satisfier_count(self, points, w, pp, ll):
        wz, ws = w[0], w[1]
        return sum(
            1 for q in points if q[2] == pp and q[3] == ll and q[0] < wz and q[1] <= ws
        )

    def _would_double_satisfy(self, points, cand):
        cz, cs, cp, cl = cand
        for q in points:
            for pp, ll in neighbor_labels(q[2], q[3]):
                if (pp, ll) != (cp, cl):
                    continue
                if q[0] < self.z_init(pp, ll) and cz < q[0] and cs <= q[1]:
                    if self._satisfier_count(points, q, pp, ll) >= 1:
                        return True
        return False

    def _solve(self, points, pending):
        self.nodes += 1
        if self.nodes > self.budget:
            raise InstanceTooLargeError("chain search exceeded its node budget")
        if not pending:
            return True
        (w, pp, ll), rest = pending[0], pending[1:]
        nsat = self._satisfier_count(points, w, pp, ll)
        if nsat >= 2:
            return False  # uniqueness broken by two pre-existing points
        if nsat == 1:
            return self._solve(points, rest)
        wz, ws = w[0], w[1]
        for z2, s in self.by_line.get(ll, ()):
            if z2 >= wz or s > ws:
                continue
            cand = (z2, s, pp, ll)
            if cand in points:
                continue
            if self._would_double_satisfy(points, cand):
                continue
            if self._solve(points + [cand], rest + self._obligations(cand)):
                return True
        return False

    def min_position(self, p, ell, t_end):
        z0 = self.z_init(p, ell)
        cands = sorted(
            (z2, s) for z2, s in self.by_line.get(ell, ()) if z2 < z0 and s <= t_end
        )
        for z2, s in cands:
            root = (z2, s, p, ell)
            if self._solve([root], self._obligations(root)):
                return z2
        return z0


def oracle_evolve(
    cfg,
    events,
    t_end,
    active_box,
    *,
    max_points=8,
    max_movable=8,
    node_budget=500_000,
):
    """Evolve a small window to t_end by the variational characterization.

    `events` is a materialized stream (or iterable of (t, line, z2) rings);
    rings outside the active box or after t_end are ignored, exactly as the
    simulator ignores them. Returns a new configuration; boundary lines of
    the active box are left untouched. Refuses instances larger than the
    guards, since the search cost is exponential.
    """
    evs = [
        (t, ell, z2)
        for t, ell, z2 in _event_list(events)
        if t <= t_end and active_box.contains_site(ell, z2)
    ]
    if len(evs) > max_points:
        raise InstanceTooLargeError(
            f"{len(evs)} rings exceed the oracle guard of {max_points}"
        )
    movable = sum(
        len(cfg.positions2(ell))
        for ell in active_box.active_lines()
        if cfg.has_line(ell)
    )
    if movable > max_movable:
        raise InstanceTooLargeError(
            f"{movable} movable particles exceed the oracle guard of {max_movable}"
        )
    by_line = {}
    for t, ell, z2 in evs:
        by_line.setdefault(ell, []).append((z2, t))
    for ell in by_line:
        by_line[ell].sort()

    search = _Search(cfg, by_line, node_budget)
    out = cfg.copy()
    for ell in active_box.active_lines():
        seg = out.positions2(ell)
        labels = cfg.labels(ell)
        for idx in range(len(labels)):
            seg[idx] = search.min_position(int(labels[idx]), ell, t_end)
    return out
