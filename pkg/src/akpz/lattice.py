"""Interlaced particle configurations on a stack of horizontal lines.

Geometry. Lines are indexed by integers ``ell``; a particle on line ``ell``
occupies a horizontal coordinate in Z (even ``ell``) or Z + 1/2 (odd ``ell``).
All horizontal coordinates are stored doubled (``z2 = 2z``) so every value is
an exact int64. Particles on a line are strictly ordered and labelled by
consecutive integers; the normalization across lines couples label ``p`` on
line ``ell`` to its two blocking partners ``(p-1, ell+1)`` and ``(p, ell-1)``,
and interlacement reads

    z(p, ell) < z(p, ell+1) < z(p+1, ell).

By convention the left-most particle on line 0 with non-negative coordinate
carries label 0 ("anchored" configurations).

Height grid. Height values live on vertices ``x = (x1, x2)`` of a dual square
grid; vertex ``x`` sits on line ``ell = x2 - x1`` at doubled horizontal
coordinate ``z2bar = x1 + x2 - 1``, which has the opposite parity from the
particle positions on that line (so position/vertex comparisons never tie).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError, WindowExhaustedError

DEFAULT_SLOPE_MARGIN = 0.02


def star_coords(x1, x2):
    """Map a height-grid vertex to (line, doubled horizontal coordinate)."""
    return x2 - x1, x1 + x2 - 1


def star_vertex(ell, z2bar):
    """Inverse of star_coords. Raises on a parity mismatch."""
    if (z2bar - ell) % 2 == 0:
        raise ValueError(f"vertex parity mismatch: line {ell}, doubled coord {z2bar}")
    x1 = (z2bar - ell + 1) // 2
    return x1, x1 + ell


def site_parity_ok(ell, z2):
    """True when (ell, z2) is a clock site: z2 must have the line's parity."""
    return (z2 - ell) % 2 == 0


def neighbor_labels(p, ell):
    """The two blocking partners of particle (p, ell)."""
    return (p - 1, ell + 1), (p, ell - 1)


def slope_in_triangle(rho1, rho2, margin=DEFAULT_SLOPE_MARGIN):
    """True when (rho1, rho2) is at least `margin` inside the slope triangle."""
    r1 = np.asarray(rho1, dtype=float)
    r2 = np.asarray(rho2, dtype=float)
    ok = (r1 >= margin) & (r2 >= margin) & (r1 + r2 <= 1.0 - margin)
    return bool(ok) if ok.ndim == 0 else ok


@dataclass(frozen=True)
class Slope:
    """A point of the open slope triangle (tile fractions of the two
    non-vertical species); rho3 = 1 - rho1 - rho2 is the particle density."""

    rho1: float
    rho2: float

    def __post_init__(self):
        if not slope_in_triangle(self.rho1, self.rho2, 0.0):
            raise DomainError(f"slope outside the triangle: {self.rho1}, {self.rho2}")

    @property
    def rho3(self):
        return 1.0 - self.rho1 - self.rho2

    def validate(self, margin=DEFAULT_SLOPE_MARGIN):
        if not slope_in_triangle(self.rho1, self.rho2, margin):
            raise DomainError(
                f"slope ({self.rho1}, {self.rho2}) closer than {margin} to the boundary"
            )
        return self


@dataclass(frozen=True)
class LocalizationBox:
    """Where clocks ring: lines strictly inside (ell_lo, ell_hi), doubled
    horizontal coordinates weakly inside [z2_lo, z2_hi]."""

    ell_lo: int
    ell_hi: int
    z2_lo: int
    z2_hi: int

    def __post_init__(self):
        if self.ell_hi < self.ell_lo + 2:
            raise ValueError("box holds no active line")
        if self.z2_hi < self.z2_lo + 1:
            raise ValueError("box needs at least one site of each parity")

    def active_lines(self):
        return range(self.ell_lo + 1, self.ell_hi)

    def _count(self, ell):
        a = self.z2_lo + ((ell - self.z2_lo) & 1)
        if a > self.z2_hi:
            return 0
        return (self.z2_hi - a) // 2 + 1

    def site_params(self):
        """(first line, #lines, parity counts c0/c1, z2_lo, total sites)."""
        ell0g = self.ell_lo + 1
        nl = self.ell_hi - self.ell_lo - 1
        c0 = self._count(ell0g)
        c1 = self._count(ell0g + 1)
        total = (nl // 2) * (c0 + c1) + (nl % 2) * c0
        return ell0g, nl, c0, c1, self.z2_lo, total

    @property
    def site_count(self):
        return self.site_params()[5]

    def contains_site(self, ell, z2):
        return (
            self.ell_lo < ell < self.ell_hi
            and self.z2_lo <= z2 <= self.z2_hi
            and site_parity_ok(ell, z2)
        )

    def contains_vertex(self, ell, z2bar):
        """Height-domain membership (weak inequalities on both axes)."""
        return self.ell_lo <= ell <= self.ell_hi and self.z2_lo <= z2bar <= self.z2_hi

    def padded(self, dl, dz2):
        return LocalizationBox(
            self.ell_lo - dl, self.ell_hi + dl, self.z2_lo - dz2, self.z2_hi + dz2
        )


@dataclass
class ParticleConfig:
    """Finite window of an interlaced particle configuration.

    ``pos2`` holds the doubled positions of all particles, line by line from
    ``ell0`` upward, with CSR offsets ``line_start``; slot ``j`` of line index
    ``li`` carries label ``base[li] + (j - line_start[li])``.
    """

    ell0: int
    line_start: np.ndarray
    pos2: np.ndarray
    base: np.ndarray
    anchored: bool = True

    @property
    def nlines(self):
        return len(self.base)

    @property
    def ell_hi(self):
        return self.ell0 + self.nlines - 1

    @property
    def particle_count(self):
        return int(self.line_start[-1])

    def has_line(self, ell):
        return self.ell0 <= ell <= self.ell_hi

    def _li(self, ell):
        if not self.has_line(ell):
            raise WindowExhaustedError(f"line {ell} not in window [{self.ell0}, {self.ell_hi}]")
        return ell - self.ell0

    def positions2(self, ell):
        li = self._li(ell)
        return self.pos2[self.line_start[li] : self.line_start[li + 1]]

    def labels(self, ell):
        li = self._li(ell)
        n = self.line_start[li + 1] - self.line_start[li]
        return self.base[li] + np.arange(n, dtype=np.int64)

    def position_of(self, p, ell):
        """Doubled position of particle (p, ell); raises if not represented."""
        li = self._li(ell)
        j = self.line_start[li] + (p - self.base[li])
        if j < self.line_start[li] or j >= self.line_start[li + 1]:
            raise WindowExhaustedError(f"particle ({p}, {ell}) not in window")
        return int(self.pos2[j])

    def left_label(self, ell, z2bar):
        """Label of the right-most particle strictly left of each vertex.

        ``z2bar`` may be a scalar or an int array of doubled vertex
        coordinates on line ``ell``. Raises when a vertex is not bracketed by
        window particles (the window cannot answer for it).
        """
        li = self._li(ell)
        seg = self.pos2[self.line_start[li] : self.line_start[li + 1]]
        zb = np.atleast_1d(np.asarray(z2bar, dtype=np.int64))
        if len(seg) == 0:
            raise WindowExhaustedError(f"line {ell} empty in window")
        if zb.min() < seg[0] or zb.max() > seg[-1]:
            raise WindowExhaustedError(
                f"vertex outside covered span on line {ell}: "
                f"[{seg[0]}, {seg[-1]}] vs [{zb.min()}, {zb.max()}]"
            )
        idx = np.searchsorted(seg, zb)
        out = self.base[li] + idx - 1
        return out if np.ndim(z2bar) else int(out[0])

    def abs_height(self, ell, z2bar):
        """Height at star vertices of line ``ell`` in the absolute convention
        h = x1 - (label of the right-most particle strictly left)."""
        x1 = (np.asarray(z2bar, dtype=np.int64) - ell + 1) // 2
        out = x1 - self.left_label(ell, z2bar)
        return out if np.ndim(z2bar) else int(out)

    def copy(self):
        return ParticleConfig(
            self.ell0,
            self.line_start.copy(),
            self.pos2.copy(),
            self.base.copy(),
            self.anchored,
        )

    def same_positions(self, other):
        return (
            self.ell0 == other.ell0
            and np.array_equal(self.line_start, other.line_start)
            and np.array_equal(self.pos2, other.pos2)
            and np.array_equal(self.base, other.base)
        )

    # -- validation ---------------------------------------------------------

    def validate(self):
        """Return a list of problem descriptions (empty = valid)."""
        problems = []
        ls = self.line_start
        if len(ls) != self.nlines + 1 or ls[0] != 0 or ls[-1] != len(self.pos2):
            problems.append("offset table inconsistent")
            return problems
        for li in range(self.nlines):
            ell = self.ell0 + li
            seg = self.pos2[ls[li] : ls[li + 1]]
            if len(seg) and ((seg - ell) % 2 != 0).any():
                problems.append(f"line {ell}: parity violation")
            if len(seg) > 1 and (np.diff(seg) <= 0).any():
                problems.append(f"line {ell}: positions not strictly increasing")
        for li in range(self.nlines - 1):
            ell = self.ell0 + li
            lo = self.pos2[ls[li] : ls[li + 1]]
            up = self.pos2[ls[li + 1] : ls[li + 2]]
            bl, bu = int(self.base[li]), int(self.base[li + 1])
            # overlap of labels p with both z(p, ell) and z(p, ell+1) known
            p_lo = max(bl, bu)
            p_hi = min(bl + len(lo), bu + len(up))
            if p_hi > p_lo:
                a = lo[p_lo - bl : p_hi - bl]
                b = up[p_lo - bu : p_hi - bu]
                if (a >= b).any():
                    problems.append(f"lines {ell}/{ell + 1}: z(p,{ell}) < z(p,{ell + 1}) fails")
            # z(p, ell+1) < z(p+1, ell)
            p_lo2 = max(bl - 1, bu)
            p_hi2 = min(bl - 1 + len(lo), bu + len(up))
            if p_hi2 > p_lo2:
                a = lo[p_lo2 - bl + 1 : p_hi2 - bl + 1]
                b = up[p_lo2 - bu : p_hi2 - bu]
                if (b >= a).any():
                    problems.append(f"lines {ell}/{ell + 1}: z(p,{ell + 1}) < z(p+1,{ell}) fails")
        if self.anchored and self.has_line(0):
            seg = self.positions2(0)
            nn = np.searchsorted(seg, 0)
            if nn < len(seg):
                lbl = int(self.base[self._li(0)] + nn)
                if lbl != 0:
                    problems.append(f"anchor violated: left-most non-negative label is {lbl}")
        return problems

    def assert_valid(self):
        problems = self.validate()
        if problems:
            raise ValueError("invalid configuration: " + "; ".join(problems))
        return self

    # -- gap diagnostics ----------------------------------------------------

    def max_gap(self, k):
        """max over lines and labels of (z(p, ell) - z(p-k, ell)) / k.

        Every represented line must hold at least k + 1 particles, so the
        maximum is taken over a complete set of lines.
        """
        if k < 1:
            raise ValueError("k must be >= 1")
        short = [
            self.ell0 + li
            for li in range(self.nlines)
            if self.line_start[li + 1] - self.line_start[li] < k + 1
        ]
        if short:
            raise WindowExhaustedError(
                f"lines {short} hold fewer than {k + 1} particles"
            )
        best = None
        ls = self.line_start
        for li in range(self.nlines):
            seg = self.pos2[ls[li] : ls[li + 1]]
            if len(seg) > k:
                g = (seg[k:] - seg[:-k]).max() / (2.0 * k)
                best = g if best is None else max(best, g)
        if best is None:
            raise WindowExhaustedError(f"no line holds {k + 1} particles")
        return float(best)

    def in_gap_class(self, m):
        """True when every k-step spacing the window can resolve is <= m per
        step (per line, so short boundary lines do not hide long ones)."""
        ls = self.line_start
        for li in range(self.nlines):
            seg = self.pos2[ls[li] : ls[li + 1]]
            for k in range(1, len(seg)):
                if (seg[k:] - seg[:-k]).max() / (2.0 * k) > m:
                    return False
        return True

    # -- serialization ------------------------------------------------------

    def to_text(self):
        out = ["akpz-config v1", f"anchored {int(self.anchored)}", f"lines {self.nlines}"]
        for li in range(self.nlines):
            seg = self.pos2[self.line_start[li] : self.line_start[li + 1]]
            vals = " ".join(str(int(v)) for v in seg)
            out.append(f"line {self.ell0 + li} {int(self.base[li])} {len(seg)} : {vals}")
        return "\n".join(out) + "\n"

    @classmethod
    def from_text(cls, text):
        lines = [ln for ln in text.splitlines() if ln.strip()]
        if not lines or lines[0].strip() != "akpz-config v1":
            raise ValueError("not a config document")
        anchored = bool(int(lines[1].split()[1]))
        nlines = int(lines[2].split()[1])
        if len(lines) != 3 + nlines:
            raise ValueError("line count mismatch")
        ells, bases, segs = [], [], []
        for ln in lines[3:]:
            head, _, tail = ln.partition(":")
            parts = head.split()
            if parts[0] != "line":
                raise ValueError(f"bad record: {ln!r}")
            ells.append(int(parts[1]))
            bases.append(int(parts[2]))
            n = int(parts[3])
            seg = np.array([int(v) for v in tail.split()], dtype=np.int64)
            if len(seg) != n:
                raise ValueError(f"count mismatch on line {parts[1]}")
            segs.append(seg)
        if ells != list(range(ells[0], ells[0] + nlines)):
            raise ValueError("lines must be consecutive")
        counts = [len(s) for s in segs]
        line_start = np.zeros(nlines + 1, dtype=np.int64)
        np.cumsum(counts, out=line_start[1:])
        pos2 = np.concatenate(segs) if segs else np.zeros(0, dtype=np.int64)
        return cls(ells[0], line_start, pos2.astype(np.int64), np.array(bases, dtype=np.int64), anchored)


def validate_config(cfg):
    """Functional wrapper: list of problems, empty when the window is valid."""
    return cfg.validate()


def max_gap(cfg, k):
    return cfg.max_gap(k)


def build_config(per_line, ell0, anchored=True):
    """Assemble a ParticleConfig from [(base, positions2 array), ...] records."""
    counts = [len(seg) for _, seg in per_line]
    line_start = np.zeros(len(per_line) + 1, dtype=np.int64)
    np.cumsum(counts, out=line_start[1:])
    pos2 = (
        np.concatenate([np.asarray(seg, dtype=np.int64) for _, seg in per_line])
        if per_line
        else np.zeros(0, dtype=np.int64)
    )
    base = np.array([b for b, _ in per_line], dtype=np.int64)
    return ParticleConfig(ell0, line_start, pos2, base, anchored)
