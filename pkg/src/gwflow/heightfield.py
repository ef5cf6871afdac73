"""Admissible height functions h: R x Z -> Z.

A state is, per row y, a piecewise constant function of x with unit jumps:
a kink drops the height by one crossing left to right (h(x) = h(x-) = h(x+) + 1),
an antikink raises it (h(x) = h(x-) + 1 = h(x+)); values at jump points make
h(., y) upper semi-continuous.  Across rows the gradient is constrained to
h(x, y+1) - h(x, y) in {-1, 0}.

Steps are stored as ballistic invariants:  a kink moving at +1 keeps x - t
constant, an antikink moving at -1 keeps x + t constant.  A field at time
``field_time`` therefore stores ``kinks`` = x - field_time and ``antikinks`` =
x + field_time, which lets the dynamics restart from a snapshot without any
floating-point rebasing.  For fields built at time zero the invariants are
just the positions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field
from enum import IntEnum

import numpy as np

from .domain import Domain, DomainError, Torus, Window

COINCIDENCE_TOL = 1e-12


class StepType(IntEnum):
    KINK = -1      # height drops by 1 crossing left -> right; moves at +1
    ANTIKINK = 1   # height rises by 1 crossing left -> right; moves at -1


@dataclass
class Row:
    """One row of a height field.

    ``anchor`` is the height on the constant piece entering the row from the
    left edge of the domain (before the first step).
    """

    kinks: np.ndarray
    antikinks: np.ndarray
    anchor: int

    @classmethod
    def from_steps(cls, steps, anchor: int, field_time: float = 0.0) -> "Row":
        """Build from a list of (position, StepType) given at ``field_time``."""
        ks = sorted(x - field_time for x, s in steps if s == StepType.KINK)
        as_ = sorted(x + field_time for x, s in steps if s == StepType.ANTIKINK)
        return cls(np.asarray(ks, dtype=np.float64), np.asarray(as_, dtype=np.float64), anchor)

    def positions(self, field_time: float = 0.0):
        """Merged (position, StepType) list at ``field_time``, sorted by position.

        Co-located pairs sort antikink first (the two sides diverge).
        """
        items = [(k + field_time, StepType.KINK) for k in self.kinks]
        items += [(a - field_time, StepType.ANTIKINK) for a in self.antikinks]
        items.sort(key=lambda pt: (pt[0], pt[1] == StepType.KINK))
        return items

    def signed_step_sum(self) -> int:
        return len(self.antikinks) - len(self.kinks)

    def copy(self) -> "Row":
        return Row(self.kinks.copy(), self.antikinks.copy(), self.anchor)


@dataclass
class HeightField:
    """Height function restricted to a domain, at a fixed time.

    Torus fields carry the windings: ``winding_p`` is the signed step sum of
    every row (slope p / 2M along x) and ``winding_q`` the occupied-line count
    per column (slope -q / 2N along y).  Both are conserved by the dynamics.
    """

    domain: Domain
    rows: dict[int, Row]
    field_time: float = 0.0
    winding_p: int = 0
    winding_q: int = 0
    meta: dict = dc_field(default_factory=dict)

    def row(self, y: int) -> Row:
        try:
            return self.rows[y]
        except KeyError:
            raise DomainError(f"row {y} not in domain") from None

    def copy(self) -> "HeightField":
        return HeightField(
            self.domain,
            {y: r.copy() for y, r in self.rows.items()},
            self.field_time,
            self.winding_p,
            self.winding_q,
            dict(self.meta),
        )

    def shifted(self, m: int) -> "HeightField":
        """The field plus an integer constant."""
        out = self.copy()
        for r in out.rows.values():
            r.anchor += m
        return out

    # -- evaluation -----------------------------------------------------

    def eval(self, x: float, y: int) -> int:
        """Upper semi-continuous height at (x, y) inside the domain."""
        if isinstance(self.domain, Torus):
            M = self.domain.M
            if not (-M <= x < M):
                raise DomainError(f"x={x} outside [-{M}, {M})")
            if not (-self.domain.N <= y < self.domain.N):
                raise DomainError(f"y={y} outside torus rows")
        else:
            lo, hi = self.domain.x_extent
            if not (lo <= x <= hi):
                raise DomainError(f"x={x} outside window extent")
        return self._eval_row(self.row(y), x)

    def eval_unrolled(self, x: float, y: int) -> int:
        """Height of the periodic lift at arbitrary (x, y); torus only."""
        if not isinstance(self.domain, Torus):
            return self.eval(x, y)
        M, N = self.domain.M, self.domain.N
        jx = math.floor((x + M) / (2.0 * M))
        jy = math.floor((y + N) / (2 * N))
        xw = x - 2.0 * M * jx
        yw = y - 2 * N * jy
        if xw >= M:  # guard the floating boundary
            xw, jx = xw - 2.0 * M, jx + 1
        return self._eval_row(self.row(yw), xw) + jx * self.winding_p - jy * self.winding_q

    def _eval_row(self, row: Row, x: float) -> int:
        t = self.field_time
        xk = x - t
        xa = x + t
        n_k = int(np.searchsorted(row.kinks, xk, side="left"))
        n_a = int(np.searchsorted(row.antikinks, xa, side="left"))
        n_a_at = int(np.searchsorted(row.antikinks, xa, side="right")) - n_a
        return row.anchor + n_a - n_k + n_a_at

    # -- constructions --------------------------------------------------

    def pointwise_max(self, other: "HeightField") -> "HeightField":
        """Pointwise maximum of two fields on the same domain (same windings)."""
        if self.domain != other.domain or self.field_time != other.field_time:
            raise DomainError("pointwise_max needs matching domains and times")
        rows = {}
        for y in self.rows:
            rows[y] = _max_row(self, other, y)
        return HeightField(self.domain, rows, self.field_time, self.winding_p, self.winding_q)


def _max_row(f1: HeightField, f2: HeightField, y: int) -> Row:
    """Row of max(f1, f2): sweep the merged breakpoints left to right."""
    t = f1.field_time
    r1, r2 = f1.row(y), f2.row(y)
    xs = sorted(
        set([p for p, _ in r1.positions(t)] + [p for p, _ in r2.positions(t)])
    )
    anchor = max(r1.anchor, r2.anchor)
    left = f1.domain.x_extent[0]
    steps = []
    prev = anchor
    for x in xs:
        if x <= left:
            continue
        # value just right of x decides the step carried by the max
        right = max(r1.anchor + _count_lt_eq(r1, x, t),
                    r2.anchor + _count_lt_eq(r2, x, t))
        if right == prev + 1:
            steps.append((x, StepType.ANTIKINK))
        elif right == prev - 1:
            steps.append((x, StepType.KINK))
        elif right != prev:
            raise ValueError(f"pointwise max not admissible at x={x}, y={y}")
        prev = right
    return Row.from_steps(steps, anchor, t)


def _count_lt_eq(row: Row, x: float, t: float) -> int:
    """Signed step count over positions <= x (the limit from the right)."""
    n_k = int(np.searchsorted(row.kinks, x - t, side="right"))
    n_a = int(np.searchsorted(row.antikinks, x + t, side="right"))
    return n_a - n_k


# ---------------------------------------------------------------------------
# validation
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Violation:
    kind: str
    y: int
    x: float | None
    message: str


@dataclass
class ValidationReport:
    violations: list[Violation]

    @property
    def ok(self) -> bool:
        return not self.violations

    def __bool__(self) -> bool:  # truthy iff clean
        return self.ok


def validate(field: HeightField) -> ValidationReport:
    """Check every state-space invariant; empty report iff admissible."""
    out: list[Violation] = []
    tor = isinstance(field.domain, Torus)
    t = field.field_time

    for y, row in sorted(field.rows.items()):
        pts = row.positions(t)
        for i in range(1, len(pts)):
            if pts[i][0] < pts[i - 1][0]:
                out.append(Violation("unsorted", y, pts[i][0], "steps out of order"))
            elif pts[i][0] == pts[i - 1][0]:
                same = pts[i][1] == pts[i - 1][1]
                pair_ok = (pts[i - 1][1] == StepType.ANTIKINK and pts[i][1] == StepType.KINK)
                if same or not pair_ok:
                    out.append(
                        Violation("coincidence", y, pts[i][0],
                                  "coincident steps are only admissible as an antikink-kink pair")
                    )
        if tor:
            M = field.domain.M
            for x, _ in pts:
                if not (-M <= x < M):
                    out.append(Violation("out-of-cell", y, x, "step outside fundamental cell"))
            if row.signed_step_sum() != field.winding_p:
                out.append(
                    Violation("winding", y, None,
                              f"row step sum {row.signed_step_sum()} != p={field.winding_p}")
                )

    ys = sorted(field.rows)
    pairs = [(y, y + 1, 0) for y in ys[:-1]]
    if tor:
        pairs.append((ys[-1], ys[0], -field.winding_q))  # seam: h(., N) = h(., -N) - q
    for y_lo, y_hi, shift in pairs:
        _check_vertical(field, y_lo, y_hi, shift, out)
    return ValidationReport(out)


def _check_vertical(field, y_lo, y_hi, shift, out):
    r_lo, r_hi = field.row(y_lo), field.row(y_hi)
    t = field.field_time
    xs = sorted({p for p, _ in r_lo.positions(t)} | {p for p, _ in r_hi.positions(t)})
    lo_edge, hi_edge = field.domain.x_extent
    probes = [lo_edge + 0.25 * (hi_edge - lo_edge)] if not xs else []
    for i, x in enumerate(xs):
        probes.append(x)
        nxt = xs[i + 1] if i + 1 < len(xs) else hi_edge
        if nxt > x:
            probes.append(0.5 * (x + nxt))
    for x in probes:
        if isinstance(field.domain, Torus) and not (-field.domain.M <= x < field.domain.M):
            continue
        g = (field._eval_row(r_hi, x) + shift) - field._eval_row(r_lo, x)
        if g not in (-1, 0):
            out.append(Violation("vertical-gradient", y_lo, x,
                                 f"h(x,{y_hi})-h(x,{y_lo}) = {g}"))
            return  # one witness per row pair keeps reports readable


def eval_height(field: HeightField, x: float, y: int) -> int:
    """Module-level alias of HeightField.eval."""
    return field.eval(x, y)


# ---------------------------------------------------------------------------
# linear fields and gradient statistics
# ---------------------------------------------------------------------------


def linear_field(rho, torus: Torus, n: int = 1) -> HeightField:
    """Torus-admissible discretization of the plane f_rho(x, y) = rho . (x, y).

    The slope is quantized to the nearest representable pair
    (p / (2 M n), -q / (2 N n)); the realized slope is stored in ``meta``.
    Each row carries |p| evenly spaced steps at positions shared by all rows
    (aligned columns keep the vertical constraint exact for any p, q).
    """
    rho1, rho2 = float(rho[0]), float(rho[1])
    if not (-1.0 <= rho2 <= 0.0):
        raise ValueError(f"rho2 must lie in [-1, 0], got {rho2}")
    if n < 1:
        raise ValueError("n must be a positive integer")
    torus = Torus(torus.M * n, torus.N * n) if n > 1 else torus
    M, N = torus.M, torus.N

    p = round(2 * M * rho1)
    q = round(-2 * N * rho2)
    if not (0 <= q <= 2 * N):
        raise ValueError(f"rho2={rho2} not realizable on 2N={2 * N} rows")
    realized = (p / (2.0 * M), -q / (2.0 * N))

    step_type = StepType.ANTIKINK if p >= 0 else StepType.KINK
    nsteps = abs(p)
    xs = [-M + (j + 0.5) * (2.0 * M / nsteps) for j in range(nsteps)] if nsteps else []

    occupied = _even_occupation(q, 2 * N)
    rows = {}
    anchor = 0
    for i, y in enumerate(range(-N, N)):
        rows[y] = Row.from_steps([(x, step_type) for x in xs], anchor, 0.0)
        # h(x, y+1) - h(x, y) = -1 iff row y occupied
        anchor -= int(occupied[i])
    fld = HeightField(torus, rows, 0.0, p, q, meta={"realized_slope": realized})
    offset = fld.eval(0.0, 0)  # pin h(0, 0) = 0 like the stationary profiles
    if offset:
        for row in fld.rows.values():
            row.anchor -= offset
    return fld


def _even_occupation(q: int, nrows: int) -> np.ndarray:
    """q occupied rows out of nrows, as evenly spaced as possible."""
    marks = np.floor(np.arange(1, nrows + 1) * q / nrows) - np.floor(np.arange(nrows) * q / nrows)
    return marks.astype(bool)


@dataclass(frozen=True)
class Box:
    """Axis-aligned region: x in [x0, x1), rows y0..y1 inclusive."""

    x0: float
    x1: float
    y0: int
    y1: int


def gradient_stats(field: HeightField, region: Box) -> dict:
    """Exact step counts by type and length-weighted occupation in a region.

    Occupation is the fraction of (x, y) in the region with
    h(x, y+1) - h(x, y) = -1; the pair (y1, y1+1) uses the torus seam shift
    when y1 is the last row.
    """
    kinks = antikinks = 0
    t = field.field_time
    for y in range(region.y0, region.y1 + 1):
        row = field.row(y)
        for x, s in row.positions(t):
            if region.x0 <= x < region.x1:
                if s == StepType.KINK:
                    kinks += 1
                else:
                    antikinks += 1

    occupied_len = 0.0
    tor = isinstance(field.domain, Torus)
    for y in range(region.y0, region.y1 + 1):
        y_up, shift = y + 1, 0
        if tor and y_up >= field.domain.N:
            y_up, shift = -field.domain.N, -field.winding_q
        r_lo, r_hi = field.row(y), field.row(y_up)
        xs = sorted({p for p, _ in r_lo.positions(t)} | {p for p, _ in r_hi.positions(t)})
        edges = [region.x0] + [x for x in xs if region.x0 < x < region.x1] + [region.x1]
        for i in range(len(edges) - 1):
            xm = 0.5 * (edges[i] + edges[i + 1])
            g = (field._eval_row(r_hi, xm) + shift) - field._eval_row(r_lo, xm)
            if g == -1:
                occupied_len += edges[i + 1] - edges[i]
    n_rows = region.y1 - region.y0 + 1
    area = (region.x1 - region.x0) * n_rows
    return {
        "kinks": kinks,
        "antikinks": antikinks,
        "occupation": occupied_len / area if area > 0 else 0.0,
    }
