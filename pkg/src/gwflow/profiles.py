"""Continuous initial profiles and their unit-jump discretization.

Supported profiles form a closed algebra (affine, affine plus sinusoid,
min/max of affine pieces) so the level crossings needed by the discretizer
are computable in closed form or by Lipschitz-safe marching plus bisection;
generic callables are accepted with a user-supplied x-Lipschitz constant.

All profiles must satisfy the slope constraint of the continuous state
space: for every x and y1 <= y2, f(x, y2) - f(x, y1) in [-(y2 - y1), 0].
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .domain import Torus, Window
from .heightfield import HeightField, Row, validate

BISECT_TOL = 1e-12


class DiscretizationError(ValueError):
    pass


@dataclass(frozen=True)
class AffineProfile:
    """f(x, y) = rho1 * x + rho2 * y + offset."""

    rho1: float
    rho2: float
    offset: float = 0.0

    def value(self, x, y):
        return self.rho1 * x + self.rho2 * y + self.offset

    def in_gamma_bar(self) -> bool:
        return -1.0 <= self.rho2 <= 0.0

    def x_lipschitz(self) -> float:
        return abs(self.rho1)

    def asymptotic_slope(self):
        return (self.rho1, self.rho2)


@dataclass(frozen=True)
class AffineSinusoidProfile:
    """f(x, y) = rho1 x + rho2 y + offset + amplitude * sin(wx x + wy y + phase)."""

    rho1: float
    rho2: float
    amplitude: float
    wave_x: float
    wave_y: float = 0.0
    phase: float = 0.0
    offset: float = 0.0

    def value(self, x, y):
        return (self.rho1 * x + self.rho2 * y + self.offset
                + self.amplitude * np.sin(self.wave_x * x + self.wave_y * y + self.phase))

    def in_gamma_bar(self) -> bool:
        wob = abs(self.amplitude * self.wave_y)
        return self.rho2 - wob >= -1.0 and self.rho2 + wob <= 0.0

    def x_lipschitz(self) -> float:
        return abs(self.rho1) + abs(self.amplitude * self.wave_x)

    def asymptotic_slope(self):
        return (self.rho1, self.rho2)


@dataclass(frozen=True)
class PiecewiseLinearProfile:
    """Min or max combination of affine pieces (e.g. the wedge max(-y/4, -y/2))."""

    pieces: tuple[AffineProfile, ...]
    combine: str = "max"

    def __post_init__(self):
        if self.combine not in ("max", "min"):
            raise ValueError("combine must be 'max' or 'min'")
        if not self.pieces:
            raise ValueError("need at least one affine piece")

    def value(self, x, y):
        vals = np.stack([np.asarray(p.value(x, y), dtype=float) for p in self.pieces])
        out = vals.max(axis=0) if self.combine == "max" else vals.min(axis=0)
        return out if out.shape else float(out)

    def in_gamma_bar(self) -> bool:
        return all(p.in_gamma_bar() for p in self.pieces)

    def x_lipschitz(self) -> float:
        return max(p.x_lipschitz() for p in self.pieces)

    def asymptotic_slope(self):
        slopes = {(p.rho1, p.rho2) for p in self.pieces}
        return slopes.pop() if len(slopes) == 1 else None


@dataclass(frozen=True)
class GenericProfile:
    """Arbitrary callable with a declared x-Lipschitz constant."""

    func: object
    lipschitz_x: float
    gamma_bar: bool = True

    def value(self, x, y):
        return self.func(x, y)

    def in_gamma_bar(self) -> bool:
        return self.gamma_bar

    def x_lipschitz(self) -> float:
        return self.lipschitz_x

    def asymptotic_slope(self):
        return None


ContinuousProfile = (
    AffineProfile | AffineSinusoidProfile | PiecewiseLinearProfile | GenericProfile
)


# ---------------------------------------------------------------------------
# level crossings of a row function g(x) = n f(x/n, y/n)
# ---------------------------------------------------------------------------


def _crossing_right(g, lip, x0, lo, hi, x_max):
    """First x in (x0, x_max] with g(x) <= lo or g(x) >= hi, else None.

    From x the boundary cannot be reached before x + gap/lip, so marching by
    that amount never skips a crossing; a bracketing step is then bisected.
    """
    x = x0
    gx = g(x)
    while x < x_max:
        gap = min(gx - lo, hi - gx)
        step = gap / lip if lip > 0 else (x_max - x)
        step = max(step, 1e-9)
        x_next = min(x + step, x_max)
        g_next = g(x_next)
        if g_next <= lo or g_next >= hi:
            return _bisect_crossing(g, x, x_next, lo, hi)
        x, gx = x_next, g_next
    return None


def _bisect_crossing(g, x_in, x_out, lo, hi):
    for _ in range(200):
        if x_out - x_in <= BISECT_TOL:
            break
        xm = 0.5 * (x_in + x_out)
        if g(xm) <= lo or g(xm) >= hi:
            x_out = xm
        else:
            x_in = xm
    return x_out


def _affine_crossing_right(slope, g0, x0, lo, hi, x_max):
    if slope > 0:
        x = x0 + (hi - g0) / slope
    elif slope < 0:
        x = x0 + (lo - g0) / slope
    else:
        return None
    return x if x0 < x <= x_max else None


def _row_g(profile, n, y):
    """The per-row function g(x) = n f(x/n, y/n) plus marching metadata."""
    yr = y / n
    if isinstance(profile, AffineProfile):
        slope = profile.rho1
        c = n * (profile.rho2 * yr + profile.offset)
        return (lambda x: slope * x + c), slope, True
    f = profile.value
    return (lambda x: n * float(f(x / n, yr))), None, False


def _march_row(g, lip, slope, affine, x_start, v0, x_stop):
    """March rightward from (x_start, v0); return crossings [(x, new_value)]."""
    marks = []
    x, v = x_start, v0
    while True:
        lo, hi = v - 1.0, v + 1.0
        if affine:
            xc = _affine_crossing_right(slope, g(x), x, lo, hi, x_stop)
        else:
            xc = _crossing_right(g, lip, x, lo, hi, x_stop)
        if xc is None:
            return marks
        gv = g(xc)
        v_new = v + 1 if abs(gv - hi) <= abs(gv - lo) else v - 1
        marks.append((xc, v_new))
        x, v = xc, v_new


def _marks_to_row(anchor, marks):
    """Convert rightward crossings [(x, new_value)] into a Row."""
    ks, as_ = [], []
    prev = anchor
    for x, v in marks:
        if v == prev + 1:
            as_.append(x)
        elif v == prev - 1:
            ks.append(x)
        else:
            raise DiscretizationError("non-unit jump in discretizer march")
        prev = v
    return Row(np.asarray(ks, dtype=np.float64), np.asarray(as_, dtype=np.float64),
               int(anchor))


# ---------------------------------------------------------------------------
# discretizer
# ---------------------------------------------------------------------------


def discretize(profile, n: int, domain) -> HeightField:
    """Unit-jump discretization phi with sup |phi(nx, floor(ny))/n - f| <= 2/n.

    Per row the construction is inductive from an anchor point X0: the next
    crossing X_{i+1} is the first x where |n f(x/n, y/n) - v_i| reaches 1 and
    the value there is n f(X_{i+1}/n, y/n), an integer by continuity.  Window
    rows anchor at X0 = 0 with v0 = floor(n f(0, y/n)) and are mirrored for
    x < 0; torus rows anchor at X0 = -M and close the winding with at most
    one seam step (the corrected level stays within 1 of n f).
    """
    if n < 1:
        raise ValueError("n must be a positive integer")
    if not profile.in_gamma_bar():
        raise DiscretizationError("profile violates the slope constraint d_y f in [-1, 0]")

    if isinstance(domain, Torus):
        fld = _discretize_torus(profile, n, domain)
    elif isinstance(domain, Window):
        fld = _discretize_window(profile, n, domain)
    else:
        raise TypeError(f"unsupported domain {domain!r}")

    report = validate(fld)
    if not report.ok:
        raise DiscretizationError(
            f"discretization left the state space: {report.violations[:3]}")
    return fld


def _discretize_window(profile, n, win: Window):
    lo_edge, hi_edge = win.x_extent
    lip = profile.x_lipschitz()
    rows = {}
    for y in win.rows:
        g, slope, affine = _row_g(profile, n, y)
        v0 = math.floor(g(0.0))
        right = _march_row(g, lip, slope, affine, 0.0, v0, hi_edge)

        gm = (lambda u, _g=g: _g(-u))
        sm = -slope if slope is not None else None
        left = _march_row(gm, lip, sm, affine, 0.0, v0, -lo_edge)
        # leftward crossing i sits at -u_i; the value left of it is its own
        # level, the value right of it is the previous level (v0 for i = 1).
        lvals = [v0] + [v for _, v in left]
        anchor = lvals[-1]
        marks = [(-left[i][0], lvals[i]) for i in range(len(left) - 1, -1, -1)]
        marks += right
        rows[y] = _marks_to_row(anchor, marks)
    return HeightField(win, rows, 0.0)


def _discretize_torus(profile, n, torus: Torus):
    M, N = torus.M, torus.N
    lip = profile.x_lipschitz()

    p_f = n * (profile.value(M / n, 0.0) - profile.value(-M / n, 0.0))
    p = round(p_f)
    q_f = -n * (profile.value(0.0, N / n) - profile.value(0.0, -N / n))
    q = round(q_f)
    if abs(p_f - p) > 1e-6 or abs(q_f - q) > 1e-6:
        raise DiscretizationError(
            f"cell drops must be integers, got p={p_f}, q={q_f}; "
            "profile is not compatible with this torus at this n")

    rows = {}
    for y in range(-N, N):
        g, slope, affine = _row_g(profile, n, y)
        p_row = g(float(M)) - g(-float(M))
        if abs(p_row - p) > 1e-6:
            raise DiscretizationError(f"row {y} x-drop {p_row} != p={p}")
        v0 = math.floor(g(-float(M)))
        marks = [(x, v) for x, v in
                 _march_row(g, lip, slope, affine, -float(M), v0, float(M))
                 if x < M]
        v_last = marks[-1][1] if marks else v0
        gap = (v0 + p) - v_last
        if gap == 0:
            rows[y] = _marks_to_row(v0, marks)
        elif abs(gap) == 1:
            # close the winding with a seam step at -M: left of the seam the
            # previous period ends at v_last - p = v0 - gap.
            rows[y] = _marks_to_row(v0 - gap, [(-float(M), v0)] + marks)
        else:
            raise DiscretizationError(
                f"seam mismatch {gap} at row {y}: the profile grazes integer "
                "levels tangentially at this n (e.g. amplitude*n integer); "
                "perturb offset/phase or change n")
    return HeightField(torus, rows, 0.0, p, q)
