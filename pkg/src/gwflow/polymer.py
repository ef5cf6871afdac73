"""Directed-polymer oracle: light-path chains and the variational height.

A light-path moves with |dx| <= dt; the order (x', t') >= (x, t) iff
t' - t >= |x' - x| is, after the rotation (a, b) = (t - x, t + x), the
product order on R^2, so the longest chain through a point set is a longest
non-decreasing subsequence computed by patience sorting.

The height of a single row admits the polymer representation

    h(x, y, t) = sup_z { phi(z, y) + L(points of row y in R_{(z,0),(x,t)}) }

over z in [x - t, x + t], where R is the light-rectangle with the given
diagonal and the points are the row's effective creations.  Both terms are
piecewise constant in z with breakpoints at the profile's steps and at the
cone corners x_i +- t_i of the points, so the supremum is attained on a
finite candidate set (breakpoints and interval midpoints, both sides).
"""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass

import numpy as np

E2 = math.e ** 2
LOCALITY_ALPHA = math.sqrt(24.0) * math.e  # information speed bound


def longest_light_chain(points) -> int:
    """Maximal number of points collectable by a light-path.

    O(n log n): rotate to (a, b) = (t - x, t + x), sort by a (ties by b),
    longest non-decreasing subsequence in b by patience sorting.  Ties in a
    with increasing b are chainable, which the sort order preserves.
    """
    pts = _as_points(points)
    if pts.shape[0] == 0:
        return 0
    a = pts[:, 1] - pts[:, 0]
    b = pts[:, 1] + pts[:, 0]
    order = np.lexsort((b, a))
    piles: list[float] = []
    for bv in b[order]:
        i = bisect.bisect_right(piles, bv)
        if i == len(piles):
            piles.append(bv)
        else:
            piles[i] = bv
    return len(piles)


def longest_chain_bruteforce(points) -> int:
    """Exponential reference: the largest totally ordered subset (n <= 12)."""
    pts = _as_points(points)
    n = pts.shape[0]
    if n > 12:
        raise ValueError("brute force capped at 12 points")
    if n == 0:
        return 0
    a = pts[:, 1] - pts[:, 0]
    b = pts[:, 1] + pts[:, 0]
    comparable = np.zeros(n, dtype=np.int64)  # bitmask of j comparable to i
    for i in range(n):
        for j in range(n):
            if i != j and ((a[i] <= a[j] and b[i] <= b[j])
                           or (a[j] <= a[i] and b[j] <= b[i])):
                comparable[i] |= 1 << j
    best = 0
    for mask in range(1 << n):
        size = mask.bit_count()
        if size <= best:
            continue
        ok = True
        m = mask
        while m:
            i = (m & -m).bit_length() - 1
            if mask & ~comparable[i] & ~(1 << i):
                ok = False
                break
            m &= m - 1
        if ok:
            best = size
    return best


def _as_points(points) -> np.ndarray:
    arr = np.asarray(list(points) if not isinstance(points, np.ndarray) else points,
                     dtype=float)
    if arr.size == 0:
        return arr.reshape(0, 2)
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise ValueError("points must be (x, t) pairs")
    return np.unique(arr, axis=0)


# ---------------------------------------------------------------------------
# light rectangles
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class LightRectangle:
    """Rectangle with sides parallel to t = +-x and diagonal [(z, s), (x, t)]."""

    z: float
    s: float
    x: float
    t: float

    def __post_init__(self):
        if abs(self.x - self.z) > self.t - self.s + 1e-12:
            raise ValueError("diagonal is not timelike")

    @property
    def area(self) -> float:
        return ((self.t - self.s) ** 2 - (self.x - self.z) ** 2) / 2.0

    @property
    def corners(self):
        cx1 = 0.5 * (self.z - self.s + self.x + self.t)
        ct1 = 0.5 * (self.s - self.z + self.x + self.t)
        cx2 = 0.5 * (self.z + self.s + self.x - self.t)
        ct2 = 0.5 * (self.s + self.z - self.x + self.t)
        return ((self.z, self.s), (cx2, ct2), (self.x, self.t), (cx1, ct1))

    def contains(self, u: float, r: float) -> bool:
        """(u, r) lies in the rectangle: inside both diagonal cones."""
        return (abs(u - self.x) <= self.t - r) and (abs(u - self.z) <= r - self.s)


def light_rectangle(p, q) -> LightRectangle:
    return LightRectangle(p[0], p[1], q[0], q[1])


# ---------------------------------------------------------------------------
# variational height
# ---------------------------------------------------------------------------


def variational_height(profile_eval, step_positions, effective, x: float,
                       t: float) -> int:
    """Polymer recomputation of h(x, y, t) for one row.

    ``profile_eval(z)`` is the initial row height (upper semi-continuous),
    ``step_positions`` its jump locations, ``effective`` the row's effective
    creations up to time t as (x_i, t_i) pairs.  Candidates: the window ends
    x +- t, every breakpoint (evaluated at the point and on both open sides)
    and the cone corners x_i +- t_i of each creation.
    """
    pts = _as_points(effective)
    if pts.size:
        keep = np.abs(pts[:, 0] - x) <= (t - pts[:, 1]) + 1e-12
        pts = pts[keep]
    lo, hi = x - t, x + t

    breaks = {lo, hi}
    for sp in step_positions:
        if lo <= sp <= hi:
            breaks.add(float(sp))
    for xi, ti in pts:
        for c in (xi - ti, xi + ti):
            if lo <= c <= hi:
                breaks.add(float(c))
    bs = sorted(breaks)
    candidates = list(bs)
    for i in range(len(bs) - 1):
        candidates.append(0.5 * (bs[i] + bs[i + 1]))

    best = None
    for z in candidates:
        val = profile_eval(z) + _chain_in_rectangle(pts, z, x, t)
        if best is None or val > best:
            best = val
    return int(best)


def _chain_in_rectangle(pts: np.ndarray, z: float, x: float, t: float) -> int:
    if pts.shape[0] == 0:
        return 0
    inside = (np.abs(pts[:, 0] - z) <= pts[:, 1]) & \
             (np.abs(pts[:, 0] - x) <= t - pts[:, 1])
    sub = pts[inside]
    if sub.shape[0] == 0:
        return 0
    return longest_light_chain(sub)


def row_oracle_inputs(traj, y: int, t: float):
    """Unrolled initial row and effective creations feeding the oracle.

    Torus rows repeat with period 2M and height shift p; enough periods are
    unrolled to cover any backward cone [x - t, x + t] with |x| <= M.
    """
    initial = traj.initial
    dom = initial.domain
    xs, ts = traj.creations.row_points(y, effective_only=True, t_max=t)
    row = initial.row(y)
    tau = initial.field_time

    from .domain import Torus  # local import to avoid a cycle at module load

    if not isinstance(dom, Torus):
        steps = [p for p, _ in row.positions(tau)]
        return (lambda z: initial._eval_row(row, z)), steps, np.column_stack([xs, ts])

    M = float(dom.M)
    p = initial.winding_p
    laps = int(math.ceil((t + M) / (2.0 * M))) + 1
    base_steps = [q for q, _ in row.positions(tau)]
    steps = [q + 2.0 * M * j for j in range(-laps, laps + 1) for q in base_steps]
    ex, et = [], []
    for j in range(-laps, laps + 1):
        ex.extend(xs + 2.0 * M * j)
        et.extend(ts)
    points = np.column_stack([np.array(ex), np.array(et)]) if ex else np.zeros((0, 2))

    def lifted(z: float) -> int:
        jx = math.floor((z + M) / (2.0 * M))
        zw = z - 2.0 * M * jx
        if zw >= M:
            zw -= 2.0 * M
            jx += 1
        return initial._eval_row(row, zw) + jx * p

    return lifted, steps, points


# ---------------------------------------------------------------------------
# tail bounds for chain lengths
# ---------------------------------------------------------------------------


def chain_tail_bound(area: float, k: int) -> float:
    """(2 e^2 area / k^2)^k bounds P(chain of length >= k in a light-rectangle)."""
    if k < 1:
        raise ValueError("k must be a positive integer")
    if area < 0:
        raise ValueError("area must be nonnegative")
    return (2.0 * E2 * area / k**2) ** k


def corollary_bound(leb_d: float, v_d: float, k: int) -> float:
    """2 Leb(D) (4 e^2 v(D)^2 / k^2)^k for a general domain of vertical diameter v."""
    if k < 1:
        raise ValueError("k must be a positive integer")
    return 2.0 * leb_d * (4.0 * E2 * v_d**2 / k**2) ** k


@dataclass(frozen=True)
class Trapezoid:
    """{(x, s): s in [0, t], |x| <= R + t - s}: the influence region shape."""

    R: float
    t: float

    @property
    def area(self) -> float:
        return 2.0 * self.R * self.t + self.t**2

    @property
    def vertical_diameter(self) -> float:
        return self.t

    @property
    def bbox(self):
        return (-(self.R + self.t), self.R + self.t, 0.0, self.t)

    def contains(self, x, s):
        return (s >= 0.0) & (s <= self.t) & (np.abs(x) <= self.R + self.t - s)


def estimate_chain_probability(shape, rows, replicas: int, seed: int,
                               intensity: float = 2.0) -> float:
    """Monte Carlo P(an ordered chain visits shape rows y_0..y_k in order).

    Samples per-row Poisson points of the given intensity in the shape and
    runs the reachability recursion row by row: a point is reachable iff a
    reachable point of the previous row lies in its backward cone.
    """
    rows = list(rows)
    if not rows:
        raise ValueError("row sequence must be nonempty")
    if any(abs(rows[i + 1] - rows[i]) > 1 for i in range(len(rows) - 1)):
        raise ValueError("consecutive rows must differ by at most 1")
    x0, x1, t0, t1 = shape.bbox
    box_area = (x1 - x0) * (t1 - t0)
    if box_area <= 0:
        return 0.0
    rng = np.random.Generator(np.random.Philox(key=np.array(
        [seed, 0x9E3779B97F4A7C15], dtype=np.uint64)))
    hits = 0
    for _ in range(replicas):
        pts = {}
        for y in set(rows):
            n = rng.poisson(intensity * box_area)
            xs = rng.uniform(x0, x1, n)
            ss = rng.uniform(t0, t1, n)
            keep = shape.contains(xs, ss)
            pts[y] = (xs[keep], ss[keep])
        xs, ss = pts[rows[0]]
        reach_x, reach_s = xs, ss
        ok = reach_x.size > 0
        for y in rows[1:]:
            if not ok:
                break
            xs, ss = pts[y]
            if xs.size == 0 or reach_x.size == 0:
                ok = False
                break
            dm = np.abs(xs[:, None] - reach_x[None, :]) <= \
                (ss[:, None] - reach_s[None, :])
            good = dm.any(axis=1)
            reach_x, reach_s = xs[good], ss[good]
            ok = reach_x.size > 0
        hits += 1 if ok else 0
    return hits / replicas
