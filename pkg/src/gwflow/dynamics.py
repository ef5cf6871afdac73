"""Exact event-driven growth dynamics.

Three rules drive the evolution: every kink moves at speed +1 and every
antikink at -1; a kink meeting an antikink annihilates with it; a Poisson
candidate at (x, y, t) raises h(x, y) by one iff h(x, y-1) - h(x, y) = 1,
h(x, y) - h(x, y+1) = 0 at t- and row y has no step at x, nucleating an
antikink/kink pair that expands the new terrace.

Runs live on an absolute timeline: a trajectory started at t_start from a
snapshot field consumes creations with t in (t_start, t_end] directly, which
is the time-shifted process without any floating-point rebasing and makes
snapshot/restart reproduce a one-shot run bit-exactly.

Tie-breaking at equal event times is by (t, y, x) with collisions and seam
wraps ranking before creations; the continuum process hits ties with
probability zero, so the rule only pins determinism.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field

import numpy as np

from . import _simcore as core
from .domain import Domain, DomainError, Torus, Window
from .heightfield import COINCIDENCE_TOL, HeightField, Row, validate

CREATION_INTENSITY = 2.0


class SimulationError(RuntimeError):
    pass


def _splitmix64(z: int) -> int:
    z = (z + 0x9E3779B97F4A7C15) & 0xFFFFFFFFFFFFFFFF
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & 0xFFFFFFFFFFFFFFFF
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & 0xFFFFFFFFFFFFFFFF
    return z ^ (z >> 31)


def replica_seed(seed: int, index: int) -> int:
    """Per-replica stream key: seed XOR splitmix64(index)."""
    return (seed ^ _splitmix64(index)) & 0xFFFFFFFFFFFFFFFF


@dataclass
class CreationSet:
    """Time-sorted Poisson creation candidates with resolution flags.

    Flags: 0 pending, 1 effective, 2 rejected.  Points are jointly sorted by
    (t, y, x); per-row slices are therefore time-sorted too.
    """

    domain: Domain
    seed: int
    horizon: float
    t: np.ndarray
    y: np.ndarray
    x: np.ndarray
    flags: np.ndarray
    intensity: float = CREATION_INTENSITY
    _row_index: dict = dc_field(default_factory=dict, repr=False)

    def __len__(self) -> int:
        return self.t.shape[0]

    def with_fresh_flags(self) -> "CreationSet":
        return CreationSet(self.domain, self.seed, self.horizon,
                           self.t, self.y, self.x,
                           np.zeros_like(self.flags), self.intensity)

    def row_points(self, y: int, effective_only: bool = False,
                   t_max: float | None = None):
        """(x, t) arrays of candidates on row y, optionally effective/truncated."""
        if y not in self._row_index:
            self._row_index[y] = np.flatnonzero(self.y == y)
        idx = self._row_index[y]
        if effective_only:
            idx = idx[self.flags[idx] == 1]
        xs, ts = self.x[idx], self.t[idx]
        if t_max is not None:
            keep = ts <= t_max
            xs, ts = xs[keep], ts[keep]
        return xs, ts


def sample_creations(seed: int, domain: Domain, T: float) -> CreationSet:
    """Poisson candidates of intensity 2 per unit length and time on [0, T].

    Each row draws from its own counter-based stream keyed by (seed, y), so
    rows are reproducible independently and in any order.  Window domains
    receive creations on interior rows only (the buffer rows are the
    creation-free seal that makes the finite simulation exact).
    """
    if T < 0:
        raise ValueError("horizon must be nonnegative")
    if isinstance(domain, Torus):
        rows = domain.rows
        x_lo, x_hi = domain.x_extent
    else:
        rows = domain.interior_rows
        x_lo, x_hi = domain.x_extent
    length = x_hi - x_lo
    if length <= 0:
        raise ValueError("zero-length domain")

    xs_all, ts_all, ys_all = [], [], []
    mean = CREATION_INTENSITY * length * T
    for y in rows:
        rng = np.random.Generator(
            np.random.Philox(key=np.array([seed, y & 0xFFFFFFFFFFFFFFFF],
                                          dtype=np.uint64)))
        n = rng.poisson(mean) if T > 0 else 0
        xs = rng.uniform(x_lo, x_hi, n)
        ts = rng.uniform(0.0, T, n)
        xs_all.append(xs)
        ts_all.append(ts)
        ys_all.append(np.full(n, y, dtype=np.int64))
    x = np.concatenate(xs_all) if xs_all else np.empty(0)
    t = np.concatenate(ts_all) if ts_all else np.empty(0)
    yv = np.concatenate(ys_all) if ys_all else np.empty(0, dtype=np.int64)
    order = np.lexsort((x, yv, t))
    return CreationSet(domain, seed, T, t[order], yv[order], x[order],
                       np.zeros(len(order), dtype=np.int8))


def periodize(cs: CreationSet, M: int, N: int) -> CreationSet:
    """Wrap candidates into the fundamental cell [-M, M) x [-N, N-1].

    A point lands at (x, y, t) iff its representative ([x]^M, [y]^N, t) does;
    simulating on the torus with cell-sampled candidates is the same process.
    """
    tor = Torus(M, N)
    x = np.array([tor.wrap_x(v) for v in cs.x])
    y = np.array([tor.wrap_y(int(v)) for v in cs.y], dtype=np.int64)
    order = np.lexsort((x, y, cs.t))
    return CreationSet(tor, cs.seed, cs.horizon, cs.t[order], y[order], x[order],
                       np.zeros(len(order), dtype=np.int8))


# ---------------------------------------------------------------------------
# simulator state
# ---------------------------------------------------------------------------


class _SimState:
    """Mutable row/heap/log arrays around the numba kernels."""

    def __init__(self, field: HeightField, t_start: float):
        self.domain = field.domain
        self.is_torus = isinstance(field.domain, Torus)
        ys = sorted(field.rows)
        self.y0 = ys[0]
        R = len(ys)
        if self.is_torus:
            self.M = float(field.domain.M)
            self.q = field.winding_q
            self.has_absorb = False
            self.x_absorb = 0.0
        else:
            self.M = 0.0
            self.q = 0
            self.has_absorb = True
            self.x_absorb = field.domain.x_extent[0] - 1.0
        cap = 16
        total_steps = 0
        for y in ys:
            row = field.rows[y]
            n_row = len(row.kinks) + len(row.antikinks)
            total_steps += n_row
            cap = max(cap, 2 * n_row + 16)
        self.kinv = np.full((R, cap), np.inf)
        self.ainv = np.full((R, cap), np.inf)
        self.nk = np.zeros(R, dtype=np.int64)
        self.na = np.zeros(R, dtype=np.int64)
        self.base = np.zeros(R, dtype=np.int64)
        for i, y in enumerate(ys):
            row = field.rows[y]
            self.nk[i] = len(row.kinks)
            self.na[i] = len(row.antikinks)
            self.kinv[i, :self.nk[i]] = row.kinks
            self.ainv[i, :self.na[i]] = row.antikinks
            self.base[i] = row.anchor
        # seed_events pushes at most 2 wraps + 1 pair entry per initial step
        hcap = max(1 << 12, 3 * total_steps + 1024)
        self.ht = np.zeros(hcap)
        self.hy = np.zeros(hcap, dtype=np.int64)
        self.hx = np.zeros(hcap)
        self.hk = np.zeros(hcap, dtype=np.int64)
        self.hv1 = np.zeros(hcap)
        self.hv2 = np.zeros(hcap)
        lcap = 1 << 12
        self.lt = np.zeros(lcap)
        self.ly = np.zeros(lcap, dtype=np.int64)
        self.lx = np.zeros(lcap)
        self.meta = np.zeros(4, dtype=np.int64)
        core.seed_events(self.kinv, self.nk, self.ainv, self.na,
                         self.ht, self.hy, self.hx, self.hk, self.hv1, self.hv2,
                         self.meta, t_start, self.M, self.is_torus)

    def grow_rows(self):
        cap = self.kinv.shape[1]
        for name in ("kinv", "ainv"):
            old = getattr(self, name)
            new = np.full((old.shape[0], 2 * cap), np.inf)
            new[:, :cap] = old
            setattr(self, name, new)

    def grow_heap(self):
        n = self.ht.shape[0]
        for name in ("ht", "hx", "hv1", "hv2"):
            old = getattr(self, name)
            setattr(self, name, np.concatenate([old, np.zeros(n, old.dtype)]))
        for name in ("hy", "hk"):
            old = getattr(self, name)
            setattr(self, name, np.concatenate([old, np.zeros(n, old.dtype)]))

    def grow_log(self):
        n = self.lt.shape[0]
        self.lt = np.concatenate([self.lt, np.zeros(n)])
        self.ly = np.concatenate([self.ly, np.zeros(n, dtype=np.int64)])
        self.lx = np.concatenate([self.lx, np.zeros(n)])

    def run_to(self, ct, cy0, cx, cflag, t_to, force_accept=False):
        while True:
            status = core.advance(
                self.kinv, self.nk, self.ainv, self.na, self.base,
                self.is_torus, self.M, self.q, self.has_absorb, self.x_absorb,
                ct, cy0, cx, cflag,
                self.ht, self.hy, self.hx, self.hk, self.hv1, self.hv2,
                self.lt, self.ly, self.lx, self.meta,
                t_to, force_accept, COINCIDENCE_TOL)
            if status == core.ST_DONE:
                break
            if status == core.ST_GROW_ROWS:
                self.grow_rows()
            elif status == core.ST_GROW_HEAP:
                self.grow_heap()
            elif status == core.ST_GROW_LOG:
                self.grow_log()
            else:
                raise SimulationError(
                    "creation requires a neighbor row outside the window; "
                    "widen the vertical buffer")
        # normalize every row at t_to so captures and evals are exact
        while core.reconcile_all(
                self.kinv, self.nk, self.ainv, self.na, self.base, t_to,
                self.M, self.is_torus, self.has_absorb, self.x_absorb,
                self.ht, self.hy, self.hx, self.hk, self.hv1, self.hv2,
                self.meta) != core.ST_DONE:
            self.grow_heap()

    def capture(self, t: float, field: HeightField) -> HeightField:
        rows = {}
        for i in range(self.nk.shape[0]):
            rows[self.y0 + i] = Row(self.kinv[i, :self.nk[i]].copy(),
                                    self.ainv[i, :self.na[i]].copy(),
                                    int(self.base[i]))
        return HeightField(self.domain, rows, t,
                           field.winding_p, field.winding_q)

    def height(self, x: float, y: int, t: float) -> int:
        return int(core.height_now(self.kinv, self.nk, self.ainv, self.na,
                                   self.base, y - self.y0, x, t))


# ---------------------------------------------------------------------------
# trajectories
# ---------------------------------------------------------------------------


@dataclass
class Trajectory:
    """One dynamics run: snapshots plus a replayable event log."""

    initial: HeightField
    creations: CreationSet
    annihilations: np.ndarray  # structured columns (t, y, x)
    snapshots: list
    t_start: float
    t_end: float

    @property
    def final(self) -> HeightField:
        return self.snapshots[-1][1]

    def snapshot_before(self, t: float):
        best = self.snapshots[0]
        for st, fld in self.snapshots:
            if st <= t:
                best = (st, fld)
            else:
                break
        return best

    def height_at(self, x: float, y: int, t: float) -> int:
        """Exact height by single-row replay from the nearest earlier snapshot."""
        if not (self.t_start <= t <= self.t_end):
            raise DomainError(f"t={t} outside [{self.t_start}, {self.t_end}]")
        dom = self.initial.domain
        jx = jy = 0
        if isinstance(dom, Torus):
            M, N = dom.M, dom.N
            jx = int(np.floor((x + M) / (2.0 * M)))
            jy = int(np.floor((y + N) / (2 * N)))
            x = x - 2.0 * M * jx
            y = y - 2 * N * jy
            if x >= M:
                x -= 2.0 * M
                jx += 1
        st, fld = self.snapshot_before(t)
        if st == t:
            h = fld._eval_row(fld.row(y), x)
        else:
            h = _replay_row_height(fld, st, self.creations, x, y, t)
        return h + jx * self.initial.winding_p - jy * self.initial.winding_q

    def event_log(self):
        """Events as dicts ordered by (t, y, x); creations carry their flag."""
        events = []
        for i in range(len(self.creations)):
            events.append({"t": float(self.creations.t[i]), "kind": "creation",
                           "x": float(self.creations.x[i]),
                           "y": int(self.creations.y[i]),
                           "effective": bool(self.creations.flags[i] == 1)})
        ann = self.annihilations
        for i in range(ann.shape[0]):
            events.append({"t": float(ann[i, 0]), "kind": "annihilation",
                           "x": float(ann[i, 2]), "y": int(ann[i, 1]),
                           "effective": True})
        events.sort(key=lambda e: (e["t"], e["y"], e["x"]))
        return events


def _replay_row_height(snapshot: HeightField, t_snap: float, cs: CreationSet,
                       x: float, y: int, t: float) -> int:
    row = snapshot.row(y)
    one = HeightField(snapshot.domain, {y: row.copy()}, t_snap,
                      snapshot.winding_p, snapshot.winding_q)
    state = _SimState(one, t_snap)
    xs, ts = cs.row_points(y, effective_only=True)
    keep = (ts > t_snap) & (ts <= t)
    xs, ts = xs[keep], ts[keep]
    order = np.argsort(ts, kind="stable")
    ct = ts[order]
    cx = xs[order]
    cy0 = np.zeros(len(ct), dtype=np.int64)
    cflag = np.zeros(len(ct), dtype=np.int8)
    state.run_to(ct, cy0, cx, cflag, t, force_accept=True)
    return int(core.height_now(state.kinv, state.nk, state.ainv, state.na,
                               state.base, 0, x, t))


def evolve(initial: HeightField, creations: CreationSet, t_end: float,
           snapshot_times=None, t_start: float = 0.0,
           check_initial: bool = True) -> Trajectory:
    """Run the dynamics on [t_start, t_end] and return the trajectory.

    Consumes creation candidates with t in (t_start, t_end]; the candidate
    horizon must cover t_end.  Snapshot times default to eight evenly spaced
    times plus t_end; the initial state is always snapshot zero.
    """
    if t_end < t_start:
        raise ValueError("t_end must be >= t_start")
    if creations.horizon < t_end - 1e-12:
        raise SimulationError(
            f"creation horizon {creations.horizon} shorter than t_end={t_end}")
    if check_initial:
        report = validate(initial)
        if not report.ok:
            raise SimulationError(f"invalid initial field: {report.violations[:3]}")

    if snapshot_times is None:
        snapshot_times = list(t_start + (t_end - t_start) * np.arange(1, 9) / 8.0)
    times = sorted({float(s) for s in snapshot_times} | {float(t_end)})
    if any(s < t_start or s > t_end for s in times):
        raise ValueError("snapshot times must lie in [t_start, t_end]")

    cs = creations.with_fresh_flags()
    lo = int(np.searchsorted(cs.t, t_start, side="right"))
    hi = int(np.searchsorted(cs.t, t_end, side="right"))
    ct = cs.t[lo:hi]
    cx = cs.x[lo:hi]
    cy0 = (cs.y[lo:hi] - min(initial.rows)).astype(np.int64)
    cflag = cs.flags[lo:hi]  # shared memory: flags resolve in place

    state = _SimState(initial, t_start)
    snaps = [(t_start, initial.copy())]
    for s in times:
        state.run_to(ct, cy0, cx, cflag, s)
        snaps.append((s, state.capture(s, initial)))

    n_ann = int(state.meta[core.M_LOG_N])
    ann = np.empty((n_ann, 3))
    ann[:, 0] = state.lt[:n_ann]
    ann[:, 1] = state.ly[:n_ann] + min(initial.rows)
    ann[:, 2] = state.lx[:n_ann]
    return Trajectory(initial, cs, ann, snaps, t_start, float(t_end))


def height_at(traj: Trajectory, x: float, y: int, t: float) -> int:
    """Module-level alias of Trajectory.height_at."""
    return traj.height_at(x, y, t)


def run_markov_split(initial: HeightField, creations: CreationSet,
                     s: float, t: float):
    """One-shot run to t versus stop-at-s-and-restart; fields must match.

    The restart consumes the snapshot's ballistic invariants and the same
    absolute-time creations on (s, t], which is the time-shifted process;
    all event times are derived from invariants, so the two final fields
    agree bit-exactly.
    """
    if not (0.0 <= s <= t):
        raise ValueError("need 0 <= s <= t")
    direct = evolve(initial, creations, t, snapshot_times=[t]).final
    first = evolve(initial, creations, s, snapshot_times=[s]).final
    second = evolve(first, creations, t, snapshot_times=[t], t_start=s,
                    check_initial=False).final
    return direct, second


def fields_equal(f1: HeightField, f2: HeightField) -> bool:
    """Bitwise equality of rows, anchors and step invariants."""
    if set(f1.rows) != set(f2.rows) or f1.field_time != f2.field_time:
        return False
    for y, r1 in f1.rows.items():
        r2 = f2.rows[y]
        if r1.anchor != r2.anchor:
            return False
        if r1.kinks.shape != r2.kinks.shape or r1.antikinks.shape != r2.antikinks.shape:
            return False
        if not (np.array_equal(r1.kinks, r2.kinks)
                and np.array_equal(r1.antikinks, r2.antikinks)):
            return False
    return True
