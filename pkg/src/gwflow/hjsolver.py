"""Monotone finite-difference solver for du/dt = v(grad u).

The speed v(p, q) = (1/pi) sqrt(pi^2 p^2 + 4 sin^2(pi q)) is globally
Lipschitz with |dv/dp| <= 1 and |dv/dq| <= 2, so the Lax-Friedrichs flux

    H(p-, p+, q-, q+) = v((p-+p+)/2, (q-+q+)/2)
                        + (sx/2)(p+ - p-) + (sy/2)(q+ - q-)

with sx >= 1, sy >= 2 is consistent, and under forward Euler
u_next = u + dt H the update is monotone in every stencil value when
dt (sx/dx + sy/dy) <= cfl < 1: the difference terms are (sx dx / 2) u_xx
etc., i.e. genuine artificial viscosity for the growth sign convention
u_t = +v(grad u).  (For the opposite convention u_t + H = 0 the textbook
flux carries minus signs; with an explicit plus-dt update those signs are
anti-diffusive, which blows up under refinement.)  Monotonicity drives
convergence to the viscosity solution for this Lipschitz Hamiltonian.

Solutions are represented as an exact affine background rho . (x, y) plus a
periodic part on one (Lx x Ly) cell; one-sided differences include the
background exactly, so affine data evolve exactly (the diffusion terms
cancel and the update is a constant v(rho) per unit time).

For y-only data the PDE reduces to du/dt = vhat(du/dy) with
vhat(q) = (2/pi)|sin(pi q)|, concave on [-1, 0]; the variational reference

    u(y, t) = inf_z { g(z) + t G((y - z)/t) },   G(s) = sup_q [ s q + vhat(q) ]

is evaluated by a dense grid search with refinement and serves as the
independent oracle for the scheme.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .equilibrium import speed


@dataclass(frozen=True)
class SchemeParams:
    sigma_x: float = 1.0
    sigma_y: float = 2.0
    cfl: float = 0.4

    def __post_init__(self):
        if self.sigma_x < 1.0 or self.sigma_y < 2.0:
            raise ValueError("artificial viscosities must dominate the "
                             "Lipschitz bounds (1, 2) of the speed")
        if not (0.0 < self.cfl < 1.0):
            raise ValueError("cfl must lie in (0, 1)")


def _speed_arr(p, q):
    return np.sqrt(np.pi**2 * p**2 + 4.0 * np.sin(np.pi * q) ** 2) / np.pi


def numerical_hamiltonian(p_minus, p_plus, q_minus, q_plus,
                          params: SchemeParams = SchemeParams()):
    """Monotone Lax-Friedrichs flux; equals v(p, q) on matched arguments.

    Non-increasing in p_minus and q_minus, non-decreasing in p_plus and
    q_plus, which is the monotone pattern for the explicit update
    u + dt H(...) of the growth equation u_t = +v(grad u).
    """
    pbar = 0.5 * (np.asarray(p_minus) + np.asarray(p_plus))
    qbar = 0.5 * (np.asarray(q_minus) + np.asarray(q_plus))
    out = (_speed_arr(pbar, qbar)
           + 0.5 * params.sigma_x * (np.asarray(p_plus) - np.asarray(p_minus))
           + 0.5 * params.sigma_y * (np.asarray(q_plus) - np.asarray(q_minus)))
    return out if out.shape else float(out)


@dataclass
class GridSolution:
    """u(x, y) = rho . (x, y) + w(x, y) with w periodic on (Lx, Ly)."""

    background: tuple
    w: np.ndarray
    Lx: float
    Ly: float
    t: float

    @property
    def dx(self) -> float:
        return self.Lx / self.w.shape[0]

    @property
    def dy(self) -> float:
        return self.Ly / self.w.shape[1]

    def nodes(self):
        nx, ny = self.w.shape
        xs = -0.5 * self.Lx + self.dx * np.arange(nx)
        ys = -0.5 * self.Ly + self.dy * np.arange(ny)
        return xs, ys

    def u(self, x, y):
        """Bilinear periodic interpolation of w plus the affine background."""
        rho1, rho2 = self.background
        fx = (np.asarray(x) + 0.5 * self.Lx) / self.dx
        fy = (np.asarray(y) + 0.5 * self.Ly) / self.dy
        i0 = np.floor(fx).astype(int)
        j0 = np.floor(fy).astype(int)
        ax = fx - i0
        ay = fy - j0
        nx, ny = self.w.shape
        i0m, i1m = i0 % nx, (i0 + 1) % nx
        j0m, j1m = j0 % ny, (j0 + 1) % ny
        wval = ((1 - ax) * (1 - ay) * self.w[i0m, j0m]
                + ax * (1 - ay) * self.w[i1m, j0m]
                + (1 - ax) * ay * self.w[i0m, j1m]
                + ax * ay * self.w[i1m, j1m])
        out = rho1 * np.asarray(x) + rho2 * np.asarray(y) + wval
        return out if out.shape else float(out)

    def slope_range_y(self):
        """Monitored discrete d_y u range (the scheme never clamps it)."""
        rho2 = self.background[1]
        q = rho2 + (np.roll(self.w, -1, axis=1) - self.w) / self.dy
        return float(q.min()), float(q.max())


class PeriodicityError(ValueError):
    pass


def _decompose(profile, nx, ny, Lx, Ly):
    """Split f into an affine background and a periodic grid part.

    f is read on the closed cell [-Lx/2, Lx/2] x [-Ly/2, Ly/2] and
    periodized: compatibility means the residue w = f - rho . (x, y) takes
    equal values on opposite cell edges (a wedge qualifies on a cell whose
    edges sit in its outer linear pieces; a quadratic does not).
    """
    xs = -0.5 * Lx + Lx / nx * np.arange(nx)
    ys = -0.5 * Ly + Ly / ny * np.arange(ny)
    f = profile.value
    rho1 = (float(f(0.5 * Lx, 0.0)) - float(f(-0.5 * Lx, 0.0))) / Lx
    rho2 = (float(f(0.0, 0.5 * Ly)) - float(f(0.0, -0.5 * Ly))) / Ly
    X, Y = np.meshgrid(xs, ys, indexing="ij")
    w = np.asarray(f(X, Y), dtype=float) - rho1 * X - rho2 * Y
    for s in np.linspace(-0.5, 0.5, 9):
        ex = float(f(0.5 * Lx, s * Ly)) - float(f(-0.5 * Lx, s * Ly)) - rho1 * Lx
        ey = float(f(s * Lx, 0.5 * Ly)) - float(f(s * Lx, -0.5 * Ly)) - rho2 * Ly
        if abs(ex) > 1e-9 or abs(ey) > 1e-9:
            raise PeriodicityError(
                "initial datum is not affine plus periodic on this cell")
    return (rho1, rho2), w


def solve(initial, T: float, grid, params: SchemeParams = SchemeParams()) -> GridSolution:
    """March the monotone scheme to time T on an (nx, ny) cell of size (Lx, Ly).

    Affine data reproduce f_rho + T v(rho) to rounding accuracy because the
    one-sided differences carry the background exactly.
    """
    nx, ny, Lx, Ly = grid
    if not getattr(initial, "in_gamma_bar", lambda: True)():
        raise ValueError("initial profile violates the slope constraint")
    (rho1, rho2), w = _decompose(initial, nx, ny, Lx, Ly)
    dx = Lx / nx
    dy = Ly / ny
    dt_max = params.cfl * min(dx, dy) / (params.sigma_x + params.sigma_y)
    if dt_max <= 0:
        raise ValueError("degenerate grid")
    if T == 0:
        return GridSolution((rho1, rho2), w, Lx, Ly, 0.0)
    nt = int(math.ceil(T / dt_max))
    dt = T / nt
    if dt * (params.sigma_x / dx + params.sigma_y / dy) >= 1.0:
        raise ValueError("CFL violation")
    for _ in range(nt):
        p_minus = rho1 + (w - np.roll(w, 1, axis=0)) / dx
        p_plus = rho1 + (np.roll(w, -1, axis=0) - w) / dx
        q_minus = rho2 + (w - np.roll(w, 1, axis=1)) / dy
        q_plus = rho2 + (np.roll(w, -1, axis=1) - w) / dy
        w = w + dt * numerical_hamiltonian(p_minus, p_plus, q_minus, q_plus, params)
    return GridSolution((rho1, rho2), w, Lx, Ly, float(T))


# ---------------------------------------------------------------------------
# variational reference for y-only data
# ---------------------------------------------------------------------------


def vhat(q):
    """Speed slice v(0, q) = (2/pi) |sin(pi q)|, concave on [-1, 0]."""
    return 2.0 / math.pi * np.abs(np.sin(math.pi * np.asarray(q)))


_Q_GRID = np.linspace(-1.0, 0.0, 10_001)
_VHAT_GRID = vhat(_Q_GRID)


def _conjugate(s: float) -> float:
    """G(s) = max over q in [-1, 0] of s q + vhat(q), to 1e-8."""
    vals = s * _Q_GRID + _VHAT_GRID
    i = int(np.argmax(vals))
    lo = _Q_GRID[max(i - 1, 0)]
    hi = _Q_GRID[min(i + 1, len(_Q_GRID) - 1)]
    phi = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c = b - phi * (b - a)
    d = a + phi * (b - a)
    fc = s * c + float(vhat(c))
    fd = s * d + float(vhat(d))
    while b - a > 1e-10:
        if fc > fd:
            b, d, fd = d, c, fc
            c = b - phi * (b - a)
            fc = s * c + float(vhat(c))
        else:
            a, c, fc = c, d, fd
            d = a + phi * (b - a)
            fd = s * d + float(vhat(d))
    q = 0.5 * (a + b)
    return s * q + float(vhat(q))


_G_TABLE = None


def _conjugate_table():
    """Cached samples of G on [-2.2, 2.2]; linear tails are exact outside."""
    global _G_TABLE
    if _G_TABLE is None:
        s_grid = np.linspace(-2.2, 2.2, 4001)
        _G_TABLE = (s_grid, np.array([_conjugate(float(s)) for s in s_grid]))
    return _G_TABLE


def _g_of_s(s: np.ndarray) -> np.ndarray:
    s_grid, g_grid = _conjugate_table()
    out = np.interp(s, s_grid, g_grid)
    out = np.where(s >= 2.2, 0.0, out)
    out = np.where(s <= -2.2, -s, out)
    return out


def hopf_lax_1d(g, t: float, y: float) -> float:
    """Variational solution of du/dt = vhat(du/dy) from y-only datum g.

    u(y, t) = inf over z of g(z) + t G((y - z)/t) with G the conjugate above;
    the minimizer lives in [y - 2t, y + 2t] because G is linear with slopes
    in [-1, 0] outside |s| <= 2.  Dense grid search plus two zoom rounds.
    """
    if t < 0:
        raise ValueError("t must be nonnegative")
    if t == 0:
        return float(g(y))
    lo, hi = y - 2.0 * t, y + 2.0 * t
    zs = np.linspace(lo, hi, 2001)
    best_z, best = _scan(g, t, y, zs)
    span = (hi - lo) / 500.0
    for _ in range(2):
        zs = np.linspace(max(lo, best_z - span), min(hi, best_z + span), 801)
        z2, v2 = _scan(g, t, y, zs)
        if v2 < best:
            best_z, best = z2, v2
        span /= 100.0
    return best


def _scan(g, t, y, zs):
    try:
        gz = np.asarray(g(zs), dtype=float)
        if gz.shape != zs.shape:
            raise TypeError
    except (TypeError, ValueError):
        gz = np.array([float(g(z)) for z in zs])
    vals = gz + t * _g_of_s((y - zs) / t)
    i = int(np.argmin(vals))
    return float(zs[i]), float(vals[i])


def hopf_convex_pwl(slopes, t: float, y: float) -> float:
    """Reference for convex data max_i(q_i y): sup over q of q y + t vhat(q).

    Valid for convex initial data regardless of the Hamiltonian's convexity;
    used as a second cross-check against hopf_lax_1d on the wedge.
    """
    q_lo, q_hi = min(slopes), max(slopes)
    qs = np.linspace(q_lo, q_hi, 4001)
    vals = qs * y + t * vhat(qs)
    return float(vals.max())
