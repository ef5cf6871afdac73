"""Stationary-state numerics: growth speed, determinantal kernel, structure
functions, and simulation-side estimators at stationarity.

The slope-rho stationary gradient law gives the growth speed

    v(rho1, rho2) = (1/pi) * sqrt(pi^2 rho1^2 + 4 sin^2(pi rho2)),

equal to the sum of kink and antikink densities; the antikink minus kink
density equals rho1 (winding conservation makes that identity exact on the
torus).  Occupation-variable correlations are determinantal with dispersion
eps(k) = -eta_s cos k + i eta_a sin k; the infinite-volume kernel splits
into two arcs of the Brillouin zone.  Orientation convention: with
rho2 in (-1, 0) and rho := |rho2|, the x' >= x branch integrates over
[-pi rho, pi rho] increasing, the x' < x branch over [pi rho, 2 pi - pi rho]
with an overall minus sign, so the diagonal value equals the occupation
density |rho2| (matched against the simulated occupation fraction).

Exact sampling of the stationary measure is out of scope; stationary
estimators burn in from the quantized linear profile, which conserves both
windings, and validate via plateau checks.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad

from .domain import Torus
from .dynamics import evolve, replica_seed, sample_creations
from .heightfield import Box, HeightField, gradient_stats, linear_field


@dataclass(frozen=True)
class Slope:
    rho1: float
    rho2: float

    def __post_init__(self):
        if not (-1.0 <= self.rho2 <= 0.0):
            raise ValueError(f"rho2 must lie in [-1, 0], got {self.rho2}")


@dataclass(frozen=True)
class KernelParams:
    """Dispersion and prefactor parameters; the map rho -> eta is not modeled."""

    eta_s: float
    eta_a: float
    rho2: float
    eta_plus: float = 1.0
    eta_minus: float = 1.0

    def __post_init__(self):
        if self.eta_s <= 0:
            raise ValueError("eta_s must be positive")
        if not (-1.0 < self.rho2 < 0.0):
            raise ValueError("rho2 must lie strictly inside (-1, 0)")


def speed(rho) -> float:
    """Stationary growth speed (1/pi) sqrt(pi^2 rho1^2 + 4 sin^2(pi rho2))."""
    rho1, rho2 = (rho.rho1, rho.rho2) if isinstance(rho, Slope) else (rho[0], rho[1])
    return math.sqrt(math.pi**2 * rho1**2 + 4.0 * math.sin(math.pi * rho2) ** 2) / math.pi


def speed_grad(rho) -> tuple[float, float]:
    """(dv/drho1, dv/drho2); bounded by (1, 2) everywhere."""
    rho1, rho2 = (rho.rho1, rho.rho2) if isinstance(rho, Slope) else (rho[0], rho[1])
    a = math.pi**2 * rho1**2 + 4.0 * math.sin(math.pi * rho2) ** 2
    if a == 0.0:
        return (0.0, 0.0)
    sq = math.sqrt(a)
    return (math.pi * rho1 / sq, 2.0 * math.sin(2.0 * math.pi * rho2) / sq)


def dispersion(k, params: KernelParams) -> complex:
    """eps(k) = -eta_s cos k + i eta_a sin k."""
    return -params.eta_s * np.cos(k) + 1j * params.eta_a * np.sin(k)


def _quad_complex(fun, a: float, b: float, oscillations: float) -> complex:
    """Adaptive quadrature of a complex integrand, panel-split for oscillation."""
    panels = max(1, int(math.ceil(abs(oscillations) * (b - a) / math.pi)))
    edges = np.linspace(a, b, panels + 1)
    total = 0.0 + 0.0j
    for lo, hi in zip(edges[:-1], edges[1:]):
        re, _ = quad(lambda k: fun(k).real, lo, hi, epsabs=1e-12, limit=300)
        im, _ = quad(lambda k: fun(k).imag, lo, hi, epsabs=1e-12, limit=300)
        total += re + 1j * im
    return total


def kernel(xp: float, yp: float, x: float, y: float, params: KernelParams) -> complex:
    """Infinite-volume occupation kernel at displacement (x' - x, y' - y).

    Two-branch arc integral of e^{(x'-x) eps(k)} e^{i (y'-y) k} / (2 pi);
    absolute quadrature error <= 1e-10.
    """
    rho = abs(params.rho2)
    dx = xp - x
    dy = yp - y

    def integrand(k):
        return np.exp(dx * dispersion(k, params)) * np.exp(1j * dy * k)

    osc = abs(dy) + abs(dx * params.eta_a)
    if dx >= 0:
        return _quad_complex(integrand, -math.pi * rho, math.pi * rho, osc) / (2 * math.pi)
    return -_quad_complex(integrand, math.pi * rho, 2 * math.pi - math.pi * rho, osc) \
        / (2 * math.pi)


def structure_function(x: float, y: int, params: KernelParams, sign: int) -> float:
    """Antikink (+1) or kink (-1) pair covariance at displacement (x, y).

    Product of the two branch integrals with prefactor eta_pm^2 / (2 pi)^2;
    decays like 1 / ||(x, y)||^2 times a bounded oscillating factor.
    At x = 0 the x/|x| factor is taken as +1 (the 0+ limit).
    """
    if x == 0 and y == 0:
        raise ValueError("structure function is not defined at the origin")
    if sign not in (1, -1):
        raise ValueError("sign must be +1 (antikink) or -1 (kink)")
    rho = abs(params.rho2)
    ax = abs(x)
    sgn = 1.0 if x >= 0 else -1.0
    m = sgn * y + sign  # integer phase multiplier

    def branch_a(k):
        return np.exp(ax * dispersion(k, params)) * np.exp(1j * m * k)

    def branch_b(k):
        return np.exp(-ax * dispersion(k, params)) * np.exp(1j * m * k)

    osc = abs(m) + abs(ax * params.eta_a)
    a_val = _quad_complex(branch_a, -math.pi * rho, math.pi * rho, osc)
    b_val = _quad_complex(branch_b, math.pi * rho, 2 * math.pi - math.pi * rho, osc)
    eta = params.eta_plus if sign == 1 else params.eta_minus
    s = eta**2 / (2.0 * math.pi) ** 2 * a_val * b_val
    if abs(s.imag) > 1e-8 * max(1.0, abs(s.real)):
        raise ArithmeticError(f"structure function came out non-real: {s}")
    return float(s.real)


# ---------------------------------------------------------------------------
# simulation-side stationary estimators
# ---------------------------------------------------------------------------


def burn_in_stationary(rho, torus: Torus, t_burn: float, seed: int) -> HeightField:
    """Relax the quantized linear profile for t_burn; gradients only are meaningful.

    Windings are conserved by all three dynamics rules, so the realized slope
    is untouched.  Provenance (rho, torus, t_burn, seed) rides along in
    ``meta`` so replica ensembles can re-run independent burn-ins.
    """
    fld = linear_field(rho, torus)
    if t_burn > 0:
        cs = sample_creations(seed, torus, t_burn)
        fld_out = evolve(fld, cs, t_burn, snapshot_times=[t_burn],
                         check_initial=False).final
    else:
        fld_out = fld
    fld_out.meta = {"rho": (float(rho[0]), float(rho[1])), "torus": (torus.M, torus.N),
                    "t_burn": float(t_burn), "seed": int(seed),
                    "realized_slope": fld.meta.get("realized_slope")}
    return fld_out


@dataclass
class GrowthReport:
    rho: tuple
    t_grid: np.ndarray
    mean_h00: np.ndarray
    var_h00: np.ndarray
    speed_estimate: float
    replicas: int

    @property
    def speed_exact(self) -> float:
        return speed(self.rho)


def _one_growth_replica(args):
    rho, torus, t_burn, T, rs, t_grid, r_list = args
    cs = sample_creations(rs, torus, t_burn + T)
    lin = linear_field(rho, torus)
    burned = evolve(lin, cs, t_burn, snapshot_times=[t_burn],
                    check_initial=False).final
    h0 = burned.eval(0.0, 0)
    snap_times = [t_burn + float(tau) for tau in t_grid]
    traj = evolve(burned, cs, t_burn + T, snapshot_times=snap_times,
                  t_start=t_burn, check_initial=False)
    heights = []
    for st in snap_times:
        _, fld = traj.snapshot_before(st)
        heights.append(fld.eval(0.0, 0) - h0)
    counts = {}
    fin = traj.final
    for R in r_list:
        stats = gradient_stats(fin, Box(-float(R), float(R), -R, R))
        counts[R] = (stats["kinks"], stats["antikinks"])
    return np.array(heights, dtype=float), counts


def stationary_ensemble(rho, torus: Torus, t_burn: float, T: float,
                        replicas: int, seed: int, t_grid=None, r_list=(),
                        threads: int = 1):
    """Replica ensemble at stationarity: h(0,0,t) statistics and kink counts.

    Each replica re-runs an independent burn-in from the linear profile
    (seed xor splitmix64(index)), then measures the height increment at
    (0, 0) on ``t_grid`` and step counts in [-R, R] x [-R, R] for each R.
    """
    if replicas < 10:
        raise ValueError("fewer than 10 replicas cannot support variance "
                         "estimates; raise the replica count")
    if t_grid is None:
        t_grid = np.geomspace(max(T / 16.0, 1.0), T, 5)
    t_grid = np.asarray(sorted(set(float(x) for x in t_grid)))
    jobs = [(rho, torus, t_burn, T, replica_seed(seed, i), t_grid, tuple(r_list))
            for i in range(replicas)]
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(_one_growth_replica, jobs))
    else:
        results = [_one_growth_replica(j) for j in jobs]

    hmat = np.stack([r[0] for r in results])
    mean_h = hmat.mean(axis=0)
    var_h = hmat.var(axis=0, ddof=1)
    speed_est = float(mean_h[-1] / t_grid[-1])
    report = GrowthReport((float(rho[0]), float(rho[1])), t_grid, mean_h, var_h,
                          speed_est, replicas)
    count_stats = {}
    for R in r_list:
        ks = np.array([r[1][R][0] for r in results], dtype=float)
        as_ = np.array([r[1][R][1] for r in results], dtype=float)
        count_stats[R] = {
            "mean_kinks": ks.mean(), "var_kinks": ks.var(ddof=1),
            "mean_antikinks": as_.mean(), "var_antikinks": as_.var(ddof=1),
            "area": 2.0 * R * (2 * R + 1),
        }
    return report, count_stats


def measure_growth(field0: HeightField, T: float, replicas: int, seed: int,
                   t_grid=None, threads: int = 1) -> GrowthReport:
    """Speed and Var(h(0,0,t)) across replicas sharing field0's distribution.

    ``field0`` must come from burn_in_stationary; its provenance drives the
    independent per-replica burn-ins.
    """
    meta = field0.meta
    if "rho" not in meta:
        raise ValueError("field0 must come from burn_in_stationary")
    torus = Torus(*meta["torus"])
    report, _ = stationary_ensemble(meta["rho"], torus, meta["t_burn"], T,
                                    replicas, seed, t_grid=t_grid, threads=threads)
    return report


def kink_count_variance(rho, R_list, torus: Torus, replicas: int, seed: int,
                        t_burn: float = 50.0, threads: int = 1) -> dict:
    """Mean and variance of step counts in [-R, R] x [-R, R] at stationarity."""
    for R in R_list:
        if R > min(torus.M, torus.N) / 2:
            raise ValueError(f"R={R} exceeds half the torus size")
    _, counts = stationary_ensemble(rho, torus, t_burn, max(1.0, t_burn / 25.0),
                                    replicas, seed, r_list=tuple(R_list),
                                    threads=threads)
    return counts
