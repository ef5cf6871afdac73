"""Command-line entry point and replica orchestration.

    gwflow {simulate,hydro,equilibrium,pde,lis-bound,axioms}
           --config FILE [--seed U64] [--out DIR] [--threads K] [--check]

Thread count falls back to the GWFLOW_THREADS environment variable.  Exit
codes: 0 success, 2 config validation failure, 3 acceptance-check failure
under --check.  (config, seed) fully determines all numeric outputs; the
manifest records wall-clock and file lists and is written last, so an
interrupted run leaves status "incomplete" on disk.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .config import (ConfigError, ExperimentConfig, build_profile, config_hash,
                     parse_config, serialize)
from .domain import Torus
from .dynamics import evolve, replica_seed, sample_creations
from .equilibrium import KernelParams, speed, stationary_ensemble, structure_function
from .fieldio import dump_events, dump_field, write_csv
from .heightfield import linear_field
from .hjsolver import SchemeParams, solve
from .hydro import axiom_suite, convergence_experiment
from .polymer import chain_tail_bound, longest_light_chain


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="gwflow",
                                     description="Gates-Westcott growth toolkit")
    sub = parser.add_subparsers(dest="kind", required=True)
    for kind in ("simulate", "hydro", "equilibrium", "pde", "lis-bound", "axioms"):
        p = sub.add_parser(kind)
        p.add_argument("--config", type=Path, default=None)
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--out", type=Path, default=None)
        p.add_argument("--threads", type=int, default=None)
        p.add_argument("--check", action="store_true",
                       help="exit 3 unless the run passes its built-in check")
        if kind == "equilibrium":
            p.add_argument("--rho", type=str, default=None)
            p.add_argument("--torus", type=str, default=None)
            p.add_argument("--burn", type=float, default=None)
            p.add_argument("--replicas", type=int, default=None)
        if kind == "lis-bound":
            p.add_argument("--area", type=float, default=None)
            p.add_argument("--k", dest="k_max", type=int, default=None)
    args = parser.parse_args(argv)

    try:
        cfg = _assemble_config(args)
    except ConfigError as exc:
        for v in exc.violations:
            print(f"config error: {v}", file=sys.stderr)
        return 2

    manifest = run(cfg)
    print(json.dumps({"status": manifest["status"],
                      "outputs": manifest["outputs"]}, indent=2))
    if args.check and not manifest.get("check_passed", True):
        return 3
    return 0


def _assemble_config(args) -> ExperimentConfig:
    if args.config is not None:
        cfg = parse_config(Path(args.config).read_text())
        if cfg.kind != args.kind:
            raise ConfigError([f"kind: config says {cfg.kind}, command says {args.kind}"])
    else:
        cfg = parse_config(f"kind: {args.kind}\n")
    if args.seed is not None:
        cfg.seed = args.seed
    if args.out is not None:
        cfg.out_dir = str(args.out)
    threads = args.threads or int(os.environ.get("GWFLOW_THREADS", "0")) or None
    if threads is not None:
        cfg.threads = threads
    for name in ("rho", "torus", "burn", "replicas", "area", "k_max"):
        v = getattr(args, name if name != "burn" else "burn", None)
        if v is None:
            continue
        if name == "rho":
            cfg.rho = tuple(float(s) for s in v.split(","))
        elif name == "torus":
            cfg.torus = tuple(int(s) for s in v.split(","))
        elif name == "burn":
            cfg.t_burn = v
        else:
            setattr(cfg, name, v)
    return cfg


def run(cfg: ExperimentConfig) -> dict:
    """Dispatch to the experiment pipelines and write all artifacts."""
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    manifest = {
        "status": "incomplete",
        "kind": cfg.kind,
        "config_hash": config_hash(cfg),
        "code_version": __version__,
        "seed": cfg.seed,
        "replica_seeds": [],
        "outputs": [],
        "wall_clock_s": None,
    }
    mpath = out / "manifest.json"
    mpath.write_text(json.dumps(manifest, indent=2))
    t0 = time.perf_counter()

    runner = {
        "simulate": _run_simulate,
        "hydro": _run_hydro,
        "equilibrium": _run_equilibrium,
        "pde": _run_pde,
        "lis-bound": _run_lis_bound,
        "axioms": _run_axioms,
    }[cfg.kind]
    try:
        outputs, check_passed, extra = runner(cfg, out)
    except Exception:
        manifest["status"] = "incomplete"
        mpath.write_text(json.dumps(manifest, indent=2))
        raise
    manifest.update(extra)
    manifest["outputs"] = [str(p.name) for p in outputs]
    manifest["wall_clock_s"] = time.perf_counter() - t0
    manifest["check_passed"] = check_passed
    manifest["status"] = "complete"
    mpath.write_text(json.dumps(manifest, indent=2))
    return manifest


def _run_simulate(cfg, out):
    torus = Torus(*cfg.torus)
    phi = linear_field(cfg.rho, torus)
    cs = sample_creations(cfg.seed, torus, cfg.T)
    traj = evolve(phi, cs, cfg.T)
    flog = out / "events.ndjson"
    flog.write_text(dump_events(traj))
    ffin = out / "final_field.ndjson"
    ffin.write_text(dump_field(traj.final))
    n_eff = int((traj.creations.flags == 1).sum())
    fsum = out / "summary.csv"
    write_csv(fsum, ["t_end", "creations", "effective", "annihilations"],
              [(cfg.T, len(cs), n_eff, traj.annihilations.shape[0])])
    return [flog, ffin, fsum], True, {}


def _run_hydro(cfg, out):
    profile = build_profile(cfg.profile)
    report = convergence_experiment(profile, Torus(*cfg.torus), cfg.n_list,
                                    cfg.T, cfg.R,
                                    [replica_seed(cfg.seed, s) for s in cfg.seeds],
                                    sample_grid=cfg.sample_grid)
    fcsv = out / "report.csv"
    write_csv(fcsv, ["n", "seed", "sup_error", "runtime_s"],
              [(r["n"], r["seed"], r["sup_error"], r["runtime_s"])
               for r in report.rows])
    means = report.mean_errors()
    errs = [means[n] for n in cfg.n_list]
    check = all(b < a for a, b in zip(errs, errs[1:]))
    return [fcsv], check, {"mean_errors": {str(k): v for k, v in means.items()}}


def _run_equilibrium(cfg, out):
    torus = Torus(*cfg.torus)
    report, counts = stationary_ensemble(cfg.rho, torus, cfg.t_burn, cfg.T,
                                         cfg.replicas, cfg.seed,
                                         r_list=tuple(cfg.r_list),
                                         threads=cfg.threads)
    fgrow = out / "growth.csv"
    write_csv(fgrow, ["t", "mean_h00", "var_h00"],
              [(t, m, v) for t, m, v in
               zip(report.t_grid, report.mean_h00, report.var_h00)])
    fcounts = out / "kink_counts.csv"
    write_csv(fcounts,
              ["R", "mean_kinks", "var_kinks", "mean_antikinks",
               "var_antikinks", "area"],
              [(R, c["mean_kinks"], c["var_kinks"], c["mean_antikinks"],
                c["var_antikinks"], c["area"]) for R, c in sorted(counts.items())])
    outputs = [fgrow, fcounts]
    if cfg.kernel:
        params = KernelParams(**cfg.kernel)
        rows = []
        for x in range(1, 21):
            rows.append((float(x), 0.0,
                         structure_function(float(x), 0, params, +1),
                         structure_function(float(x), 0, params, -1)))
        fstruct = out / "structure.csv"
        write_csv(fstruct, ["x", "y", "S_plus", "S_minus"], rows)
        outputs.append(fstruct)
    v_exact = speed(cfg.rho)
    check = abs(report.speed_estimate - v_exact) <= 0.05 * max(v_exact, 1e-12)
    extra = {"replica_seeds": [replica_seed(cfg.seed, i)
                               for i in range(cfg.replicas)],
             "speed_estimate": report.speed_estimate, "speed_exact": v_exact}
    return outputs, check, extra


def _run_pde(cfg, out):
    profile = build_profile(cfg.profile)
    nx, ny, Lx, Ly = cfg.grid
    params = SchemeParams(cfl=cfg.cfl) if cfg.cfl else SchemeParams()
    sol = solve(profile, cfg.T, (int(nx), int(ny), float(Lx), float(Ly)), params)
    fgrid = out / "grid.csv"
    xs, ys = sol.nodes()
    rows = [(x, y, sol.u(float(x), float(y)))
            for x in xs for y in ys]
    with open(fgrid, "w") as fh:
        fh.write(f"# nx={nx} ny={ny} Lx={Lx} Ly={Ly} t={sol.t} "
                 f"rho={sol.background[0]},{sol.background[1]}\n")
    write_csv_append(fgrid, ["x", "y", "u"], rows)
    return [fgrid], True, {}


def write_csv_append(path, header, rows):
    from .fieldio import _fmt
    with open(path, "a") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) if isinstance(v, float) else str(v)
                              for v in row) + "\n")


def _run_lis_bound(cfg, out):
    rng = np.random.Generator(np.random.Philox(key=np.array(
        [cfg.seed, 0xD1B54A32D192ED03], dtype=np.uint64)))
    side = math.sqrt(cfg.area)
    counts = np.zeros(cfg.k_max + 2, dtype=np.int64)
    for _ in range(cfg.replicas):
        n = rng.poisson(2.0 * cfg.area)
        a = rng.uniform(0.0, side, n)
        b = rng.uniform(0.0, side, n)
        pts = np.column_stack([0.5 * (b - a), 0.5 * (b + a)])
        chain = longest_light_chain(pts)
        counts[min(chain, cfg.k_max + 1)] += 1
    tail = np.cumsum(counts[::-1])[::-1]
    rows = []
    ok = True
    for k in range(1, cfg.k_max + 1):
        emp = tail[k] / cfg.replicas
        bound = chain_tail_bound(cfg.area, k)
        ok = ok and (emp <= bound or bound >= 1.0)
        rows.append((k, emp, bound))
    fcsv = out / "lis_bound.csv"
    write_csv(fcsv, ["k", "empirical", "bound"], rows)
    return [fcsv], ok, {}


def _run_axioms(cfg, out):
    report = axiom_suite(cfg.seed, n_seeds=cfg.extras.get("trials", 20)
                         if cfg.extras else 20, torus=Torus(*cfg.torus), T=cfg.T,
                         rho=cfg.rho)
    rows = [(name, int(r["passed"]),
             json.dumps({k: v for k, v in r.items() if k != "passed"}))
            for name, r in report.results.items()]
    fcsv = out / "axioms.csv"
    write_csv(fcsv, ["axiom", "passed", "details"], rows)
    return [fcsv], report.ok, {}


if __name__ == "__main__":
    sys.exit(main())
