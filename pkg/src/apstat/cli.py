"""Command-line entry point: ``apstat <command> <config.yaml> [--seed N] [--out-dir D] [--threads K]``.

Exit codes: 0 success, 2 configuration error, 3 hypothesis not met, 4 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import logging
import math
import sys
from dataclasses import asdict
from pathlib import Path

import numpy as np
import yaml

from . import __version__
from .config import (COMMANDS, ExperimentConfig, build_kernel, build_multi_triplet, build_trig,
                     build_triplet, load_config)
from .errors import ApstatError, ConfigError, HypothesisError, NumericalError
from .quad import DEFAULT_QUAD

log = logging.getLogger("apstat")

EXIT_OK, EXIT_CONFIG, EXIT_HYPOTHESIS, EXIT_NUMERICAL = 0, 2, 3, 4

# documented CSV headers, one entry per file a command can write
SCHEMAS = {
    "psi_L.csv": ["z", "re", "im"],
    "psi_f.csv": ["z", "re", "im", "tail_bound"],
    "domain.csv": ["t", "status", "integral", "tail_bound", "b_space"],
    "metric.csv": ["metric", "value", "tail_bound", "resolution"],
    "bound.csv": ["case_id", "lhs", "rhs", "margin", "R", "small_jumps", "gauss", "drift",
                  "mid_jumps", "large_jumps"],
    "path.csv": ["t", "X"],
    "summary.csv": ["t", "mean", "var", "q05", "q95"],
    "profile.csv": ["tau", "D"],
    "found.csv": ["epsilon", "tau"],
    "gamma_bounds.csv": ["epsilon", "tau", "gamma_upper"],
    "clt.csv": ["T", "n_reps", "ks_stat", "mean_S", "var_S", "V_inf2"],
    "g_profile.csv": ["s", "g"],
    "transform_gamma.csv": ["i", "value"],
    "transform_gauss.csv": ["i", "j", "value"],
    "transform_cubed.csv": ["point", "mass"],
}


def _fmt(v) -> str:
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return str(v)


def write_csv(out: Path, name: str, rows) -> Path:
    path = out / name
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SCHEMAS[name])
        for r in rows:
            if len(r) != len(SCHEMAS[name]):
                raise NumericalError(f"{name}: row width {len(r)} does not match the schema")
            w.writerow([_fmt(v) for v in r])
    return path


# ---------------------------------------------------------------------------
# commands


def run_exponent(cfg: ExperimentConfig, out: Path) -> list[str]:
    from .levy import eval_exponent, eval_integral_exponent

    p = cfg.params
    tri = build_triplet(p.triplet)
    rows = []
    for z in p.z:
        v = eval_exponent(tri, z)
        rows.append([z, v.real, v.imag])
    files = [write_csv(out, "psi_L.csv", rows)]
    if p.kernel is not None:
        k = build_kernel(p.kernel)
        n = len(p.t_offsets)
        rows = []
        for z in p.z:
            res = eval_integral_exponent([k] * n, p.t_offsets, tri, [z] * n)
            rows.append([z, res.value.real, res.value.imag, res.tail_bound])
        files.append(write_csv(out, "psi_f.csv", rows))
    return files


def run_domain(cfg: ExperimentConfig, out: Path) -> list[str]:
    from .levy import b_space_value, in_domain

    p = cfg.params
    tri = build_triplet(p.triplet)
    k = build_kernel(p.kernel)
    res = in_domain(k, tri, t=p.t)
    grid = k.default_t_grid(p.n_t) if p.sup_over_t else None
    b = b_space_value(k, tri, sup_over_t=p.sup_over_t, t_grid=grid, t=p.t) \
        if res.status != "indeterminate" else math.nan
    return [write_csv(out, "domain.csv", [[p.t, res.status, res.integral, res.tail_bound, b]])]


def run_metric(cfg: ExperimentConfig, out: Path) -> list[str]:
    from . import metrics as M

    p = cfg.params
    name = p.metric
    if name == "ky_fan":
        data = np.loadtxt(cfg.resolve(p.mu), delimiter=",", skiprows=1, ndmin=2)
        if data.shape[1] != 2:
            raise ConfigError("ky_fan input must have columns x,y")
        row = [name, M.ky_fan(M.PairedSample(data[:, 0], data[:, 1])), 0.0, 0.0]
        return [write_csv(out, "metric.csv", [row])]
    if p.nu is None:
        raise ConfigError(f"metric {name} needs both mu and nu")
    mu = M.EmpiricalMeasure.from_csv(cfg.resolve(p.mu))
    nu = M.EmpiricalMeasure.from_csv(cfg.resolve(p.nu))
    if name == "gamma":
        r = M.gamma_metric(M.CharFnGrid.from_measure(mu, p.K_max, p.per_axis),
                           M.CharFnGrid.from_measure(nu, p.K_max, p.per_axis))
        row = [name, r.value, r.tail_bound, r.resolution]
    elif name == "bounded_lipschitz":
        row = [name, M.bounded_lipschitz(mu, nu), 0.0, 0.0]
    elif name == "prokhorov":
        row = [name, M.prokhorov(mu, nu), 0.0, 0.0]
    elif name == "wasserstein":
        row = [name, M.wasserstein_1d(mu, nu, p.p), 0.0, 0.0]
    else:
        raise ConfigError(f"unknown metric {name!r}")
    return [write_csv(out, "metric.csv", [row])]


_TERM_KEYS = ["small_jumps", "gauss", "drift", "mid_jumps", "large_jumps"]


def run_bound(cfg: ExperimentConfig, out: Path) -> list[str]:
    from . import bounds as B

    p = cfg.params
    nan = math.nan
    if p.kind == "kyfan_finite_var":
        if p.sigma2 is not None and p.l2_dist2 is not None:
            s2, d2 = p.sigma2, p.l2_dist2
        elif p.f and p.g and p.triplet:
            f, g = build_kernel(p.f, "f").section(p.t_f), build_kernel(p.g, "g").section(p.t_g)
            s2, d2 = build_triplet(p.triplet).variance, (f - g).lp_norm(2) ** 2
        else:
            raise ConfigError("kyfan_finite_var needs sigma2 and l2_dist2, or f, g and triplet")
        row = [p.case_id, nan, B.kyfan_bound_finite_var(s2, d2), nan, nan] + [nan] * 5
        return [write_csv(out, "bound.csv", [row])]
    if not (p.f and p.g and p.triplet):
        raise ConfigError(f"bound kind {p.kind!r} needs f, g and triplet")
    f, g, tri = build_kernel(p.f, "f"), build_kernel(p.g, "g"), build_triplet(p.triplet)
    if p.kind == "exponent":
        z = p.z
        fs = [f] * len(z) if len(z) > 1 else f
        gs = [g] * len(z) if len(z) > 1 else g
        rep = B.exponent_diff_bound(fs, gs, tri, z, p.R, p.t_f, p.t_g)
    elif p.kind == "kyfan_IR":
        rep = B.kyfan_bound_IR(f, g, tri, p.R, p.n_paths, cfg.seed, p.dt, p.variant, p.t_f, p.t_g,
                               cfg.threads)
    else:
        raise ConfigError(f"unknown bound kind {p.kind!r}")
    if not rep.hypotheses_met:
        raise HypothesisError(rep.extra.get("reason", "hypotheses not met"))
    row = [p.case_id, rep.lhs, rep.rhs, rep.margin, rep.R] + [rep.terms[k] for k in _TERM_KEYS]
    return [write_csv(out, "bound.csv", [row])]


def run_simulate_ou(cfg: ExperimentConfig, out: Path) -> list[str]:
    from .simulate import Grid, ensemble_summary, ou_ensemble

    p = cfg.params
    mu, tri = build_trig(p.mu), build_triplet(p.triplet)
    if not mu.c0 < 0:
        raise HypothesisError("no almost periodic stationary solution: the mean of mu must be negative")
    if not (p.t1 > p.t0 and p.dt > 0 and p.n_paths >= 1):
        raise ConfigError("need t1 > t0, dt > 0 and n_paths >= 1")
    grid = Grid.covering(p.t0, p.t1, p.dt)
    paths = ou_ensemble(mu, tri, grid, cfg.seed, p.n_paths, p.tol, cfg.threads)
    files = [write_csv(out, "path.csv", zip(paths.times, paths.values[0]))]
    files.append(write_csv(out, "summary.csv", ensemble_summary(paths).tolist()))
    return files


def run_certify(cfg: ExperimentConfig, out: Path) -> list[str]:
    from .aperiodicity import IntegralProcess, certify_ap
    from .kernels import OUKernel

    p = cfg.params
    mu, tri = build_trig(p.mu), build_triplet(p.triplet)
    if len(p.window) != 2 or not p.window[1] > p.window[0]:
        raise ConfigError("window must be [lo, hi] with hi > lo")
    cert = certify_ap(IntegralProcess(OUKernel(mu), tri), p.eps_list, tuple(p.window), p.tau_step,
                      p.offsets, p.k, p.n_t, p.K, z_per_axis=p.z_per_axis)
    prof = next(iter(cert.profiles.values()))
    files = [write_csv(out, "profile.csv", zip(prof.tau_grid, prof.D))]
    found, gam = [], []
    for eps, pr in cert.profiles.items():
        found += [[eps, t] for t in pr.found]
        gam += [[eps, t, g] for t, g in cert.gamma_translation[eps]]
    files.append(write_csv(out, "found.csv", found))
    files.append(write_csv(out, "gamma_bounds.csv", gam))
    report = out / "report.yaml"
    with open(report, "w") as fh:
        yaml.safe_dump(_plain(cert.summary()), fh, sort_keys=True)
    files.append(report)
    return files


def run_clt(cfg: ExperimentConfig, out: Path) -> list[str]:
    from .clt import MAProcessSpec, clt_experiment

    p = cfg.params
    u = build_trig(p.u, "u") if p.u is not None else None
    spec = MAProcessSpec(build_kernel(p.h, "h"), build_triplet(p.triplet), p.m, u)
    if p.n_reps < 500:
        raise ConfigError("n_reps must be at least 500")
    res = clt_experiment(spec, p.T_list, p.n_reps, cfg.seed, cfg.threads)
    path = out / "clt.csv"
    res.to_csv(path)
    return [path, write_csv(out, "g_profile.csv", zip(res.g_profile.s, res.g_profile.g))]


def run_transform(cfg: ExperimentConfig, out: Path) -> list[str]:
    from .levy import triplet_transform

    tr = triplet_transform(build_multi_triplet(cfg.params.triplet))
    d = tr.gamma_c.size
    files = [write_csv(out, "transform_gamma.csv", [[i, tr.gamma_c[i]] for i in range(d)])]
    files.append(write_csv(out, "transform_gauss.csv",
                           [[i, j, tr.gauss_plus[i, j]] for i in range(d) for j in range(d)]))
    files.append(write_csv(out, "transform_cubed.csv",
                           [[" ".join(repr(float(v)) for v in x), m]
                            for x, m in zip(tr.cubed_points, tr.cubed_masses)]))
    return files


RUNNERS = {
    "exponent": run_exponent,
    "domain-check": run_domain,
    "metric": run_metric,
    "bound": run_bound,
    "simulate-ou": run_simulate_ou,
    "certify-ap": run_certify,
    "clt": run_clt,
    "triplet-transform": run_transform,
}
assert set(RUNNERS) == set(COMMANDS)


# ---------------------------------------------------------------------------


def _plain(obj):
    """Convert numpy scalars and tuples so that YAML output is plain and stable."""
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_plain(v) for v in obj.tolist()]
    if isinstance(obj, (np.floating, float)):
        return float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    return obj


def write_manifest(cfg: ExperimentConfig, out: Path, files) -> Path:
    # the worker count is left out on purpose: artifacts must not depend on it
    echo = {k: v for k, v in cfg.raw.items() if k != "threads"}
    echo["seed"] = cfg.seed
    manifest = {
        "apstat_version": __version__,
        "command": cfg.command,
        "seed": cfg.seed,
        "config": _plain(echo),
        "tolerances": _plain(asdict(DEFAULT_QUAD)),
        "artifacts": sorted(Path(f).name for f in files),
    }
    path = out / "run_manifest.yaml"
    with open(path, "w") as fh:
        yaml.safe_dump(manifest, fh, sort_keys=True)
    return path


def run(command: str, config_path, seed: int | None = None, out_dir: str | None = None,
        threads: int | None = None) -> int:
    try:
        cfg = load_config(config_path, command)
        if seed is not None:
            if seed < 0:
                raise ConfigError("seed must be non-negative")
            cfg.seed = seed
        if threads is not None:
            if threads < 1:
                raise ConfigError("threads must be positive")
            cfg.threads = threads
        if out_dir is not None:
            cfg.out_dir = out_dir
        out = Path(cfg.out_dir)
        out.mkdir(parents=True, exist_ok=True)
        try:
            files = RUNNERS[command](cfg, out)
        except (ValueError, TypeError) as exc:
            raise ConfigError(str(exc)) from exc
        write_manifest(cfg, out, files)
    except ConfigError as exc:
        log.error("configuration error: %s", exc)
        return EXIT_CONFIG
    except HypothesisError as exc:
        log.error("hypothesis not met: %s", exc)
        return EXIT_HYPOTHESIS
    except (NumericalError, ApstatError, FloatingPointError) as exc:
        log.error("numerical failure: %s", exc)
        return EXIT_NUMERICAL
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="apstat", description=__doc__.splitlines()[0])
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("config", help="YAML experiment file")
        sp.add_argument("--seed", type=int)
        sp.add_argument("--out-dir")
        sp.add_argument("--threads", type=int)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    return run(args.command, args.config, args.seed, args.out_dir, args.threads)


if __name__ == "__main__":
    sys.exit(main())
