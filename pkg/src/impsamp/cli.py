"""Experiment harness: one subcommand per headline figure or claim.

Every subcommand is a deterministic function of its flags and config
file: a fixed --seed yields byte-identical CSV output at any --threads.
Config files hold key=value lines (keys match flag names with
underscores); explicit flags win over the config, which wins over
built-in defaults.

Exit codes: 0 success, 2 usage error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from ._csv import write_csv
from .exceptions import NumericalError
from .feasibility import GPFamily, cone_diagram, gp_operator_norms, write_cone_csv
from .filters import run_filter, simulate_truth, write_filter_log
from .importance import gaussian_importance_rhat, gaussian_scaling_study, ess
from .implicit import sample_posterior
from .lorenz96 import (
    Lorenz96TwoScale,
    characterize,
    extract_discrepancy,
    simulate_resolved,
    write_acf_csv,
    write_discrepancy_csv,
)
from .problems import (
    exp_decay_problem,
    linear_gaussian_problem,
    model_problem_ssm,
    scalar_cubic_ssm,
)
from .rng import RngStream

# ---------------------------------------------------------------------------
# parameter plumbing
# ---------------------------------------------------------------------------

_COMMON = {
    "seed": ("int", 0, "base random seed"),
    "out": ("str", ".", "output directory for CSV files"),
    "threads": ("int", 1, "worker threads (results are thread-count invariant)"),
}

_PARAMS = {
    "ess-scaling": {
        "sigma2": ("float", 2.0, "variance of the Gaussian importance function"),
        "m_list": ("ints", list(range(1, 13)), "dimensions to sweep"),
        "meff_target": ("float", 100.0, "target effective sample size"),
        "samples": ("int", 1_000_000, "draws per empirical R estimate"),
    },
    "gp-spectrum": {
        "length": ("float", 0.1, "correlation length for the mesh sweep"),
        "mesh_list": ("ints", [32, 64, 128, 256, 512], "grid sizes for the mesh sweep"),
        "length_list": (
            "floats",
            [0.001, 0.002, 0.005, 0.01, 0.02, 0.05, 0.1, 0.2, 0.3],
            "correlation lengths for the length sweep",
        ),
        "mesh_fine": ("int", 256, "grid size for the length sweep"),
        "eps": ("float", 0.05, "spectral mass fraction excluded by the effective dimension"),
    },
    "cones": {
        "q_min": ("float", 0.01, "model-noise grid start"),
        "q_max": ("float", 10.0, "model-noise grid end"),
        "r_min": ("float", 0.01, "data-noise grid start"),
        "r_max": ("float", 10.0, "data-noise grid end"),
        "grid": ("int", 50, "points per axis (log-spaced)"),
        "threshold": ("float", 1.0, "feasibility threshold standing in for a sharper estimate"),
        "empirical": ("bool", False, "also run SIR/optimal filters at marked points"),
        "empirical_points": ("str", "1,1;0.01,1", "semicolon-separated q,r pairs"),
        "empirical_m": ("int", 100, "state dimension for empirical runs"),
        "empirical_particles": ("int", 100, "particles for empirical runs"),
        "empirical_steps": ("int", 200, "assimilation steps for empirical runs"),
        "empirical_seeds": ("int", 5, "seeds per empirical point"),
    },
    "filter-run": {
        "model": ("str", "linear", "linear (model problem) or cubic (scalar cubic observation)"),
        "filter": ("str", "optimal", "kalman | sir | optimal | implicit"),
        "m": ("int", 1, "state dimension (linear model only)"),
        "q": ("float", 1.0, "model-noise variance"),
        "r": ("float", 1.0, "data-noise variance"),
        "steps": ("int", 50, "assimilation steps"),
        "particles": ("int", 1000, "ensemble size"),
        "resample_threshold": ("float", 0.5, "resample when M_eff falls below this fraction of M"),
    },
    "l96-noise": {
        "delta": ("float", 0.01, "snapshot spacing of the resolved data"),
        "snapshots": ("int", 100_000, "number of resolved snapshots"),
        "spinup": ("float", 10.0, "time units discarded before statistics"),
        "K": ("int", 18, "resolved variables"),
        "J": ("int", 20, "unresolved variables per resolved one"),
        "forcing": ("float", 10.0, "forcing"),
        "eps": ("float", 0.5, "time-scale separation"),
        "hx": ("float", -1.0, "coupling into the resolved equations"),
        "hy": ("float", 1.0, "coupling into the unresolved equations"),
        "component": ("int", 1, "1-based discrepancy component to characterize"),
        "max_lag": ("int", 100, "autocorrelation lags"),
        "ar_order_max": ("int", 10, "maximum AR order candidate"),
        "dump_z": ("bool", False, "also write the raw discrepancy sequence"),
    },
    "posterior": {
        "problem": ("str", "exp-decay", "exp-decay (nonlinear) or linear (conjugate check)"),
        "samples": ("int", 10_000, "posterior ensemble size"),
        "noise_sigma": ("float", None, "observation noise std (problem default when omitted)"),
    },
}


def _parse_typed(kind: str, raw):
    if isinstance(raw, str):
        raw = raw.strip()
        if kind == "int":
            return int(raw)
        if kind == "float":
            return float(raw)
        if kind == "bool":
            return raw.lower() in ("1", "true", "yes", "on")
        if kind == "ints":
            return [int(v) for v in raw.split(",") if v.strip()]
        if kind == "floats":
            return [float(v) for v in raw.split(",") if v.strip()]
        return raw
    return raw


def _read_config(path: str) -> dict:
    cfg = {}
    text = Path(path).read_text(encoding="utf-8")
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"{path}:{lineno}: expected key=value, got {line!r}")
        key, value = line.split("=", 1)
        cfg[key.strip().replace("-", "_")] = value.strip()
    return cfg


def _resolve(command: str, args: argparse.Namespace) -> dict:
    table = dict(_COMMON)
    table.update(_PARAMS[command])
    cfg = _read_config(args.config) if args.config else {}
    unknown = set(cfg) - set(table)
    if unknown:
        raise ValueError(f"unknown config keys for {command}: {sorted(unknown)}")
    params = {}
    for name, (kind, default, _help) in table.items():
        value = getattr(args, name, None)
        if value is None and name in cfg:
            value = _parse_typed(kind, cfg[name])
        if value is None:
            value = default
        elif isinstance(value, str):
            value = _parse_typed(kind, value)
        params[name] = value
    if params["threads"] < 1:
        raise ValueError("--threads must be at least 1")
    return params


def _parallel_map(fn, items, threads: int):
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(fn, items))
    return [fn(item) for item in items]


def _outdir(params) -> Path:
    out = Path(params["out"])
    out.mkdir(parents=True, exist_ok=True)
    return out


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------


def cmd_ess_scaling(params) -> list[Path]:
    rng = RngStream(params["seed"])
    sigma2 = params["sigma2"]
    m_list = params["m_list"]
    formula = dict(gaussian_scaling_study(m_list, sigma2, params["meff_target"]))

    def empirical(m: int) -> float:
        if m == 0:
            return 1.0
        return gaussian_importance_rhat(m, sigma2, params["samples"], rng.substream(m))

    rhats = _parallel_map(empirical, m_list, params["threads"])
    rows = [(m, formula[m], r) for m, r in zip(m_list, rhats)]
    path = _outdir(params) / "ess_scaling.csv"
    write_csv(path, ["m", "required_M_formula", "empirical_R"], rows)
    return [path]


def _gp_row(L: float, m: int, eps: float):
    fam = GPFamily(L=L, m=m)
    norms = gp_operator_norms(fam, eps=eps)
    return (L, fam.h, norms.frob_discrete, norms.frob_operator, norms.eff_dim, fam.energy())


def cmd_gp_spectrum(params) -> list[Path]:
    eps = params["eps"]
    header = ["L", "h", "frob_discrete", "frob_operator", "eff_dim", "energy"]
    mesh_rows = _parallel_map(
        lambda m: _gp_row(params["length"], m, eps), params["mesh_list"], params["threads"]
    )
    length_rows = _parallel_map(
        lambda L: _gp_row(L, params["mesh_fine"], eps), params["length_list"], params["threads"]
    )
    out = _outdir(params)
    p1 = write_csv(out / "gp_mesh_sweep.csv", header, mesh_rows)
    p2 = write_csv(out / "gp_length_sweep.csv", header, length_rows)
    return [p1, p2]


def cmd_cones(params) -> list[Path]:
    q_grid = np.geomspace(params["q_min"], params["q_max"], params["grid"])
    r_grid = np.geomspace(params["r_min"], params["r_max"], params["grid"])
    points = cone_diagram(q_grid, r_grid, threshold=params["threshold"])
    out = _outdir(params)
    paths = [out / "cones.csv"]
    write_cone_csv(paths[0], points)
    if params["empirical"]:
        rng = RngStream(params["seed"])
        pairs = []
        for chunk in params["empirical_points"].split(";"):
            q_str, r_str = chunk.split(",")
            pairs.append((float(q_str), float(r_str)))
        rows = []
        for i, (q, r) in enumerate(pairs):
            ssm = model_problem_ssm(params["empirical_m"], q, r)
            for method in ("sir", "optimal"):
                medians = []
                for s in range(params["empirical_seeds"]):
                    run_rng = rng.substream(i * 1000 + s)
                    _, data = simulate_truth(
                        ssm, params["empirical_steps"], run_rng.substream(0)
                    )
                    result = run_filter(
                        method, ssm, data, params["empirical_particles"], run_rng.substream(1)
                    )
                    medians.append(float(np.median(result.ess)))
                rows.append((q, r, method, float(np.median(medians))))
        p2 = out / "cones_empirical.csv"
        write_csv(p2, ["q", "r", "filter", "median_m_eff"], rows)
        paths.append(p2)
    return paths


def cmd_filter_run(params) -> list[Path]:
    rng = RngStream(params["seed"])
    if params["model"] == "linear":
        ssm = model_problem_ssm(params["m"], params["q"], params["r"])
    elif params["model"] == "cubic":
        ssm = scalar_cubic_ssm(params["q"], params["r"])
    else:
        raise ValueError(f"unknown model {params['model']!r} (expected linear or cubic)")
    method = params["filter"]
    if method not in ("kalman", "sir", "optimal", "implicit"):
        raise ValueError(f"unknown filter {method!r}")
    truth, data = simulate_truth(ssm, params["steps"], rng.substream(0))
    result = run_filter(
        method, ssm, data, params["particles"], rng.substream(1),
        resample_threshold=params["resample_threshold"],
    )
    path = _outdir(params) / "filter_run.csv"
    write_filter_log(path, result.estimates, truth[1:], result.ess, result.resampled)
    return [path]


def cmd_l96_noise(params) -> list[Path]:
    model = Lorenz96TwoScale(
        K=params["K"], J=params["J"], F=params["forcing"], eps=params["eps"],
        h_x=params["hx"], h_y=params["hy"],
    )
    rng = RngStream(params["seed"])
    x_traj = simulate_resolved(
        model, params["delta"], params["snapshots"], rng, spinup=params["spinup"]
    )
    series = extract_discrepancy(x_traj, params["delta"], model.F)
    component = params["component"] - 1
    if not 0 <= component < model.K:
        raise ValueError(f"component must be in 1..{model.K}")
    if float(np.var(series.component(component))) == 0.0:
        # decoupled runs have identically-zero discrepancy; nothing to fit
        acf = np.zeros(params["max_lag"] + 1)
        acf[0] = 1.0
        order, innov, coeffs = 0, 0.0, np.zeros(0)
    else:
        characterize(
            series, component=component, max_lag=params["max_lag"],
            order_max=params["ar_order_max"],
        )
        acf = series.acf
        order = series.ar_fit.order
        innov = series.ar_fit.innovation_variance
        coeffs = series.ar_fit.coefficients
    out = _outdir(params)
    p1 = out / "l96_acf.csv"
    write_acf_csv(p1, acf)
    ar_rows = [("selected_order", order), ("innovation_variance", innov)]
    ar_rows += [(f"coef_{i + 1}", c) for i, c in enumerate(coeffs)]
    p2 = write_csv(out / "l96_ar.csv", ["key", "value"], ar_rows)
    paths = [p1, p2]
    if params["dump_z"]:
        p3 = out / "l96_z.csv"
        write_discrepancy_csv(p3, series)
        paths.append(p3)
    return paths


def cmd_posterior(params) -> list[Path]:
    rng = RngStream(params["seed"])
    sigma = params["noise_sigma"]
    if params["problem"] == "exp-decay":
        problem, _ = exp_decay_problem(rng.substream(0), noise_sigma=sigma or 0.05)
    elif params["problem"] == "linear":
        problem, _ = linear_gaussian_problem(rng.substream(0), noise_sigma=sigma or 0.3)
    else:
        raise ValueError(f"unknown problem {params['problem']!r}")
    ensemble = sample_posterior(problem, params["samples"], rng.substream(1),
                                threads=params["threads"])
    dim = ensemble.dim
    out = _outdir(params)
    header = [f"theta_{i + 1}" for i in range(dim)] + ["log_weight", "weight"]
    rows = [
        [*ensemble.samples[i], ensemble.log_weights[i], ensemble.normalized_weights[i]]
        for i in range(ensemble.n_samples)
    ]
    p1 = write_csv(out / "posterior_samples.csv", header, rows)
    mean = ensemble.mean()
    cov = ensemble.cov()
    report = ess(ensemble)
    summary = [(f"mean_{i + 1}", mean[i]) for i in range(dim)]
    summary += [(f"sd_{i + 1}", float(np.sqrt(cov[i, i]))) for i in range(dim)]
    summary += [
        (f"cov_{i + 1}_{j + 1}", cov[i, j]) for i in range(dim) for j in range(dim)
    ]
    summary += [("r_hat", report.R_hat), ("m_eff", report.M_eff), ("M", report.M)]
    p2 = write_csv(out / "posterior_summary.csv", ["key", "value"], summary)
    return [p1, p2]


_COMMANDS = {
    "ess-scaling": (cmd_ess_scaling, "sample-cost growth of Gaussian importance sampling"),
    "gp-spectrum": (cmd_gp_spectrum, "covariance norms and effective dimension of the GP family"),
    "cones": (cmd_cones, "feasibility cone diagram for the linear model problem"),
    "filter-run": (cmd_filter_run, "twin experiment with one filter on a built-in model"),
    "l96-noise": (cmd_l96_noise, "two-scale Lorenz-96 model-error extraction and AR fit"),
    "posterior": (cmd_posterior, "implicit-sampling Bayesian parameter estimation demo"),
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="impsamp",
        description="implicit sampling / particle filtering experiment harness",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for command, (fn, help_text) in _COMMANDS.items():
        p = sub.add_parser(command, help=help_text)
        p.add_argument("--config", default=None, help="key=value config file (flags win)")
        table = dict(_COMMON)
        table.update(_PARAMS[command])
        for name, (kind, default, help_text_arg) in table.items():
            flag = "--" + name.replace("_", "-")
            if kind == "bool":
                p.add_argument(flag, action="store_const", const=True, default=None,
                               help=help_text_arg)
            else:
                p.add_argument(flag, default=None, help=f"{help_text_arg} (default {default})")
        p.set_defaults(func=fn)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        params = _resolve(args.command, args)
        paths = args.func(params)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except NumericalError as exc:
        print(f"numerical failure [{type(exc).__name__}]: {exc}", file=sys.stderr)
        return 3
    for path in paths:
        print(f"wrote {path}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
