"""Command-line front end: simulation, diagnostics, experiments, manifests.

Every run writes its outputs plus a ``manifest.json`` recording the fully
resolved configuration, the random seed, package versions, and wall time.
``rerun`` replays a manifest and reproduces the output files byte for
byte.  Exit codes: 0 on success, 2 for usage or configuration errors, 1
for runtime failures.
"""

from __future__ import annotations

import argparse
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__, estimators, hardcore2d, markov1d, mtd_sim, serialize
from .core import (
    ConfigError,
    InvalidLambda,
    MtdError,
    NoiseSpec,
    SeedSpec,
    Signal1D,
    Signal2D,
    derive_stream,
    tv_distance,
)
from .mra import InducedModelSpec, noisy_population_moment

CSV_LIMIT_DEFAULT = 4096

# stream labels for CLI pipelines
_SIGNAL = 0
_PLACEMENTS = 1
_NOISE = 2
_CHAIN = 3


def _resolve_threads(value) -> int:
    if value is not None:
        return max(1, int(value))
    env = os.environ.get("MTDMRA_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError as exc:
            raise ConfigError(f"MTDMRA_THREADS must be an integer, got {env!r}") from exc
    return os.cpu_count() or 1


def _parse_floats(text: str) -> tuple:
    try:
        return tuple(float(v) for v in text.split(","))
    except ValueError as exc:
        raise ConfigError(f"cannot parse float list {text!r}") from exc


def _parse_ints(text: str) -> tuple:
    try:
        return tuple(int(v) for v in text.split(","))
    except ValueError as exc:
        raise ConfigError(f"cannot parse integer list {text!r}") from exc


def _signal_from_config(cfg: dict, master: SeedSpec):
    L = cfg["L"]
    if cfg.get("signal") is not None:
        arr = np.asarray(cfg["signal"], dtype=np.float64)
        if cfg["model"] == "2d":
            if arr.size != L * L:
                raise ConfigError(f"2d signal needs {L * L} values, got {arr.size}")
            return Signal2D(arr.reshape(L, L))
        if arr.size != L:
            raise ConfigError(f"1d signal needs {L} values, got {arr.size}")
        return Signal1D(arr)
    gen = derive_stream(master, _SIGNAL).generator()
    if cfg["model"] == "2d":
        return Signal2D(gen.standard_normal((L, L)))
    return Signal1D(gen.standard_normal(L))


# --- subcommand bodies -------------------------------------------------------


def run_simulate(cfg: dict, out: Path) -> list:
    master = SeedSpec(cfg["seed"])
    signal = _signal_from_config(cfg, master)
    noise = NoiseSpec(cfg["sigma"])
    outputs = []
    if cfg["model"] == "1d":
        placements = mtd_sim.sample_placements_1d(
            cfg["L"], cfg["M"], cfg["gap_lambda"], derive_stream(master, _PLACEMENTS).generator()
        )
        z = mtd_sim.synthesize_1d(signal, placements, noise, derive_stream(master, _NOISE).generator())
        patches = mtd_sim.extract_patches_1d(z)
        latents = mtd_sim.latent_groups_1d(placements)
        serialize.write_csv(out / "placements.csv", ["t"], [(int(t),) for t in placements.anchors])
        serialize.write_csv(
            out / "latents.csv",
            ["k", "g1", "g2"],
            [(k, int(g[0]), int(g[1])) for k, g in enumerate(latents)],
        )
    else:
        placements = mtd_sim.sample_placements_2d(
            cfg["L"],
            cfg["M"],
            cfg["activity_lambda"],
            derive_stream(master, _PLACEMENTS).generator(),
            sampler=cfg["sampler"],
            burn_in=cfg.get("burn_in"),
            thin=cfg.get("thin"),
        )
        z = mtd_sim.synthesize_2d(signal, placements, noise, derive_stream(master, _NOISE).generator())
        patches = mtd_sim.extract_patches_2d(z)
        latents = mtd_sim.latent_groups_2d(placements)
        serialize.write_csv(
            out / "placements.csv", ["row", "col"], [(int(r), int(c)) for r, c in placements.anchors]
        )
        rows = []
        M = cfg["M"]
        for i in range(M):
            for j in range(M):
                g = latents[i, j]
                rows.append((i, j) + tuple(int(v) for v in g.ravel()))
        serialize.write_csv(
            out / "latents.csv",
            ["k1", "k2", "g1_r", "g1_c", "g2_r", "g2_c", "g3_r", "g3_c", "g4_r", "g4_c"],
            rows,
        )
    outputs += ["placements.csv", "latents.csv"]
    serialize.write_measurement(out / "measurement.bin", z, sigma=cfg["sigma"], seed=cfg["seed"])
    serialize.write_patches(out / "patches.bin", patches, sigma=cfg["sigma"], seed=cfg["seed"])
    outputs += ["measurement.bin", "patches.bin"]
    if z.values.size <= cfg["csv_limit"]:
        header, rows = serialize.measurement_csv_rows(z)
        serialize.write_csv(out / "measurement.csv", header, rows)
        outputs.append("measurement.csv")
    serialize.write_json(
        out / "signal.json", {"L": cfg["L"], "values": [float(v) for v in signal.values.ravel()]}
    )
    outputs.append("signal.json")
    return outputs


def run_stationary(cfg: dict, out: Path) -> list:
    master = SeedSpec(cfg["seed"])
    L, lam = cfg["L"], cfg["gap_lambda"]
    pairs = markov1d.simulate_chain(L, lam, cfg["samples"], derive_stream(master, _CHAIN).generator())
    emp = markov1d.group_pair_histogram(pairs, L)
    closed = markov1d.stationary_closed_form(L, lam).probabilities
    p = markov1d.transition_matrix(L, lam)
    rho_eig = markov1d.stationary_eigen(p)
    pushforward = markov1d.pair_distribution(p, rho_eig).probabilities
    support = sorted(set(closed) | set(emp))
    rows = [(x, y, closed.get((x, y), 0.0), emp.get((x, y), 0.0)) for x, y in support]
    serialize.write_csv(out / "stationary.csv", ["x", "y", "pi_closed", "pi_empirical"], rows)
    summary = {
        "L": L,
        "lambda": lam,
        "samples": cfg["samples"],
        "seed": cfg["seed"],
        "tv_empirical": tv_distance(closed, emp),
        "max_abs_diff_eigen": max(
            abs(closed.get(k, 0.0) - pushforward.get(k, 0.0)) for k in set(closed) | set(pushforward)
        ),
    }
    serialize.write_json(out / "summary.json", summary)
    return ["stationary.csv", "summary.json"]


def run_mixing(cfg: dict, out: Path) -> list:
    if cfg["model"] == "1d":
        L, lam, kmax = cfg["L"], cfg["gap_lambda"], cfg["kmax"]
        p = markov1d.transition_matrix(L, lam)
        curves = markov1d.tv_mixing_curve(p, kmax)
        envelope = markov1d.mixing_envelope(L, lam, kmax)
        rows = []
        for s in range(L + 1):
            for k in range(kmax + 1):
                rows.append((s, k, curves[s, k], envelope[k]))
        serialize.write_csv(out / "mixing.csv", ["start_state", "k", "tv", "envelope"], rows)
        summary = {
            "L": L,
            "lambda": lam,
            "kmax": kmax,
            "beta": markov1d.minorization_beta(L, lam),
            "rate": markov1d.mixing_rate(L, lam),
            "constant": float(markov1d.ENVELOPE_FACTOR * (L + 1)),
            "empirical_constant": markov1d.empirical_envelope_constant(curves, L, lam),
            "spectral_gap": markov1d.spectral_gap(p),
            "all_below_envelope": bool(np.all(curves <= envelope + 1e-12)),
        }
        serialize.write_json(out / "summary.json", summary)
        return ["mixing.csv", "summary.json"]

    master = SeedSpec(cfg["seed"])
    graph = hardcore2d.conflict_graph(cfg["L"], cfg["M"])
    rows = hardcore2d.mixing_diagnostic(
        graph,
        cfg["activity_lambda"],
        cfg["separations"],
        cfg["samples"],
        derive_stream(master, _CHAIN).generator(),
        min_hits=cfg["min_hits"],
    )
    serialize.write_csv(
        out / "decay.csv",
        ["separation", "deviation", "se", "n_cells", "n_pairs"],
        [(r.separation, r.deviation, r.se, r.n_cells, r.n_pairs) for r in rows],
    )
    summary = {
        "L": cfg["L"],
        "M": cfg["M"],
        "activity_lambda": cfg["activity_lambda"],
        "samples": cfg["samples"],
        "seed": cfg["seed"],
        "min_hits": cfg["min_hits"],
        "slope": None,
        "intercept": None,
        "r2": None,
        "decayed": None,
    }
    if len(rows) >= 2 and all(r.deviation > 0 for r in rows):
        fit = estimators.linear_fit([r.separation for r in rows], [np.log(r.deviation) for r in rows])
        summary.update(
            slope=fit.slope,
            intercept=fit.intercept,
            r2=fit.r2,
            decayed=bool(fit.slope < 0 and fit.r2 >= 0.8),
        )
    serialize.write_json(out / "summary.json", summary)
    return ["decay.csv", "summary.json"]


def run_hardcore_sample(cfg: dict, out: Path) -> list:
    master = SeedSpec(cfg["seed"])
    graph = hardcore2d.conflict_graph(cfg["L"], cfg["M"])
    gen = derive_stream(master, _PLACEMENTS).generator()
    summary = {
        "L": cfg["L"],
        "M": cfg["M"],
        "activity_lambda": cfg["activity_lambda"],
        "sampler": cfg["sampler"],
        "samples": cfg["samples"],
        "seed": cfg["seed"],
        "n_vertices": graph.n_vertices,
    }
    if cfg["sampler"] == "exact":
        exact = hardcore2d.enumerate_exact(graph, cfg["activity_lambda"])
        configs = hardcore2d.sample_exact(exact, cfg["samples"], gen)
        summary["partition_value"] = exact.partition_value
        summary["n_configs"] = len(exact.configs)
    else:
        configs = hardcore2d.sample_glauber(
            graph,
            cfg["activity_lambda"],
            cfg["samples"],
            gen,
            burn_in=cfg.get("burn_in"),
            thin=cfg.get("thin"),
        )
    rows = []
    for idx, c in enumerate(configs):
        anchors = ";".join(f"{int(r)}:{int(col)}" for r, col in c)
        rows.append((idx, c.shape[0], anchors))
    serialize.write_csv(out / "configs.csv", ["sample", "n_anchors", "anchors"], rows)
    summary["mean_occupancy"] = float(np.mean([c.shape[0] for c in configs]))
    serialize.write_json(out / "summary.json", summary)
    return ["configs.csv", "summary.json"]


def run_moments(cfg: dict, out: Path) -> list:
    master = SeedSpec(cfg["seed"])
    signal = _signal_from_config(cfg, master)
    placements = mtd_sim.sample_placements_1d(
        cfg["L"], cfg["M"], cfg["gap_lambda"], derive_stream(master, _PLACEMENTS).generator()
    )
    z = mtd_sim.synthesize_1d(
        signal, placements, NoiseSpec(cfg["sigma"]), derive_stream(master, _NOISE).generator()
    )
    patches = mtd_sim.extract_patches_1d(z)
    pi = markov1d.stationary_closed_form(cfg["L"], cfg["gap_lambda"]).probabilities
    spec = InducedModelSpec(signal=signal, pi=pi, noise=NoiseSpec(cfg["sigma"]))
    outputs = []
    per_order = {}
    for n in cfg["orders"]:
        emp, se = estimators.empirical_moment_stats(patches, n, n_blocks=100)
        pop = noisy_population_moment(spec, n)
        serialize.write_moment(out / f"empirical_moment_{n}.json", emp)
        serialize.write_moment(out / f"population_moment_{n}.json", pop)
        outputs += [f"empirical_moment_{n}.json", f"population_moment_{n}.json"]
        err = float(np.linalg.norm((emp.entries - pop.entries).ravel()))
        se_norm = float(np.linalg.norm(se.ravel()))
        per_order[str(n)] = {
            "error_norm": err,
            "se_norm": se_norm,
            "z": err / se_norm if se_norm > 0 else float("inf"),
        }
    summary = {
        "L": cfg["L"],
        "M": cfg["M"],
        "lambda": cfg["gap_lambda"],
        "sigma": cfg["sigma"],
        "seed": cfg["seed"],
        "signal": [float(v) for v in signal.values.ravel()],
        "orders": per_order,
    }
    serialize.write_json(out / "summary.json", summary)
    outputs.append("summary.json")
    return outputs


def run_recover(cfg: dict, out: Path) -> list:
    master = SeedSpec(cfg["seed"])
    signal = _signal_from_config(cfg, master)
    pi = markov1d.stationary_closed_form(cfg["L"], cfg["gap_lambda"]).probabilities
    spec = InducedModelSpec(signal=signal, pi=pi, noise=NoiseSpec(cfg["sigma"]))
    if cfg["exact_moments"]:
        moments = [noisy_population_moment(spec, n) for n in cfg["orders"]]
    else:
        placements = mtd_sim.sample_placements_1d(
            cfg["L"], cfg["M"], cfg["gap_lambda"], derive_stream(master, _PLACEMENTS).generator()
        )
        z = mtd_sim.synthesize_1d(
            signal, placements, NoiseSpec(cfg["sigma"]), derive_stream(master, _NOISE).generator()
        )
        patches = mtd_sim.extract_patches_1d(z)
        moments = [estimators.empirical_moment(patches, n) for n in cfg["orders"]]
    if cfg["init"] == "perturb":
        gen = derive_stream(master, 9).generator()
        init = signal.values + 0.1 * gen.standard_normal(signal.values.shape)
    else:
        init = np.zeros_like(signal.values)
    result = estimators.recover_signal(moments, pi, cfg["sigma"], cfg["L"], init.ravel())
    payload = {
        "L": cfg["L"],
        "M": cfg["M"],
        "lambda": cfg["gap_lambda"],
        "sigma": cfg["sigma"],
        "orders": list(cfg["orders"]),
        "seed": cfg["seed"],
        "init": cfg["init"],
        "exact_moments": cfg["exact_moments"],
        "true_signal": [float(v) for v in signal.values.ravel()],
        "estimate": [float(v) for v in result.estimate],
        "max_abs_error": float(np.max(np.abs(result.estimate - signal.values.ravel()))),
        "residual_norm": result.residual_norm,
        "iterations": result.iterations,
        "converged": result.converged,
    }
    serialize.write_json(out / "recovery.json", payload)
    return ["recovery.json"]


def run_experiment(cfg: dict, out: Path) -> list:
    body = dict(cfg["body"])
    kind = body.pop("type", None)
    threads = cfg.get("threads", 1)
    if kind == "mse":
        curve = estimators.mse_experiment(body, threads=threads)
        serialize.write_csv(
            out / "mse.csv",
            ["M", "m", "m_eff", "trials", "mse_mtd", "se_mtd", "mse_mra", "se_mra"],
            [
                (r.M, r.m, r.m_eff, r.trials, r.mse_mtd, r.se_mtd, r.mse_mra, r.se_mra)
                for r in curve.rows
            ],
        )
        summary = {
            "model": curve.model,
            "feature": curve.feature,
            "sigma": curve.sigma,
            "meta": curve.meta,
            "ratio_max": max(r.mse_mtd / r.mse_mra for r in curve.rows if r.mse_mra > 0),
        }
        try:
            fits = estimators.fit_rate(curve)
            summary["fits"] = {
                series: {"slope": f.slope, "intercept": f.intercept, "r2": f.r2}
                for series, f in fits.items()
            }
        except MtdError:
            summary["fits"] = None
        serialize.write_json(out / "summary.json", summary)
        return ["mse.csv", "summary.json"]
    if kind == "sigma":
        result = estimators.sigma_scaling_experiment(body, threads=threads)
        serialize.write_csv(
            out / "sigma.csv",
            ["order", "sigma", "mse", "se"],
            [(r.order, r.sigma, r.mse, r.se) for r in result.rows],
        )
        summary = {
            "meta": result.meta,
            "fits": {
                str(n): {"slope": f.slope, "intercept": f.intercept, "r2": f.r2}
                for n, f in result.fits.items()
            },
        }
        serialize.write_json(out / "summary.json", summary)
        return ["sigma.csv", "summary.json"]
    raise ConfigError(f"experiment type must be 'mse' or 'sigma', got {kind!r}")


_RUNNERS = {
    "simulate": run_simulate,
    "stationary": run_stationary,
    "mixing": run_mixing,
    "hardcore-sample": run_hardcore_sample,
    "moments": run_moments,
    "recover": run_recover,
    "experiment": run_experiment,
}


def _execute(command: str, cfg: dict, out_dir: str) -> None:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    start = time.perf_counter()
    outputs = _RUNNERS[command](cfg, out)
    manifest = {
        "command": command,
        "config": cfg,
        "versions": {
            "mtdmra": __version__,
            "python": sys.version.split()[0],
            "numpy": np.__version__,
        },
        "wall_time_s": round(time.perf_counter() - start, 3),
        "outputs": sorted(outputs),
    }
    serialize.write_json(out / "manifest.json", manifest)


# --- argument parsing ----------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mtdmra",
        description="Simulate multi-target detection measurements and analyze their patch model.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("--out", required=True, help="output directory")
        p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("simulate", help="measurement, patches, and latent groups to files")
    add_common(p)
    p.add_argument("--model", choices=["1d", "2d"], default="1d")
    p.add_argument("--L", type=int, required=True)
    p.add_argument("--M", type=int, required=True)
    p.add_argument("--gap-lambda", type=float)
    p.add_argument("--activity-lambda", type=float)
    p.add_argument("--sigma", type=float, default=0.0)
    p.add_argument("--signal", help="comma-separated signal values (row-major in 2d)")
    p.add_argument("--sampler", choices=["glauber", "exact"], default="glauber")
    p.add_argument("--burn-in", type=int)
    p.add_argument("--thin", type=int)
    p.add_argument("--csv-limit", type=int, default=CSV_LIMIT_DEFAULT)

    p = sub.add_parser("stationary", help="closed-form versus simulated pair law")
    add_common(p)
    p.add_argument("--L", type=int, required=True)
    p.add_argument("--gap-lambda", type=float, required=True)
    p.add_argument("--samples", type=int, default=1_000_000)

    p = sub.add_parser("mixing", help="mixing curves (1d) or spatial decay table (2d)")
    add_common(p)
    p.add_argument("--model", choices=["1d", "2d"], default="1d")
    p.add_argument("--L", type=int, required=True)
    p.add_argument("--gap-lambda", type=float)
    p.add_argument("--kmax", type=int, default=50)
    p.add_argument("--M", type=int)
    p.add_argument("--activity-lambda", type=float)
    p.add_argument("--separations", default="1,2,3")
    p.add_argument("--samples", type=int, default=20_000)
    p.add_argument("--min-hits", type=int, default=100)

    p = sub.add_parser("hardcore-sample", help="draw hard-core anchor configurations")
    add_common(p)
    p.add_argument("--L", type=int, required=True)
    p.add_argument("--M", type=int, required=True)
    p.add_argument("--activity-lambda", type=float, required=True)
    p.add_argument("--sampler", choices=["glauber", "exact"], default="glauber")
    p.add_argument("--samples", type=int, required=True)
    p.add_argument("--burn-in", type=int)
    p.add_argument("--thin", type=int)

    p = sub.add_parser("moments", help="empirical versus population patch moments")
    add_common(p)
    p.add_argument("--L", type=int, required=True)
    p.add_argument("--M", type=int, required=True)
    p.add_argument("--gap-lambda", type=float, required=True)
    p.add_argument("--sigma", type=float, default=0.0)
    p.add_argument("--orders", default="1,2,3")
    p.add_argument("--signal")

    p = sub.add_parser("recover", help="estimate the signal from patch moments")
    add_common(p)
    p.add_argument("--L", type=int, required=True)
    p.add_argument("--M", type=int, default=100_000)
    p.add_argument("--gap-lambda", type=float, required=True)
    p.add_argument("--sigma", type=float, default=0.0)
    p.add_argument("--orders", default="1,2,3")
    p.add_argument("--signal")
    p.add_argument("--init", choices=["zeros", "perturb"], default="zeros")
    p.add_argument("--exact-moments", action="store_true", help="invert population moments instead")

    p = sub.add_parser("experiment", help="run an error-decay or noise-scaling experiment")
    p.add_argument("--config", required=True, help="JSON experiment description")
    p.add_argument("--out", required=True)
    p.add_argument("--threads", type=int, help="trial-level workers (env MTDMRA_THREADS, else cores)")

    p = sub.add_parser("rerun", help="replay a manifest byte for byte")
    p.add_argument("--manifest", required=True)
    p.add_argument("--out", required=True)
    return parser


def _config_from_args(args) -> tuple[str, dict]:
    cmd = args.command
    if cmd == "simulate":
        cfg = {
            "model": args.model,
            "L": args.L,
            "M": args.M,
            "sigma": args.sigma,
            "seed": args.seed,
            "csv_limit": args.csv_limit,
            "signal": list(_parse_floats(args.signal)) if args.signal else None,
        }
        if args.model == "1d":
            if args.gap_lambda is None:
                raise ConfigError("1d simulation needs --gap-lambda")
            cfg["gap_lambda"] = args.gap_lambda
        else:
            if args.activity_lambda is None:
                raise ConfigError("2d simulation needs --activity-lambda")
            cfg.update(
                {
                    "activity_lambda": args.activity_lambda,
                    "sampler": args.sampler,
                    "burn_in": args.burn_in,
                    "thin": args.thin,
                }
            )
        return cmd, cfg
    if cmd == "stationary":
        return cmd, {
            "L": args.L,
            "gap_lambda": args.gap_lambda,
            "samples": args.samples,
            "seed": args.seed,
        }
    if cmd == "mixing":
        if args.model == "1d":
            if args.gap_lambda is None:
                raise ConfigError("1d mixing needs --gap-lambda")
            return cmd, {
                "model": "1d",
                "L": args.L,
                "gap_lambda": args.gap_lambda,
                "kmax": args.kmax,
                "seed": args.seed,
            }
        if args.M is None or args.activity_lambda is None:
            raise ConfigError("2d mixing needs --M and --activity-lambda")
        return cmd, {
            "model": "2d",
            "L": args.L,
            "M": args.M,
            "activity_lambda": args.activity_lambda,
            "separations": list(_parse_ints(args.separations)),
            "samples": args.samples,
            "min_hits": args.min_hits,
            "seed": args.seed,
        }
    if cmd == "hardcore-sample":
        return cmd, {
            "L": args.L,
            "M": args.M,
            "activity_lambda": args.activity_lambda,
            "sampler": args.sampler,
            "samples": args.samples,
            "burn_in": args.burn_in,
            "thin": args.thin,
            "seed": args.seed,
        }
    if cmd == "moments":
        return cmd, {
            "model": "1d",
            "L": args.L,
            "M": args.M,
            "gap_lambda": args.gap_lambda,
            "sigma": args.sigma,
            "orders": list(_parse_ints(args.orders)),
            "signal": list(_parse_floats(args.signal)) if args.signal else None,
            "seed": args.seed,
        }
    if cmd == "recover":
        return cmd, {
            "model": "1d",
            "L": args.L,
            "M": args.M,
            "gap_lambda": args.gap_lambda,
            "sigma": args.sigma,
            "orders": list(_parse_ints(args.orders)),
            "signal": list(_parse_floats(args.signal)) if args.signal else None,
            "init": args.init,
            "exact_moments": bool(args.exact_moments),
            "seed": args.seed,
        }
    if cmd == "experiment":
        body = serialize.read_json(args.config)
        if not isinstance(body, dict):
            raise ConfigError(f"{args.config}: experiment config must be a JSON object")
        return cmd, {"body": body, "threads": _resolve_threads(args.threads)}
    raise ConfigError(f"unknown command {cmd!r}")


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        if args.command == "rerun":
            manifest = serialize.read_json(args.manifest)
            command, cfg = manifest["command"], manifest["config"]
            if command not in _RUNNERS:
                raise ConfigError(f"manifest names unknown command {command!r}")
        else:
            command, cfg = _config_from_args(args)
        _execute(command, cfg, args.out)
        return 0
    except (ConfigError, InvalidLambda) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    except MtdError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # pragma: no cover - safety net for unexpected failures
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
