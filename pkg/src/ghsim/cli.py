"""Command-line front end: simulation runs, marginal-law tests and diagnostics.

One JSON config document drives every command; the few flags (--seed, --out,
--threads, --cmd) override config fields.  All randomness flows from the
mandatory master seed through numpy SeedSequence spawning: one substream per
path for ``simulate``, one per fixed-size path chunk for ``marginal-test``
(the chunk size is recorded in the report) and one for the oracle batch.
Outputs are therefore byte-identical across runs and across thread counts;
the only nondeterministic field is the wall-clock timing in the marginal
report.

CSV files carry a header row, '.' decimals, UTF-8 and RFC-4180 quoting.
JSON schemas for the manifest and report ship in docs/schemas/.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import oracle_stats
from .gh_process import GHParams, path_values, simulate_gh_endpoints, simulate_gh_path
from .gig_envelope import (
    EnvelopeConfig,
    GigParams,
    bound_A,
    bound_B,
    default_envelope,
    optimize_z0,
    z1_max,
)
from .specfun import scaled_hankel_sq
from .truncation import TruncationConfig, default_schedule, gig_residual_bounds

MARGINAL_CHUNK = 20000


class ConfigError(ValueError):
    def __init__(self, field, message):
        super().__init__(f"config field '{field}': {message}")
        self.field = field


def _get(cfg, field, default=None, required=False):
    cur = cfg
    for part in field.split("."):
        if not isinstance(cur, dict) or part not in cur:
            if required:
                raise ConfigError(field, "missing required field")
            return default
        cur = cur[part]
    return cur


def _build_params(cfg) -> GHParams:
    p = _get(cfg, "params", required=True)
    if not isinstance(p, dict):
        raise ConfigError("params", "must be an object")
    try:
        lam = float(p["lam"])
        delta = float(p["delta"])
    except KeyError as e:
        raise ConfigError(f"params.{e.args[0]}", "missing required field") from None
    beta = float(p.get("beta", 0.0))
    mu = float(p.get("mu", 0.0))
    sigma = float(p.get("sigma", 1.0))
    if "alpha" in p and "gamma" in p:
        raise ConfigError("params", "give either alpha or gamma, not both")
    try:
        if "alpha" in p:
            return GHParams.from_shape(lam, float(p["alpha"]), beta, delta, mu, sigma)
        gamma = float(p.get("gamma", 0.0))
        return GHParams(GigParams(lam, delta, gamma), mu, beta, sigma)
    except ValueError as e:
        raise ConfigError("params", str(e)) from None


def _build_truncation(cfg) -> TruncationConfig:
    t = _get(cfg, "truncation", {}) or {}
    try:
        schedule = t.get("schedule")
        if schedule is None:
            schedule = default_schedule(float(t.get("eps1", 1.0)), float(t.get("ratio", 0.5)))
        return TruncationConfig(
            tau=float(t.get("tau", 0.01)),
            p_T=float(t.get("p_T", 0.05)),
            schedule=tuple(schedule),
            beta0=float(t.get("beta0", 2.0)),
            use_mean_adjust=bool(t.get("mean_adjust", True)),
        )
    except ValueError as e:
        raise ConfigError("truncation", str(e)) from None


def _build_envelope(cfg, gig: GigParams) -> EnvelopeConfig:
    e = _get(cfg, "envelope", {}) or {}
    try:
        return default_envelope(gig, squeeze=bool(e.get("squeeze", True)), z1=e.get("z1"), z0=e.get("z0"))
    except ValueError as err:
        raise ConfigError("envelope", str(err)) from None


def _grid(cfg, horizon) -> np.ndarray:
    g = _get(cfg, "grid", {}) or {}
    if "times" in g:
        grid = np.asarray(g["times"], dtype=float)
        if grid.ndim != 1 or np.any(np.diff(grid) < 0) or grid[0] < 0 or grid[-1] > horizon:
            raise ConfigError("grid.times", "must be sorted within [0, horizon]")
        return grid
    n = int(g.get("n_points", 101))
    if n < 2:
        raise ConfigError("grid.n_points", "must be >= 2")
    return np.linspace(0.0, horizon, n)


def _fmt(x) -> str:
    return repr(float(x))


def _write_csv(path: Path, header, rows):
    with open(path, "w", newline="", encoding="utf-8") as f:
        w = csv.writer(f)
        w.writerow(header)
        w.writerows(rows)


def _json_dump(path: Path, obj):
    with open(path, "w", encoding="utf-8") as f:
        json.dump(obj, f, indent=2, sort_keys=True)
        f.write("\n")


def _params_dict(p: GHParams):
    return {
        "lam": p.gig.lam,
        "delta": p.gig.delta,
        "gamma": p.gig.gamma_param,
        "beta": p.beta_skew,
        "mu": p.mu_loc,
        "sigma": p.sigma_scale,
    }


def _summary(values):
    arr = np.asarray(values, dtype=float)
    finite = arr[np.isfinite(arr)]
    return {
        "min": float(finite.min()) if finite.size else None,
        "max": float(finite.max()) if finite.size else None,
        "mean": float(finite.mean()) if finite.size else None,
        "n_untruncated": int(np.sum(~np.isfinite(arr))),
    }


def cmd_simulate(cfg, outdir: Path, seed: int, threads: int) -> int:
    p = _build_params(cfg)
    tc = _build_truncation(cfg)
    env = _build_envelope(cfg, p.gig)
    horizon = float(_get(cfg, "horizon", 1.0))
    n_paths = int(_get(cfg, "n_paths", 1))
    grid = _grid(cfg, horizon)
    seqs = np.random.SeedSequence(seed).spawn(n_paths)

    def one(i):
        rng = np.random.Generator(np.random.Philox(seqs[i]))
        path = simulate_gh_path(p, tc, env, horizon, rng)
        return path_values(path, grid, rng), path.meta

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(one, range(n_paths)))
    else:
        results = [one(i) for i in range(n_paths)]

    rows = []
    for i, (vals, _) in enumerate(results):
        for t, v in zip(grid, vals):
            rows.append((i, _fmt(t), _fmt(v)))
    _write_csv(outdir / "paths.csv", ("path_id", "t", "value"), rows)

    eps_final = {}
    for _, meta in results:
        for name, e in meta["eps_sim"].items():
            eps_final.setdefault(name, []).append(e)
    moments = [meta["gig_moments"] for _, meta in results]
    manifest = {
        "command": "simulate",
        "seed": seed,
        "horizon": horizon,
        "n_paths": n_paths,
        "grid_points": len(grid),
        "params": _params_dict(p),
        "truncation": {"tau": tc.tau, "p_T": tc.p_T, "beta0": tc.beta0, "mean_adjust": tc.use_mean_adjust, "eps1": tc.schedule[0]},
        "envelope": {"z1": env.z1, "z0": env.z0, "h0": env.h0, "squeeze": env.squeeze},
        "eps_final": {k: _summary(v) for k, v in eps_final.items()},
        "residual_moments": {
            "mu_upper_mean": float(np.mean([m.mu_upper for m in moments])),
            "var_upper_mean": float(np.mean([m.var_upper for m in moments])),
            "mu_lower_mean": float(np.mean([m.mu_lower for m in moments])),
            "var_lower_mean": float(np.mean([m.var_lower for m in moments])),
        },
        "acceptance_counters": _aggregate_counters(meta["counters"] for _, meta in results),
    }
    _json_dump(outdir / "manifest.json", manifest)
    return 0


def _aggregate_counters(counter_dicts):
    agg = {}
    for counters in counter_dicts:
        for name, c in counters.items():
            slot = agg.setdefault(name, {"dominating": [0, 0], "marginal": [0, 0], "hankel": [0, 0], "squeeze_pre": [0, 0], "z_draws": 0})
            for stage in ("dominating", "marginal", "hankel", "squeeze_pre"):
                s = getattr(c, stage)
                slot[stage][0] += s.proposed
                slot[stage][1] += s.accepted
            slot["z_draws"] += c.z_draws
    return {
        name: {
            **{stage: {"proposed": v[0], "accepted": v[1]} for stage, v in slot.items() if stage != "z_draws"},
            "z_draws": slot["z_draws"],
        }
        for name, slot in agg.items()
    }


def cmd_marginal_test(cfg, outdir: Path, seed: int, threads: int) -> int:
    p = _build_params(cfg)
    tc = _build_truncation(cfg)
    env = _build_envelope(cfg, p.gig)
    horizon = float(_get(cfg, "horizon", 1.0))
    n = int(_get(cfg, "marginal.n_samples", 100000))
    n_bins = int(_get(cfg, "marginal.histogram_bins", 50))
    n_qq = int(_get(cfg, "marginal.qq_points", 100))
    residual = bool(_get(cfg, "residual_approx", True))

    root = np.random.SeedSequence(seed)
    n_chunks = (n + MARGINAL_CHUNK - 1) // MARGINAL_CHUNK
    chunk_seqs = root.spawn(n_chunks + 1)
    oracle_rng = np.random.Generator(np.random.Philox(chunk_seqs[-1]))

    def one_chunk(i):
        m = min(MARGINAL_CHUNK, n - i * MARGINAL_CHUNK)
        rng = np.random.Generator(np.random.Philox(chunk_seqs[i]))
        return simulate_gh_endpoints(p, tc, env, horizon, m, rng, chunk=MARGINAL_CHUNK, residual=residual)

    t0 = time.perf_counter()
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            sims = list(pool.map(one_chunk, range(n_chunks)))
    else:
        sims = [one_chunk(i) for i in range(n_chunks)]
    elapsed = time.perf_counter() - t0
    sim = np.concatenate(sims)
    oracle = np.asarray(oracle_stats.gh_variate(p, oracle_rng, size=n))
    ks = oracle_stats.ks_two_sample(sim, oracle)

    report = {
        "command": "marginal-test",
        "ks_statistic": ks,
        "n": n,
        "time_per_sample_seconds": float(f"{elapsed / n:.3g}"),
        "params": _params_dict(p),
        "tau": tc.tau,
        "p_T": tc.p_T,
        "seed": seed,
        "horizon": horizon,
        "residual_approx": residual,
        "chunk_size": MARGINAL_CHUNK,
    }
    _json_dump(outdir / "report.json", report)

    lo, hi = np.quantile(oracle, [0.001, 0.999])
    edges = np.linspace(lo, hi, n_bins + 1)
    dens, _ = np.histogram(sim, bins=edges, density=True)
    centers = 0.5 * (edges[:-1] + edges[1:])
    pdf = oracle_stats.gh_pdf(p, centers)
    _write_csv(
        outdir / "histogram.csv",
        ("bin_left", "bin_right", "density", "gh_pdf"),
        [(_fmt(edges[i]), _fmt(edges[i + 1]), _fmt(dens[i]), _fmt(pdf[i])) for i in range(n_bins)],
    )
    qq = oracle_stats.qq_points(sim, oracle, n_qq)
    _write_csv(outdir / "qq.csv", ("sim_quantile", "oracle_quantile"), [(_fmt(a), _fmt(b)) for a, b in qq])
    return 0


def cmd_diagnostics(cfg, outdir: Path, seed: int, threads: int) -> int:
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(seed)))
    ok = True

    nus = _get(cfg, "diagnostics.nu_grid", [0.3, 0.45, 0.55, 0.8, 1.5, 3.0, 10.0])
    zs = np.logspace(-4, 3, int(_get(cfg, "diagnostics.n_z", 60)))
    rows = []
    for nu in nus:
        z1 = z1_max(nu) if nu != 0.5 else 1.0
        h0 = float(scaled_hankel_sq(nu, z1))
        a = bound_A(zs, nu, z1)
        b = bound_B(zs, nu, z1, h0)
        s = scaled_hankel_sq(nu, zs)
        lo, hi = (a, b) if nu >= 0.5 else (b, a)
        ok &= bool(np.all(lo <= s * (1 + 1e-12)) and np.all(s <= hi * (1 + 1e-12)))
        rows += [(_fmt(nu), _fmt(z), _fmt(av), _fmt(sv), _fmt(bv)) for z, av, sv, bv in zip(zs, a, s, b)]
    _write_csv(outdir / "hankel_bounds.csv", ("nu", "z", "bound_A", "scaled_hankel_sq", "bound_B"), rows)

    lam_grid = _get(cfg, "diagnostics.lam_grid", [0.6, 0.8, 2.5])
    n_prop = int(_get(cfg, "diagnostics.n_proposals", 20000))
    xs = np.logspace(-2, 1, 7)
    rows = []
    for lam in lam_grid:
        p = GigParams(-abs(lam), 1.0, 0.1)
        env = default_envelope(p, squeeze=False)
        for comp in ("N1", "N2"):
            for x in xs:
                z0_star, bound = optimize_z0(float(x), p, env.z1, comp)
                rate, se = _empirical_acceptance(p, env, comp, float(x), n_prop, rng)
                ok &= rate >= bound - 4.0 * se
                rows.append((_fmt(lam), comp, _fmt(x), _fmt(z0_star), _fmt(bound), _fmt(rate), _fmt(se)))
    _write_csv(outdir / "acceptance_bounds.csv", ("abs_lam", "component", "x", "z0_opt", "lower_bound", "empirical_rate", "std_err"), rows)

    sets = _get(cfg, "diagnostics.residual_params", [[-0.8, 1.0, 0.1], [-0.4, 1.0, 0.1], [2.0, 1.0, 1.0]])
    eps_grid = np.logspace(-6, 0, 8)
    rows = []
    for lam, delta, gamma in sets:
        p = GigParams(lam, delta, gamma)
        env = default_envelope(p)
        for eps in eps_grid:
            m = gig_residual_bounds(p, env, float(eps))
            mu_q = oracle_stats.gig_truncated_moment(p, float(eps), 1)
            var_q = oracle_stats.gig_truncated_moment(p, float(eps), 2)
            ok &= m.mu_lower <= mu_q * (1 + 1e-8) and mu_q <= m.mu_upper * (1 + 1e-8)
            ok &= m.var_lower <= var_q * (1 + 1e-8) and var_q <= m.var_upper * (1 + 1e-8)
            rows.append((_fmt(lam), _fmt(delta), _fmt(gamma), _fmt(eps), _fmt(m.mu_lower), _fmt(mu_q), _fmt(m.mu_upper), _fmt(m.var_lower), _fmt(var_q), _fmt(m.var_upper)))
    _write_csv(
        outdir / "residual_sandwich.csv",
        ("lam", "delta", "gamma", "eps", "mu_lower", "mu_quadrature", "mu_upper", "var_lower", "var_quadrature", "var_upper"),
        rows,
    )
    _json_dump(outdir / "diagnostics.json", {"command": "diagnostics", "seed": seed, "all_orderings_hold": bool(ok)})
    return 0 if ok else 3


def _empirical_acceptance(p: GigParams, env: EnvelopeConfig, component: str, x: float, n: int, rng):
    """Monte Carlo acceptance frequency of the z-stage at fixed x (regime A)."""
    from .gig_sampler import ComponentCounters, _HankelStage
    from .specfun import LOG_TWO_OVER_PI

    nu = p.nu
    inv2d2 = 1.0 / (2.0 * p.delta**2)
    if component == "N1":
        stage = _HankelStage(nu, inv2d2, env.z1, "right", nu, LOG_TWO_OVER_PI, True, None, ComponentCounters())
    else:
        stage = _HankelStage(nu, inv2d2, env.z1, "left", 0.5, LOG_TWO_OVER_PI, False, None, ComponentCounters())
    acc = stage.accept(np.full(n, x), rng)
    rate = float(acc.mean())
    return rate, float(np.sqrt(max(rate * (1 - rate), 1e-12) / n))


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(prog="ghsim", description="Shot-noise simulation of GH Levy processes")
    ap.add_argument("--cmd", required=True, choices=["simulate", "marginal-test", "diagnostics"])
    ap.add_argument("--config", type=Path, default=None, help="JSON config document")
    ap.add_argument("--seed", type=int, default=None, help="master seed (overrides config)")
    ap.add_argument("--out", type=Path, default=Path("."), help="output directory")
    ap.add_argument("--threads", type=int, default=None, help="worker threads (overrides config)")
    args = ap.parse_args(argv)

    cfg = {}
    if args.config is not None:
        try:
            cfg = json.loads(args.config.read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as e:
            print(f"ghsim: cannot read config: {e}", file=sys.stderr)
            return 2
    seed = args.seed if args.seed is not None else _get(cfg, "seed")
    if seed is None:
        print("ghsim: a master seed is required (--seed or config field 'seed')", file=sys.stderr)
        return 2
    threads = args.threads if args.threads is not None else int(_get(cfg, "threads", 1))
    outdir = args.out
    outdir.mkdir(parents=True, exist_ok=True)
    try:
        if args.cmd == "simulate":
            return cmd_simulate(cfg, outdir, int(seed), threads)
        if args.cmd == "marginal-test":
            return cmd_marginal_test(cfg, outdir, int(seed), threads)
        return cmd_diagnostics(cfg, outdir, int(seed), threads)
    except ConfigError as e:
        print(f"ghsim: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
