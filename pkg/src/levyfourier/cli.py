"""Command-line front end: density runs, convergence studies, timing
benchmarks, and a built-in oracle selftest.  Results are CSV tables plus a
JSON manifest of every resolved parameter."""
from __future__ import annotations

import argparse
import json
import math
import statistics
import sys
import time
import warnings
from dataclasses import dataclass, fields
from pathlib import Path
from typing import Optional

import numpy as np
from scipy.integrate import quad

from .de_ft import build_sources, splice_plan
from .euler_ft import EulerParams
from .numkit import ComplexSeries, frft
from .nufft import nufft_forward, nufft_params
from .sinc_gauss import kernel_table
from .solver import (DEFAULT_B, DEFAULT_EPSILON, _spliced_transform,
                     clear_exponent_cache, custom_model, g_gamma, make_grid,
                     nig_model, solve, vg_model)

CONFIG_SCHEMA_VERSION = "1"
_CONFIG_KEYS = ("schema_version", "model", "gamma", "mu", "t", "i_range",
                "xl", "xu", "d", "b", "eps", "out", "reps")


@dataclass(frozen=True)
class RunConfig:
    """Resolved parameters of one CLI invocation."""

    model: str = "vg"
    gamma: Optional[int] = None
    mu_expr: Optional[str] = None
    t_values: tuple = (1.0,)
    exponent_i: tuple = (11,)
    x_l: float = 2.0
    x_u: float = 5.0
    d: float = 1.0
    b: float = DEFAULT_B
    epsilon: float = DEFAULT_EPSILON
    out: str = "out"
    reps: int = 5

    def __post_init__(self):
        if self.model not in ("vg", "nig", "custom"):
            raise ValueError(f"unknown model {self.model!r} (vg, nig or custom)")
        if self.model == "custom":
            if self.gamma not in (1, 2):
                raise ValueError("custom model needs --gamma 1 or 2")
            if not self.mu_expr:
                raise ValueError("custom model needs --mu EXPR (a function of y)")
        if not self.t_values:
            raise ValueError("need at least one time value")
        if not all(math.isfinite(t) and t > 0 for t in self.t_values):
            raise ValueError(f"all times must be positive and finite: {self.t_values}")
        if not self.exponent_i:
            raise ValueError("need at least one grid exponent i")
        if not all(7 <= i <= 14 for i in self.exponent_i):
            raise ValueError(f"grid exponents must lie in 7..14: {self.exponent_i}")
        if not (0 < self.x_l < self.x_u):
            raise ValueError("need 0 < xl < xu")
        if self.reps < 1:
            raise ValueError("reps must be at least 1")


def parse_config_file(path) -> dict:
    """Flat key=value config; requires schema_version=1.  '#' starts a comment."""
    data = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{lineno}: expected key=value, got {line!r}")
            key, _, value = line.partition("=")
            key, value = key.strip(), value.strip()
            if key not in _CONFIG_KEYS:
                raise ValueError(f"{path}:{lineno}: unknown config key {key!r}")
            data[key] = value
    if data.get("schema_version") != CONFIG_SCHEMA_VERSION:
        raise ValueError(f"{path}: missing or unsupported schema_version "
                         f"(need schema_version={CONFIG_SCHEMA_VERSION})")
    return data


def _parse_times(text: str) -> tuple:
    return tuple(float(tok) for tok in text.split(",") if tok.strip())


def _parse_irange(text: str) -> tuple:
    """'7..12', '11', or '7,9,11'."""
    text = text.strip()
    if ".." in text:
        lo, _, hi = text.partition("..")
        return tuple(range(int(lo), int(hi) + 1))
    return tuple(int(tok) for tok in text.split(",") if tok.strip())


def resolve_config(args) -> RunConfig:
    """Merge defaults < config file < explicit flags."""
    file_vals = parse_config_file(args.config) if args.config else {}

    def pick(flag_value, key, conv, default):
        if flag_value is not None:
            return flag_value
        if key in file_vals:
            return conv(file_vals[key])
        return default

    return RunConfig(
        model=pick(args.model, "model", str, "vg"),
        gamma=pick(args.gamma, "gamma", int, None),
        mu_expr=pick(args.mu, "mu", str, None),
        t_values=_parse_times(pick(args.t, "t", str, "1")),
        exponent_i=_parse_irange(pick(args.i_range, "i_range", str, "11")),
        x_l=pick(args.xl, "xl", float, 2.0),
        x_u=pick(args.xu, "xu", float, 5.0),
        d=pick(args.d, "d", float, 1.0),
        b=pick(args.b, "b", float, DEFAULT_B),
        epsilon=pick(args.eps, "eps", float, DEFAULT_EPSILON),
        out=pick(args.out, "out", str, "out"),
        reps=pick(args.reps, "reps", int, 5),
    )


def _build_model(config: RunConfig):
    if config.model == "vg":
        return vg_model()
    if config.model == "nig":
        return nig_model()
    code = compile(config.mu_expr, "<mu>", "eval")

    def mu(y, _code=code):
        return eval(_code, {"__builtins__": {}}, {"np": np, "math": math, "y": y})

    return custom_model("custom", config.gamma, mu)


def _grid_pair(model, config: RunConfig, i: int):
    n = 2 ** (i - model.i_offset)
    euler = EulerParams.from_theorem(n, config.x_l, config.x_u, config.d)
    return make_grid(model, euler), euler


def _config_echo(config: RunConfig) -> dict:
    echo = {}
    for f in fields(config):
        v = getattr(config, f.name)
        echo[f.name] = list(v) if isinstance(v, tuple) else v
    return echo


def _write_manifest(outdir: Path, name: str, payload: dict) -> Path:
    from . import __version__
    payload = {"schema_version": 1, "package_version": __version__, **payload}
    path = outdir / name
    with open(path, "w", encoding="utf-8", newline="") as fh:
        json.dump(payload, fh, indent=2)
        fh.write("\n")
    return path


def _fmt(v) -> str:
    return "%.17g" % v


def cmd_solve(config: RunConfig) -> int:
    """One CSV per (model, i, t) with x, p_num and, when available, exact values."""
    model = _build_model(config)
    outdir = Path(config.out)
    outdir.mkdir(parents=True, exist_ok=True)
    runs = []
    for i in config.exponent_i:
        grid, euler = _grid_pair(model, config, i)
        for t in config.t_values:
            res = solve(model, grid, t, euler, epsilon=config.epsilon, b=config.b)
            fname = f"solve_{model.name}_i{i}_t{t:g}.csv"
            with open(outdir / fname, "w", encoding="utf-8", newline="") as fh:
                if res.p_exact is not None:
                    fh.write("x,p_num,p_exact,abs_err\n")
                    for row in zip(res.x, res.p, res.p_exact, res.abs_err):
                        fh.write(",".join(_fmt(v) for v in row) + "\n")
                else:
                    fh.write("x,p_num\n")
                    for row in zip(res.x, res.p):
                        fh.write(",".join(_fmt(v) for v in row) + "\n")
            entry = dict(res.params_echo)
            entry["i"] = i
            entry["file"] = fname
            runs.append(entry)
            note = (f"  max_abs_err={np.max(res.abs_err):.3e}"
                    if res.abs_err is not None else "")
            print(f"wrote {outdir / fname}  ({len(res.x)} rows, "
                  f"{res.timings['total']:.3f} s){note}")
    _write_manifest(outdir, f"solve_{model.name}_manifest.json",
                    {"command": "solve", "config": _config_echo(config), "runs": runs})
    return 0


def cmd_converge(config: RunConfig) -> int:
    """Error-vs-size table: max errors on the full interval and on the
    guaranteed window per (M, t), plus fitted slopes of log err vs sqrt(M)."""
    if len(config.exponent_i) < 3:
        raise ValueError("converge needs at least 3 grid exponents (--i-range)")
    model = _build_model(config)
    if model.exact_density is None:
        raise ValueError("converge needs a model with an exact density (vg or nig)")
    outdir = Path(config.out)
    outdir.mkdir(parents=True, exist_ok=True)
    m_list = []
    full_err = {t: [] for t in config.t_values}
    window_err = {t: [] for t in config.t_values}
    runs = []
    for i in config.exponent_i:
        grid, euler = _grid_pair(model, config, i)
        m_list.append(grid.m)
        for t in config.t_values:
            res = solve(model, grid, t, euler, epsilon=config.epsilon, b=config.b)
            in_window = np.abs(res.x) >= config.x_l
            full_err[t].append(float(np.max(res.abs_err)))
            window_err[t].append(float(np.max(res.abs_err[in_window])))
        entry = solve_params(model, config, i)
        entry["i"] = i
        runs.append(entry)
    fname = f"converge_{model.name}.csv"
    with open(outdir / fname, "w", encoding="utf-8", newline="") as fh:
        header = ["M"]
        for t in config.t_values:
            header += [f"max_err_full_t{t:g}", f"max_err_window_t{t:g}"]
        fh.write(",".join(header) + "\n")
        for row_i, m in enumerate(m_list):
            row = [_fmt(m)]
            for t in config.t_values:
                row += [_fmt(full_err[t][row_i]), _fmt(window_err[t][row_i])]
            fh.write(",".join(row) + "\n")
    slopes = {}
    sqrt_m = np.sqrt(np.asarray(m_list, dtype=float))
    for t in config.t_values:
        logs = np.log(np.maximum(window_err[t], 1e-300))
        slope, intercept = np.polyfit(sqrt_m, logs, 1)
        resid = logs - (slope * sqrt_m + intercept)
        ss_tot = float(np.sum((logs - logs.mean()) ** 2))
        r2 = 1.0 - float(np.sum(resid**2)) / ss_tot if ss_tot > 0 else 0.0
        slopes[f"t={t:g}"] = {"slope_vs_sqrt_m": float(slope), "r_squared": r2}
        print(f"t={t:g}: window-error slope vs sqrt(M) = {slope:.4f} "
              f"(R^2 = {r2:.4f})")
    print(f"wrote {outdir / fname}")
    _write_manifest(outdir, f"converge_{model.name}_manifest.json",
                    {"command": "converge", "config": _config_echo(config),
                     "slopes": slopes, "runs": runs})
    return 0


def solve_params(model, config: RunConfig, i: int) -> dict:
    from .solver import params_echo
    grid, euler = _grid_pair(model, config, i)
    return params_echo(model, grid, euler, epsilon=config.epsilon, b=config.b)


def cmd_bench(config: RunConfig) -> int:
    """Median per-step wall times per grid size, with time/(M log2 M)."""
    model = _build_model(config)
    t = config.t_values[0]
    if config.reps < 5:
        warnings.warn(f"reps = {config.reps} < 5; timing medians may be noisy",
                      stacklevel=2)
    outdir = Path(config.out)
    outdir.mkdir(parents=True, exist_ok=True)
    rows = []
    for i in config.exponent_i:
        grid, euler = _grid_pair(model, config, i)
        samples = {"step1": [], "step2": [], "step3": [], "total": []}
        for _ in range(config.reps):
            clear_exponent_cache()
            res = solve(model, grid, t, euler, epsilon=config.epsilon, b=config.b)
            for key in samples:
                samples[key].append(res.timings[key])
        med = {key: statistics.median(vals) for key, vals in samples.items()}
        rows.append((grid.m, med, med["total"] / (grid.m * math.log2(grid.m))))
    fname = f"bench_{model.name}.csv"
    with open(outdir / fname, "w", encoding="utf-8", newline="") as fh:
        fh.write("M,step1_s,step2_s,step3_s,total_s,total_per_mlog2m\n")
        for m, med, ratio in rows:
            fh.write(",".join([_fmt(m), _fmt(med["step1"]), _fmt(med["step2"]),
                               _fmt(med["step3"]), _fmt(med["total"]),
                               _fmt(ratio)]) + "\n")
    norm = [ratio for _, _, ratio in rows]
    print(f"wrote {outdir / fname}  (normalized spread "
          f"max/min = {max(norm) / min(norm):.2f})")
    _write_manifest(outdir, f"bench_{model.name}_manifest.json",
                    {"command": "bench", "config": _config_echo(config),
                     "t": t, "reps": config.reps,
                     "normalized_spread": max(norm) / min(norm)})
    return 0


def _check_frft():
    rng = np.random.default_rng(7)
    n = 32
    vals = rng.standard_normal(2 * n) + 1j * rng.standard_normal(2 * n)
    got = frft(ComplexSeries(-n + 1, vals), 0.3)
    idx = np.arange(-n + 1, n + 1)
    direct = np.array([np.sum(vals * np.exp(1j * 0.3 * idx * k)) for k in idx])
    return float(np.max(np.abs(got.values - direct))), 1e-10


def _check_nufft():
    model = vg_model()
    euler = EulerParams.from_theorem(128, 2.0, 5.0, 1.0)
    grid = make_grid(model, euler)
    worst = 0.0
    k = np.arange(grid.n_gamma + 1)
    for params, _ in splice_plan(grid.n_gamma, grid.h_tilde):
        src = build_sources(model.mu, params)
        npar = nufft_params(grid.m, src.points, grid.h_tilde)
        got = nufft_forward(src, npar, grid.h_tilde, grid.n_gamma)
        direct = np.exp(-1j * np.outer(k * grid.h_tilde, src.points)) @ src.weights
        worst = max(worst, float(np.max(np.abs(got.values - direct))))
    return worst, 1e-8


def _check_kernel_table():
    n_prime = 32
    r = math.sqrt(n_prime / math.pi)
    table = kernel_table(r, n_prime)
    acc, worst = 0.0, 0.0
    for k in range(1, n_prime + 1):
        piece, _ = quad(lambda s: np.sinc(s) * math.exp(-s * s / (2 * r * r)),
                        k - 1, k)
        acc += piece
        worst = max(worst, abs(float(table.g[k]) - acc))
    return worst, 1e-9


def _check_de_ft():
    model = vg_model()
    euler = EulerParams.from_theorem(128, 2.0, 5.0, 1.0)
    grid = make_grid(model, euler)
    mhat = _spliced_transform(model, grid, DEFAULT_EPSILON, DEFAULT_B)
    k = np.arange(grid.n_gamma + 1)
    exact = 1.0 / (1.0 + 1j * k * grid.h_tilde)
    return float(np.max(np.abs(mhat.values - exact))), 1e-6


def _check_exponent(model, n, tol):
    euler = EulerParams.from_theorem(n, 2.0, 5.0, 1.0)
    grid = make_grid(model, euler)
    g = g_gamma(model, grid)
    exact = model.exact_exponent(g.grid())
    return float(np.max(np.abs(g.values.real - exact))), tol


def cmd_selftest() -> int:
    """Small-size oracle checks; nonzero exit if any fails."""
    checks = [
        ("frft-vs-direct-sum", _check_frft),
        ("nufft-vs-direct-sum", _check_nufft),
        ("kernel-table-vs-quadrature", _check_kernel_table),
        ("de-ft-vs-closed-form", _check_de_ft),
        ("exponent-vg-closed-form", lambda: _check_exponent(vg_model(), 256, 1e-6)),
        ("exponent-nig-closed-form", lambda: _check_exponent(nig_model(), 128, 1e-5)),
    ]
    all_ok = True
    start = time.perf_counter()
    print(f"{'check':<30} {'result':<8} {'max_err':<12} tol")
    for name, fn in checks:
        try:
            err, tol = fn()
            ok = err <= tol
            detail = f"{err:<12.3e} {tol:g}"
        except Exception as exc:  # a crashed check is a failed check
            ok, detail = False, f"raised: {exc}"
        all_ok &= ok
        print(f"{name:<30} {'PASS' if ok else 'FAIL':<8} {detail}")
    print(f"selftest {'passed' if all_ok else 'FAILED'} "
          f"in {time.perf_counter() - start:.2f} s")
    return 0 if all_ok else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="levyfourier",
        description="Fourier-space solver for densities of symmetric pure-jump "
                    "Levy processes")
    sub = parser.add_subparsers(dest="command", required=True)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="key=value config file (flags override)")
    common.add_argument("--model", choices=("vg", "nig", "custom"))
    common.add_argument("--gamma", type=int, help="order for --model custom (1 or 2)")
    common.add_argument("--mu", help="jump density of y for --model custom, "
                                     "e.g. 'np.exp(-y)'")
    common.add_argument("--t", help="comma-separated times, e.g. 1,2,3")
    common.add_argument("--i-range", dest="i_range",
                        help="grid exponents i with M = 2^i: '7..12', '11' or '7,9,11'")
    common.add_argument("--xl", type=float, help="window lower edge x_l")
    common.add_argument("--xu", type=float, help="window upper edge x_u")
    common.add_argument("--d", type=float, help="window decay tuning constant")
    common.add_argument("--b", type=float, help="gridding window half-width")
    common.add_argument("--eps", type=float, help="gridding accuracy target")
    common.add_argument("--out", help="output directory")
    common.add_argument("--reps", type=int, help="bench repetitions (median taken)")
    sub.add_parser("solve", parents=[common],
                   help="write density tables per (model, i, t)")
    sub.add_parser("converge", parents=[common],
                   help="write error-vs-size tables and fitted slopes")
    sub.add_parser("bench", parents=[common],
                   help="write per-step timing tables")
    sub.add_parser("selftest", help="run built-in oracle checks")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "selftest":
        return cmd_selftest()
    try:
        config = resolve_config(args)
        command = {"solve": cmd_solve, "converge": cmd_converge,
                   "bench": cmd_bench}[args.command]
        return command(config)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
