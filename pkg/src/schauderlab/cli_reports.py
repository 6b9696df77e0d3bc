"""Experiment orchestration and report emission.

Each subcommand runs one laboratory experiment from an ExperimentConfig
(JSON file plus flag overrides), writes CSV tables (RFC 4180), a JSON
summary, and a plain-text verdict with one PASS/FAIL/OBSERVED line per
checked inequality. PASS/FAIL is reserved for checks with both sides
computable; empirical constants are OBSERVED. Fixed seed and config give
byte-identical CSV output on one platform.

Exit codes: 0 all checks pass, 1 any FAIL, 2 configuration error.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from dataclasses import dataclass, field as dfield
from pathlib import Path

import numpy as np

from . import degiorgi, generators, liouville_lab
from .caccioppoli import append_reports_csv, empirical_constant, truncated_caccioppoli
from .domain_grid import box_region, make_grid
from .elliptic_solver import solve_dirichlet
from .errors import (
    DegreeUndetectedError,
    NotHarmonicParametersError,
    NothingToPlotError,
    SchauderLabError,
)
from .field_calculus import Field, mollify
from .norm_engine import lp_norm
from .schauder_harness import (
    SchauderConfig,
    blowup_sequence,
    bootstrap_ckalpha,
    measure_pointwise_exponent,
    regularize_approximate,
    schauder_ratio,
)

COMMANDS = (
    "solve", "caccioppoli", "degiorgi", "liouville",
    "schauder", "blowup", "bootstrap", "mollify",
)


@dataclass
class ExperimentConfig:
    command: str
    out_dir: Path
    seed: int = 0
    resolution: int = 129
    params: dict = dfield(default_factory=dict)

    def __post_init__(self):
        if self.command not in COMMANDS:
            raise ValueError(f"unknown command {self.command!r}; known: {COMMANDS}")
        self.out_dir = Path(self.out_dir)


def load_config(path, overrides=None) -> ExperimentConfig:
    spec = json.loads(Path(path).read_text())
    overrides = overrides or {}
    merged = {**spec, **{k: v for k, v in overrides.items() if v is not None}}
    return ExperimentConfig(
        command=merged["command"],
        out_dir=merged.get("out", "reports"),
        seed=int(merged.get("seed", 0)),
        resolution=int(merged.get("resolution", 129)),
        params=merged.get("params", {}),
    )


def _fmt(value) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)


def write_csv(path, fieldnames, rows) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(fieldnames)
        for row in rows:
            writer.writerow([_fmt(row[name]) for name in fieldnames])


@dataclass
class Verdict:
    checks: list = dfield(default_factory=list)

    def record(self, status: str, name: str, detail: str) -> None:
        self.checks.append((status, name, detail))

    def ok(self, name: str, passed: bool, detail: str) -> None:
        self.record("PASS" if passed else "FAIL", name, detail)

    def observed(self, name: str, detail: str) -> None:
        self.record("OBSERVED", name, detail)

    @property
    def failed(self) -> bool:
        return any(status == "FAIL" for status, _, _ in self.checks)

    def write(self, path) -> None:
        with open(path, "w", encoding="ascii") as fh:
            for status, name, detail in self.checks:
                fh.write(f"{status} {name}: {detail}\n")


# -- experiments --------------------------------------------------------------


def _run_solve(cfg: ExperimentConfig, verdict: Verdict) -> dict:
    resolutions = cfg.params.get("resolutions", [65, 129, 257])
    errors = []
    rows = []
    for m in resolutions:
        grid = make_grid(2, 1.0, m)
        prob, exact = generators.sine_forcing_problem(grid)
        sol = solve_dirichlet(prob)
        err = float(np.abs(sol.u.values - exact.values).max())
        errors.append(err)
        rows.append(
            {
                "m": m, "max_err": err,
                "iterations": sol.diagnostics["iterations"],
                "residual": sol.diagnostics["residual"],
                "ratio": errors[-2] / err if len(errors) > 1 else float("nan"),
            }
        )
    write_csv(cfg.out_dir / "solve_convergence.csv",
              ["m", "max_err", "ratio", "iterations", "residual"], rows)
    ratios = [row["ratio"] for row in rows[1:]]
    verdict.ok(
        "manufactured_convergence_order",
        all(3.5 <= r <= 4.5 for r in ratios),
        f"refinement ratios {['%.3f' % r for r in ratios]} target [3.5, 4.5]",
    )
    grid = make_grid(2, 1.0, 129)
    prob, exact = generators.harmonic_saddle_problem(grid)
    sol = solve_dirichlet(prob)
    err = float(np.abs(sol.u.values - exact.values).max())
    verdict.ok("exact_discrete_harmonic", err <= 1e-10, f"max error {err:.3e} <= 1e-10")
    return {"errors": errors, "harmonic_error": err}


def _run_caccioppoli(cfg: ExperimentConfig, verdict: Verdict) -> dict:
    m = cfg.resolution
    size = int(cfg.params.get("ensemble", 8))
    r = float(cfg.params.get("r", 0.5))
    R = float(cfg.params.get("R", 0.95))
    grid = make_grid(2, 1.0, m)
    problems = generators.random_ensemble(grid, size, cfg.seed)
    sols = [solve_dirichlet(p) for p in problems]
    constant, reports = empirical_constant(sols, r, R, "caccioppoli")
    append_reports_csv(cfg.out_dir / "caccioppoli_reports.csv", reports)
    with open(cfg.out_dir / "caccioppoli_reports.json", "w") as fh:
        fh.write("[" + ",\n".join(rep.to_json() for rep in reports) + "]\n")
    verdict.ok(
        "caccioppoli_ratios_finite",
        all(math.isfinite(rep.ratio) for rep in reports),
        f"{len(reports)} instances at m={m}",
    )
    verdict.observed("caccioppoli_empirical_constant", f"max ratio {constant:.4f} over {size} instances")
    # truncated variant at the ensemble medians
    trunc_ok = True
    for sol in sols:
        b = float(np.median(sol.u.values))
        rep = truncated_caccioppoli(sol, b, "plus", r, R)
        trunc_ok &= math.isfinite(rep.ratio)
    verdict.ok("truncated_caccioppoli_ratios_finite", trunc_ok, f"level = per-instance median, {size} instances")
    return {"constant": constant, "ensemble": size, "m": m}


def _run_degiorgi(cfg: ExperimentConfig, verdict: Verdict) -> dict:
    m = cfg.resolution
    size = int(cfg.params.get("ensemble", 50))
    params = degiorgi.DeGiorgiParams(
        n=2,
        p=float(cfg.params.get("p", 2.0)),
        q=float(cfg.params.get("q", 4.0)),
        r=float(cfg.params.get("r", 0.5)),
        R=float(cfg.params.get("R", 1.0)),
        k_max=int(cfg.params.get("k_max", 3)),
    )
    gamma = degiorgi.gamma_exponent(3, 2.0, 4.0, 6.0)
    verdict.ok(
        "gamma_formula_hand_value",
        math.isclose(gamma, 1.0 / 6.0, rel_tol=1e-12),
        f"gamma(n=3, tau=6, p=2, q=4) = {gamma!r} vs 1/6",
    )
    grid = make_grid(2, 1.0, m)
    sols = [solve_dirichlet(p) for p in generators.sup_bound_ensemble(grid, size, cfg.seed)]
    delta = degiorgi.calibrate_delta(sols, params)
    rows = []
    all_ok = all_mono = True
    min_fit = float("inf")
    for k, sol in enumerate(sols):
        normalized, theta = degiorgi.normalize_solution(sol, params)
        report = degiorgi.no_spike_verify(normalized, params)
        trace = degiorgi.truncation_sequence(normalized, params, sign="auto")
        all_ok &= report.verified
        all_mono &= trace.monotone()
        if not math.isnan(trace.fitted_exponent):
            min_fit = min(min_fit, trace.fitted_exponent)
        else:
            all_ok = False
        row = {
            "instance": k, "theta": theta, "sign": trace.sign,
            "verified": report.verified, "fitted_exponent": trace.fitted_exponent,
            "pairs": trace.regression_pairs,
        }
        for j, e in enumerate(trace.E):
            row[f"E{j}"] = float(e)
        rows.append(row)
    names = ["instance", "theta", "sign", "verified", "fitted_exponent", "pairs"] + [
        f"E{j}" for j in range(params.k_max + 1)
    ]
    write_csv(cfg.out_dir / "degiorgi_traces.csv", names, rows)
    with open(cfg.out_dir / "degiorgi_summary.json", "w") as fh:
        json.dump(
            {
                "delta": delta, "gamma": params.gamma, "tau": params.tau,
                "ensemble": size, "m": m, "min_fitted_exponent": min_fit,
                "series_sums": params.series_sums,
            },
            fh, indent=2,
        )
    verdict.ok("no_spike_all_instances", all_ok, f"{size} normalized instances, delta = {delta:.6g}")
    verdict.ok("iteration_traces_monotone", all_mono, "E_{k+1} <= E_k on every trace")
    verdict.ok(
        "fitted_decay_superlinear",
        min_fit >= 1.0 + params.gamma / 2,
        f"min fitted exponent {min_fit:.3f} >= 1 + gamma/2 = {1 + params.gamma / 2:.3f}",
    )
    verdict.observed("delta_calibrated", f"delta = {delta!r} frozen for this configuration")
    return {"delta": delta, "gamma": params.gamma, "min_fit": min_fit}


_LIOUVILLE_GENERATORS = {
    "saddle": (lambda x, y: x**2 - y**2, 2.0),
    "linear": (lambda x, y: 0.7 * x - 0.2 * y + 0.3, 1.5),
    "constant": (lambda x, y: np.full_like(x, 3.0), 0.5),
}


def _run_liouville(cfg: ExperimentConfig, verdict: Verdict) -> dict:
    kind = cfg.params.get("generator", "saddle")
    m = cfg.resolution
    rows = []
    summary = {}
    if kind == "counterexample":
        a = tuple(cfg.params.get("a", (1.0, 0.0)))
        b = tuple(cfg.params.get("b", (0.0, 1.0)))
        gamma = float(cfg.params.get("gamma", 10.0))
        fam = liouville_lab.growth_family(
            liouville_lab.counterexample_generator(a, b), gamma,
            scales=cfg.params.get("scales", liouville_lab.DISCRIMINATION_SCALES), m=m,
        )
    else:
        gen, gamma_default = _LIOUVILLE_GENERATORS[kind]
        gamma = float(cfg.params.get("gamma", gamma_default))
        fam = liouville_lab.growth_family(
            gen, gamma, scales=cfg.params.get("scales", liouville_lab.DEFAULT_SCALES), m=m
        )
    gate = fam.harmonic_gate()
    verdict.ok(
        "harmonic_residual_gate",
        gate["passed"],
        f"{kind}: residual O(h^2) at scales {list(fam.scales)}",
    )
    for k in (1, 2, 3):
        scan = liouville_lab.derivative_energy_scan(fam, k)
        for scale, energy in zip(scan.scales, scan.energies):
            rows.append({"order": k, "scale": float(scale), "energy": float(energy),
                         "slope": scan.slope, "at_floor": scan.at_floor})
        summary[f"slope_k{k}"] = scan.slope
        summary[f"floor_k{k}"] = scan.at_floor
    write_csv(cfg.out_dir / "liouville_scan.csv",
              ["order", "scale", "energy", "slope", "at_floor"], rows)
    growth = liouville_lab.verify_growth(fam)
    if kind == "counterexample":
        verdict.ok(
            "superpolynomial_growth_rejected",
            not growth["verified"],
            f"max window slope {growth['max_slope']:.2f} exceeds gamma = {gamma}",
        )
        try:
            liouville_lab.polynomial_degree_detect(fam)
            verdict.ok("degree_undetected", False, "a degree was detected for the counterexample")
        except DegreeUndetectedError:
            verdict.ok("degree_undetected", True, "no derivative order up to 3 annihilates the field")
        except NotHarmonicParametersError:
            verdict.ok("degree_undetected", False, "failed the harmonic gate instead")
    else:
        verdict.ok(
            "growth_tag_verified", growth["verified"],
            f"max window slope {growth['max_slope']:.3f} <= gamma = {gamma}",
        )
        degree = liouville_lab.polynomial_degree_detect(fam)
        verdict.ok(
            "degree_within_growth_tag", degree <= math.floor(gamma),
            f"detected degree {degree} <= floor(gamma) = {math.floor(gamma)}",
        )
        summary["degree"] = degree
    summary["max_window_slope"] = growth["max_slope"]
    with open(cfg.out_dir / "liouville_summary.json", "w") as fh:
        json.dump(summary, fh, indent=2)
    return summary


def _run_schauder(cfg: ExperimentConfig, verdict: Verdict) -> dict:
    m = cfg.resolution
    s = float(cfg.params.get("s", 0.5))
    grid = make_grid(2, 1.0, m)
    prob, exact = generators.radial_singular_problem(grid, s)
    sol = solve_dirichlet(prob)
    measured = measure_pointwise_exponent(sol.u, (0.0, 0.0), 0.03, 0.4)
    target = 2.0 - s
    verdict.ok(
        "singular_family_threshold_exponent",
        abs(measured["exponent"] - target) <= 0.05 * target,
        f"measured {measured['exponent']:.4f} vs 2 - s = {target}",
    )
    size = int(cfg.params.get("ensemble", 10))
    alpha = 0.7 * 0.75  # 0.7 * admissible threshold for (p, q) = (4, 8)
    scfg = SchauderConfig(order=0, alpha=alpha, p=4.0, q=8.0, r=0.3, R=0.8)
    reports = []
    for k in range(size):
        rng = np.random.default_rng([cfg.seed, k])
        problem = generators.random_problem(grid, rng, rough_alpha=0.6)
        reports.append(schauder_ratio(solve_dirichlet(problem), scfg))
    append_reports_csv(cfg.out_dir / "schauder_reports.csv", reports)
    finite = all(math.isfinite(rep.ratio) for rep in reports)
    verdict.ok("schauder_ratios_finite", finite, f"{size} rough-coefficient instances, alpha = {alpha}")
    verdict.observed(
        "schauder_max_ratio", f"{max(rep.ratio for rep in reports):.4f} at m = {m}"
    )
    return {"exponent": measured["exponent"], "alpha": alpha}


def _run_blowup(cfg: ExperimentConfig, verdict: Verdict) -> dict:
    m = cfg.resolution
    alpha = float(cfg.params.get("alpha", 0.5))
    grid = make_grid(2, 1.0, m)
    u = Field(grid, grid.radius_from(np.zeros(grid.n)) ** alpha)
    scfg = SchauderConfig(order=0, alpha=alpha, p=4.0, q=8.0, r=0.2, R=0.8)
    record = blowup_sequence(u, scfg, steps=int(cfg.params.get("steps", 2)))
    step = record.steps[0]
    centre = tuple(step.v.grid.m // 2 for _ in range(grid.n))
    rows = [
        {
            "step": k, "x": str(st.x), "y": str(st.y), "separation": st.separation,
            "level": st.level, "v_seminorm": st.v_seminorm,
            "fit": float("nan") if st.fit is None else st.fit.exponent,
        }
        for k, st in enumerate(record.steps)
    ]
    write_csv(cfg.out_dir / "blowup_steps.csv",
              ["step", "x", "y", "separation", "level", "v_seminorm", "fit"], rows)
    verdict.ok("blowup_origin_pinned", step.v.values[centre] == 0.0, "v(0) = 0 exactly")
    verdict.ok(
        "blowup_seminorm_normalized", step.v_seminorm <= 1.05,
        f"[v] = {step.v_seminorm:.4f} <= 1.05",
    )
    verdict.ok(
        "blowup_growth_exponent",
        abs(record.growth_exponent - alpha) <= 0.1 * alpha,
        f"fitted {record.growth_exponent:.4f} vs alpha = {alpha}",
    )
    return {"growth_exponent": record.growth_exponent}


def _run_bootstrap(cfg: ExperimentConfig, verdict: Verdict) -> dict:
    m = cfg.resolution
    grid = make_grid(2, 1.0, m)
    rng = np.random.default_rng(cfg.seed)
    problem = generators.random_problem(grid, rng, beta=0.15, p=4.0, q=8.0)
    report = bootstrap_ckalpha(problem, int(cfg.params.get("k", 2)),
                               float(cfg.params.get("alpha", 0.4)), 0.25, 0.8)
    rows = []
    for level, reps in enumerate(report.levels, start=1):
        for rep in reps:
            rows.append({"level": level, "inequality": rep.inequality,
                         "lhs": rep.lhs, "rhs": rep.rhs_total, "ratio": rep.ratio})
    write_csv(cfg.out_dir / "bootstrap_levels.csv",
              ["level", "inequality", "lhs", "rhs", "ratio"], rows)
    finite = all(math.isfinite(row["ratio"]) for row in rows)
    verdict.ok("bootstrap_levels_finite", finite, f"{len(rows)} stage estimates")
    verdict.ok(
        "bootstrap_assembly_consistent", report.consistent,
        f"direct norm {report.assembled_norm:.4f} <= assembled bound {report.assembly_bound:.4f}",
    )
    verdict.observed("bootstrap_chained_constant", f"{report.chained_constant:.4f}")
    return {"chained": report.chained_constant}


def _run_mollify(cfg: ExperimentConfig, verdict: Verdict) -> dict:
    m = cfg.resolution
    grid = make_grid(2, 1.0, m)
    rng = np.random.default_rng(cfg.seed)
    box = box_region(grid)
    contraction_ok = True
    trials = int(cfg.params.get("fields", 100))
    for _ in range(trials):
        g_field = Field(grid, rng.standard_normal(grid.shape))
        smooth = mollify(g_field, 4 * grid.h)
        contraction_ok &= (
            lp_norm(smooth, 2, box).value <= lp_norm(g_field, 2, box).value
        )
    verdict.ok("mollifier_l2_contraction", contraction_ok, f"{trials} random fields, exact inequality")
    problem = generators.random_problem(grid, rng, rough_alpha=0.4)
    schedule = cfg.params.get("eps_schedule")
    if schedule is None:
        schedule = [8 * grid.h, 4 * grid.h, 2 * grid.h * 1.01]
    record = regularize_approximate(problem, schedule)
    write_csv(cfg.out_dir / "mollify_convergence.csv",
              ["eps", "h1_gap", "l2", "lam_eps", "L_eps", "iterations"], record.rows)
    verdict.ok("approximation_h1_decreasing", record.decreasing,
               f"gaps {['%.3e' % row['h1_gap'] for row in record.rows]}")
    verdict.ok("approximation_l2_bound", record.l2_bound_ok, "||u_eps||_2 <= 2 ||u||_2")
    verdict.ok("mollified_ellipticity_envelope", record.ellipticity_ok,
               "lam_eps >= lam, Lam_eps <= Lam, L_eps <= L")
    return {"gaps": [row["h1_gap"] for row in record.rows]}


_RUNNERS = {
    "solve": _run_solve,
    "caccioppoli": _run_caccioppoli,
    "degiorgi": _run_degiorgi,
    "liouville": _run_liouville,
    "schauder": _run_schauder,
    "blowup": _run_blowup,
    "bootstrap": _run_bootstrap,
    "mollify": _run_mollify,
}


def run(cfg: ExperimentConfig) -> Verdict:
    """Execute one experiment; writes tables, summary.json and verdict.txt."""
    cfg.out_dir.mkdir(parents=True, exist_ok=True)
    verdict = Verdict()
    summary = _RUNNERS[cfg.command](cfg, verdict)
    payload = {
        "command": cfg.command, "seed": cfg.seed, "resolution": cfg.resolution,
        "summary": summary,
        "checks": [{"status": s, "name": n, "detail": d} for s, n, d in verdict.checks],
    }
    with open(cfg.out_dir / "summary.json", "w") as fh:
        json.dump(payload, fh, indent=2)
    verdict.write(cfg.out_dir / "verdict.txt")
    return verdict


# -- plot script emission ------------------------------------------------------

_PLOTTABLE = {
    "degiorgi_traces.csv": (
        "degiorgi_traces.gp",
        """set datafile separator ','
set logscale y
set xlabel 'iteration k'
set ylabel 'level-set energy E_k'
set title 'Truncation iteration traces'
plot for [col=7:{last}] 'degiorgi_traces.csv' using (column(0)):col skip 1 with linespoints notitle
""",
    ),
    "liouville_scan.csv": (
        "liouville_scan.gp",
        """set datafile separator ','
set logscale xy
set xlabel 'scale R'
set ylabel 'derivative energy'
set title 'Derivative energy vs scale (fitted slope {slope})'
plot 'liouville_scan.csv' using 2:3 skip 1 with points notitle
""",
    ),
    "solve_convergence.csv": (
        "solve_convergence.gp",
        """set datafile separator ','
set logscale xy
set xlabel 'nodes per axis m'
set ylabel 'max error'
set title 'Manufactured-solution convergence'
plot 'solve_convergence.csv' using 1:2 skip 1 with linespoints notitle
""",
    ),
}


def emit_plots(report_dir) -> list:
    """Write gnuplot scripts next to the tables they visualize."""
    report_dir = Path(report_dir)
    written = []
    for table, (script_name, template) in _PLOTTABLE.items():
        source = report_dir / table
        if not source.exists():
            continue
        text = template
        if "{last}" in text:
            header = source.read_text().splitlines()[0].split(",")
            text = text.replace("{last}", str(len(header)))
        if "{slope}" in text:
            slope = ""
            summary = report_dir / "liouville_summary.json"
            if summary.exists():
                slope = f"{json.loads(summary.read_text()).get('slope_k1', float('nan')):.3f}"
            text = text.replace("{slope}", slope)
        (report_dir / script_name).write_text(text)
        written.append(script_name)
    if not written:
        raise NothingToPlotError(f"no plottable tables under {report_dir}")
    return written


# -- command line ---------------------------------------------------------------


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="schauderlab",
        description="Interior elliptic estimate experiments: solve, verify, report.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        cmd = sub.add_parser(name)
        cmd.add_argument("--config", type=Path, default=None)
        cmd.add_argument("--out", type=Path, default=None)
        cmd.add_argument("--seed", type=int, default=None)
        cmd.add_argument("--resolution", type=int, default=None)
    plots = sub.add_parser("plots")
    plots.add_argument("--out", type=Path, required=True)

    args = parser.parse_args(argv)
    try:
        if args.command == "plots":
            emit_plots(args.out)
            return 0
        if args.config is not None:
            cfg = load_config(
                args.config,
                {"out": args.out, "seed": args.seed, "resolution": args.resolution},
            )
            if cfg.command != args.command:
                raise ValueError(
                    f"config command {cfg.command!r} does not match subcommand {args.command!r}"
                )
        else:
            cfg = ExperimentConfig(
                command=args.command,
                out_dir=args.out if args.out is not None else Path("reports") / args.command,
                seed=args.seed if args.seed is not None else 0,
                resolution=args.resolution if args.resolution is not None else 129,
            )
    except (SchauderLabError, ValueError, KeyError, OSError, json.JSONDecodeError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    try:
        verdict = run(cfg)
    except (SchauderLabError, ValueError) as exc:
        print(f"configuration error ({cfg.command}): {exc}", file=sys.stderr)
        return 2
    for status, name, detail in verdict.checks:
        print(f"{status} {name}: {detail}")
    return 1 if verdict.failed else 0


if __name__ == "__main__":
    raise SystemExit(main())
