"""Executable Caccioppoli inequalities with empirical constant extraction.

Each check evaluates both sides of an interior energy inequality on concrete
radii and reports the realized ratio lhs / (sum of right-hand parts). The
inequalities carry existential constants, so single ratios are observations;
what the laboratory asserts is finiteness, homogeneity and stability of the
maximal ratio over ensembles with a common ellipticity certificate.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field as dfield
from pathlib import Path

import numpy as np

from .domain_grid import ball_region, cutoff
from .errors import IncompatibleEnsembleError, WrongVariantError
from .field_calculus import gradient
from .norm_engine import lp_norm, lp_norm_vec

RATIO_FLOOR = 1e-300


@dataclass
class EstimateReport:
    """One verified inequality instance: lhs, labeled rhs parts, ratio."""

    inequality: str
    lhs: float
    rhs_components: dict
    radii: tuple
    resolution: int
    fingerprint: str
    extra: dict = dfield(default_factory=dict)

    @property
    def rhs_total(self) -> float:
        return float(sum(self.rhs_components.values()))

    @property
    def ratio(self) -> float:
        if self.lhs == 0.0:
            return 0.0
        return self.lhs / max(self.rhs_total, RATIO_FLOOR)

    def to_row(self) -> dict:
        row = {
            "inequality": self.inequality,
            "lhs": self.lhs,
            "rhs_total": self.rhs_total,
            "ratio": self.ratio,
            "r": self.radii[0],
            "R": self.radii[1],
            "m": self.resolution,
            "fingerprint": self.fingerprint,
        }
        for name, value in self.rhs_components.items():
            row[f"rhs_{name}"] = value
        return row

    def to_json(self) -> str:
        return json.dumps(
            {
                "inequality": self.inequality,
                "lhs": self.lhs,
                "rhs_components": self.rhs_components,
                "radii": list(self.radii),
                "resolution": self.resolution,
                "fingerprint": self.fingerprint,
                "ratio": self.ratio,
                "extra": self.extra,
            }
        )


def append_reports_csv(path, reports) -> None:
    """Append one row per report; writes the header on first use."""
    path = Path(path)
    rows = [r.to_row() for r in reports]
    if not rows:
        return
    names = list(rows[0])
    names += sorted({k for row in rows for k in row} - set(names))
    fresh = not path.exists()
    with open(path, "a", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=names)
        if fresh:
            writer.writeheader()
        writer.writerows(rows)


def _radii_check(sol, r: float, R: float):
    grid = sol.grid
    if not 0 < r < R <= grid.half_width * (1 + 1e-12):
        raise ValueError(f"need 0 < r < R <= {grid.half_width}, got ({r}, {R})")
    # same resolvability rule as the cutoff the inequality's proof consumes
    cutoff(grid, r, R)


def caccioppoli_check(sol, r: float, R: float) -> EstimateReport:
    """||grad u||_{L2(B_r)} vs (R-r)^-1 ||u||_{L2(B_R)} + ||f||_2 + ||F||_2."""
    _radii_check(sol, r, R)
    grid = sol.grid
    inner, outer = ball_region(grid, 0.0, r), ball_region(grid, 0.0, R)
    lhs = lp_norm_vec(gradient(sol.u), 2, inner).value
    comps = {
        "u_over_band": lp_norm(sol.u, 2, outer).value / (R - r),
        "f": lp_norm(sol.problem.f, 2, outer).value,
        "F": lp_norm_vec(sol.problem.F, 2, outer).value,
    }
    return EstimateReport(
        "caccioppoli", lhs, comps, (r, R), grid.m, sol.problem.fingerprint()
    )


def caccioppoli_zero_rhs_check(sol, r: float, R: float) -> EstimateReport:
    """Zero-data variant, the engine of the polynomial Liouville decay chain."""
    if np.abs(sol.problem.f.values).max() != 0.0 or np.abs(sol.problem.F.components).max() != 0.0:
        raise WrongVariantError("zero-RHS variant needs f == 0 and F == 0")
    _radii_check(sol, r, R)
    grid = sol.grid
    inner, outer = ball_region(grid, 0.0, r), ball_region(grid, 0.0, R)
    lhs = lp_norm_vec(gradient(sol.u), 2, inner).value
    comps = {"u_over_band": lp_norm(sol.u, 2, outer).value / (R - r)}
    return EstimateReport(
        "caccioppoli_zero_rhs", lhs, comps, (r, R), grid.m, sol.problem.fingerprint()
    )


def truncated_caccioppoli(sol, b: float, sign: str, r: float, rho: float) -> EstimateReport:
    """Caccioppoli inequality for the truncation (u-b)_+ (or (u-b)_-).

    lhs  = sum over {v>0} of |grad_h(eta v)|^2 h^n  (gradient of the product
           field, matching what the energy actually sums);
    rhs  = sum v^2 |grad eta|^2, sum |f| eta^2 v, sum over {v>0} of |F|^2,
           all h^n-weighted. Level sets are strict nodal masks. The forcing
           part uses |f| so every reported component is nonnegative; it
           dominates the signed integral, so any constant verifying the
           signed inequality verifies this one.
    """
    if sign not in ("plus", "minus"):
        raise ValueError(f"sign must be 'plus' or 'minus', got {sign}")
    _radii_check(sol, r, rho)
    grid = sol.grid
    eta = cutoff(grid, r, rho).eta
    u = sol.u
    v = u.clip_positive_part(b) if sign == "plus" else u.clip_negative_part(b)
    pos = v.values > 0.0
    hn = grid.h**grid.n
    grad_eta_v = gradient(eta * v)
    grad_sq = (grad_eta_v.components**2).sum(axis=0)
    lhs = float(grad_sq[pos].sum() * hn)
    grad_eta_sq = (gradient(eta).components**2).sum(axis=0)
    comps = {
        "v_grad_eta": float((v.values**2 * grad_eta_sq).sum() * hn),
        "forcing": float((np.abs(sol.problem.f.values) * eta.values**2 * v.values).sum() * hn),
        "field_sq": float(((sol.problem.F.components**2).sum(axis=0))[pos].sum() * hn),
    }
    return EstimateReport(
        "truncated_caccioppoli",
        lhs,
        comps,
        (r, rho),
        grid.m,
        sol.problem.fingerprint(),
        extra={"level": b, "sign": sign, "level_set_nodes": int(pos.sum())},
    )


_VARIANTS = {
    "caccioppoli": caccioppoli_check,
    "caccioppoli_zero_rhs": caccioppoli_zero_rhs_check,
}


def empirical_constant(ensemble, r: float, R: float, variant: str = "caccioppoli"):
    """Max realized ratio across an ensemble sharing grid and (lam, Lam, L).

    Returns (constant, reports). The certificate under which the constant was
    measured is attached to each report.
    """
    if variant not in _VARIANTS:
        raise ValueError(f"unknown variant {variant!r}")
    ensemble = list(ensemble)
    if not ensemble:
        raise ValueError("ensemble must be nonempty")
    grid = ensemble[0].grid
    certs = np.array([[s.problem.A.lam, s.problem.A.Lam, s.problem.A.L] for s in ensemble])
    if any(s.grid != grid for s in ensemble):
        raise IncompatibleEnsembleError("ensemble members live on different grids")
    lam, Lam, L = certs[:, 0].min(), certs[:, 1].max(), certs[:, 2].max()
    check = _VARIANTS[variant]
    reports = []
    for k, sol in enumerate(ensemble):
        rep = check(sol, r, R)
        rep.extra.update({"instance": k, "lam": lam, "Lam": Lam, "L": L, "size": len(ensemble)})
        reports.append(rep)
    constant = max(rep.ratio for rep in reports)
    return constant, reports
