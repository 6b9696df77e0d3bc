"""De Giorgi truncation iteration: nested level-set energies, the exponent
bookkeeping gamma, the no-spike implication, and the normalized sup bound.

The smallness threshold delta exists only existentially in the theory; here
it is calibrated by bisection over a training ensemble and frozen per
configuration (dimension, exponents, radii, ellipticity certificate).
Almost-everywhere conclusions become nodal max checks with an O(h) slack.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass

import numpy as np

from .caccioppoli import EstimateReport
from .domain_grid import ball_region, cutoff, nested_radii, truncation_levels
from .errors import (
    CalibrationRequiredError,
    GridTooCoarseError,
    InadmissibleExponentsError,
    PreconditionFailureError,
)
from .field_calculus import gradient
from .norm_engine import lp_norm, lp_norm_vec

# Nodal slack for almost-everywhere conclusions: max u <= 1 + NO_SPIKE_SLACK*h.
NO_SPIKE_SLACK = 2.0

# Energies below this floor count as identically zero in regression windows.
ENERGY_FLOOR = 1e-14

# Safety factor on the smallest admissible tau in two dimensions.
TAU_SAFETY_2D = 1.25


def default_tau(n: int, p: float, q: float) -> float:
    """Sobolev exponent 2n/(n-2) for n >= 3; for n = 2 the smallest value
    meeting both strict constraints, widened by a safety factor."""
    if n >= 3:
        return 2.0 * n / (n - 2.0)
    return TAU_SAFETY_2D * max(2.0 * p / (p - 1.0), 2.0 * q / (q - 2.0))


def gamma_exponent(n: int, p: float, q: float, tau: float) -> float:
    """Iteration gain min{1 - 2/tau, 2 - 4/tau - 2/p, 1 - 2/tau - 2/q} > 0."""
    if not p > n / 2:
        raise InadmissibleExponentsError(f"need p > n/2 = {n / 2}, got {p}", failing_term="p")
    if not q > n:
        raise InadmissibleExponentsError(f"need q > n = {n}, got {q}", failing_term="q")
    if n >= 3 and not math.isclose(tau, 2.0 * n / (n - 2.0), rel_tol=1e-12):
        raise InadmissibleExponentsError(
            f"n = {n} requires tau = 2n/(n-2) = {2 * n / (n - 2)}, got {tau}", failing_term="tau"
        )
    if n == 2 and not (tau > 2 * p / (p - 1) and tau > 2 * q / (q - 2)):
        raise InadmissibleExponentsError(
            f"n = 2 requires tau > max(2p/(p-1), 2q/(q-2)) = "
            f"{max(2 * p / (p - 1), 2 * q / (q - 2))}, got {tau}",
            failing_term="tau",
        )
    terms = {
        "sobolev": 1.0 - 2.0 / tau,
        "forcing": 2.0 - 4.0 / tau - 2.0 / p,
        "field": 1.0 - 2.0 / tau - 2.0 / q,
    }
    worst = min(terms, key=terms.get)
    gamma = terms[worst]
    if gamma <= 0:
        raise InadmissibleExponentsError(
            f"gamma = {gamma:.4g} <= 0; failing term: {worst}", failing_term=worst
        )
    return gamma


@dataclass
class DeGiorgiParams:
    """Exponents, radii and iteration depth for one truncation run."""

    n: int
    p: float
    q: float
    r: float
    R: float
    k_max: int = 4
    tau: float | None = None
    delta: float | None = None

    def __post_init__(self):
        if self.tau is None:
            self.tau = default_tau(self.n, self.p, self.q)
        if not 0 < self.r < self.R:
            raise ValueError(f"need 0 < r < R, got ({self.r}, {self.R})")
        if self.k_max < 3:
            raise ValueError(f"k_max must be >= 3, got {self.k_max}")
        if self.delta is not None and not 0 < self.delta < 1:
            raise ValueError(f"delta must lie in (0, 1), got {self.delta}")
        self.gamma = gamma_exponent(self.n, self.p, self.q, self.tau)

    @property
    def series_sums(self) -> tuple:
        """Diagnostic sums S1 = sum i (1+gamma)^-i and S2 = sum (1+gamma)^-i."""
        g = self.gamma
        s2 = (1.0 + g) / g
        s1 = (1.0 + g) / g**2
        return s1, s2


@dataclass
class IterationTrace:
    """Level/radius ladders, energies and per-step bound components."""

    b: np.ndarray
    r: np.ndarray
    E: np.ndarray
    rhs_parts: list  # per step k: dict(I1, I2, I3) or None if band unresolvable
    level_counts: np.ndarray  # nodes of {v_{k+1} > 0} within B_{rho_k}
    fitted_exponent: float
    regression_pairs: int
    sign: str = "plus"

    def monotone(self) -> bool:
        return bool(np.all(np.diff(self.E) <= 1e-15 * max(1.0, self.E[0])))

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["k", "b_k", "r_k", "E_k"])
            for k in range(len(self.E)):
                writer.writerow([k, self.b[k], self.r[k], self.E[k]])

    def summary(self, params: DeGiorgiParams) -> dict:
        return {
            "gamma": params.gamma,
            "delta": params.delta,
            "fitted_exponent": self.fitted_exponent,
            "regression_pairs": self.regression_pairs,
            "monotone": self.monotone(),
            "E0": float(self.E[0]),
            "E_final": float(self.E[-1]),
        }


def _fit_decay_exponent(E: np.ndarray):
    """Slope of log E_{k+1} against log E_k over the above-floor window."""
    xs, ys = [], []
    for k in range(len(E) - 1):
        if E[k] > ENERGY_FLOOR and E[k + 1] > ENERGY_FLOOR:
            xs.append(math.log(E[k]))
            ys.append(math.log(E[k + 1]))
    if len(xs) == 1:
        # a single transition still witnesses the gain against E_0 <= delta < 1
        return ys[0] / xs[0] if xs[0] != 0 else float("nan"), 1
    if len(xs) < 2:
        return float("nan"), len(xs)
    slope = np.polyfit(xs, ys, 1)[0]
    return float(slope), len(xs)


def truncation_sequence(sol, params: DeGiorgiParams, sign: str = "plus") -> IterationTrace:
    """Energies E_k = sum_{B_{r_k}} (u - b_k)_+^2 h^n down the nested ladders.

    ``sign`` picks the truncation side: "plus" tracks (u - b_k)_+, "minus"
    the symmetric (-u - b_k)_+, and "auto" whichever side carries the larger
    level-zero energy. Per-step right-hand parts mirror the truncated
    Caccioppoli bound with the step cutoff between r_{k+1} and
    (r_k + r_{k+1})/2; steps whose cutoff band falls under 4h report no parts
    (the energies themselves need no cutoff).
    """
    grid = sol.grid
    if (params.R - params.r) * 2.0 ** (-params.k_max) < 4 * grid.h:
        raise GridTooCoarseError(
            f"r_kmax - r = {(params.R - params.r) * 2.0 ** -params.k_max:.4g} < 4h; "
            "shrink k_max or refine the grid"
        )
    if sign not in ("plus", "minus", "auto"):
        raise ValueError(f"sign must be plus, minus or auto, got {sign}")
    b = truncation_levels(params.k_max)
    radii = nested_radii(params.r, params.R, params.k_max)
    hn = grid.h**grid.n
    u = sol.u.values
    if sign == "auto":
        outer = grid.radius_from(np.zeros(grid.n)) < params.R
        plus_mass = float((np.maximum(u, 0.0)[outer] ** 2).sum())
        minus_mass = float((np.maximum(-u, 0.0)[outer] ** 2).sum())
        sign = "plus" if plus_mass >= minus_mass else "minus"
    if sign == "minus":
        u = -u
    dist = grid.radius_from(np.zeros(grid.n))

    E = np.empty(params.k_max + 1)
    for k in range(params.k_max + 1):
        v = np.maximum(u - b[k], 0.0)
        E[k] = float((v[dist < radii[k]] ** 2).sum() * hn)

    rhs_parts = []
    counts = np.zeros(params.k_max, dtype=np.int64)
    f_abs = np.abs(sol.problem.f.values)
    F_sq = (sol.problem.F.components**2).sum(axis=0)
    for k in range(params.k_max):
        rho = 0.5 * (radii[k] + radii[k + 1])
        v_next = np.maximum(u - b[k + 1], 0.0)
        in_rho = dist < rho
        counts[k] = int(((v_next > 0) & in_rho).sum())
        if rho - radii[k + 1] < 4 * grid.h:
            rhs_parts.append(None)
            continue
        eta = cutoff(grid, radii[k + 1], rho).eta
        grad_eta_sq = (gradient(eta).components**2).sum(axis=0)
        pos = (v_next > 0) & in_rho
        rhs_parts.append(
            {
                "I1": float((v_next**2 * grad_eta_sq)[in_rho].sum() * hn),
                "I2": float((f_abs * eta.values**2 * v_next)[in_rho].sum() * hn),
                "I3": float(F_sq[pos].sum() * hn),
            }
        )

    fitted, pairs = _fit_decay_exponent(E)
    return IterationTrace(
        b=b, r=radii, E=E, rhs_parts=rhs_parts, level_counts=counts,
        fitted_exponent=fitted, regression_pairs=pairs, sign=sign,
    )


def level_count_bounds(trace: IterationTrace, hn: float) -> list:
    """Per-step discrete Chebyshev pairs (count * h^n, 2^{2(k+1)} E_k)."""
    out = []
    for k in range(len(trace.level_counts)):
        out.append((trace.level_counts[k] * hn, 4.0 ** (k + 1) * trace.E[k]))
    return out


@dataclass
class NoSpikeReport:
    delta: float
    data_norm: float
    e0_plus: float
    e0_minus: float
    max_u: float
    min_u: float
    tol: float
    plus_verified: bool
    minus_verified: bool

    @property
    def verified(self) -> bool:
        return self.plus_verified and self.minus_verified


def no_spike_verify(sol, params: DeGiorgiParams) -> NoSpikeReport:
    """If data norms <= 1 and the level-zero energies are below delta, the
    solution stays within [-1 - Ch, 1 + Ch] on the inner ball.

    Raises on unverified hypotheses; a false conclusion is returned as an
    unverified report, never raised.
    """
    if params.delta is None:
        raise CalibrationRequiredError("delta not calibrated; run calibrate_delta first")
    grid = sol.grid
    outer = ball_region(grid, 0.0, params.R)
    inner = ball_region(grid, 0.0, params.r)
    data_norm = (
        lp_norm(sol.problem.f, params.p, outer).value
        + lp_norm_vec(sol.problem.F, params.q, outer).value
    )
    if data_norm > 1.0 + 1e-12:
        raise PreconditionFailureError(f"data norms {data_norm:.4g} exceed 1")
    hn = grid.h**grid.n
    u = sol.u.values
    e0_plus = float((np.maximum(u, 0.0)[outer.mask] ** 2).sum() * hn)
    e0_minus = float((np.maximum(-u, 0.0)[outer.mask] ** 2).sum() * hn)
    # normalized positive solutions sit exactly at E_0 = delta; allow rounding
    ceiling = params.delta * (1.0 + 1e-9)
    if e0_plus > ceiling or e0_minus > ceiling:
        raise PreconditionFailureError(
            f"level-zero energies ({e0_plus:.4g}, {e0_minus:.4g}) exceed delta = {params.delta:.4g}"
        )
    tol = NO_SPIKE_SLACK * grid.h
    max_u = float(u[inner.mask].max())
    min_u = float(u[inner.mask].min())
    return NoSpikeReport(
        delta=params.delta,
        data_norm=data_norm,
        e0_plus=e0_plus,
        e0_minus=e0_minus,
        max_u=max_u,
        min_u=min_u,
        tol=tol,
        plus_verified=max_u <= 1.0 + tol,
        minus_verified=min_u >= -1.0 - tol,
    )


def normalization_factor(sol, params: DeGiorgiParams) -> float:
    """theta = sqrt(delta) / (||u||_2 + ||f||_p + ||F||_q) on the outer ball."""
    if params.delta is None:
        raise CalibrationRequiredError("delta not calibrated; run calibrate_delta first")
    grid = sol.grid
    outer = ball_region(grid, 0.0, params.R)
    denom = (
        lp_norm(sol.u, 2, outer).value
        + lp_norm(sol.problem.f, params.p, outer).value
        + lp_norm_vec(sol.problem.F, params.q, outer).value
    )
    return math.sqrt(params.delta) / denom


def normalize_solution(sol, params: DeGiorgiParams):
    """Scale (u, f, F, g) by theta; exact by linearity of the solution map."""
    theta = normalization_factor(sol, params)
    return sol.scaled(theta), theta


def calibrate_delta(
    solutions, params: DeGiorgiParams, iterations: int = 48
) -> float:
    """Largest delta in (0, 1) whose normalization keeps every training
    solution within the unit band on the inner ball (bisection; the check is
    monotone in delta). The returned value is also stored on ``params``.
    """
    grid = solutions[0].grid
    inner = ball_region(grid, 0.0, params.r)
    outer = ball_region(grid, 0.0, params.R)
    ratios = []
    for sol in solutions:
        denom = (
            lp_norm(sol.u, 2, outer).value
            + lp_norm(sol.problem.f, params.p, outer).value
            + lp_norm_vec(sol.problem.F, params.q, outer).value
        )
        sup = float(np.abs(sol.u.values[inner.mask]).max())
        ratios.append((sup, denom))

    def passes(delta: float) -> bool:
        theta = math.sqrt(delta)
        return all(theta * sup / denom <= 1.0 for sup, denom in ratios)

    lo, hi = 0.0, 1.0 - 1e-9  # delta lives in the open interval (0, 1)
    for _ in range(iterations):
        mid = 0.5 * (lo + hi)
        if passes(mid):
            lo = mid
        else:
            hi = mid
    delta = lo if lo > 0 else 0.5 * hi
    params.delta = delta
    return delta


def configuration_key(params: DeGiorgiParams, certificate: tuple) -> str:
    """Registry key freezing delta per (n, p, q, r, R, lam, Lam, L)."""
    lam, Lam, L = certificate
    return json.dumps(
        {
            "n": params.n, "p": params.p, "q": params.q,
            "r": params.r, "R": params.R,
            "lam": round(lam, 12), "Lam": round(Lam, 12), "L": round(L, 12),
        },
        sort_keys=True,
    )


def linf_bound(sol, params: DeGiorgiParams) -> EstimateReport:
    """sup bound report: ||u||_inf(B_r) vs delta^{-1/2} (||u||_2 + ||f||_p + ||F||_q)."""
    if params.delta is None:
        raise CalibrationRequiredError("delta not calibrated; run calibrate_delta first")
    grid = sol.grid
    inner = ball_region(grid, 0.0, params.r)
    outer = ball_region(grid, 0.0, params.R)
    lhs = lp_norm(sol.u, np.inf, inner).value
    factor = 1.0 / math.sqrt(params.delta)
    comps = {
        "u_l2": factor * lp_norm(sol.u, 2, outer).value,
        "f_lp": factor * lp_norm(sol.problem.f, params.p, outer).value,
        "F_lq": factor * lp_norm_vec(sol.problem.F, params.q, outer).value,
    }
    theta = normalization_factor(sol, params) if sum(comps.values()) > 0 else None
    return EstimateReport(
        "linf_bound", lhs, comps, (params.r, params.R), grid.m,
        sol.problem.fingerprint(),
        extra={"delta": params.delta, "theta": theta},
    )
