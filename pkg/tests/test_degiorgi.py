import math

import numpy as np
import pytest

from schauderlab.degiorgi import (
    DeGiorgiParams,
    calibrate_delta,
    configuration_key,
    default_tau,
    gamma_exponent,
    level_count_bounds,
    linf_bound,
    no_spike_verify,
    normalize_solution,
    truncation_sequence,
)
from schauderlab.domain_grid import ball_region, make_grid
from schauderlab.errors import (
    CalibrationRequiredError,
    GridTooCoarseError,
    InadmissibleExponentsError,
    PreconditionFailureError,
)
from schauderlab.field_calculus import Field, VecField
from schauderlab.elliptic_solver import CoefficientField, EllipticProblem, solve_dirichlet
from schauderlab.generators import sup_bound_ensemble


def constant_solution(grid, c, p=2.0, q=4.0):
    prob = EllipticProblem(
        A=CoefficientField.identity(grid),
        f=Field.zeros(grid),
        F=VecField.zeros(grid),
        g=Field.full(grid, c),
        p=p,
        q=q,
    )
    return solve_dirichlet(prob)


def test_gamma_hand_value():
    gamma = gamma_exponent(3, 2.0, 4.0, 6.0)
    assert math.isclose(gamma, 1.0 / 6.0, rel_tol=1e-12)


def test_gamma_large_exponent_limit():
    gamma = gamma_exponent(3, 1e12, 1e12, 6.0)
    assert math.isclose(gamma, 2.0 / 3.0, rel_tol=1e-9)


def test_gamma_inadmissible_p():
    with pytest.raises(InadmissibleExponentsError) as err:
        gamma_exponent(3, 1.5, 4.0, 6.0)
    assert err.value.failing_term == "p"


def test_gamma_wrong_tau_3d():
    with pytest.raises(InadmissibleExponentsError):
        gamma_exponent(3, 2.0, 4.0, 5.0)


def test_gamma_monotone_in_p_q():
    tau = 6.0
    ps = np.linspace(1.8, 20.0, 12)
    qs = np.linspace(3.5, 20.0, 12)
    for q in (4.0, 8.0):
        gammas = [gamma_exponent(3, p, q, tau) for p in ps]
        assert all(b >= a - 1e-15 for a, b in zip(gammas, gammas[1:]))
    for p in (2.0, 5.0):
        gammas = [gamma_exponent(3, p, q, tau) for q in qs]
        assert all(b >= a - 1e-15 for a, b in zip(gammas, gammas[1:]))


def test_default_tau_2d_satisfies_constraints():
    p, q = 2.0, 4.0
    tau = default_tau(2, p, q)
    assert tau > 2 * p / (p - 1) and tau > 2 * q / (q - 2)
    gamma_exponent(2, p, q, tau)  # must be admissible


def test_params_validation():
    with pytest.raises(ValueError):
        DeGiorgiParams(n=2, p=2.0, q=4.0, r=0.8, R=0.5)
    with pytest.raises(ValueError):
        DeGiorgiParams(n=2, p=2.0, q=4.0, r=0.5, R=1.0, k_max=2)
    params = DeGiorgiParams(n=2, p=2.0, q=4.0, r=0.5, R=1.0)
    s1, s2 = params.series_sums
    g = params.gamma
    assert s2 == pytest.approx(sum((1 + g) ** -i for i in range(200)), rel=1e-8)
    assert s1 == pytest.approx(sum(i * (1 + g) ** -i for i in range(400)), rel=1e-6)


def test_trace_zero_solution(grid129):
    params = DeGiorgiParams(n=2, p=2.0, q=4.0, r=0.5, R=1.0, k_max=3)
    trace = truncation_sequence(constant_solution(grid129, 0.0), params)
    assert np.all(trace.E == 0.0)
    assert trace.monotone()


def test_trace_constant_half():
    # oracle by direct summation: E_0 = (1/4) area(B_1), E_1 = 0 at b_1 = 1/2
    grid = make_grid(2, 1.0, 129)
    params = DeGiorgiParams(n=2, p=2.0, q=4.0, r=0.5, R=1.0, k_max=3)
    trace = truncation_sequence(constant_solution(grid, 0.5), params)
    assert abs(trace.E[0] / (0.25 * np.pi) - 1.0) < 0.01
    assert trace.E[1] <= 1e-20  # solver rounding keeps it at the floor
    np.testing.assert_array_equal(trace.b, [0.0, 0.5, 0.75, 0.875])
    np.testing.assert_array_equal(trace.r, [1.0, 0.75, 0.625, 0.5625])


def test_trace_requires_resolvable_ladder(grid65):
    params = DeGiorgiParams(n=2, p=2.0, q=4.0, r=0.5, R=1.0, k_max=3)
    with pytest.raises(GridTooCoarseError):
        truncation_sequence(constant_solution(grid65, 0.0), params)


def test_trace_sign_variants(grid129):
    params = DeGiorgiParams(n=2, p=2.0, q=4.0, r=0.5, R=1.0, k_max=3)
    sol = constant_solution(grid129, -0.6)
    plus = truncation_sequence(sol, params, sign="plus")
    minus = truncation_sequence(sol, params, sign="minus")
    auto = truncation_sequence(sol, params, sign="auto")
    assert np.all(plus.E == 0.0)
    assert minus.E[0] > 0.0
    assert auto.sign == "minus"


def test_level_count_chebyshev(grid129, rng):
    from schauderlab.generators import random_problem

    params = DeGiorgiParams(n=2, p=4.0, q=8.0, r=0.5, R=1.0, k_max=3)
    sol = solve_dirichlet(random_problem(grid129, rng))
    scale = 0.9 / max(np.abs(sol.u.values).max(), 1e-12)
    trace = truncation_sequence(sol.scaled(scale), params)
    for count_hn, bound in level_count_bounds(trace, grid129.h**2):
        assert count_hn <= bound * (1 + 1e-12)


def test_no_spike_trivial_zero(grid129):
    params = DeGiorgiParams(n=2, p=2.0, q=4.0, r=0.5, R=1.0, k_max=3, delta=0.25)
    report = no_spike_verify(constant_solution(grid129, 0.0), params)
    assert report.verified


def test_no_spike_near_threshold(grid129):
    params = DeGiorgiParams(n=2, p=2.0, q=4.0, r=0.5, R=1.0, k_max=3, delta=0.999)
    c = 1.0 - 1e-6
    sol = constant_solution(grid129, c)
    if np.pi * c**2 <= params.delta:  # precondition E_0 <= delta
        report = no_spike_verify(sol, params)
        assert report.plus_verified
    else:
        with pytest.raises(PreconditionFailureError):
            no_spike_verify(sol, params)


def test_no_spike_requires_calibration(grid129):
    params = DeGiorgiParams(n=2, p=2.0, q=4.0, r=0.5, R=1.0, k_max=3)
    with pytest.raises(CalibrationRequiredError):
        no_spike_verify(constant_solution(grid129, 0.0), params)


def test_no_spike_data_norm_precondition(grid129):
    params = DeGiorgiParams(n=2, p=2.0, q=4.0, r=0.5, R=1.0, k_max=3, delta=0.5)
    prob = EllipticProblem(
        A=CoefficientField.identity(grid129),
        f=Field.full(grid129, 5.0),
        F=VecField.zeros(grid129),
        g=Field.zeros(grid129),
    )
    with pytest.raises(PreconditionFailureError):
        no_spike_verify(solve_dirichlet(prob), params)


def test_calibrated_ensemble_verifies(grid129):
    params = DeGiorgiParams(n=2, p=2.0, q=4.0, r=0.5, R=1.0, k_max=3)
    sols = [solve_dirichlet(p) for p in sup_bound_ensemble(grid129, 8, seed=4)]
    delta = calibrate_delta(sols, params)
    assert 0.0 < delta < 1.0
    for sol in sols:
        normalized, theta = normalize_solution(sol, params)
        assert theta > 0
        report = no_spike_verify(normalized, params)
        assert report.verified
        trace = truncation_sequence(normalized, params, sign="auto")
        assert trace.monotone()
        assert not math.isnan(trace.fitted_exponent)
        assert trace.fitted_exponent >= 1.0 + params.gamma / 2


def test_normalization_scale_equivariance(grid129):
    params = DeGiorgiParams(n=2, p=2.0, q=4.0, r=0.5, R=1.0, k_max=3, delta=0.3)
    sols = [solve_dirichlet(p) for p in sup_bound_ensemble(grid129, 2, seed=6)]
    sol = sols[0]
    n1, theta1 = normalize_solution(sol, params)
    n2, theta2 = normalize_solution(sol.scaled(10.0), params)
    assert theta2 == pytest.approx(theta1 / 10.0, rel=1e-12)
    assert np.abs(n1.u.values - n2.u.values).max() < 1e-12


def test_linf_bound_report(grid129):
    params = DeGiorgiParams(n=2, p=2.0, q=4.0, r=0.5, R=1.0, k_max=3, delta=0.25)
    sol = constant_solution(grid129, 0.2)
    report = linf_bound(sol, params)
    assert report.lhs == pytest.approx(0.2, abs=1e-10)
    assert report.ratio <= 1.0
    assert report.extra["delta"] == 0.25
    # rhs equals delta^{-1/2} when the data norms sum to one
    outer = ball_region(grid129, 0.0, 1.0)
    from schauderlab.norm_engine import lp_norm

    u_norm = lp_norm(sol.u, 2, outer).value
    scaled = sol.scaled(1.0 / u_norm)
    report1 = linf_bound(scaled, params)
    assert report1.rhs_total == pytest.approx(1.0 / math.sqrt(0.25), rel=1e-12)


def test_linf_bound_zero_solution(grid129):
    params = DeGiorgiParams(n=2, p=2.0, q=4.0, r=0.5, R=1.0, k_max=3, delta=0.25)
    report = linf_bound(constant_solution(grid129, 0.0), params)
    assert report.lhs == 0.0 and report.ratio == 0.0


def test_configuration_key_stable():
    params = DeGiorgiParams(n=2, p=2.0, q=4.0, r=0.5, R=1.0, k_max=3, delta=0.3)
    key_a = configuration_key(params, (1.0, 1.5, 1.5))
    key_b = configuration_key(params, (1.0, 1.5, 1.5))
    assert key_a == key_b
    assert "0.5" in key_a


def test_linf_bound_across_singular_family():
    # one calibrated delta covers the whole singular-forcing family
    from schauderlab.generators import radial_singular_problem

    grid = make_grid(2, 1.0, 129)
    params = DeGiorgiParams(n=2, p=4.0, q=8.0, r=0.5, R=1.0, k_max=3)
    sols = [
        solve_dirichlet(radial_singular_problem(grid, s)[0]) for s in (0.3, 0.5, 0.8)
    ]
    calibrate_delta(sols, params)
    for sol in sols:
        report = linf_bound(sol, params)
        assert report.ratio <= 1.0 + 1e-9  # bound holds with the frozen delta


def test_trace_csv_and_summary(tmp_path, grid129):
    params = DeGiorgiParams(n=2, p=2.0, q=4.0, r=0.5, R=1.0, k_max=3, delta=0.5)
    trace = truncation_sequence(constant_solution(grid129, 0.6), params)
    path = tmp_path / "trace.csv"
    trace.to_csv(path)
    lines = path.read_text().strip().splitlines()
    assert lines[0].startswith("k,")
    assert len(lines) == params.k_max + 2
    summary = trace.summary(params)
    assert summary["monotone"] and summary["delta"] == 0.5
