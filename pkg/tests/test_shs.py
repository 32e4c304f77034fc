import numpy as np
import pytest

from aoiq.shs import (
    RESET_ZERO,
    NegativeSolutionError,
    ReducibleChainError,
    ResetMap,
    ShsModel,
    ShsTransition,
    SingularSystemError,
    average_aoi,
    solve_v_system,
    stationary_distribution,
)


def _mm11_model(lambda1, lambda_rest, theta, mu):
    """Hand-built preemptive single-server model: states {empty, busy},
    age vector (monitor, in-service)."""
    c0 = ResetMap((0, RESET_ZERO))  # x0 kept, slot cleared
    fresh = ResetMap((0, RESET_ZERO))  # new source-1 update, age 0
    stale = ResetMap((0, 0))  # background update carries the monitor age
    deliver = ResetMap((1, RESET_ZERO))
    transitions = [
        ShsTransition(0, 1, lambda1, fresh),
        ShsTransition(1, 1, lambda1, fresh),
        ShsTransition(1, 0, mu, deliver),
    ]
    if lambda_rest > 0:
        transitions += [
            ShsTransition(0, 1, lambda_rest, stale),
            ShsTransition(1, 1, lambda_rest, stale),
        ]
    if theta > 0:
        transitions.append(ShsTransition(1, 0, theta, c0))
    growth = np.array([[1.0, 0.0], [1.0, 1.0]])
    return ShsModel(2, 2, tuple(transitions), growth)


def _prop1(lambda1, lambda_rest, theta, mu):
    lam = lambda1 + lambda_rest
    return 1 / lambda1 + theta / (lambda1 * mu) + lam / (lambda1 * mu)


def test_two_state_stationary_half_half():
    model = _mm11_model(1.0, 0.0, 0.0, 1.0)
    pi = stationary_distribution(model)
    np.testing.assert_allclose(pi, [0.5, 0.5], atol=1e-14)


def test_stationary_ignores_self_loops():
    base = _mm11_model(1.0, 0.0, 0.0, 1.0)
    boosted = ShsModel(
        2,
        2,
        base.transitions + (ShsTransition(1, 1, 57.0, ResetMap((0, 0))),),
        base.growth,
    )
    np.testing.assert_allclose(
        stationary_distribution(boosted), stationary_distribution(base), atol=1e-14
    )


def test_mm11_average_aoi_simple():
    sol = average_aoi(_mm11_model(1.0, 0.0, 0.0, 1.0))
    assert sol.average_aoi == pytest.approx(2.0, rel=1e-12)


def test_mm11_average_aoi_with_losses_and_background():
    sol = average_aoi(_mm11_model(2.0, 10.0, 10.0, 1.0))
    assert sol.average_aoi == pytest.approx(11.5, rel=1e-12)


def test_mm11_single_source_formula():
    sol = average_aoi(_mm11_model(4.0, 0.0, 0.0, 1.0))
    assert sol.average_aoi == pytest.approx(1 / 4 + 1 / 1, rel=1e-12)


def test_mm11_v_components_match_closed_form():
    lambda1, lambda_rest, theta, mu = 2.0, 10.0, 10.0, 1.0
    lam = lambda1 + lambda_rest
    model = _mm11_model(lambda1, lambda_rest, theta, mu)
    pi = stationary_distribution(model)
    v = solve_v_system(model, pi)
    pi1 = lam / (lam + mu + theta)
    assert pi[1] == pytest.approx(pi1, rel=1e-12)
    corner = pi1 / (lam + mu + theta)
    assert v[0, 0] == pytest.approx(
        1 / lambda1 + theta / (lambda1 * mu) - corner, rel=1e-10
    )
    assert v[1, 0] == pytest.approx(lam / (lambda1 * mu) + corner, rel=1e-10)
    assert v[1, 1] == pytest.approx(
        lambda_rest / (lambda1 * mu) + corner, rel=1e-10
    )
    assert v[0, 1] == pytest.approx(0.0, abs=1e-12)


def test_closed_form_grid():
    for lambda1 in (0.1, 1.0, 10.0, 100.0):
        for lambda_rest in (0.0, 10.0):
            for theta in (0.0, 10.0):
                for mu in (0.1, 1.0, 10.0):
                    sol = average_aoi(_mm11_model(lambda1, lambda_rest, theta, mu))
                    assert sol.average_aoi == pytest.approx(
                        _prop1(lambda1, lambda_rest, theta, mu), rel=1e-10
                    )


def test_scale_covariance():
    base = average_aoi(_mm11_model(2.0, 10.0, 10.0, 1.0)).average_aoi
    for c in (0.5, 2.0, 10.0):
        scaled = average_aoi(
            _mm11_model(2.0 * c, 10.0 * c, 10.0 * c, 1.0 * c)
        ).average_aoi
        assert scaled == pytest.approx(base / c, rel=1e-12)


def test_solution_residuals_reported():
    sol = average_aoi(_mm11_model(2.0, 10.0, 10.0, 1.0))
    assert sol.pi_residual < 1e-12
    assert sol.v_residual < 1e-10
    assert sol.pi.sum() == pytest.approx(1.0, abs=1e-12)
    assert sol.v.min() >= -1e-9
    assert sol.average_aoi == pytest.approx(sol.v[:, 0].sum())


def test_single_state_fake_refill_model():
    # One always-full queue; a delivery promotes the slot age into the
    # monitor and instantly refills the slot with an equally old update.
    # Fresh source arrivals reset the slot.  The solved age must be
    # (1/mu)(1 + mu/lambda1).
    for lambda1, mu in ((1.0, 1.0), (10.0, 2.0), (0.3, 5.0)):
        model = ShsModel(
            1,
            2,
            (
                ShsTransition(0, 0, lambda1, ResetMap((0, RESET_ZERO))),
                ShsTransition(0, 0, mu, ResetMap((1, 1))),
            ),
            np.array([[1.0, 1.0]]),
        )
        sol = average_aoi(model)
        assert sol.average_aoi == pytest.approx((1 / mu) * (1 + mu / lambda1), rel=1e-12)


def test_reset_map_apply_and_matrix():
    r = ResetMap((1, RESET_ZERO, 0))
    x = np.array([3.0, 5.0, 7.0])
    np.testing.assert_allclose(r.apply(x), [5.0, 0.0, 3.0])
    np.testing.assert_allclose(x @ r.matrix(), r.apply(x))


def test_reducible_chain_reports_states():
    model = ShsModel(
        3,
        1,
        (
            ShsTransition(0, 1, 1.0, ResetMap((0,))),
            ShsTransition(1, 0, 1.0, ResetMap((0,))),
            ShsTransition(2, 0, 1.0, ResetMap((0,))),
        ),
        np.ones((3, 1)),
        state_labels=("a", "b", "orphan"),
    )
    with pytest.raises(ReducibleChainError, match="orphan"):
        stationary_distribution(model)


def test_no_source_updates_is_singular():
    # Without fresh resets the age never regenerates: the v-system matrix
    # rows for the monitor coordinate become linearly dependent.
    model = ShsModel(
        1,
        1,
        (ShsTransition(0, 0, 1.0, ResetMap((0,))),),
        np.ones((1, 1)),
    )
    with pytest.raises((SingularSystemError, NegativeSolutionError)):
        average_aoi(model)


def test_transition_validation():
    with pytest.raises(ValueError):
        ShsTransition(0, 1, 0.0, ResetMap((0,)))
    with pytest.raises(ValueError):
        ShsTransition(0, 1, -1.0, ResetMap((0,)))
    with pytest.raises(ValueError):
        ShsModel(
            2,
            1,
            (ShsTransition(0, 5, 1.0, ResetMap((0,))),),
            np.ones((2, 1)),
        )
    with pytest.raises(ValueError):
        ShsModel(1, 2, (), np.array([[1.0, 2.0]]))
    with pytest.raises(ValueError):
        ShsModel(1, 2, (), np.array([[0.0, 1.0]]))
