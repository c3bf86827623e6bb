"""Tests for single-qubit thermometry"""

import numpy as np
import pytest

from chiller.larch.thermometry import (MomentVector, cfi, crb, moments,
                                       mvu_estimator, qfi_from_sld,
                                       qfi_thermal, sample_mean_model, score,
                                       sld_operator,
                                       thermal_population_derivative,
                                       thermal_sld, thermal_state_derivative)
from chiller.spruce.dynamics import thermal_qubit


@pytest.fixture(scope="module")
def random_pairs():
    """100 (E, T) pairs drawn from [0.5, 12] x [0.1, 5]"""
    rng = np.random.default_rng(2024)
    return list(zip(rng.uniform(0.5, 12, 100), rng.uniform(0.1, 5, 100)))


@pytest.fixture()
def model_09():
    return mvu_estimator(1.0, 0.9)


def test_mvu_values_at_09(model_09):
    assert model_09.probs[0] == pytest.approx(0.75233, abs=1e-5)
    assert model_09.mean_energy == pytest.approx(-0.25233, abs=1e-5)
    assert model_09.qfi == pytest.approx(0.2840, abs=2e-4)


def test_mvu_mean_and_variance(random_pairs):
    for E, T in random_pairs:
        model = mvu_estimator(E, T)
        values = np.asarray(model.est_values)
        probs = np.asarray(model.probs)
        mean = probs @ values
        variance = probs @ values ** 2 - mean ** 2
        assert mean == pytest.approx(T, abs=1e-10 * max(1, T))
        assert variance == pytest.approx(1 / model.qfi, rel=1e-9)


def test_saturability(random_pairs):
    for E, T in random_pairs:
        model = mvu_estimator(E, T)
        lhs = score(model)
        rhs = model.qfi * (np.asarray(model.est_values) - T)
        assert np.allclose(lhs, rhs, atol=1e-10, rtol=1e-10)


def test_classical_fisher_equals_quantum(random_pairs):
    for E, T in random_pairs:
        dr = thermal_population_derivative(E, T)
        model = mvu_estimator(E, T)
        fc = cfi(model.probs, (dr, -dr))
        assert fc == pytest.approx(qfi_thermal(E, T), rel=1e-10)


def test_sld_matches_closed_form():
    E, T = 1.0, 0.9
    rho = thermal_qubit(E, T)
    sld = sld_operator(rho, thermal_state_derivative(E, T))
    assert np.allclose(sld, thermal_sld(E, T), atol=1e-12)
    assert qfi_from_sld(rho, sld) == pytest.approx(qfi_thermal(E, T),
                                                   rel=1e-10)


def test_sld_solves_defining_equation():
    E, T = 3.0, 1.7
    rho = thermal_qubit(E, T)
    drho = thermal_state_derivative(E, T)
    sld = sld_operator(rho, drho)
    assert np.allclose((sld @ rho.matrix + rho.matrix @ sld) / 2, drho,
                       atol=1e-12)


def test_state_derivative_by_finite_difference():
    E, T, h = 2.0, 0.7, 1e-6
    numeric = (thermal_qubit(E, T + h).matrix
               - thermal_qubit(E, T - h).matrix) / (2 * h)
    assert np.allclose(numeric, thermal_state_derivative(E, T), atol=1e-8)


def test_sld_on_pure_state_ignores_empty_support():
    rho = thermal_qubit(1.0, 0.9)
    pure = type(rho)(np.diag([1.0, 0.0]).astype(complex))
    drho = np.array([[0, 0.1], [0.1, 0]], dtype=complex)
    sld = sld_operator(pure, drho)
    assert np.allclose(sld, 2 * drho)


def test_sld_rejects_traced_derivative():
    rho = thermal_qubit(1.0, 0.9)
    with pytest.raises(ValueError):
        sld_operator(rho, np.eye(2))


def test_cfi_zero_probability_with_derivative():
    with pytest.raises(ValueError):
        cfi([1.0, 0.0], [-0.1, 0.1])


def test_crb():
    assert crb(4.0, N=5) == pytest.approx(0.05)
    with pytest.raises(ValueError):
        crb(0.0)


def test_moments_at_09(model_09):
    m = moments(model_09, 2)
    assert m.mean == pytest.approx(0.9, abs=1e-12)
    assert m.variance == pytest.approx(1 / model_09.qfi, rel=1e-9)


def test_moments_need_two(model_09):
    with pytest.raises(ValueError):
        moments(model_09, 1)


def test_sample_mean_variance(model_09):
    values, probs = sample_mean_model(model_09, 10)
    assert probs.sum() == pytest.approx(1)
    mean = probs @ values
    variance = probs @ values ** 2 - mean ** 2
    assert mean == pytest.approx(0.9, abs=1e-10)
    assert variance == pytest.approx(crb(model_09.qfi, 10), rel=1e-9)


def test_single_repetition_matches_single_shot(model_09):
    assert moments(model_09, 4, repetitions=1).values == pytest.approx(
        moments(model_09, 4).values)
    values, probs = sample_mean_model(model_09, 1)
    assert np.allclose(values, model_09.est_values)
    assert np.allclose(probs, model_09.probs)


def test_moment_vector_rejects_infeasible():
    with pytest.raises(ValueError):
        MomentVector((1.0, 0.5))


def test_moment_vector_truncate():
    m = MomentVector((0.0, 1.0, 0.0, 3.0))
    assert m.truncate(2).values == (0.0, 1.0)
    with pytest.raises(ValueError):
        m.truncate(5)


def test_mvu_estimator_values_at_09(model_09):
    r, q = model_09.probs
    low, high = model_09.est_values
    assert low == pytest.approx(0.9 - 0.81 / r, abs=1e-12)
    assert high == pytest.approx(0.9 + 0.81 / q, abs=1e-12)
    assert low == pytest.approx(-0.17663, abs=1e-3)
    assert high == pytest.approx(4.17102, abs=1e-3)
    m = moments(model_09, 2)
    assert m.variance == pytest.approx(3.5212, abs=1e-3)


def test_estimator_is_locally_unbiased(random_pairs):
    for E, T in random_pairs:
        model = mvu_estimator(E, T)
        dr = thermal_population_derivative(E, T)
        slope = np.dot(model.est_values, (dr, -dr))
        assert slope == pytest.approx(1.0, rel=1e-9)


def test_population_derivative_sign():
    assert thermal_population_derivative(1.0, 0.9) < 0


def test_sld_from_finite_difference():
    E, T, h = 1.0, 0.9, 1e-6
    rho = thermal_qubit(E, T)
    numeric = (thermal_qubit(E, T + h).matrix
               - thermal_qubit(E, T - h).matrix) / (2 * h)
    sld = sld_operator(rho, numeric)
    assert np.allclose(sld, thermal_sld(E, T), atol=1e-5)


def test_qfi_two_ways_at_033():
    E, T = 1.0, 0.33
    rho = thermal_qubit(E, T)
    sld = sld_operator(rho, thermal_state_derivative(E, T))
    assert qfi_from_sld(rho, sld) == pytest.approx(qfi_thermal(E, T),
                                                   rel=1e-10)


def test_third_moment_by_direct_summation(model_09):
    r, q = model_09.probs
    low, high = model_09.est_values
    m3 = moments(model_09, 3).values[2]
    assert m3 == pytest.approx(r * low ** 3 + q * high ** 3, rel=1e-12)
    assert m3 == pytest.approx(r * (-0.17663) ** 3 + q * 4.17102 ** 3,
                               rel=1e-3)
