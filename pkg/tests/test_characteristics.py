import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from langmuir_kit.characteristics import (Mode, ObserverInsideLightConeError, PowerLawEnvelope,
                                          RegularField, SyntheticField, free_jacobian_det,
                                          grad_vhat, integrate, integrate_backward,
                                          integrate_forward, jacobian_check, osc_integral_identity,
                                          random_mode_field, reference_decay_field,
                                          scattering_limit, straightened_average, vhat,
                                          velocity_decomposition_check)

vec = st.lists(st.floats(-5, 5), min_size=3, max_size=3).map(np.array)


def _uniform(E0):
    return SyntheticField([], RegularField(np.array([E0, 0.0, 0.0]), np.zeros(3), 0.0))


@given(vec)
def test_vhat_subluminal(v):
    assert np.linalg.norm(vhat(v)) < 1.0


@given(vec)
def test_grad_vhat_matches_finite_difference(v):
    h = 1e-6
    fd = np.stack([(vhat(v + h * e) - vhat(v - h * e)) / (2 * h) for e in np.eye(3)], axis=1)
    assert np.allclose(grad_vhat(v), fd, atol=1e-8)


def test_zero_field_free_streaming():
    x, v = np.array([0.5, -1.0, 2.0]), np.array([0.3, -0.4, 1.2])
    tr = integrate_backward(SyntheticField(), x, v, 10.0, 0.1)
    lag = (10.0 - tr.s)[:, None]
    assert np.allclose(tr.X[:, 0], x - lag * vhat(v), atol=1e-12)
    assert np.allclose(tr.V[:, 0], v, atol=0)
    assert np.allclose(straightened_average(tr)[:, 0], vhat(v), atol=1e-12)
    j = jacobian_check(tr)
    assert j["liouville_max_dev"] < 1e-12
    assert j["det_dx_max_dev"] < 1e-12
    det = np.linalg.det(tr.Phi[:, 0, :3, 3:])
    assert np.allclose(det, free_jacobian_det(v, 10.0 - tr.s), rtol=1e-10, atol=1e-12)


def test_uniform_field_exact():
    E0, v1 = 0.2, 0.5
    tr = integrate_forward(_uniform(E0), np.zeros(3), [v1, 0, 0], 20.0, 0.01)
    V1 = v1 + E0 * tr.s
    X1 = (np.sqrt(1 + V1 ** 2) - math.sqrt(1 + v1 ** 2)) / E0
    assert np.max(np.abs(tr.V[:, 0, 0] - V1)) < 1e-12
    assert np.max(np.abs(tr.X[:, 0, 0] - X1)) < 1e-10


def test_time_reversibility(curve, rng):
    fld = random_mode_field(curve.nu_at, 3, rng, eps=0.05, regular_eps=0.05)
    x, v = rng.normal(size=3), rng.normal(size=3)
    fw = integrate(fld, x, v, 0.0, 30.0, 0.02)
    bw = integrate(fld, fw.X[-1, 0], fw.V[-1, 0], 30.0, 0.0, 0.02)
    assert np.allclose(bw.X[-1, 0], x, atol=1e-9)
    assert np.allclose(bw.V[-1, 0], v, atol=1e-9)


def test_liouville_and_near_identity_jacobian(curve):
    devs = []
    for eps in (1e-3, 5e-4):
        tr = integrate_backward(reference_decay_field(curve.nu_at, eps, eps), np.zeros(3),
                                [0.3, 0.1, 0.0], 50.0, 0.05)
        j = jacobian_check(tr)
        assert j["liouville_max_dev"] < 1e-10
        assert j["det_dx_max_dev"] <= 10 * eps
        devs.append(j["det_dx_max_dev"])
    assert devs[0] / devs[1] == pytest.approx(2.0, rel=0.05)


def test_osc_identity_edge_cases(curve):
    k = np.array([0.4, 0.2, -0.1])
    m = Mode(k, float(curve.nu_at(np.linalg.norm(k))), -1, np.array([1.0, 2j, 0.5]))
    assert osc_integral_identity(m, np.ones(3), np.zeros(3), 0.0) < 1e-14
    m0 = Mode(np.zeros(3), float(curve.nu_at(0.0)), 1, np.array([1.0, 0, 0]))
    assert osc_integral_identity(m0, np.zeros(3), [2.0, 0, 0], 17.0) < 1e-10
    assert osc_integral_identity(m, np.ones(3), [0.3, -2, 1], 40.0) < 1e-8


def test_decomposition_trivial_for_zero_field():
    dec = velocity_decomposition_check(SyntheticField(), np.zeros(3), [0.1, 0.2, 0.3], 10.0)
    assert dec.max_residual == 0.0
    assert np.all(dec.V_osc == 0) and np.all(dec.V_tr == 0)


def test_decomposition_random_field(curve):
    fld = random_mode_field(curve.nu_at, 4, np.random.default_rng(7), eps=0.05, regular_eps=0.05)
    dec = velocity_decomposition_check(fld, np.zeros(3), [0.2, -0.5, 0.1], 60.0, 0.05)
    assert dec.max_residual < 1e-6


def test_scattering_rates(curve):
    rep = scattering_limit(reference_decay_field(curve.nu_at), np.zeros(3), [0.3, 0.1, 0.0],
                           1000.0, 0.05, (10.0, 100.0))
    assert rep.velocity_fit.exponent == pytest.approx(1.5, abs=0.3)
    assert rep.straight_position_fit.exponent == pytest.approx(0.5, abs=0.3)


def test_light_cone_error():
    # move the observer so that (x - X_s)/(t - s) exceeds 1
    tr = integrate_backward(SyntheticField(), np.zeros(3), [0.5, 0, 0], 5.0, 0.1)
    tr.x = tr.x + np.array([[20.0, 0.0, 0.0]])
    with pytest.raises(ObserverInsideLightConeError):
        straightened_average(tr)


def test_input_validation():
    with pytest.raises(ValueError):
        Mode(np.ones(3), 1.0, 0)
    with pytest.raises(ValueError):
        integrate(SyntheticField(), np.zeros(3), np.zeros(3), 0.0, 1.0, 0.0)
    with pytest.raises(ValueError):
        integrate(SyntheticField(), np.zeros(3), np.zeros(3), 1.0, -1.0, 0.1)
    with pytest.raises(ValueError):
        jacobian_check(integrate_forward(SyntheticField(), np.zeros(3), np.zeros(3), 1.0))


@settings(max_examples=15, deadline=None)
@given(st.floats(0.0, 0.2), vec)
def test_speed_below_one_along_trajectories(eps, v):
    fld = SyntheticField([Mode(np.array([0.5, 0, 0]), 2.1, 1, np.array([1.0, 0, 0]),
                               PowerLawEnvelope(eps, 1.5))])
    tr = integrate_forward(fld, np.zeros(3), v, 10.0, 0.1)
    step = np.diff(tr.X[:, 0], axis=0) / np.diff(tr.s)[:, None]
    assert np.all(np.linalg.norm(step, axis=-1) < 1.0)
