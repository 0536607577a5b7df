import numpy as np
import pytest

from stochlab import jet
from stochlab.generator import apply_generator
from stochlab.sde import IntegratorConfig, simulate_path, wiener_increments
from stochlab.lab import conserved_drift


def euler_poisson_reference(A, x, u):
    """Scalar transcription of the jet-torque equations, term by term."""
    A1, A2, A3 = A
    w1, w2, w3, n1, n2, n3 = map(float, x)
    return [
        (A2 - A3) / A1 * w2 * w3 + u[0],
        (A3 - A1) / A2 * w1 * w3 + u[1],
        (A1 - A2) / A3 * w1 * w2,
        w3 * n2 - w2 * n3,
        w1 * n3 - w3 * n1,
        w2 * n1 - w1 * n2,
    ]


def test_open_drift_vanishes_at_equilibrium(jp):
    assert np.all(jet.jet_drift_open(jp, jet.EQUILIBRIUM, [0, 0]) == 0)


@pytest.mark.parametrize("w3, n3", [(0.0, 1.0), (2.5, -0.3), (-7.0, 0.9)])
def test_open_drift_vanishes_on_M(jp, w3, n3):
    assert np.all(jet.jet_drift_open(jp, [0, 0, w3, 0, 0, n3], [0, 0]) == 0)


def test_open_drift_hand_values(jp):
    x = [1, 1, 1, 0, 0, 1]
    got = jet.jet_drift_open(jp, x, [0, 0])
    np.testing.assert_allclose(got, [1.0, 1 / 3, -1.0, -1.0, 1.0, 0.0], rtol=0, atol=1e-15)
    np.testing.assert_allclose(got, euler_poisson_reference((1, 3, 2), x, (0, 0)), atol=1e-15)


def test_open_drift_matches_reference_on_random_states(jp, rng):
    for x, u in zip(rng.uniform(-3, 3, (200, 6)), rng.uniform(-3, 3, (200, 2))):
        np.testing.assert_allclose(jet.jet_drift_open(jp, x, u),
                                   euler_poisson_reference((1, 3, 2), x, u), rtol=1e-14, atol=1e-14)


def test_h_equals_eps_for_equal_moments(rng):
    p = jet.JetParams(A1=2.0, A2=2.0, eps=0.05)
    assert np.all(jet.jet_h(p, rng.normal(size=(10, 6))) == 0.05)


def test_h_value(jp):
    assert jet.jet_h(jp, [0, 0, 3, 0, 0, 1]) == pytest.approx(1.01, abs=1e-15)


def test_h_dominates_gyroscopic_term(jp, rng):
    x = rng.uniform(-10, 10, (100_000, 6))
    w1, w2, w3 = x[:, 0], x[:, 1], x[:, 2]
    lhs = jet.jet_h(jp, x) * (jp.A1 ** 2 * w1 ** 2 + jp.A2 ** 2 * w2 ** 2)
    assert np.all(lhs >= (jp.A1 - jp.A2) * w1 * w2 * w3)


def test_feedback_vanishes_on_M(jp, rng):
    x = rng.normal(size=(20, 6))
    x[:, jet.Y_INDICES] = 0
    assert np.all(jet.jet_feedback(jp, x) == 0)


def test_feedback_hand_value():
    p = jet.JetParams(sigma=(0.0,), eps=0.01)
    np.testing.assert_array_equal(jet.jet_feedback(p, [0, 0, 0, 0, 1, 1]), [-1.0, 0.0])


def test_closed_loop_at_equilibrium(jp):
    m = jet.jet_closed_model(jp)
    assert np.all(m.drift(jet.EQUILIBRIUM) == 0)
    assert np.all(m.diffusion(jet.EQUILIBRIUM) == 0)


def test_diffusion_vanishes_when_transverse_rates_vanish(jp, rng):
    x = rng.normal(size=(20, 6))
    x[:, :2] = 0
    assert np.all(jet.jet_closed_model(jp).diffusion(x) == 0)


def test_on_M_dynamics_freeze(jp):
    x0 = [0, 0, 0.7, 0, 0, 0.95]
    p = simulate_path(jet.jet_closed_model(jet.JetParams(sigma=(0.0,))), x0,
                      config=IntegratorConfig(dt=1e-3, horizon=5.0))
    assert np.all(p.states == np.array(x0, dtype=float))


def test_lyapunov_values(jp):
    V = jet.jet_lyapunov(jp)
    assert V.value(jet.EQUILIBRIUM) == 0
    assert V.value(np.array([1.0, 0, 0, 0, 1, 0])) == 1.0


def test_lv_zero_on_M_and_nonpositive(jp, rng):
    x = rng.normal(size=(50, 6))
    x[:, jet.Y_INDICES] = 0
    assert np.all(jet.jet_lv_analytic(jp, x) == 0)
    assert np.all(jet.jet_lv_analytic(jp, rng.uniform(-10, 10, (100_000, 6))) <= 0)


def test_lw_nonpositive_and_matches_generator(jp, rng):
    assert np.all(jet.jet_lw_analytic(jp, rng.uniform(-10, 10, (100_000, 6))) <= 0)
    x = rng.uniform(-2, 2, (2000, 6))
    num = apply_generator(jet.jet_closed_model(jp), jet.jet_aux_W(jp), x)
    ref = jet.jet_lw_analytic(jp, x)
    assert np.all(np.abs(num - ref) <= 1e-8 * (1 + np.abs(ref)))


def test_W_radially_unbounded(jp, rng):
    x = rng.uniform(-10, 10, (1000, 6))
    lower = 0.5 * min(jp.A1, jp.A2, jp.A3) * np.sum(x[:, :3] ** 2, axis=1)
    assert np.all(jet.jet_aux_W(jp).value(x) >= lower * (1 - 1e-14))


def test_ito_correction_cancels(rng):
    x = rng.uniform(-2, 2, (200, 6))
    vals = [apply_generator(jet.jet_closed_model(jet.JetParams(sigma=(s,))),
                            jet.jet_lyapunov(jet.JetParams()), x) for s in (0.0, 0.2, 1.5)]
    for v in vals[1:]:
        assert np.max(np.abs(v - vals[0])) <= 1e-10 * (1 + np.max(np.abs(vals[0])))


def test_zero_set_of_lv_is_transverse_rates(jp, rng):
    x = rng.uniform(-3, 3, (1000, 6))
    assert np.all(jet.jet_lv_analytic(jp, x) < 0)
    x[:, :2] = 0
    assert np.all(jet.jet_lv_analytic(jp, x) == 0)
    x[:500, 0] = 1e-3
    assert np.all(jet.jet_lv_analytic(jp, x[:500]) < 0)


def test_geometric_integral_drift_is_first_order(jp):
    m = jet.jet_closed_model(jp)
    fine = wiener_increments(1, 40_000, 5e-4, 3)
    coarse = fine.reshape(20_000, 2, 1).sum(axis=1)
    devs = []
    for dt, dW in ((1e-3, coarse), (5e-4, fine)):
        p = simulate_path(m, jet.DEFAULT_X0, config=IntegratorConfig(dt=dt, horizon=20.0), dW=dW)
        devs.append(conserved_drift(p, jet.geometric_integral)[0])
    assert devs[0] <= 5e-3
    assert 1.5 <= devs[0] / devs[1] <= 3.0
