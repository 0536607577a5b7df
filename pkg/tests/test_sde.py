import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from stochlab.sde import (BlowUpError, IntegratorConfig, InvalidArgumentError, SdeModel,
                          Scheme, UnsupportedSchemeError, WienerStream, estimate_strong_order,
                          gbm_exact, gbm_model, integrate, path_seed, simulate_path,
                          wiener_increments)


def zero_model(n=3, k=1):
    return SdeModel(n, k, lambda x: np.zeros_like(x), lambda x: np.zeros(x.shape + (k,)))


def linear_decay():
    return SdeModel(1, 1, lambda x: -x, lambda x: np.zeros(x.shape + (1,)),
                    diffusion_jacobian=lambda x: np.zeros(x.shape + (1,)))


# -- Wiener increments -------------------------------------------------------

def test_single_draw_is_deterministic():
    a = wiener_increments(1, 1, 1.0, 42)
    b = wiener_increments(1, 1, 1.0, 42)
    assert a.shape == (1, 1)
    assert a[0, 0] == b[0, 0]


@pytest.mark.parametrize("args", [(0, 5, 0.1, 1), (1, 0, 0.1, 1), (1, 5, 0.0, 1),
                                  (1, 5, -1.0, 1), (1, 5, 0.1, -3)])
def test_wiener_invalid_arguments(args):
    with pytest.raises(InvalidArgumentError):
        wiener_increments(*args)


def test_wiener_moments_and_independence():
    steps, dt = 100_000, 0.01
    dw = wiener_increments(2, steps, dt, 7)
    assert np.all(np.abs(dw.mean(axis=0)) <= 4 * np.sqrt(dt / steps))
    assert np.all(np.abs(dw.var(axis=0) / dt - 1) <= 0.05)
    corr = np.corrcoef(dw.T)[0, 1]
    assert abs(corr) <= 4 / np.sqrt(steps)


def test_chunked_stream_matches_one_shot():
    whole = wiener_increments(2, 1000, 0.01, path_seed(5, 3))
    s = WienerStream(2, 0.01, path_seed(5, 3))
    parts = np.concatenate([s.take(300), s.take(1), s.take(699)])
    np.testing.assert_array_equal(parts, whole)


def test_path_streams_differ_across_base_seeds():
    a = {wiener_increments(1, 1, 1.0, path_seed(0, i))[0, 0] for i in range(50)}
    b = {wiener_increments(1, 1, 1.0, path_seed(1, i))[0, 0] for i in range(50)}
    assert not a & b


# -- simulate_path -------------------------------------------------------------

def test_identity_dynamics_gives_constant_path():
    p = simulate_path(zero_model(), [1.0, 2.0, 3.0], config=IntegratorConfig(dt=0.1, horizon=2.0))
    assert np.all(p.states == np.array([1.0, 2.0, 3.0]))
    assert p.n_steps == 20


def test_time_grid_is_exact():
    cfg = IntegratorConfig(dt=0.1, horizon=1.0)
    p = simulate_path(zero_model(1), [0.0], t0=2.5, config=cfg)
    for j, t in enumerate(p.times):
        assert t == 2.5 + j * 0.1


def test_deterministic_euler_decay():
    p = simulate_path(linear_decay(), [1.0], config=IntegratorConfig(dt=1e-3, horizon=1.0))
    assert abs(p.states[-1, 0] - np.exp(-1)) <= 1e-3


@pytest.mark.parametrize("scheme, tol", [("euler_maruyama", 5e-3), ("milstein", 1e-4)])
def test_gbm_pathwise_against_exact(scheme, tol):
    ex = gbm_exact(0.05, 0.2)
    for seed in range(5):
        p = simulate_path(gbm_model(0.05, 0.2), [1.0],
                          config=IntegratorConfig(dt=1e-3, horizon=1.0, scheme=scheme, seed=seed))
        w = np.concatenate([[0.0], np.cumsum(p.dW[:, 0])])
        exact = ex(p.times, w, 1.0)
        assert np.max(np.abs(p.states[:, 0] - exact)) <= tol


def test_replaying_stored_noise_is_bit_identical(jp):
    from stochlab.jet import DEFAULT_X0, jet_closed_model
    m = jet_closed_model(jp)
    cfg = IntegratorConfig(dt=1e-3, horizon=2.0, seed=11)
    a = simulate_path(m, DEFAULT_X0, config=cfg)
    b = simulate_path(m, DEFAULT_X0, config=cfg, dW=a.dW)
    np.testing.assert_array_equal(a.states, b.states)
    assert a.states[0].tolist() == DEFAULT_X0.tolist()


def test_batch_rows_match_single_paths(rp):
    from stochlab.rotor import DEFAULT_X0, rotor_closed_model
    m = rotor_closed_model(rp)
    cfg = IntegratorConfig(dt=1e-3, horizon=0.5, seed=2)
    singles = [simulate_path(m, DEFAULT_X0 * s, config=IntegratorConfig(dt=1e-3, horizon=0.5, seed=i))
               for i, s in enumerate([1.0, 0.5, -0.3])]
    X0 = np.stack([p.states[0] for p in singles])
    batch = integrate(m, X0, np.stack([p.dW for p in singles]), cfg.dt)
    for row, p in zip(batch, singles):
        np.testing.assert_array_equal(row, p.states)


def test_schemes_agree_without_noise():
    m = SdeModel(2, 1, lambda x: np.stack([x[..., 1], -np.sin(x[..., 0])], axis=-1),
                 lambda x: np.zeros(x.shape + (1,)),
                 diffusion_jacobian=lambda x: np.zeros(x.shape + (2,)))
    em = simulate_path(m, [1.0, 0.0], config=IntegratorConfig(dt=1e-2, horizon=3.0))
    mil = simulate_path(m, [1.0, 0.0], config=IntegratorConfig(dt=1e-2, horizon=3.0, scheme="milstein"))
    np.testing.assert_array_equal(em.states, mil.states)


def test_milstein_rejects_multiple_noises():
    m = zero_model(2, 2)
    with pytest.raises(UnsupportedSchemeError):
        simulate_path(m, [0.0, 0.0], config=IntegratorConfig(dt=0.1, horizon=1.0, scheme="milstein"))


def test_milstein_needs_jacobian():
    with pytest.raises(UnsupportedSchemeError):
        simulate_path(zero_model(2, 1), [0.0, 0.0],
                      config=IntegratorConfig(dt=0.1, horizon=1.0, scheme=Scheme.MILSTEIN))


def test_blow_up_reports_first_bad_step():
    m = SdeModel(1, 1, lambda x: x * x, lambda x: np.zeros(x.shape + (1,)))
    with pytest.raises(BlowUpError) as info:
        simulate_path(m, [1.0], config=IntegratorConfig(dt=0.5, horizon=100.0))
    err = info.value
    # hand iteration of x <- x + 0.5 x^2 from 1 overflows at this step
    x, j = 1.0, 0
    with np.errstate(over="ignore"):
        while np.isfinite(x):
            x = np.float64(x) + 0.5 * np.float64(x) * np.float64(x)
            j += 1
    assert err.step == j
    assert err.path.n_steps == j - 1
    assert np.isfinite(err.path.states).all()


@pytest.mark.parametrize("kw", [dict(dt=0.0), dict(dt=-1.0), dict(dt=2.0, horizon=1.0),
                                dict(seed=-1), dict(scheme="rk4")])
def test_invalid_config(kw):
    with pytest.raises(InvalidArgumentError):
        IntegratorConfig(**kw)


def test_model_validation():
    with pytest.raises(InvalidArgumentError):
        SdeModel(3, 1, None, None, y_indices=(0, 0))
    with pytest.raises(InvalidArgumentError):
        SdeModel(3, 1, None, None, y_indices=(3,))
    with pytest.raises(InvalidArgumentError):
        simulate_path(zero_model(3), [1.0, 2.0])


# -- strong order ----------------------------------------------------------------

DTS = [2.0 ** -i for i in range(6, 11)]


def test_strong_order_euler_maruyama():
    slope = estimate_strong_order(gbm_model(), gbm_exact(), [1.0], DTS, 200, seed=0)
    assert 0.4 <= slope <= 0.6


def test_strong_order_milstein():
    slope = estimate_strong_order(gbm_model(), gbm_exact(), [1.0], DTS, 200, seed=0,
                                  scheme=Scheme.MILSTEIN)
    assert 0.85 <= slope <= 1.15


def test_strong_order_deterministic_euler():
    slope = estimate_strong_order(linear_decay(), lambda t, w, x0: x0 * np.exp(-t), [1.0],
                                  DTS, 10, seed=0)
    assert 0.9 <= slope <= 1.1


def test_strong_order_needs_four_step_sizes():
    with pytest.raises(InvalidArgumentError):
        estimate_strong_order(gbm_model(), gbm_exact(), [1.0], DTS[:3], 10)
    with pytest.raises(InvalidArgumentError):
        estimate_strong_order(gbm_model(), gbm_exact(), [1.0], DTS[::-1], 10)


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 2 ** 63), x0=st.floats(0.1, 10.0))
def test_same_inputs_same_path(seed, x0):
    cfg = IntegratorConfig(dt=0.01, horizon=0.5, seed=seed)
    a = simulate_path(gbm_model(), [x0], config=cfg)
    b = simulate_path(gbm_model(), [x0], config=cfg)
    np.testing.assert_array_equal(a.states, b.states)
    np.testing.assert_array_equal(a.dW, b.dW)


def test_sample_path_is_read_only():
    p = simulate_path(zero_model(1), [1.0], config=IntegratorConfig(dt=0.5, horizon=1.0))
    with pytest.raises(ValueError):
        p.states[0, 0] = 2.0
