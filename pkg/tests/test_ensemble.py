import numpy as np
import pytest
from hypothesis import given, strategies as st

from stochlab import jet
from stochlab.ensemble import (AllPathsBlewUpError, estimate_convergence, estimate_exceedance,
                               pathwise_monotonicity, run_ensemble, supermartingale_check,
                               wilson_interval)
from stochlab.generator import diagonal_quadratic
from stochlab.sde import (IntegratorConfig, InvalidArgumentError, SdeModel, WienerStream,
                          path_seed, simulate_path)

CFG = IntegratorConfig(dt=1e-2, horizon=5.0, seed=11)


def frozen_model(n=2):
    return SdeModel(n, 1, drift=lambda x: np.zeros_like(x),
                    diffusion=lambda x: np.zeros(x.shape + (1,)), y_indices=(0,))


def decay_model():
    # Ornstein-Uhlenbeck-like: dV has a strictly negative drift
    return SdeModel(2, 1, drift=lambda x: -x,
                    diffusion=lambda x: 0.1 * x[..., None], y_indices=(0,))


def blowup_model():
    return SdeModel(1, 1, drift=lambda x: x * x * 1e6,
                    diffusion=lambda x: np.zeros(x.shape + (1,)), y_indices=(0,))


def test_zero_dynamics_statistics():
    s = run_ensemble(frozen_model(), [0.3, -0.4], 20, CFG, diagonal_quadratic([1.0, 1.0]))
    assert np.all(s.mean_y_norm == s.mean_y_norm[0])
    assert s.mean_y_norm[0] == pytest.approx(0.3, rel=1e-15)
    assert np.all(s.q05_y_norm == 0.3) and np.all(s.q95_y_norm == 0.3)
    assert np.all(s.mean_V == s.mean_V[0])
    assert s.mean_V[0] == pytest.approx(0.125, rel=1e-15)
    assert np.all(s.se_V == 0)
    assert s.blowup_count == 0
    assert s.times[0] == 0 and s.times[-1] == pytest.approx(5.0)


def test_deterministic_and_worker_independent():
    p = jet.JetParams()
    m, V = jet.jet_closed_model(p), jet.jet_lyapunov(p)
    cfg = IntegratorConfig(dt=1e-2, horizon=2.0, seed=5)
    a = run_ensemble(m, jet.DEFAULT_X0, 12, cfg, V)
    b = run_ensemble(m, jet.DEFAULT_X0, 12, cfg, V, workers=3)
    c = run_ensemble(m, jet.DEFAULT_X0, 12, cfg, V, batch_size=5, chunk=7)
    for other in (b, c):
        np.testing.assert_array_equal(a.V_paths, other.V_paths)
        np.testing.assert_array_equal(a.final_states, other.final_states)
        np.testing.assert_array_equal(a.tail_mean_y_norm, other.tail_mean_y_norm)


def test_ensemble_row_matches_single_path():
    p = jet.JetParams()
    m, V = jet.jet_closed_model(p), jet.jet_lyapunov(p)
    cfg = IntegratorConfig(dt=1e-2, horizon=2.0, seed=5)
    s = run_ensemble(m, jet.DEFAULT_X0, 3, cfg, V)
    dW = WienerStream(1, cfg.dt, path_seed(5, 2)).take(cfg.n_steps)
    path = simulate_path(m, jet.DEFAULT_X0, config=cfg, dW=dW)
    np.testing.assert_array_equal(s.final_states[2], path.states[-1])


def test_initial_state_sources():
    m, V = frozen_model(), diagonal_quadratic([1.0, 1.0])
    X0 = np.array([[i, 0.0] for i in range(4)])
    a = run_ensemble(m, X0, 4, CFG, V)
    b = run_ensemble(m, lambda i: [i, 0.0], 4, CFG, V)
    np.testing.assert_array_equal(a.final_states, X0)
    np.testing.assert_array_equal(b.final_states, X0)
    with pytest.raises(InvalidArgumentError):
        run_ensemble(m, X0, 5, CFG, V)


def test_all_paths_blow_up():
    with pytest.raises(AllPathsBlewUpError):
        run_ensemble(blowup_model(), [1.0], 3, CFG, diagonal_quadratic([1.0]))


def test_partial_blowup_counted():
    s = run_ensemble(blowup_model(), lambda i: [float(i == 0)], 3, CFG, diagonal_quadratic([1.0]))
    assert s.blowup_count == 1 and s.blown[0]
    assert np.isinf(s.sup_y_norm[0]) and s.ceiling_count() == 1
    assert s.exceedance_count(1.0) == 1
    assert np.all(s.mean_y_norm == 0)


def test_wilson_degenerate_cases():
    assert wilson_interval(0, 1) == (0.0, pytest.approx(0.7934, abs=1e-4))
    assert wilson_interval(1, 1) == (pytest.approx(0.2066, abs=1e-4), 1.0)
    lo, hi = wilson_interval(0, 200)
    assert lo == 0.0 and 0 < hi < 0.02
    with pytest.raises(InvalidArgumentError):
        wilson_interval(0, 0)


@given(st.integers(1, 500).flatmap(lambda n: st.tuples(st.integers(0, n), st.just(n))))
def test_wilson_contains_estimate(kn):
    k, n = kn
    lo, hi = wilson_interval(k, n)
    assert 0 <= lo <= k / n <= hi <= 1


def test_exceedance_extremes():
    m, V = frozen_model(), diagonal_quadratic([1.0, 1.0])
    s = run_ensemble(m, [0.1, 0.0], 10, CFG, V)
    assert estimate_exceedance(s, 1.0)[0] == 0.0
    assert estimate_exceedance(s, 0.0)[0] == 1.0


def test_exceedance_noise_free_jet():
    p = jet.JetParams(sigma=(0.0,))
    x0 = [0.05, -0.05, 0.3, 0.05, 0.05, np.sqrt(1 - 0.005)]
    cfg = IntegratorConfig(dt=1e-2, horizon=10.0)
    s = run_ensemble(jet.jet_closed_model(p), x0, 5, cfg, jet.jet_lyapunov(p))
    y0 = np.linalg.norm(np.asarray(x0)[list(jet.Y_INDICES)])
    assert estimate_exceedance(s, 10 * y0)[0] == 0.0


def test_exceedance_from_paths_matches_summary():
    p = jet.JetParams()
    m, V = jet.jet_closed_model(p), jet.jet_lyapunov(p)
    cfg = IntegratorConfig(dt=1e-2, horizon=2.0, seed=2)
    s = run_ensemble(m, jet.DEFAULT_X0, 4, cfg, V, n_record=10_000)
    paths = [simulate_path(m, jet.DEFAULT_X0, config=cfg,
                           dW=WienerStream(1, cfg.dt, path_seed(2, i)).take(cfg.n_steps))
             for i in range(4)]
    for eps in (0.3, 0.5, 0.7):
        assert estimate_exceedance(paths, eps, jet.Y_INDICES) == estimate_exceedance(s, eps)
    with pytest.raises(InvalidArgumentError):
        estimate_exceedance(paths, 0.5)


def test_convergence():
    m, V = decay_model(), diagonal_quadratic([1.0, 1.0])
    s = run_ensemble(m, [1.0, 1.0], 10, IntegratorConfig(dt=1e-2, horizon=20.0, seed=1), V)
    assert estimate_convergence(s, 1e-3)[0] == 1.0
    frozen = run_ensemble(frozen_model(), [1.0, 1.0], 10, CFG, V)
    assert estimate_convergence(frozen, 0.5)[0] == 0.0
    with pytest.raises(InvalidArgumentError):
        estimate_convergence(s, 0.0)
    with pytest.raises(InvalidArgumentError):
        estimate_convergence(s, 0.1, tail_fraction=0.5)


def test_supermartingale_noise_free_and_frozen():
    p = jet.JetParams(sigma=(0.0,))
    s = run_ensemble(jet.jet_closed_model(p), jet.DEFAULT_X0, 3,
                     IntegratorConfig(dt=1e-3, horizon=10.0), jet.jet_lyapunov(p))
    assert supermartingale_check(s, atol=1e-9).passed
    frozen = run_ensemble(frozen_model(), [1.0, 1.0], 5, CFG, diagonal_quadratic([1.0, 1.0]))
    assert supermartingale_check(frozen).passed


def test_supermartingale_detects_growth():
    grow = SdeModel(1, 1, drift=lambda x: 0.5 * x, diffusion=lambda x: 0.1 * x[..., None],
                    y_indices=(0,))
    s = run_ensemble(grow, [1.0], 50, CFG, diagonal_quadratic([1.0]))
    rep = supermartingale_check(s)
    assert not rep.passed and rep.worst_value > 0


def test_open_loop_jet_fails_supermartingale():
    p = jet.JetParams(sigma=(0.5,))
    m = jet.jet_closed_model(p, feedback=jet.open_loop)
    s = run_ensemble(m, jet.DEFAULT_X0, 100, IntegratorConfig(dt=1e-2, horizon=5.0, seed=3),
                     jet.jet_lyapunov(p))
    assert not supermartingale_check(s).passed


def test_pathwise_monotonicity_noise_free():
    p = jet.JetParams(sigma=(0.0,))
    path = simulate_path(jet.jet_closed_model(p), jet.DEFAULT_X0,
                         config=IntegratorConfig(dt=1e-3, horizon=5.0))
    assert pathwise_monotonicity(path, jet.jet_lyapunov(p)).passed


def test_small_initial_data_rarely_exceeds():
    p = jet.JetParams()
    x0 = [0.05, -0.05, 0.3, 0.05, 0.05, np.sqrt(1 - 0.005)]
    s = run_ensemble(jet.jet_closed_model(p), x0, 200,
                     IntegratorConfig(dt=1e-3, horizon=20.0, seed=8), jet.jet_lyapunov(p))
    p_hat, _ = estimate_exceedance(s, 1.0)
    assert p_hat <= 0.05
