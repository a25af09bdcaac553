# ----------------------------------------------------------------------

import numpy as np

# ----------------------------------------------------------------------

from spikeclr.autodiff import Tensor, Tape, backward
from spikeclr import autodiff as ad
from spikeclr.snn import make_lif_config, lif_step, LifState
from spikeclr.exceptions import ConfigurationError, ShapeError

# ----------------------------------------------------------------------

def run_trace(currents, cfg):
    state, spikes, potentials = None, [], []
    for current in currents:
        s, state = lif_step(Tensor(np.asarray(current, dtype=float)), state, cfg)
        spikes.append(s.value)
        potentials.append(state.u.value)
    return np.array(spikes), np.array(potentials)


def test_hand_simulated_trace():
    print("== Four step LIF trace ==")
    cfg = make_lif_config(beta=0.5, v_th=1.0, v_reset=0.0)
    spikes, u = run_trace([[0.6]] * 4, cfg)
    print('--> u:', u.ravel(), 'spikes:', spikes.ravel())
    np.testing.assert_array_equal(spikes.ravel(), [0., 0., 1., 0.])
    np.testing.assert_allclose(u.ravel(), [0.6, 0.9, 1.05, 0.6], rtol=1e-15)
    assert u[3, 0] == 0.6


def test_literal_reset_trace():
    print("== Subtractive form of the reset ==")
    cfg = make_lif_config(beta=0.5, v_th=1.0, reset='literal')
    spikes, u = run_trace([[0.6]] * 4, cfg)
    np.testing.assert_array_equal(spikes.ravel(), [0., 0., 1., 0.])
    np.testing.assert_allclose(u[3, 0], 0.5 * 1.05 + 0.6 - 1.05)


def test_hard_reset_invariant():
    print("== Hard reset on random traces ==")
    rng = np.random.default_rng(0)
    for trial in range(1000):
        beta = rng.uniform(0.05, 0.95)
        cfg = make_lif_config(beta=beta, v_th=1.0, v_reset=0.0)
        currents = rng.uniform(-0.5, 1.5, size=(12, 3))
        spikes, u = run_trace(currents, cfg)
        assert set(np.unique(spikes)) <= {0., 1.}
        np.testing.assert_array_equal(spikes, (u >= 1.0).astype(float))
        for t in range(11):
            fired = spikes[t] == 1.
            # carry-over after a spike is beta * v_reset = 0
            assert np.all(u[t + 1][fired] - currents[t + 1][fired] == 0.)


def test_nonzero_reset_potential():
    print("== Reset to v_reset ==")
    rng = np.random.default_rng(1)
    cfg = make_lif_config(beta=0.7, v_th=1.0, v_reset=-0.25)
    currents = rng.uniform(0., 2., size=(20, 4))
    spikes, u = run_trace(currents, cfg)
    for t in range(19):
        fired = spikes[t] == 1.
        np.testing.assert_allclose(u[t + 1][fired] - currents[t + 1][fired], 0.7 * -0.25, atol=1e-12)


def test_smooth_mode_is_differentiable():
    print("== Smooth mode output ==")
    cfg = make_lif_config(mode='smooth', surrogate_alpha=2.)
    s, state = lif_step(Tensor(np.array([0.5, 1.0, 1.5])), None, cfg)
    np.testing.assert_allclose(s.value, np.arctan(2 * np.pi * np.array([-0.5, 0., 0.5])) / np.pi + 0.5)
    assert s.value[1] == 0.5


def test_gradient_through_time():
    print("== Surrogate gradient reaches earlier steps ==")
    cfg = make_lif_config(beta=0.9)
    tape = Tape()
    w = tape.leaf(np.array([[0.4, -0.2]]), 'w')
    state, loss = None, 0.
    for step in range(5):
        spikes, state = lif_step(ad.matmul(Tensor(np.ones((1, 1))), w), state, cfg)
        loss = ad.add(loss, ad.sum(spikes))
    grads = backward(tape, loss)
    assert np.all(np.isfinite(grads['w'])) and np.all(grads['w'] > 0.)


def test_config_and_shape_errors():
    print("== LIF configuration errors ==")
    for kwargs in [dict(beta=1.0), dict(beta=0.), dict(v_th=0., v_reset=0.),
                   dict(surrogate_alpha=0.), dict(mode='relu'), dict(reset='soft')]:
        try:
            make_lif_config(**kwargs)
        except ConfigurationError as e:
            print('--> rejected:', e)
        else:
            raise AssertionError(f'{kwargs} should be rejected')

    cfg = make_lif_config()
    state = LifState(Tensor(np.zeros(3)), Tensor(np.zeros(3)))
    try:
        lif_step(Tensor(np.zeros(4)), state, cfg)
    except ShapeError:
        pass
    else:
        raise AssertionError('state shape mismatch should be rejected')


if __name__ == '__main__':
    test_hand_simulated_trace()
    test_literal_reset_trace()
    test_hard_reset_invariant()
    test_nonzero_reset_potential()
    test_smooth_mode_is_differentiable()
    test_gradient_through_time()
    test_config_and_shape_errors()
