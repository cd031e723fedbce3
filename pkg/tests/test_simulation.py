import math

import numpy as np
import pytest
from scipy import integrate

from rkhs_sysid import (Dataset, ExponentialSystem, ImpulseTableSystem, InvalidArgument,
                        NoiseSpec, Signal, TransferFunctionSystem, make_dataset, make_input,
                        one_pole, simulate, true_response)
from rkhs_sysid.simulation import INPUT_KINDS


def test_one_pole_response():
    sys_ = one_pole(0.8)
    assert true_response(sys_, 3) == pytest.approx(0.512, rel=1e-14)
    assert true_response(sys_, 0) == 1.0


def test_transfer_function_recursion_oracle():
    sys_ = TransferFunctionSystem((0.5, 0.2), (1.0, -1.1, 0.3))
    g = np.zeros(30)
    for t in range(30):
        x = (0.5 if t == 0 else 0.0) + (0.2 if t == 1 else 0.0)
        g[t] = x + 1.1 * (g[t - 1] if t >= 1 else 0) - 0.3 * (g[t - 2] if t >= 2 else 0)
    np.testing.assert_allclose(sys_.true_response(np.arange(30)), g, rtol=1e-12, atol=1e-15)
    assert sys_.pole_radius < 1


def test_unstable_rejected():
    with pytest.raises(InvalidArgument):
        one_pole(1.0)
    with pytest.raises(InvalidArgument):
        TransferFunctionSystem((1.0,), (1.0, -2.0, 1.2))


def test_table_system():
    sys_ = ImpulseTableSystem((1.0, 0.5, -0.25), 0.5, 1.0)
    assert sys_.true_response(1) == 0.5
    assert sys_.true_response(7) == 0.0
    assert sys_.tail_bound(0) == pytest.approx(0.5 ** 3 / 0.5)


def test_exponential_system_integral():
    sys_ = ExponentialSystem((1.0, -0.5), (1.0, 3.0))
    val = integrate.quad(lambda t: math.exp(-t) - 0.5 * math.exp(-3 * t), 0.2, 1.7)[0]
    assert sys_.integral(0.2, 1.7) == pytest.approx(val, rel=1e-12)


def test_simulate_impulse_and_step():
    sys_ = one_pole(0.8)
    imp = make_input("impulse", 20)
    np.testing.assert_allclose(simulate(sys_, imp, np.arange(20)), 0.8 ** np.arange(20),
                               rtol=1e-13)
    step = make_input("step", 200)
    assert simulate(sys_, step, [199])[0] == pytest.approx(5.0, abs=1e-6)


def test_simulate_linear(rng):
    sys_ = TransferFunctionSystem((1.0, 0.3), (1.0, -0.5))
    u1 = Signal.discrete(rng.uniform(-1, 1, 30))
    u2 = Signal.discrete(rng.uniform(-1, 1, 25), start=3)
    t = np.arange(40)
    np.testing.assert_allclose(simulate(sys_, u1 + u2, t),
                               simulate(sys_, u1, t) + simulate(sys_, u2, t), atol=1e-12)


def test_simulate_continuous():
    sys_ = ExponentialSystem((1.0,), (2.0,))
    u = Signal.piecewise([0.0, 1.0], [1.0, 0.0])
    # y(tau) = int_{tau-1}^{tau} e^{-2 s} ds over s >= 0
    tau = 1.5
    oracle = (math.exp(-2 * 0.5) - math.exp(-2 * 1.5)) / 2
    assert simulate(sys_, u, [tau])[0] == pytest.approx(oracle, rel=1e-13)


def test_simulate_domain_mismatch():
    with pytest.raises(InvalidArgument):
        simulate(one_pole(0.5), Signal.piecewise([0.0], [1.0]), [1.0])


def test_noise_behaviour():
    sys_ = one_pole(0.5)
    u = make_input("prbs", 10000, seed=3)
    t = np.arange(10000)
    clean = simulate(sys_, u, t)
    np.testing.assert_array_equal(make_dataset(sys_, u, t, NoiseSpec(0.0, 9)).outputs, clean)
    a = make_dataset(sys_, u, t, NoiseSpec(0.1, 9))
    b = make_dataset(sys_, u, t, NoiseSpec(0.1, 9))
    assert a.outputs.tobytes() == b.outputs.tobytes()
    sd = np.std(a.outputs - clean, ddof=1)
    assert abs(sd - 0.1) <= 0.005


def test_noise_spec_rejects_negative():
    with pytest.raises(InvalidArgument):
        NoiseSpec(-1.0)


def test_inputs():
    imp = make_input("impulse", 10)
    assert imp.values[0] == 1.0 and not imp.values[1:].any()
    prbs = make_input("prbs", 127, seed=4)
    assert set(np.unique(prbs.values)) <= {-1.0, 1.0} and prbs.sup_norm == 1.0
    r1 = make_input("uniform_random", 50, amplitude=2.0, seed=7)
    r2 = make_input("uniform_random", 50, amplitude=2.0, seed=7)
    assert r1.values.tobytes() == r2.values.tobytes()
    assert np.max(np.abs(r1.values)) <= 2.0
    for kind in INPUT_KINDS:
        u = make_input(kind, 16, domain="continuous", dt=0.5)
        assert u.times[-1] == 8.0 and u.values[-1] == 0.0
    with pytest.raises(InvalidArgument):
        make_input("chirp", 10)


def test_dataset_validation():
    u = make_input("step", 5)
    with pytest.raises(InvalidArgument):
        Dataset(u, [0, 2, 1], [0.0, 0.0, 0.0])
    with pytest.raises(InvalidArgument):
        Dataset(u, [0, 1], [0.0])
    with pytest.raises(InvalidArgument):
        Dataset(u, [0, 1], [0.0, float("inf")])
    d = Dataset(u, [0, 1, 2, 3], [1.0, 2.0, 3.0, 4.0])
    assert d.subset([3, 1]).outputs.tolist() == [2.0, 4.0]
