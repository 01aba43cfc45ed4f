import numpy as np
import pytest

from condobs.engine import (
    EngineError,
    IntegratorConfig,
    Multisine,
    NoiseConfig,
    NumericalError,
    euler_step,
    input_preset,
    make_measurement,
    noise_std,
    run_experiment,
)
from condobs.model import (
    assemble_phi_all,
    hh2_initial_state,
    hh2_observer_init,
    hh_two_neuron_preset,
    model_preset,
)
from condobs.observer import gain_preset


class TestConfigs:
    def test_integrator_validation(self):
        with pytest.raises(EngineError):
            IntegratorConfig(t_end=10.0, dt=0.0)
        with pytest.raises(EngineError):
            IntegratorConfig(t_end=1e-5, dt=1e-4)
        with pytest.raises(EngineError):
            IntegratorConfig(t_end=10.0, record_stride=0)
        assert IntegratorConfig(t_end=1.0).n_steps == 10000

    def test_noise_validation(self):
        with pytest.raises(EngineError):
            NoiseConfig(True, snr_db=float("nan"))

    def test_multisine_validation(self):
        with pytest.raises(EngineError):
            Multisine(offset=(1.0,), terms=(((1.0, 0.0),),))
        with pytest.raises(EngineError):
            Multisine(offset=(1.0, 2.0), terms=(((1.0, 5.0),),))


class TestEulerStep:
    def test_zero_derivative(self):
        x = np.array([1.0, -2.0])
        np.testing.assert_array_equal(euler_step(lambda t, x: 0.0 * x, x, 0.0, 1e-4), x)

    def test_exponential_decay(self):
        x = np.array([1.0])
        for i in range(10_000):
            x = euler_step(lambda t, x: -x, x, i * 1e-4, 1e-4)
        assert x[0] == pytest.approx(np.exp(-1.0), rel=1e-4)

    def test_covariance_equilibrium(self):
        # p_dot = alpha p - alpha p^2 psi^2 settles at 1/psi^2
        alpha, psi = 0.15, 2.0
        p = np.array([1.0])

        def f(t, p):
            return alpha * p - alpha * p * p * psi * psi

        for i in range(100_000):
            p = euler_step(f, p, i * 1e-2, 1e-2)
        assert p[0] == pytest.approx(1.0 / psi ** 2, rel=1e-6)

    def test_nonfinite_derivative_rejected(self):
        with pytest.raises(NumericalError) as exc:
            euler_step(lambda t, x: x * np.nan, np.ones(1), 3.5, 1e-4)
        assert exc.value.t == 3.5

    def test_bad_dt(self):
        with pytest.raises(EngineError):
            euler_step(lambda t, x: x, np.ones(1), 0.0, 0.0)


class TestMeasurement:
    def test_disabled_is_identity(self):
        v = np.array([-60.0, 10.0])
        rng = np.random.default_rng(0)
        np.testing.assert_array_equal(
            make_measurement(v, NoiseConfig(False), rng), v)

    def test_std_definition(self):
        # 40 dB means noise std is 1% of the signal rms
        cfg = NoiseConfig(True, 40.0, reference=(3.0, 5.0))
        np.testing.assert_allclose(noise_std(cfg), [0.03, 0.05], rtol=1e-12)

    def test_reference_required(self):
        with pytest.raises(EngineError):
            make_measurement(np.zeros(2), NoiseConfig(True, 40.0),
                             np.random.default_rng(0))

    def test_empirical_snr(self):
        rng = np.random.default_rng(12)
        t = np.arange(1_000_000) * 1e-4
        v = 30.0 * np.sin(2 * np.pi * t / 7.0)
        rms = float(np.sqrt(np.mean(v ** 2)))
        cfg = NoiseConfig(True, 40.0, reference=(rms,))
        e = make_measurement(v, cfg, rng) - v
        snr_db = 10.0 * np.log10(np.mean(v ** 2) / np.mean(e ** 2))
        assert snr_db == pytest.approx(40.0, abs=0.5)


class TestInputPresets:
    def test_channel_values(self):
        u = input_preset("hh2")
        np.testing.assert_allclose(u(0.0), [2.0, 1.0], atol=1e-12)
        # t = 35: sin(7 pi) = sin(10 pi) = 0, sin(17.5 pi) = -1
        np.testing.assert_allclose(u(35.0)[0], 1.0, atol=1e-10)

    def test_zero_preset(self):
        u = input_preset("zero", 3)
        np.testing.assert_array_equal(u(17.3), [0.0, 0.0, 0.0])

    def test_unknown(self):
        with pytest.raises(EngineError):
            input_preset("chirp")


@pytest.fixture(scope="module")
def run_args(hh2):
    return dict(x0=hh2_initial_state(), observer_init=hh2_observer_init())


class TestRunExperiment:
    def test_determinism(self, hh2, run_args):
        integ = IntegratorConfig(t_end=5.0, rng_seed=7)
        kw = dict(noise=NoiseConfig(True, 40.0), inputs=input_preset("hh2"), **run_args)
        tr1 = run_experiment(hh2, "distributed-scalar", gain_preset("A"), integ, **kw)
        tr2 = run_experiment(hh2, "distributed-scalar", gain_preset("A"), integ, **kw)
        assert tr1.columns == tr2.columns
        np.testing.assert_array_equal(tr1.data, tr2.data)

    def test_clean_noisy_separation(self, hh2, run_args):
        integ = IntegratorConfig(t_end=5.0, rng_seed=7)
        clean = run_experiment(hh2, "distributed-scalar", gain_preset("A"), integ,
                               NoiseConfig(False), input_preset("hh2"), **run_args)
        noisy = run_experiment(hh2, "distributed-scalar", gain_preset("A"), integ,
                               NoiseConfig(True, 40.0), input_preset("hh2"), **run_args)
        for c in ("v.1", "v.2", "w.Na.m1", "w.G.s21"):
            np.testing.assert_array_equal(clean.column(c), noisy.column(c))
        assert np.any(noisy.column("vmeas.1") != noisy.column("v.1"))
        np.testing.assert_array_equal(clean.column("vmeas.1"), clean.column("v.1"))

    def test_dt_halving_first_order(self, hh2, run_args):
        finals = {}
        for dt in (4e-4, 2e-4, 1e-4):
            tr = run_experiment(
                hh2, "distributed-scalar", gain_preset("A"),
                IntegratorConfig(t_end=50.0, dt=dt, record_stride=int(1e-2 / dt)),
                NoiseConfig(False), input_preset("hh2"), **run_args)
            finals[dt] = tr.block("theta_hat")[-1]
        num = np.linalg.norm(finals[4e-4] - finals[2e-4])
        den = np.linalg.norm(finals[2e-4] - finals[1e-4])
        assert num / den == pytest.approx(2.0, rel=0.35)

    def test_gating_in_unit_interval(self, short_scalar_trace):
        w = short_scalar_trace.block("w")
        assert w.min() >= 0.0 and w.max() <= 1.0

    def test_covariance_stays_positive(self, short_scalar_trace):
        assert short_scalar_trace.block("mineig_P").min() > 0.0

    def test_filter_bound(self, hh2, short_scalar_trace):
        # ||Psi|| <= max(||Psi(0)||, sup||Phi|| / gamma_min), with grid slack
        tr = short_scalar_trace
        phi_max = 0.0
        v = tr.block("v")
        w = tr.block("what")  # the filter is driven by the gating estimates
        for i in range(tr.n_samples):
            phi = assemble_phi_all(hh2, v[i], w[i])
            phi_max = max(phi_max, np.abs(phi).max())
        psi_max = np.abs(tr.block("psi")).max()
        assert psi_max <= 1.2 * phi_max / min(gain_preset("A").gamma)

    def test_gating_estimate_contraction(self, short_scalar_trace):
        tr = short_scalar_trace
        err = np.linalg.norm(tr.block("what") - tr.block("w"), axis=1)
        assert err[0] > 1.0            # deliberately wrong initialization
        assert err[-1] < 1e-2
        env = np.maximum.accumulate(err[::-1])[::-1]
        t = tr.t
        assert np.all(np.diff(env[t >= 10.0]) <= 1e-12)

    def test_truth_initialized_estimates_stay_put(self, hh2, run_args):
        x0 = run_args["x0"]
        oi = dict(v0=x0.v.copy(), w0=x0.w.copy(), theta0=hh2.theta_at(0.0))
        tr = run_experiment(hh2, "distributed-scalar", gain_preset("A"),
                            IntegratorConfig(t_end=20.0), NoiseConfig(False),
                            input_preset("hh2"), x0=x0, observer_init=oi,
                            freeze_theta_at=0.0)
        drift = np.abs(tr.block("theta_hat") - tr.block("theta_true")).max()
        assert drift < 1e-6

    def test_kernel_matches_reference_stepper(self, hh2, run_args):
        # the compiled path must agree with a plain python Euler loop
        from condobs.observer import (
            DistributedObserverState,
            distributed_observer_derivative,
            init_observer,
        )
        from condobs.model import SystemState, system_derivative
        gains = gain_preset("A")
        n, dt = 2000, 1e-4
        tr = run_experiment(hh2, "distributed", gains,
                            IntegratorConfig(t_end=n * dt, record_stride=n),
                            NoiseConfig(False), input_preset("hh2"), **run_args)
        x = run_args["x0"].copy()
        oi = run_args["observer_init"]
        obs = init_observer(hh2, "distributed", oi["theta0"], oi["w0"], oi["v0"])
        u_fn = input_preset("hh2")
        for i in range(n):
            t = i * dt
            u = u_fn(t)
            dx = system_derivative(hh2, x, u, t)
            dobs = distributed_observer_derivative(hh2, obs, x.v, u, gains)
            x = SystemState(x.v + dt * dx.v, x.w + dt * dx.w)
            obs = DistributedObserverState(
                obs.v_hat + dt * dobs.v_hat, obs.w_hat + dt * dobs.w_hat,
                obs.theta_hat + dt * dobs.theta_hat,
                [m + dt * dm for m, dm in zip(obs.Psi, dobs.Psi)],
                [m + dt * dm for m, dm in zip(obs.P, dobs.P)])
        np.testing.assert_allclose(tr.block("v")[-1], x.v, rtol=1e-10, atol=1e-10)
        np.testing.assert_allclose(tr.block("vhat")[-1], obs.v_hat,
                                   rtol=1e-10, atol=1e-10)
        np.testing.assert_allclose(tr.block("theta_hat")[-1], obs.theta_hat,
                                   rtol=1e-10, atol=1e-10)

    def test_unstable_step_reports_time(self, hh2, run_args):
        with pytest.raises(NumericalError) as exc:
            run_experiment(hh2, "none", None,
                           IntegratorConfig(t_end=100.0, dt=1.0, record_stride=1),
                           NoiseConfig(False), input_preset("hh2"), **run_args)
        assert 0.0 < exc.value.t <= 100.0

    def test_mode_validation(self, hh2, run_args):
        with pytest.raises(EngineError):
            run_experiment(hh2, "kalman", None, IntegratorConfig(t_end=1.0),
                           NoiseConfig(False), input_preset("hh2"), **run_args)
        with pytest.raises(EngineError):
            run_experiment(hh2, "distributed", (2.0, 0.15),
                           IntegratorConfig(t_end=1.0), NoiseConfig(False),
                           input_preset("hh2"), **run_args)
