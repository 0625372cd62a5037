import threading

import numpy as np
import pytest

from chemns.diagnostics import DiagnosticsConfig
from chemns.errors import ConfigurationError, SuspectedSingularity
from chemns.initial import gaussian_blob
from chemns.model import ModelParams, State, constant, linear, saturating
from chemns.spectral import SpectralGrid, lp_norm
from chemns.timestep import IF_EULER, IF_RK2, Stepper, StepperConfig, run


def heat_params(grid, alpha=1.0):
    return ModelParams(alpha, constant(0.0), constant(0.0), grid.vector_zeros())


def chemo_params(grid, alpha=1.0, gy=0.1):
    gp = grid.vector_zeros()
    gp[1] = gy
    return ModelParams(alpha, constant(1.0), linear(1.0), gp)


@pytest.fixture(scope="module")
def blob():
    g = SpectralGrid((32, 32))
    return g, gaussian_blob(g, 1.0, 1.0, 0.6, center=(2.5, np.pi), c_center=(3.8, np.pi))


class TestStepperConfig:
    @pytest.mark.parametrize(
        "kwargs",
        [
            dict(dt_init=0.0, t_end=1.0),
            dict(dt_init=0.1, t_end=1.0, cfl=1.5),
            dict(dt_init=0.1, t_end=-1.0),
            dict(dt_init=0.1, t_end=1.0, scheme="rk4"),
            dict(dt_init=0.1, t_end=1.0, max_dt_halvings=-1),
        ],
    )
    def test_rejects(self, kwargs):
        with pytest.raises(ConfigurationError):
            StepperConfig(**kwargs)

    def test_scheme_case_insensitive(self):
        assert StepperConfig(0.1, 1.0, scheme="IF-Euler").scheme == IF_EULER


class TestSemigroup:
    @pytest.mark.parametrize("scheme", [IF_RK2, IF_EULER])
    def test_zero_state(self, grid3, scheme):
        st = Stepper(grid3, chemo_params(grid3), StepperConfig(0.01, 1.0, scheme=scheme))
        new, dt, rej = st.step(State.zeros(grid3))
        assert rej == 0 and dt == 0.01
        assert not new.n.any() and not new.c.any() and not new.u.any()

    @pytest.mark.parametrize("alpha", [1.0, 0.75, 1.5])
    @pytest.mark.parametrize("scheme", [IF_RK2, IF_EULER])
    def test_shear_mode(self, grid3, alpha, scheme):
        # u . grad u vanishes for a shear flow, so the step is the exact semigroup
        _, y, _ = grid3.coords()
        eps = 0.1
        u = grid3.vector_zeros()
        u[0] = eps * np.sin(2 * y)
        state = State(grid3, grid3.zeros(), grid3.zeros(), u)
        dt = 0.05
        st = Stepper(grid3, heat_params(grid3, alpha), StepperConfig(dt, 1.0, scheme=scheme))
        new = st.advance(state, dt)
        expected = u * np.exp(-(2.0 ** (2 * alpha)) * dt)
        assert np.max(np.abs(new.u - expected)) <= 1e-13 * eps

    def test_heat_100_steps(self, grid2, rng):
        from conftest import bandlimited

        c0 = 1.0 + 0.3 * bandlimited(grid2, rng, kmax=6)
        state = State(grid2, grid2.zeros(), c0, grid2.vector_zeros())
        dt = 0.01
        st = Stepper(grid2, heat_params(grid2), StepperConfig(dt, 1.0))
        for _ in range(100):
            state = st.advance(state, dt)
        exact = grid2.inverse(grid2.forward(c0) * np.exp(-grid2.k2 * state.t))
        assert np.max(np.abs(state.c - exact)) <= 1e-12 * np.max(np.abs(c0))


class TestRun:
    def test_t_end_zero(self, blob):
        g, s0 = blob
        res = run(s0, chemo_params(g), StepperConfig(0.01, 0.0), diagnostics=DiagnosticsConfig(norms=("c:L2",)))
        assert res.accepted == 0 and len(res.records) == 1
        assert res.final_state is s0
        assert res.records[0].t == 0.0

    def test_parseval_closed_form(self, grid2, rng):
        from conftest import bandlimited

        c0 = 2.0 + bandlimited(grid2, rng, kmax=5)
        s0 = State(grid2, grid2.zeros(), c0, grid2.vector_zeros())
        t_end = 0.37
        res = run(s0, heat_params(grid2), StepperConfig(0.01, t_end))
        assert res.final_state.t == t_end
        ch = grid2.forward(c0)
        closed = np.sqrt(grid2.volume * np.sum(grid2.weights * np.abs(ch) ** 2 * np.exp(-2 * grid2.k2 * t_end)))
        assert lp_norm(grid2, res.final_state.c, 2) == pytest.approx(closed, rel=1e-10)

    def test_cadence_includes_last(self, blob):
        g, s0 = blob
        res = run(s0, chemo_params(g), StepperConfig(0.01, 0.105), diagnostics=DiagnosticsConfig(cadence=4))
        ts = [r.t for r in res.records]
        assert ts[0] == 0.0 and ts[-1] == 0.105
        assert len(ts) == 1 + res.accepted // 4 + (res.accepted % 4 != 0)

    def test_hooks_see_every_step(self, blob):
        g, s0 = blob
        seen = []
        run(s0, chemo_params(g), StepperConfig(0.01, 0.05), hooks=[lambda s, r: seen.append(s.t)])
        assert seen[0] == 0.0 and len(seen) == 6
        assert seen[-1] == 0.05

    def test_dt_control(self, blob):
        g, s0 = blob
        cfg = StepperConfig(0.02, 0.5)
        times = []
        run(s0, chemo_params(g), cfg, hooks=[lambda s, r: times.append(s.t)])
        dts = np.diff(times)
        assert np.all(dts > 0) and np.all(dts <= cfg.dt_init * (1 + 1e-12))
        assert np.all(dts[1:-1] <= 2 * dts[:-2] * (1 + 1e-12))

    def test_invariants_along_nonlinear_run(self, blob):
        g, s0 = blob
        params = ModelParams(1.0, saturating(1.0), saturating(1.0), chemo_params(g).grad_phi)
        masses = []
        res = run(
            s0,
            params,
            StepperConfig(0.005, 0.3),
            diagnostics=DiagnosticsConfig(norms=("c:L2", "c:Linf")),
            hooks=[lambda s, r: masses.append(s.n.sum() * g.cell_volume)],
        )
        assert res.failures == []
        assert np.max(np.abs(np.array(masses) - masses[0])) <= 1e-11 * masses[0]
        c2 = [r.norms["c:L2"] for r in res.records]
        assert all(b <= a * (1 + 1e-10) for a, b in zip(c2, c2[1:]))
        assert min(r.extrema["c_min"] for r in res.records) >= -1e-8

    def test_suspected_singularity_carries_record(self, blob, monkeypatch):
        g, s0 = blob
        monkeypatch.setattr(Stepper, "violations", lambda self, state: ["n >= 0"])
        with pytest.raises(SuspectedSingularity) as info:
            run(s0, chemo_params(g), StepperConfig(0.01, 1.0, max_dt_halvings=3), diagnostics=DiagnosticsConfig())
        assert info.value.record is not None and info.value.record.t == 0.0
        assert "n >= 0" in str(info.value)

    def test_rejection_halves_dt(self, blob, monkeypatch):
        g, s0 = blob
        calls = []
        real = Stepper.violations

        def flaky(self, state):
            calls.append(state.t)
            return ["div u = 0"] if len(calls) == 1 else real(self, state)

        monkeypatch.setattr(Stepper, "violations", flaky)
        st = Stepper(g, chemo_params(g), StepperConfig(0.01, 1.0))
        new, dt, rej = st.step(s0)
        assert rej == 1 and dt == 0.005 and new.t == 0.005

    def test_independent_runs_in_threads(self, blob):
        g, s0 = blob
        cfg = StepperConfig(0.01, 0.1)
        ref = run(s0, chemo_params(g), cfg).final_state
        out = [None, None]

        def work(i):
            out[i] = run(s0, chemo_params(g), cfg).final_state

        threads = [threading.Thread(target=work, args=(i,)) for i in range(2)]
        for t in threads:
            t.start()
        for t in threads:
            t.join()
        for o in out:
            assert np.array_equal(o.n, ref.n) and np.array_equal(o.u, ref.u)
