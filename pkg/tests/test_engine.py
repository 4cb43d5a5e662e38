import json
import math
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.linalg import expm

from qhdbench.corpus import UnknownFunction, lookup, rescale_to_hypercube, wrap_barrier
from qhdbench.engine import (
    DESK_POINTS,
    ConfigError,
    QHDConfig,
    Schedule,
    SizeLimit,
    config_from_document,
    dense_propagator_reference,
    evolve,
    kinetic_step,
    load_document,
    potential_phase_step,
    trajectory,
    trotter_step,
)
from qhdbench.grid import GridSpec, WaveFunction, cos_product_state, plane_wave, probability, to_momentum, uniform_state


def dft_matrix(n):
    j = np.arange(n)
    return np.exp(-2j * np.pi * np.outer(j, j) / n) / np.sqrt(n)


def expm_oracle(config):
    """Piecewise-constant-lambda evolution with scipy's matrix exponential (1D)."""
    g = config.grid
    F = dft_matrix(g.n)
    kin = F.conj().T @ np.diag(0.5 * g.frequencies**2) @ F
    v = np.diag(config.objective.values(g.points()))
    psi = uniform_state(g).amplitudes
    for j in range(config.iterations):
        lam = config.schedule(config.t_start + (j + 0.5) * config.h)
        psi = expm(-1j * config.h * (kin / lam + lam * v)) @ psi
    return psi


def abs_config(n=32, h=0.01, K=100, schedule=None, t_start=None, L=1.0):
    obj = wrap_barrier(rescale_to_hypercube(lookup("ABS"), L))
    return QHDConfig(GridSpec(1, n, L), schedule or Schedule.convex(), h, K, obj, t_start=t_start)


class TestSchedule:
    def test_strongly_convex(self):
        assert Schedule.strongly_convex(1.0)(1.0) == pytest.approx(math.e**2)
        assert Schedule.strongly_convex(4.0)(0.5) == pytest.approx(math.e**2)

    def test_convex(self):
        assert Schedule.convex()(2.0) == 8.0

    def test_nonconvex(self):
        assert Schedule.nonconvex(3.0)(8.0) == pytest.approx(6.0)

    def test_custom_interpolates(self):
        s = Schedule.custom([(0, 1), (1, 3)])
        assert s(0.5) == pytest.approx(2.0)
        assert s(5.0) == 3.0

    def test_constant(self):
        assert Schedule.constant(2.5)(123.0) == 2.5

    def test_vectorized(self):
        np.testing.assert_allclose(Schedule.convex()(np.array([1.0, 2.0])), [1.0, 8.0])

    @pytest.mark.parametrize(
        "kwargs",
        [
            {"kind": "SC"},
            {"kind": "SC", "mu": -1.0},
            {"kind": "NC", "alpha": 0.0},
            {"kind": "custom"},
            {"kind": "custom", "table": ((0, 1), (0, 2))},
            {"kind": "custom", "table": ((0, -1.0),)},
            {"kind": "XYZ"},
        ],
    )
    def test_rejects(self, kwargs):
        with pytest.raises(ConfigError):
            Schedule(**kwargs)

    @given(L=st.floats(0.1, 10), tau=st.floats(0.01, 3))
    @settings(max_examples=100, deadline=None)
    def test_rescaled(self, L, tau):
        for s in (Schedule.convex(), Schedule.strongly_convex(0.7), Schedule.nonconvex(2.0)):
            assert s.rescaled(L)(tau) == pytest.approx(L * s(L * tau), rel=1e-12)

    def test_default_start(self):
        assert Schedule.convex().default_t_start == 0.1
        assert Schedule.nonconvex().default_t_start == 0.1
        assert Schedule.strongly_convex(1).default_t_start == 0.0

    def test_to_dict(self):
        assert Schedule.strongly_convex(2.0).to_dict() == {"kind": "SC", "mu": 2.0}
        assert Schedule.convex().rescaled(2.0).to_dict()["amplitude"] == 2.0


class TestConfig:
    def test_times(self):
        c = abs_config(h=0.5, K=3, t_start=1.0)
        np.testing.assert_allclose(c.times(), [1.5, 2.0, 2.5])
        assert c.t_end == 2.5

    @pytest.mark.parametrize("h", [0.0, -1e-3, float("nan")])
    def test_bad_step(self, h):
        with pytest.raises(ConfigError):
            abs_config(h=h)

    def test_negative_iterations(self):
        with pytest.raises(ConfigError):
            abs_config(K=-1)

    def test_convex_needs_positive_start(self):
        with pytest.raises(ConfigError):
            abs_config(t_start=0.0)

    def test_sc_allows_zero_start(self):
        assert abs_config(schedule=Schedule.strongly_convex(1.0)).t_start == 0.0

    def test_dimension_mismatch(self):
        with pytest.raises(ConfigError):
            QHDConfig(GridSpec(2, 16, 1.0), Schedule.convex(), 0.1, 1, lookup("ABS"))

    def test_unknown_initial_state(self):
        with pytest.raises(ConfigError):
            QHDConfig(GridSpec(1, 16, 1.0), Schedule.convex(), 0.1, 1, lookup("ABS"), initial_state="gauss")


class TestSteps:
    def test_kinetic_matches_dft_matrix(self):
        g = GridSpec(1, 16, 1.3)
        rng = np.random.default_rng(0)
        psi = WaveFunction(g, rng.standard_normal(16) + 1j * rng.standard_normal(16))
        F = dft_matrix(16)
        want = F.conj().T @ (np.exp(-1j * 0.2 * g.frequencies**2 / (2 * 1.7)) * (F @ psi.amplitudes))
        np.testing.assert_allclose(kinetic_step(psi, 1.7, 0.2).amplitudes, want, atol=1e-13)

    @pytest.mark.parametrize("m", [0, 1, 3, -2])
    def test_plane_wave_eigenstate(self, m):
        g = GridSpec(1, 32, 1.0)
        pw = plane_wave(g, m)
        kappa = np.pi * m
        out = kinetic_step(pw, 2.0, 0.1)
        np.testing.assert_allclose(out.amplitudes, np.exp(-1j * 0.1 * kappa**2 / 4.0) * pw.amplitudes, atol=1e-13)

    def test_kinetic_2d_separable(self):
        g = GridSpec(2, 8, 1.0)
        pw = plane_wave(g, (1, 2))
        out = kinetic_step(pw, 1.0, 0.3)
        k2 = np.pi**2 * 5
        np.testing.assert_allclose(out.amplitudes, np.exp(-0.15j * k2) * pw.amplitudes, atol=1e-13)

    def test_potential_phase(self):
        g = GridSpec(1, 16, 1.0)
        psi = uniform_state(g)
        out = potential_phase_step(psi, lookup("SQUARE"), 3.0, 0.1)
        np.testing.assert_allclose(out.amplitudes, psi.amplitudes * np.exp(-0.3j * g.axis**2))

    def test_trotter_step_order(self):
        c = abs_config(n=16, h=0.05, K=1, t_start=1.0)
        via_step = trotter_step(uniform_state(c.grid), c.objective, 1.05, 0.05, c.schedule)
        *_, (k, t, amps) = trajectory(c)
        assert (k, t) == (1, pytest.approx(1.05))
        np.testing.assert_allclose(amps, via_step.amplitudes, atol=1e-14)

    def test_constant_potential_is_global_phase(self):
        g = GridSpec(1, 16, 1.0)
        flat = np.zeros(16)
        c = QHDConfig(g, Schedule.convex(), 0.1, 20, lookup("ABS"))
        *_, (_, _, amps) = trajectory(c, values=flat + 0.3)
        ratio = amps / uniform_state(g).amplitudes
        assert np.ptp(np.abs(ratio)) < 1e-13
        assert np.ptp(np.angle(ratio)) < 1e-12


class TestEvolve:
    @given(
        name=st.sampled_from(["ABS", "SQUARE", "EXPABS"]),
        h=st.floats(1e-3, 0.5),
        n=st.sampled_from([8, 64, 256]),
    )
    @settings(max_examples=30, deadline=None)
    def test_unitarity(self, name, h, n):
        c = QHDConfig(GridSpec(1, n, 1.0), Schedule.convex(), h, 200, wrap_barrier(lookup(name)))
        tr = evolve(c)
        assert np.max(np.abs(tr.norm - 1.0)) < 1e-12

    def test_trace_fields(self):
        c = abs_config(K=50)
        tr = evolve(c, keep_state=True)
        assert len(tr) == 50
        np.testing.assert_array_equal(tr.k, np.arange(1, 51))
        np.testing.assert_allclose(tr.kh, 0.01 * tr.k)
        assert np.all(np.diff(tr.gap) <= 0)
        assert np.all(tr.gap >= -1e-15)
        assert tr.gap[0] == pytest.approx(tr.expected_f[0] - tr.f_min)
        assert tr.final_state.norm() == pytest.approx(1.0)
        assert tr.final_field.mass.sum() == pytest.approx(1.0)

    def test_initial_expected(self):
        tr = evolve(abs_config(n=64, K=1))
        assert tr.initial_expected_f == pytest.approx(np.mean(np.abs(GridSpec(1, 64, 1.0).axis)))

    def test_zero_iterations(self):
        tr = evolve(abs_config(K=0))
        assert len(tr) == 0
        assert tr.terminal_gap == pytest.approx(tr.initial_expected_f)

    def test_deterministic(self):
        a, b = evolve(abs_config()), evolve(abs_config())
        np.testing.assert_array_equal(a.expected_f, b.expected_f)

    def test_callback(self):
        seen = []
        evolve(abs_config(K=7), callback=lambda k, t, psi: seen.append(k))
        assert seen == list(range(1, 8))

    def test_csv(self, tmp_path):
        tr = evolve(abs_config(K=5))
        data = np.genfromtxt(tr.to_csv(tmp_path / "t.csv"), delimiter=",", names=True)
        assert data.dtype.names == ("k", "t", "expected_f", "gap")
        np.testing.assert_allclose(data["gap"], tr.gap)

    def test_gap_decreases_on_abs(self):
        tr = evolve(abs_config(n=256, h=0.05, K=200))
        assert tr.terminal_gap < 0.2 * (tr.initial_expected_f - tr.f_min)

    def test_rescaled_equivalence_fast(self):
        c = abs_config(n=32, h=0.02, K=60, L=2.0, t_start=0.2)
        a = evolve(c, keep_state=True).final_state.amplitudes
        b = evolve(c.rescaled_to_unit(), keep_state=True).final_state.amplitudes
        np.testing.assert_allclose(a * np.sqrt(2.0), b, atol=1e-10)


class TestDenseReference:
    def test_matches_expm_oracle(self):
        c = abs_config(n=16, h=0.05, K=10, t_start=1.0)
        ref = dense_propagator_reference(c).amplitudes
        np.testing.assert_allclose(ref, expm_oracle(c), atol=1e-11)

    def test_trotter_converges_first_order(self):
        errs = []
        for h in (1 / 32, 1 / 64, 1 / 128):
            c = abs_config(n=16, h=h, K=int(round(1 / h)), t_start=1.0, schedule=Schedule.constant(1.0))
            *_, (_, _, amps) = trajectory(c)
            errs.append(np.linalg.norm(amps - dense_propagator_reference(c).amplitudes))
        ratios = np.array(errs[:-1]) / np.array(errs[1:])
        np.testing.assert_allclose(ratios, 2.0, atol=0.15)

    def test_size_limit(self):
        c = QHDConfig(GridSpec(2, 128, 1.0), Schedule.convex(), 0.1, 1, lookup("XINSHEYANG04"))
        with pytest.raises(SizeLimit):
            dense_propagator_reference(c)


class TestDocuments:
    def test_k_from_t(self):
        c = config_from_document({"function": "ABS", "h": 0.03, "T": 1.0})
        assert c.iterations == 33

    def test_explicit_k(self):
        assert config_from_document({"function": "ABS", "K": 7}).iterations == 7

    @pytest.mark.parametrize("name", ["SCHWEFEL", "ACKLEY", "DROPWAVE"])
    def test_desk_defaults(self, name):
        c = config_from_document({"function": name})
        assert c.grid.n == DESK_POINTS[c.grid.dim]
        assert c.h == 1e-3
        assert c.iterations == 10_000
        assert c.schedule.kind == "C" and c.t_start == 0.1

    def test_objective_rescaled_and_wrapped(self):
        c = config_from_document({"function": "SCHWEFEL", "L": 2.0, "growth_rate": 50})
        assert c.grid.half_width == 2.0
        assert c.objective.growth_rate == 50
        assert c.objective.lower == (-2.0,)

    def test_schedule_documents(self):
        c = config_from_document({"function": "ABS", "schedule": {"kind": "SC", "mu": 2.0}})
        assert c.schedule == Schedule.strongly_convex(2.0)
        c = config_from_document({"function": "ABS", "schedule": {"kind": "custom", "table": [[0, 1], [1, 2]]}})
        assert c.schedule(0.5) == pytest.approx(1.5)

    def test_unknown_function(self):
        with pytest.raises(UnknownFunction):
            config_from_document({"function": "NOPE"})

    @pytest.mark.parametrize(
        "doc", [{}, {"function": "ABS", "L": -1}, {"function": "ABS", "h": 0}, {"function": "ABS", "N": 100}]
    )
    def test_config_errors(self, doc):
        with pytest.raises(ConfigError):
            config_from_document(doc)

    def test_load_json_and_toml(self, tmp_path):
        (tmp_path / "a.json").write_text(json.dumps({"function": "ABS", "h": 0.1}))
        (tmp_path / "a.toml").write_text('function = "ABS"\nh = 0.1\n[schedule]\nkind = "SC"\nmu = 1.0\n')
        assert load_document(tmp_path / "a.json") == {"function": "ABS", "h": 0.1}
        doc = load_document(tmp_path / "a.toml")
        assert config_from_document(doc).schedule.kind == "SC"

    def test_bad_json(self, tmp_path):
        (tmp_path / "b.json").write_text("{nope")
        with pytest.raises(ConfigError):
            load_document(tmp_path / "b.json")


def random_wavefunction(grid, seed):
    rng = np.random.default_rng(seed)
    return WaveFunction(grid, rng.standard_normal(grid.shape) + 1j * rng.standard_normal(grid.shape)).normalized()


def constant_objective(value):
    return replace(lookup("SQUARE"), func=lambda x: np.full(np.shape(x)[:-1], value), known_min_value=value)


class TestSmallCases:
    G = GridSpec(1, 32, 1.0)

    def test_potential_keeps_modulus(self):
        psi = random_wavefunction(self.G, 0)
        out = potential_phase_step(psi, lookup("ABS"), 7.0, 0.3)
        np.testing.assert_allclose(np.abs(out.amplitudes), np.abs(psi.amplitudes), rtol=0, atol=1e-15)
        np.testing.assert_allclose(probability(out).mass, probability(psi).mass, rtol=1e-14)

    def test_zero_potential_is_identity(self):
        psi = random_wavefunction(self.G, 1)
        out = potential_phase_step(psi, constant_objective(0.0), 5.0, 0.2)
        np.testing.assert_array_equal(out.amplitudes, psi.amplitudes)

    def test_potential_sign_flip(self):
        psi = random_wavefunction(self.G, 2)
        out = potential_phase_step(psi, constant_objective(10 * np.pi), 1.0, 0.1)
        np.testing.assert_allclose(out.amplitudes, -psi.amplitudes, atol=1e-14)

    def test_uniform_unchanged_by_kinetic(self):
        psi = uniform_state(self.G)
        np.testing.assert_allclose(kinetic_step(psi, 0.7, 0.4).amplitudes, psi.amplitudes, atol=1e-14)

    def test_kinetic_keeps_momentum_mass(self):
        psi = random_wavefunction(self.G, 3)
        before = np.abs(to_momentum(psi).amplitudes) ** 2
        after = np.abs(to_momentum(kinetic_step(psi, 0.5, 0.3)).amplitudes) ** 2
        np.testing.assert_allclose(after, before, atol=1e-14)

    def test_zero_potential_trotter_is_kinetic(self):
        psi = random_wavefunction(self.G, 4)
        sched = Schedule.convex()
        a = trotter_step(psi, constant_objective(0.0), 1.3, 0.05, sched).amplitudes
        np.testing.assert_allclose(a, kinetic_step(psi, sched(1.3), 0.05).amplitudes, atol=1e-15)

    def test_constant_objective_has_zero_gap(self):
        tr = evolve(QHDConfig(self.G, Schedule.convex(), 0.05, 40, constant_objective(2.5)))
        assert tr.initial_expected_f == pytest.approx(2.5)
        np.testing.assert_allclose(tr.gap, 0.0, atol=1e-12)

    def test_large_step_stalls_on_square(self):
        # wide box: h = 1 leaves most of the initial gap, small h does not
        L = 5.0
        sq = wrap_barrier(replace(lookup("SQUARE"), lower=(-L,), upper=(L,)))
        out = {}
        for h in (1.0, 0.05):
            tr = evolve(QHDConfig(GridSpec(1, 256, L), Schedule.convex(), h, int(round(10 / h)), sq))
            out[h] = (tr.initial_expected_f, tr.terminal_gap)
        assert out[1.0][1] > out[1.0][0] / 10
        assert out[0.05][1] < out[0.05][0] / 100


class TestDenseSmallCases:
    def test_free_evolution_matches_kinetic_chain(self):
        g = GridSpec(1, 16, 1.0)
        c = QHDConfig(g, Schedule.constant(2.0), 0.1, 10, constant_objective(0.0), initial_state="cos_product")
        ref = dense_propagator_reference(c).amplitudes
        chain = cos_product_state(g)
        for _ in range(10):
            chain = kinetic_step(chain, 2.0, 0.1)
        np.testing.assert_allclose(ref, chain.amplitudes, atol=1e-10)

    def test_tiny_single_step(self):
        g = GridSpec(1, 16, 1.0)
        c = QHDConfig(g, Schedule.constant(1.0), 1e-4, 1, lookup("SQUARE"))
        one = trotter_step(uniform_state(g), c.objective, c.t_start, 1e-4, c.schedule).amplitudes
        assert np.max(np.abs(one - dense_propagator_reference(c).amplitudes)) <= 1e-7

    def test_one_step_error_is_second_order(self):
        g = GridSpec(1, 16, 1.0)
        errs = []
        for h in (4e-3, 2e-3, 1e-3, 5e-4):
            c = QHDConfig(g, Schedule.constant(1.0), h, 1, lookup("SQUARE"))
            one = trotter_step(uniform_state(g), c.objective, c.t_start, h, c.schedule).amplitudes
            errs.append(np.linalg.norm(one - dense_propagator_reference(c).amplitudes))
        ratios = np.array(errs[:-1]) / np.array(errs[1:])
        np.testing.assert_allclose(ratios, 4.0, atol=0.5)
