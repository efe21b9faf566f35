import numpy as np
import pytest

from test_statevector import qaoa_circuit
from vqebench import statevector as sv
from vqebench.freefermion import (
    FermionState,
    QaoaParams,
    apply_x_layer,
    apply_zz_layer,
    block_derivatives,
    energy,
    fubini,
    gradient,
    prepare_initial,
    simulate,
    state_energy,
)
from vqebench.models import TfimSpec, tfim_ground_energy, tfim_hamiltonian


def random_params(rng, blocks):
    return QaoaParams.from_vector(rng.uniform(0, 2 * np.pi, 2 * blocks))


class TestQaoaParams:
    def test_vector_round_trip(self):
        params = QaoaParams((0.1, 0.3), (0.2, 0.4))
        assert np.allclose(params.to_vector(), [0.1, 0.2, 0.3, 0.4])
        assert QaoaParams.from_vector(params.to_vector()) == params

    def test_validation(self):
        with pytest.raises(ValueError):
            QaoaParams((0.1,), (0.2, 0.3))
        with pytest.raises(ValueError):
            QaoaParams.from_vector([0.1, 0.2, 0.3])
        with pytest.raises(ValueError):
            QaoaParams((), ())


class TestPrepareInitial:
    def test_blocks(self):
        state = prepare_initial(TfimSpec(4, 1.0))
        assert state.blocks.shape == (2, 2)
        assert np.allclose(state.blocks[:, 0], 1.0)
        assert np.allclose(state.blocks[:, 1], 0.0)
        assert prepare_initial(TfimSpec(8, 1.0)).blocks.shape == (4, 2)

    @pytest.mark.parametrize("num_sites", [4, 6, 10])
    def test_energy_is_minus_field_times_sites(self, num_sites):
        state = prepare_initial(TfimSpec(num_sites, 1.0))
        assert state_energy(state) == pytest.approx(-num_sites, abs=1e-12)

    def test_odd_rejected(self):
        with pytest.raises(ValueError):
            prepare_initial(TfimSpec(5, 1.0))

    def test_norm_validation(self):
        with pytest.raises(ValueError):
            FermionState(np.array([[2.0, 0.0]], dtype=complex), np.array([np.pi / 2]), 1.0)


class TestLayers:
    def test_x_layer_fixes_initial_up_to_phase(self):
        state = prepare_initial(TfimSpec(6, 1.0))
        out = apply_x_layer(state, 0.83)
        per_block = np.abs(np.sum(out.blocks.conj() * state.blocks, axis=1))
        assert np.allclose(per_block, 1.0, atol=1e-12)
        assert state_energy(out) == pytest.approx(state_energy(state), abs=1e-12)

    def test_zz_layer_zero_angle(self):
        state = prepare_initial(TfimSpec(4, 1.0))
        out = apply_zz_layer(state, 0.0)
        assert np.allclose(out.blocks, state.blocks)

    def test_single_block_energy_matches_statevector(self):
        spec = TfimSpec(4, 1.0)
        state = apply_x_layer(apply_zz_layer(prepare_initial(spec), 0.3), 0.7)
        circuit = qaoa_circuit(4)
        sv_state = sv.run_circuit(circuit, np.array([0.3, 0.7, 0.0, 0.0]))
        expected = sv.energy(sv_state, tfim_hamiltonian(spec))
        assert state_energy(state) == pytest.approx(expected, abs=1e-12)

    def test_norm_drift_over_many_layers(self, rng):
        state = prepare_initial(TfimSpec(8, 1.0))
        for _ in range(5000):
            state = apply_zz_layer(state, rng.uniform(0, 2 * np.pi))
            state = apply_x_layer(state, rng.uniform(0, 2 * np.pi))
        norms = np.sum(np.abs(state.blocks) ** 2, axis=1)
        assert np.max(np.abs(norms - 1.0)) <= 1e-12


class TestEnergy:
    def test_identity_circuit(self):
        spec = TfimSpec(6, 1.0)
        params = QaoaParams((0.0, 0.0, 0.0), (0.0, 0.0, 0.0))
        assert energy(spec, params) == pytest.approx(-6.0, abs=1e-12)

    def test_two_site_optimum_reaches_ground_state(self):
        # grid search plus a local polish locates the exact minimum of the
        # p = 1 circuit, which contains the ground state at N = 2
        from scipy.optimize import minimize

        spec = TfimSpec(2, 1.0)
        grid = np.linspace(0, 2 * np.pi, 161)
        best = min(
            ((energy(spec, QaoaParams((a,), (b,))), a, b) for a in grid for b in grid),
            key=lambda t: t[0],
        )
        result = minimize(
            lambda v: energy(spec, QaoaParams.from_vector(v)),
            x0=np.array([best[1], best[2]]),
            method="Nelder-Mead",
            options={"xatol": 1e-12, "fatol": 1e-14},
        )
        assert result.fun == pytest.approx(-2.0 * np.sqrt(2.0), abs=1e-9)

    def test_matches_statevector_on_random_angles(self, rng):
        spec = TfimSpec(8, 1.0)
        params = random_params(rng, 4)
        circuit = qaoa_circuit(8)
        expected = sv.energy(
            sv.run_circuit(circuit, params.to_vector()), tfim_hamiltonian(spec)
        )
        assert energy(spec, params) == pytest.approx(expected, abs=1e-12)

    def test_two_pi_periodicity(self, rng):
        spec = TfimSpec(6, 0.7)
        params = random_params(rng, 3)
        base = energy(spec, params)
        vec = params.to_vector()
        for j in range(len(vec)):
            shifted = vec.copy()
            shifted[j] += 2 * np.pi
            assert energy(spec, QaoaParams.from_vector(shifted)) == pytest.approx(
                base, abs=1e-12
            )

    def test_variational_bound(self, rng):
        spec = TfimSpec(10, 1.0)
        e0 = tfim_ground_energy(spec)
        for _ in range(20):
            params = random_params(rng, 5)
            assert energy(spec, params) >= e0 - 1e-12


class TestGradient:
    def test_x_angle_gradient_vanishes_at_zero(self):
        spec = TfimSpec(8, 1.0)
        params = QaoaParams((0.0,) * 4, (0.0,) * 4)
        g = gradient(spec, params)
        assert np.max(np.abs(g[1::2])) <= 1e-14  # x-layer slots

    def test_against_finite_differences(self, rng):
        spec = TfimSpec(8, 1.0)
        params = random_params(rng, 4)
        g = gradient(spec, params)
        vec = params.to_vector()
        h = 1e-5
        fd = np.zeros_like(vec)
        for j in range(len(vec)):
            shift = np.zeros_like(vec)
            shift[j] = h
            fd[j] = (
                energy(spec, QaoaParams.from_vector(vec + shift))
                - energy(spec, QaoaParams.from_vector(vec - shift))
            ) / (2 * h)
        assert np.max(np.abs(g - fd)) / max(1.0, np.max(np.abs(fd))) <= 1e-6

    def test_matches_statevector_adjoint(self, rng):
        spec = TfimSpec(8, 1.0)
        params = random_params(rng, 4)
        expected = sv.gradient(
            qaoa_circuit(8), params.to_vector(), tfim_hamiltonian(spec)
        )
        assert np.max(np.abs(gradient(spec, params) - expected)) <= 1e-10

    def test_block_overlap_is_imaginary(self, rng):
        spec = TfimSpec(6, 1.0)
        params = random_params(rng, 3)
        psi, derivs = block_derivatives(spec, params)
        overlaps = np.einsum("qa,jqa->jq", psi.conj(), derivs)
        assert np.max(np.abs(overlaps.real)) <= 1e-12


class TestFubini:
    def test_x_rows_vanish_at_zero_angles(self):
        spec = TfimSpec(8, 1.0)
        params = QaoaParams((0.0,) * 4, (0.0,) * 4)
        f = fubini(spec, params)
        assert np.max(np.abs(f[1::2, :])) <= 1e-14
        assert np.max(np.abs(f[:, 1::2])) <= 1e-14

    def test_symmetric_psd(self, rng):
        spec = TfimSpec(10, 1.0)
        params = random_params(rng, 5)
        f = fubini(spec, params)
        assert np.allclose(f, f.T, atol=1e-12)
        assert np.linalg.eigvalsh(f)[0] >= -1e-12

    def test_matches_statevector(self, rng):
        spec = TfimSpec(6, 1.0)
        params = random_params(rng, 3)
        expected = sv.fubini(qaoa_circuit(6), params.to_vector())
        assert np.max(np.abs(fubini(spec, params) - expected)) <= 1e-10


class TestSimulate:
    def test_matches_layerwise_application(self, rng):
        spec = TfimSpec(6, 1.0)
        params = random_params(rng, 3)
        state = prepare_initial(spec)
        for theta, phi in zip(params.thetas, params.phis):
            state = apply_x_layer(apply_zz_layer(state, theta), phi)
        assert np.allclose(simulate(spec, params).blocks, state.blocks, atol=1e-14)
