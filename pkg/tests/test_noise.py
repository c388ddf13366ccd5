import numpy as np
import pytest

from evqe.evaluation import NoisyEvaluator, StatevectorEvaluator, make_evaluator
from evqe.hamiltonian import PauliSum, PauliTerm, pauli_decompose, random_hermitian
from evqe.noise import (
    MeasurementPlan,
    NoiseConfig,
    depolarize_trajectory,
    noise_sites,
    pattern_states,
    sample_patterns,
    shot_expectation,
    splice_errors,
)
from evqe.simulator import CX_PARAMS, HADAMARD_PARAMS, Circuit, GateSpec, LayerTemplate, apply_compiled

Z = PauliSum(1, [PauliTerm(1.0, "Z")])
PLUS = Circuit(1, ((GateSpec.u3(0, *HADAMARD_PARAMS),),))
IDLE = Circuit(1, ((GateSpec.u3(0),),))


def _entangler(theta=1.0):
    return Circuit(2, ((GateSpec.u3(0, theta, 0.2, 0.1), GateSpec.u3(1, 0.4, 0, 0)),
                       (GateSpec.cu3(0, 1, *CX_PARAMS),),
                       (GateSpec.u3(1, 0.3, 0.3, 0.3),)))


class TestConfig:
    def test_shots_split(self):
        assert NoiseConfig(shots=1300, trajectories=100).shots_per_trajectory == 13
        assert NoiseConfig(shots=10, trajectories=100).shots_per_trajectory == 1
        assert NoiseConfig(shots=None).shots_per_trajectory is None

    @pytest.mark.parametrize("kwargs", [{"p1": -0.1}, {"p2": 1.5}, {"shots": 0}, {"trajectories": 0}])
    def test_invalid(self, kwargs):
        with pytest.raises(ValueError):
            NoiseConfig(**kwargs)


class TestShots:
    def test_eigenstate_exact(self, rng):
        h = PauliSum(2, [PauliTerm(0.7, "ZI"), PauliTerm(-0.2, "ZZ"), PauliTerm(1.5, "II")])
        assert shot_expectation(Circuit(2), h, 3, rng) == pytest.approx(0.7 - 0.2 + 1.5)

    def test_plus_within_three_sigma(self):
        vals = np.array([shot_expectation(PLUS, Z, 1300, np.random.default_rng(s)) for s in range(300)])
        assert np.mean(np.abs(vals) <= 3 / np.sqrt(1300)) >= 0.99

    def test_std_scales_with_shots(self):
        std = lambda shots: np.std([shot_expectation(PLUS, Z, shots, np.random.default_rng(s)) for s in range(200)])
        assert std(400) / std(1600) == pytest.approx(2.0, rel=0.2)

    def test_unbiased(self):
        c = _entangler()
        h = pauli_decompose(random_hermitian(2, 3))
        exact = StatevectorEvaluator(h).energy(c)
        vals = np.array([shot_expectation(c, h, 200, np.random.default_rng(s)) for s in range(500)])
        assert abs(vals.mean() - exact) < 3 * vals.std(ddof=1) / np.sqrt(len(vals))

    def test_rejects_zero_shots(self, rng):
        with pytest.raises(ValueError):
            shot_expectation(PLUS, Z, 0, rng)

    def test_plan_skips_identity(self):
        plan = MeasurementPlan(PauliSum(1, [PauliTerm(2.0, "I"), PauliTerm(1.0, "X")]))
        assert plan.offset == 2.0 and len(plan.terms) == 1


class TestTrajectories:
    def test_no_noise_unchanged(self, rng):
        c = _entangler()
        assert depolarize_trajectory(c, 0.0, 0.0, rng) == c

    def test_certain_single_qubit_error(self, rng):
        out = depolarize_trajectory(IDLE, 1.0, 0.0, rng)
        assert out.depth == 2 and len(out.layers[1]) == 1

    def test_two_qubit_errors_hit_both(self, rng):
        c = Circuit(2, ((GateSpec.cu3(0, 1),),))
        out = depolarize_trajectory(c, 0.0, 1.0, rng)
        assert sorted(g.qubits[0] for g in out.layers[1]) == [0, 1]

    def test_depolarized_z(self):
        p = 0.3
        rng = np.random.default_rng(0)
        ev = StatevectorEvaluator(Z)
        vals = np.array([ev.energy(depolarize_trajectory(IDLE, p, 0, rng)) for _ in range(10_000)])
        expected = (1 - p) + p * (-1 / 3)
        assert abs(vals.mean() - expected) < 3 * vals.std() / 100

    def test_patterns_grouped(self, rng):
        keys, counts = sample_patterns(np.array([0.5, 0.5]), 1000, rng)
        assert counts.sum() == 1000 and len(keys) == len(np.unique(keys, axis=0))
        keys, counts = sample_patterns(np.array([0.5, 0.5]), 10, rng, group=False)
        assert keys.shape == (10, 2) and np.all(counts == 1)

    def test_kernel_matches_splice(self, rng):
        c = _entangler()
        mats, controls, targets = c.compiled
        ops, qubits, probs = noise_sites(controls, targets, 0.4, 0.6)
        keys, _ = sample_patterns(probs, 200, rng)
        states = pattern_states(4, mats, controls, targets, ops, qubits, keys)
        zero = np.eye(4, dtype=complex)[0]
        for u, key in enumerate(keys):
            ref = apply_compiled(zero, *splice_errors(mats, controls, targets, ops, qubits, key))
            assert np.allclose(states[:, u], ref, atol=1e-14)

    def test_kernel_distribution_matches_circuit_sampler(self):
        # two independent implementations of the same channel agree on average
        c = _entangler()
        h = random_hermitian(2, 5)
        ev = NoisyEvaluator(h, NoiseConfig(shots=None, p1=0.1, p2=0.2, trajectories=20_000))
        fast = ev.energy(c, np.random.default_rng(1))
        sv = StatevectorEvaluator(h)
        rng = np.random.default_rng(2)
        slow = np.array([sv.energy(depolarize_trajectory(c, 0.1, 0.2, rng)) for _ in range(20_000)])
        assert abs(fast - slow.mean()) < 4 * slow.std() / np.sqrt(len(slow)) * np.sqrt(2)


class TestEvaluators:
    def test_noiseless_config_matches_statevector(self):
        h = random_hermitian(2, 1)
        ev = make_evaluator(h, NoiseConfig(shots=None))
        assert ev.energy(_entangler(), np.random.default_rng(0)) == pytest.approx(
            make_evaluator(h).energy(_entangler()), abs=1e-12)

    @pytest.mark.parametrize("noise", [None, NoiseConfig(shots=None, p2=0.1, trajectories=8)])
    def test_layer_objective_matches_full_circuit(self, noise):
        h = random_hermitian(2, 2)
        ev = make_evaluator(h, noise)
        c = _entangler()
        template = LayerTemplate(np.array([0], dtype=np.int64), np.array([1], dtype=np.int64))
        base = np.array(CX_PARAMS)
        cost = ev.layer_objective(Circuit(2, c.layers[:1]), template, base, np.arange(3),
                                  Circuit(2, c.layers[2:]), np.random.default_rng(4))
        x = np.array([0.5, -0.4, 1.2])
        full = Circuit(2, (c.layers[0], (GateSpec.cu3(0, 1, *x),), c.layers[2]))
        assert cost(x) == pytest.approx(ev.energy(full, np.random.default_rng(4)), abs=1e-12)

    def test_diagonal_shortcut(self):
        h = PauliSum(2, [PauliTerm(1.0, "ZZ"), PauliTerm(0.5, "ZI")])
        ev = StatevectorEvaluator(h)
        assert ev.diagonal is not None
        dense = StatevectorEvaluator(random_hermitian(2, 0))
        assert dense.diagonal is None
        psi = ev.state(_entangler())
        assert ev.energy(_entangler()) == pytest.approx(np.vdot(psi, ev.matrix @ psi).real, abs=1e-12)

    def test_shot_evaluator_is_unbiased(self):
        h = random_hermitian(2, 6)
        ev = make_evaluator(h, NoiseConfig(shots=1300))
        vals = np.array([ev.energy(_entangler(), np.random.default_rng(s)) for s in range(300)])
        exact = make_evaluator(h).energy(_entangler())
        assert abs(vals.mean() - exact) < 3 * vals.std(ddof=1) / np.sqrt(len(vals))
