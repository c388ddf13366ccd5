"""Energy evaluators shared by EVQE and the fixed-ansatz baselines.

An evaluator answers two questions: the energy of a whole circuit, and a cost
function over one layer's angles with every other layer frozen. The
state-vector evaluator answers the second cheaply by caching the state before
the layer and folding the layers after it into the Hamiltonian
(``S^dagger H S``).
"""
from __future__ import annotations

import numpy as np
from numba import njit

from .hamiltonian import DenseHermitian, PauliSum, pauli_decompose, to_dense
from .noise import MeasurementPlan, NoiseConfig, noise_sites, pattern_states, sample_patterns
from .simulator import Circuit, LayerTemplate, _apply_ops, _u3_kernel, apply_compiled, u3_matrices


def _zero_column(dim: int) -> np.ndarray:
    psi = np.zeros(dim, dtype=complex)
    psi[0] = 1.0
    return psi


@njit(cache=True)
def _layer_energy(pre, params, controls, targets, op, diag, use_diag):
    psi = pre.copy()
    _apply_ops(psi, _u3_kernel(params), controls, targets)
    total = 0.0
    if use_diag:
        for i in range(psi.shape[0]):
            a = psi[i, 0]
            total += diag[i] * (a.real * a.real + a.imag * a.imag)
    else:
        v = op @ psi[:, 0].copy()
        for i in range(psi.shape[0]):
            total += (np.conj(psi[i, 0]) * v[i]).real
    return total


class StatevectorEvaluator:
    exact = True

    def __init__(self, h: PauliSum | DenseHermitian):
        dense = to_dense(h)
        self.n_qubits = dense.n_qubits
        self.dim = dense.dim
        self.matrix = dense.matrix
        off = self.matrix - np.diag(np.diag(self.matrix))
        self.diagonal = np.diag(self.matrix).real.copy() if not off.any() else None

    def _quad(self, psi, op=None, diag=None) -> float:
        if diag is not None:
            return float(np.dot(diag, (psi.real ** 2 + psi.imag ** 2)))
        return float(np.vdot(psi, op @ psi).real)

    def state(self, circuit: Circuit) -> np.ndarray:
        return apply_compiled(_zero_column(self.dim), *circuit.compiled)

    def energy(self, circuit: Circuit, rng=None) -> float:
        return self._quad(self.state(circuit), self.matrix, self.diagonal)

    def layer_objective(self, prefix: Circuit, template: LayerTemplate, base_params, free_idx,
                        suffix: Circuit, rng=None):
        pre = self.state(prefix)
        if suffix.depth:
            s = apply_compiled(np.eye(self.dim, dtype=complex), *suffix.compiled)
            op, diag = s.conj().T @ self.matrix @ s, None
        else:
            op, diag = self.matrix, self.diagonal
        base = np.array(base_params, dtype=float)
        controls, targets = template.controls, template.targets
        pre = np.ascontiguousarray(pre.reshape(-1, 1))
        use_diag = diag is not None
        diag = diag if use_diag else np.zeros(self.dim)
        op = np.ascontiguousarray(op)

        def cost(x):
            params = base.copy()
            params[free_idx] = x
            return _layer_energy(pre, params.reshape(-1, 3), controls, targets, op, diag, use_diag)

        return cost


class NoisyEvaluator:
    """Trajectory-averaged, optionally shot-sampled energies."""

    exact = False

    def __init__(self, h: PauliSum | DenseHermitian, noise: NoiseConfig):
        self.noise = noise
        dense = to_dense(h)
        self.n_qubits = dense.n_qubits
        self.dim = dense.dim
        self.matrix = dense.matrix
        pauli = h if isinstance(h, PauliSum) else pauli_decompose(dense)
        self.plan = MeasurementPlan(pauli) if noise.shots is not None else None

    def energy_compiled(self, mats, controls, targets, rng: np.random.Generator) -> float:
        noise = self.noise
        site_ops, site_qubits, site_probs = noise_sites(controls, targets, noise.p1, noise.p2)
        keys, counts = sample_patterns(site_probs, noise.trajectories, rng, group=self.plan is not None)
        states = pattern_states(self.dim, mats, controls, targets, site_ops, site_qubits, keys)
        if self.plan is None:
            values = np.einsum("iu,iu->u", states.conj(), self.matrix @ states).real
        else:
            values = np.array([
                self.plan.estimate(states[:, u], int(c) * noise.shots_per_trajectory, rng)
                for u, c in enumerate(counts)
            ])
        return float(counts @ values) / noise.trajectories

    def energy(self, circuit: Circuit, rng: np.random.Generator) -> float:
        return self.energy_compiled(*circuit.compiled, rng)

    def layer_objective(self, prefix: Circuit, template: LayerTemplate, base_params, free_idx,
                        suffix: Circuit, rng: np.random.Generator):
        pm, pc, pt = prefix.compiled
        sm, sc, st = suffix.compiled
        controls = np.concatenate([pc, template.controls, sc])
        targets = np.concatenate([pt, template.targets, st])
        base = np.array(base_params, dtype=float)

        def cost(x):
            params = base.copy()
            params[free_idx] = x
            mats = np.concatenate([pm, u3_matrices(params), sm])
            return self.energy_compiled(mats, controls, targets, rng)

        return cost


def make_evaluator(h, noise: NoiseConfig | None = None):
    if noise is None:
        return StatevectorEvaluator(h)
    return NoisyEvaluator(h, noise)
