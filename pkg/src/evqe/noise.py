"""Shot-noise estimation and a depolarizing channel sampled as Pauli-insertion trajectories."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit

from .hamiltonian import PauliSum
from .simulator import (
    PAULI_AS_U3,
    U3,
    Circuit,
    _apply_ops,
    GateSpec,
    apply_compiled,
    compile_gates,
    basis_change_gates,
    new_zero_state,
    parity_signs,
    u3_matrices,
)

PAULI_LETTERS = ("X", "Y", "Z")
_PAULI_MATS = u3_matrices(np.array([PAULI_AS_U3[p] for p in PAULI_LETTERS]))


@dataclass(frozen=True)
class NoiseConfig:
    """``shots=None`` means exact expectation per trajectory (no sampling noise).

    When shots are given they are split evenly over the trajectories, so each
    trajectory stands for ``max(1, shots // trajectories)`` noisy circuit runs.
    """

    shots: int | None = 1300
    p1: float = 0.0
    p2: float = 0.0
    trajectories: int = 1

    def __post_init__(self):
        if self.shots is not None and self.shots < 1:
            raise ValueError(f"shots must be >= 1, got {self.shots}")
        for name in ("p1", "p2"):
            p = getattr(self, name)
            if not 0.0 <= p <= 1.0:
                raise ValueError(f"{name} must be in [0, 1], got {p}")
        if self.trajectories < 1:
            raise ValueError(f"trajectories must be >= 1, got {self.trajectories}")

    @property
    def noiseless(self) -> bool:
        return self.p1 == 0.0 and self.p2 == 0.0

    @property
    def shots_per_trajectory(self) -> int | None:
        if self.shots is None:
            return None
        return max(1, self.shots // self.trajectories)


class MeasurementPlan:
    """Per-term basis changes and outcome parities for a Pauli sum."""

    def __init__(self, h: PauliSum):
        self.n_qubits = h.n_qubits
        self.offset = h.identity_offset()
        self.terms = []
        for term in h.terms:
            if term.is_identity:
                continue
            compiled = compile_gates(basis_change_gates(term.pauli_string))
            self.terms.append((term.coefficient, compiled, parity_signs(term.pauli_string)))

    def estimate(self, amplitudes: np.ndarray, shots: int, rng: np.random.Generator) -> float:
        """Measure every term independently with ``shots`` samples and sum."""
        total = self.offset
        for coeff, compiled, signs in self.terms:
            rotated = apply_compiled(amplitudes, *compiled)
            probs = np.abs(rotated) ** 2
            counts = rng.multinomial(shots, probs / probs.sum())
            total += coeff * float(counts @ signs) / shots
        return total


def shot_expectation(circuit: Circuit, h: PauliSum, shots: int, rng: np.random.Generator) -> float:
    if shots < 1:
        raise ValueError(f"shots must be >= 1, got {shots}")
    state = apply_compiled(new_zero_state(circuit.n_qubits).amplitudes, *circuit.compiled)
    return MeasurementPlan(h).estimate(state, shots, rng)


# -- depolarizing trajectories -----------------------------------------------------


def noise_sites(controls: np.ndarray, targets: np.ndarray, p1: float, p2: float):
    """(op index, qubit, probability) for every place an error may strike."""
    ops, qubits, probs = [], [], []
    for k, (c, t) in enumerate(zip(controls, targets)):
        if c < 0:
            ops.append(k); qubits.append(int(t)); probs.append(p1)
        else:
            ops.extend((k, k)); qubits.extend((int(c), int(t))); probs.extend((p2, p2))
    return np.array(ops, dtype=np.int64), np.array(qubits, dtype=np.int64), np.array(probs, dtype=float)


def sample_patterns(site_probs: np.ndarray, trajectories: int, rng: np.random.Generator,
                    group: bool = True):
    """Insertion patterns and how many trajectories drew each.

    A pattern is one row of ``keys``: 0 where a site is clean, ``1 + i`` where
    Pauli ``PAULI_LETTERS[i]`` strikes. With ``group`` the rows are distinct and
    sorted; without it there is one row per trajectory, each with count 1.
    """
    n_sites = len(site_probs)
    if n_sites == 0 or not np.any(site_probs):
        return np.zeros((1, n_sites), dtype=np.int64), np.array([trajectories], dtype=np.int64)
    hits = rng.random((trajectories, n_sites)) < site_probs
    letters = rng.integers(0, 3, size=(trajectories, n_sites))
    keys = np.where(hits, letters + 1, 0)
    if not group:
        return keys.astype(np.int64), np.ones(trajectories, dtype=np.int64)
    unique, counts = np.unique(keys, axis=0, return_counts=True)
    return unique.astype(np.int64), counts.astype(np.int64)


@njit(cache=True)
def _pattern_states(dim, mats, controls, targets, site_ops, site_qubits, keys, paulis):
    psi = np.zeros((dim, keys.shape[0]), dtype=np.complex128)
    one = np.zeros((dim, 1), dtype=np.complex128)
    extra = np.empty((1, 2, 2), dtype=np.complex128)
    tq = np.empty(1, dtype=np.int64)
    nc = np.full(1, -1, dtype=np.int64)
    for u in range(keys.shape[0]):
        one[:, 0] = 0.0
        one[0, 0] = 1.0
        s = 0
        for k in range(mats.shape[0]):
            _apply_ops(one, mats[k:k + 1], controls[k:k + 1], targets[k:k + 1])
            while s < site_ops.shape[0] and site_ops[s] == k:
                if keys[u, s] > 0:
                    extra[0] = paulis[keys[u, s] - 1]
                    tq[0] = site_qubits[s]
                    _apply_ops(one, extra, nc, tq)
                s += 1
        psi[:, u] = one[:, 0]
    return psi


def pattern_states(dim: int, mats, controls, targets, site_ops, site_qubits, keys) -> np.ndarray:
    """Final state of every pattern as the columns of a (dim, n_patterns) array."""
    return _pattern_states(dim, np.ascontiguousarray(mats, dtype=complex), controls, targets,
                           site_ops, site_qubits, np.ascontiguousarray(keys, dtype=np.int64), _PAULI_MATS)


def splice_errors(mats, controls, targets, site_ops, site_qubits, key_row):
    """Reference version of one pattern: the op list with Pauli ops inserted after struck gates."""
    after: dict[int, list[tuple[int, int]]] = {}
    for site, key in enumerate(key_row):
        if key:
            after.setdefault(int(site_ops[site]), []).append((int(site_qubits[site]), int(key) - 1))
    new_m, new_c, new_t = [], [], []
    for k in range(len(targets)):
        new_m.append(mats[k]); new_c.append(controls[k]); new_t.append(targets[k])
        for qubit, letter in after.get(k, ()):
            new_m.append(_PAULI_MATS[letter]); new_c.append(-1); new_t.append(qubit)
    if not new_m:
        return np.zeros((0, 2, 2), dtype=complex), np.zeros(0, dtype=np.int64), np.zeros(0, dtype=np.int64)
    return np.array(new_m), np.array(new_c, dtype=np.int64), np.array(new_t, dtype=np.int64)


def depolarize_trajectory(circuit: Circuit, p1: float, p2: float, rng: np.random.Generator) -> Circuit:
    """One stochastic realisation of the depolarizing channel.

    After each U3, with probability ``p1`` a uniformly chosen X, Y or Z (as a U3)
    hits its qubit; after each CU3 the control and target are each hit
    independently with probability ``p2``. Errors go into a layer right after
    the gate's layer, which is equivalent since a layer's gates are disjoint.
    """
    for name, p in (("p1", p1), ("p2", p2)):
        if not 0.0 <= p <= 1.0:
            raise ValueError(f"{name} must be in [0, 1], got {p}")
    layers = []
    for layer in circuit.layers:
        layers.append(layer)
        errors = []
        for gate in layer:
            if gate.kind == U3:
                if rng.random() < p1:
                    errors.append(_pauli_gate(gate.qubits[0], rng))
            elif gate.kind != "I":
                for q in gate.qubits:
                    if rng.random() < p2:
                        errors.append(_pauli_gate(q, rng))
        if errors:
            layers.append(tuple(errors))
    return Circuit(circuit.n_qubits, tuple(layers))


def _pauli_gate(qubit: int, rng: np.random.Generator) -> GateSpec:
    letter = PAULI_LETTERS[int(rng.integers(3))]
    return GateSpec(U3, (qubit,), PAULI_AS_U3[letter])
