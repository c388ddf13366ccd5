"""Dense state-vector simulation over the gate set {I, U3, CU3}.

Qubit ordering is little-endian: qubit ``k`` is bit ``k`` of the amplitude
index, so for two qubits the amplitudes are ordered ``|q1 q0> = 00, 01, 10, 11``.

U3 convention::

    U3(theta, phi, lam) = [[cos(theta/2),            -e^{i lam} sin(theta/2)],
                           [e^{i phi} sin(theta/2),  e^{i(phi+lam)} cos(theta/2)]]

CU3 applies that matrix to the target when the control bit is 1, with no
extra control phase. ``U3(0, 0, 0)`` and ``CU3(0, 0, 0)`` are the identity.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence

import numpy as np
from numba import njit

from .errors import PauliParseError, ShapeError, SizeError

MAX_QUBITS = 16

IDENTITY = "I"
U3 = "U3"
CU3 = "CU3"
_KINDS = (IDENTITY, U3, CU3)

# Parameters realising Pauli gates as U3 (up to global phase).
PAULI_AS_U3 = {
    "X": (np.pi, 0.0, np.pi),
    "Y": (np.pi, np.pi / 2, np.pi / 2),
    "Z": (0.0, 0.0, np.pi),
}
CX_PARAMS = (np.pi, 0.0, np.pi)
HADAMARD_PARAMS = (np.pi / 2, 0.0, np.pi)
SDG_PARAMS = (0.0, 0.0, -np.pi / 2)


def u3_matrix(theta: float, phi: float, lam: float) -> np.ndarray:
    return u3_matrices(np.array([[theta, phi, lam]], dtype=float))[0]


def u3_matrices(params: np.ndarray) -> np.ndarray:
    """Vectorised U3: ``params`` has shape (k, 3), result shape (k, 2, 2)."""
    return _u3_kernel(np.ascontiguousarray(params, dtype=float).reshape(-1, 3))


@njit(cache=True)
def _u3_kernel(params):
    out = np.empty((params.shape[0], 2, 2), dtype=np.complex128)
    for k in range(params.shape[0]):
        c = np.cos(params[k, 0] / 2)
        s = np.sin(params[k, 0] / 2)
        e_phi = np.exp(1j * params[k, 1])
        e_lam = np.exp(1j * params[k, 2])
        out[k, 0, 0] = c
        out[k, 0, 1] = -e_lam * s
        out[k, 1, 0] = e_phi * s
        out[k, 1, 1] = e_phi * e_lam * c
    return out


@njit(cache=True)
def _apply_ops(psi, mats, controls, targets):
    # psi has shape (dim, batch) and is updated in place.
    dim = psi.shape[0]
    nb = psi.shape[1]
    for k in range(mats.shape[0]):
        tmask = 1 << targets[k]
        c = controls[k]
        cmask = 0
        if c >= 0:
            cmask = 1 << c
        m00 = mats[k, 0, 0]
        m01 = mats[k, 0, 1]
        m10 = mats[k, 1, 0]
        m11 = mats[k, 1, 1]
        for i in range(dim):
            if i & tmask:
                continue
            if cmask != 0 and (i & cmask) == 0:
                continue
            j = i | tmask
            for col in range(nb):
                a0 = psi[i, col]
                a1 = psi[j, col]
                psi[i, col] = m00 * a0 + m01 * a1
                psi[j, col] = m10 * a0 + m11 * a1


def apply_compiled(psi: np.ndarray, mats, controls, targets) -> np.ndarray:
    """Apply compiled ops to a copy of ``psi`` (1-D state or (dim, batch) block)."""
    out = np.array(psi, dtype=complex, order="C", copy=True)
    if len(mats):
        _apply_ops(out.reshape(out.shape[0], -1), mats, controls, targets)
    return out


@dataclass(frozen=True)
class GateSpec:
    """One gate. ``qubits`` is ``(target,)`` or ``(control, target)`` for CU3."""

    kind: str
    qubits: tuple[int, ...]
    params: tuple[float, float, float] | None = None

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ValueError(f"unknown gate kind {self.kind!r}")
        expected = 2 if self.kind == CU3 else 1
        if len(self.qubits) != expected:
            raise ValueError(f"{self.kind} acts on {expected} qubit(s), got {self.qubits}")
        if self.kind == CU3 and self.qubits[0] == self.qubits[1]:
            raise ValueError("CU3 control and target must differ")
        if self.kind == IDENTITY:
            if self.params is not None:
                raise ValueError("identity gate takes no parameters")
        elif self.params is None or len(self.params) != 3:
            raise ValueError(f"{self.kind} needs three angles")

    @classmethod
    def u3(cls, qubit, theta=0.0, phi=0.0, lam=0.0):
        return cls(U3, (qubit,), (float(theta), float(phi), float(lam)))

    @classmethod
    def cu3(cls, control, target, theta=0.0, phi=0.0, lam=0.0):
        return cls(CU3, (control, target), (float(theta), float(phi), float(lam)))

    @classmethod
    def identity(cls, qubit):
        return cls(IDENTITY, (qubit,))

    def check_qubits(self, n_qubits: int) -> None:
        for q in self.qubits:
            if not 0 <= q < n_qubits:
                raise IndexError(f"qubit {q} out of range for {n_qubits} qubits")


@dataclass(frozen=True)
class Circuit:
    """Layers of gates; a qubit appears at most once per layer."""

    n_qubits: int
    layers: tuple[tuple[GateSpec, ...], ...] = ()

    def __post_init__(self):
        layers = tuple(tuple(layer) for layer in self.layers)
        object.__setattr__(self, "layers", layers)
        for i, layer in enumerate(layers):
            seen = set()
            for gate in layer:
                gate.check_qubits(self.n_qubits)
                if seen.intersection(gate.qubits):
                    raise ValueError(f"layer {i} uses a qubit twice")
                seen.update(gate.qubits)

    @property
    def depth(self) -> int:
        return len(self.layers)

    def gates(self):
        for layer in self.layers:
            yield from layer

    @cached_property
    def compiled(self):
        return compile_gates(self.gates())


def compile_gates(gates) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Lower gates to (matrices, controls, targets) for the kernel; identities drop out."""
    params, controls, targets = [], [], []
    for gate in gates:
        if gate.kind == IDENTITY:
            continue
        params.append(gate.params)
        if gate.kind == CU3:
            controls.append(gate.qubits[0])
            targets.append(gate.qubits[1])
        else:
            controls.append(-1)
            targets.append(gate.qubits[0])
    mats = u3_matrices(np.array(params, dtype=float).reshape(-1, 3))
    return mats, np.array(controls, dtype=np.int64), np.array(targets, dtype=np.int64)


@dataclass(frozen=True)
class LayerTemplate:
    """Gate positions of one layer with the angles left free.

    ``matrices(params)`` maps a flat vector of 3 angles per gate to kernel input,
    which is how the optimizers evaluate a layer without rebuilding gate objects.
    """

    controls: np.ndarray
    targets: np.ndarray

    @property
    def n_gates(self) -> int:
        return len(self.targets)

    def compile(self, params: np.ndarray):
        return u3_matrices(params), self.controls, self.targets

    def gates(self, params: Sequence[float]) -> list[GateSpec]:
        params = np.asarray(params, dtype=float).reshape(-1, 3)
        out = []
        for c, t, p in zip(self.controls, self.targets, params):
            p = tuple(float(v) for v in p)
            out.append(GateSpec(U3, (int(t),), p) if c < 0 else GateSpec(CU3, (int(c), int(t)), p))
        return out


@dataclass(frozen=True)
class StateVector:
    n_qubits: int
    amplitudes: np.ndarray = field(repr=False)

    def __post_init__(self):
        amps = np.asarray(self.amplitudes, dtype=complex)
        if amps.shape != (1 << self.n_qubits,):
            raise ShapeError(f"expected {1 << self.n_qubits} amplitudes, got shape {amps.shape}")
        object.__setattr__(self, "amplitudes", amps)

    @property
    def dim(self) -> int:
        return 1 << self.n_qubits

    def norm_squared(self) -> float:
        return float(np.vdot(self.amplitudes, self.amplitudes).real)

    def probabilities(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2

    def most_probable(self) -> int:
        return int(np.argmax(self.probabilities()))


def check_qubit_count(n_qubits: int, cap: int = MAX_QUBITS) -> None:
    if not isinstance(n_qubits, (int, np.integer)) or not 1 <= n_qubits <= cap:
        raise SizeError(f"n_qubits must be in [1, {cap}], got {n_qubits!r}")


def new_zero_state(n_qubits: int) -> StateVector:
    check_qubit_count(n_qubits)
    amps = np.zeros(1 << n_qubits, dtype=complex)
    amps[0] = 1.0
    return StateVector(n_qubits, amps)


def apply_gate(state: StateVector, gate: GateSpec) -> StateVector:
    gate.check_qubits(state.n_qubits)
    mats, controls, targets = compile_gates([gate])
    return StateVector(state.n_qubits, apply_compiled(state.amplitudes, mats, controls, targets))


def apply_circuit(state: StateVector, circuit: Circuit) -> StateVector:
    if circuit.n_qubits != state.n_qubits:
        raise ShapeError(f"circuit has {circuit.n_qubits} qubits, state has {state.n_qubits}")
    return StateVector(state.n_qubits, apply_compiled(state.amplitudes, *circuit.compiled))


def run_circuit(circuit: Circuit) -> StateVector:
    """The circuit applied to the all-zero state."""
    return apply_circuit(new_zero_state(circuit.n_qubits), circuit)


def expectation(state: StateVector, h) -> float:
    """<psi|H|psi> for a ``PauliSum`` or ``DenseHermitian``."""
    from .hamiltonian import DenseHermitian, PauliSum

    if isinstance(h, PauliSum):
        if h.n_qubits != state.n_qubits:
            raise ShapeError(f"Hamiltonian has {h.n_qubits} qubits, state has {state.n_qubits}")
        return h.expectation_of(state.amplitudes)
    if isinstance(h, DenseHermitian):
        if h.dim != state.dim:
            raise ShapeError(f"Hamiltonian dimension {h.dim} != state dimension {state.dim}")
        psi = state.amplitudes
        return float(np.vdot(psi, h.matrix @ psi).real)
    raise TypeError(f"unsupported Hamiltonian type {type(h).__name__}")


def basis_change_gates(pauli: str) -> list[GateSpec]:
    """Rotations mapping each X/Y factor's eigenbasis onto the computational basis."""
    gates = []
    for q, p in enumerate(pauli):
        if p == "X":
            gates.append(GateSpec(U3, (q,), HADAMARD_PARAMS))
        elif p == "Y":
            gates.append(GateSpec(U3, (q,), SDG_PARAMS))
            gates.append(GateSpec(U3, (q,), HADAMARD_PARAMS))
    return gates


def check_pauli_string(pauli: str, n_qubits: int | None = None) -> str:
    if not isinstance(pauli, str) or not pauli or any(ch not in "IXYZ" for ch in pauli):
        raise PauliParseError(f"malformed Pauli string {pauli!r}")
    if n_qubits is not None and len(pauli) != n_qubits:
        raise PauliParseError(f"Pauli string {pauli!r} has length {len(pauli)}, expected {n_qubits}")
    return pauli


def measurement_probabilities(amplitudes: np.ndarray, pauli: str) -> np.ndarray:
    mats, controls, targets = compile_gates(basis_change_gates(pauli))
    rotated = apply_compiled(amplitudes, mats, controls, targets)
    probs = np.abs(rotated) ** 2
    return probs / probs.sum()


def sample_counts(state: StateVector, measured_pauli: str, shots: int, rng: np.random.Generator) -> np.ndarray:
    """Histogram of computational-basis outcomes after the Pauli basis change.

    Entry ``b`` counts outcome index ``b`` (little-endian bits); entries sum to ``shots``.
    """
    check_pauli_string(measured_pauli, state.n_qubits)
    if shots < 1:
        raise ValueError(f"shots must be >= 1, got {shots}")
    probs = measurement_probabilities(state.amplitudes, measured_pauli)
    return rng.multinomial(shots, probs)


def parity_signs(pauli: str) -> np.ndarray:
    """Eigenvalue (+1/-1) of the measured Pauli for each outcome index."""
    mask = sum(1 << q for q, p in enumerate(pauli) if p != "I")
    idx = np.arange(1 << len(pauli), dtype=np.uint64)
    bits = np.bitwise_count(idx & np.uint64(mask))
    return 1.0 - 2.0 * (bits & 1)
