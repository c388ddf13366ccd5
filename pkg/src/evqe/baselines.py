"""Fixed-structure references: hardware-efficient VQE ansatzes and the best product state."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError
from .evaluation import make_evaluator
from .hamiltonian import DenseHermitian, PauliSum
from .noise import NoiseConfig
from .optimizers import OptResult, minimize, nelder_mead
from .simulator import CX_PARAMS, Circuit, GateSpec, check_qubit_count

FAMILIES = ("Ry", "RyRz")
ENTANGLEMENTS = ("linear", "full")


@dataclass(frozen=True)
class AnsatzSpec:
    """Rotation layer, then ``depth`` blocks of (CX entanglers, rotation layer)."""

    n_qubits: int
    depth: int = 1
    family: str = "RyRz"
    entanglement: str = "linear"

    def __post_init__(self):
        check_qubit_count(self.n_qubits)
        if self.depth < 0:
            raise ConfigError("must be >= 0", "depth")
        if self.family not in FAMILIES:
            raise ConfigError(f"must be one of {FAMILIES}", "family")
        if self.entanglement not in ENTANGLEMENTS:
            raise ConfigError(f"must be one of {ENTANGLEMENTS}", "entanglement")

    @property
    def rotations_per_layer(self) -> int:
        return self.n_qubits * (2 if self.family == "RyRz" else 1)

    @property
    def n_params(self) -> int:
        return self.rotations_per_layer * (self.depth + 1)

    def entangling_pairs(self) -> list[tuple[int, int]]:
        n = self.n_qubits
        if self.entanglement == "linear":
            return [(q, q + 1) for q in range(n - 1)]
        return [(a, b) for a in range(n) for b in range(a + 1, n)]


def _rotation_layers(spec: AnsatzSpec, angles) -> list[tuple[GateSpec, ...]]:
    n = spec.n_qubits
    layers = [tuple(GateSpec.u3(q, angles[q], 0.0, 0.0) for q in range(n))]
    if spec.family == "RyRz":
        layers.append(tuple(GateSpec.u3(q, 0.0, 0.0, angles[n + q]) for q in range(n)))
    return layers


def build_ansatz(spec: AnsatzSpec, params) -> Circuit:
    params = np.asarray(params, dtype=float).ravel()
    if len(params) != spec.n_params:
        raise ValueError(f"ansatz expects {spec.n_params} params, got {len(params)}")
    r = spec.rotations_per_layer
    layers = _rotation_layers(spec, params[:r])
    for block in range(1, spec.depth + 1):
        for control, target in spec.entangling_pairs():
            # CX gates sharing a qubit cannot sit in one layer
            layers.append((GateSpec.cu3(control, target, *CX_PARAMS),))
        layers.extend(_rotation_layers(spec, params[block * r:(block + 1) * r]))
    return Circuit(spec.n_qubits, tuple(layers))


def ansatz_cx_count(spec: AnsatzSpec) -> int:
    return spec.depth * len(spec.entangling_pairs())


@dataclass
class VqeResult:
    spec: AnsatzSpec
    params: np.ndarray
    energy: float
    evaluations: int
    circuit: Circuit


def run_vqe(h: PauliSum | DenseHermitian, spec: AnsatzSpec, *, seed: int = 0,
            method: str | None = None, max_iter: int = 2000,
            noise: NoiseConfig | None = None) -> VqeResult:
    """Optimize all ansatz angles at once from a uniform start in [-pi, pi]."""
    if spec.n_qubits != h.n_qubits:
        raise ValueError(f"ansatz has {spec.n_qubits} qubits, Hamiltonian {h.n_qubits}")
    evaluator = make_evaluator(h, noise)
    method = method or ("nelder_mead" if evaluator.exact else "spsa")
    rng = np.random.default_rng(seed)
    x0 = rng.uniform(-np.pi, np.pi, spec.n_params)

    def cost(x):
        return evaluator.energy(build_ansatz(spec, x), rng)

    res: OptResult = minimize(cost, x0, method=method, max_iter=max_iter, rng=rng)
    circuit = build_ansatz(spec, res.best_params)
    energy = evaluator.energy(circuit, rng)
    return VqeResult(spec, res.best_params, energy, res.evaluations + 1, circuit)


def separable_circuit(n_qubits: int, params) -> Circuit:
    params = np.asarray(params, dtype=float).reshape(n_qubits, 3)
    return Circuit(n_qubits, (tuple(GateSpec.u3(q, *params[q]) for q in range(n_qubits)),))


def optimal_separable_energy(h: PauliSum | DenseHermitian, *, restarts: int = 8, seed: int = 0,
                             max_iter: int = 2000) -> float:
    """Lowest energy over product states, from multistart Nelder-Mead on one U3 layer.

    A product of single-qubit states is exactly what one U3 layer prepares, so
    this is the floor reachable without entanglement (up to optimizer success).
    """
    evaluator = make_evaluator(h)
    n = evaluator.n_qubits
    rng = np.random.default_rng(seed)
    best = np.inf
    for _ in range(restarts):
        x0 = rng.uniform(-np.pi, np.pi, 3 * n)
        res = nelder_mead(lambda x: evaluator.energy(separable_circuit(n, x)), x0,
                          max_iter=max_iter, tol=1e-13, step=0.5)
        best = min(best, res.best_value)
    return float(best)
