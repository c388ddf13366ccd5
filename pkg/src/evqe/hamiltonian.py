"""Hamiltonians: Pauli sums, dense Hermitians, Max-Cut encoding and the exact oracle.

Pauli strings index qubits by position: character ``k`` acts on qubit ``k``.
Combined with little-endian amplitude ordering this makes the dense matrix of
``"ZX"`` equal to ``kron(X, Z)``.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path

import numpy as np

from .eigensolver import hermitian_eigenvalues
from .errors import GraphError, PauliParseError, ShapeError, SizeError, ValidationError
from .simulator import check_pauli_string

MAX_DENSE_QUBITS = 10
# Above this the Jacobi oracle gets slow; LAPACK takes over.
MAX_JACOBI_QUBITS = 7

_PAULI_MATRICES = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}


@dataclass(frozen=True)
class PauliTerm:
    coefficient: float
    pauli_string: str

    def __post_init__(self):
        check_pauli_string(self.pauli_string)
        if not np.isfinite(self.coefficient):
            raise ValueError(f"non-finite coefficient for {self.pauli_string}")

    @property
    def n_qubits(self) -> int:
        return len(self.pauli_string)

    @property
    def is_identity(self) -> bool:
        return set(self.pauli_string) == {"I"}


def _masks(pauli: str) -> tuple[int, int, int]:
    x_mask = z_mask = n_y = 0
    for q, p in enumerate(pauli):
        if p in "XY":
            x_mask |= 1 << q
        if p in "YZ":
            z_mask |= 1 << q
        n_y += p == "Y"
    return x_mask, z_mask, n_y


def _pauli_action(pauli: str, dim: int):
    """Index map and phases with P|b> = phase[b] |flip[b]>."""
    x_mask, z_mask, n_y = _masks(pauli)
    idx = np.arange(dim, dtype=np.uint64)
    signs = 1.0 - 2.0 * (np.bitwise_count(idx & np.uint64(z_mask)) & 1)
    phase = (1j) ** n_y * signs
    return (idx ^ np.uint64(x_mask)).astype(np.int64), phase


class PauliSum:
    """A real-weighted sum of Pauli strings; duplicate strings are merged."""

    def __init__(self, n_qubits: int, terms=()):
        if n_qubits < 1:
            raise SizeError(f"n_qubits must be >= 1, got {n_qubits}")
        merged: dict[str, float] = {}
        for term in terms:
            if not isinstance(term, PauliTerm):
                term = PauliTerm(float(term[0]), term[1])
            if term.n_qubits != n_qubits:
                raise ShapeError(
                    f"term {term.pauli_string!r} has length {term.n_qubits}, expected {n_qubits}"
                )
            merged[term.pauli_string] = merged.get(term.pauli_string, 0.0) + term.coefficient
        self.n_qubits = n_qubits
        self.terms = tuple(PauliTerm(c, s) for s, c in merged.items())

    def __repr__(self):
        body = " + ".join(f"{t.coefficient:g}*{t.pauli_string}" for t in self.terms) or "0"
        return f"PauliSum({self.n_qubits}, {body})"

    def __len__(self):
        return len(self.terms)

    @property
    def dim(self) -> int:
        return 1 << self.n_qubits

    @property
    def is_diagonal(self) -> bool:
        return all(set(t.pauli_string) <= {"I", "Z"} for t in self.terms)

    def identity_offset(self) -> float:
        return sum(t.coefficient for t in self.terms if t.is_identity)

    def expectation_of(self, amplitudes: np.ndarray) -> float:
        psi = np.asarray(amplitudes, dtype=complex)
        if psi.shape != (self.dim,):
            raise ShapeError(f"state of shape {psi.shape} for {self.n_qubits}-qubit Hamiltonian")
        total = 0.0
        for term in self.terms:
            flip, phase = _pauli_action(term.pauli_string, self.dim)
            # <psi|P|psi> = sum_b conj(psi[flip b]) phase[b] psi[b]
            total += term.coefficient * np.sum(np.conj(psi[flip]) * phase * psi).real
        return float(total)


@dataclass(frozen=True)
class DenseHermitian:
    matrix: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] & (m.shape[0] - 1):
            raise ShapeError(f"expected a square matrix with power-of-two size, got {m.shape}")
        scale = max(1.0, float(np.abs(m).max(initial=0.0)))
        if np.abs(m - m.conj().T).max(initial=0.0) > 1e-12 * scale:
            raise ValidationError("matrix is not Hermitian")
        object.__setattr__(self, "matrix", m)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @cached_property
    def n_qubits(self) -> int:
        return self.dim.bit_length() - 1


def to_dense(h: PauliSum | DenseHermitian) -> DenseHermitian:
    if isinstance(h, DenseHermitian):
        return h
    if h.n_qubits > MAX_DENSE_QUBITS:
        raise SizeError(f"dense conversion is capped at {MAX_DENSE_QUBITS} qubits, got {h.n_qubits}")
    dim = h.dim
    out = np.zeros((dim, dim), dtype=complex)
    for term in h.terms:
        mat = np.array([[1.0 + 0j]])
        for p in term.pauli_string:
            # qubit 0 is the least significant, i.e. the rightmost Kronecker factor
            mat = np.kron(_PAULI_MATRICES[p], mat)
        out += term.coefficient * mat
    return DenseHermitian(out)


def pauli_decompose(h: DenseHermitian, cutoff: float = 1e-14) -> PauliSum:
    """Expand a dense Hermitian in the Pauli basis: c_P = tr(P H) / 2^n."""
    n, dim = h.n_qubits, h.dim
    rows = np.arange(dim)
    terms = []
    for letters in itertools.product("IXYZ", repeat=n):
        pauli = "".join(letters)
        flip, phase = _pauli_action(pauli, dim)
        # tr(P H) = sum_b phase[b] H[b, flip b]
        coeff = np.sum(phase * h.matrix[rows, flip]).real / dim
        if abs(coeff) > cutoff:
            terms.append(PauliTerm(float(coeff), pauli))
    return PauliSum(n, terms)


def random_hermitian(n_qubits: int, seed: int) -> DenseHermitian:
    """(B + B^dagger)/2 with B standard complex normal (E|b_ij|^2 = 1)."""
    if not 1 <= n_qubits <= MAX_DENSE_QUBITS:
        raise SizeError(f"n_qubits must be in [1, {MAX_DENSE_QUBITS}], got {n_qubits}")
    rng = np.random.default_rng(seed)
    dim = 1 << n_qubits
    b = (rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))) / np.sqrt(2.0)
    return DenseHermitian((b + b.conj().T) / 2)


def eigenvalues(h: PauliSum | DenseHermitian, method: str = "auto") -> np.ndarray:
    """Ascending spectrum. ``method`` is "jacobi", "lapack" or "auto"."""
    dense = to_dense(h)
    if dense.n_qubits > MAX_DENSE_QUBITS:
        raise SizeError(f"eigensolver is capped at {MAX_DENSE_QUBITS} qubits")
    if method == "auto":
        method = "jacobi" if dense.n_qubits <= MAX_JACOBI_QUBITS else "lapack"
    if method == "jacobi":
        return hermitian_eigenvalues(dense.matrix)
    if method == "lapack":
        return np.linalg.eigvalsh(dense.matrix)
    raise ValueError(f"unknown eigensolver method {method!r}")


def exact_ground_energy(h: PauliSum | DenseHermitian, method: str = "auto") -> float:
    return float(eigenvalues(h, method)[0])


# -- Max-Cut -----------------------------------------------------------------


@dataclass(frozen=True)
class Graph:
    n_vertices: int
    edges: tuple[tuple[int, int, float], ...] = ()

    def __post_init__(self):
        if self.n_vertices < 1:
            raise GraphError(f"graph needs at least one vertex, got {self.n_vertices}")
        seen = set()
        clean = []
        for edge in self.edges:
            if len(edge) == 2:
                edge = (*edge, 1.0)
            u, v, w = int(edge[0]), int(edge[1]), float(edge[2])
            if u == v:
                raise GraphError(f"self-loop on vertex {u}")
            if not (0 <= u < self.n_vertices and 0 <= v < self.n_vertices):
                raise GraphError(f"edge ({u}, {v}) references a vertex outside [0, {self.n_vertices})")
            u, v = min(u, v), max(u, v)
            if (u, v) in seen:
                raise GraphError(f"duplicate edge ({u}, {v})")
            seen.add((u, v))
            clean.append((u, v, w))
        object.__setattr__(self, "edges", tuple(clean))

    def cut_value(self, assignment) -> float:
        """Weight of edges crossing the cut; ``assignment`` is an int bitmask or a 0/1 sequence."""
        if isinstance(assignment, (int, np.integer)):
            bits = [(int(assignment) >> v) & 1 for v in range(self.n_vertices)]
        else:
            bits = [int(b) for b in assignment]
        return float(sum(w for u, v, w in self.edges if bits[u] != bits[v]))


def random_graph(n_vertices: int, edge_probability: float, seed: int) -> Graph:
    rng = np.random.default_rng(seed)
    edges = [
        (u, v, 1.0)
        for u in range(n_vertices)
        for v in range(u + 1, n_vertices)
        if rng.random() < edge_probability
    ]
    return Graph(n_vertices, tuple(edges))


def maxcut_ising(g: Graph) -> PauliSum:
    """H = sum_(u,v,w) (w/2) Z_u Z_v - (w/2) I, so the ground energy is minus the max cut."""
    n = g.n_vertices
    terms = []
    for u, v, w in g.edges:
        zz = ["I"] * n
        zz[u] = zz[v] = "Z"
        terms.append(PauliTerm(w / 2, "".join(zz)))
        terms.append(PauliTerm(-w / 2, "I" * n))
    return PauliSum(n, terms)


def brute_force_maxcut(g: Graph) -> tuple[float, int]:
    """Best cut value and one optimal assignment (bitmask, vertex k = bit k)."""
    best_value, best_mask = -np.inf, 0
    for mask in range(1 << g.n_vertices):
        value = g.cut_value(mask)
        if value > best_value:
            best_value, best_mask = value, mask
    return best_value, best_mask


def bitstring(mask: int, n: int) -> str:
    """Character k is the bit of qubit/vertex k."""
    return "".join(str((mask >> k) & 1) for k in range(n))


# -- file formats -------------------------------------------------------------


def parse_pauli_text(text: str) -> PauliSum:
    """Parse ``coefficient WS pauli_string`` lines; '#' starts a comment."""
    terms = []
    width = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 2:
            raise PauliParseError(f"expected 'coefficient pauli_string', got {raw.strip()!r}", lineno)
        try:
            coeff = float(parts[0])
        except ValueError:
            raise PauliParseError(f"bad coefficient {parts[0]!r}", lineno) from None
        pauli = parts[1]
        if not pauli or any(ch not in "IXYZ" for ch in pauli):
            raise PauliParseError(f"bad Pauli string {pauli!r}", lineno)
        if not np.isfinite(coeff):
            raise PauliParseError(f"non-finite coefficient {parts[0]!r}", lineno)
        if width is None:
            width = len(pauli)
        elif len(pauli) != width:
            raise PauliParseError(f"Pauli string length {len(pauli)} differs from {width}", lineno)
        terms.append(PauliTerm(coeff, pauli))
    if width is None:
        raise PauliParseError("no terms found")
    return PauliSum(width, terms)


def load_pauli_file(path) -> PauliSum:
    return parse_pauli_text(Path(path).read_text(encoding="utf-8"))


def write_pauli_file(path, h: PauliSum) -> None:
    lines = [f"{t.coefficient!r} {t.pauli_string}" for t in h.terms]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def parse_graph_text(text: str) -> Graph:
    """First line ``n m``, then ``m`` lines ``u v w``."""
    lines = [ln.split("#", 1)[0].strip() for ln in text.splitlines()]
    lines = [ln for ln in lines if ln]
    if not lines:
        raise GraphError("empty graph file")
    try:
        n, m = (int(x) for x in lines[0].split())
    except ValueError:
        raise GraphError(f"bad header {lines[0]!r}; expected 'n m'") from None
    if len(lines) - 1 != m:
        raise GraphError(f"header declares {m} edges, found {len(lines) - 1}")
    edges = []
    for line in lines[1:]:
        parts = line.split()
        try:
            u, v = int(parts[0]), int(parts[1])
            w = float(parts[2]) if len(parts) > 2 else 1.0
        except (ValueError, IndexError):
            raise GraphError(f"bad edge line {line!r}") from None
        edges.append((u, v, w))
    return Graph(n, tuple(edges))


def load_graph_file(path) -> Graph:
    return parse_graph_text(Path(path).read_text(encoding="utf-8"))


def write_graph_file(path, g: Graph) -> None:
    lines = [f"{g.n_vertices} {len(g.edges)}"] + [f"{u} {v} {w!r}" for u, v, w in g.edges]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")
