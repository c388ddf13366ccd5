"""Genetic encoding of circuits.

A gene is one circuit layer: a role per qubit drawn from

* ``"I"``  identity,
* ``"U3"`` a single-qubit U3,
* ``"C<t>"`` control of a CU3 whose target is qubit ``t``,
* ``"T<c>"`` target of a CU3 controlled by qubit ``c``.

Genes get globally unique, monotonically increasing ids from a
:class:`GeneRegistry`. A gene instance binds angles to a gene, and a genome is
a tuple of instances; its length is the circuit depth. Two genomes are compared
by gene id, never by structure.
"""
from __future__ import annotations

import math
import threading
from dataclasses import dataclass
from functools import cached_property
from typing import NamedTuple

import numpy as np

from .errors import RegistryError
from .simulator import CU3, CX_PARAMS, U3, Circuit, GateSpec, LayerTemplate

IDENTITY_ROLE = "I"
U3_ROLE = "U3"


def control_role(target: int) -> str:
    return f"C{target}"


def target_role(control: int) -> str:
    return f"T{control}"


def role_kind(role: str) -> str:
    if role in (IDENTITY_ROLE, U3_ROLE):
        return role
    return role[0]


def role_partner(role: str) -> int:
    return int(role[1:])


@dataclass(frozen=True)
class Gene:
    """One layer layout. ``fixed_cx`` genes carry non-optimisable CX-like CU3s."""

    id: int
    layout: tuple[str, ...]
    fixed_cx: bool = False

    def __post_init__(self):
        check_layout(self.layout)

    @property
    def n_qubits(self) -> int:
        return len(self.layout)

    @cached_property
    def ops(self) -> tuple[tuple[str, tuple[int, ...]], ...]:
        """(kind, qubits) per parameterised gate, ordered by lowest qubit index."""
        ops = []
        for q, role in enumerate(self.layout):
            kind = role_kind(role)
            if kind == U3_ROLE:
                ops.append((U3, (q,)))
            elif kind == "C" and q < role_partner(role):
                ops.append((CU3, (q, role_partner(role))))
            elif kind == "T" and q < role_partner(role):
                ops.append((CU3, (role_partner(role), q)))
        return tuple(ops)

    @property
    def n_params(self) -> int:
        return 3 * len(self.ops)

    @property
    def cu3_count(self) -> int:
        return sum(kind == CU3 for kind, _ in self.ops)

    @cached_property
    def free_indices(self) -> np.ndarray:
        """Parameter indices an optimizer may change."""
        free = []
        for i, (kind, _) in enumerate(self.ops):
            if not (self.fixed_cx and kind == CU3):
                free.extend(range(3 * i, 3 * i + 3))
        return np.array(free, dtype=np.int64)

    @cached_property
    def template(self) -> LayerTemplate:
        controls = [qs[0] if kind == CU3 else -1 for kind, qs in self.ops]
        targets = [qs[-1] for _, qs in self.ops]
        return LayerTemplate(np.array(controls, dtype=np.int64), np.array(targets, dtype=np.int64))

    def initial_params(self) -> tuple[float, ...]:
        """All zeros (identity), except fixed CX gates which are born as CX."""
        params = [0.0] * self.n_params
        if self.fixed_cx:
            for i, (kind, _) in enumerate(self.ops):
                if kind == CU3:
                    params[3 * i : 3 * i + 3] = CX_PARAMS
        return tuple(float(p) for p in params)

    def layer(self, params) -> list[GateSpec]:
        return self.template.gates(params)


def check_layout(layout) -> None:
    """Every qubit gets exactly one role and CU3 partners point at each other."""
    n = len(layout)
    if n < 1:
        raise ValueError("layout must cover at least one qubit")
    for q, role in enumerate(layout):
        kind = role_kind(role)
        if kind in (IDENTITY_ROLE, U3_ROLE):
            continue
        if kind not in ("C", "T"):
            raise ValueError(f"unknown role {role!r} on qubit {q}")
        p = role_partner(role)
        if not 0 <= p < n or p == q:
            raise ValueError(f"role {role!r} on qubit {q} has an invalid partner")
        expected = target_role(q) if kind == "C" else control_role(q)
        if layout[p] != expected:
            raise ValueError(f"qubit {q} role {role!r} is not matched by qubit {p} ({layout[p]!r})")


@dataclass(frozen=True)
class GeneInstance:
    gene_id: int
    params: tuple[float, ...]


@dataclass(frozen=True)
class Genome:
    genes: tuple[GeneInstance, ...] = ()

    def __len__(self):
        return len(self.genes)

    def __iter__(self):
        return iter(self.genes)

    def __getitem__(self, k):
        return self.genes[k]

    @property
    def gene_ids(self) -> tuple[int, ...]:
        return tuple(g.gene_id for g in self.genes)

    def append(self, instance: GeneInstance) -> Genome:
        return Genome(self.genes + (instance,))

    def truncate(self, p: int) -> Genome:
        return Genome(self.genes[:p])

    def with_params(self, k: int, params) -> Genome:
        genes = list(self.genes)
        genes[k] = GeneInstance(genes[k].gene_id, tuple(float(x) for x in params))
        return Genome(tuple(genes))


class GeneRegistry:
    """Append-only gene table with a serialised id counter."""

    def __init__(self):
        self._genes: dict[int, Gene] = {}
        self._next_id = 1
        self._lock = threading.Lock()

    def __len__(self):
        return len(self._genes)

    def __contains__(self, gene_id):
        return gene_id in self._genes

    def __getitem__(self, gene_id: int) -> Gene:
        try:
            return self._genes[gene_id]
        except KeyError:
            raise RegistryError(f"unknown gene id {gene_id}") from None

    @property
    def next_id(self) -> int:
        return self._next_id

    def create(self, layout, fixed_cx: bool = False) -> Gene:
        with self._lock:
            gene = Gene(self._next_id, tuple(layout), fixed_cx)
            self._genes[gene.id] = gene
            self._next_id += 1
        return gene

    def add(self, gene: Gene) -> Gene:
        """Insert a gene built elsewhere (e.g. deserialised); ids must stay unique."""
        with self._lock:
            existing = self._genes.get(gene.id)
            if existing is not None and existing != gene:
                raise RegistryError(f"gene id {gene.id} already registered with a different layout")
            self._genes[gene.id] = gene
            self._next_id = max(self._next_id, gene.id + 1)
        return gene


# -- pruning rules --------------------------------------------------------------


def _u3_legal(q: int, predecessor) -> bool:
    return predecessor is None or predecessor.layout[q] != U3_ROLE


def _cu3_legal(control: int, target: int, predecessor) -> bool:
    # only the same orientation on the same pair is forbidden
    return predecessor is None or predecessor.layout[control] != control_role(target)


def is_legal_successor(layout, predecessor) -> bool:
    """Whether ``layout`` may follow ``predecessor`` (a Gene or None) under the pruning rules.

    1. no U3 on a qubit whose previous role was U3;
    2. no CU3 repeating the previous control/target orientation on the same pair;
    3. identity only where neither U3 nor CU3 could be placed.
    """
    check_layout(layout)
    identities = []
    for q, role in enumerate(layout):
        kind = role_kind(role)
        if kind == U3_ROLE and not _u3_legal(q, predecessor):
            return False
        if kind == "C" and not _cu3_legal(q, role_partner(role), predecessor):
            return False
        if kind == IDENTITY_ROLE:
            if _u3_legal(q, predecessor):
                return False
            identities.append(q)
    # two idle qubits could always have been paired in at least one orientation
    return len(identities) <= 1


def random_layout(n_qubits: int, predecessor, rng: np.random.Generator) -> tuple[str, ...]:
    """Scan qubits in random order; pick U3 or CU3 uniformly where legal, else identity."""
    layout: list[str | None] = [None] * n_qubits
    for q in rng.permutation(n_qubits):
        q = int(q)
        if layout[q] is not None:
            continue
        pairs = []
        for p in range(n_qubits):
            if p == q or layout[p] is not None:
                continue
            if _cu3_legal(q, p, predecessor):
                pairs.append((q, p))
            if _cu3_legal(p, q, predecessor):
                pairs.append((p, q))
        kinds = []
        if _u3_legal(q, predecessor):
            kinds.append(U3_ROLE)
        if pairs:
            kinds.append(CU3)
        if not kinds:
            layout[q] = IDENTITY_ROLE
            continue
        kind = kinds[int(rng.integers(len(kinds)))]
        if kind == U3_ROLE:
            layout[q] = U3_ROLE
        else:
            control, target = pairs[int(rng.integers(len(pairs)))]
            layout[control] = control_role(target)
            layout[target] = target_role(control)
    return tuple(layout)


def random_gene(n_qubits: int, predecessor, rng: np.random.Generator, registry: GeneRegistry,
                fixed_cx: bool = False) -> Gene:
    if n_qubits < 1:
        raise ValueError(f"n_qubits must be >= 1, got {n_qubits}")
    return registry.create(random_layout(n_qubits, predecessor, rng), fixed_cx)


def enumerate_legal_layouts(n_qubits: int, predecessor) -> list[tuple[str, ...]]:
    """Brute force over every role assignment; for tests and small n only."""
    roles = [IDENTITY_ROLE, U3_ROLE] + [f"{k}{p}" for k in "CT" for p in range(n_qubits)]
    out = []
    for layout in _products(roles, n_qubits):
        try:
            if is_legal_successor(layout, predecessor):
                out.append(layout)
        except ValueError:
            continue
    return out


def _products(roles, n):
    if n == 0:
        yield ()
        return
    for head in _products(roles, n - 1):
        for r in roles:
            yield head + (r,)


def validate_genome(genome: Genome, registry: GeneRegistry) -> bool:
    prev = None
    for inst in genome:
        gene = registry[inst.gene_id]
        if len(inst.params) != gene.n_params:
            return False
        if not is_legal_successor(gene.layout, prev):
            return False
        prev = gene
    return True


# -- distance, circuits, metrics ---------------------------------------------------


def genetic_distance(a: Genome, b: Genome) -> int:
    """ceil((|a| + |b|) / 2) minus the number of positions holding the same gene id."""
    shared = sum(x.gene_id == y.gene_id for x, y in zip(a.genes, b.genes))
    return math.ceil((len(a) + len(b)) / 2) - shared


def build_circuit(genome: Genome, registry: GeneRegistry, n_qubits: int | None = None) -> Circuit:
    """One layer per gene instance. An empty genome gives an empty circuit on
    ``n_qubits`` qubits (0 when not given, since nothing fixes the width)."""
    genes = [registry[inst.gene_id] for inst in genome]
    if not genes:
        return Circuit(n_qubits or 0, ())
    n = genes[0].n_qubits
    if n_qubits is not None and n_qubits != n:
        raise ValueError(f"genome acts on {n} qubits, not {n_qubits}")
    return Circuit(n, tuple(g.layer(inst.params) for g, inst in zip(genes, genome)))


class Metrics(NamedTuple):
    depth: int
    cu3_count: int
    cx_estimate: int


# Each CU3 is accounted as the standard two-CX controlled-unitary decomposition.
CX_PER_CU3 = 2


def metrics(genome: Genome, registry: GeneRegistry) -> Metrics:
    cu3 = sum(registry[inst.gene_id].cu3_count for inst in genome)
    return Metrics(len(genome), cu3, CX_PER_CU3 * cu3)


# -- serialisation ----------------------------------------------------------------


def genome_to_records(genome: Genome, registry: GeneRegistry) -> list[dict]:
    records = []
    for inst in genome:
        gene = registry[inst.gene_id]
        records.append({
            "gene_id": gene.id,
            "roles": list(gene.layout),
            "fixed_cx": gene.fixed_cx,
            "params": [float(p) for p in inst.params],
        })
    return records


def genome_from_records(records, registry: GeneRegistry) -> Genome:
    genes = []
    for rec in records:
        gene = registry.add(Gene(int(rec["gene_id"]), tuple(rec["roles"]), bool(rec.get("fixed_cx", False))))
        params = tuple(float(p) for p in rec["params"])
        if len(params) != gene.n_params:
            raise ValueError(f"gene {gene.id} expects {gene.n_params} params, got {len(params)}")
        genes.append(GeneInstance(gene.id, params))
    return Genome(tuple(genes))
