"""CSV and JSON artifacts. Column names and JSON keys are part of the public contract."""
from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from .evaluation import StatevectorEvaluator
from .evolution import CSV_HEADER, GenerationRow, RunRecord
from .genome import genome_to_records
from .hamiltonian import MAX_DENSE_QUBITS, Graph, bitstring, brute_force_maxcut, exact_ground_energy

SUMMARY_KEYS = (
    "algorithm",
    "seed",
    "problem",
    "best_energy",
    "exact_ground_energy",
    "error",
    "oracle_available",
    "depth",
    "cu3_count",
    "cx_estimate",
    "total_evaluations",
    "best_genome",
    "maxcut",
)
MAXCUT_KEYS = ("bitstring", "cut_value", "optimal_cut")


def write_generations_csv(path, rows: list[GenerationRow]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CSV_HEADER)
        for row in rows:
            writer.writerow([repr(v) if isinstance(v, float) else v for v in row])


def read_generations_csv(path) -> list[GenerationRow]:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = tuple(next(reader))
        if header != CSV_HEADER:
            raise ValueError(f"unexpected header {header}")
        types = (int, float, float, int, int, int, float, int)
        return [GenerationRow(*(t(v) for t, v in zip(types, line))) for line in reader]


def write_json(path, payload: dict) -> None:
    Path(path).write_text(json.dumps(payload, indent=2) + "\n")


def oracle_energy(h) -> float | None:
    if h.n_qubits > MAX_DENSE_QUBITS:
        return None
    return exact_ground_energy(h)


def maxcut_report(graph: Graph, h, circuit) -> dict:
    """Most probable basis state of the (noiseless) final circuit, read as a cut."""
    amps = StatevectorEvaluator(h).state(circuit)
    mask = int(np.argmax(np.abs(amps) ** 2))
    optimal, _ = brute_force_maxcut(graph)
    return {
        "bitstring": bitstring(mask, graph.n_vertices),
        "cut_value": float(graph.cut_value(mask)),
        "optimal_cut": float(optimal),
    }


def summary(*, algorithm: str, seed: int, problem: str, best_energy: float, exact: float | None,
            depth: int, cu3_count: int, cx_estimate: int, total_evaluations: int,
            best_genome=None, maxcut: dict | None = None) -> dict:
    out = {
        "algorithm": algorithm,
        "seed": seed,
        "problem": problem,
        "best_energy": float(best_energy),
        "exact_ground_energy": exact,
        "error": None if exact is None else float(best_energy - exact),
        "oracle_available": exact is not None,
        "depth": int(depth),
        "cu3_count": int(cu3_count),
        "cx_estimate": int(cx_estimate),
        "total_evaluations": int(total_evaluations),
        "best_genome": best_genome,
        "maxcut": maxcut,
    }
    assert tuple(out) == SUMMARY_KEYS
    return out


def evqe_summary(record: RunRecord, h, problem: str, graph: Graph | None = None) -> dict:
    m = record.best.metrics
    return summary(
        algorithm="evqe",
        seed=record.config.seed,
        problem=problem,
        best_energy=record.best_energy,
        exact=oracle_energy(h),
        depth=m.depth,
        cu3_count=m.cu3_count,
        cx_estimate=m.cx_estimate,
        total_evaluations=record.total_evaluations,
        best_genome=genome_to_records(record.best_genome, record.registry),
        maxcut=maxcut_report(graph, h, record.best_circuit()) if graph is not None else None,
    )


def ablation_header(seeds) -> list[str]:
    header = ["generation"]
    for s in seeds:
        header += [f"standard_seed{s}", f"cx_seed{s}"]
    return header


def write_ablation_csv(path, seeds, standard: list[RunRecord], cx: list[RunRecord], exact: float) -> None:
    """Best-so-far error per generation, generation 0 being the freshly seeded population."""
    def errors(rec):
        return [r.best_energy - exact for r in [rec.initial, *rec.rows]]

    columns = []
    for a, b in zip(standard, cx):
        columns += [errors(a), errors(b)]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(ablation_header(seeds))
        for g in range(len(columns[0])):
            writer.writerow([g] + [repr(float(c[g])) for c in columns])
