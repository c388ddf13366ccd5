"""Command line: ``evqe run|oracle|ablate <config>``.

Exit codes: 0 success, 2 bad config or problem too large, 3 run aborted.
"""
from __future__ import annotations

import argparse
import dataclasses
import logging
import sys

import numpy as np

from .baselines import ansatz_cx_count, optimal_separable_energy, run_vqe
from .config import ExperimentConfig, load_config
from .errors import ConfigError, EvqeError, SizeError
from .evolution import run_evqe
from .hamiltonian import MAX_DENSE_QUBITS, bitstring, brute_force_maxcut, exact_ground_energy
from .records import (
    evqe_summary,
    maxcut_report,
    oracle_energy,
    summary,
    write_ablation_csv,
    write_generations_csv,
    write_json,
)

log = logging.getLogger("evqe")

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME = 0, 2, 3


def _prepare_out(cfg: ExperimentConfig):
    cfg.output.dir.mkdir(parents=True, exist_ok=True)
    return cfg.output.dir


def cmd_run(cfg: ExperimentConfig, workers: int) -> int:
    h = cfg.problem.hamiltonian
    out = _prepare_out(cfg)
    if cfg.algorithm == "evqe":
        record = run_evqe(cfg.evqe, h, workers=workers,
                          on_generation=lambda r: log.info("generation %d best_energy %r", r.generation, r.best_energy))
        write_generations_csv(out / cfg.output.csv, record.rows)
        payload = evqe_summary(record, h, cfg.problem.source, cfg.problem.graph)
    elif cfg.algorithm == "vqe":
        res = run_vqe(h, cfg.ansatz, seed=cfg.seed, noise=cfg.noise, **cfg.vqe_options)
        cx = ansatz_cx_count(cfg.ansatz)
        payload = summary(
            algorithm="vqe", seed=cfg.seed, problem=cfg.problem.source, best_energy=res.energy,
            exact=oracle_energy(h), depth=res.circuit.depth, cu3_count=cx, cx_estimate=cx,
            total_evaluations=res.evaluations,
            maxcut=maxcut_report(cfg.problem.graph, h, res.circuit) if cfg.problem.graph else None,
        )
    else:
        energy = optimal_separable_energy(h, restarts=cfg.separable_restarts, seed=cfg.seed)
        payload = summary(
            algorithm="separable", seed=cfg.seed, problem=cfg.problem.source, best_energy=energy,
            exact=oracle_energy(h), depth=1, cu3_count=0, cx_estimate=0, total_evaluations=0,
        )
    write_json(out / cfg.output.summary, payload)
    print(f"best_energy {payload['best_energy']!r}")
    if payload["oracle_available"]:
        print(f"exact_ground_energy {payload['exact_ground_energy']!r}")
        print(f"error {payload['error']!r}")
    print(f"wrote {out / cfg.output.summary}")
    return EXIT_OK


def cmd_oracle(cfg: ExperimentConfig) -> int:
    h = cfg.problem.hamiltonian
    if h.n_qubits > MAX_DENSE_QUBITS:
        raise SizeError(f"oracle is capped at {MAX_DENSE_QUBITS} qubits, got {h.n_qubits}")
    print(f"exact_ground_energy {exact_ground_energy(h)!r}")
    if cfg.problem.graph is not None:
        g = cfg.problem.graph
        value, mask = brute_force_maxcut(g)
        print(f"max_cut {value!r}")
        print(f"bitstring {bitstring(mask, g.n_vertices)}")
    return EXIT_OK


def cmd_ablate(cfg: ExperimentConfig, workers: int) -> int:
    if cfg.algorithm != "evqe":
        raise ConfigError("ablation compares EVQE variants; set algorithm.type to evqe", "algorithm.type")
    h = cfg.problem.hamiltonian
    exact = oracle_energy(h)
    if exact is None:
        raise SizeError("ablation needs the exact ground energy")
    out = _prepare_out(cfg)
    standard, cx = [], []
    for seed in cfg.ablation_seeds:
        for growth, bucket in (("identity", standard), ("cx", cx)):
            config = dataclasses.replace(cfg.evqe, seed=seed, growth=growth)
            bucket.append(run_evqe(config, h, workers=workers))
            log.info("seed %d %s final error %r", seed, growth, bucket[-1].best_energy - exact)
    write_ablation_csv(out / cfg.output.ablation, cfg.ablation_seeds, standard, cx, exact)
    med_std = float(np.median([r.best_energy - exact for r in standard]))
    med_cx = float(np.median([r.best_energy - exact for r in cx]))
    print(f"median_final_error standard {med_std!r}")
    print(f"median_final_error cx {med_cx!r}")
    print(f"wrote {out / cfg.output.ablation}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="evqe", description="Evolutionary variational quantum eigensolver")
    parser.add_argument("-v", "--verbose", action="store_true", help="log per-generation progress")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (("run", "run the configured algorithm"),
                            ("oracle", "print the exact ground energy (and optimal cut)"),
                            ("ablate", "compare identity-initialised growth against fixed-CX growth")):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("config", help="YAML experiment config")
        p.add_argument("--seed", type=int, default=None, help="override the master seed")
        p.add_argument("--workers", type=int, default=1, help="worker processes for layer optimization")
        p.add_argument("--out-dir", default=None, help="override output.dir")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.workers < 1:
        print("error: --workers must be >= 1", file=sys.stderr)
        return EXIT_CONFIG
    try:
        cfg = load_config(args.config, seed=args.seed, out_dir=args.out_dir)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        if args.command == "run":
            return cmd_run(cfg, args.workers)
        if args.command == "oracle":
            return cmd_oracle(cfg)
        return cmd_ablate(cfg, args.workers)
    except (ConfigError, SizeError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (EvqeError, ArithmeticError) as exc:
        print(f"run aborted: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
