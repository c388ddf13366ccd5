"""YAML experiment configs: one problem, one algorithm, one evaluator.

Example::

    seed: 3
    problem:
      type: maxcut            # random_hermitian | maxcut | pauli_file | pauli
      graph: graphs/g6.txt    # relative to the config file
    algorithm:
      type: evqe              # evqe | vqe | separable
      population_size: 50
      generations: 25
      alpha: 0.01
      beta: 0.00125
    evaluator:
      type: statevector       # statevector | shots
    output:
      dir: out

Unknown keys are rejected so that typos fail loudly.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import yaml

from .baselines import AnsatzSpec
from .errors import ConfigError, EvqeError
from .evolution import EvqeConfig
from .hamiltonian import (
    Graph,
    PauliSum,
    PauliTerm,
    load_graph_file,
    load_pauli_file,
    maxcut_ising,
    random_hermitian,
)
from .noise import NoiseConfig

PROBLEMS = ("random_hermitian", "maxcut", "pauli_file", "pauli")
ALGORITHMS = ("evqe", "vqe", "separable")
EVALUATORS = ("statevector", "shots")


@dataclass(frozen=True)
class Problem:
    kind: str
    hamiltonian: Any
    graph: Graph | None = None
    source: str = ""


@dataclass(frozen=True)
class OutputConfig:
    dir: Path
    csv: str = "generations.csv"
    summary: str = "summary.json"
    ablation: str = "ablation.csv"


@dataclass(frozen=True)
class ExperimentConfig:
    seed: int
    problem: Problem
    algorithm: str
    evqe: EvqeConfig | None = None
    ansatz: AnsatzSpec | None = None
    vqe_options: dict = field(default_factory=dict)
    separable_restarts: int = 8
    noise: NoiseConfig | None = None
    output: OutputConfig = OutputConfig(Path("."))
    ablation_seeds: tuple[int, ...] = (0, 1, 2, 3, 4)


def _section(raw: dict, name: str, required: bool = True) -> dict:
    value = raw.get(name)
    if value is None:
        if required:
            raise ConfigError("missing section", name)
        return {}
    if not isinstance(value, dict):
        raise ConfigError("must be a mapping", name)
    return dict(value)


def _check_keys(section: dict, allowed, prefix: str) -> None:
    for key in section:
        if key not in allowed:
            raise ConfigError(f"unknown key (allowed: {', '.join(sorted(allowed))})", f"{prefix}.{key}")


def _typed(section: dict, key: str, kind, prefix: str, default=None):
    value = section.get(key, default)
    if value is None:
        return None
    try:
        if kind is int and (isinstance(value, bool) or float(value) != int(value)):
            raise ValueError
        return kind(value)
    except (TypeError, ValueError):
        raise ConfigError(f"expected {kind.__name__}, got {value!r}", f"{prefix}.{key}") from None


def _problem(sec: dict, base: Path, master_seed: int) -> Problem:
    kind = sec.pop("type", None)
    if kind not in PROBLEMS:
        raise ConfigError(f"must be one of {PROBLEMS}", "problem.type")
    try:
        if kind == "random_hermitian":
            _check_keys(sec, {"n_qubits", "seed"}, "problem")
            n = _typed(sec, "n_qubits", int, "problem")
            if n is None:
                raise ConfigError("required", "problem.n_qubits")
            seed = _typed(sec, "seed", int, "problem", master_seed)
            return Problem(kind, random_hermitian(n, seed), source=f"random_hermitian(n={n}, seed={seed})")
        if kind == "maxcut":
            _check_keys(sec, {"graph"}, "problem")
            path = _path(sec, "graph", base)
            g = load_graph_file(path)
            return Problem(kind, maxcut_ising(g), g, source=str(path))
        if kind == "pauli_file":
            _check_keys(sec, {"path"}, "problem")
            path = _path(sec, "path", base)
            return Problem(kind, load_pauli_file(path), source=str(path))
        _check_keys(sec, {"terms"}, "problem")
        terms = sec.get("terms")
        if not isinstance(terms, list) or not terms:
            raise ConfigError("must be a non-empty list of [coefficient, pauli_string]", "problem.terms")
        parsed = []
        for i, term in enumerate(terms):
            if not isinstance(term, (list, tuple)) or len(term) != 2:
                raise ConfigError("expected [coefficient, pauli_string]", f"problem.terms[{i}]")
            parsed.append(PauliTerm(float(term[0]), str(term[1])))
        return Problem(kind, PauliSum(len(parsed[0].pauli_string), parsed), source="inline terms")
    except ConfigError:
        raise
    except (EvqeError, ValueError) as exc:
        raise ConfigError(str(exc), "problem") from exc


def _path(sec: dict, key: str, base: Path) -> Path:
    value = sec.get(key)
    if not value:
        raise ConfigError("required", f"problem.{key}")
    path = Path(value)
    if not path.is_absolute():
        path = base / path
    if not path.is_file():
        raise ConfigError(f"file not found: {path}", f"problem.{key}")
    return path


_EVQE_TYPES = {
    "population_size": int, "generations": int, "alpha": float, "beta": float,
    "distance_threshold": int, "opt_iterations": int, "p_topological": float,
    "p_parameter": float, "p_removal": float, "optimizer": str, "growth": str, "nm_tol": float,
}


def _evqe(sec: dict, seed: int, noise: NoiseConfig | None) -> EvqeConfig:
    _check_keys(sec, set(_EVQE_TYPES), "algorithm")
    kwargs = {k: _typed(sec, k, t, "algorithm") for k, t in _EVQE_TYPES.items() if k in sec}
    try:
        return EvqeConfig(seed=seed, noise=noise, **kwargs)
    except ConfigError as exc:
        raise ConfigError(str(exc).split(": ", 1)[-1], f"algorithm.{exc.field}") from exc


def _noise(sec: dict) -> NoiseConfig | None:
    kind = sec.pop("type", "statevector")
    if kind not in EVALUATORS:
        raise ConfigError(f"must be one of {EVALUATORS}", "evaluator.type")
    if kind == "statevector":
        _check_keys(sec, set(), "evaluator")
        return None
    _check_keys(sec, {"shots", "p1", "p2", "trajectories"}, "evaluator")
    kwargs = {
        "shots": None if "shots" in sec and sec["shots"] is None else _typed(sec, "shots", int, "evaluator", 1300),
        "p1": _typed(sec, "p1", float, "evaluator", 0.0),
        "p2": _typed(sec, "p2", float, "evaluator", 0.0),
        "trajectories": _typed(sec, "trajectories", int, "evaluator", 1),
    }
    try:
        return NoiseConfig(**kwargs)
    except ValueError as exc:
        raise ConfigError(str(exc), "evaluator") from exc


def parse_config(raw: Any, base_dir: Path | str = ".", seed: int | None = None,
                 out_dir: Path | str | None = None) -> ExperimentConfig:
    """Validate a loaded YAML document. ``seed``/``out_dir`` override the file."""
    if not isinstance(raw, dict):
        raise ConfigError("config must be a mapping at the top level")
    _check_keys(raw, {"seed", "problem", "algorithm", "evaluator", "output", "ablation"}, "config")
    base = Path(base_dir)
    master = seed if seed is not None else _typed(raw, "seed", int, "config", 0)
    if master < 0:
        raise ConfigError("must be non-negative", "seed")

    problem = _problem(_section(raw, "problem"), base, master)
    noise = _noise(_section(raw, "evaluator", required=False))

    alg = _section(raw, "algorithm")
    kind = alg.pop("type", None)
    if kind not in ALGORITHMS:
        raise ConfigError(f"must be one of {ALGORITHMS}", "algorithm.type")
    evqe = ansatz = None
    vqe_options: dict = {}
    restarts = 8
    if kind == "evqe":
        evqe = _evqe(alg, master, noise)
    elif kind == "vqe":
        _check_keys(alg, {"family", "entanglement", "depth", "optimizer", "max_iter"}, "algorithm")
        try:
            ansatz = AnsatzSpec(problem.hamiltonian.n_qubits,
                                depth=_typed(alg, "depth", int, "algorithm", 1),
                                family=str(alg.get("family", "RyRz")),
                                entanglement=str(alg.get("entanglement", "linear")))
        except ConfigError as exc:
            raise ConfigError(str(exc).split(": ", 1)[-1], f"algorithm.{exc.field}") from exc
        vqe_options = {
            "method": alg.get("optimizer"),
            "max_iter": _typed(alg, "max_iter", int, "algorithm", 2000),
        }
        if vqe_options["method"] not in (None, "nelder_mead", "spsa"):
            raise ConfigError("must be 'nelder_mead' or 'spsa'", "algorithm.optimizer")
    else:
        _check_keys(alg, {"restarts"}, "algorithm")
        restarts = _typed(alg, "restarts", int, "algorithm", 8)
        if restarts < 1:
            raise ConfigError("must be >= 1", "algorithm.restarts")
        if noise is not None:
            raise ConfigError("the separable baseline is exact; use a statevector evaluator", "evaluator.type")

    out = _section(raw, "output", required=False)
    _check_keys(out, {"dir", "csv", "summary", "ablation"}, "output")
    out_path = Path(out_dir) if out_dir is not None else base / str(out.get("dir", "."))
    output = OutputConfig(out_path, str(out.get("csv", "generations.csv")),
                          str(out.get("summary", "summary.json")), str(out.get("ablation", "ablation.csv")))

    abl = _section(raw, "ablation", required=False)
    _check_keys(abl, {"seeds"}, "ablation")
    seeds = abl.get("seeds", [0, 1, 2, 3, 4])
    if not isinstance(seeds, list) or not seeds or not all(isinstance(s, int) and s >= 0 for s in seeds):
        raise ConfigError("must be a non-empty list of non-negative integers", "ablation.seeds")

    return ExperimentConfig(master, problem, kind, evqe, ansatz, vqe_options, restarts, noise, output,
                            tuple(seeds))


def load_config(path, seed: int | None = None, out_dir=None) -> ExperimentConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc.strerror}") from exc
    try:
        raw = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"invalid YAML in {path}: {exc}") from exc
    return parse_config(raw, path.parent, seed=seed, out_dir=out_dir)
