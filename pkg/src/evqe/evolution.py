"""The EVQE generational loop: fitness sharing, speciation, selection and mutation.

One generation:

1. (first generation only) P single-gene genomes are created and speciated;
2. one random member of each species becomes its representative;
3. the last gene of every genome is optimized;
4. fitness ``energy + alpha*depth + beta*cu3`` and shared fitness are computed;
5. P parents are drawn with replacement, favouring low shared fitness;
6. each parent is mutated by removal, then growth, then (flagged) parameter search;
7. offspring are speciated against the representatives.

Randomness comes from streams keyed by ``(seed, generation, individual, stage)``,
and gene ids are handed out serially, so results do not depend on the worker count.
Parameter search for offspring is carried out together with the next
generation's step 3, which is where the parallel work happens.
"""
from __future__ import annotations

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Callable, NamedTuple

import numpy as np

from .errors import ConfigError, EvqeError
from .evaluation import make_evaluator
from .genome import (
    Gene,
    GeneInstance,
    GeneRegistry,
    Genome,
    Metrics,
    build_circuit,
    genetic_distance,
    metrics,
    random_gene,
)
from .noise import NoiseConfig
from .optimizers import OPTIMIZERS, minimize
from .simulator import Circuit

log = logging.getLogger(__name__)

# stream stage tags
_INIT, _EVAL, _OPT, _MUTATE, _SERIAL, _BEST = range(6)

SELECTION_EPSILON = 0.01


class EvolutionError(EvqeError, RuntimeError):
    def __init__(self, generation: int, cause: BaseException):
        super().__init__(f"generation {generation}: {type(cause).__name__}: {cause}")
        self.generation = generation


@dataclass(frozen=True)
class EvqeConfig:
    population_size: int = 20
    generations: int = 10
    alpha: float = 0.0
    beta: float = 0.0
    distance_threshold: int = 2
    opt_iterations: int = 100
    p_topological: float = 0.8
    p_parameter: float = 0.3
    p_removal: float = 0.1
    seed: int = 0
    optimizer: str | None = None  # None: Nelder-Mead when exact, SPSA when noisy
    noise: NoiseConfig | None = None  # None: exact state-vector energies
    growth: str = "identity"  # "cx": new CU3s are born as fixed CX gates
    nm_tol: float = 1e-10

    def __post_init__(self):
        if self.population_size < 2:
            raise ConfigError("must be >= 2", "population_size")
        if self.generations < 1:
            raise ConfigError("must be >= 1", "generations")
        for name in ("alpha", "beta"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value >= 0):
                raise ConfigError("must be a finite non-negative number", name)
        if self.distance_threshold < 1:
            raise ConfigError("must be >= 1", "distance_threshold")
        if self.opt_iterations < 1:
            raise ConfigError("must be >= 1", "opt_iterations")
        for name in ("p_topological", "p_parameter", "p_removal"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise ConfigError("must be in [0, 1]", name)
        if self.optimizer is not None and self.optimizer not in OPTIMIZERS:
            raise ConfigError(f"must be one of {OPTIMIZERS}", "optimizer")
        if self.growth not in ("identity", "cx"):
            raise ConfigError("must be 'identity' or 'cx'", "growth")
        if self.seed < 0:
            raise ConfigError("must be non-negative", "seed")


@dataclass
class Individual:
    genome: Genome
    energy: float
    fitness: float = math.nan
    adjusted_fitness: float = math.nan
    species: int = -1


@dataclass(frozen=True)
class SpeciesSet:
    representatives: tuple[tuple[Genome, int], ...] = ()
    next_id: int = 0


class GenerationRow(NamedTuple):
    generation: int
    best_energy: float
    best_fitness: float
    best_depth: int
    best_cu3: int
    species_count: int
    mean_energy: float
    cumulative_evaluations: int


CSV_HEADER = GenerationRow._fields


@dataclass
class Best:
    genome: Genome
    energy: float
    fitness: float
    metrics: Metrics
    generation: int


@dataclass
class RunRecord:
    n_qubits: int
    config: EvqeConfig
    registry: GeneRegistry
    initial: GenerationRow
    rows: list[GenerationRow]
    best: Best
    total_evaluations: int
    trace: list[list[Individual]] | None = field(default=None, repr=False)

    @property
    def best_energy(self) -> float:
        return self.best.energy

    @property
    def best_genome(self) -> Genome:
        return self.best.genome

    def best_circuit(self) -> Circuit:
        return build_circuit(self.best.genome, self.registry)


# -- fitness and selection -----------------------------------------------------------


def fitness(energy: float, genome: Genome, registry: GeneRegistry, alpha: float, beta: float) -> float:
    m = metrics(genome, registry)
    return energy + alpha * m.depth + beta * m.cu3_count


def adjusted_fitness(f: float, species_size: int) -> float:
    if species_size < 1:
        raise ValueError(f"species size must be >= 1, got {species_size}")
    return f / species_size


def selection_weights(adjusted) -> np.ndarray:
    """Shifted-spread weights: (worst - f) + eps * spread, uniform when spread is 0."""
    adjusted = np.asarray(adjusted, dtype=float)
    worst, best = adjusted.max(), adjusted.min()
    spread = worst - best
    if spread == 0:
        return np.full(len(adjusted), 1.0 / len(adjusted))
    w = (worst - adjusted) + SELECTION_EPSILON * spread
    return w / w.sum()


def select_parents(adjusted, rng: np.random.Generator, count: int | None = None) -> np.ndarray:
    """Indices of ``count`` (default: population size) parents drawn with replacement."""
    adjusted = np.asarray(adjusted, dtype=float)
    if len(adjusted) == 0:
        raise ValueError("cannot select from an empty population")
    count = len(adjusted) if count is None else count
    return rng.choice(len(adjusted), size=count, replace=True, p=selection_weights(adjusted))


# -- speciation ----------------------------------------------------------------------


def assign_species(population, species: SpeciesSet, threshold: int) -> tuple[list[int], SpeciesSet]:
    """First-fit: join the first representative closer than ``threshold``, else found a species."""
    if threshold < 1:
        raise ValueError(f"threshold must be >= 1, got {threshold}")
    reps = list(species.representatives)
    next_id = species.next_id
    assignment = []
    for genome in population:
        for rep, sid in reps:
            if genetic_distance(genome, rep) < threshold:
                assignment.append(sid)
                break
        else:
            reps.append((genome, next_id))
            assignment.append(next_id)
            next_id += 1
    return assignment, SpeciesSet(tuple(reps), next_id)


def pick_representatives(genomes, assignment, species: SpeciesSet, rng: np.random.Generator) -> SpeciesSet:
    """One uniformly chosen member per living species, in species-id order."""
    members: dict[int, list[int]] = {}
    for i, sid in enumerate(assignment):
        members.setdefault(sid, []).append(i)
    reps = []
    for sid in sorted(members):
        idx = members[sid]
        reps.append((genomes[idx[int(rng.integers(len(idx)))]], sid))
    return SpeciesSet(tuple(reps), species.next_id)


# -- mutation operators ------------------------------------------------------------------


def mutate_topological(genome: Genome, registry: GeneRegistry, rng: np.random.Generator,
                       n_qubits: int | None = None, fixed_cx: bool = False) -> Genome:
    """Append a fresh random gene with identity-initialised parameters."""
    if len(genome):
        predecessor = registry[genome[-1].gene_id]
        n_qubits = predecessor.n_qubits
    elif n_qubits is None:
        raise ValueError("n_qubits is required to grow an empty genome")
    else:
        predecessor = None
    gene = random_gene(n_qubits, predecessor, rng, registry, fixed_cx=fixed_cx)
    return genome.append(GeneInstance(gene.id, gene.initial_params()))


def mutate_removal(genome: Genome, rng: np.random.Generator) -> Genome:
    """Keep the first p instances, p uniform on {1, ..., m}; empty genomes pass through."""
    if not len(genome):
        return genome
    p = int(rng.integers(1, len(genome) + 1))
    return genome.truncate(p)


def optimize_layers(evaluator, genes: list[Gene], params, order, rng: np.random.Generator,
                    method: str = "nelder_mead", max_iter: int = 100, tol: float = 1e-10,
                    on_layer: Callable[[int], None] | None = None):
    """Optimize the listed layers one at a time, all others frozen.

    Returns (new params per layer, final energy, objective evaluations).
    """
    n = genes[0].n_qubits
    params = [np.array(p, dtype=float) for p in params]
    layers = [g.layer(p) for g, p in zip(genes, params)]
    evals = 0
    for k in order:
        k = int(k)
        if on_layer is not None:
            on_layer(k)
        gene = genes[k]
        free = gene.free_indices
        if len(free) == 0:
            continue
        cost = evaluator.layer_objective(
            Circuit(n, tuple(layers[:k])), gene.template, params[k], free,
            Circuit(n, tuple(layers[k + 1:])), rng,
        )
        x0 = params[k][free]
        f0 = None
        if method == "spsa" and evaluator.exact:
            f0 = cost(x0)
            evals += 1
        res = minimize(cost, x0, method=method, max_iter=max_iter, rng=rng, f0=f0, tol=tol)
        evals += res.evaluations
        params[k][free] = res.best_params
        layers[k] = gene.layer(params[k])
    energy = evaluator.energy(Circuit(n, tuple(layers)), rng)
    return params, energy, evals + 1


def mutate_parameter(genome: Genome, registry: GeneRegistry, evaluator, rng: np.random.Generator,
                     method: str = "nelder_mead", max_iter: int = 100,
                     on_layer: Callable[[int], None] | None = None) -> Genome:
    """Optimize every layer once, in a random order."""
    if not len(genome):
        raise ValueError("parameter search needs a non-empty genome")
    genes = [registry[inst.gene_id] for inst in genome]
    order = rng.permutation(len(genome))
    params, _, _ = optimize_layers(evaluator, genes, [inst.params for inst in genome], order, rng,
                                   method=method, max_iter=max_iter, on_layer=on_layer)
    return Genome(tuple(GeneInstance(inst.gene_id, tuple(float(x) for x in p))
                        for inst, p in zip(genome, params)))


# -- parallel plumbing --------------------------------------------------------------------

_WORKER_EVALUATOR = None


def _init_worker(evaluator):
    global _WORKER_EVALUATOR
    _WORKER_EVALUATOR = evaluator


def _optimize_task(task, evaluator=None):
    genes, params, order, method, max_iter, tol, key = task
    evaluator = evaluator if evaluator is not None else _WORKER_EVALUATOR
    rng = np.random.default_rng(list(key))
    new_params, energy, evals = optimize_layers(evaluator, genes, params, order, rng,
                                                method=method, max_iter=max_iter, tol=tol)
    return [tuple(float(x) for x in p) for p in new_params], energy, evals


class _Runner:
    def __init__(self, evaluator, workers: int):
        self.evaluator = evaluator
        self.pool = None
        if workers > 1:
            self.pool = ProcessPoolExecutor(max_workers=workers, initializer=_init_worker,
                                            initargs=(evaluator,))

    def map(self, tasks):
        if self.pool is None:
            return [_optimize_task(t, self.evaluator) for t in tasks]
        return list(self.pool.map(_optimize_task, tasks, chunksize=max(1, len(tasks) // 32)))

    def close(self):
        if self.pool is not None:
            self.pool.shutdown()


# -- main loop ------------------------------------------------------------------------------


def run_evqe(config: EvqeConfig, h, *, workers: int = 1, keep_trace: bool = False,
             on_generation: Callable[[GenerationRow], None] | None = None) -> RunRecord:
    evaluator = make_evaluator(h, config.noise)
    method = config.optimizer or ("nelder_mead" if evaluator.exact else "spsa")
    n = evaluator.n_qubits
    P = config.population_size
    fixed_cx = config.growth == "cx"
    registry = GeneRegistry()

    def stream(*key):
        return np.random.default_rng([config.seed, *key])

    def genes_of(genome):
        return [registry[inst.gene_id] for inst in genome]

    evals = 0
    # step 1
    genomes = []
    for i in range(P):
        gene = random_gene(n, None, stream(0, i, _INIT), registry, fixed_cx=fixed_cx)
        genomes.append(Genome((GeneInstance(gene.id, gene.initial_params()),)))
    energies = [evaluator.energy(build_circuit(g, registry), stream(0, i, _EVAL)) for i, g in enumerate(genomes)]
    evals += P
    assignment, species = assign_species(genomes, SpeciesSet(), config.distance_threshold)
    pending = [[] for _ in range(P)]

    def score(genomes, energies, assignment):
        sizes: dict[int, int] = {}
        for sid in assignment:
            sizes[sid] = sizes.get(sid, 0) + 1
        out = []
        for g, e, sid in zip(genomes, energies, assignment):
            f = fitness(e, g, registry, config.alpha, config.beta)
            out.append(Individual(g, e, f, adjusted_fitness(f, sizes[sid]), sid))
        return out

    def make_best(ind, generation):
        return Best(ind.genome, ind.energy, ind.fitness, metrics(ind.genome, registry), generation)

    def row(generation, best, population, evals):
        return GenerationRow(
            generation, best.energy, best.fitness, best.metrics.depth, best.metrics.cu3_count,
            len(set(ind.species for ind in population)),
            float(np.mean([ind.energy for ind in population])), evals,
        )

    population = score(genomes, energies, assignment)
    best = make_best(min(population, key=lambda ind: ind.fitness), 0)
    initial = row(0, best, population, evals)
    rows: list[GenerationRow] = []
    trace = [] if keep_trace else None

    runner = _Runner(evaluator, workers)
    try:
        for gen in range(1, config.generations + 1):
            try:
                serial = stream(gen, P, _SERIAL)
                # step 2
                species = pick_representatives(genomes, assignment, species, serial)
                # step 3, together with the parameter search flagged by step 6
                tasks = [
                    (tuple(genes_of(g)), [inst.params for inst in g], pending[i] + [len(g) - 1],
                     method, config.opt_iterations, config.nm_tol, (config.seed, gen, i, _OPT))
                    for i, g in enumerate(genomes)
                ]
                results = runner.map(tasks)
                energies = []
                for i, (params, energy, n_evals) in enumerate(results):
                    genomes[i] = Genome(tuple(GeneInstance(inst.gene_id, p)
                                              for inst, p in zip(genomes[i], params)))
                    energies.append(energy)
                    evals += n_evals
                # step 4
                population = score(genomes, energies, assignment)
                if not evaluator.exact:
                    # a noisy reading of the incumbent is refreshed rather than trusted
                    e = evaluator.energy(build_circuit(best.genome, registry), stream(gen, P, _BEST))
                    evals += 1
                    best = replace(best, energy=e,
                                   fitness=fitness(e, best.genome, registry, config.alpha, config.beta))
                champion = min(population, key=lambda ind: ind.fitness)
                if champion.fitness < best.fitness:
                    best = make_best(champion, gen)
                rows.append(row(gen, best, population, evals))
                if trace is not None:
                    trace.append(population)
                if on_generation is not None:
                    on_generation(rows[-1])
                log.debug("generation %d best %.6g species %d", gen, best.energy, rows[-1].species_count)
                if gen == config.generations:
                    break
                # step 5
                parents = select_parents([ind.adjusted_fitness for ind in population], serial)
                # step 6
                offspring, pending = [], []
                for i, parent in enumerate(parents):
                    rng = stream(gen, i, _MUTATE)
                    g = genomes[int(parent)]
                    if rng.random() < config.p_removal:
                        g = mutate_removal(g, rng)
                    if rng.random() < config.p_topological:
                        g = mutate_topological(g, registry, rng, n, fixed_cx=fixed_cx)
                    if rng.random() < config.p_parameter:
                        pending.append([int(k) for k in rng.permutation(len(g))])
                    else:
                        pending.append([])
                    offspring.append(g)
                genomes = offspring
                # step 7
                assignment, species = assign_species(genomes, species, config.distance_threshold)
            except EvqeError as exc:
                if isinstance(exc, EvolutionError):
                    raise
                raise EvolutionError(gen, exc) from exc
            except (ArithmeticError, ValueError) as exc:
                raise EvolutionError(gen, exc) from exc
    finally:
        runner.close()

    return RunRecord(n, config, registry, initial, rows, best, evals, trace)
