"""Genetic search over five-key-point beam shapes.

Each chromosome holds the key points of one candidate beam; the two end
points are the pin locations and never change. A generation applies
crossover to random pairs, mutates the middle key point of every non-elite
chromosome, culls part of the pool by roulette and tops the pool up with
fresh random shapes.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np
from sklearn.base import BaseEstimator

from ._validation import check_int, check_positive, check_probability
from .exceptions import ACTMError, NoFeasibleCandidate
from .fem import BeamDesign, build_model
from .synthesis import nsm_force_curve, nsm_torque_curve

__all__ = [
    "Chromosome",
    "GAConfig",
    "GAResult",
    "NSMProblem",
    "SurrogateProblem",
    "init_population",
    "crossover",
    "maybe_crossover",
    "mutate",
    "fitness",
    "select",
    "run",
    "NSMOptimizer",
    "default_pins",
]


@dataclass(eq=False)
class Chromosome:
    """Key points in the box frame; ``fitness`` is None until evaluated."""

    key_points: np.ndarray
    fitness: float = None

    def copy(self):
        return Chromosome(np.array(self.key_points, copy=True), self.fitness)

    @property
    def key(self):
        return np.ascontiguousarray(self.key_points).tobytes()


@dataclass(frozen=True)
class GAConfig:
    population_size: int = 30
    crossover_probability: float = 0.30
    mutation_mu: float = 1.0
    mutation_sigma: float = 0.01
    cull_fraction: float = 0.40
    max_generations: int = 100
    fitness_threshold: float = None
    rng_seed: int = 0
    fitness_epsilon: float = 1e-12

    def __post_init__(self):
        check_int(self.population_size, "population_size", 4)
        check_probability(self.crossover_probability, "crossover_probability")
        check_probability(self.cull_fraction, "cull_fraction", open_interval=True)
        check_int(self.max_generations, "max_generations", 0)
        if self.mutation_sigma < 0:
            raise ValueError("mutation_sigma must be >= 0")
        check_positive(self.fitness_epsilon, "fitness_epsilon")
        if not 0 <= int(self.rng_seed) < 2**64:
            raise ValueError("rng_seed must be an unsigned 64-bit integer")

    @property
    def n_culled(self):
        return math.ceil(self.cull_fraction * self.population_size - 1e-9)


def default_pins(box, chord):
    """Pins on the bottom edge of the box, centred along its width."""
    width, _ = box
    if chord > width:
        raise ValueError("relaxed chord does not fit in the design box")
    return np.array([[0.5 * (width - chord), 0.0], [0.5 * (width + chord), 0.0]])


def _sort_middle(points, pins):
    axis = pins[1] - pins[0]
    mid = points[1:4]
    order = np.argsort((mid - pins[0]) @ axis, kind="stable")
    points[1:4] = mid[order]
    return points


def _assemble(pins, middle):
    points = np.vstack([pins[0], middle, pins[1]])
    return _sort_middle(points, pins)


def _is_valid(points, box, pins):
    w, h = box
    inside = np.all(points[:, 0] >= 0) and np.all(points[:, 0] <= w) and np.all(points[:, 1] >= 0) and np.all(points[:, 1] <= h)
    axis = pins[1] - pins[0]
    proj = (points[1:4] - pins[0]) @ axis
    return bool(
        inside
        and np.array_equal(points[0], pins[0])
        and np.array_equal(points[-1], pins[1])
        and np.all(np.diff(proj) >= 0)
        and np.all(np.hypot(*np.diff(points, axis=0).T) > 0)
    )


def init_population(box, pins, config, rng):
    """``population_size`` random chromosomes with the middle points sorted along the chord."""
    pins = np.asarray(pins, dtype=float)
    scale = np.asarray(box, dtype=float)
    return [
        Chromosome(_assemble(pins, rng.uniform(0.0, 1.0, size=(3, 2)) * scale))
        for _ in range(config.population_size)
    ]


def crossover(a, b, rng, cut=None):
    """Swap the key points after a randomly chosen middle point.

    ``cut`` is the 1-based index of the selected point (2, 3 or 4); points up
    to and including it stay with their parent. Middle points are re-sorted
    along the chord afterwards so the children keep a valid ordering.
    """
    if cut is None:
        cut = int(rng.integers(2, 5))
    if cut not in (2, 3, 4):
        raise ValueError("cut must be 2, 3 or 4")
    pa, pb = np.asarray(a.key_points), np.asarray(b.key_points)
    pins = pa[[0, -1]]
    c1 = np.vstack([pa[:cut], pb[cut:]])
    c2 = np.vstack([pb[:cut], pa[cut:]])
    return Chromosome(_sort_middle(c1, pins)), Chromosome(_sort_middle(c2, pins))


def maybe_crossover(a, b, rng, config):
    """Cross ``a`` and ``b`` with probability ``crossover_probability``.

    Returns ``(child_a, child_b, crossed)``; uncrossed parents are returned as is.
    """
    if rng.random() < config.crossover_probability:
        return (*crossover(a, b, rng), True)
    return a, b, False


def mutate(c, rng, config, box):
    """Scale each coordinate of the middle key point by Normal(mu, sigma), clamped to the box."""
    points = np.array(c.key_points, dtype=float)
    factors = rng.normal(config.mutation_mu, config.mutation_sigma, size=2)
    points[2] = np.clip(points[2] * factors, 0.0, np.asarray(box, dtype=float))
    if np.array_equal(points, c.key_points):
        return Chromosome(points, c.fitness)
    return Chromosome(_sort_middle(points, points[[0, -1]]))


def fitness(c, problem):
    """Evaluate (or reuse) the chromosome's fitness; failures give +inf."""
    if c.fitness is None:
        try:
            c.fitness = float(problem.evaluate(c.key_points))
        except (ACTMError, ValueError, np.linalg.LinAlgError, FloatingPointError):
            c.fitness = math.inf
        if not c.fitness >= 0:
            c.fitness = math.inf
    return c.fitness


def _elite_index(population):
    return int(np.argmin([c.fitness for c in population]))


def select(population, rng, config):
    """Remove ``ceil(cull_fraction * n)`` chromosomes by roulette, never the best.

    Removal shares are proportional to ``fitness + epsilon``; infinite
    (infeasible) chromosomes are removed first, uniformly among themselves.
    """
    n_remove = math.ceil(config.cull_fraction * len(population) - 1e-9)
    elite = _elite_index(population)
    candidates = [i for i in range(len(population)) if i != elite]
    removed = set()
    for _ in range(min(n_remove, len(candidates))):
        f = np.array([population[i].fitness for i in candidates], dtype=float)
        infinite = np.isinf(f)
        if infinite.any():
            weights = infinite.astype(float)
        else:
            weights = f + config.fitness_epsilon
        pick = int(rng.choice(len(candidates), p=weights / weights.sum()))
        removed.add(candidates.pop(pick))
    return [c for i, c in enumerate(population) if i not in removed]


def survival_shares(population, config):
    """Roulette shares proportional to 1 / (fitness + epsilon)."""
    f = np.array([c.fitness for c in population], dtype=float)
    inv = np.where(np.isinf(f), 0.0, 1.0 / (f + config.fitness_epsilon))
    total = inv.sum()
    return inv / total if total > 0 else np.full(len(f), 1.0 / len(f))


@dataclass
class GAResult:
    best: Chromosome
    history: list = field(default_factory=list)
    evaluations: int = 0
    converged: bool = False

    def history_to_csv(self, path):
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["generation", "best_fitness", "mean_fitness", "evaluations"])
            for row in self.history:
                writer.writerow([row["generation"], repr(row["best_fitness"]), repr(row["mean_fitness"]), row["evaluations"]])


class _Evaluator:
    def __init__(self, problem, n_jobs):
        self.problem = problem
        self.n_jobs = n_jobs
        self.cache = {}
        self.count = 0

    def __call__(self, population):
        todo = {}
        for c in population:
            if c.fitness is None:
                if c.key in self.cache:
                    c.fitness = self.cache[c.key]
                else:
                    todo.setdefault(c.key, []).append(c)
        if not todo:
            return
        groups = list(todo.values())
        if self.n_jobs in (None, 1) or len(groups) == 1:
            values = [fitness(g[0], self.problem) for g in groups]
        else:
            from joblib import Parallel, delayed

            values = Parallel(n_jobs=self.n_jobs)(delayed(fitness)(g[0], self.problem) for g in groups)
        for g, v in zip(groups, values):
            self.cache[g[0].key] = v
            for c in g:
                c.fitness = v
        self.count += len(groups)


def run(config, problem, n_jobs=1, callback=None):
    """Evolve shapes until the threshold or ``max_generations`` is reached.

    Returns the best-ever chromosome together with per-generation best/mean
    fitness. Generation 0 is the evaluated initial pool.

    Raises
    ------
    NoFeasibleCandidate
        If no generation ran or every evaluated chromosome was infeasible.
    """
    if config.max_generations < 1:
        raise NoFeasibleCandidate("max_generations = 0: no search performed")
    rng = np.random.default_rng(int(config.rng_seed))
    box, pins = problem.box, np.asarray(problem.pins, dtype=float)
    threshold = config.fitness_threshold
    if threshold is None:
        threshold = problem.default_threshold()
    evaluate = _Evaluator(problem, n_jobs)

    population = init_population(box, pins, config, rng)
    evaluate(population)
    best = min(population, key=lambda c: c.fitness).copy()
    result = GAResult(best=best)

    def record(gen):
        f = np.array([c.fitness for c in population])
        finite = f[np.isfinite(f)]
        result.history.append(
            {
                "generation": gen,
                "best_fitness": float(result.best.fitness),
                "mean_fitness": float(finite.mean()) if len(finite) else math.inf,
                "evaluations": evaluate.count,
            }
        )
        if callback is not None:
            callback(result.history[-1])

    record(0)
    for gen in range(1, config.max_generations):
        if result.best.fitness <= threshold:
            break
        elite = _elite_index(population)
        others = [i for i in range(len(population)) if i != elite]
        order = rng.permutation(others)
        for i, j in zip(order[0::2], order[1::2]):
            population[i], population[j], _ = maybe_crossover(population[i], population[j], rng, config)
        for i in others:
            population[i] = mutate(population[i], rng, config, box)
        evaluate(population)
        population = select(population, rng, config)
        fresh = init_population(box, pins, config, rng)[: config.population_size - len(population)]
        evaluate(fresh)
        population.extend(fresh)
        challenger = min(population, key=lambda c: c.fitness)
        if challenger.fitness < result.best.fitness:
            result.best = challenger.copy()
        record(gen)
    result.evaluations = evaluate.count
    if not math.isfinite(result.best.fitness):
        raise NoFeasibleCandidate("every evaluated chromosome was infeasible")
    result.converged = result.best.fitness <= threshold
    return result


class NSMProblem:
    """FEM-in-the-loop fitness: linearity of the NSM torque over the window.

    The fitness is the RMS residual of the least-squares line through the NSM
    torque samples, rescaled to the section width that makes the fitted slope
    equal ``target_slope`` (the positive-spring stiffness). Shapes without
    negative stiffness (slope <= 0) or whose FEM fails score +inf; shapes whose
    peak stress exceeds ``stress_limit`` are penalised in proportion to the
    excess.

    Parameters
    ----------
    config : SynthesisConfig
    section, material :
        Base cross-section and material used during the search.
    box : (width, height)
        Design box in m.
    step : float
        Angular sampling of the operating window, rad.
    """

    def __init__(
        self,
        config,
        section,
        material,
        box=(0.030, 0.012),
        pins=None,
        n_elements=40,
        step=np.radians(5.0),
        stress_limit=None,
        stress_penalty=100.0,
    ):
        self.config = config
        self.section = section
        self.material = material
        self.box = tuple(box)
        self.pins = default_pins(self.box, config.relaxed_chord) if pins is None else np.asarray(pins, dtype=float)
        chord = float(np.hypot(*(self.pins[1] - self.pins[0])))
        if not np.isclose(chord, config.relaxed_chord, rtol=1e-9):
            raise ValueError("pin spacing must equal the relaxed chord")
        self.n_elements = n_elements
        self.psi = config.operating_angles(step)
        self.stress_limit = material.yield_strength if stress_limit is None else stress_limit
        self.stress_penalty = stress_penalty

    @property
    def target_slope(self):
        return self.config.spring.k

    def design(self, key_points):
        return BeamDesign(key_points, self.section, self.material, self.box)

    def analyze(self, key_points):
        """FEM curve and NSM torque curve of a shape (base section)."""
        model = build_model(self.design(key_points), self.n_elements)
        curve = nsm_force_curve(model, self.config, self.psi)
        nsm = nsm_torque_curve(curve, self.config.geometry, self.config.relaxed_chord, self.psi, self.config.window)
        return curve, nsm

    def evaluate(self, key_points):
        curve, nsm = self.analyze(key_points)
        slope = nsm.slope
        if not slope > 0:
            return math.inf
        value = nsm.rms_residual * self.target_slope / slope
        excess = max(0.0, float(np.max(curve.max_von_mises)) / self.stress_limit - 1.0)
        return value * (1.0 + self.stress_penalty * excess)

    def default_threshold(self):
        """2% of the mean |torque| of an ideal NSM with the target slope."""
        ideal = self.target_slope * (self.psi - self.psi.mean())
        return 0.02 * float(np.mean(np.abs(ideal)))


class SurrogateProblem:
    """Analytic quadratic landscape over the middle key points (for testing).

    Fitness is the squared box-normalised distance of the three middle points
    to ``optimum``.
    """

    def __init__(self, box, pins, optimum):
        self.box = tuple(box)
        self.pins = np.asarray(pins, dtype=float)
        self.optimum = np.asarray(optimum, dtype=float).reshape(3, 2)

    def evaluate(self, key_points):
        d = (np.asarray(key_points)[1:4] - self.optimum) / np.asarray(self.box)
        return float(np.sum(d * d))

    def default_threshold(self):
        return 0.0


class NSMOptimizer(BaseEstimator):
    """Estimator wrapper around :func:`run`.

    ``fit(problem)`` stores ``best_`` (a Chromosome), ``best_fitness_``,
    ``history_`` and ``n_evaluations_``.
    """

    def __init__(
        self,
        population_size=30,
        crossover_probability=0.30,
        mutation_mu=1.0,
        mutation_sigma=0.01,
        cull_fraction=0.40,
        max_generations=100,
        fitness_threshold=None,
        rng_seed=0,
        fitness_epsilon=1e-12,
        n_jobs=1,
    ):
        self.population_size = population_size
        self.crossover_probability = crossover_probability
        self.mutation_mu = mutation_mu
        self.mutation_sigma = mutation_sigma
        self.cull_fraction = cull_fraction
        self.max_generations = max_generations
        self.fitness_threshold = fitness_threshold
        self.rng_seed = rng_seed
        self.fitness_epsilon = fitness_epsilon
        self.n_jobs = n_jobs

    def _config(self):
        params = self.get_params()
        params.pop("n_jobs")
        return GAConfig(**params)

    def fit(self, problem, y=None):
        result = run(self._config(), problem, n_jobs=self.n_jobs)
        self.result_ = result
        self.best_ = result.best
        self.best_fitness_ = result.best.fitness
        self.history_ = result.history
        self.n_evaluations_ = result.evaluations
        return self

    def predict(self, problem):
        """Re-evaluate the best shape on ``problem`` (e.g. a finer mesh)."""
        if not hasattr(self, "best_"):
            from sklearn.exceptions import NotFittedError

            raise NotFittedError("call fit() first")
        return problem.evaluate(self.best_.key_points)
