import math

import numpy as np
import pytest

from actm.exceptions import NoFeasibleCandidate
from actm.fem import ForceDeflectionCurve
from actm.ga import (
    Chromosome,
    GAConfig,
    NSMOptimizer,
    NSMProblem,
    SurrogateProblem,
    crossover,
    default_pins,
    fitness,
    init_population,
    mutate,
    run,
    select,
    survival_shares,
)
from actm.synthesis import TorqueCurve

BOX = (0.030, 0.012)
CHORD = 0.0144222
PINS = default_pins(BOX, CHORD)
OPTIMUM = np.array([[0.011, 0.005], [0.015, 0.007], [0.019, 0.005]])


def is_valid(c):
    p = c.key_points
    return (
        np.array_equal(p[0], PINS[0])
        and np.array_equal(p[-1], PINS[1])
        and np.all(p >= 0)
        and np.all(p <= np.array(BOX))
        and np.all(np.diff(p[1:4, 0]) >= 0)
    )


def chromosome(middle):
    return Chromosome(np.vstack([PINS[0], middle, PINS[1]]))


class TestGAConfig:
    def test_defaults(self):
        cfg = GAConfig()
        assert (cfg.population_size, cfg.crossover_probability, cfg.cull_fraction) == (30, 0.30, 0.40)
        assert (cfg.mutation_mu, cfg.mutation_sigma, cfg.fitness_epsilon) == (1.0, 0.01, 1e-12)

    @pytest.mark.parametrize(
        "kwargs",
        [
            {"population_size": 3},
            {"crossover_probability": 1.5},
            {"cull_fraction": 0.0},
            {"cull_fraction": 1.0},
            {"mutation_sigma": -0.1},
            {"max_generations": -1},
            {"rng_seed": -1},
        ],
    )
    def test_invalid(self, kwargs):
        with pytest.raises(ValueError):
            GAConfig(**kwargs)


class TestInitPopulation:
    def test_size_and_closure(self):
        pop = init_population(BOX, PINS, GAConfig(), np.random.default_rng(0))
        assert len(pop) == 30
        assert all(is_valid(c) for c in pop)
        assert all(c.fitness is None for c in pop)

    def test_deterministic(self):
        a = init_population(BOX, PINS, GAConfig(), np.random.default_rng(5))
        b = init_population(BOX, PINS, GAConfig(), np.random.default_rng(5))
        for x, y in zip(a, b):
            np.testing.assert_array_equal(x.key_points, y.key_points)


class TestCrossover:
    def test_identical_parents(self):
        rng = np.random.default_rng(1)
        a = init_population(BOX, PINS, GAConfig(), rng)[0]
        c1, c2 = crossover(a, a.copy(), rng)
        np.testing.assert_array_equal(c1.key_points, a.key_points)
        np.testing.assert_array_equal(c2.key_points, a.key_points)

    def test_cut_four_is_identity(self):
        a = chromosome([[0.010, 0.001], [0.015, 0.002], [0.020, 0.003]])
        b = chromosome([[0.011, 0.004], [0.016, 0.005], [0.021, 0.006]])
        c1, c2 = crossover(a, b, np.random.default_rng(0), cut=4)
        np.testing.assert_array_equal(c1.key_points, a.key_points)
        np.testing.assert_array_equal(c2.key_points, b.key_points)

    def test_cut_two(self):
        a = chromosome([[0.010, 0.001], [0.015, 0.002], [0.020, 0.003]])
        b = chromosome([[0.011, 0.004], [0.016, 0.005], [0.021, 0.006]])
        c1, c2 = crossover(a, b, np.random.default_rng(0), cut=2)
        np.testing.assert_array_equal(c1.key_points[:2], a.key_points[:2])
        np.testing.assert_array_equal(c1.key_points[2:], b.key_points[2:])
        np.testing.assert_array_equal(c2.key_points[:2], b.key_points[:2])
        np.testing.assert_array_equal(c2.key_points[2:], a.key_points[2:])

    def test_reorders_invalid_children(self):
        a = chromosome([[0.008, 0.001], [0.009, 0.002], [0.010, 0.003]])
        b = chromosome([[0.020, 0.004], [0.021, 0.005], [0.005, 0.006]])
        c1, c2 = crossover(a, b, np.random.default_rng(0), cut=3)
        assert is_valid(c1) and is_valid(c2)

    def test_random_cut_closure(self):
        rng = np.random.default_rng(2)
        pop = init_population(BOX, PINS, GAConfig(), rng)
        for i in range(0, 30, 2):
            assert all(is_valid(c) for c in crossover(pop[i], pop[i + 1], rng))

    def test_invalid_cut(self):
        a = chromosome(OPTIMUM)
        with pytest.raises(ValueError):
            crossover(a, a, np.random.default_rng(0), cut=1)


class TestMutate:
    def test_zero_sigma_is_identity(self):
        c = chromosome(OPTIMUM)
        c.fitness = 0.5
        out = mutate(c, np.random.default_rng(0), GAConfig(mutation_sigma=0.0), BOX)
        np.testing.assert_array_equal(out.key_points, c.key_points)
        assert out.fitness == 0.5

    def test_only_middle_point_moves(self):
        c = chromosome(OPTIMUM)
        out = mutate(c, np.random.default_rng(0), GAConfig(), BOX)
        np.testing.assert_array_equal(out.key_points[[0, 1, 3, 4]], c.key_points[[0, 1, 3, 4]])
        assert not np.array_equal(out.key_points[2], c.key_points[2])
        assert out.fitness is None

    def test_mean_multiplier(self):
        rng = np.random.default_rng(11)
        c = chromosome(OPTIMUM)
        cfg = GAConfig()
        ratios = np.array([mutate(c, rng, cfg, BOX).key_points[2] / OPTIMUM[1] for _ in range(20000)])
        assert 0.999 <= ratios.mean() <= 1.001
        assert ratios.std() == pytest.approx(0.01, rel=0.05)

    def test_clamped_to_box(self):
        c = chromosome([[0.010, 0.001], [0.0299, 0.0119], [0.0299, 0.0119]])
        cfg = GAConfig(mutation_mu=1.05, mutation_sigma=0.0)
        out = mutate(c, np.random.default_rng(0), cfg, BOX)
        assert is_valid(out)
        np.testing.assert_allclose(out.key_points[1:4].max(axis=0), BOX)


class TestSelect:
    def pool(self, values):
        pop = [chromosome(OPTIMUM) for _ in values]
        for c, f in zip(pop, values):
            c.fitness = f
        return pop

    def test_removes_forty_percent(self):
        rng = np.random.default_rng(0)
        pop = self.pool(np.linspace(1, 10, 10))
        assert len(select(pop, rng, GAConfig())) == 6
        pop = self.pool(np.linspace(1, 10, 30))
        assert len(select(pop, rng, GAConfig())) == 18

    def test_elite_survives_infinite_pool(self):
        rng = np.random.default_rng(0)
        for _ in range(10000 // 100):
            pop = self.pool([0.0, math.inf, math.inf, math.inf, math.inf])
            for _ in range(100):
                survivors = select(list(pop), rng, GAConfig())
                assert pop[0] in survivors

    def test_equal_fitness_uniform(self):
        rng = np.random.default_rng(4)
        pop = self.pool([1.0] * 5)
        counts = np.zeros(5)
        for _ in range(4000):
            survivors = select(list(pop), rng, GAConfig())
            for i, c in enumerate(pop):
                counts[i] += c in survivors
        assert counts[0] == 4000
        np.testing.assert_allclose(counts[1:] / 4000, 0.5, atol=0.04)

    def test_worse_removed_more_often(self):
        rng = np.random.default_rng(5)
        pop = self.pool([1.0, 2.0, 4.0, 8.0, 16.0])
        removed = np.zeros(5)
        for _ in range(2000):
            survivors = select(list(pop), rng, GAConfig())
            removed += [c not in survivors for c in pop]
        assert removed[0] == 0
        assert np.all(np.diff(removed[1:]) > 0)

    def test_survival_shares(self):
        pop = self.pool([1.0, 3.0, math.inf])
        shares = survival_shares(pop, GAConfig())
        np.testing.assert_allclose(shares, [0.75, 0.25, 0.0], rtol=1e-9)


class TestRun:
    def problem(self):
        return SurrogateProblem(BOX, PINS, OPTIMUM)

    def test_infinite_threshold_stops_after_first_generation(self):
        res = run(GAConfig(fitness_threshold=math.inf, max_generations=20), self.problem())
        assert len(res.history) == 1
        assert res.converged

    def test_zero_generations(self):
        with pytest.raises(NoFeasibleCandidate):
            run(GAConfig(max_generations=0), self.problem())

    def test_all_infeasible(self):
        class Hopeless(SurrogateProblem):
            def evaluate(self, key_points):
                return math.inf

        with pytest.raises(NoFeasibleCandidate):
            run(GAConfig(max_generations=3), Hopeless(BOX, PINS, OPTIMUM))

    def test_deterministic(self):
        a = run(GAConfig(max_generations=10, rng_seed=9), self.problem())
        b = run(GAConfig(max_generations=10, rng_seed=9), self.problem())
        assert a.history == b.history
        np.testing.assert_array_equal(a.best.key_points, b.best.key_points)

    def test_elitism_and_improvement(self):
        res = run(GAConfig(max_generations=50, rng_seed=1), self.problem())
        best = [h["best_fitness"] for h in res.history]
        assert np.all(np.diff(best) <= 0)
        assert best[-1] < best[0]
        assert is_valid(res.best)

    def test_history_csv(self, tmp_path):
        res = run(GAConfig(max_generations=3), self.problem())
        path = tmp_path / "h.csv"
        res.history_to_csv(path)
        lines = path.read_text().splitlines()
        assert lines[0] == "generation,best_fitness,mean_fitness,evaluations"
        assert len(lines) == 4

    def test_parallel_matches_serial(self):
        a = run(GAConfig(max_generations=3, rng_seed=2), self.problem(), n_jobs=1)
        b = run(GAConfig(max_generations=3, rng_seed=2), self.problem(), n_jobs=2)
        assert a.history == b.history


class SyntheticNSM(NSMProblem):
    """NSM problem whose torque curve is injected instead of computed by FEM."""

    torque = None

    def analyze(self, key_points):
        psi = self.psi
        curve = ForceDeflectionCurve(np.array([1.0]), np.array([0.0]), np.array([self.peak]), np.array([True]))
        return curve, TorqueCurve(psi, self.torque(psi), self.config.window)


class TestNSMFitness:
    def make(self, paper_config, torque, peak=50e6):
        from actm.fem import PLA, CrossSection

        p = SyntheticNSM(paper_config, CrossSection(0.002, 0.002), PLA)
        p.torque = torque
        p.peak = peak
        return p

    def test_exactly_linear_is_zero(self, paper_config):
        p = self.make(paper_config, lambda psi: 0.05 * (psi - 1.5))
        assert p.evaluate(None) == pytest.approx(0.0, abs=1e-15)

    def test_noise_bound(self, paper_config):
        eps = 1e-4
        noise = np.random.default_rng(0).uniform(-eps, eps, size=19)
        k = paper_config.spring.k
        p = self.make(paper_config, lambda psi: k * psi + noise)
        assert 0 < p.evaluate(None) <= eps

    def test_wrong_slope_sign_is_infinite(self, paper_config):
        p = self.make(paper_config, lambda psi: -0.01 * psi)
        assert p.evaluate(None) == math.inf
        c = chromosome(OPTIMUM)
        assert fitness(c, p) == math.inf

    def test_slope_normalised(self, paper_config):
        wave = lambda psi: 1e-4 * np.sin(4 * psi)  # noqa: E731
        k = paper_config.spring.k
        a = self.make(paper_config, lambda psi: k * psi + wave(psi)).evaluate(None)
        b = self.make(paper_config, lambda psi: 2 * (k * psi + wave(psi))).evaluate(None)
        assert a == pytest.approx(b, rel=1e-12)

    def test_stress_penalty(self, paper_config):
        torque = lambda psi: paper_config.spring.k * psi + 1e-4 * np.sin(4 * psi)  # noqa: E731
        ok = self.make(paper_config, torque, peak=100e6).evaluate(None)
        over = self.make(paper_config, torque, peak=1.1 * 106e6).evaluate(None)
        assert over == pytest.approx(ok * (1 + 100 * 0.1), rel=1e-9)

    def test_pins_on_bottom_edge(self, paper_config):
        p = self.make(paper_config, np.zeros_like)
        np.testing.assert_allclose(p.pins[:, 1], 0.0)
        assert p.pins[1, 0] - p.pins[0, 0] == pytest.approx(paper_config.relaxed_chord)

    def test_threshold(self, paper_config):
        p = self.make(paper_config, np.zeros_like)
        ideal = paper_config.spring.k * (p.psi - p.psi.mean())
        assert p.default_threshold() == pytest.approx(0.02 * np.mean(np.abs(ideal)))

    def test_fem_failure_is_infinite(self, paper_config):
        from actm.fem import PLA, CrossSection

        p = NSMProblem(paper_config, CrossSection(0.002, 0.002), PLA)
        c = chromosome(OPTIMUM)
        c.key_points[2] = c.key_points[1]
        assert fitness(c, p) == math.inf


class TestNSMOptimizer:
    def test_get_params_round_trip(self):
        opt = NSMOptimizer(population_size=12, rng_seed=3)
        assert opt.get_params()["population_size"] == 12
        opt.set_params(max_generations=5)
        assert opt.max_generations == 5

    def test_fit(self):
        opt = NSMOptimizer(max_generations=5, rng_seed=0).fit(SurrogateProblem(BOX, PINS, OPTIMUM))
        assert len(opt.history_) == 5
        assert opt.best_fitness_ == opt.history_[-1]["best_fitness"]
        assert opt.predict(SurrogateProblem(BOX, PINS, OPTIMUM)) == opt.best_fitness_

    def test_predict_before_fit(self):
        from sklearn.exceptions import NotFittedError

        with pytest.raises(NotFittedError):
            NSMOptimizer().predict(SurrogateProblem(BOX, PINS, OPTIMUM))
