import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import random_image
from vqforge import ide as ide_mod
from vqforge.ide import (
    Candidate,
    IdeConfig,
    crossover,
    draw_f,
    evaluate_fitness,
    history_to_csv,
    ide_optimize,
    init_population,
    mutate,
    repair_bounds,
)
from vqforge.imaging import GrayImage, TrainingSet, extract_blocks


def sorted_positions(ts, population, nc):
    """Rank of each chosen codeword in an independent re-sort of block sums."""
    sums = [float(sum(v)) for v in ts.vectors]
    order = sorted(range(len(sums)), key=lambda i: (sums[i], i))
    rank = {i: r for r, i in enumerate(order)}
    out = []
    for cand in population:
        cw = cand.genome.reshape(nc, -1)
        ranks = []
        for c in cw:
            hits = [i for i in range(len(ts)) if np.array_equal(ts.vectors[i], c)]
            ranks.append(sorted(rank[i] for i in hits))
        out.append(ranks)
    return out


class TestInitPopulation:
    def test_groups_of_four(self):
        ts = TrainingSet(np.arange(16 * 4).reshape(16, 4)[::-1].astype(float), 16, 4, 2)
        pop = init_population(ts, 4, 10, np.random.default_rng(0))
        assert len(pop) == 10
        for ranks in sorted_positions(ts, pop, 4):
            for j, r in enumerate(ranks):
                assert 4 * j <= r[0] < 4 * j + 4

    def test_nc_equals_nb(self):
        rng = np.random.default_rng(1)
        ts = TrainingSet(rng.integers(0, 256, (8, 4)).astype(float), 8, 4, 2)
        pop = init_population(ts, 8, 3, rng)
        order = np.argsort(ts.vectors.sum(1), kind="stable")
        for cand in pop:
            assert np.array_equal(cand.genome, ts.vectors[order].ravel())

    def test_remainder_joins_last_group(self):
        ts = TrainingSet(np.arange(10 * 4).reshape(10, 4).astype(float), 20, 2, 1 * 2)
        pop = init_population(ts, 3, 200, np.random.default_rng(3))
        last = {int(c.genome.reshape(3, 4)[2, 0]) // 4 for c in pop}
        assert last == {6, 7, 8, 9}

    def test_camera_group_membership(self, camera):
        ts = extract_blocks(camera, 4)
        pop = init_population(ts, 256, 3, np.random.default_rng(5))
        sums = ts.vectors.sum(1)
        boundary = np.sort(sums)  # independent sort of block sums
        for cand in pop:
            cw_sums = cand.genome.reshape(256, 16).sum(1)
            for j, s in enumerate(cw_sums):
                assert boundary[64 * j] <= s <= boundary[64 * j + 63]

    def test_errors(self):
        ts = TrainingSet(np.zeros((4, 4)), 4, 4, 2)
        with pytest.raises(ValueError):
            init_population(ts, 5, 4, np.random.default_rng(0))


class TestMutation:
    def test_zero_f(self):
        x = np.array([1.0, 2.0])
        assert mutate(x, x + 5, x * 3, x - 1, 0.0).tolist() == x.tolist()

    def test_hand_value(self):
        assert mutate([10.0], [20.0], [4.0], [2.0], 0.5).tolist() == [16.0]

    @given(st.floats(-50, 50))
    def test_symmetric_case(self, f):
        x = np.array([3.0, 7.0, 200.0])
        r = np.array([9.0, 9.0, 9.0])
        assert np.array_equal(mutate(x, x, r, r, f), x)

    def test_accepts_candidates(self):
        c = Candidate(np.array([10.0]))
        assert mutate(c, Candidate(np.array([20.0])), [4.0], [2.0], 0.5).tolist() == [16.0]

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            mutate([1.0], [1.0, 2.0], [1.0], [1.0], 1.0)


class TestDrawF:
    def test_first_draw(self):
        z = np.random.default_rng(7).standard_normal()
        assert draw_f(np.random.default_rng(7)) == 3 * z

    def test_zero_scale(self):
        rng = np.random.default_rng(0)
        assert all(draw_f(rng, 0.0) == 0.0 for _ in range(100))

    def test_moments(self):
        rng = np.random.default_rng(99)
        draws = np.array([draw_f(rng, 3.0) for _ in range(100_000)])
        assert abs(draws.mean()) <= 0.05
        assert abs(draws.std() - 3.0) <= 0.05


class TestCrossover:
    def test_cr_one(self):
        x, v = np.zeros(50), np.ones(50)
        assert np.array_equal(crossover(x, v, 1.0, np.random.default_rng(0)), v)

    def test_cr_zero_forced_index(self):
        x, v = np.zeros(50), np.arange(1.0, 51.0)
        for seed in range(20):
            u = crossover(x, v, 0.0, np.random.default_rng(seed))
            assert np.count_nonzero(u != x) == 1

    def test_half_rate(self):
        x, v = np.zeros(10_000), np.ones(10_000)
        frac = crossover(x, v, 0.5, np.random.default_rng(4)).mean()
        assert abs(frac - 0.5) <= 0.03

    def test_errors(self):
        rng = np.random.default_rng(0)
        with pytest.raises(ValueError):
            crossover([1.0], [1.0, 2.0], 0.5, rng)
        with pytest.raises(ValueError):
            crossover([1.0], [2.0], 1.5, rng)


class TestRepair:
    def test_clamp(self):
        out = repair_bounds([300.0, -5.0, 17.0], 0, 255, 1.0, np.random.default_rng(0))
        assert out.tolist() == [255.0, 0.0, 17.0]

    def test_in_range_untouched(self):
        g = np.random.default_rng(1).uniform(0, 255, 100)
        assert np.array_equal(repair_bounds(g, 0, 255, 0.5, np.random.default_rng(2)), g)

    def test_regenerate_moments(self):
        out = repair_bounds(np.full(10_000, 300.0), 0, 255, 0.0, np.random.default_rng(3))
        assert out.min() >= 0 and out.max() <= 255
        assert abs(out.mean() - 127.5) <= 3

    def test_mixed_branches(self):
        out = repair_bounds(np.full(10_000, -1.0), 0, 255, 0.5, np.random.default_rng(4))
        assert abs(np.mean(out == 0.0) - 0.5) <= 0.03

    def test_bad_bounds(self):
        with pytest.raises(ValueError):
            repair_bounds([1.0], 5, 5)


class TestFitness:
    def test_lossless(self):
        img = random_image(3, 8, 8)
        ts = extract_blocks(img, 4)
        assert evaluate_fitness(ts.vectors.ravel(), ts, img) == math.inf

    def test_uniform(self):
        img = GrayImage(np.full((8, 8), 128))
        assert evaluate_fitness(np.full(16, 128.0), extract_blocks(img, 4), img) == math.inf

    def test_independent_pipeline(self):
        img = random_image(8, 8, 8)
        genome = np.random.default_rng(1).uniform(0, 255, 32)
        # second path: pure-python blocking, scan, rounding, MSE, PSNR
        px = img.pixels.tolist()
        cws = [genome[:16].tolist(), genome[16:].tolist()]
        sq = 0
        for by in range(2):
            for bx in range(2):
                block = [px[by * 4 + r][bx * 4 + c] for r in range(4) for c in range(4)]
                dists = [sum((a - b) ** 2 for a, b in zip(block, cw)) for cw in cws]
                cw = cws[dists.index(min(dists))]
                sq += sum((a - min(255, max(0, math.floor(b + 0.5)))) ** 2 for a, b in zip(block, cw))
        expected = 10 * math.log10(255**2 / (sq / 64))
        assert evaluate_fitness(genome, extract_blocks(img, 4), img) == pytest.approx(expected, abs=1e-9)


def two_tone(seed=0):
    rng = np.random.default_rng(seed)
    px = np.where(rng.random((16, 16)) < 0.5, 40, 200)
    return GrayImage(px)


class TestIdeOptimize:
    def test_lossless_candidate_kept(self):
        # N_c == N_b: every candidate is the sorted block set, already lossless
        img = random_image(2, 8, 8)
        best, hist = ide_optimize(extract_blocks(img, 4), img, 4, IdeConfig(population_size=5, generations=3))
        assert best.fitness == math.inf
        assert all(h.best_psnr == math.inf for h in hist)

    def test_history(self):
        img = random_image(4, 16, 16)
        cfg = IdeConfig(population_size=6, generations=5, seed=3)
        best, hist = ide_optimize(extract_blocks(img, 4), img, 3, cfg)
        assert [h.generation for h in hist] == list(range(6))
        best_seq = [h.best_psnr for h in hist]
        mean_seq = [h.mean_psnr for h in hist]
        assert best_seq == sorted(best_seq)
        assert mean_seq == sorted(mean_seq)
        assert best.fitness == best_seq[-1]
        assert best.genome.min() >= 0 and best.genome.max() <= 255
        assert history_to_csv(hist).splitlines()[0] == "generation,best_psnr,mean_psnr"

    @pytest.mark.parametrize("seed", range(10))
    def test_two_tone_improves_on_initial(self, seed):
        img = two_tone(seed)
        best, hist = ide_optimize(
            extract_blocks(img, 4), img, 2, IdeConfig(population_size=8, generations=20, seed=seed)
        )
        assert best.fitness >= hist[0].best_psnr

    def test_deterministic_any_threads(self):
        img = random_image(5, 16, 16)
        ts = extract_blocks(img, 4)
        cfg = IdeConfig(population_size=6, generations=4, seed=11)
        a = ide_optimize(ts, img, 4, cfg, threads=1)
        b = ide_optimize(ts, img, 4, cfg, threads=4)
        assert np.array_equal(a[0].genome, b[0].genome)
        assert a[1] == b[1]

    def test_bounds_and_distinct_indices(self, monkeypatch):
        seen = []
        real_mutate = ide_mod.mutate
        real_evaluate = ide_mod.evaluate_fitness

        def spy_mutate(target, best, r1, r2, f):
            seen.append((id(target), id(r1), id(r2)))
            return real_mutate(target, best, r1, r2, f)

        def spy_evaluate(genome, ts, original):
            assert genome.min() >= 0 and genome.max() <= 255
            return real_evaluate(genome, ts, original)

        monkeypatch.setattr(ide_mod, "mutate", spy_mutate)
        monkeypatch.setattr(ide_mod, "evaluate_fitness", spy_evaluate)
        img = random_image(6, 16, 16)
        ide_optimize(extract_blocks(img, 4), img, 4, IdeConfig(population_size=5, generations=6, f_scale=30.0))
        assert len(seen) == 30
        assert all(len({a, b, c}) == 3 for a, b, c in seen)

    def test_config_validation(self):
        with pytest.raises(ValueError):
            IdeConfig(population_size=3)
        with pytest.raises(ValueError):
            IdeConfig(generations=0)
        with pytest.raises(ValueError):
            IdeConfig(crossover_rate=1.2)
        with pytest.raises(ValueError):
            IdeConfig(repair_clamp_probability=-0.1)


@settings(max_examples=15, deadline=None)
@given(seed=st.integers(0, 2**31), f_scale=st.floats(0, 10))
def test_selection_properties(seed, f_scale):
    img = random_image(seed, 8, 16)
    cfg = IdeConfig(population_size=4, generations=3, seed=seed, f_scale=f_scale)
    best, hist = ide_optimize(extract_blocks(img, 4), img, 2, cfg)
    for a, b in zip(hist, hist[1:]):
        assert b.best_psnr >= a.best_psnr
        assert b.mean_psnr >= a.mean_psnr or math.isinf(a.mean_psnr)
