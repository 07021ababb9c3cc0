"""Improved Differential Evolution over flattened codebooks.

DE/current-to-best/1 mutation with a normally distributed weighting factor,
binomial crossover, and a boundary repair that either clamps a violating
component to the bound or redraws it uniformly inside the bounds. Fitness is
the PSNR of the image reconstructed with the candidate codebook (maximised).
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .imaging import GrayImage, TrainingSet
from .quantizer import PEAK, Codebook, decode, encode, mse, psnr


@dataclass
class Candidate:
    genome: np.ndarray
    fitness: float | None = None

    def codebook(self, dim: int) -> Codebook:
        return Codebook(self.genome.reshape(-1, dim))


@dataclass(frozen=True)
class IdeConfig:
    population_size: int = 20
    generations: int = 10
    crossover_rate: float = 0.9
    f_scale: float = 3.0
    repair_clamp_probability: float = 0.5
    seed: int = 0

    def __post_init__(self):
        if self.population_size < 4:
            raise ValueError("population_size must be >= 4")
        if self.generations < 1:
            raise ValueError("generations must be >= 1")
        if not 0.0 <= self.crossover_rate <= 1.0:
            raise ValueError("crossover_rate must be in [0, 1]")
        if not 0.0 <= self.repair_clamp_probability <= 1.0:
            raise ValueError("repair_clamp_probability must be in [0, 1]")


@dataclass(frozen=True)
class GenerationStats:
    generation: int
    best_psnr: float
    mean_psnr: float


def substream(seed: int, *key: int) -> np.random.Generator:
    """Independent generator keyed by ``key`` (e.g. generation, candidate index)."""
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=key))


def _as_genome(x) -> np.ndarray:
    return np.asarray(getattr(x, "genome", x), dtype=np.float64)


def group_bounds(num_blocks: int, nc: int) -> np.ndarray:
    """Start offsets of the N_c contiguous groups, plus the end sentinel.

    Groups hold floor(N_b / N_c) blocks; the last one absorbs the remainder.
    """
    size = num_blocks // nc
    bounds = np.arange(nc + 1) * size
    bounds[-1] = num_blocks
    return bounds


def init_population(
    ts: TrainingSet, nc: int, np_: int, rng: np.random.Generator
) -> list[Candidate]:
    """Codebooks built by picking one random block from each intensity group.

    Blocks are ordered by ascending pixel sum (stable on ties) and cut into
    N_c contiguous groups; codeword j of every candidate comes from group j.
    """
    nb = len(ts)
    if nb == 0:
        raise ValueError("empty training set")
    if nc < 1 or nc > nb:
        raise ValueError(f"codebook size {nc} must be in [1, {nb}] (number of blocks)")
    order = np.argsort(ts.vectors.sum(axis=1), kind="stable")
    bounds = group_bounds(nb, nc)
    picks = rng.integers(bounds[:-1], bounds[1:], size=(np_, nc))
    return [Candidate(ts.vectors[order[row]].ravel().copy()) for row in picks]


def mutate(target, best, r1, r2, f: float) -> np.ndarray:
    """V = X + F (X_best - X) + F (X_r1 - X_r2), unrepaired."""
    x, xb, a, b = (_as_genome(v) for v in (target, best, r1, r2))
    if not (x.shape == xb.shape == a.shape == b.shape):
        raise ValueError("genome length mismatch in mutation")
    return x + f * (xb - x) + f * (a - b)


def draw_f(rng: np.random.Generator, f_scale: float = 3.0) -> float:
    return f_scale * float(rng.standard_normal())


def crossover(target, mutant, cr: float, rng: np.random.Generator) -> np.ndarray:
    x, v = _as_genome(target), _as_genome(mutant)
    if x.shape != v.shape:
        raise ValueError("genome length mismatch in crossover")
    if not 0.0 <= cr <= 1.0:
        raise ValueError("crossover rate must be in [0, 1]")
    take = rng.random(x.size) <= cr
    take[rng.integers(x.size)] = True
    return np.where(take, v, x)


def repair_bounds(
    genome,
    lo: float = 0.0,
    hi: float = PEAK,
    p_clamp: float = 0.5,
    rng: np.random.Generator | None = None,
) -> np.ndarray:
    """Bring out-of-range components back into [lo, hi].

    Each violating component is set to the bound it crossed with probability
    ``p_clamp``; otherwise it is replaced by a uniform draw in [lo, hi].
    """
    if not lo < hi:
        raise ValueError("need lo < hi")
    rng = rng if rng is not None else np.random.default_rng()
    g = np.array(_as_genome(genome), copy=True)
    bad = np.flatnonzero((g < lo) | (g > hi) | np.isnan(g))
    if bad.size == 0:
        return g
    clamp = rng.random(bad.size) < p_clamp
    fresh = rng.uniform(lo, hi, size=bad.size)
    g[bad] = np.where(clamp, np.where(g[bad] < lo, lo, hi), fresh)
    return g


def evaluate_fitness(genome, ts: TrainingSet, original: GrayImage) -> float:
    """PSNR (dB) of ``original`` reconstructed with the genome as codebook."""
    g = _as_genome(genome)
    if g.size % ts.dim:
        raise ValueError(f"genome length {g.size} is not a multiple of dim {ts.dim}")
    cb = Codebook(g.reshape(-1, ts.dim))
    return psnr(mse(original, decode(encode(ts, cb), cb)))


def _stats(generation: int, best: float, fitness: list[float]) -> GenerationStats:
    return GenerationStats(generation, best, float(np.mean(fitness)))


def ide_optimize(
    ts: TrainingSet,
    original: GrayImage,
    nc: int,
    cfg: IdeConfig | None = None,
    threads: int = 1,
) -> tuple[Candidate, list[GenerationStats]]:
    """Evolve a population of codebooks for ``cfg.generations`` generations.

    Generations are synchronous: every trial of generation G is built from
    the settled population of G-1. A trial replaces its target when its PSNR
    is not worse. Randomness for candidate i in generation G comes from its
    own substream, so results do not depend on ``threads``.

    Returns the best candidate and per-generation stats (entry 0 is the
    initial population).
    """
    cfg = cfg or IdeConfig()
    if nc > len(ts):
        raise ValueError(f"codebook size {nc} exceeds number of blocks {len(ts)}")
    NP = cfg.population_size

    population = init_population(ts, nc, NP, substream(cfg.seed, 0))

    with ThreadPoolExecutor(max_workers=max(1, threads)) as pool:

        def evaluate_all(genomes):
            return list(pool.map(lambda g: evaluate_fitness(g, ts, original), genomes))

        for cand, fit in zip(population, evaluate_all([c.genome for c in population])):
            cand.fitness = fit
        fitness = [c.fitness for c in population]
        ib = int(np.argmax(fitness))
        best = Candidate(population[ib].genome.copy(), fitness[ib])
        history = [_stats(0, best.fitness, fitness)]

        for gen in range(1, cfg.generations + 1):
            trials = [_make_trial(population, best, i, gen, cfg) for i in range(NP)]
            trial_fitness = evaluate_all(trials)

            for i, (trial, fit) in enumerate(zip(trials, trial_fitness)):
                if fit >= population[i].fitness:
                    population[i] = Candidate(trial, fit)
            fitness = [c.fitness for c in population]
            ib = int(np.argmax(fitness))
            if fitness[ib] > best.fitness:
                best = Candidate(population[ib].genome.copy(), fitness[ib])
            history.append(_stats(gen, best.fitness, fitness))

    return best, history


def _make_trial(
    population: list[Candidate], best: Candidate, i: int, gen: int, cfg: IdeConfig
) -> np.ndarray:
    rng = substream(cfg.seed, gen, i)
    others = [k for k in range(len(population)) if k != i]
    r1, r2 = (int(k) for k in rng.choice(others, size=2, replace=False))
    assert len({i, r1, r2}) == 3
    f = draw_f(rng, cfg.f_scale)
    target = population[i]
    mutant = mutate(target, best, population[r1], population[r2], f)
    trial = crossover(target, mutant, cfg.crossover_rate, rng)
    trial = repair_bounds(trial, 0.0, PEAK, cfg.repair_clamp_probability, rng)
    if trial.min() < 0.0 or trial.max() > PEAK:
        raise AssertionError("repaired genome left the [0, 255] box")
    return trial


def history_to_csv(history: list[GenerationStats]) -> str:
    rows = ["generation,best_psnr,mean_psnr"]
    rows.extend(f"{h.generation},{h.best_psnr!r},{h.mean_psnr!r}" for h in history)
    return "\n".join(rows) + "\n"
