"""Subarray-position optimization: the closed-form correlation-nulling
centers for the relaxed placement problem, and a best/1/bin differential
evolution loop with a spacing-violation penalty for the general one."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class DEConfig:
    population: int = 50
    iterations: int = 50
    mutation_factor: float = 0.3
    crossover_rate: float = 0.9
    penalty_scale: float = 1000.0
    seed: int = 0

    def __post_init__(self) -> None:
        if self.population < 4:
            raise ValueError("mutation needs three distinct partners: population >= 4")
        if not 0.0 < self.mutation_factor <= 2.0:
            raise ValueError("mutation factor must lie in (0, 2]")
        if not 0.0 <= self.crossover_rate <= 1.0:
            raise ValueError("crossover rate must lie in [0, 1]")
        if self.penalty_scale <= 0:
            raise ValueError("penalty scale must be positive")


@dataclass(frozen=True)
class FitnessBreakdown:
    objective: float
    violation_pairs: tuple[tuple[int, int], ...]
    violation_extent: float
    penalty: float

    @property
    def fitness(self) -> float:
        return self.objective - self.penalty

    @property
    def feasible(self) -> bool:
        return not self.violation_pairs


@dataclass(frozen=True)
class DEIterate:
    iteration: int
    best_fitness: float
    mean_fitness: float
    penalty_count: int


def analytic_positions_p2(
    omega_theta: float,
    omega_r: float,
    n_sub: int,
    d: float,
    m: int,
    region: tuple[float, float],
) -> tuple[np.ndarray, tuple[int, ...]]:
    """Centers that null the per-subarray correlation kernel.

    Candidates are q = (2k - Nt*W_theta)/(2*Nt*W_r) for integer k not a
    multiple of Nt (those hit the removable singularity instead of a zero).
    The M candidates nearest the region center are kept, skipping any that
    would violate the Nt*d spacing; indices of returned centers lying
    outside the region are reported, not rejected (the relaxed problem has
    no region constraint).
    """
    if omega_r == 0.0:
        raise ValueError("zero range-curvature difference: kernel nulls do not exist")
    center = 0.5 * (region[0] + region[1])
    k_center = int(round((2.0 * center * n_sub * omega_r + n_sub * omega_theta) / 2.0))
    span = max(8 * m, 64)
    ks = [k for k in range(k_center - span, k_center + span + 1) if k % n_sub != 0]
    qs = [(2.0 * k - n_sub * omega_theta) / (2.0 * n_sub * omega_r) for k in ks]
    order = np.argsort([abs(q - center) for q in qs])
    chosen: list[float] = []
    min_gap = n_sub * d * (1.0 - 1e-12)
    for idx in order:
        q = qs[idx]
        if all(abs(q - other) >= min_gap for other in chosen):
            chosen.append(q)
        if len(chosen) == m:
            break
    if len(chosen) < m:
        raise ValueError("could not place all subarrays at distinct kernel nulls")
    positions = np.sort(np.array(chosen))
    outside = tuple(
        i for i, q in enumerate(positions) if q < region[0] or q > region[1]
    )
    return positions, outside


def spacing_violations(candidate: np.ndarray, min_gap_m: float):
    """Pairs closer than the subarray width and the total shortfall."""
    pairs = []
    extent = 0.0
    m = len(candidate)
    for i in range(m):
        for j in range(i + 1, m):
            gap = abs(candidate[i] - candidate[j])
            if gap < min_gap_m:
                pairs.append((i, j))
                extent += min_gap_m - gap
    return tuple(pairs), extent


def fitness(
    candidate: np.ndarray,
    objective_fn,
    min_gap_m: float,
    config: DEConfig,
) -> FitnessBreakdown:
    """objective(candidate) minus eta * (total shortfall) * (violating pairs)."""
    pairs, extent = spacing_violations(np.asarray(candidate, dtype=float), min_gap_m)
    penalty = config.penalty_scale * extent * len(pairs)
    return FitnessBreakdown(
        objective=float(objective_fn(np.asarray(candidate, dtype=float))),
        violation_pairs=pairs,
        violation_extent=extent,
        penalty=penalty,
    )


def de_mutate(best: np.ndarray, r1: np.ndarray, r2: np.ndarray, f: float) -> np.ndarray:
    """best/1 mutant: q_best + F * (q_r1 - q_r2)."""
    return np.asarray(best) + f * (np.asarray(r1) - np.asarray(r2))


def de_crossover(
    mutant: np.ndarray,
    current: np.ndarray,
    cr: float,
    forced_index: int,
    rng: np.random.Generator,
    region: tuple[float, float],
) -> np.ndarray:
    """Binomial crossover with one forced coordinate, clipped to the region."""
    mutant = np.asarray(mutant, dtype=float)
    current = np.asarray(current, dtype=float)
    take = rng.uniform(size=mutant.shape) < cr
    take[forced_index] = True
    trial = np.where(take, mutant, current)
    return np.clip(trial, region[0], region[1])


def de_select(
    trial: np.ndarray,
    current: np.ndarray,
    trial_fit: FitnessBreakdown,
    current_fit: FitnessBreakdown,
):
    """Keep the trial only on a strict fitness improvement."""
    if trial_fit.fitness > current_fit.fitness:
        return trial, trial_fit
    return current, current_fit


def repair_spacing(
    candidate: np.ndarray, min_gap_m: float, region: tuple[float, float]
) -> np.ndarray:
    """Sort, sweep pairs apart left-to-right, then pull back inside the region
    right-to-left.  Raises if the region cannot hold that many subarrays."""
    q = np.sort(np.clip(np.asarray(candidate, dtype=float), region[0], region[1]))
    for i in range(1, len(q)):
        q[i] = max(q[i], q[i - 1] + min_gap_m)
    q[-1] = min(q[-1], region[1])
    for i in range(len(q) - 2, -1, -1):
        q[i] = min(q[i], q[i + 1] - min_gap_m)
    if q[0] < region[0] - 1e-12:
        raise ValueError("movement region too narrow for the requested subarrays")
    return q


def _stream(seed: int, *key: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(entropy=(seed, 0xDE, *key)))


def optimize_positions(
    objective_fn,
    region: tuple[float, float],
    m: int,
    n_sub: int,
    d: float,
    config: DEConfig,
) -> tuple[np.ndarray, FitnessBreakdown, tuple[DEIterate, ...]]:
    """Run the DE loop and return the best centers, their fitness breakdown,
    and the per-generation trace.

    The population starts feasible (random draws repaired for spacing);
    mutation may wander infeasible and is charged the penalty.  The best
    individual used for mutation is frozen per generation, so the
    best-fitness trace never decreases.  Identical seeds reproduce runs
    bit-for-bit; candidate fitness values are cached on coordinates
    quantized to 1e-6 m so survivors are never re-evaluated.
    """
    min_gap = n_sub * d
    cache: dict[tuple[int, ...], FitnessBreakdown] = {}

    def evaluate(vec: np.ndarray) -> FitnessBreakdown:
        key = tuple(int(round(x / 1e-6)) for x in vec)
        got = cache.get(key)
        if got is None:
            got = fitness(vec, objective_fn, min_gap, config)
            cache[key] = got
        return got

    init_rng = _stream(config.seed, 0)
    population = [
        repair_spacing(init_rng.uniform(region[0], region[1], size=m), min_gap, region)
        for _ in range(config.population)
    ]
    fits = [evaluate(q) for q in population]
    best_idx = int(np.argmax([f.fitness for f in fits]))
    trace: list[DEIterate] = []

    def record(iteration: int) -> None:
        values = [f.fitness for f in fits]
        trace.append(
            DEIterate(
                iteration=iteration,
                best_fitness=float(np.max(values)),
                mean_fitness=float(np.mean(values)),
                penalty_count=int(sum(1 for f in fits if f.penalty > 0)),
            )
        )

    record(0)
    for it in range(1, config.iterations + 1):
        best_prev = population[best_idx].copy()
        new_population = list(population)
        new_fits = list(fits)
        for g in range(config.population):
            rng = _stream(config.seed, it, g)
            partners = [idx for idx in range(config.population) if idx != g]
            r1, r2 = rng.choice(partners, size=2, replace=False)
            mutant = de_mutate(best_prev, population[r1], population[r2], config.mutation_factor)
            forced = int(rng.integers(m))
            trialv = de_crossover(
                mutant, population[g], config.crossover_rate, forced, rng, region
            )
            trial_fit = evaluate(trialv)
            new_population[g], new_fits[g] = de_select(
                trialv, population[g], trial_fit, fits[g]
            )
        population, fits = new_population, new_fits
        best_idx = int(np.argmax([f.fitness for f in fits]))
        record(it)
    return population[best_idx].copy(), fits[best_idx], tuple(trace)
