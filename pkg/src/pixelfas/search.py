"""Two-step optimizer.

Step 1 draws random (switch-set, hardwire) candidates, enumerates the
2^P switch states of each, and keeps candidates with at least N states
whose worst in-band reflection clears -10 dB. Step 2 runs a genetic
algorithm per matched set to pick and order N states against the J0
target, with an exhaustive brute-force oracle for small instances.

Determinism: every candidate and every GA run derives its RNG from the
master seed through a counter-based SeedSequence spawn key, so results
are independent of thread count.
"""

from __future__ import annotations

import dataclasses
import itertools
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError
from .em_model import MultiportNetwork, PatternGrid, PowerAngularSpectrum
from .impm import (PixelConfiguration, SwitchModel, build_load_map,
                   input_impedance, port_currents, reflection_coefficient)
from .pcdm import (CovarianceMatrix, TargetCovariance, average_error,
                   compute_kernel, covariance_from_currents, target_covariance)

MATCH_THRESHOLD_DB = -10.0


@dataclass(frozen=True)
class GAParams:
    """Genetic-algorithm knobs; defaults follow the published tuning."""

    max_generations: int = 200
    population_size: int = 600
    crossover_probability: float = 0.8
    mutation_probability: float = 0.1
    elitism: int = 2
    tournament_size: int = 4
    seed: int = 0

    def __post_init__(self):
        if not (0 <= self.crossover_probability <= 1
                and 0 <= self.mutation_probability <= 1):
            raise ConfigError("probabilities must lie in [0, 1]")
        if min(self.max_generations, self.population_size, self.tournament_size) < 1:
            raise ConfigError("counts must be positive")
        if not 0 <= self.elitism < self.population_size:
            raise ConfigError("elitism must be smaller than the population")


@dataclass
class MatchedSet:
    """All matched states sharing one (switch set, hardwire) parent."""

    switch_positions: tuple
    hardwire: tuple
    states: list[PixelConfiguration]
    worst_reflection_db: np.ndarray  # max-over-frequency S_E per state

    @property
    def m(self) -> int:
        return len(self.states)


@dataclass
class SearchStats:
    candidates_tried: int = 0
    matched_sets_found: int = 0
    best_reflection_db: float = math.inf


@dataclass
class Step1Result:
    matched_sets: list[MatchedSet]
    stats: SearchStats

    @property
    def exhausted(self) -> bool:
        return not self.matched_sets


def decode(chromosome, m: int, n: int) -> tuple:
    """Map a repeat-allowing chromosome to a duplicate-free ordering.

    A pool H = [1..M] shrinks as genes pick (b-1 mod len(H)) positions;
    the image covers every N-permutation of 1..M.
    """
    if n > m:
        raise ConfigError("cannot order more ports than available states")
    pool = list(range(1, m + 1))
    out = []
    for b in chromosome[:n]:
        j = (int(b) - 1) % len(pool)
        out.append(pool.pop(j))
    return tuple(out)


def make_evaluator(rhos: list[CovarianceMatrix], target: TargetCovariance):
    """delta_e as a cached function of the ordering tuple."""
    cache: dict[tuple, float] = {}

    def evaluate(ordering) -> float:
        key = tuple(ordering)
        hit = cache.get(key)
        if hit is None:
            hit = cache[key] = average_error(rhos, target, key)
        return hit

    return evaluate


def ga_order(m: int, n: int, evaluator, params: GAParams):
    """GA over chromosomes in {1..M}^N decoded to duplicate-free orderings.

    Returns (best ordering, best delta_e, per-generation best trace).
    The trace is monotone non-increasing (elitism keeps the incumbent).
    """
    if n > m:
        raise ConfigError("cannot order more ports than available states")
    rng = np.random.default_rng(np.random.SeedSequence(params.seed))
    pop_size = params.population_size
    pop = rng.integers(1, m + 1, size=(pop_size, n))

    best_order = None
    best_fit = math.inf
    trace = []
    for _ in range(params.max_generations):
        fits = np.empty(pop_size)
        for i in range(pop_size):
            order = decode(pop[i], m, n)
            fit = evaluator(order)
            fits[i] = fit
            if fit < best_fit:
                best_fit, best_order = fit, order
        trace.append(best_fit)

        elite_idx = np.argsort(fits, kind="stable")[:params.elitism]
        elites = pop[elite_idx].copy()

        contenders = rng.integers(0, pop_size, size=(pop_size, params.tournament_size))
        winners = contenders[np.arange(pop_size),
                             np.argmin(fits[contenders], axis=1)]
        children = pop[winners].copy()
        for a in range(0, pop_size - 1, 2):
            if rng.random() < params.crossover_probability:
                swap = rng.random(n) < 0.5
                tmp = children[a, swap].copy()
                children[a, swap] = children[a + 1, swap]
                children[a + 1, swap] = tmp
        mutate = rng.random((pop_size, n)) < params.mutation_probability
        children[mutate] = rng.integers(1, m + 1, size=int(mutate.sum()))

        pop = np.vstack([elites, children[:pop_size - params.elitism]])
    return best_order, best_fit, trace


def brute_force_order(m: int, n: int, evaluator, cap: int = 10_000_000):
    """Exact minimum over all N-permutations of 1..M; ties keep the first found."""
    count = math.perm(m, n)
    if count > cap:
        raise ConfigError(f"{count} orderings exceed the enumeration cap {cap}")
    best_order, best_fit = None, math.inf
    for perm in itertools.permutations(range(1, m + 1), n):
        fit = evaluator(perm)
        if fit < best_fit:
            best_order, best_fit = perm, fit
    return best_order, best_fit


# ---------------------------------------------------------------------------
# Step 1: random matched-set discovery
# ---------------------------------------------------------------------------

def enumerate_states(switch_positions: tuple, hardwire: tuple, q: int,
                     p: int) -> list[PixelConfiguration]:
    """The 2^P states sharing one switch set and hardwire vector."""
    states = []
    for bits in itertools.product((0, 1), repeat=p):
        states.append(PixelConfiguration(q=q, hardwire=hardwire,
                                         switch_positions=switch_positions,
                                         switch_bits=bits))
    return states


def _evaluate_candidate(net, switch_model, switch_positions, hardwire, p, z0):
    """Matched states of one candidate plus the best worst-case reflection seen."""
    matched = []
    worst = []
    best_seen = math.inf
    for state in enumerate_states(switch_positions, hardwire, net.q, p):
        loads = build_load_map(state, switch_model, net.freqs)
        z_in = input_impedance(net, loads)
        s_e = float(np.max(reflection_coefficient(z_in, z0)))
        best_seen = min(best_seen, s_e)
        if s_e < MATCH_THRESHOLD_DB:
            matched.append(state)
            worst.append(s_e)
    return matched, worst, best_seen


def random_matched_search(net: MultiportNetwork, switch_model: SwitchModel,
                          p: int, n: int, z0: float, seed: int,
                          budget: int = 10_000, target: int = 100,
                          threads: int = 1) -> Step1Result:
    """Sample candidate (S, x) pairs until ``target`` matched sets or budget runs out.

    S is uniform over P-subsets of 1..Q, hardwire bits are fair coins;
    duplicates (up to the off-switch bits that define a candidate) are
    skipped without consuming budget quality.
    """
    if not 1 <= p < net.q:
        raise ConfigError("switch count must satisfy 1 <= P < Q")
    if budget < 1 or target < 1:
        raise ConfigError("budget and target must be positive")
    q = net.q
    stats = SearchStats()
    matched_sets: list[MatchedSet] = []
    seen = set()

    def draw(idx):
        rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(0, idx)))
        positions = tuple(sorted(rng.choice(q, size=p, replace=False) + 1))
        hardwire = tuple(int(b) for b in rng.integers(0, 2, size=q))
        return positions, hardwire

    chunk = max(32, 4 * threads)
    pool = ThreadPoolExecutor(max_workers=threads) if threads > 1 else None
    try:
        idx = 0
        while idx < budget and len(matched_sets) < target:
            batch = []
            while idx < budget and len(batch) < chunk:
                positions, hardwire = draw(idx)
                idx += 1
                key = (positions, tuple(0 if (i + 1) in positions else b
                                        for i, b in enumerate(hardwire)))
                if key in seen:
                    continue
                seen.add(key)
                batch.append((positions, hardwire))
            if not batch:
                continue
            work = [(net, switch_model, pos, hw, p, z0) for pos, hw in batch]
            if pool is not None:
                results = list(pool.map(lambda a: _evaluate_candidate(*a), work))
            else:
                results = [_evaluate_candidate(*a) for a in work]
            for (positions, hardwire), (matched, worst, best_seen) in zip(batch, results):
                stats.candidates_tried += 1
                stats.best_reflection_db = min(stats.best_reflection_db, best_seen)
                if len(matched) >= n:
                    matched_sets.append(MatchedSet(
                        switch_positions=positions, hardwire=hardwire,
                        states=matched, worst_reflection_db=np.array(worst)))
                    if len(matched_sets) >= target:
                        break
    finally:
        if pool is not None:
            pool.shutdown()
    stats.matched_sets_found = len(matched_sets)
    return Step1Result(matched_sets=matched_sets, stats=stats)


# ---------------------------------------------------------------------------
# Full pipeline
# ---------------------------------------------------------------------------

@dataclass
class SetResult:
    """Step-2 outcome for one matched set."""

    set_index: int
    m: int
    ordering: tuple
    delta_e: float
    rhos: list[CovarianceMatrix] = field(repr=False, default_factory=list)


@dataclass
class RunResult:
    no_solution: bool
    stats: SearchStats
    target: TargetCovariance | None = None
    best: SetResult | None = None
    best_set: MatchedSet | None = None
    per_set: list[SetResult] = field(default_factory=list)
    reflections_db: np.ndarray | None = None  # (M, T) for the winning set


def currents_for_set(net: MultiportNetwork, switch_model: SwitchModel,
                     matched: MatchedSet, z0: float):
    """(T, Q+1, M) current matrix and (M, T) reflection table for a matched set."""
    t_samples = net.freqs.t_samples
    currents = np.empty((t_samples, net.q + 1, matched.m), dtype=complex)
    refl = np.empty((matched.m, t_samples))
    for j, state in enumerate(matched.states):
        loads = build_load_map(state, switch_model, net.freqs)
        z_in = input_impedance(net, loads)
        sol = port_currents(net, loads, z_in)
        currents[:, :, j] = sol.currents
        refl[j] = reflection_coefficient(z_in, z0)
    return currents, refl


def order_matched_sets(net: MultiportNetwork, patterns: PatternGrid,
                       pas: PowerAngularSpectrum, switch_model: SwitchModel,
                       step1: Step1Result, n: int, w: float, z0: float,
                       seed: int, ga_params: GAParams | None = None,
                       threads: int = 1) -> RunResult:
    """Step 2: GA ordering over every matched set; global argmin of delta_e."""
    if step1.exhausted:
        return RunResult(no_solution=True, stats=step1.stats)

    kernel = compute_kernel(patterns, pas)
    target = target_covariance(n, w)
    base = ga_params or GAParams()
    freqs_hz = net.freqs.samples_hz

    def solve_set(i: int):
        matched = step1.matched_sets[i]
        currents, refl = currents_for_set(net, switch_model, matched, z0)
        rhos = covariance_from_currents(kernel, currents, freqs_hz)
        evaluator = make_evaluator(rhos, target)
        sub_seed = np.random.SeedSequence(seed, spawn_key=(1, i))
        params = dataclasses.replace(base, seed=int(sub_seed.generate_state(1)[0]))
        ordering, delta_e, _ = ga_order(matched.m, n, evaluator, params)
        return SetResult(set_index=i, m=matched.m, ordering=ordering,
                         delta_e=delta_e, rhos=rhos), refl

    indices = range(len(step1.matched_sets))
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            solved = list(pool.map(solve_set, indices))
    else:
        solved = [solve_set(i) for i in indices]

    per_set = [s for s, _ in solved]
    best_idx = min(indices, key=lambda i: (per_set[i].delta_e, i))
    return RunResult(no_solution=False, stats=step1.stats, target=target,
                     best=per_set[best_idx],
                     best_set=step1.matched_sets[best_idx],
                     per_set=per_set, reflections_db=solved[best_idx][1])


def two_step_pipeline(net: MultiportNetwork, patterns: PatternGrid,
                      pas: PowerAngularSpectrum, switch_model: SwitchModel,
                      p: int, n: int, w: float, z0: float, seed: int,
                      budget: int = 10_000, target_sets: int = 100,
                      ga_params: GAParams | None = None,
                      threads: int = 1) -> RunResult:
    """Random matched-set discovery followed by GA selection-and-ordering."""
    step1 = random_matched_search(net, switch_model, p, n, z0, seed,
                                  budget=budget, target=target_sets,
                                  threads=threads)
    return order_matched_sets(net, patterns, pas, switch_model, step1,
                              n, w, z0, seed, ga_params=ga_params,
                              threads=threads)
