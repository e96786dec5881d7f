"""Seeded genetic search over permutations and fixed-size subsets.

Two chromosome encodings cover both uses in this package: permutations
(assigning canonical labels to symbols) and k-of-n subsets (picking boundary
lattice points).  Crossover and mutation are structure-preserving, so every
individual stays a valid permutation / k-subset.  Fitness values are cached
per chromosome; with a fitness function built on frozen common random
numbers the elitist best never decreases.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class GaConfig:
    population: int = 64
    generations: int = 200
    mutation_rate: float = 0.1
    crossover_rate: float = 0.9
    elite_count: int = 2
    sample_budget: int = 20_000
    seed: int = 0

    def __post_init__(self):
        if not (self.population > self.elite_count >= 1):
            raise ValueError("population must exceed elite_count >= 1")
        if not (0.0 < self.mutation_rate < 1.0 and 0.0 < self.crossover_rate < 1.0):
            raise ValueError("rates must lie in (0, 1)")
        if self.generations < 1 or self.sample_budget < 1:
            raise ValueError("generations and sample_budget must be positive")


def _tournament(rng, scores, k=3):
    best = rng.integers(len(scores))
    for _ in range(k - 1):
        challenger = rng.integers(len(scores))
        if scores[challenger] > scores[best]:
            best = challenger
    return best


def _run(initial, crossover, mutate, fitness_fn, cfg: GaConfig, rng):
    cache: dict = {}

    def score(ind):
        if ind not in cache:
            cache[ind] = fitness_fn(ind)
        return cache[ind]

    pop = initial
    history = []
    for _ in range(cfg.generations):
        scores = [score(ind) for ind in pop]
        order = np.argsort(scores)[::-1]
        history.append(scores[order[0]])
        elite = [pop[i] for i in order[: cfg.elite_count]]
        children = list(elite)
        while len(children) < cfg.population:
            p1 = pop[_tournament(rng, scores)]
            p2 = pop[_tournament(rng, scores)]
            child = crossover(p1, p2, rng) if rng.random() < cfg.crossover_rate else p1
            if rng.random() < cfg.mutation_rate:
                child = mutate(child, rng)
            children.append(child)
        pop = children
    scores = [score(ind) for ind in pop]
    best_i = int(np.argmax(scores))
    history.append(scores[best_i])
    # elitism + cached fitness make the running best exact
    best = pop[best_i]
    return best, history


# ---------------------------------------------------------------------------
# Permutations
# ---------------------------------------------------------------------------

def _ox_crossover(p1, p2, rng):
    # order crossover: keep a slice of p1, fill the rest in p2's order
    n = len(p1)
    a, b = sorted(rng.integers(0, n, size=2).tolist())
    b += 1
    kept = set(p1[a:b])
    filler = [g for g in p2 if g not in kept]
    child = filler[:a] + list(p1[a:b]) + filler[a:]
    return tuple(child)


def _swap_mutation(perm, rng):
    n = len(perm)
    i, j = rng.integers(0, n, size=2).tolist()
    lst = list(perm)
    lst[i], lst[j] = lst[j], lst[i]
    return tuple(lst)


def optimize_permutation(size: int, fitness_fn, cfg: GaConfig, rng=None):
    """Maximize fitness_fn over permutations of range(size).

    Returns (best permutation tuple, best-fitness history per generation).
    """
    if rng is None:
        rng = np.random.default_rng(cfg.seed)
    identity = tuple(range(size))
    initial = [identity] + [tuple(rng.permutation(size).tolist()) for _ in range(cfg.population - 1)]
    return _run(initial, _ox_crossover, _swap_mutation, fitness_fn, cfg, rng)


# ---------------------------------------------------------------------------
# k-of-n subsets
# ---------------------------------------------------------------------------

def _subset_crossover(p1, p2, rng):
    k = len(p1)
    union = sorted(set(p1) | set(p2))
    pick = rng.choice(len(union), size=k, replace=False)
    return tuple(sorted(union[i] for i in pick))


def _make_subset_mutation(n_items: int):
    def mutate(subset, rng):
        outside = sorted(set(range(n_items)) - set(subset))
        if not outside:
            return subset
        drop = rng.integers(len(subset))
        add = outside[rng.integers(len(outside))]
        lst = [g for i, g in enumerate(subset) if i != drop] + [add]
        return tuple(sorted(lst))

    return mutate


def optimize_subset(n_items: int, k_choose: int, fitness_fn, cfg: GaConfig, rng=None):
    """Maximize fitness_fn over size-k_choose subsets of range(n_items)."""
    if not (0 < k_choose < n_items):
        raise ValueError("k_choose must satisfy 0 < k < n_items")
    if rng is None:
        rng = np.random.default_rng(cfg.seed)
    initial = [
        tuple(sorted(rng.choice(n_items, size=k_choose, replace=False).tolist()))
        for _ in range(cfg.population)
    ]
    return _run(initial, _subset_crossover, _make_subset_mutation(n_items), fitness_fn, cfg, rng)
