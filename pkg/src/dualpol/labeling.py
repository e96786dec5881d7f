"""Symbol labelings over GF(2^n) and their optimization.

A labeling assigns each symbol a string of digits from GF(2^n); binary
labelings (n=1) are the usual bit maps.  Cartesian-product constellations
get the concatenated per-polarization Gray map.  For lattice constellations,
where no Gray map exists, a permutation-coded genetic search assigns the M
canonical labels (0..M-1 written base 2^n) to symbols so the labeling-induced
rate is maximized.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import ga as _ga
from .constellation import Constellation4D, neighbor_graph, rect_qam_grid
from .ga import GaConfig  # noqa: F401  (re-exported: GA-backed ops take this config)
from .infometrics import AwgnModel, PairBatch


@dataclass(frozen=True)
class Labeling:
    """Digit matrix of shape (M, digits_per_symbol) over GF(2^n), n in 1..6."""

    n: int
    digits: np.ndarray

    def __post_init__(self):
        if not (1 <= self.n <= 6):
            raise ValueError("field order exponent n must be in 1..6")
        d = np.asarray(self.digits, dtype=np.int64)
        d.setflags(write=False)
        object.__setattr__(self, "digits", d)
        if d.ndim != 2:
            raise ValueError("digits must be a (symbols, positions) matrix")
        if d.min() < 0 or d.max() >= 2 ** self.n:
            raise ValueError(f"digit values must lie in 0..{2 ** self.n - 1}")
        if len({tuple(row) for row in d.tolist()}) != d.shape[0]:
            raise ValueError("labeling must be injective")

    @property
    def digits_per_symbol(self) -> int:
        return self.digits.shape[1]

    @property
    def size(self) -> int:
        return self.digits.shape[0]

    def __eq__(self, other) -> bool:
        if not isinstance(other, Labeling):
            return NotImplemented
        return self.n == other.n and np.array_equal(self.digits, other.digits)


def canonical_digits(M: int, n: int) -> np.ndarray:
    """Labels 0..M-1 written base 2^n, most significant digit first."""
    npos = max(1, math.ceil(math.log2(M) / n))
    q = 2 ** n
    out = np.empty((M, npos), dtype=np.int64)
    for j in range(M):
        v = j
        for i in range(npos - 1, -1, -1):
            out[j, i] = v % q
            v //= q
    return out


def gray_product_labeling(c: Constellation4D) -> Labeling:
    """Binary labeling from per-polarization Gray maps, RH bits first."""
    if c.product_split is None:
        raise ValueError("constellation does not carry Cartesian product structure")
    k_rh, k_lh = c.product_split
    _, bits_rh = rect_qam_grid(k_rh)
    _, bits_lh = rect_qam_grid(k_lh)
    n_lh = 2 ** k_lh
    rows = []
    for i in range(c.size):
        rh_idx, lh_idx = divmod(i, n_lh)
        rows.append(np.concatenate([bits_rh[rh_idx], bits_lh[lh_idx]]))
    return Labeling(n=1, digits=np.array(rows, dtype=np.int64))


def quasi_gray_order(c: Constellation4D, labeling: Labeling) -> int:
    """Largest Hamming distance between labels of minimum-distance neighbors."""
    if labeling.n != 1:
        raise ValueError("quasi-Gray order is defined for binary labelings")
    if labeling.size != c.size:
        raise ValueError("labeling does not match constellation size")
    worst = 0
    for i, j in neighbor_graph(c):
        worst = max(worst, int(np.sum(labeling.digits[i] != labeling.digits[j])))
    return worst


def ga_optimize_labeling(c: Constellation4D, n: int, snr_points_db, cfg: GaConfig):
    """Genetic search for the labeling over GF(2^n) maximizing the mean PAIR.

    Fitness is the mean labeling-induced rate over snr_points_db, evaluated
    on one frozen set of noise draws per SNR point (common random numbers for
    every candidate and generation, which keeps the elitist best-fitness
    history exactly nondecreasing).  Returns (best labeling, history).
    """
    snr_points = [float(s) for s in snr_points_db]
    if not snr_points:
        raise ValueError("need at least one SNR point")
    M = c.size
    q = 2 ** n
    canon = canonical_digits(M, n)
    seeds = np.random.SeedSequence(cfg.seed).generate_state(len(snr_points))
    batches = [
        PairBatch(c, AwgnModel.from_snr_db(s), cfg.sample_budget, int(sd))
        for s, sd in zip(snr_points, seeds)
    ]

    def fitness(perm) -> float:
        digits = canon[np.fromiter(perm, dtype=np.int64)]
        return sum(b.pair_of(digits, q) for b in batches) / len(batches)

    best, history = _ga.optimize_permutation(M, fitness, cfg)
    labeling = Labeling(n=n, digits=canon[np.fromiter(best, dtype=np.int64)])
    return labeling, history


# ---------------------------------------------------------------------------
# CSV
# ---------------------------------------------------------------------------

def save_labeling(labeling: Labeling, path) -> None:
    with open(path, "w") as f:
        f.write(f"# n={labeling.n} digits={labeling.digits_per_symbol}\n")
        for i, row in enumerate(labeling.digits):
            f.write(",".join([str(i)] + [str(int(v)) for v in row]) + "\n")


def load_labeling(path) -> Labeling:
    with open(path) as f:
        lines = [ln.strip() for ln in f if ln.strip()]
    if not lines or not lines[0].startswith("#"):
        raise ValueError("missing '# n=... digits=...' header")
    fields = dict(tok.split("=", 1) for tok in lines[0][1:].split() if "=" in tok)
    try:
        n = int(fields["n"])
        npos = int(fields["digits"])
    except (KeyError, ValueError):
        raise ValueError("header must carry n=<int> digits=<int>") from None
    rows = {}
    for ln in lines[1:]:
        parts = ln.split(",")
        if len(parts) != npos + 1:
            raise ValueError(f"expected {npos + 1} fields per row, found {len(parts)}")
        rows[int(parts[0])] = [int(p) for p in parts[1:]]
    M = len(rows)
    if sorted(rows) != list(range(M)):
        raise ValueError("symbol indices must cover 0..M-1")
    digits = np.array([rows[i] for i in range(M)], dtype=np.int64)
    return Labeling(n=n, digits=digits)
