"""Monte-Carlo mutual information estimators for the dual-polar AWGN channel.

Noise convention: each polarization sees circularly-symmetric complex
Gaussian noise of variance sigma2 (per complex component), and constellations
carry unit average power per polarization, so snr_db = -10*log10(sigma2).

Two estimators share one stream of common random numbers:

  air   -- symbol-wise mutual information with uniform inputs,
           log2(M) - E[log2 sum_x' exp(-(||y-x'||^2 - ||y-x||^2)/sigma2)]
  pair  -- labeling-induced rate, the sum over digit positions of the
           mutual information between one label digit and the channel output

With the same seed both draw identical (symbol, noise) samples, which makes
identities such as "single-digit PAIR equals AIR" hold to float precision.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

_LN2 = math.log(2.0)
_BATCH = 16_384


@dataclass(frozen=True)
class AwgnModel:
    """Noise variance per complex polarization component."""

    sigma2: float

    def __post_init__(self):
        if not (self.sigma2 > 0.0 and math.isfinite(self.sigma2)):
            raise ValueError("sigma2 must be positive and finite")

    @property
    def snr_db(self) -> float:
        return -10.0 * math.log10(self.sigma2)

    @classmethod
    def from_snr_db(cls, snr_db: float) -> "AwgnModel":
        return cls(sigma2=10.0 ** (-snr_db / 10.0))


@dataclass(frozen=True)
class McEstimate:
    value: float
    std_error: float
    samples: int
    seed: int

    def __post_init__(self):
        if self.std_error < 0.0 or self.samples < 1:
            raise ValueError("invalid Monte-Carlo estimate")


def posterior(c, y, model: AwgnModel) -> np.ndarray:
    """A-posteriori symbol probabilities for one received 4D point.

    Uniform prior; probabilities proportional to exp(-||y - x||^2 / sigma2),
    computed with max subtraction and normalized to sum 1.
    """
    yv = np.asarray(y, dtype=complex).reshape(2)
    d2 = np.abs(yv[0] - c.points[:, 0]) ** 2 + np.abs(yv[1] - c.points[:, 1]) ** 2
    logl = -d2 / model.sigma2
    logl -= logl.max()
    p = np.exp(logl)
    return p / p.sum()


# ---------------------------------------------------------------------------
# Shared sampling core
# ---------------------------------------------------------------------------

def _draw(M: int, ndim: int, sigma2: float, samples: int, seed) -> tuple:
    """Common random numbers: transmitted indices plus complex noise."""
    rng = np.random.default_rng(seed)
    tx_idx = rng.integers(0, M, size=samples)
    noise = (
        rng.standard_normal((samples, ndim)) + 1j * rng.standard_normal((samples, ndim))
    ) * math.sqrt(sigma2 / 2.0)
    return tx_idx, noise


def _loglik(points: np.ndarray, y: np.ndarray, sigma2: float) -> np.ndarray:
    """Unnormalized log-likelihood of each constellation point, per sample."""
    d2 = np.sum(np.abs(y[:, None, :] - points[None, :, :]) ** 2, axis=2)
    return -d2 / sigma2


def _air_samples(points, sigma2, tx_idx, noise):
    """Per-sample information values of the symbol-wise estimator."""
    M = points.shape[0]
    log2M = math.log2(M)
    out = np.empty(tx_idx.shape[0])
    for lo in range(0, tx_idx.shape[0], _BATCH):
        hi = min(lo + _BATCH, tx_idx.shape[0])
        tx = tx_idx[lo:hi]
        y = points[tx] + noise[lo:hi]
        L = _loglik(points, y, sigma2)
        lse = logsumexp(L, axis=1)
        ltx = L[np.arange(hi - lo), tx]
        out[lo:hi] = log2M - (lse - ltx) / _LN2
    return out


def _air_given_draws(points, sigma2, tx_idx, noise) -> float:
    return float(np.mean(_air_samples(points, sigma2, tx_idx, noise)))


def air(c, model: AwgnModel, samples: int = 100_000, seed: int = 0) -> McEstimate:
    """Symbol-wise mutual information of the constellation, bits per 4D use."""
    if samples < 1000:
        raise ValueError("samples must be >= 1000")
    tx_idx, noise = _draw(c.size, 2, model.sigma2, samples, seed)
    vals = _air_samples(c.points, model.sigma2, tx_idx, noise)
    return McEstimate(
        value=float(vals.mean()),
        std_error=float(vals.std(ddof=1) / math.sqrt(samples)),
        samples=samples,
        seed=seed,
    )


# ---------------------------------------------------------------------------
# Labeling-induced rate
# ---------------------------------------------------------------------------

def _digit_classes(digits: np.ndarray, q: int):
    """Per position: column indices per digit value and class sizes."""
    positions = []
    for i in range(digits.shape[1]):
        cols = [np.where(digits[:, i] == v)[0] for v in range(q)]
        counts = np.array([c.size for c in cols])
        positions.append((cols, counts))
    return positions


def _pair_samples(points, digits, q, sigma2, tx_idx, noise):
    """Per-sample sums over digit positions of the per-digit information."""
    M = points.shape[0]
    lnM = math.log(M)
    classes = _digit_classes(digits, q)
    out = np.zeros(tx_idx.shape[0])
    for lo in range(0, tx_idx.shape[0], _BATCH):
        hi = min(lo + _BATCH, tx_idx.shape[0])
        tx = tx_idx[lo:hi]
        y = points[tx] + noise[lo:hi]
        L = _loglik(points, y, sigma2)
        lse = logsumexp(L, axis=1)
        total = np.zeros(hi - lo)
        for i, (cols, counts) in enumerate(classes):
            class_lse = np.full((hi - lo, q), -np.inf)
            for v in range(q):
                if counts[v]:
                    class_lse[:, v] = logsumexp(L[:, cols[v]], axis=1)
            vtx = digits[tx, i]
            total += (
                class_lse[np.arange(hi - lo), vtx]
                - np.log(counts[vtx])
                - lse
                + lnM
            ) / _LN2
        out[lo:hi] = total
    return out


def pair(c, labeling, model: AwgnModel, samples: int = 100_000, seed: int = 0) -> McEstimate:
    """Pragmatic rate of (constellation, labeling): sum of per-digit MIs."""
    if samples < 1000:
        raise ValueError("samples must be >= 1000")
    digits = labeling.digits
    if digits.shape[0] != c.size:
        raise ValueError("labeling does not match constellation size")
    tx_idx, noise = _draw(c.size, 2, model.sigma2, samples, seed)
    vals = _pair_samples(c.points, digits, 2 ** labeling.n, model.sigma2, tx_idx, noise)
    return McEstimate(
        value=float(vals.mean()),
        std_error=float(vals.std(ddof=1) / math.sqrt(samples)),
        samples=samples,
        seed=seed,
    )


class PairBatch:
    """Frozen-draw PAIR evaluator for scoring many labelings.

    Posterior-style weights are precomputed once per noise realization, so a
    candidate labeling costs one small matrix product.  Built for genetic
    label search: all candidates see identical randomness.
    """

    def __init__(self, c, model: AwgnModel, samples: int, seed):
        tx_idx, noise = _draw(c.size, 2, model.sigma2, samples, seed)
        y = c.points[tx_idx] + noise
        L = _loglik(c.points, y, model.sigma2)
        lse = logsumexp(L, axis=1)
        self.post = np.exp(L - lse[:, None])
        self.tx_idx = tx_idx
        self.M = c.size

    def pair_of(self, digits: np.ndarray, q: int) -> float:
        """Mean PAIR of a labeling given as an (M, positions) digit matrix."""
        total = 0.0
        lnM = math.log(self.M)
        for i in range(digits.shape[1]):
            onehot = np.zeros((self.M, q))
            onehot[np.arange(self.M), digits[:, i]] = 1.0
            counts = onehot.sum(axis=0)
            class_sum = self.post @ onehot
            vtx = digits[self.tx_idx, i]
            rows = np.arange(self.tx_idx.shape[0])
            total += float(
                np.mean(np.log(class_sum[rows, vtx]) - np.log(counts[vtx]) + lnM)
            ) / _LN2
        return total


# ---------------------------------------------------------------------------
# Grids and 2D helpers
# ---------------------------------------------------------------------------

def sweep(metric: str, snr_grid_db, c, labeling=None, samples: int = 100_000, seed: int = 0):
    """Run one estimator across an SNR grid with per-point substreams.

    Returns a list of (snr_db, McEstimate) tuples.
    """
    if metric not in ("air", "pair"):
        raise ValueError(f"unknown metric {metric!r}")
    if metric == "pair" and labeling is None:
        raise ValueError("pair sweep needs a labeling")
    grid = [float(s) for s in snr_grid_db]
    point_seeds = np.random.SeedSequence(seed).generate_state(max(len(grid), 1))
    rows = []
    for snr_db, s in zip(grid, point_seeds):
        model = AwgnModel.from_snr_db(snr_db)
        if metric == "air":
            est = air(c, model, samples=samples, seed=int(s))
        else:
            est = pair(c, labeling, model, samples=samples, seed=int(s))
        rows.append((snr_db, est))
    return rows


def mi_awgn_2d(points, sigma2: float, samples: int = 100_000, seed: int = 0) -> McEstimate:
    """Mutual information of a 2D (single complex) constellation, MC estimate."""
    pts = np.asarray(points, dtype=complex).reshape(-1, 1)
    tx_idx, noise = _draw(pts.shape[0], 1, sigma2, samples, seed)
    vals = _air_samples(pts, sigma2, tx_idx, noise)
    return McEstimate(
        value=float(vals.mean()),
        std_error=float(vals.std(ddof=1) / math.sqrt(samples)),
        samples=samples,
        seed=seed,
    )


def save_sweep(rows, path) -> None:
    """Write sweep output as `snr_db,value,std_error,samples` CSV."""
    with open(path, "w") as f:
        f.write("snr_db,value,std_error,samples\n")
        for snr_db, est in rows:
            f.write(f"{snr_db:.6g},{est.value:.10g},{est.std_error:.6g},{est.samples}\n")
