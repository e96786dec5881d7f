"""4D constellations for dual-polarized transmission.

A 4D symbol is a pair of complex amplitudes, one per circular polarization
(RH/LH).  Constellations are built either as Cartesian products of two 2D
grids (independent per-polarization QAM) or by cutting the D4 lattice with
a sphere around the origin (lattice amplitude modulation).  All generators
normalize the average 4D symbol energy to 2.0, i.e. unit average power per
polarization, which is the convention every SNR definition in this package
refers to.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import product
from typing import NamedTuple

import numpy as np

# Average 4D symbol energy after normalization (1.0 per polarization).
TARGET_ENERGY = 2.0


class Symbol4D(NamedTuple):
    rh: complex
    lh: complex


class LatticePoint(NamedTuple):
    coords: tuple


def _norm_sq(p: LatticePoint) -> int:
    return sum(c * c for c in p.coords)


@dataclass(frozen=True)
class Constellation4D:
    """Ordered set of M = 2^m four-dimensional symbols.

    points holds one row per symbol, columns (RH, LH) complex amplitudes.
    product_split is (bits_rh, bits_lh) when the constellation was built as
    a Cartesian product, None otherwise.  norm_scale is the factor the raw
    geometry was multiplied by during normalization (1.0 for imports that
    were already normalized).
    """

    points: np.ndarray
    m: int
    name: str
    energy_norm: float
    product_split: tuple | None = None
    norm_scale: float = 1.0

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=complex)
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)
        M = pts.shape[0]
        if pts.ndim != 2 or pts.shape[1] != 2:
            raise ValueError("points must have shape (M, 2)")
        if not (1 <= self.m <= 8) or M != 2 ** self.m:
            raise ValueError(f"M={M} is not 2^m for m in 1..8")
        if not np.all(np.isfinite(pts)):
            raise ValueError("non-finite symbol component")
        if len({(p[0], p[1]) for p in pts.tolist()}) != M:
            raise ValueError("duplicate symbols")

    @property
    def size(self) -> int:
        return self.points.shape[0]

    def symbols(self) -> list:
        return [Symbol4D(complex(p[0]), complex(p[1])) for p in self.points]

    def energies(self) -> np.ndarray:
        return np.abs(self.points[:, 0]) ** 2 + np.abs(self.points[:, 1]) ** 2

    def __eq__(self, other) -> bool:
        if not isinstance(other, Constellation4D):
            return NotImplemented
        return (
            self.m == other.m
            and self.name == other.name
            and self.product_split == other.product_split
            and np.array_equal(self.points, other.points)
        )


def project(sym: Symbol4D) -> tuple:
    """Split a 4D symbol into its two 2D polarization components."""
    return (sym.rh, sym.lh)


# ---------------------------------------------------------------------------
# Cartesian QAM products
# ---------------------------------------------------------------------------

def _gray(i: int) -> int:
    return i ^ (i >> 1)


def rect_qam_grid(bits: int):
    """2D rectangular QAM of 2^bits points with per-axis Gray labels.

    The grid is 2^ceil(bits/2) columns by 2^floor(bits/2) rows on the odd
    integers, so odd orders (8-QAM, 32-QAM) come out rectangular and keep a
    Gray labeling.  Returns (points, labels) with labels shaped (2^bits, bits),
    column-axis bits first.
    """
    if not (1 <= bits <= 6):
        raise ValueError(f"unsupported 2D order: {bits} bits")
    bc = (bits + 1) // 2
    br = bits // 2
    ncols, nrows = 2 ** bc, 2 ** br
    pts = np.empty(ncols * nrows, dtype=complex)
    labels = np.empty((ncols * nrows, bits), dtype=np.uint8)
    for col in range(ncols):
        gx = _gray(col)
        for row in range(nrows):
            i = col * nrows + row
            pts[i] = (2 * col - (ncols - 1)) + 1j * (2 * row - (nrows - 1))
            code = (gx << br) | _gray(row)
            for b in range(bits):
                labels[i, b] = (code >> (bits - 1 - b)) & 1
    return pts, labels


def gen_cartesian_qam(m_total: int) -> Constellation4D:
    """Cartesian product of two identical 2D QAM grids, normalized.

    m_total bits are split evenly over the polarizations; symbol order is
    row-major over the RH constituent, then the LH constituent.  Odd m_total
    has no even split and is rejected.
    """
    if m_total % 2 != 0:
        raise ValueError(f"unsupported order: m_total={m_total} must be even")
    if not (2 <= m_total <= 12):
        raise ValueError(f"m_total={m_total} outside supported range 2..12")
    k = m_total // 2
    pts2d, _ = rect_qam_grid(k)
    K = pts2d.size
    rh = np.repeat(pts2d, K)
    lh = np.tile(pts2d, K)
    pts = np.column_stack([rh, lh])
    scale = math.sqrt(TARGET_ENERGY / float(np.mean(np.abs(pts[:, 0]) ** 2 + np.abs(pts[:, 1]) ** 2)))
    pts = pts * scale
    side = K
    tag = "" if k % 2 == 0 else f"[rect{2 ** ((k + 1) // 2)}x{2 ** (k // 2)}]"
    return Constellation4D(
        points=pts,
        m=m_total,
        name=f"{side}x{side}-QAM{tag}",
        energy_norm=float(np.mean(np.abs(pts[:, 0]) ** 2 + np.abs(pts[:, 1]) ** 2)),
        product_split=(k, k),
        norm_scale=scale,
    )


# ---------------------------------------------------------------------------
# D4 lattice
# ---------------------------------------------------------------------------

_ENUMERATION_CAP = 1_000_000


def enumerate_d4_shells(max_points: int) -> list:
    """Points of the D4 lattice (even coordinate sum) closest to the origin.

    Returned sorted by squared norm, ties within a shell in lexicographic
    order.  The last shell is always included whole, so the result can be
    longer than max_points.
    """
    if max_points < 1:
        raise ValueError("max_points must be >= 1")
    if max_points > _ENUMERATION_CAP:
        raise ValueError(f"max_points={max_points} exceeds enumeration budget")
    rsq = 0
    while True:
        r = math.isqrt(rsq)
        pts = [
            p
            for p in product(range(-r, r + 1), repeat=4)
            if sum(p) % 2 == 0 and p[0] ** 2 + p[1] ** 2 + p[2] ** 2 + p[3] ** 2 <= rsq
        ]
        if len(pts) >= max_points:
            break
        rsq += 2  # norms in D4 are even
    pts.sort(key=lambda p: (p[0] ** 2 + p[1] ** 2 + p[2] ** 2 + p[3] ** 2, p))
    return [LatticePoint(coords=p) for p in pts]


def _split_boundary(points: list, M: int):
    """Partition a shell-sorted point list into (interior, boundary, needed)."""
    if len(points) < M:
        raise ValueError("not enough lattice points for requested size")
    norms = [_norm_sq(p) for p in points]
    boundary_norm = norms[M - 1]
    interior = [p for p, n in zip(points, norms) if n < boundary_norm]
    boundary = [p for p, n in zip(points, norms) if n == boundary_norm]
    return interior, boundary, M - len(interior)


def _lattice_to_4d(points: list) -> np.ndarray:
    arr = np.array([p.coords for p in points], dtype=float)
    return arr[:, 0] + 1j * arr[:, 1], arr[:, 2] + 1j * arr[:, 3]


def gen_lam(M: int, ga_cfg, snr_eval: float, seed: int) -> Constellation4D:
    """M-point lattice amplitude modulation from the lowest-energy D4 cut.

    When the spherical cut overshoots M, the boundary shell is only partially
    used and a genetic search picks the boundary subset with the highest
    mutual information at snr_eval (common random numbers across candidates).
    With no boundary freedom the selection is fully determined by the shell
    ordering.  Deterministic given (M, ga_cfg, seed).
    """
    from . import ga, infometrics

    m = int(math.log2(M))
    if 2 ** m != M:
        raise ValueError(f"M={M} is not a power of two")
    if M > _ENUMERATION_CAP:
        raise ValueError(f"M={M} exceeds lattice enumeration budget")
    lattice = enumerate_d4_shells(M)
    interior, boundary, needed = _split_boundary(lattice, M)

    if needed == 0:
        chosen = interior
    elif needed == len(boundary):
        chosen = interior + boundary
    else:
        ss = np.random.SeedSequence([seed, ga_cfg.seed])
        ss_draws, ss_ga = ss.spawn(2)
        rng = np.random.default_rng(ss_draws)
        sigma2 = 10.0 ** (-snr_eval / 10.0)
        n = ga_cfg.sample_budget
        tx_idx = rng.integers(0, M, size=n)
        noise = (rng.standard_normal((n, 2)) + 1j * rng.standard_normal((n, 2))) * math.sqrt(sigma2 / 2.0)

        base_rh, base_lh = _lattice_to_4d(interior)
        bnd_rh, bnd_lh = _lattice_to_4d(boundary)
        # all candidates share the same energy (whole shells + fixed-norm
        # boundary picks), so one normalization factor fits all of them
        total_e = float(np.sum(np.abs(base_rh) ** 2 + np.abs(base_lh) ** 2))
        total_e += needed * _norm_sq(boundary[0])
        scale = math.sqrt(TARGET_ENERGY * M / total_e)

        def fitness(subset):
            idx = np.fromiter(subset, dtype=int)
            rh = np.concatenate([base_rh, bnd_rh[idx]]) * scale
            lh = np.concatenate([base_lh, bnd_lh[idx]]) * scale
            pts = np.column_stack([rh, lh])
            return infometrics._air_given_draws(pts, sigma2, tx_idx, noise)

        best, _hist = ga.optimize_subset(len(boundary), needed, fitness, ga_cfg, np.random.default_rng(ss_ga))
        chosen = interior + [boundary[i] for i in sorted(best)]

    chosen = sorted(chosen, key=lambda p: (_norm_sq(p), p.coords))
    rh, lh = _lattice_to_4d(chosen)
    pts = np.column_stack([rh, lh])
    scale = math.sqrt(TARGET_ENERGY * M / float(np.sum(np.abs(pts[:, 0]) ** 2 + np.abs(pts[:, 1]) ** 2)))
    pts = pts * scale
    return Constellation4D(
        points=pts,
        m=m,
        name=f"{M}-LAM(D4)",
        energy_norm=float(np.mean(np.abs(pts[:, 0]) ** 2 + np.abs(pts[:, 1]) ** 2)),
        norm_scale=scale,
    )


# ---------------------------------------------------------------------------
# Geometry
# ---------------------------------------------------------------------------

def _as_real4(points: np.ndarray) -> np.ndarray:
    return np.column_stack([points[:, 0].real, points[:, 0].imag, points[:, 1].real, points[:, 1].imag])


def min_distance(c: Constellation4D) -> float:
    """Exact minimum 4D Euclidean distance over all symbol pairs."""
    if c.size < 2:
        raise ValueError("need at least 2 symbols")
    r = _as_real4(c.points)
    d2 = np.sum((r[:, None, :] - r[None, :, :]) ** 2, axis=2)
    iu = np.triu_indices(c.size, k=1)
    return float(np.sqrt(np.min(d2[iu])))


def neighbor_graph(c: Constellation4D) -> list:
    """Symbol index pairs (i < j) at the minimum distance, within 1e-9 relative."""
    r = _as_real4(c.points)
    d2 = np.sum((r[:, None, :] - r[None, :, :]) ** 2, axis=2)
    iu = np.triu_indices(c.size, k=1)
    dmin2 = np.min(d2[iu])
    limit = dmin2 * (1.0 + 1e-9) ** 2
    ii, jj = iu
    mask = d2[iu] <= limit
    return list(zip(ii[mask].tolist(), jj[mask].tolist()))


# ---------------------------------------------------------------------------
# CSV import/export
# ---------------------------------------------------------------------------

def export_constellation(c: Constellation4D, path) -> None:
    """Write the constellation CSV (17 significant digits per component)."""
    with open(path, "w") as f:
        header = f"# M={c.size} name={c.name}"
        if c.product_split is not None:
            header += f" product={c.product_split[0]},{c.product_split[1]}"
        f.write(header + "\n")
        for p in c.points:
            f.write(
                "%.17g,%.17g,%.17g,%.17g\n"
                % (p[0].real, p[0].imag, p[1].real, p[1].imag)
            )


def import_constellation(path) -> Constellation4D:
    """Read a constellation CSV, normalizing foreign files if necessary.

    Files exported by this package round-trip bit-exactly; files whose mean
    4D energy differs from 2.0 by more than 1e-9 are rescaled on import.
    """
    with open(path) as f:
        lines = [ln.strip() for ln in f if ln.strip()]
    if not lines or not lines[0].startswith("#"):
        raise ValueError("missing '# M=... name=...' header")
    header = lines[0][1:].strip()
    fields = dict(tok.split("=", 1) for tok in header.split() if "=" in tok)
    try:
        M = int(fields["M"])
    except (KeyError, ValueError):
        raise ValueError("header must carry M=<int>") from None
    name = fields.get("name", "imported")
    split = None
    if "product" in fields:
        a, b = fields["product"].split(",")
        split = (int(a), int(b))

    rows = lines[1:]
    if len(rows) != M:
        raise ValueError(f"expected {M} rows, found {len(rows)}")
    m = int(round(math.log2(M)))
    if 2 ** m != M:
        raise ValueError(f"M={M} is not a power of two")
    pts = np.empty((M, 2), dtype=complex)
    for i, row in enumerate(rows):
        parts = row.split(",")
        if len(parts) != 4:
            raise ValueError(f"row {i}: expected 4 fields, found {len(parts)}")
        try:
            vals = [float(p) for p in parts]
        except ValueError:
            raise ValueError(f"row {i}: non-numeric component") from None
        if not all(math.isfinite(v) for v in vals):
            raise ValueError(f"row {i}: non-finite component")
        pts[i, 0] = complex(vals[0], vals[1])
        pts[i, 1] = complex(vals[2], vals[3])

    mean_e = float(np.mean(np.abs(pts[:, 0]) ** 2 + np.abs(pts[:, 1]) ** 2))
    scale = 1.0
    if abs(mean_e - TARGET_ENERGY) > 1e-9:
        scale = math.sqrt(TARGET_ENERGY / mean_e)
        pts = pts * scale
        mean_e = float(np.mean(np.abs(pts[:, 0]) ** 2 + np.abs(pts[:, 1]) ** 2))
    return Constellation4D(
        points=pts, m=m, name=name, energy_norm=mean_e,
        product_split=split, norm_scale=scale,
    )
