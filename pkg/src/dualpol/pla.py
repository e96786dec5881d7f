"""Physical layer abstraction: MIESM lookup tables, effective SINR, MIMO
post-detection SINR and block error prediction.

The abstraction compresses the per-symbol SINR vector of a block into one
effective SINR through the modulation's mutual-information curve phi:

    gamma_eff = beta1 * phi_inv( mean_n phi(gamma_n / beta2) )

phi is tabulated per modulation order on a fixed -20:0.5:27 dB grid and
queried by monotone piecewise-linear interpolation.  Error rates come from
per-bearer reference curves (Gaussian-shaped in dB); the shipped values are
provisional placeholders, see data/bearers.csv.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.special import erfc

from .constellation import rect_qam_grid
from .infometrics import mi_awgn_2d

LUT_GRID_DB = np.linspace(-20.0, 27.0, 95)
SUPPORTED_BITS = (1, 2, 4, 5, 6)


def modulation_points(d: int) -> np.ndarray:
    """Unit-power 2D constellation used for modulation order d bits/symbol."""
    if d not in SUPPORTED_BITS:
        raise ValueError(f"unsupported modulation order: {d} bits")
    if d == 5:
        # cross 32-QAM: 6x6 grid minus the four corners
        pts = [
            complex(x, y)
            for x in (-5, -3, -1, 1, 3, 5)
            for y in (-5, -3, -1, 1, 3, 5)
            if not (abs(x) == 5 and abs(y) == 5)
        ]
        pts = np.array(pts)
    else:
        pts, _ = rect_qam_grid(d)
    return pts / math.sqrt(float(np.mean(np.abs(pts) ** 2)))


@dataclass(frozen=True)
class MiesmLut:
    """Sampled mutual-information curve phi(gamma) for one modulation order."""

    d: int
    snr_db: np.ndarray
    phi_bits: np.ndarray

    def __post_init__(self):
        snr = np.asarray(self.snr_db, dtype=float)
        phi_v = np.asarray(self.phi_bits, dtype=float)
        snr.setflags(write=False)
        phi_v.setflags(write=False)
        object.__setattr__(self, "snr_db", snr)
        object.__setattr__(self, "phi_bits", phi_v)
        if snr.shape != phi_v.shape or snr.ndim != 1:
            raise ValueError("snr_db and phi_bits must be matching 1D arrays")
        if np.any(np.diff(snr) <= 0) or np.any(np.diff(phi_v) <= 0):
            raise ValueError("LUT must be strictly increasing in both columns")
        if phi_v[0] < 0 or phi_v[-1] > self.d + 1e-6:
            raise ValueError("phi values must stay within [0, d]")


def _pava_nondecreasing(y: np.ndarray) -> np.ndarray:
    # pool-adjacent-violators, unweighted
    vals: list = []
    wts: list = []
    for v in y:
        vals.append(float(v))
        wts.append(1)
        while len(vals) > 1 and vals[-2] > vals[-1]:
            w = wts[-1] + wts[-2]
            vals[-2] = (vals[-1] * wts[-1] + vals[-2] * wts[-2]) / w
            wts[-2] = w
            vals.pop()
            wts.pop()
    out = np.empty(len(y))
    i = 0
    for v, w in zip(vals, wts):
        out[i : i + w] = v
        i += w
    return out


def build_miesm_lut(d: int, samples: int = 50_000, seed: int = 0) -> MiesmLut:
    """Monte-Carlo phi curve on the -20:0.5:27 dB grid, made monotone.

    Raw per-point estimates are isotonically corrected (their deviations from
    monotonicity are Monte-Carlo noise) and nudged strictly increasing so the
    curve stays invertible.
    """
    pts = modulation_points(d)
    point_seeds = np.random.SeedSequence(seed).generate_state(LUT_GRID_DB.size)
    raw = np.empty(LUT_GRID_DB.size)
    for i, snr_db in enumerate(LUT_GRID_DB):
        sigma2 = 10.0 ** (-snr_db / 10.0)
        raw[i] = mi_awgn_2d(pts, sigma2, samples=samples, seed=int(point_seeds[i])).value
    phi_v = _pava_nondecreasing(np.clip(raw, 0.0, float(d)))
    for i in range(1, phi_v.size):
        if phi_v[i] <= phi_v[i - 1]:
            phi_v[i] = phi_v[i - 1] + 1e-12
    if phi_v[0] <= 0.0:
        phi_v[0] = 1e-15
        for i in range(1, phi_v.size):
            phi_v[i] = max(phi_v[i], phi_v[i - 1] + 1e-12)
    return MiesmLut(d=d, snr_db=LUT_GRID_DB.copy(), phi_bits=phi_v)


def phi(lut: MiesmLut, gamma):
    """Bits carried at linear SINR gamma; out-of-grid values clamp to the ends."""
    g = np.asarray(gamma, dtype=float)
    if np.any(g <= 0):
        raise ValueError("SINR must be positive")
    gdb = np.clip(10.0 * np.log10(g), lut.snr_db[0], lut.snr_db[-1])
    out = np.interp(gdb, lut.snr_db, lut.phi_bits)
    return float(out) if np.isscalar(gamma) else out


def phi_inv(lut: MiesmLut, info_bits: float) -> float:
    """Linear SINR at which the modulation carries info_bits.

    info_bits outside (0, d) is a range error; values beyond the tabulated
    curve clamp to the grid ends with a warning.
    """
    if not (0.0 < info_bits < lut.d):
        raise ValueError(f"info_bits must lie in (0, {lut.d})")
    if info_bits <= lut.phi_bits[0]:
        warnings.warn("phi_inv clamped at the low end of the LUT grid", stacklevel=2)
        return 10.0 ** (lut.snr_db[0] / 10.0)
    if info_bits >= lut.phi_bits[-1]:
        warnings.warn("phi_inv clamped at the high end of the LUT grid", stacklevel=2)
        return 10.0 ** (lut.snr_db[-1] / 10.0)
    gdb = float(np.interp(info_bits, lut.phi_bits, lut.snr_db))
    return 10.0 ** (gdb / 10.0)


@dataclass(frozen=True)
class EsmParams:
    beta1: float = 1.0
    beta2: float = 1.0

    def __post_init__(self):
        if self.beta1 <= 0 or self.beta2 <= 0:
            raise ValueError("beta parameters must be positive")


def effective_sinr(gammas, lut: MiesmLut, params: EsmParams = EsmParams()) -> float:
    """Compress a vector of per-symbol linear SINRs into one effective SINR."""
    g = np.asarray(gammas, dtype=float).ravel()
    if g.size == 0:
        raise ValueError("empty SINR vector")
    if np.any(g <= 0):
        raise ValueError("SINR values must be positive")
    mean_phi = float(np.mean(phi(lut, g / params.beta2)))
    mean_phi = min(max(mean_phi, float(lut.phi_bits[0])), float(lut.phi_bits[-1]))
    return params.beta1 * phi_inv(lut, mean_phi)


# ---------------------------------------------------------------------------
# MIMO post-detection SINR
# ---------------------------------------------------------------------------

PM_RECEIVERS = ("paper-zf", "true-zf", "mmse")


def _scheme_name(scheme) -> str:
    return str(getattr(scheme, "value", scheme)).lower()


def mimo_post_sinr(scheme, H, sigma2_w: float, pm_receiver: str = "mmse",
                   pmod_active: int = 0) -> np.ndarray:
    """Post-detection SINR per stream for one 2x2 dual-polar channel.

    siso   -> |h11|^2 / sigma2, one stream
    optbc  -> ||H||_F^2 / sigma2, one stream (full channel diversity)
    pm     -> two streams; receiver one of 'paper-zf' (matched-filter column
              norm), 'true-zf' (interference nulling, zero SINR when the
              columns are colinear) or 'mmse'
    pmod   -> SISO-like on the active polarization column
    """
    if sigma2_w <= 0:
        raise ValueError("noise variance must be positive")
    Hm = np.asarray(H, dtype=complex).reshape(2, 2)
    name = _scheme_name(scheme)
    if name == "siso":
        return np.array([abs(Hm[0, 0]) ** 2 / sigma2_w])
    if name == "optbc":
        return np.array([float(np.sum(np.abs(Hm) ** 2)) / sigma2_w])
    if name == "pmod":
        col = Hm[:, pmod_active]
        return np.array([float(np.sum(np.abs(col) ** 2)) / sigma2_w])
    if name != "pm":
        raise ValueError(f"unknown MIMO scheme {scheme!r}")

    if pm_receiver not in PM_RECEIVERS:
        raise ValueError(f"unknown PM receiver {pm_receiver!r}")
    g11 = float(np.sum(np.abs(Hm[:, 0]) ** 2))
    g22 = float(np.sum(np.abs(Hm[:, 1]) ** 2))
    g12 = complex(np.vdot(Hm[:, 0], Hm[:, 1]))
    if pm_receiver == "paper-zf":
        return np.array([g11, g22]) / sigma2_w
    if pm_receiver == "true-zf":
        # 1/([(H^H H)^{-1}]_mm sigma2) == squared norm of the column component
        # orthogonal to the other column, over sigma2; colinear columns mean
        # unbounded noise enhancement, reported as zero SINR
        cross = abs(g12) ** 2
        det = g11 * g22 - cross
        if det <= 1e-12 * max(g11 * g22, cross, 1e-300):
            warnings.warn("singular channel under true ZF: zero SINR stream",
                          stacklevel=2)
        s1 = g11 - (cross / g22 if g22 > 0 else 0.0)
        s2 = g22 - (cross / g11 if g11 > 0 else 0.0)
        return np.maximum(np.array([s1, s2]), 0.0) / sigma2_w
    # mmse: per-stream 1/[(I + G/sigma2)^{-1}]_mm - 1
    a11 = 1.0 + g11 / sigma2_w
    a22 = 1.0 + g22 / sigma2_w
    det = a11 * a22 - abs(g12 / sigma2_w) ** 2
    return np.maximum(np.array([det / a22 - 1.0, det / a11 - 1.0]), 0.0)


# ---------------------------------------------------------------------------
# Error-rate prediction
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PerCurve:
    """Gaussian-shaped (in dB) block error curve: PER(gamma50_db) = 0.5."""

    bearer_id: str
    gamma50_db: float
    slope_db: float

    def __post_init__(self):
        if self.slope_db <= 0:
            raise ValueError("slope must be positive")


def per_predict(curve: PerCurve, gamma_eff) -> float:
    """Block error probability at effective linear SINR gamma_eff."""
    g = np.asarray(gamma_eff, dtype=float)
    gdb = 10.0 * np.log10(np.maximum(g, 1e-300))
    out = 0.5 * erfc((gdb - curve.gamma50_db) / (math.sqrt(2.0) * curve.slope_db))
    return float(out) if np.isscalar(gamma_eff) else out


# ---------------------------------------------------------------------------
# LUT files
# ---------------------------------------------------------------------------

def save_lut(lut: MiesmLut, path) -> None:
    with open(path, "w") as f:
        f.write(f"# d={lut.d}\n")
        f.write("snr_db,phi\n")
        for s, p in zip(lut.snr_db, lut.phi_bits):
            f.write(f"{s:.6g},{p:.12g}\n")


def load_lut(path) -> MiesmLut:
    with open(path) as f:
        lines = [ln.strip() for ln in f if ln.strip()]
    if not lines or not lines[0].startswith("#"):
        raise ValueError("missing '# d=<bits>' header")
    fields = dict(tok.split("=", 1) for tok in lines[0][1:].split() if "=" in tok)
    try:
        d = int(fields["d"])
    except (KeyError, ValueError):
        raise ValueError("header must carry d=<bits>") from None
    rows = [ln for ln in lines[1:] if not ln.startswith("snr_db")]
    snr = np.array([float(r.split(",")[0]) for r in rows])
    phi_v = np.array([float(r.split(",")[1]) for r in rows])
    return MiesmLut(d=d, snr_db=snr, phi_bits=phi_v)
