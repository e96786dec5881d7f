"""Block-level dual-polarized mobile satellite channel series.

Statistical model (maritime preset)
-----------------------------------
One 2x2 channel matrix per block.  Co-polar entries follow a Loo-style
composite: a log-normal line-of-sight amplitude (one shadowing process,
AR(1)-correlated along the trip, shared by both polarizations) plus Rayleigh
diffuse scatter.  The two co-polar diffuse components are correlated by rho;
cross-polar entries are pure diffuse with power one XPD below the co-polar
mean.  Entries are scaled so E|h11|^2 equals the configured mean power
(default 1), which is the normalization the link budget in snr_per_block
assumes.

The terminal starts at beam center and moves outward at constant speed; the
beam gain follows a parabolic-in-dB rolloff, 0 dB at center down to
-edge_rolloff_db at the beam edge.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.signal import lfilter

_LN10_OVER_20 = math.log(10.0) / 20.0


@dataclass(frozen=True)
class ScenarioParams:
    """System simulation constants (L-band mobile downlink defaults)."""

    carrier_hz: float = 1.59e9
    beam_diameter_km: float = 300.0
    noise_dbw_hz: float = -204.0
    bandwidth_hz: float = 32e3
    tx_power_dbw: float = 4.0
    block_symbols: int = 640
    block_period_s: float = 0.020
    speed_kmh: float = 50.0
    gt_db_k: float = -13.5
    feedback_delay_s: float = 0.5
    center_snr_db: float = 9.0

    def __post_init__(self):
        for name in ("carrier_hz", "beam_diameter_km", "bandwidth_hz",
                     "block_period_s", "speed_kmh"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.block_symbols < 1 or self.feedback_delay_s < 0:
            raise ValueError("invalid block or delay configuration")


@dataclass(frozen=True)
class LmsModelParams:
    """Maritime land-mobile-satellite preset; all values are documented
    defaults, not measured data."""

    los_mean_db: float = 0.0
    los_std_db: float = 1.0
    multipath_db: float = -12.0
    xpd_db: float = 15.0
    rho: float = 0.3
    corr_distance_m: float = 30.0
    edge_rolloff_db: float = 4.0
    mean_power: float = 1.0

    def __post_init__(self):
        if not (0.0 <= self.rho < 1.0):
            raise ValueError("rho must lie in [0, 1)")
        if self.corr_distance_m <= 0 or self.mean_power <= 0:
            raise ValueError("corr_distance_m and mean_power must be positive")

    def los_power(self) -> float:
        """E[A^2] of the log-normal LOS amplitude (raw, before scaling)."""
        c = 2.0 * _LN10_OVER_20
        return 10.0 ** (self.los_mean_db / 10.0) * math.exp((c * self.los_std_db) ** 2 / 2.0)

    def mean_copolar_power(self) -> float:
        return self.mean_power

    def mean_frobenius_half(self) -> float:
        """Analytic E[||H||_F^2 / 2]."""
        xpd_lin = 10.0 ** (self.xpd_db / 10.0)
        return self.mean_power * (1.0 + 1.0 / xpd_lin)


@dataclass(frozen=True)
class ChannelSeries:
    block_period_s: float
    t: np.ndarray
    H: np.ndarray
    largescale_db: np.ndarray
    profile: str = "maritime"
    speed_kmh: float = 50.0
    seed: int = 0

    def __post_init__(self):
        t = np.asarray(self.t, dtype=float)
        H = np.asarray(self.H, dtype=complex)
        ls = np.asarray(self.largescale_db, dtype=float)
        for a in (t, H, ls):
            a.setflags(write=False)
        object.__setattr__(self, "t", t)
        object.__setattr__(self, "H", H)
        object.__setattr__(self, "largescale_db", ls)
        if H.ndim != 3 or H.shape[1:] != (2, 2) or t.shape[0] != H.shape[0]:
            raise ValueError("H must have shape (blocks, 2, 2) matching t")
        if ls.shape[0] != t.shape[0]:
            raise ValueError("largescale_db must match block count")
        if t.size > 1:
            dt = np.diff(t)
            if np.any(dt <= 0) or np.any(np.abs(dt - dt[0]) > 1e-9):
                raise ValueError("timestamps must be uniform and increasing")
        if not np.all(np.isfinite(H)):
            raise ValueError("non-finite channel entry")

    @property
    def n_blocks(self) -> int:
        return self.t.shape[0]


def _ar1(e: np.ndarray, corr: float, x0: float) -> np.ndarray:
    """Stationary unit-variance AR(1) driven by unit normals e, seeded at x0."""
    if corr <= 0.0:
        return e
    s = math.sqrt(1.0 - corr * corr)
    return lfilter([s], [1.0, -corr], e, zi=np.array([corr * x0]))[0]


def gen_maritime_series(p: ScenarioParams, model: LmsModelParams, seed: int = 0,
                        trip_km: float | None = None) -> ChannelSeries:
    """Center-to-edge trip as a block-fading 2x2 channel time series."""
    if trip_km is None:
        trip_km = p.beam_diameter_km / 2.0
    if trip_km <= 0:
        raise ValueError("trip length must be positive")
    duration_s = trip_km / p.speed_kmh * 3600.0
    n = int(round(duration_s / p.block_period_s))
    if n < 1:
        raise ValueError("trip shorter than one block")
    rng = np.random.default_rng(seed)
    t = np.arange(n) * p.block_period_s

    # shadowing: one AR(1) process in dB shared by both co-polar entries
    step_m = p.speed_kmh / 3.6 * p.block_period_s
    corr = math.exp(-step_m / model.corr_distance_m)
    g_db = model.los_mean_db + model.los_std_db * _ar1(
        rng.standard_normal(n), corr, rng.standard_normal()
    )
    a_los = 10.0 ** (g_db / 20.0)

    mp_lin = 10.0 ** (model.multipath_db / 10.0)
    xpd_lin = 10.0 ** (model.xpd_db / 10.0)

    def cn(power, size):
        return (rng.standard_normal(size) + 1j * rng.standard_normal(size)) * math.sqrt(power / 2.0)

    phase1 = np.exp(2j * np.pi * rng.random(n))
    phase2 = np.exp(2j * np.pi * rng.random(n))
    u1 = cn(mp_lin, n)
    u2 = cn(mp_lin, n)
    z11 = u1
    z22 = model.rho * u1 + math.sqrt(1.0 - model.rho ** 2) * u2

    raw_copolar = model.los_power() + mp_lin
    scale = math.sqrt(model.mean_power / raw_copolar)

    H = np.empty((n, 2, 2), dtype=complex)
    H[:, 0, 0] = (a_los * phase1 + z11) * scale
    H[:, 1, 1] = (a_los * phase2 + z22) * scale
    cross_power = model.mean_power / xpd_lin
    H[:, 0, 1] = cn(cross_power, n) if cross_power > 0 else 0.0
    H[:, 1, 0] = cn(cross_power, n) if cross_power > 0 else 0.0

    r_km = np.minimum(p.speed_kmh * t / 3600.0, trip_km)
    edge_km = p.beam_diameter_km / 2.0
    largescale_db = -model.edge_rolloff_db * (r_km / edge_km) ** 2

    return ChannelSeries(
        block_period_s=p.block_period_s, t=t, H=H, largescale_db=largescale_db,
        profile="maritime", speed_kmh=p.speed_kmh, seed=seed,
    )


def calibration_offset_db(p: ScenarioParams) -> float:
    """Offset folding path constants so beam center hits the operating point."""
    raw = (
        p.tx_power_dbw
        + p.gt_db_k
        - (p.noise_dbw_hz + 10.0 * math.log10(p.bandwidth_hz))
    )
    return p.center_snr_db - raw


def snr_per_block(series: ChannelSeries, p: ScenarioParams) -> np.ndarray:
    """Per-block pre-detection linear SNR (sigma_w^2 = 1/SNR, unit-power H)."""
    if series.n_blocks == 0:
        raise ValueError("empty series")
    snr_db = (
        p.tx_power_dbw
        + series.largescale_db
        + p.gt_db_k
        - (p.noise_dbw_hz + 10.0 * math.log10(p.bandwidth_hz))
        + calibration_offset_db(p)
    )
    return 10.0 ** (snr_db / 10.0)


# ---------------------------------------------------------------------------
# CSV
# ---------------------------------------------------------------------------

_COLUMNS = "t_s,re_h11,im_h11,re_h12,im_h12,re_h21,im_h21,re_h22,im_h22,largescale_db"


def save_series(series: ChannelSeries, path) -> None:
    with open(path, "w") as f:
        f.write(
            f"# profile={series.profile} speed_kmh={series.speed_kmh:g} "
            f"seed={series.seed} block_period_s={series.block_period_s:g}\n"
        )
        f.write(_COLUMNS + "\n")
        for i in range(series.n_blocks):
            h = series.H[i]
            f.write(
                "%.9g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n"
                % (
                    series.t[i],
                    h[0, 0].real, h[0, 0].imag, h[0, 1].real, h[0, 1].imag,
                    h[1, 0].real, h[1, 0].imag, h[1, 1].real, h[1, 1].imag,
                    series.largescale_db[i],
                )
            )


def load_series(path) -> ChannelSeries:
    with open(path) as f:
        lines = [ln.strip() for ln in f if ln.strip()]
    if not lines or not lines[0].startswith("#"):
        raise ValueError("missing series metadata header")
    fields = dict(tok.split("=", 1) for tok in lines[0][1:].split() if "=" in tok)
    rows = [ln for ln in lines[1:] if not ln.startswith("t_s")]
    if not rows:
        raise ValueError("empty series file")
    data = []
    for i, ln in enumerate(rows):
        parts = ln.split(",")
        if len(parts) != 10:
            raise ValueError(f"row {i}: expected 10 columns, found {len(parts)}")
        data.append([float(x) for x in parts])
    arr = np.array(data)
    H = np.empty((arr.shape[0], 2, 2), dtype=complex)
    H[:, 0, 0] = arr[:, 1] + 1j * arr[:, 2]
    H[:, 0, 1] = arr[:, 3] + 1j * arr[:, 4]
    H[:, 1, 0] = arr[:, 5] + 1j * arr[:, 6]
    H[:, 1, 1] = arr[:, 7] + 1j * arr[:, 8]
    return ChannelSeries(
        block_period_s=float(fields.get("block_period_s", 0.020)),
        t=arr[:, 0],
        H=H,
        largescale_db=arr[:, 9],
        profile=fields.get("profile", "imported"),
        speed_kmh=float(fields.get("speed_kmh", 0.0) or 0.0),
        seed=int(fields.get("seed", 0)),
    )
