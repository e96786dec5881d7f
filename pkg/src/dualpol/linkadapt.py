"""Adaptive selection of (MIMO mode, modulation, code rate) over a trip.

Every block, each candidate tuple is scored through the physical layer
abstraction: per-stream post-detection SINRs, MIESM compression to one
effective SINR, then the bearer's reference error curve.  Among tuples
meeting the error-rate target the highest-rate one wins (ties: lower PER,
then simpler MIMO mode, then lower modulation order); when nothing is
feasible the minimum-PER tuple is chosen and flagged.

The trip simulator applies the decision taken on the channel state
feedback_delay_s earlier, draws block success from the error probability of
the true (undelayed) channel, and logs one decision per block.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass
from enum import Enum
from importlib import resources

import numpy as np
from scipy.special import erfc

from . import pla
from .channel import ChannelSeries, ScenarioParams, snr_per_block
from .pla import EsmParams, MiesmLut, PerCurve

PER_TARGET_DEFAULT = 1e-3
_SINR_FLOOR = 1e-12


class MimoMode(Enum):
    SISO = "siso"
    OPTBC = "optbc"
    PM = "pm"
    PMOD = "pmod"

    @property
    def streams(self) -> int:
        return 2 if self is MimoMode.PM else 1

    @property
    def complexity_rank(self) -> int:
        # tie-break order: simpler scheme preferred
        return {"siso": 0, "optbc": 1, "pmod": 2, "pm": 3}[self.value]

    def bits_per_use(self, d: int, code_rate: float) -> float:
        if self is MimoMode.PM:
            return 2.0 * d * code_rate
        if self is MimoMode.PMOD:
            return (d + 1.0) * code_rate
        return float(d) * code_rate


ALL_MODES = (MimoMode.SISO, MimoMode.OPTBC, MimoMode.PM, MimoMode.PMOD)

_BLOCK_N_ALLOWED = (640, 1098, 941)


@dataclass(frozen=True)
class Bearer:
    bearer_id: str
    d: int
    code_rate: float
    block_n: int
    info_bits: int
    per_curve: PerCurve

    def __post_init__(self):
        if self.d not in pla.SUPPORTED_BITS:
            raise ValueError(f"unsupported modulation order {self.d}")
        if not (0.0 < self.code_rate <= 1.0):
            raise ValueError("code rate must lie in (0, 1]")
        if self.block_n not in _BLOCK_N_ALLOWED:
            raise ValueError(f"block length must be one of {_BLOCK_N_ALLOWED}")
        if not (0 < self.info_bits <= self.d * self.block_n):
            raise ValueError("info_bits must fit one single-stream block")


def block_bits(mode: MimoMode, bearer: Bearer) -> int:
    """Information bits one block carries under the given MIMO mode."""
    if mode is MimoMode.PM:
        return 2 * bearer.info_bits
    if mode is MimoMode.PMOD:
        return int(round((bearer.d + 1) * bearer.code_rate * bearer.block_n))
    return bearer.info_bits


def load_bearers(path=None) -> list:
    """Bearer table from path, $DUALPOL_CONFIG_DIR/bearers.csv, or the
    packaged defaults (in that priority order)."""
    if path is None:
        cfg_dir = os.environ.get("DUALPOL_CONFIG_DIR")
        if cfg_dir and os.path.exists(os.path.join(cfg_dir, "bearers.csv")):
            path = os.path.join(cfg_dir, "bearers.csv")
        else:
            ref = resources.files("dualpol").joinpath("data/bearers.csv")
            return _parse_bearers(ref.read_text().splitlines())
    with open(path) as f:
        return _parse_bearers(f.read().splitlines())


def _parse_bearers(lines) -> list:
    bearers = []
    for ln in lines:
        ln = ln.strip()
        if not ln or ln.startswith("#") or ln.startswith("bearer_id"):
            continue
        parts = ln.split(",")
        if len(parts) != 7:
            raise ValueError(f"bearer row needs 7 fields: {ln!r}")
        bid, d, c, n, g50, slope, info = parts
        bearers.append(
            Bearer(
                bearer_id=bid,
                d=int(d),
                code_rate=float(c),
                block_n=int(n),
                info_bits=int(info),
                per_curve=PerCurve(bearer_id=bid, gamma50_db=float(g50), slope_db=float(slope)),
            )
        )
    if not bearers:
        raise ValueError("empty bearer table")
    return bearers


def build_luts_for(bearers, samples: int = 50_000, seed: int = 7) -> dict:
    """One MIESM LUT per modulation order appearing in the bearer table."""
    return {
        d: pla.build_miesm_lut(d, samples=samples, seed=seed + d)
        for d in sorted({b.d for b in bearers})
    }


@dataclass(frozen=True, slots=True)
class AdaptDecision:
    block_index: int
    mode: MimoMode
    d: int
    code_rate: float
    bearer_id: str
    gamma_eff_db: float
    predicted_per: float
    feasible: bool
    realized_success: bool
    throughput_bits: int


# ---------------------------------------------------------------------------
# Vectorized candidate evaluation
# ---------------------------------------------------------------------------

def _stream_sinr_matrix(mode: MimoMode, H: np.ndarray, sigma2: np.ndarray,
                        pm_receiver: str) -> np.ndarray:
    """Per-stream SINRs for a stack of channels; shape (blocks, streams)."""
    h11, h12 = H[:, 0, 0], H[:, 0, 1]
    h21, h22 = H[:, 1, 0], H[:, 1, 1]
    g11 = np.abs(h11) ** 2 + np.abs(h21) ** 2
    g22 = np.abs(h12) ** 2 + np.abs(h22) ** 2
    if mode is MimoMode.SISO:
        return (np.abs(h11) ** 2 / sigma2)[:, None]
    if mode is MimoMode.OPTBC:
        return ((g11 + g22) / sigma2)[:, None]
    if mode is MimoMode.PMOD:
        # index bits spread symbols over both polarizations within a block
        return np.column_stack([g11 / sigma2, g22 / sigma2])
    g12 = np.conj(h11) * h12 + np.conj(h21) * h22
    cross = np.abs(g12) ** 2
    if pm_receiver == "paper-zf":
        return np.column_stack([g11, g22]) / sigma2[:, None]
    if pm_receiver == "true-zf":
        s1 = g11 - np.where(g22 > 0, cross / np.maximum(g22, 1e-300), 0.0)
        s2 = g22 - np.where(g11 > 0, cross / np.maximum(g11, 1e-300), 0.0)
        return np.maximum(np.column_stack([s1, s2]), 0.0) / sigma2[:, None]
    a11 = 1.0 + g11 / sigma2
    a22 = 1.0 + g22 / sigma2
    det = a11 * a22 - cross / sigma2 ** 2
    return np.maximum(np.column_stack([det / a22 - 1.0, det / a11 - 1.0]), 0.0)


def _interp_subblocks(H: np.ndarray, subsamples: int) -> list:
    """Linearly interpolated channel stacks between consecutive blocks."""
    if subsamples <= 1:
        return [H]
    H_next = np.concatenate([H[1:], H[-1:]], axis=0)
    return [H + (H_next - H) * (s / subsamples) for s in range(subsamples)]


def _effective_sinr_db(gammas: np.ndarray, lut: MiesmLut, esm: EsmParams) -> np.ndarray:
    """Vectorized MIESM over rows of a (blocks, streams) SINR matrix."""
    g = np.maximum(gammas, _SINR_FLOOR)
    gdb = np.clip(10.0 * np.log10(g / esm.beta2), lut.snr_db[0], lut.snr_db[-1])
    phi_vals = np.interp(gdb, lut.snr_db, lut.phi_bits)
    mean_phi = np.clip(phi_vals.mean(axis=1), lut.phi_bits[0], lut.phi_bits[-1])
    eff_db = np.interp(mean_phi, lut.phi_bits, lut.snr_db)
    return eff_db + 10.0 * math.log10(esm.beta1)


class _CandidateTable:
    """All (mode, bearer) tuples with their per-block PER and effective SINR."""

    def __init__(self, modes, bearers, luts, esm, pm_receiver,
                 H, sigma2, subsamples):
        self.candidates = [(m, b) for m in modes for b in bearers]
        if not self.candidates:
            raise ValueError("empty candidate set")
        self.bits = np.array([block_bits(m, b) for m, b in self.candidates])
        n_blocks = H.shape[0]
        self.gamma_eff_db = np.empty((len(self.candidates), n_blocks))
        self.per = np.empty((len(self.candidates), n_blocks))
        H_subs = _interp_subblocks(H, subsamples)
        stream_cache = {}
        for ci, (mode, bearer) in enumerate(self.candidates):
            key = mode
            if key not in stream_cache:
                stream_cache[key] = np.concatenate(
                    [_stream_sinr_matrix(mode, Hs, sigma2, pm_receiver) for Hs in H_subs],
                    axis=1,
                )
            lut = luts[bearer.d]
            eff_db = _effective_sinr_db(stream_cache[key], lut, esm)
            curve = bearer.per_curve
            self.gamma_eff_db[ci] = eff_db
            self.per[ci] = 0.5 * erfc(
                (eff_db - curve.gamma50_db) / (math.sqrt(2.0) * curve.slope_db)
            )

    def choose(self, per_target: float):
        """Per-block argmax-rate selection under the PER constraint.

        Returns (chosen index, feasible flag) arrays over blocks.
        """
        order = sorted(
            range(len(self.candidates)),
            key=lambda ci: (
                -self.bits[ci],
                self.candidates[ci][0].complexity_rank,
                self.candidates[ci][1].d,
                self.candidates[ci][1].bearer_id,
            ),
        )
        n_blocks = self.per.shape[1]
        best = np.full(n_blocks, -1, dtype=int)
        best_bits = np.full(n_blocks, -1.0)
        best_per = np.full(n_blocks, np.inf)
        for ci in order:
            feas = self.per[ci] <= per_target
            take = feas & (
                (self.bits[ci] > best_bits)
                | ((self.bits[ci] == best_bits) & (self.per[ci] < best_per))
            )
            best[take] = ci
            best_bits[take] = self.bits[ci]
            best_per[take] = self.per[ci][take]
        feasible = best >= 0
        if not np.all(feasible):
            fallback = np.asarray(order)[np.argmin(self.per[order], axis=0)]
            best = np.where(feasible, best, fallback)
        return best, feasible

    def bootstrap_index(self) -> int:
        """Most conservative tuple: lowest rate, then lowest SINR demand."""
        return min(
            range(len(self.candidates)),
            key=lambda ci: (
                self.bits[ci],
                self.candidates[ci][1].per_curve.gamma50_db,
                self.candidates[ci][0].complexity_rank,
            ),
        )


def select_tuple(H, sigma_w2: float, bearers, modes=ALL_MODES, luts=None,
                 per_target: float = PER_TARGET_DEFAULT,
                 esm: EsmParams = EsmParams(), pm_receiver: str = "mmse") -> AdaptDecision:
    """Best (mode, modulation, code rate) for one channel realization."""
    if luts is None:
        luts = build_luts_for(bearers)
    H_arr = np.asarray(H, dtype=complex).reshape(1, 2, 2)
    table = _CandidateTable(
        tuple(modes), tuple(bearers), luts, esm, pm_receiver,
        H_arr, np.array([float(sigma_w2)]), subsamples=1,
    )
    chosen, feasible = table.choose(per_target)
    ci = int(chosen[0])
    mode, bearer = table.candidates[ci]
    return AdaptDecision(
        block_index=0,
        mode=mode,
        d=bearer.d,
        code_rate=bearer.code_rate,
        bearer_id=bearer.bearer_id,
        gamma_eff_db=float(table.gamma_eff_db[ci, 0]),
        predicted_per=float(table.per[ci, 0]),
        feasible=bool(feasible[0]),
        realized_success=True,
        throughput_bits=int(table.bits[ci]),
    )


def simulate_trip(series: ChannelSeries, p: ScenarioParams, bearers,
                  modes=ALL_MODES, luts=None,
                  feedback_delay_s: float | None = None, seed: int = 0,
                  per_target: float = PER_TARGET_DEFAULT,
                  esm: EsmParams = EsmParams(), pm_receiver: str = "mmse",
                  subsamples_per_block: int = 1) -> list:
    """Adaptive link simulation over a channel series with delayed feedback."""
    if feedback_delay_s is None:
        feedback_delay_s = p.feedback_delay_s
    ratio = feedback_delay_s / series.block_period_s
    delay_blocks = int(round(ratio))
    if abs(ratio - delay_blocks) > 1e-9:
        raise ValueError("feedback delay must be a multiple of the block period")
    n = series.n_blocks
    if n <= delay_blocks:
        raise ValueError("series shorter than the feedback delay")
    if luts is None:
        luts = build_luts_for(bearers)

    snr = snr_per_block(series, p)
    sigma2 = 1.0 / snr
    table = _CandidateTable(
        tuple(modes), tuple(bearers), luts, esm, pm_receiver,
        series.H, sigma2, subsamples_per_block,
    )
    chosen_now, feasible_now = table.choose(per_target)

    chosen = np.empty(n, dtype=int)
    feasible = np.empty(n, dtype=bool)
    boot = table.bootstrap_index()
    chosen[:delay_blocks] = boot
    feasible[:delay_blocks] = False
    if delay_blocks:
        chosen[delay_blocks:] = chosen_now[:-delay_blocks]
        feasible[delay_blocks:] = feasible_now[:-delay_blocks]
    else:
        chosen[:] = chosen_now
        feasible[:] = feasible_now

    rows = np.arange(n)
    per_true = table.per[chosen, rows]
    per_pred_delayed = np.where(
        rows >= delay_blocks,
        table.per[chosen, np.maximum(rows - delay_blocks, 0)],
        per_true,
    )
    gamma_db = table.gamma_eff_db[chosen, rows]
    rng = np.random.default_rng(seed)
    success = rng.random(n) < (1.0 - per_true)
    bits = table.bits[chosen]

    decisions = []
    for k in range(n):
        mode, bearer = table.candidates[chosen[k]]
        decisions.append(
            AdaptDecision(
                block_index=k,
                mode=mode,
                d=bearer.d,
                code_rate=bearer.code_rate,
                bearer_id=bearer.bearer_id,
                gamma_eff_db=float(gamma_db[k]),
                predicted_per=float(per_pred_delayed[k]),
                feasible=bool(feasible[k]),
                realized_success=bool(success[k]),
                throughput_bits=int(bits[k]) if success[k] else 0,
            )
        )
    return decisions


# ---------------------------------------------------------------------------
# Post-processing
# ---------------------------------------------------------------------------

def throughput_cdf(decisions) -> list:
    """Empirical CDF of per-block realized throughput, right-continuous."""
    if not decisions:
        raise ValueError("no decisions")
    vals = np.sort(np.array([d.throughput_bits for d in decisions], dtype=float))
    uniq, counts = np.unique(vals, return_counts=True)
    cdf = np.cumsum(counts) / vals.size
    return list(zip(uniq.tolist(), cdf.tolist()))


def summarize(decisions, block_period_s: float) -> dict:
    """Mean throughput, empirical PER of feasible blocks, mode histogram."""
    n = len(decisions)
    bits = np.array([d.throughput_bits for d in decisions], dtype=float)
    feas = np.array([d.feasible for d in decisions])
    fail = np.array([not d.realized_success for d in decisions])
    hist: dict = {}
    for d in decisions:
        hist[d.mode.value] = hist.get(d.mode.value, 0) + 1
    return {
        "blocks": n,
        "mean_throughput_bps": float(bits.mean() / block_period_s),
        "feasible_share": float(feas.mean()),
        "per_feasible_blocks": float(fail[feas].mean()) if feas.any() else float("nan"),
        "per_all_blocks": float(fail.mean()),
        "mode_histogram": hist,
    }


def save_decisions(decisions, path) -> None:
    with open(path, "w") as f:
        f.write("block,mode,d,c,gamma_eff_db,per_pred,success,bits\n")
        for d in decisions:
            f.write(
                f"{d.block_index},{d.mode.value},{d.d},{d.code_rate:g},"
                f"{d.gamma_eff_db:.6g},{d.predicted_per:.6g},"
                f"{int(d.realized_success)},{d.throughput_bits}\n"
            )


def load_decision_bits(path) -> list:
    """Throughput column of a decision log, for CDF replotting."""
    out = []
    with open(path) as f:
        for ln in f:
            ln = ln.strip()
            if not ln or ln.startswith("block"):
                continue
            out.append(int(ln.split(",")[-1]))
    return out
