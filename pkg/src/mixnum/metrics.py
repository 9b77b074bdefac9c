"""PSD estimation, EVM, Monte Carlo and semi-analytic BER, and the
Eb/N0-at-target-BER separation sweep.

Both BER estimators share the same calibrated Eb/N0 convention: noise is
injected at the composite rate with the variance that realizes the requested
Eb/N0 at the demapper input. The semi-analytic path receives one noiseless
burst (interferers active) and averages the analytic Gaussian bit-error
kernel over the equalized points; Monte Carlo actually injects the noise and
counts errors, serving as the oracle for the semi-analytic result.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.signal import welch as _scipy_welch

from .config import (F0_HZ, ScenarioConfig, with_gap)
from .dsp import ComplexSignal
from .link import (ReceiverCalibration, awgn_from_rng, calibrate,
                   noise_variance_for_ebn0, receive_subband)
from .modem import (bit_error_probabilities, qam_demodulate, qam_modulate)
from .waveform import build_composite, payload_symbols

DEFAULT_MIN_ERRORS = 100
DEFAULT_MAX_BITS = 2_000_000
EVM_FLOOR_DB = -300.0


class MetricsError(ValueError):
    pass


@dataclass(frozen=True)
class PsdCurve:
    freq_hz: np.ndarray
    psd_db: np.ndarray          # dB relative to the curve maximum
    resolution_hz: float
    peak_db: float              # absolute level (dB re 1/Hz) of the maximum


@dataclass(frozen=True)
class BerPoint:
    ebn0_db: float
    ber: float
    method: str                 # "monte-carlo" | "semi-analytic"
    n_bits: int
    n_errors: int = 0
    note: str = ""


@dataclass(frozen=True)
class BerCurve:
    band: int
    waveform: str
    mod_order: int
    points: tuple = field(default_factory=tuple)


def welch_psd(x: ComplexSignal, segment_len=4096, overlap_fraction=0.5,
              window_kind="hann") -> PsdCurve:
    """Averaged-periodogram PSD, FFT-shifted to span (-fs/2, fs/2]."""
    if len(x) < segment_len:
        raise MetricsError(
            f"signal ({len(x)} samples) shorter than one segment "
            f"({segment_len})")
    noverlap = int(segment_len * overlap_fraction)
    f, p = _scipy_welch(x.samples, fs=x.rate_hz, window=window_kind,
                        nperseg=segment_len, noverlap=noverlap,
                        detrend=False, return_onesided=False,
                        scaling="density")
    f = np.fft.fftshift(f)
    p = np.fft.fftshift(p)
    peak = p.max()
    with np.errstate(divide="ignore"):
        rel_db = 10.0 * np.log10(p / peak)
    return PsdCurve(freq_hz=f, psd_db=rel_db,
                    resolution_hz=x.rate_hz / segment_len,
                    peak_db=float(10.0 * np.log10(peak)))


def evm_db(rx, ref) -> float:
    """10 log10 of error power over reference power, floored at -300 dB."""
    rx = np.asarray(rx).reshape(-1)
    ref = np.asarray(ref).reshape(-1)
    if len(rx) != len(ref) or len(ref) == 0:
        raise MetricsError("rx and ref must have equal, non-zero length")
    pref = np.sum(np.abs(ref) ** 2)
    if pref == 0:
        raise MetricsError("reference has zero energy")
    ratio = np.sum(np.abs(rx - ref) ** 2) / pref
    if ratio <= 10.0 ** (EVM_FLOOR_DB / 10.0):
        return EVM_FLOOR_DB
    return float(10.0 * np.log10(ratio))


# ---------------------------------------------------------------------------
# shared burst machinery

def _trial_rngs(seed, trial, n_bands):
    ss = np.random.SeedSequence(seed, spawn_key=(trial,))
    children = ss.spawn(n_bands + 1)
    return ([np.random.default_rng(c) for c in children[:n_bands]],
            np.random.default_rng(children[-1]))


def _random_burst(sc: ScenarioConfig, rng_list):
    """Composite burst with random payloads on every band."""
    k = int(np.log2(sc.mod_order))
    payloads, bits = [], []
    for i in range(len(sc.subbands)):
        b = rng_list[i].integers(0, 2, size=k * payload_symbols(sc, i),
                                 dtype=np.uint8)
        bits.append(b)
        payloads.append(qam_modulate(b, sc.mod_order))
    sig, metas = build_composite(sc, payloads)
    return sig, metas, payloads, bits


def _sigma_per_dim(sc, cal, ebn0_db, n_symbols):
    """Per-point per-dimension noise std at the demapper for the given Eb/N0."""
    var_inj = noise_variance_for_ebn0(sc, cal, ebn0_db)
    sigma2_sub = var_inj * cal.noise_gain_per_subcarrier
    return np.sqrt(np.tile(sigma2_sub, n_symbols) / 2.0)


@dataclass(frozen=True)
class SemiAnalyticRun:
    """One noiseless received burst, reusable across Eb/N0 points."""

    sc: ScenarioConfig
    band: int
    cal: ReceiverCalibration
    rx_points: np.ndarray       # flattened equalized points
    tx_points: np.ndarray
    n_symbols: int

    def ber(self, ebn0_db: float) -> float:
        sigma = _sigma_per_dim(self.sc, self.cal, ebn0_db, self.n_symbols)
        p = bit_error_probabilities(self.rx_points, self.tx_points,
                                    self.sc.mod_order, sigma)
        return float(np.mean(p))


def semianalytic_run(sc: ScenarioConfig, i: int,
                     cal: ReceiverCalibration | None = None,
                     seed: int | None = None) -> SemiAnalyticRun:
    if cal is None:
        cal = calibrate(sc, i)
    rngs, _ = _trial_rngs(sc.seed if seed is None else seed, 0,
                          len(sc.subbands))
    sig, metas, payloads, _ = _random_burst(sc, rngs)
    rx = receive_subband(sig, sc, i, metas[i], cal)
    return SemiAnalyticRun(sc=sc, band=i, cal=cal,
                           rx_points=rx.reshape(-1),
                           tx_points=payloads[i],
                           n_symbols=rx.shape[0])


def semianalytic_ber(sc: ScenarioConfig, i: int, ebn0_db: float,
                     cal: ReceiverCalibration | None = None,
                     seed: int | None = None) -> BerPoint:
    """Deterministic BER estimate from one noiseless burst."""
    run = semianalytic_run(sc, i, cal, seed)
    k = int(np.log2(sc.mod_order))
    return BerPoint(ebn0_db=ebn0_db, ber=run.ber(ebn0_db),
                    method="semi-analytic",
                    n_bits=len(run.rx_points) * k)


def monte_carlo_ber(sc: ScenarioConfig, i: int, ebn0_db: float,
                    min_errors=DEFAULT_MIN_ERRORS, max_bits=DEFAULT_MAX_BITS,
                    cal: ReceiverCalibration | None = None,
                    seed: int | None = None) -> BerPoint:
    """Error-counting BER with interferers active; stops at min_errors or
    max_bits, whichever comes first."""
    if cal is None:
        cal = calibrate(sc, i)
    seed = sc.seed if seed is None else seed
    var_inj = noise_variance_for_ebn0(sc, cal, ebn0_db)
    k = int(np.log2(sc.mod_order))
    n_err = 0
    n_bits = 0
    trial = 0
    while n_err < min_errors and n_bits < max_bits:
        rngs, rng_noise = _trial_rngs(seed, trial, len(sc.subbands))
        sig, metas, _, bits = _random_burst(sc, rngs)
        noisy = awgn_from_rng(sig, var_inj, rng_noise)
        rx = receive_subband(noisy, sc, i, metas[i], cal)
        rx_bits = qam_demodulate(rx.reshape(-1), sc.mod_order)
        n_err += int(np.sum(rx_bits != bits[i]))
        n_bits += len(bits[i])
        trial += 1
    note = "upper-bound only" if n_err == 0 else ""
    return BerPoint(ebn0_db=ebn0_db, ber=n_err / n_bits, method="monte-carlo",
                    n_bits=n_bits, n_errors=n_err, note=note)


# ---------------------------------------------------------------------------
# separation sweep

BISECT_LO_DB = -5.0
BISECT_HI_DB = 40.0
BISECT_BER_TOL = 1e-4
BISECT_DB_RESOLUTION = 0.01


def ebn0_for_target(run: SemiAnalyticRun, target: float) -> float:
    """Bisect Eb/N0 (dB) until the semi-analytic BER meets the target."""
    lo, hi = BISECT_LO_DB, BISECT_HI_DB
    f_lo = run.ber(lo) - target
    f_hi = run.ber(hi) - target
    if f_lo < 0 or f_hi > 0:
        raise MetricsError(
            f"target BER {target} not bracketed in [{lo}, {hi}] dB "
            f"(ber({lo})={f_lo + target:.4g}, ber({hi})={f_hi + target:.4g})")
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        f_mid = run.ber(mid) - target
        if abs(f_mid) <= BISECT_BER_TOL:
            return mid
        if f_mid > 0:
            lo = mid
        else:
            hi = mid
        if hi - lo < BISECT_DB_RESOLUTION / 10.0:
            break
    return 0.5 * (lo + hi)


def ebn0_at_target_ber(sc: ScenarioConfig, i: int, target=0.05,
                       m_grid=range(5), seed: int | None = None):
    """(m, Eb/N0 dB) pairs: for each separation of m resource blocks the
    scenario is rebuilt with gap = 12*m*f0 and one-sided transition gap/2,
    recalibrated and bisected to the target BER.

    Unreachable targets (distortion floor above target) yield NaN.
    """
    if not (0.0 < target < 0.5):
        raise MetricsError("target must be in (0, 0.5)")
    out = []
    for m in m_grid:
        sc_m = with_gap(sc, 12.0 * m * F0_HZ)
        run = semianalytic_run(sc_m, i, seed=seed)
        try:
            out.append((m, ebn0_for_target(run, target)))
        except MetricsError:
            out.append((m, float("nan")))
    return out
