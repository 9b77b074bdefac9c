"""Numerology and scenario data model, validation and rate/frequency bookkeeping.

A scenario is an ordered list of sub-bands, each with its own subcarrier
spacing, FFT size and CP length. All spacings are power-of-two multiples of
the 15 kHz base spacing, which makes every per-band sampling rate divide the
composite rate.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field, asdict

F0_HZ = 15000.0          # base subcarrier spacing
PRB_SUBCARRIERS = 12     # resource-block granularity

WAVEFORMS = ("cp-ofdm", "f-ofdm", "w-ofdm")
MOD_ORDERS = (4, 16, 64, 256)


class ConfigError(ValueError):
    """Invalid numerology or scenario parameters."""


def _is_pow2(n):
    return n >= 1 and (n & (n - 1)) == 0


@dataclass(frozen=True)
class SubbandNumerology:
    """Per-sub-band parameters.

    n_fft        : IFFT size (power of two, >= 16)
    n_cp         : cyclic-prefix length in samples
    scs_hz       : subcarrier spacing, a power-of-two multiple of 15 kHz
    n_used       : occupied subcarriers, a whole number of PRBs
    n_guard      : guard subcarriers (half on each side of the band)
    filter_len   : sub-band filter length (odd)
    transition_hz: one-sided filter transition band in Hz
    n_prefix     : w-OFDM prefix/suffix length in samples
    n_transition : w-OFDM window transition length in samples (even)
    """

    n_fft: int
    n_cp: int
    scs_hz: float
    n_used: int
    n_guard: int = 0
    filter_len: int = 1
    transition_hz: float = 0.0
    n_prefix: int = 0
    n_transition: int = 0

    def __post_init__(self):
        if not _is_pow2(self.n_fft) or self.n_fft < 16:
            raise ConfigError(f"n_fft must be a power of two >= 16, got {self.n_fft}")
        if self.n_cp < 0:
            raise ConfigError("n_cp must be non-negative")
        ratio = self.scs_hz / F0_HZ
        if self.scs_hz <= 0 or ratio != int(ratio) or not _is_pow2(int(ratio)):
            raise ConfigError(
                f"scs_hz must be f0*2^p with f0=15 kHz, got {self.scs_hz}")
        if self.n_used <= 0 or self.n_used % PRB_SUBCARRIERS != 0:
            raise ConfigError(
                f"n_used must be a positive multiple of {PRB_SUBCARRIERS}")
        if self.n_guard < 0:
            raise ConfigError("n_guard must be non-negative")
        if self.n_used + self.n_guard > self.n_fft:
            raise ConfigError("n_used + n_guard exceeds n_fft")
        if self.filter_len < 1 or self.filter_len % 2 == 0:
            raise ConfigError(f"filter_len must be odd, got {self.filter_len}")
        if self.transition_hz < 0:
            raise ConfigError("transition_hz must be non-negative")
        if self.n_prefix < 0 or self.n_transition < 0:
            raise ConfigError("n_prefix and n_transition must be non-negative")
        if self.n_transition % 2 != 0:
            raise ConfigError("n_transition must be even")
        if self.n_prefix > 0 or self.n_transition > 0:
            if self.n_transition > self.n_prefix:
                raise ConfigError("n_transition must not exceed n_prefix")
            if self.n_prefix >= self.n_cp:
                raise ConfigError("n_prefix must be smaller than n_cp")

    @property
    def r_subcarriers(self):
        """One-sided transition band in subcarrier units (may be fractional)."""
        return self.transition_hz / self.scs_hz

    @property
    def occupied_hz(self):
        """Band footprint including guards: scs * (n_used + n_guard)."""
        return self.scs_hz * (self.n_used + self.n_guard)


@dataclass(frozen=True)
class ScenarioConfig:
    """Ordered sub-band list plus global settings."""

    subbands: tuple
    waveform: str = "cp-ofdm"
    mod_order: int = 4
    n_symbols: int = 16
    seed: int = 0
    f0_hz: float = F0_HZ
    f1_hz: float | None = None
    rx_filter: bool = True
    eq_mode: str = "scalar"

    def __post_init__(self):
        object.__setattr__(self, "subbands", tuple(self.subbands))
        if len(self.subbands) < 1:
            raise ConfigError("scenario needs at least one sub-band")
        if self.waveform not in WAVEFORMS:
            raise ConfigError(f"waveform must be one of {WAVEFORMS}")
        if self.mod_order not in MOD_ORDERS:
            raise ConfigError(f"mod_order must be one of {MOD_ORDERS}")
        if self.n_symbols < 1:
            raise ConfigError("n_symbols must be positive")
        if not (0 <= self.seed < 2**64):
            raise ConfigError("seed must fit in 64 bits")
        if self.eq_mode not in ("scalar", "per-subcarrier"):
            raise ConfigError("eq_mode must be 'scalar' or 'per-subcarrier'")
        if self.waveform == "w-ofdm":
            for k, nm in enumerate(self.subbands):
                if not (0 < nm.n_prefix < nm.n_cp):
                    raise ConfigError(
                        f"sub-band {k}: w-ofdm needs 0 < n_prefix < n_cp")


def subband_sample_rate(nm: SubbandNumerology) -> float:
    """Per-band sampling rate n_fft * scs_hz."""
    return nm.n_fft * nm.scs_hz


def composite_rate(sc: ScenarioConfig) -> float:
    """Common rate at which the sub-bands are combined (max of the band rates)."""
    return max(subband_sample_rate(nm) for nm in sc.subbands)


def upsampling_factor(sc: ScenarioConfig, i: int) -> int:
    """Integer (power-of-two) factor from band i's rate up to the composite rate."""
    u = composite_rate(sc) / subband_sample_rate(sc.subbands[i])
    ui = int(round(u))
    assert abs(u - ui) < 1e-9 and _is_pow2(ui)
    return ui


def symbols_per_band(sc: ScenarioConfig, i: int) -> int:
    """OFDM symbol count for band i.

    sc.n_symbols counts symbols of the slowest band; faster bands carry
    proportionally more so that all bursts span roughly the same time.
    """
    u_max = max(upsampling_factor(sc, k) for k in range(len(sc.subbands)))
    return sc.n_symbols * u_max // upsampling_factor(sc, i)


def _band_widths(sc):
    return [nm.occupied_hz for nm in sc.subbands]


def default_f1(sc: ScenarioConfig) -> float:
    """First-band center that puts the composite occupied spectrum around 0 Hz."""
    w = _band_widths(sc)
    return -sum(w) / 2.0 + w[0] / 2.0


def center_frequencies(sc: ScenarioConfig):
    """Per-band center frequencies in Hz.

    Adjacent bands are stacked edge to edge: each step advances by half the
    occupied width of each of the two bands involved.
    """
    w = _band_widths(sc)
    f = [sc.f1_hz if sc.f1_hz is not None else default_f1(sc)]
    for i in range(1, len(w)):
        f.append(f[-1] + w[i - 1] / 2.0 + w[i] / 2.0)
    return f


# ---------------------------------------------------------------------------
# serialization

_SUBBAND_FIELDS = {"n_fft", "n_cp", "scs_hz", "n_used", "n_guard",
                   "filter_len", "transition_hz", "n_prefix", "n_transition"}
_SCENARIO_FIELDS = {"subbands", "waveform", "mod_order", "n_symbols", "seed",
                    "f0_hz", "f1_hz", "rx_filter", "eq_mode"}


def scenario_to_dict(sc: ScenarioConfig) -> dict:
    d = asdict(sc)
    d["subbands"] = [asdict(nm) for nm in sc.subbands]
    return d


def scenario_from_dict(d: dict) -> ScenarioConfig:
    unknown = set(d) - _SCENARIO_FIELDS
    if unknown:
        raise ConfigError(f"unknown scenario fields: {sorted(unknown)}")
    if "subbands" not in d:
        raise ConfigError("scenario is missing 'subbands'")
    subbands = []
    for k, sb in enumerate(d["subbands"]):
        unknown = set(sb) - _SUBBAND_FIELDS
        if unknown:
            raise ConfigError(f"sub-band {k}: unknown fields {sorted(unknown)}")
        subbands.append(SubbandNumerology(**sb))
    rest = {k: v for k, v in d.items() if k != "subbands"}
    return ScenarioConfig(subbands=tuple(subbands), **rest)


def save_scenario(sc: ScenarioConfig, path):
    with open(path, "w") as fh:
        json.dump(scenario_to_dict(sc), fh, indent=2)
        fh.write("\n")


def load_scenario(path) -> ScenarioConfig:
    with open(path) as fh:
        return scenario_from_dict(json.load(fh))


def scenario_hash(sc: ScenarioConfig) -> str:
    """Stable hex digest of the canonical JSON form."""
    blob = json.dumps(scenario_to_dict(sc), sort_keys=True).encode()
    return hashlib.sha256(blob).hexdigest()


# ---------------------------------------------------------------------------
# presets

def _sweep_subband(scs_hz, filter_len, gap_hz, n_prefix=32, n_transition=32):
    n_guard = gap_hz / scs_hz
    if abs(n_guard - round(n_guard)) > 1e-9:
        raise ConfigError(f"gap {gap_hz} Hz is not a whole number of "
                          f"{scs_hz} Hz subcarriers")
    return SubbandNumerology(
        n_fft=1024, n_cp=64, scs_hz=scs_hz, n_used=180,
        n_guard=int(round(n_guard)), filter_len=filter_len,
        transition_hz=gap_hz / 2.0,
        n_prefix=n_prefix, n_transition=n_transition)


def table1_scenario(waveform="cp-ofdm", mod_order=4, n_symbols=16, seed=0,
                    gap_hz=180e3):
    """Three-band reference scenario: 30/60/15 kHz spacings, 15 PRB each.

    Filter lengths 177/89/353, 180 kHz inter-band gap, 90 kHz one-sided
    filter transition. Composite rate is 61.44 MHz.
    """
    subbands = (
        _sweep_subband(30e3, 177, gap_hz),
        _sweep_subband(60e3, 89, gap_hz),
        _sweep_subband(15e3, 353, gap_hz),
    )
    return ScenarioConfig(subbands=subbands, waveform=waveform,
                          mod_order=mod_order, n_symbols=n_symbols, seed=seed)


def single_band_scenario(waveform="cp-ofdm", mod_order=4, n_symbols=16, seed=0):
    """One 15 kHz band, filtered, centered at 0 Hz."""
    subbands = (_sweep_subband(15e3, 353, 180e3),)
    return ScenarioConfig(subbands=subbands, waveform=waveform,
                          mod_order=mod_order, n_symbols=n_symbols, seed=seed,
                          f1_hz=0.0)


def bypass_scenario(mod_order=4, n_symbols=16, seed=0):
    """Distortionless reference: one CP-OFDM band, no receive filter, f1 = 0."""
    nm = SubbandNumerology(n_fft=1024, n_cp=64, scs_hz=15e3, n_used=180,
                           n_guard=0, filter_len=1, transition_hz=0.0)
    return ScenarioConfig(subbands=(nm,), waveform="cp-ofdm",
                          mod_order=mod_order, n_symbols=n_symbols, seed=seed,
                          f1_hz=0.0, rx_filter=False)


def with_gap(sc: ScenarioConfig, gap_hz: float) -> ScenarioConfig:
    """Rebuild a scenario with a new inter-band gap and matching transition.

    The one-sided filter transition tracks the gap (half of it), so a wider
    gap both separates the bands and sharpens nothing; a zero gap packs the
    bands edge to edge with a brick-wall target.
    """
    subbands = []
    for nm in sc.subbands:
        n_guard = gap_hz / nm.scs_hz
        if abs(n_guard - round(n_guard)) > 1e-9:
            raise ConfigError(f"gap {gap_hz} Hz is not a whole number of "
                              f"{nm.scs_hz} Hz subcarriers")
        d = asdict(nm)
        d["n_guard"] = int(round(n_guard))
        d["transition_hz"] = gap_hz / 2.0
        subbands.append(SubbandNumerology(**d))
    rest = {k: v for k, v in scenario_to_dict(sc).items() if k != "subbands"}
    return ScenarioConfig(subbands=tuple(subbands), **rest)


PRESETS = {
    "table1": table1_scenario,
    "single-band": single_band_scenario,
    "bypass": bypass_scenario,
}


def get_preset(name, **kwargs) -> ScenarioConfig:
    if name not in PRESETS:
        raise ConfigError(f"unknown preset {name!r}; have {sorted(PRESETS)}")
    return PRESETS[name](**kwargs)
