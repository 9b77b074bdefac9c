"""Complex-baseband signal primitives: FFT, filtering, resampling, windows.

All arithmetic is double precision. The DFT pair is numpy's: forward
unscaled, inverse scaled by 1/N, so Parseval reads sum|x|^2 = sum|X|^2 / N.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.signal import fftconvolve

_DIRECT_CONV_MAX_TAPS = 512


class DspError(ValueError):
    pass


@dataclass(frozen=True)
class ComplexSignal:
    """Complex baseband samples annotated with their sampling rate."""

    samples: np.ndarray
    rate_hz: float

    def __post_init__(self):
        object.__setattr__(
            self, "samples", np.asarray(self.samples, dtype=np.complex128))
        if self.rate_hz <= 0:
            raise DspError("rate_hz must be positive")

    def __len__(self):
        return len(self.samples)

    @property
    def power(self):
        if len(self.samples) == 0:
            return 0.0
        return float(np.mean(np.abs(self.samples) ** 2))


@dataclass(frozen=True)
class FilterTaps:
    """Real, odd-length, symmetric FIR coefficients (linear phase)."""

    taps: np.ndarray
    group_delay: int

    def __post_init__(self):
        object.__setattr__(self, "taps", np.asarray(self.taps, dtype=np.float64))
        L = len(self.taps)
        if L % 2 == 0:
            raise DspError("filter length must be odd")
        if self.group_delay != (L - 1) // 2:
            raise DspError("group_delay must be (L-1)/2")
        if not np.allclose(self.taps, self.taps[::-1], atol=1e-15, rtol=0):
            raise DspError("taps must be symmetric")

    def __len__(self):
        return len(self.taps)

    def response_at(self, freqs_cycles_per_sample):
        """Complex frequency response at normalized frequencies (direct sum)."""
        nu = np.atleast_1d(np.asarray(freqs_cycles_per_sample, dtype=float))
        n = np.arange(len(self.taps)) - self.group_delay
        return np.exp(-2j * np.pi * np.outer(nu, n)) @ self.taps


def dft(x, n=None, inverse=False):
    """Unitary-pair DFT on a power-of-two length.

    Accepts an array or a ComplexSignal; returns the same kind.
    """
    sig = x if isinstance(x, ComplexSignal) else None
    a = sig.samples if sig is not None else np.asarray(x, dtype=np.complex128)
    if n is None:
        n = len(a)
    if n != len(a):
        raise DspError("n must equal the signal length")
    if n < 1 or (n & (n - 1)) != 0:
        raise DspError(f"DFT size must be a power of two, got {n}")
    out = np.fft.ifft(a) if inverse else np.fft.fft(a)
    if sig is not None:
        return ComplexSignal(out, sig.rate_hz)
    return out


def _windowed_sinc(cutoff_two_sided_bins, n_fft, filter_len):
    """Truncated sinc at the given two-sided passband width, raised-cosine
    windowed (exponent 0.6) and normalized to unit DC gain."""
    if filter_len % 2 == 0 or filter_len < 1:
        raise DspError(f"filter length must be odd, got {filter_len}")
    if cutoff_two_sided_bins > n_fft:
        raise DspError("cutoff exceeds the Nyquist band")
    half = (filter_len - 1) // 2
    n = np.arange(-half, half + 1, dtype=np.float64)
    p = np.sinc(cutoff_two_sided_bins * n / n_fft)
    if filter_len == 1:
        w = np.ones(1)
    else:
        # argument written as pi*(n/half) so the edges hit cos(pi) = -1
        # exactly and the edge taps are true zeros
        w = (0.5 * (1.0 + np.cos(np.pi * (n / half)))) ** 0.6
    taps = p * w
    taps = 0.5 * (taps + taps[::-1])  # exact symmetry
    taps = taps / taps.sum()
    return FilterTaps(taps, half)


def design_subband_filter(n_fft, n_used, r_subcarriers, filter_len) -> FilterTaps:
    """Sub-band lowpass: passband covers n_used + 2*r_subcarriers bins of an
    n_fft grid, windowed-sinc construction, unit DC gain.

    r_subcarriers is the one-sided transition width in subcarrier units and
    may be fractional.
    """
    width = n_used + 2.0 * r_subcarriers
    if width > n_fft:
        raise DspError("passband plus transition exceeds the sampling band")
    return _windowed_sinc(width, n_fft, filter_len)


def design_interpolation_filter(u, band_width_subcarriers, n_fft_composite_equiv,
                                filter_len) -> FilterTaps:
    """Anti-image lowpass for zero-stuffed interpolation by factor u.

    Cutoff sits halfway between the occupied band edge and the first
    spectral image, i.e. at half the original sampling rate. Passband gain
    is u so interpolation preserves per-band amplitude.
    """
    if u < 1 or (u & (u - 1)) != 0:
        raise DspError("u must be a power of two >= 1")
    if u == 1:
        return FilterTaps(np.array([1.0]), 0)
    if band_width_subcarriers > n_fft_composite_equiv // u:
        raise DspError("band wider than its original sampling band")
    ft = _windowed_sinc(n_fft_composite_equiv // u, n_fft_composite_equiv,
                        filter_len)
    return FilterTaps(ft.taps * u, ft.group_delay)


def blackman_transition(n_tr):
    """Uphill edge of the symbol-shaping window, length n_tr (even).

    w(n) = 0.42 - 0.5 cos(pi n / n_tr) + 0.08 cos(2 pi n / n_tr); starts at
    exactly 0 and is monotone non-decreasing on its support.
    """
    if n_tr < 0 or n_tr % 2 != 0:
        raise DspError(f"n_tr must be even and non-negative, got {n_tr}")
    if n_tr == 0:
        return np.zeros(0)
    n = np.arange(n_tr, dtype=np.float64)
    w = (0.42 - 0.5 * np.cos(np.pi * (n / n_tr))
         + 0.08 * np.cos(2.0 * np.pi * (n / n_tr)))
    w[0] = 0.0  # analytic value; the float sum of the coefficients is ~1e-17
    return w


def wofdm_window(n_fft, n_cp_star, n_prefix, n_tr):
    """Time-domain window for one extended w-OFDM symbol.

    Layout: [zeros, uphill, ones, downhill, zeros]; total length
    n_fft + n_cp_star + 2*n_prefix + 1. Palindromic by construction.
    """
    if n_tr > 2 * n_prefix:
        raise DspError("transition longer than twice the prefix")
    up = blackman_transition(n_tr)
    pad = np.zeros(n_prefix - n_tr // 2)
    ones = np.ones(n_fft + n_cp_star - n_tr + 1)
    return np.concatenate([pad, up, ones, up[::-1], pad])


def upsample_zero_stuff(x: ComplexSignal, u: int) -> ComplexSignal:
    """Insert u-1 zeros after every sample; rate multiplied by u."""
    if u < 1:
        raise DspError("u must be >= 1")
    if u == 1:
        return x
    out = np.zeros(u * len(x), dtype=np.complex128)
    out[::u] = x.samples
    return ComplexSignal(out, x.rate_hz * u)


def frequency_shift(x: ComplexSignal, f_hz: float) -> ComplexSignal:
    """Multiply by exp(+j 2 pi f n / fs); magnitudes unchanged."""
    if abs(f_hz) >= x.rate_hz / 2:
        raise DspError(f"shift {f_hz} Hz beyond Nyquist for rate {x.rate_hz}")
    if f_hz == 0.0:
        return x
    n = np.arange(len(x))
    return ComplexSignal(x.samples * np.exp(2j * np.pi * f_hz * n / x.rate_hz),
                         x.rate_hz)


def convolve_full(x: ComplexSignal, h: FilterTaps) -> ComplexSignal:
    """Full linear convolution; output length len(x) + L - 1.

    Direct for short filters, FFT-based above _DIRECT_CONV_MAX_TAPS.
    """
    if len(x) == 0:
        raise DspError("cannot convolve an empty signal")
    if len(h) <= _DIRECT_CONV_MAX_TAPS:
        y = np.convolve(x.samples, h.taps, mode="full")
    else:
        y = fftconvolve(x.samples, h.taps.astype(np.complex128), mode="full")
    return ComplexSignal(y, x.rate_hz)
