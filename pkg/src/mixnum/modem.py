"""Gray-mapped square QAM, random bit generation and the per-point analytic
bit-error kernel.

Mapping convention (fixed so every numeric example is reproducible):
per-dimension PAM levels are {+-1, +-3, ...} scaled to unit average symbol
energy; level index 0 is the most positive level and level j carries the
binary-reflected Gray code of j, so the all-zero label sits at (+1+1j)/sqrt(2)
for QPSK. A symbol's bits are the I-dimension bits (MSB first) followed by
the Q-dimension bits. Ties at a decision boundary decode toward the lower
(more negative) level.

Randomness comes from numpy's PCG64 generator; per-trial substreams are
spawned with SeedSequence so parallel Monte Carlo stays reproducible.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import erfc


class ModemError(ValueError):
    pass


def qfunc(x):
    """Gaussian tail probability Q(x)."""
    return 0.5 * erfc(np.asarray(x, dtype=np.float64) / np.sqrt(2.0))


def _gray(j):
    return j ^ (j >> 1)


@dataclass(frozen=True)
class ConstellationMap:
    """Square M-QAM constellation with Gray bit labels."""

    order: int
    points: np.ndarray        # (M,) complex, indexed by integer label
    bit_labels: np.ndarray    # (M, log2 M) of {0,1}
    # per-dimension helpers (ascending level order)
    levels: np.ndarray        # (sqrt M,) real, ascending
    thresholds: np.ndarray    # (sqrt M - 1,) decision boundaries, ascending
    level_bits: np.ndarray    # (sqrt M, log2 sqrt M): bits of the ascending levels

    @property
    def bits_per_symbol(self):
        return int(np.log2(self.order))


@lru_cache(maxsize=None)
def constellation(M: int) -> ConstellationMap:
    if M not in (4, 16, 64, 256):
        raise ModemError(f"unsupported modulation order {M}")
    m = int(np.sqrt(M))
    kd = int(np.log2(m))
    alpha = np.sqrt(3.0 / (2.0 * (M - 1)))
    # ascending levels; descending index j (0 -> most positive) carries gray(j)
    levels = alpha * (2.0 * np.arange(m) - (m - 1))
    gray_desc = np.array([_gray(j) for j in range(m)])
    level_gray_asc = gray_desc[::-1]           # gray value of ascending level i
    level_bits = ((level_gray_asc[:, None] >> np.arange(kd - 1, -1, -1)) & 1)
    # coordinate of each gray value
    coord_of_gray = np.empty(m)
    coord_of_gray[level_gray_asc] = levels
    lab = np.arange(M)
    i_gray = lab >> kd
    q_gray = lab & (m - 1)
    points = coord_of_gray[i_gray] + 1j * coord_of_gray[q_gray]
    bit_labels = ((lab[:, None] >> np.arange(2 * kd - 1, -1, -1)) & 1)
    thresholds = 0.5 * (levels[:-1] + levels[1:])
    return ConstellationMap(order=M, points=points,
                            bit_labels=bit_labels.astype(np.uint8),
                            levels=levels, thresholds=thresholds,
                            level_bits=level_bits.astype(np.uint8))


@dataclass(frozen=True)
class BitStream:
    bits: np.ndarray
    seed: int


def random_bits(seed: int, n: int) -> BitStream:
    """Deterministic fair bits from PCG64."""
    if n < 0:
        raise ModemError("n must be non-negative")
    rng = np.random.default_rng(seed)
    return BitStream(rng.integers(0, 2, size=n, dtype=np.uint8), seed)


def _bits_array(bits):
    if isinstance(bits, BitStream):
        bits = bits.bits
    return np.asarray(bits, dtype=np.uint8)


def bits_to_symbols(bits, M: int) -> np.ndarray:
    """Pack bits (MSB first) into integer labels."""
    b = _bits_array(bits)
    k = int(np.log2(M))
    if len(b) % k != 0:
        raise ModemError(f"bit count {len(b)} not divisible by {k}")
    groups = b.reshape(-1, k)
    weights = 1 << np.arange(k - 1, -1, -1)
    return groups @ weights


def qam_modulate(bits, M: int) -> np.ndarray:
    """Map a bit sequence to unit-average-energy Gray QAM symbols."""
    cm = constellation(M)
    return cm.points[bits_to_symbols(bits, M)]


def _decide_levels(coords, cm):
    # side='left' counts thresholds strictly below, so a coordinate exactly
    # on a boundary decodes to the lower level
    return np.searchsorted(cm.thresholds, coords, side="left")


def qam_demodulate(points, M: int) -> np.ndarray:
    """Hard minimum-distance demapping to bits."""
    cm = constellation(M)
    pts = np.asarray(points, dtype=np.complex128)
    i_idx = _decide_levels(pts.real, cm)
    q_idx = _decide_levels(pts.imag, cm)
    bits = np.concatenate(
        [cm.level_bits[i_idx], cm.level_bits[q_idx]], axis=1)
    return bits.reshape(-1).astype(np.uint8)


def _dim_bit_error(coords, tx_idx, sigma, cm):
    """Summed bit-error probabilities for one dimension.

    coords  : (n,) noiseless received coordinates
    tx_idx  : (n,) transmitted ascending level indices
    sigma   : scalar or (n,) per-dimension noise std
    Returns (n,) expected number of erroneous bits in this dimension.
    """
    sigma = np.broadcast_to(np.asarray(sigma, dtype=np.float64), coords.shape)
    g = qfunc((cm.thresholds[None, :] - coords[:, None]) / sigma[:, None])
    cell_p = np.empty((len(coords), len(cm.levels)))
    cell_p[:, 0] = 1.0 - g[:, 0]
    cell_p[:, 1:-1] = g[:, :-1] - g[:, 1:]
    cell_p[:, -1] = g[:, -1]
    tx_bits = cm.level_bits[tx_idx]                       # (n, kd)
    wrong = cm.level_bits[None, :, :] != tx_bits[:, None, :]  # (n, m, kd)
    return np.einsum("nm,nmk->n", cell_p, wrong)


def bit_error_probability(rx_point, tx_point, M, sigma_per_dim):
    """Probability that AWGN of the given per-dimension std flips each Gray
    bit, averaged over the symbol's bits.

    rx_point is the noiseless demapper input; tx_point identifies the
    transmitted constellation point (its bits are the reference).
    """
    res = bit_error_probabilities(np.atleast_1d(np.asarray(rx_point)),
                                  np.atleast_1d(np.asarray(tx_point)),
                                  M, sigma_per_dim)
    return float(res[0])


def bit_error_probabilities(rx_points, tx_points, M, sigma_per_dim):
    """Vectorized form of :func:`bit_error_probability`."""
    cm = constellation(M)
    rx = np.asarray(rx_points, dtype=np.complex128)
    tx = np.asarray(tx_points, dtype=np.complex128)
    sigma = np.asarray(sigma_per_dim, dtype=np.float64)
    if np.any(sigma < 0):
        raise ModemError("sigma must be non-negative")
    tx_i = np.argmin(np.abs(tx.real[:, None] - cm.levels[None, :]), axis=1)
    tx_q = np.argmin(np.abs(tx.imag[:, None] - cm.levels[None, :]), axis=1)
    if np.all(sigma == 0):
        rx_bits = qam_demodulate(rx, M).reshape(len(rx), -1)
        tx_bits = np.concatenate([cm.level_bits[tx_i], cm.level_bits[tx_q]],
                                 axis=1)
        return np.mean(rx_bits != tx_bits, axis=1)
    sigma = np.maximum(sigma, 1e-300)
    errs = (_dim_bit_error(rx.real, tx_i, sigma, cm)
            + _dim_bit_error(rx.imag, tx_q, sigma, cm))
    return errs / cm.bits_per_symbol


def qam_ber_awgn(M: int, ebn0_lin):
    """Exact Gray-coded square M-QAM BER over AWGN (closed-form series)."""
    gamma = np.asarray(ebn0_lin, dtype=np.float64)
    m = int(np.sqrt(M))
    kd = int(np.log2(m))
    k = 2 * kd
    total = np.zeros_like(gamma)
    for kk in range(1, kd + 1):
        upper = int((1 - 2.0 ** (-kk)) * m)
        for i in range(upper):
            sgn = (-1) ** ((i * 2 ** (kk - 1)) // m)
            wgt = int(2 ** (kk - 1) - np.floor(i * 2 ** (kk - 1) / m + 0.5))
            total = total + sgn * wgt * qfunc(
                (2 * i + 1) * np.sqrt(3.0 * k * gamma / (M - 1)))
    return (2.0 / (m * kd)) * total
