import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mixnum import config
from mixnum.config import ScenarioConfig, SubbandNumerology, composite_rate
from mixnum.dsp import design_subband_filter, wofdm_window
from mixnum.modem import qam_modulate, random_bits
from mixnum.waveform import (SubcarrierGrid, WaveformError, build_burst,
                             build_composite, build_cp_ofdm, build_f_ofdm,
                             build_w_ofdm, compose, export_signal,
                             extract_from_grid, map_to_subcarriers,
                             payload_symbols, used_subcarrier_bins)


def small_band(**kw):
    base = dict(n_fft=64, n_cp=8, scs_hz=15e3, n_used=24, n_guard=0,
                filter_len=33, transition_hz=15e3)
    base.update(kw)
    return SubbandNumerology(**base)


def payload(nm, n_sym, seed=0, M=4):
    bits = random_bits(seed, n_sym * nm.n_used * int(np.log2(M))).bits
    return qam_modulate(bits, M)


class TestSubcarrierMapping:
    def test_used_bins_centered_on_dc(self):
        bins = used_subcarrier_bins(16, 4)
        np.testing.assert_array_equal(bins, [14, 15, 0, 1])

    def test_round_trip(self):
        nm = small_band()
        qam = payload(nm, 3)
        grid = map_to_subcarriers(qam, nm)
        np.testing.assert_array_equal(extract_from_grid(grid), qam)

    def test_unused_bins_are_zero(self):
        nm = small_band()
        grid = map_to_subcarriers(payload(nm, 2), nm)
        unused = np.setdiff1d(np.arange(nm.n_fft), grid.used_mask)
        assert np.all(grid.symbols[:, unused] == 0)

    def test_indivisible_payload_rejected(self):
        nm = small_band()
        with pytest.raises(WaveformError):
            map_to_subcarriers(np.ones(25), nm)


class TestCpOfdm:
    def test_length_formula(self):
        nm = SubbandNumerology(n_fft=1024, n_cp=64, scs_hz=15e3, n_used=180)
        sig, meta = build_burst(payload(nm, 3), nm, "cp-ofdm")
        assert len(sig) == 3 * (1024 + 64) == 3264
        assert meta.total_len == 3264 and meta.leading_delay == 0

    def test_cyclic_prefix_is_cyclic(self):
        nm = small_band()
        sig, meta = build_burst(payload(nm, 4), nm, "cp-ofdm")
        stride = meta.samples_per_symbol_stride
        for k in range(4):
            sym = sig.samples[k * stride:(k + 1) * stride]
            np.testing.assert_allclose(sym[:nm.n_cp], sym[-nm.n_cp:],
                                       atol=1e-15)

    def test_fft_recovers_grid(self):
        nm = small_band()
        qam = payload(nm, 2)
        sig, meta = build_burst(qam, nm, "cp-ofdm")
        stride = meta.samples_per_symbol_stride
        rec = []
        for k in range(2):
            win = sig.samples[k * stride + nm.n_cp:(k + 1) * stride]
            rec.append(np.fft.fft(win)[used_subcarrier_bins(nm.n_fft,
                                                            nm.n_used)])
        np.testing.assert_allclose(np.concatenate(rec), qam, atol=1e-12)

    @settings(max_examples=15, deadline=None)
    @given(n_sym=st.integers(1, 6), n_cp=st.integers(0, 16))
    def test_length_property(self, n_sym, n_cp):
        nm = small_band(n_cp=n_cp)
        sig, _ = build_burst(payload(nm, n_sym), nm, "cp-ofdm")
        assert len(sig) == n_sym * (nm.n_fft + n_cp)


class TestFOfdm:
    def test_length_and_delay(self):
        nm = small_band()
        sig, meta = build_burst(payload(nm, 3), nm, "f-ofdm")
        assert len(sig) == 3 * (64 + 8) + 33 - 1
        assert meta.leading_delay == 16

    def test_is_filtered_cp_ofdm(self):
        nm = small_band()
        qam = payload(nm, 2)
        cp_sig, _ = build_burst(qam, nm, "cp-ofdm")
        f_sig, _ = build_burst(qam, nm, "f-ofdm")
        taps = design_subband_filter(nm.n_fft, nm.n_used, nm.r_subcarriers,
                                     nm.filter_len)
        np.testing.assert_allclose(
            f_sig.samples, np.convolve(cp_sig.samples, taps.taps), atol=1e-14)

    def test_oob_energy_reduced(self):
        nm = small_band(n_used=12, filter_len=63, transition_hz=30e3)
        qam = payload(nm, 16)
        cp_sig, _ = build_burst(qam, nm, "cp-ofdm")
        f_sig, _ = build_burst(qam, nm, "f-ofdm")

        def oob_power(x):
            spec = np.abs(np.fft.fft(x, 4096)) ** 2
            bins = np.fft.fftfreq(4096) * nm.n_fft
            return spec[np.abs(bins) > 12].sum()

        assert oob_power(f_sig.samples) < 0.1 * oob_power(cp_sig.samples)

    @settings(max_examples=10, deadline=None)
    @given(n_sym=st.integers(1, 5), half=st.integers(4, 40))
    def test_length_property(self, n_sym, half):
        nm = small_band(filter_len=2 * half + 1)
        sig, meta = build_burst(payload(nm, n_sym), nm, "f-ofdm")
        assert len(sig) == n_sym * (64 + 8) + 2 * half
        assert meta.leading_delay == half


class TestWOfdm:
    def test_length_formula(self):
        nm = small_band(n_prefix=4, n_transition=4)
        sig, meta = build_burst(payload(nm, 3), nm, "w-ofdm")
        assert len(sig) == 3 * (64 + 8) + 4 + 1
        assert meta.leading_delay == 0

    def test_toy_hand_construction(self):
        # N=16, Ng=4, prefix 2, transition 2, one symbol, built by hand
        nm = SubbandNumerology(n_fft=16, n_cp=4, scs_hz=15e3, n_used=12,
                               n_prefix=2, n_transition=2)
        qam = payload(nm, 1, seed=5)
        sig, _ = build_burst(qam, nm, "w-ofdm")
        grid = np.zeros(16, dtype=np.complex128)
        grid[used_subcarrier_bins(16, 12)] = qam
        t = np.fft.ifft(grid)
        ext = np.concatenate([t[-4:], t, t[:3]])       # 23 samples
        win = np.concatenate([[0.0, 0.0, 0.34], np.ones(17), [0.34, 0.0, 0.0]])
        np.testing.assert_allclose(sig.samples, ext * win, atol=1e-15)
        assert len(sig) == 1 * (16 + 4) + 2 + 1 == 23
        np.testing.assert_array_equal(sig.samples[:2], 0.0)
        np.testing.assert_array_equal(sig.samples[-2:], 0.0)

    def test_zero_transition_matches_cp_ofdm_windows(self):
        nm = small_band(n_prefix=4, n_transition=0)
        qam = payload(nm, 4)
        w_sig, w_meta = build_burst(qam, nm, "w-ofdm")
        cp_sig, _ = build_burst(qam, nm, "cp-ofdm")
        stride = w_meta.samples_per_symbol_stride
        for k in range(4):
            lo = k * stride + nm.n_cp
            np.testing.assert_allclose(w_sig.samples[lo:lo + nm.n_fft],
                                       cp_sig.samples[lo:lo + nm.n_fft],
                                       atol=1e-12)

    def test_overlap_add_stride(self):
        # consecutive symbols overlap by n_prefix + 1 samples
        nm = small_band(n_prefix=4, n_transition=2)
        sig2, _ = build_burst(payload(nm, 2), nm, "w-ofdm")
        sig1, _ = build_burst(payload(nm, 2)[:nm.n_used], nm, "w-ofdm")
        stride = nm.n_fft + nm.n_cp
        # first burst's contribution is intact before the overlap region
        np.testing.assert_allclose(sig2.samples[:stride],
                                   sig1.samples[:stride], atol=1e-15)

    def test_missing_prefix_rejected(self):
        nm = small_band()
        with pytest.raises(WaveformError):
            build_burst(payload(nm, 1), nm, "w-ofdm")

    @settings(max_examples=10, deadline=None)
    @given(n_sym=st.integers(1, 5), n_prefix=st.integers(1, 7))
    def test_length_property(self, n_sym, n_prefix):
        nm = small_band(n_prefix=n_prefix,
                        n_transition=2 * (n_prefix // 2))
        sig, _ = build_burst(payload(nm, n_sym), nm, "w-ofdm")
        assert len(sig) == n_sym * (64 + 8) + n_prefix + 1


class TestBuildBurst:
    def test_unknown_waveform(self):
        nm = small_band()
        with pytest.raises(WaveformError):
            build_burst(payload(nm, 1), nm, "ofdm")


class TestCompose:
    def test_single_band_identity(self):
        nm = small_band()
        sc = ScenarioConfig(subbands=(nm,), f1_hz=0.0, n_symbols=2)
        burst = build_burst(payload(nm, 2), nm, "cp-ofdm")
        out = compose([burst], sc)
        np.testing.assert_allclose(out.samples, burst[0].samples, atol=1e-15)

    def test_band_count_mismatch(self):
        nm = small_band()
        sc = ScenarioConfig(subbands=(nm, nm), n_symbols=2)
        burst = build_burst(payload(nm, 2), nm, "cp-ofdm")
        with pytest.raises(WaveformError):
            compose([burst], sc)

    def test_f_ofdm_group_delay_compensated(self):
        # symbol 0 of a filtered band must still start at composite sample 0
        nm = small_band(filter_len=33)
        sc = ScenarioConfig(subbands=(nm,), f1_hz=0.0, n_symbols=4)
        qam = payload(nm, 4)
        f_out = compose([build_burst(qam, nm, "f-ofdm")], sc)
        cp_out = compose([build_burst(qam, nm, "cp-ofdm")], sc)
        n = 4 * (nm.n_fft + nm.n_cp)
        err = np.sum(np.abs(f_out.samples[:n] - cp_out.samples[:n]) ** 2)
        ref = np.sum(np.abs(cp_out.samples[:n]) ** 2)
        # residual is only the filter's passband ripple
        assert 10 * np.log10(err / ref) < -20

    def test_disjoint_band_powers_add(self):
        sc = config.table1_scenario(n_symbols=4)
        sigs = []
        for i, nm in enumerate(sc.subbands):
            pl = payload(nm, config.symbols_per_band(sc, i), seed=i)
            sigs.append(build_burst(pl, nm, "cp-ofdm"))
        both = compose(sigs, sc)
        p_sum = 0.0
        for i in range(3):
            solo = [
                (type(sigs[k][0])(np.zeros_like(sigs[k][0].samples),
                                  sigs[k][0].rate_hz), sigs[k][1])
                if k != i else sigs[k] for k in range(3)]
            p_sum += np.sum(np.abs(compose(solo, sc).samples) ** 2)
        p_both = np.sum(np.abs(both.samples) ** 2)
        assert 10 * abs(np.log10(p_both / p_sum)) < 0.1

    def test_composite_rate(self):
        sc = config.table1_scenario(n_symbols=1)
        payloads = [payload(nm, config.symbols_per_band(sc, i), seed=i)
                    for i, nm in enumerate(sc.subbands)]
        sig, metas = build_composite(sc, payloads)
        assert sig.rate_hz == composite_rate(sc) == 61.44e6
        assert len(metas) == 3


class TestPayloadSymbols:
    def test_table1_counts(self):
        sc = config.table1_scenario(n_symbols=8)
        assert [payload_symbols(sc, i) for i in range(3)] == [
            16 * 180, 32 * 180, 8 * 180]


class TestExport:
    def test_round_trip(self, tmp_path):
        sc = config.single_band_scenario(n_symbols=1)
        nm = sc.subbands[0]
        sig, _ = build_burst(payload(nm, config.symbols_per_band(sc, 0)),
                             nm, "cp-ofdm")
        path = tmp_path / "iq.bin"
        export_signal(path, sig, sc)
        raw = np.fromfile(path, dtype="<f8")
        rec = raw[0::2] + 1j * raw[1::2]
        np.testing.assert_array_equal(rec, sig.samples)
        sidecar = json.loads((tmp_path / "iq.bin.json").read_text())
        assert sidecar["n_samples"] == len(sig)
        assert sidecar["rate_hz"] == sig.rate_hz
