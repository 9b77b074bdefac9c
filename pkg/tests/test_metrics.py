import numpy as np
import pytest

from mixnum import config
from mixnum.dsp import ComplexSignal
from mixnum.link import calibrate
from mixnum.metrics import (MetricsError, SemiAnalyticRun, ebn0_at_target_ber,
                            ebn0_for_target, evm_db, monte_carlo_ber,
                            semianalytic_ber, semianalytic_run, welch_psd)
from mixnum.modem import qam_ber_awgn, qfunc


class TestWelchPsd:
    def test_tone_peaks_at_its_frequency(self):
        fs = 1e6
        n = np.arange(2 ** 16)
        f_tone = 125e3
        sig = ComplexSignal(np.exp(2j * np.pi * f_tone * n / fs), fs)
        curve = welch_psd(sig)
        peak_f = curve.freq_hz[np.argmax(curve.psd_db)]
        assert abs(peak_f - f_tone) <= curve.resolution_hz
        floor = np.median(curve.psd_db)
        assert curve.psd_db.max() - floor > 30

    def test_white_noise_level_and_flatness(self):
        rng = np.random.default_rng(0)
        fs = 2e6
        var = 4.0
        x = np.sqrt(var / 2) * (rng.standard_normal(2 ** 18)
                                + 1j * rng.standard_normal(2 ** 18))
        curve = welch_psd(ComplexSignal(x, fs))
        level = curve.peak_db + curve.psd_db  # absolute dB re 1/Hz
        expect = 10 * np.log10(var / fs)
        assert np.all(np.abs(level - expect) < 2.5)
        assert abs(np.mean(level) - expect) < 0.1

    def test_superposition_of_disjoint_bands(self):
        rng = np.random.default_rng(1)
        fs = 1e6
        n = np.arange(2 ** 16)

        def narrowband(f):
            x = rng.standard_normal(len(n)) + 1j * rng.standard_normal(len(n))
            from scipy.signal import firwin, lfilter
            x = lfilter(firwin(129, 0.02), 1.0, x)
            return x * np.exp(2j * np.pi * f * n / fs)

        a, b = narrowband(-200e3), narrowband(200e3)

        def band_max(sig, lo, hi):
            c = welch_psd(ComplexSignal(sig, fs))
            absolute = c.peak_db + c.psd_db
            sel = (c.freq_hz >= lo) & (c.freq_hz <= hi)
            return absolute[sel].max()

        both_lo = band_max(a + b, -220e3, -180e3)
        alone_lo = band_max(a, -220e3, -180e3)
        assert abs(both_lo - alone_lo) < 0.5

    def test_short_signal_rejected(self):
        with pytest.raises(MetricsError):
            welch_psd(ComplexSignal(np.zeros(100), 1e6))

    def test_resolution(self):
        sig = ComplexSignal(np.ones(2 ** 14), 61.44e6)
        assert welch_psd(sig).resolution_hz == pytest.approx(61.44e6 / 4096)


class TestEvm:
    def test_identical_hits_floor(self):
        x = np.ones(10) + 1j
        assert evm_db(x, x) == -300.0

    def test_zero_rx_is_zero_db(self):
        x = np.ones(16) * (1 + 1j)
        assert evm_db(np.zeros(16), x) == pytest.approx(0.0)

    def test_known_offset(self):
        ref = np.ones(100)
        rx = ref + 0.1
        assert evm_db(rx, ref) == pytest.approx(-20.0)

    def test_length_mismatch_rejected(self):
        with pytest.raises(MetricsError):
            evm_db(np.ones(3), np.ones(4))

    def test_zero_reference_rejected(self):
        with pytest.raises(MetricsError):
            evm_db(np.ones(4), np.zeros(4))


@pytest.fixture(scope="module")
def bypass_run():
    sc = config.bypass_scenario(n_symbols=8, seed=3)
    cal = calibrate(sc, 0)
    return sc, cal, semianalytic_run(sc, 0, cal)


class TestSemiAnalytic:
    def test_monotone_in_ebn0(self, bypass_run):
        _, _, run = bypass_run
        grid = np.arange(-2.0, 10.0, 1.0)
        bers = [run.ber(db) for db in grid]
        assert all(a > b for a, b in zip(bers[:-1], bers[1:]))

    def test_bypass_matches_closed_form(self, bypass_run):
        # the distortionless chain must reproduce the analytic QPSK curve
        _, _, run = bypass_run
        for db in (0.0, 2.0, 4.0):
            gamma = 10 ** (db / 10)
            assert run.ber(db) == pytest.approx(
                float(qam_ber_awgn(4, gamma)), rel=0.03)

    def test_deterministic(self):
        sc = config.single_band_scenario(n_symbols=4, seed=7)
        a = semianalytic_ber(sc, 0, 3.0)
        b = semianalytic_ber(sc, 0, 3.0)
        assert a.ber == b.ber
        assert a.method == "semi-analytic"

    def test_run_reuse_matches_one_shot(self, bypass_run):
        sc, cal, run = bypass_run
        assert semianalytic_ber(sc, 0, 5.0, cal=cal).ber == run.ber(5.0)


class TestMonteCarlo:
    def test_bypass_matches_qfunc(self):
        sc = config.bypass_scenario(n_symbols=8, seed=3)
        cal = calibrate(sc, 0)
        pt = monte_carlo_ber(sc, 0, 2.0, cal=cal)
        gamma = 10 ** (2.0 / 10)
        expect = float(qfunc(np.sqrt(2 * gamma)))
        se = np.sqrt(expect * (1 - expect) / pt.n_bits)
        assert pt.n_errors >= 100
        assert abs(pt.ber - expect) < 3 * se

    def test_deterministic(self):
        sc = config.bypass_scenario(n_symbols=4, seed=5)
        cal = calibrate(sc, 0)
        a = monte_carlo_ber(sc, 0, 1.0, cal=cal)
        b = monte_carlo_ber(sc, 0, 1.0, cal=cal)
        assert (a.ber, a.n_bits, a.n_errors) == (b.ber, b.n_bits, b.n_errors)

    def test_max_bits_cap_and_note(self):
        sc = config.bypass_scenario(n_symbols=4, seed=5)
        cal = calibrate(sc, 0)
        pt = monte_carlo_ber(sc, 0, 30.0, cal=cal, max_bits=2000)
        assert pt.n_bits <= 1440 * 2  # one trial of 4 symbols, rounded up
        assert pt.n_errors == 0
        assert pt.ber == 0.0
        assert pt.note == "upper-bound only"

    def test_agrees_with_semianalytic(self):
        sc = config.single_band_scenario(waveform="f-ofdm", n_symbols=8,
                                         seed=4)
        cal = calibrate(sc, 0)
        sa = semianalytic_ber(sc, 0, 2.0, cal=cal).ber
        mc = monte_carlo_ber(sc, 0, 2.0, cal=cal)
        assert abs(sa - mc.ber) / mc.ber < 0.1


class TestTargetSearch:
    def test_distortionless_qpsk_threshold(self):
        # Q(sqrt(2 gamma)) = 0.05 at Eb/N0 = 1.3125 dB
        sc = config.single_band_scenario(n_symbols=8, seed=11)
        run = semianalytic_run(sc, 0)
        assert ebn0_for_target(run, 0.05) == pytest.approx(1.3125, abs=0.05)

    def test_unbracketed_target_raises(self, bypass_run):
        _, _, run = bypass_run
        with pytest.raises(MetricsError):
            ebn0_for_target(run, 0.4999)  # above ber at the -5 dB edge

    def test_sweep_structure(self):
        sc = config.table1_scenario(waveform="cp-ofdm", n_symbols=4, seed=11)
        out = ebn0_at_target_ber(sc, 1, target=0.05, m_grid=range(2))
        assert [m for m, _ in out] == [0, 1]
        assert all(np.isfinite(v) for _, v in out)
        # wider separation cannot make things worse
        assert out[1][1] <= out[0][1] + 0.02

    def test_bad_target_rejected(self):
        sc = config.single_band_scenario(n_symbols=4)
        with pytest.raises(MetricsError):
            ebn0_at_target_ber(sc, 0, target=0.7)
