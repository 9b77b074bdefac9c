"""Command-line front end: scenario ingestion, experiment orchestration and
CSV/JSON result emission.

Sub-commands:
  psd    build one composite burst and write its Welch PSD
  ber    BER curves per sub-band (Monte Carlo or semi-analytic)
  sweep  Eb/N0 at a target BER versus sub-band separation in resource blocks

Every run writes a manifest JSON next to its outputs; re-running with the
same scenario and seed reproduces the CSV byte for byte.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__
from .config import (ConfigError, PRESETS, ScenarioConfig, get_preset,
                     load_scenario, scenario_hash, with_gap, F0_HZ)
from .link import LinkError, calibrate
from .metrics import (MetricsError, ebn0_for_target, monte_carlo_ber,
                      semianalytic_ber, semianalytic_run, welch_psd)
from .modem import qam_modulate
from .waveform import build_composite, payload_symbols

EXIT_OK = 0
EXIT_COMPUTE = 1
EXIT_CONFIG = 2

PSD_MIN_SYMBOLS = 64


def _fmt(x):
    if isinstance(x, float):
        return format(x, ".12g")
    return str(x)


def _write_csv(path, header, rows):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")


def _write_manifest(out_path, command, sc, seed, outputs):
    out_path = Path(out_path)
    manifest = {
        "command": command,
        "scenario_hash": scenario_hash(sc),
        "seed": int(seed),
        "tool_version": __version__,
        "outputs": [str(p) for p in outputs],
    }
    path = out_path.with_suffix(out_path.suffix + ".manifest.json")
    tmp = path.with_suffix(".tmp")
    with open(tmp, "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    os.replace(tmp, path)
    return path


def _load_scenario_arg(name, waveform=None, mod_order=None, seed=None,
                       n_symbols=None) -> ScenarioConfig:
    if name in PRESETS:
        kwargs = {}
        if name != "bypass" and waveform is not None:
            kwargs["waveform"] = waveform
        if mod_order is not None:
            kwargs["mod_order"] = mod_order
        if seed is not None:
            kwargs["seed"] = seed
        if n_symbols is not None:
            kwargs["n_symbols"] = n_symbols
        sc = get_preset(name, **kwargs)
        if name == "bypass" and waveform not in (None, "cp-ofdm"):
            raise ConfigError("the bypass preset is CP-OFDM only")
        return sc
    path = Path(name)
    if not path.exists():
        raise FileNotFoundError(f"scenario file not found: {path}")
    sc = load_scenario(path)
    updates = {}
    if waveform is not None:
        updates["waveform"] = waveform
    if mod_order is not None:
        updates["mod_order"] = mod_order
    if seed is not None:
        updates["seed"] = seed
    if n_symbols is not None:
        updates["n_symbols"] = n_symbols
    return replace(sc, **updates) if updates else sc


def _parse_grid(spec):
    """'a:step:b' inclusive Eb/N0 grid."""
    parts = spec.split(":")
    if len(parts) != 3:
        raise ConfigError(f"grid must be a:step:b, got {spec!r}")
    a, step, b = (float(p) for p in parts)
    if step <= 0 or b < a:
        raise ConfigError(f"bad grid {spec!r}")
    n = int(round((b - a) / step))
    return [a + k * step for k in range(n + 1)]


def _parse_m_range(spec):
    """'a..b' or a single integer."""
    if ".." in spec:
        a, b = spec.split("..", 1)
        lo, hi = int(a), int(b)
    else:
        lo = hi = int(spec)
    if not (0 <= lo <= hi <= 8):
        raise ConfigError(f"m range must lie within 0..8, got {spec!r}")
    return list(range(lo, hi + 1))


def cmd_psd(args):
    sc = _load_scenario_arg(args.scenario, args.waveform, args.mod, args.seed,
                            n_symbols=max(args.symbols or 0, PSD_MIN_SYMBOLS))
    rng = np.random.default_rng(np.random.SeedSequence(sc.seed,
                                                       spawn_key=(0x5D,)))
    k = int(np.log2(sc.mod_order))
    payloads = [qam_modulate(rng.integers(0, 2, k * payload_symbols(sc, i),
                                          dtype=np.uint8), sc.mod_order)
                for i in range(len(sc.subbands))]
    sig, _ = build_composite(sc, payloads)
    curve = welch_psd(sig)
    rows = zip(curve.freq_hz.tolist(), curve.psd_db.tolist())
    _write_csv(args.out, ["freq_hz", "psd_db"], rows)
    manifest = _write_manifest(args.out, "psd", sc, sc.seed, [args.out])
    print(f"wrote {args.out} ({len(curve.freq_hz)} bins, "
          f"resolution {curve.resolution_hz:.0f} Hz) and {manifest}")
    return EXIT_OK


def cmd_ber(args):
    sc = _load_scenario_arg(args.scenario, args.waveform, args.mod, args.seed,
                            n_symbols=args.symbols)
    grid = _parse_grid(args.ebn0)
    method = {"mc": "monte-carlo", "sa": "semi-analytic"}[args.method]
    rows = []
    for i in range(len(sc.subbands)):
        cal = calibrate(sc, i)
        if method == "semi-analytic":
            run = semianalytic_run(sc, i, cal)
        for db in grid:
            if method == "monte-carlo":
                pt = monte_carlo_ber(sc, i, db, cal=cal)
            else:
                pt = semianalytic_ber(sc, i, db, cal=cal)
            rows.append((i + 1, pt.ebn0_db, pt.ber, pt.method, pt.n_bits,
                         pt.n_errors))
    _write_csv(args.out, ["band", "ebn0_db", "ber", "method", "n_bits",
                          "n_errors"], rows)
    manifest = _write_manifest(args.out, "ber", sc, sc.seed, [args.out])
    print(f"wrote {args.out} ({len(rows)} points) and {manifest}")
    return EXIT_OK


def _sweep_point(sc_m: ScenarioConfig, band: int, m: int, target: float,
                 seed: int):
    try:
        run = semianalytic_run(sc_m, band, seed=seed)
        return m, ebn0_for_target(run, target)
    except MetricsError:
        return m, float("nan")


def cmd_sweep(args):
    waveforms = args.waveform.split(",") if args.waveform else ["cp-ofdm",
                                                                "f-ofdm",
                                                                "w-ofdm"]
    m_values = _parse_m_range(args.m)
    base = _load_scenario_arg(args.scenario, None, args.mod, args.seed,
                              n_symbols=args.symbols)
    band = (args.band if args.band is not None else len(base.subbands)) - 1
    if not (0 <= band < len(base.subbands)):
        raise ConfigError(f"band {args.band} out of range")
    jobs = []
    for wf in waveforms:
        sc = replace(base, waveform=wf)
        for m in m_values:
            jobs.append((wf, with_gap(sc, 12.0 * m * F0_HZ), m))
    if args.threads > 1:
        with ProcessPoolExecutor(max_workers=args.threads) as pool:
            futs = [pool.submit(_sweep_point, sc_m, band, m, args.target_ber,
                                sc_m.seed) for _, sc_m, m in jobs]
            results = [f.result() for f in futs]
    else:
        results = [_sweep_point(sc_m, band, m, args.target_ber, sc_m.seed)
                   for _, sc_m, m in jobs]
    rows = [(m, wf, base.mod_order, band + 1, val)
            for (wf, _, _), (m, val) in zip(jobs, results)]
    _write_csv(args.out, ["m", "waveform", "mod_order", "band", "ebn0_db"],
               rows)
    manifest = _write_manifest(args.out, "sweep", base, base.seed, [args.out])
    n_flagged = sum(1 for r in rows if np.isnan(r[4]))
    msg = f"wrote {args.out} ({len(rows)} points) and {manifest}"
    if n_flagged:
        msg += f"; {n_flagged} point(s) unreachable (NaN)"
    print(msg)
    return EXIT_OK


def _default_threads():
    try:
        return max(1, int(os.environ.get("MIXNUM_THREADS", "1")))
    except ValueError:
        return 1


def build_parser():
    p = argparse.ArgumentParser(
        prog="mixnum",
        description="Mixed-numerology OFDM downlink simulator "
                    "(CP-OFDM / f-OFDM / w-OFDM)")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, waveform_default=None):
        sp.add_argument("--scenario", required=True,
                        help="preset name (table1, single-band, bypass) or "
                             "JSON scenario path")
        sp.add_argument("--mod", type=int, choices=[4, 16, 64, 256],
                        default=None, help="modulation order")
        sp.add_argument("--seed", type=int, default=None)
        sp.add_argument("--symbols", type=int, default=None,
                        help="OFDM symbols in the slowest band")
        sp.add_argument("--threads", type=int, default=_default_threads())
        sp.add_argument("--out", required=True, help="output CSV path")

    sp = sub.add_parser("psd", help="composite-signal PSD")
    sp.add_argument("--waveform", choices=["cp-ofdm", "f-ofdm", "w-ofdm"])
    common(sp)
    sp.set_defaults(func=cmd_psd)

    sp = sub.add_parser("ber", help="BER curves per sub-band")
    sp.add_argument("--waveform", choices=["cp-ofdm", "f-ofdm", "w-ofdm"])
    sp.add_argument("--ebn0", required=True, help="grid a:step:b in dB")
    sp.add_argument("--method", choices=["mc", "sa"], default="sa")
    common(sp)
    sp.set_defaults(func=cmd_ber)

    sp = sub.add_parser("sweep", help="Eb/N0 at target BER vs separation")
    sp.add_argument("--waveform",
                    help="comma-separated list (default: all three)")
    sp.add_argument("--target-ber", type=float, default=0.05)
    sp.add_argument("--m", default="0..4", help="resource-block range a..b")
    sp.add_argument("--band", type=int, default=None,
                    help="1-based band to evaluate (default: last)")
    common(sp)
    sp.set_defaults(func=cmd_sweep)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, FileNotFoundError, OSError, json.JSONDecodeError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except (MetricsError, LinkError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_COMPUTE


if __name__ == "__main__":
    sys.exit(main())
