"""Experiment runner: simulate | measure-pn | sweep-k | stream.

Configuration is a single JSON document validated on load; unknown keys are
rejected. Exit codes: 0 success, 1 configuration error, 2 runtime error.
"""

from __future__ import annotations

import argparse
import copy
import json
import math
import sys
from pathlib import Path

import numpy as np

from .channel import (ChannelConfig, PhaseNoiseConfig, PhaseNoiseModel,
                      single_tone_probe)
from .link import aggregate_evm_db, frame_bits_rng, frame_channel_cfg, run_frame
from .linklayer import stream_bytes
from .metrics import (gaussian_fit, extract_tone_phase, phase_pdf, psd_welch,
                      wrap_phase, write_phase_pdf_csv, write_psd_csv,
                      write_series_csv)
from .modulation import Modulation
from .ofdm import OfdmConfig, build_plan, frame_capacity_bits


class ConfigError(Exception):
    pass


DEFAULT_CONFIG = {
    "phy": {
        "n_fft": 64,
        "cp_len": 16,
        "sample_rate_hz": 25.0e6,
        "k_guard": 3,
        "used_band": 26,
    },
    "channel": {
        "taps": [1.0],
        "snr_db": 35.0,
        "cfo_hz": 0.0,
        "sigma": 0.26,
        "bandwidth_hz": 1.0e6,
        "phase_noise_model": "filtered_gaussian",
    },
    "modulation": "qpsk",
    "n_frames": 200,
    "n_payload_symbols": 12,
    "pnc_enabled": True,
    "seed": 0,
    "probe": {
        "tone_hz": None,
        "n_samples": 1_000_000,
    },
}


def _merge_config(defaults: dict, user: dict, path: str = "") -> dict:
    merged = copy.deepcopy(defaults)
    for key, value in user.items():
        where = f"{path}.{key}" if path else key
        if key not in defaults:
            raise ConfigError(f"unknown config key: {where}")
        if isinstance(defaults[key], dict):
            if not isinstance(value, dict):
                raise ConfigError(f"{where} must be an object")
            merged[key] = _merge_config(defaults[key], value, where)
        else:
            merged[key] = value
    return merged


def load_config(path, seed_override=None) -> dict:
    if path is None:
        user = {}
    else:
        try:
            with open(path) as fh:
                user = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: line {exc.lineno} column {exc.colno}: {exc.msg}")
        except OSError as exc:
            raise ConfigError(f"cannot read config: {exc}")
        if not isinstance(user, dict):
            raise ConfigError("config root must be a JSON object")
    cfg = _merge_config(DEFAULT_CONFIG, user)
    if seed_override is not None:
        cfg["seed"] = seed_override
    return cfg


def _require_number(cfg: dict, section: str, key: str, integer: bool = False):
    value = cfg[section][key] if section else cfg[key]
    where = f"{section}.{key}" if section else key
    kinds = (int,) if integer else (int, float)
    if isinstance(value, bool) or not isinstance(value, kinds):
        raise ConfigError(f"{where} must be {'an integer' if integer else 'a number'}")
    return value


def build_ofdm_config(cfg: dict) -> OfdmConfig:
    phy = cfg["phy"]
    for key in ("n_fft", "cp_len", "k_guard", "used_band"):
        _require_number(cfg, "phy", key, integer=True)
    _require_number(cfg, "phy", "sample_rate_hz")
    try:
        plan = build_plan(phy["n_fft"], phy["k_guard"], phy["used_band"])
        return OfdmConfig(plan=plan, cp_len=phy["cp_len"],
                          sample_rate_hz=float(phy["sample_rate_hz"]))
    except ValueError as exc:
        raise ConfigError(str(exc))


def _parse_taps(raw) -> tuple:
    if not isinstance(raw, list) or not raw:
        raise ConfigError("channel.taps must be a non-empty array")
    taps = []
    for item in raw:
        if isinstance(item, (int, float)) and not isinstance(item, bool):
            taps.append(complex(item))
        elif (isinstance(item, list) and len(item) == 2
              and all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in item)):
            taps.append(complex(item[0], item[1]))
        else:
            raise ConfigError("channel.taps entries must be numbers or [re, im] pairs")
    return tuple(taps)


def build_channel_config(cfg: dict, seed: int) -> ChannelConfig:
    ch = cfg["channel"]
    snr = ch["snr_db"]
    if snr is None:
        snr = math.inf
    elif isinstance(snr, bool) or not isinstance(snr, (int, float)):
        raise ConfigError("channel.snr_db must be a number or null")
    _require_number(cfg, "channel", "sigma")
    _require_number(cfg, "channel", "bandwidth_hz")
    _require_number(cfg, "channel", "cfo_hz")
    try:
        model = PhaseNoiseModel(ch["phase_noise_model"])
    except ValueError:
        raise ConfigError(
            f"channel.phase_noise_model must be one of "
            f"{[m.value for m in PhaseNoiseModel]}"
        )
    try:
        pn = PhaseNoiseConfig(sigma=float(ch["sigma"]),
                              bandwidth_hz=float(ch["bandwidth_hz"]), model=model)
        return ChannelConfig(taps=_parse_taps(ch["taps"]), snr_db=float(snr),
                             phase_noise=pn, cfo_hz=float(ch["cfo_hz"]), seed=seed,
                             sample_rate_hz=float(cfg["phy"]["sample_rate_hz"]))
    except ValueError as exc:
        raise ConfigError(str(exc))


def build_modulation(cfg: dict) -> Modulation:
    try:
        return Modulation(cfg["modulation"])
    except ValueError:
        raise ConfigError(
            f"modulation must be one of {[m.value for m in Modulation]}"
        )


def _validate_run_params(cfg: dict, ofdm_cfg: OfdmConfig) -> None:
    n_frames = _require_number(cfg, "", "n_frames", integer=True)
    n_sym = _require_number(cfg, "", "n_payload_symbols", integer=True)
    if n_frames < 0:
        raise ConfigError("n_frames must be >= 0")
    if n_sym < 1:
        raise ConfigError("n_payload_symbols must be >= 1")
    if not isinstance(cfg["pnc_enabled"], bool):
        raise ConfigError("pnc_enabled must be a boolean")
    _require_number(cfg, "", "seed", integer=True)
    taps = cfg["channel"]["taps"]
    if isinstance(taps, list) and len(taps) > ofdm_cfg.cp_len:
        import warnings
        warnings.warn(
            f"channel has {len(taps)} taps but cp_len={ofdm_cfg.cp_len}; "
            "inter-symbol interference will not be absorbed"
        )


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write_json(path: Path, obj) -> None:
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


def cmd_simulate(args) -> int:
    cfg = load_config(args.config, args.seed)
    ofdm_cfg = build_ofdm_config(cfg)
    modulation = build_modulation(cfg)
    _validate_run_params(cfg, ofdm_cfg)
    channel_cfg = build_channel_config(cfg, seed=cfg["seed"])
    out = _out_dir(args)

    n_frames = cfg["n_frames"]
    n_sym = cfg["n_payload_symbols"]
    capacity = frame_capacity_bits(ofdm_cfg, modulation, n_sym)
    rows = []
    points = []
    reports = []
    genie_err = 0.0
    residuals = []
    for i in range(n_frames):
        bits = frame_bits_rng(cfg["seed"], i).integers(0, 2, capacity, dtype=np.uint8)
        result = run_frame(bits, modulation, ofdm_cfg,
                           frame_channel_cfg(channel_cfg, cfg["seed"], i),
                           cfg["pnc_enabled"], n_sym)
        reports.append(result.report)
        rows.append((i, result.report.evm_db, result.report.residual_phase_std))
        points.append(result.report.points)
        if result.theta_est.size:
            d = wrap_phase(result.theta_true_bodies - result.theta_est)
            residuals.append(d - d.mean())

    write_series_csv(out / "evm.csv", ["frame", "evm_db", "residual_phase_std"],
                     [np.array([r[0] for r in rows], dtype=int),
                      np.array([r[1] for r in rows]),
                      np.array([r[2] for r in rows])])
    flat = np.concatenate(points) if points else np.zeros(0, dtype=complex)
    write_series_csv(out / "constellation.csv", ["re", "im"], [flat.real, flat.imag])

    all_res = np.concatenate(residuals) if residuals else np.zeros(0)
    genie = [r.evm_db_genie for r in reports if r.evm_db_genie is not None]
    summary = {
        "n_frames": n_frames,
        "n_payload_symbols": n_sym,
        "modulation": modulation.value,
        "pnc_enabled": cfg["pnc_enabled"],
        "seed": cfg["seed"],
        "k_guard": ofdm_cfg.plan.k_guard,
        "evm_db": aggregate_evm_db(reports),
        "evm_db_genie_mean": float(np.mean(genie)) if genie else None,
        "residual_phase_std": float(np.mean([r.residual_phase_std for r in reports]))
        if reports else None,
        "residual_phase_std_true": float(all_res.std()) if all_res.size else None,
        "n_erased": int(sum(r.n_erased for r in reports)),
    }
    _write_json(out / "summary.json", summary)
    print(f"simulate: {n_frames} frames, evm_db={summary['evm_db']}")
    return 0


def cmd_measure_pn(args) -> int:
    cfg = load_config(args.config, args.seed)
    ofdm_cfg = build_ofdm_config(cfg)
    channel_cfg = build_channel_config(cfg, seed=cfg["seed"])
    tone = cfg["probe"]["tone_hz"]
    if tone is None:
        tone = cfg["phy"]["sample_rate_hz"] / 8.0
    elif isinstance(tone, bool) or not isinstance(tone, (int, float)):
        raise ConfigError("probe.tone_hz must be a number or null")
    n_samples = _require_number(cfg, "probe", "n_samples", integer=True)
    if n_samples < 4096:
        raise ConfigError("probe.n_samples must be >= 4096 for the PSD estimate")
    out = _out_dir(args)

    y, _ = single_tone_probe(float(tone), n_samples, channel_cfg)
    phase = extract_tone_phase(y, float(tone), channel_cfg.sample_rate_hz)
    fit = gaussian_fit(phase)
    centers, density = phase_pdf(phase)
    psd = psd_welch(phase, channel_cfg.sample_rate_hz)

    write_phase_pdf_csv(centers, density, out / "pn_pdf.csv")
    write_psd_csv(psd, out / "pn_psd.csv")
    _write_json(out / "pn_fit.json", {
        "mean": fit.mean, "std": fit.std, "sample_count": fit.sample_count,
    })
    print(f"measure-pn: {n_samples} samples, fitted std={fit.std:.6g} rad")
    return 0


def cmd_sweep_k(args) -> int:
    cfg = load_config(args.config, args.seed)
    modulation = build_modulation(cfg)
    base_ofdm = build_ofdm_config(cfg)
    _validate_run_params(cfg, base_ofdm)
    channel_cfg = build_channel_config(cfg, seed=cfg["seed"])
    try:
        k_values = [int(v) for v in args.k_list.split(",") if v.strip() != ""]
    except ValueError:
        raise ConfigError(f"bad --k-list {args.k_list!r}: must be comma-separated integers")
    if not k_values:
        raise ConfigError("--k-list is empty")
    out = _out_dir(args)

    phy = cfg["phy"]
    results = []
    for k in k_values:
        try:
            plan = build_plan(phy["n_fft"], k, phy["used_band"])
        except ValueError as exc:
            raise ConfigError(str(exc))
        ofdm_cfg = OfdmConfig(plan=plan, cp_len=phy["cp_len"],
                              sample_rate_hz=float(phy["sample_rate_hz"]))
        capacity = frame_capacity_bits(ofdm_cfg, modulation, cfg["n_payload_symbols"])
        reports = []
        for i in range(cfg["n_frames"]):
            bits = frame_bits_rng(cfg["seed"], i).integers(0, 2, capacity, dtype=np.uint8)
            result = run_frame(bits, modulation, ofdm_cfg,
                               frame_channel_cfg(channel_cfg, cfg["seed"], i),
                               cfg["pnc_enabled"], cfg["n_payload_symbols"])
            reports.append(result.report)
        results.append((k, aggregate_evm_db(reports)))
        print(f"sweep-k: K={k} mean_evm_db={results[-1][1]}")

    write_series_csv(out / "ksweep.csv", ["k_guard", "mean_evm_db"],
                     [np.array([r[0] for r in results], dtype=int),
                      np.array([r[1] for r in results], dtype=float)])
    return 0


def cmd_stream(args) -> int:
    cfg = load_config(args.config, args.seed)
    ofdm_cfg = build_ofdm_config(cfg)
    modulation = build_modulation(cfg)
    _validate_run_params(cfg, ofdm_cfg)
    channel_cfg = build_channel_config(cfg, seed=cfg["seed"])
    out = _out_dir(args)

    if args.input == "-":
        data = sys.stdin.buffer.read()
    else:
        data = Path(args.input).read_bytes()

    recovered, report = stream_bytes(
        data, ofdm_cfg, channel_cfg, modulation,
        pnc_enabled=cfg["pnc_enabled"], seed=cfg["seed"],
        n_payload_symbols=cfg["n_payload_symbols"],
    )
    output = Path(args.output) if args.output else out / "recovered.bin"
    output.parent.mkdir(parents=True, exist_ok=True)
    output.write_bytes(recovered)
    _write_json(out / "stream_report.json", {
        "packets_sent": report.packets_sent,
        "packets_ok": report.packets_ok,
        "packets_crc_fail": report.packets_crc_fail,
        "per": report.per,
        "goodput_bits_per_channel_use": report.goodput_bits_per_channel_use,
        "mean_evm_db": report.mean_evm_db,
    })
    print(f"stream: {report.packets_sent} packets, per={report.per:.6g}, "
          f"mean_evm_db={report.mean_evm_db}")
    return 0


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", metavar="PATH", default=None,
                        help="JSON config (defaults used when omitted)")
    parser.add_argument("--seed", type=int, default=None, metavar="U64",
                        help="override the config seed")
    parser.add_argument("--out", metavar="DIR", default="out",
                        help="output directory (default: ./out)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mmwavelink",
        description="OFDM link simulator with pilot-aided phase noise cancellation",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="run frames, write evm.csv/constellation.csv/summary.json")
    _add_common(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("measure-pn", help="single-tone probe, write pn_pdf/pn_psd/pn_fit")
    _add_common(p)
    p.set_defaults(func=cmd_measure_pn)

    p = sub.add_parser("sweep-k", help="mean EVM versus guard bandwidth K, write ksweep.csv")
    _add_common(p)
    p.add_argument("--k-list", default="0,1,2,3,4,6,8", metavar="K0,K1,...",
                   help="comma-separated guard counts (default: 0,1,2,3,4,6,8)")
    p.set_defaults(func=cmd_sweep_k)

    p = sub.add_parser("stream", help="stream a file over the link, write stream_report.json")
    _add_common(p)
    p.add_argument("--input", default="-", metavar="PATH",
                   help="input file ('-' reads stdin; default)")
    p.add_argument("--output", default=None, metavar="PATH",
                   help="recovered bytes destination (default: <out>/recovered.bin)")
    p.set_defaults(func=cmd_stream)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
