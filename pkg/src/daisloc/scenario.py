"""Scenario documents: plain-text key-value files describing one experiment.

A scenario has sections for the scene, the radio system, the spoofing
shift, the pilot seeds, and an optional baseline selector. Unknown sections
or keys are rejected by name. The built-in preset ``paper-v`` carries the
default two-scatterer evaluation setup.
"""

from __future__ import annotations

import configparser
import math
from pathlib import Path

import numpy as np

from .analysis import ExperimentConfig
from .config import SystemConfig
from .errors import ScenarioError
from .geometry import Scene, SpoofShift

_KNOWN_KEYS = {
    "scene": {"alice", "anchor"},  # plus scatterer_<i>
    "system": {
        "n_antennas", "n_subcarriers", "n_symbols", "carrier_hz", "bandwidth_hz",
        "light_speed_mps", "noise_std", "snr_db_grid",
    },
    "spoof": {"delta_tau_samples", "delta_theta"},
    "seeds": {"pilot_seeds"},
    "baseline": {"kind", "fpi_delta_tau_samples", "fpi_delta_theta"},
}

PRESETS: dict[str, dict[str, dict[str, str]]] = {
    "paper-v": {
        "scene": {
            "alice": "3, 0",
            "anchor": "10, 5",
            "scatterer_1": "8.87, -6.05",
            "scatterer_2": "7.44, 8.53",
        },
        "system": {
            "n_antennas": "16",
            "n_subcarriers": "16",
            "n_symbols": "16",
            "carrier_hz": "60e9",
            "bandwidth_hz": "30e6",
            "light_speed_mps": "3e8",
            "snr_db_grid": "-20:30:11",
        },
        "spoof": {
            "delta_tau_samples": "1",
            "delta_theta": "pi:0.25",
        },
        "seeds": {"pilot_seeds": "0:19"},
        "baseline": {"kind": "dais"},
    },
}


def _parse_float(text: str, where: str) -> float:
    try:
        return float(text)
    except ValueError:
        raise ScenarioError(f"{where}: cannot parse {text!r} as a number") from None


def _parse_angle(text: str, where: str) -> float:
    """Radians, or a multiple of pi written as ``pi:<factor>``."""
    text = text.strip()
    if text.startswith("pi:"):
        return math.pi * _parse_float(text[3:], where)
    return _parse_float(text, where)


def _parse_vec2(text: str, where: str) -> np.ndarray:
    parts = [p for p in text.replace(",", " ").split() if p]
    if len(parts) != 2:
        raise ScenarioError(f"{where}: expected two coordinates, got {text!r}")
    return np.array([_parse_float(p, where) for p in parts])


def _parse_float_list(text: str, where: str) -> np.ndarray:
    """Comma list of numbers, or ``lo:hi:count`` for a linear grid."""
    text = text.strip()
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise ScenarioError(f"{where}: grid syntax is lo:hi:count, got {text!r}")
        lo = _parse_float(parts[0], where)
        hi = _parse_float(parts[1], where)
        count = int(_parse_float(parts[2], where))
        if count < 1:
            raise ScenarioError(f"{where}: grid count must be >= 1, got {count}")
        return np.linspace(lo, hi, count)
    values = [p for p in text.split(",") if p.strip()]
    if not values:
        raise ScenarioError(f"{where}: empty list")
    return np.array([_parse_float(p, where) for p in values])


def _parse_seed_list(text: str, where: str) -> tuple[int, ...]:
    """Comma list of integers, or ``first:last`` inclusive."""
    text = text.strip()
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 2:
            raise ScenarioError(f"{where}: seed range syntax is first:last, got {text!r}")
        first, last = (int(_parse_float(p, where)) for p in parts)
        if last < first:
            raise ScenarioError(f"{where}: empty seed range {text!r}")
        return tuple(range(first, last + 1))
    values = [p for p in text.split(",") if p.strip()]
    if not values:
        raise ScenarioError(f"{where}: empty seed list")
    return tuple(int(_parse_float(p, where)) for p in values)


def _check_keys(sections: dict[str, dict[str, str]]) -> None:
    for section, keys in sections.items():
        if section not in _KNOWN_KEYS:
            raise ScenarioError(f"unknown scenario section [{section}]")
        for key in keys:
            if key in _KNOWN_KEYS[section]:
                continue
            if section == "scene" and key.startswith("scatterer_"):
                suffix = key[len("scatterer_"):]
                if suffix.isdigit() and int(suffix) >= 1:
                    continue
            raise ScenarioError(f"unknown key {key!r} in scenario section [{section}]")


def scenario_from_sections(sections: dict[str, dict[str, str]]) -> ExperimentConfig:
    """Validate raw section/key text and build an experiment configuration."""
    _check_keys(sections)
    for required in ("scene", "system", "seeds"):
        if required not in sections:
            raise ScenarioError(f"missing scenario section [{required}]")

    scene_sec = sections["scene"]
    for required in ("alice", "anchor"):
        if required not in scene_sec:
            raise ScenarioError(f"missing key {required!r} in [scene]")
    scatterer_keys = sorted(
        (k for k in scene_sec if k.startswith("scatterer_")),
        key=lambda k: int(k.split("_")[1]),
    )
    indices = [int(k.split("_")[1]) for k in scatterer_keys]
    if indices != list(range(1, len(indices) + 1)):
        raise ScenarioError("scatterer_<i> keys must be numbered 1..K without gaps")
    scene = Scene(
        alice_pos=_parse_vec2(scene_sec["alice"], "[scene] alice"),
        anchor_pos=_parse_vec2(scene_sec["anchor"], "[scene] anchor"),
        scatterer_pos=np.array(
            [_parse_vec2(scene_sec[k], f"[scene] {k}") for k in scatterer_keys]
        ).reshape(-1, 2),
    )

    system_sec = sections["system"]
    for required in ("n_antennas", "n_subcarriers", "n_symbols", "carrier_hz", "bandwidth_hz"):
        if required not in system_sec:
            raise ScenarioError(f"missing key {required!r} in [system]")
    system = SystemConfig(
        n_antennas=int(_parse_float(system_sec["n_antennas"], "[system] n_antennas")),
        n_subcarriers=int(_parse_float(system_sec["n_subcarriers"], "[system] n_subcarriers")),
        n_symbols=int(_parse_float(system_sec["n_symbols"], "[system] n_symbols")),
        carrier_hz=_parse_float(system_sec["carrier_hz"], "[system] carrier_hz"),
        bandwidth_hz=_parse_float(system_sec["bandwidth_hz"], "[system] bandwidth_hz"),
        light_speed_mps=_parse_float(system_sec.get("light_speed_mps", "3e8"),
                                     "[system] light_speed_mps"),
        noise_std=_parse_float(system_sec.get("noise_std", "1.0"), "[system] noise_std"),
    )
    if "snr_db_grid" in system_sec:
        snr_grid = _parse_float_list(system_sec["snr_db_grid"], "[system] snr_db_grid")
    else:
        snr_grid = np.array([0.0])

    spoof_sec = sections.get("spoof", {})
    delta_tau = _parse_float(spoof_sec.get("delta_tau_samples", "0"),
                             "[spoof] delta_tau_samples") * system.sample_period_s
    delta_theta = _parse_angle(spoof_sec.get("delta_theta", "0"), "[spoof] delta_theta")
    shift = SpoofShift(delta_tau=delta_tau, delta_theta=delta_theta)

    seeds = _parse_seed_list(sections["seeds"]["pilot_seeds"], "[seeds] pilot_seeds")

    baseline_sec = sections.get("baseline", {})
    kind = baseline_sec.get("kind", "dais").strip().lower()
    if kind not in ("none", "dais", "fpi"):
        raise ScenarioError(f"[baseline] kind must be none, dais, or fpi, got {kind!r}")
    fpi_tau = _parse_float(baseline_sec.get("fpi_delta_tau_samples", "0"),
                           "[baseline] fpi_delta_tau_samples") * system.sample_period_s
    fpi_theta = _parse_angle(baseline_sec.get("fpi_delta_theta", "0"),
                             "[baseline] fpi_delta_theta")

    return ExperimentConfig(
        scene=scene,
        system=system,
        shift=shift,
        snr_grid_db=snr_grid,
        pilot_seeds=seeds,
        scheme=kind,
        fpi_delta_tau_s=fpi_tau,
        fpi_delta_theta_rad=fpi_theta,
    )


def scenario_from_text(text: str) -> ExperimentConfig:
    parser = configparser.ConfigParser(interpolation=None)
    try:
        parser.read_string(text)
    except configparser.Error as err:
        raise ScenarioError(f"cannot parse scenario: {err}") from None
    sections = {name: dict(parser[name]) for name in parser.sections()}
    return scenario_from_sections(sections)


def load_scenario(path) -> ExperimentConfig:
    path = Path(path)
    if not path.exists():
        raise ScenarioError(f"scenario file not found: {path}")
    return scenario_from_text(path.read_text(encoding="utf-8"))


def preset_config(name: str) -> ExperimentConfig:
    if name not in PRESETS:
        raise ScenarioError(f"unknown preset {name!r}; available: {sorted(PRESETS)}")
    return scenario_from_sections({s: dict(kv) for s, kv in PRESETS[name].items()})
