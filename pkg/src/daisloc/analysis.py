"""Experiment orchestration: SNR sweeps, threshold search, serialization.

A sweep evaluates, per SNR point and pilot seed, the matched observer's
bound and the mismatched observer's bound for one scene and shift, then
aggregates across seeds by median. Rows serialize to CSV with a fixed
header or to an equivalent JSON document.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .config import SystemConfig
from .errors import DaisLocError, NoThresholdInBracket, ValidationError, ZeroSignal
from .fisher import channel_fim, effective_fim, localization_crb, mcrb, position_rmse
from .geometry import (
    Scene,
    SpoofShift,
    apply_dais_shift,
    classify_wrap_case,
    pseudo_true_scene,
)
from .signal import Precoder, generate_pilots, observation_mean, scene_channel_params

CSV_HEADER = (
    "snr_db,sigma,rmse_bob_m,rmse_eve_m,trace_psi1,trace_psi2,"
    "mismatch_distance_m,case_label,gap_db"
)

SCHEMES = ("none", "dais", "fpi")


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything one sweep needs: scene, radio config, shift, grid, seeds."""

    scene: Scene
    system: SystemConfig
    shift: SpoofShift
    snr_grid_db: np.ndarray
    pilot_seeds: tuple[int, ...]
    scheme: str = "dais"
    fpi_delta_tau_s: float = 0.0
    fpi_delta_theta_rad: float = 0.0
    out_path: Path | None = None

    def __post_init__(self):
        grid = np.asarray(self.snr_grid_db, dtype=float).reshape(-1)
        if grid.size == 0:
            raise ValidationError("SNR grid must contain at least one point")
        if grid.size > 1 and not np.all(np.diff(grid) > 0.0):
            raise ValidationError("SNR grid must be strictly increasing")
        object.__setattr__(self, "snr_grid_db", grid)
        seeds = tuple(int(s) for s in self.pilot_seeds)
        if not seeds:
            raise ValidationError("at least one pilot seed is required")
        object.__setattr__(self, "pilot_seeds", seeds)
        if self.scheme not in SCHEMES:
            raise ValidationError(f"scheme must be one of {SCHEMES}, got {self.scheme!r}")


@dataclass(frozen=True)
class SweepRow:
    """One SNR point of a sweep, seed-median aggregated."""

    snr_db: float
    sigma: float
    rmse_bob_m: float
    rmse_eve_m: float
    trace_psi1: float
    trace_psi2: float
    mismatch_distance_m: float
    case_label: str
    gap_db: float
    error: str | None = None


def calibrate_sigma_for_snr(target_snr_db: float, mean: np.ndarray) -> float:
    """Noise level that puts the given means at the target SNR exactly."""
    power = float(np.sum(np.abs(mean) ** 2))
    if power == 0.0:
        raise ZeroSignal("cannot calibrate SNR for an all-zero signal")
    return math.sqrt(power / mean.size) * 10.0 ** (-target_snr_db / 20.0)


def _sweep_precoder(config: ExperimentConfig) -> Precoder | None:
    if config.scheme == "dais":
        return Precoder.dais(config.shift)
    if config.scheme == "fpi":
        return Precoder.fpi(config.fpi_delta_tau_s, config.fpi_delta_theta_rad)
    return None


def _effective_shift(config: ExperimentConfig) -> SpoofShift:
    return config.shift if config.scheme == "dais" else SpoofShift(0.0, 0.0)


def run_sweep(config: ExperimentConfig) -> list[SweepRow]:
    """Evaluate both observers' bounds over the SNR grid.

    Per SNR point, per-seed results aggregate by median; a module error on
    one (snr, seed) pair marks the row instead of aborting the sweep. With
    the fake-path baseline only the matched observer's bound is defined
    here, so the mismatch columns come out as NaN.
    """
    scene = config.scene
    cfg = config.system
    shift = _effective_shift(config)
    precoder = _sweep_precoder(config)
    eve_enabled = config.scheme != "fpi"

    true_params = scene_channel_params(scene, cfg)
    shifted = apply_dais_shift(true_params, shift, cfg)
    case = str(classify_wrap_case(shifted)) if eve_enabled else "FPI"
    pseudo = None
    trace_psi2 = math.nan
    mismatch_distance = math.nan
    solve_error: str | None = None
    if eve_enabled:
        try:
            pseudo = pseudo_true_scene(shifted, scene.anchor_pos, cfg.light_speed_mps)
        except DaisLocError as err:
            # degenerate pseudo-true solve: mark every row, keep the matched side
            solve_error = f"{type(err).__name__}: {err}"
        else:
            mismatch_vec = np.concatenate([
                pseudo.alice_pos - scene.alice_pos,
                (pseudo.scatterer_pos - scene.scatterer_pos).ravel(),
            ])
            trace_psi2 = float(mismatch_vec @ mismatch_vec)
            mismatch_distance = float(np.linalg.norm(pseudo.alice_pos - scene.alice_pos))

    pilot_sets = {seed: generate_pilots(seed, cfg) for seed in config.pilot_seeds}
    means = {
        seed: observation_mean(true_params, pilots, precoder, cfg)
        for seed, pilots in pilot_sets.items()
    }

    rows: list[SweepRow] = []
    for snr in config.snr_grid_db:
        sigmas, bobs, eves, psi1s = [], [], [], []
        errors: list[str] = [solve_error] if solve_error else []
        for seed in config.pilot_seeds:
            pilots = pilot_sets[seed]
            try:
                sigma = calibrate_sigma_for_snr(snr, means[seed])
                cfg_sigma = cfg.with_noise_std(sigma)
                bob_pilots = pilots if precoder is None else pilots.with_precoder(precoder, cfg)
                j_eta_bob = effective_fim(channel_fim(true_params, bob_pilots, cfg_sigma))
                crb = localization_crb(j_eta_bob, scene, cfg_sigma)
                rmse_bob = position_rmse(crb)
                if eve_enabled and pseudo is not None:
                    bounds = mcrb(shifted, pseudo, scene, scene.anchor_pos, pilots, cfg_sigma)
                    rmse_eve = position_rmse(bounds.mcrb)
                    psi1 = float(np.trace(bounds.mcrb_part1))
                else:
                    rmse_eve = math.nan
                    psi1 = math.nan
            except DaisLocError as err:
                errors.append(f"seed {seed}: {type(err).__name__}: {err}")
                continue
            sigmas.append(sigma)
            bobs.append(rmse_bob)
            eves.append(rmse_eve)
            psi1s.append(psi1)
        if bobs:
            rmse_bob = float(np.median(bobs))
            rmse_eve = float(np.median(eves))
            gap = (
                20.0 * math.log10(rmse_eve / rmse_bob)
                if math.isfinite(rmse_eve) and rmse_bob > 0.0
                else math.nan
            )
            rows.append(SweepRow(
                snr_db=float(snr),
                sigma=float(np.median(sigmas)),
                rmse_bob_m=rmse_bob,
                rmse_eve_m=rmse_eve,
                trace_psi1=float(np.median(psi1s)),
                trace_psi2=trace_psi2,
                mismatch_distance_m=mismatch_distance,
                case_label=case,
                gap_db=gap,
                error="; ".join(errors) if errors else None,
            ))
        else:
            rows.append(SweepRow(
                snr_db=float(snr), sigma=math.nan, rmse_bob_m=math.nan,
                rmse_eve_m=math.nan, trace_psi1=math.nan, trace_psi2=trace_psi2,
                mismatch_distance_m=mismatch_distance, case_label=case,
                gap_db=math.nan, error="; ".join(errors),
            ))
    return rows


def _traces_at_sigma(context, sigma: float) -> tuple[float, float]:
    """Seed-median traces of the mismatched and matched bounds at one noise level."""
    scene, cfg, shifted, true_params, pseudo, precoder, pilot_sets = context
    psi, xi = [], []
    for pilots in pilot_sets:
        cfg_sigma = cfg.with_noise_std(sigma)
        bob_pilots = pilots if precoder is None else pilots.with_precoder(precoder, cfg)
        j_eta_bob = effective_fim(channel_fim(true_params, bob_pilots, cfg_sigma))
        crb = localization_crb(j_eta_bob, scene, cfg_sigma)
        bounds = mcrb(shifted, pseudo, scene, scene.anchor_pos, pilots, cfg_sigma)
        psi.append(float(np.trace(bounds.mcrb)))
        xi.append(float(np.trace(crb)))
    return float(np.median(psi)), float(np.median(xi))


def find_sigma0(config: ExperimentConfig, grid_points: int = 50) -> float:
    """Largest noise level up to which the mismatched bound dominates the matched one.

    Searches the noise bracket implied by the config's SNR grid: the
    inequality trace(mismatched) >= trace(matched) is checked on a geometric
    grid (monotonicity is observed, not assumed), then the crossing is
    bisected to relative width 1e-3. Returns the bracket's upper edge when
    the inequality never fails inside it.
    """
    scene = config.scene
    cfg = config.system
    shift = _effective_shift(config)
    precoder = _sweep_precoder(config)
    if config.scheme == "fpi":
        raise ValidationError("threshold search is undefined for the fake-path baseline")
    true_params = scene_channel_params(scene, cfg)
    shifted = apply_dais_shift(true_params, shift, cfg)
    pseudo = pseudo_true_scene(shifted, scene.anchor_pos, cfg.light_speed_mps)
    pilot_sets = [generate_pilots(seed, cfg) for seed in config.pilot_seeds]

    sig_of_snr = [
        float(np.median([
            calibrate_sigma_for_snr(snr, observation_mean(true_params, p, precoder, cfg))
            for p in pilot_sets
        ]))
        for snr in (config.snr_grid_db.max(), config.snr_grid_db.min())
    ]
    sigma_lo, sigma_hi = sig_of_snr
    context = (scene, cfg, shifted, true_params, pseudo, precoder, pilot_sets)

    def holds(sigma: float) -> bool:
        tr_psi, tr_xi = _traces_at_sigma(context, sigma)
        # exact ties (zero-shift degenerate configs) must count as holding
        tol = 1e-9 * (abs(tr_psi) + abs(tr_xi))
        return tr_psi - tr_xi >= -tol

    grid = np.geomspace(sigma_lo, sigma_hi, grid_points)
    flags = [holds(s) for s in grid]
    if not flags[0]:
        raise NoThresholdInBracket(
            f"trace inequality already fails at sigma = {sigma_lo:.6g}"
        )
    if all(flags):
        return float(sigma_hi)
    first_bad = next(i for i, ok in enumerate(flags) if not ok)
    lo = float(grid[first_bad - 1])
    hi = float(grid[first_bad])
    while (hi - lo) / lo > 1e-3:
        mid = math.sqrt(lo * hi)
        if holds(mid):
            lo = mid
        else:
            hi = mid
    return lo


def _fmt(value: float) -> str:
    if value is None or (isinstance(value, float) and math.isnan(value)):
        return "nan"
    return f"{value:.9g}"


def _row_record(row: SweepRow) -> dict:
    rec = {
        "snr_db": row.snr_db,
        "sigma": row.sigma,
        "rmse_bob_m": row.rmse_bob_m,
        "rmse_eve_m": row.rmse_eve_m,
        "trace_psi1": row.trace_psi1,
        "trace_psi2": row.trace_psi2,
        "mismatch_distance_m": row.mismatch_distance_m,
        "case_label": row.case_label,
        "gap_db": row.gap_db,
    }
    return rec


def write_sweep_csv(rows: list[SweepRow], path) -> None:
    """Serialize sweep rows with the fixed header and 9-significant-digit floats.

    Rows that carried per-seed errors are counted in a trailing comment line.
    """
    lines = [CSV_HEADER]
    n_errors = 0
    for row in rows:
        rec = _row_record(row)
        fields = [
            _fmt(rec[k]) if k != "case_label" else rec[k]
            for k in CSV_HEADER.split(",")
        ]
        lines.append(",".join(fields))
        if row.error:
            n_errors += 1
    if n_errors:
        lines.append(f"# error_rows: {n_errors}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def write_sweep_json(rows: list[SweepRow], path) -> None:
    """JSON mirror of the CSV rows, same values rounded to 9 significant digits."""
    records = []
    for row in rows:
        rec = {
            k: (v if isinstance(v, str) else (None if math.isnan(v) else float(_fmt(v))))
            for k, v in _row_record(row).items()
        }
        rec["error"] = row.error
        records.append(rec)
    Path(path).write_text(json.dumps(records, indent=2) + "\n", encoding="utf-8")
