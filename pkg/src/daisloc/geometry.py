"""Scene geometry, delay-angle spoofing shifts, and pseudo-true locations.

The forward map takes 2-D positions to per-path time-of-arrival (TOA) and
angle-of-departure (AOD); the spoofing shift moves every TOA by a constant
and every AOD sine by a constant, with fold-back into the physical
intervals; the pseudo-true solve inverts the *unshifted* map at the shifted
parameters, which is the incorrect scene an observer without the shared
shift converges to. All functions are pure and operate on SI units
(meters, seconds, radians).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .config import SystemConfig
from .errors import (
    DegenerateGeometry,
    DelayOutOfRange,
    InvalidInterval,
    SolverDegenerate,
    ValidationError,
)

LIGHT_SPEED_MPS = 3.0e8

_HALF_PI = np.pi / 2.0


def _vec2(value, name: str) -> np.ndarray:
    arr = np.asarray(value, dtype=float).reshape(-1)
    if arr.shape != (2,):
        raise ValidationError(f"{name} must be a 2-vector, got shape {np.shape(value)}")
    if not np.all(np.isfinite(arr)):
        raise ValidationError(f"{name} must be finite, got {arr}")
    return arr


def _scatterers(value) -> np.ndarray:
    arr = np.asarray(value, dtype=float)
    if arr.size == 0:
        return np.zeros((0, 2))
    arr = arr.reshape(-1, 2)
    if not np.all(np.isfinite(arr)):
        raise ValidationError(f"scatterer positions must be finite, got {arr}")
    return arr


@dataclass(frozen=True)
class Scene:
    """Ground-truth positions: transmitter, observer anchor, and scatterers.

    ``anchor_pos`` is the single-antenna receiver doing the localization;
    the same type describes the legitimate observer and the eavesdropper,
    whichever anchor is passed in.
    """

    alice_pos: np.ndarray
    anchor_pos: np.ndarray
    scatterer_pos: np.ndarray = field(default_factory=lambda: np.zeros((0, 2)))

    def __post_init__(self):
        alice = _vec2(self.alice_pos, "alice_pos")
        anchor = _vec2(self.anchor_pos, "anchor_pos")
        scat = _scatterers(self.scatterer_pos)
        object.__setattr__(self, "alice_pos", alice)
        object.__setattr__(self, "anchor_pos", anchor)
        object.__setattr__(self, "scatterer_pos", scat)
        if np.linalg.norm(alice - anchor) == 0.0:
            raise DegenerateGeometry("alice_pos coincides with anchor_pos")
        for k, v in enumerate(scat, start=1):
            if np.linalg.norm(alice - v) == 0.0:
                raise DegenerateGeometry(f"alice_pos coincides with scatterer {k}")
            if np.linalg.norm(anchor - v) == 0.0:
                raise DegenerateGeometry(f"anchor_pos coincides with scatterer {k}")

    @property
    def n_scatterers(self) -> int:
        return self.scatterer_pos.shape[0]


@dataclass(frozen=True)
class PathParams:
    """Per-path channel parameters: delays, departure angles, complex gains.

    Index 0 is the direct path; indices 1..K follow the scatterer order.
    ``gains`` may be None for the purely geometric stages.
    """

    toa: np.ndarray
    aod: np.ndarray
    gains: np.ndarray | None = None

    def __post_init__(self):
        toa = np.asarray(self.toa, dtype=float).reshape(-1)
        aod = np.asarray(self.aod, dtype=float).reshape(-1)
        if toa.shape != aod.shape:
            raise ValidationError(
                f"toa and aod must have equal length, got {toa.shape} and {aod.shape}"
            )
        if not np.all(np.isfinite(toa)) or not np.all(np.isfinite(aod)):
            raise ValidationError("path parameters must be finite")
        if np.any(toa <= 0.0):
            raise DelayOutOfRange(f"delays must be positive, got {toa}")
        if np.any(aod <= -_HALF_PI) or np.any(aod > _HALF_PI):
            raise ValidationError(f"departure angles must lie in (-pi/2, pi/2], got {aod}")
        object.__setattr__(self, "toa", toa)
        object.__setattr__(self, "aod", aod)
        if self.gains is not None:
            gains = np.asarray(self.gains, dtype=complex).reshape(-1)
            if gains.shape != toa.shape:
                raise ValidationError("gains must match the number of paths")
            if not np.all(np.isfinite(gains)):
                raise ValidationError("gains must be finite")
            object.__setattr__(self, "gains", gains)

    @property
    def n_paths(self) -> int:
        return self.toa.shape[0]

    def with_gains(self, gains) -> "PathParams":
        return PathParams(toa=self.toa, aod=self.aod, gains=gains)


@dataclass(frozen=True)
class SpoofShift:
    """The secret shift pair shared with the legitimate localizer."""

    delta_tau: float
    delta_theta: float

    def __post_init__(self):
        dt = float(self.delta_tau)
        dth = float(self.delta_theta)
        if not (np.isfinite(dt) and np.isfinite(dth)):
            raise ValidationError("shift components must be finite")
        if dth <= -_HALF_PI or dth > _HALF_PI:
            raise ValidationError(f"delta_theta must lie in (-pi/2, pi/2], got {dth}")
        object.__setattr__(self, "delta_tau", dt)
        object.__setattr__(self, "delta_theta", dth)

    @property
    def is_zero(self) -> bool:
        return self.delta_tau == 0.0 and self.delta_theta == 0.0


@dataclass(frozen=True)
class CaseLabel:
    """Which path looks like the direct one after the shift.

    ``C1``: the true direct path still has the smallest delay.
    ``C2``: fold-back promoted path ``apparent_los`` to apparent direct path.
    """

    kind: str
    apparent_los: int

    def __str__(self) -> str:
        if self.kind == "C1":
            return "C1"
        return f"C2[{self.apparent_los}]"

    def path_permutation(self, n_paths: int) -> np.ndarray:
        """Map from model path index to the physical path it matches.

        Identity for C1; for C2 the model's direct path matches physical
        path ``apparent_los`` and vice versa.
        """
        perm = np.arange(n_paths)
        perm[0], perm[self.apparent_los] = perm[self.apparent_los], perm[0]
        return perm


@dataclass(frozen=True)
class PseudoTrueScene:
    """Scene an observer without the shared shift converges to.

    ``remap_residual`` is the worst relative mismatch between the shifted
    parameters and the parameters re-derived from these positions under the
    unshifted map (path order permuted in case C2). It is close to machine
    precision whenever the solve succeeded.
    """

    alice_pos: np.ndarray
    scatterer_pos: np.ndarray
    case_label: CaseLabel
    remap_residual: float

    def as_scene(self, anchor_pos) -> Scene:
        return Scene(
            alice_pos=self.alice_pos,
            anchor_pos=anchor_pos,
            scatterer_pos=self.scatterer_pos,
        )


def wrap_half_open(x, t1: float, t2: float):
    """Fold ``x`` into the half-open interval (t1, t2].

    One-period translation invariant and idempotent on interior points.
    Accepts scalars or arrays.
    """
    if not t1 < t2:
        raise InvalidInterval(f"need t1 < t2, got ({t1}, {t2}]")
    arr = np.asarray(x, dtype=float)
    out = t2 - np.mod(t2 - arr, t2 - t1)
    # np.mod may round up to the full period for inputs a hair above t2,
    # which would land on the excluded lower endpoint
    out = np.where(out == t1, np.nextafter(t1, t2), out)
    return float(out) if out.ndim == 0 else out


def _fold_angle(theta):
    """Fold an arbitrary angle into (-pi/2, pi/2], dropping front/back ambiguity."""
    return wrap_half_open(theta, -_HALF_PI, _HALF_PI)


def _toa_aod_arrays(alice: np.ndarray, scatterers: np.ndarray, anchor: np.ndarray,
                    light_speed: float) -> tuple[np.ndarray, np.ndarray]:
    """Raw forward map from positions to (toa, aod), without range checks."""
    targets = np.vstack([anchor[None, :], scatterers]) if scatterers.size else anchor[None, :]
    diff = targets - alice[None, :]
    dist_alice = np.linalg.norm(diff, axis=1)
    if np.any(dist_alice == 0.0):
        raise DegenerateGeometry("transmitter coincides with a path endpoint")
    dist_anchor = np.linalg.norm(targets - anchor[None, :], axis=1)
    if scatterers.size and np.any(dist_anchor[1:] == 0.0):
        raise DegenerateGeometry("anchor coincides with a scatterer")
    toa = (dist_anchor + dist_alice) / light_speed
    aod = _fold_angle(np.arctan2(diff[:, 1], diff[:, 0]))
    return toa, np.atleast_1d(aod)


def toa_aod_from_scene(scene: Scene, cfg: SystemConfig) -> PathParams:
    """Map a scene to per-path delays and departure angles (gains unset).

    The direct-path delay is the transmitter-anchor distance over c; the
    scattered delay is the two-leg distance over c. Angles are the principal
    direction from the transmitter to the path's first reflection point
    (or the anchor), folded into (-pi/2, pi/2].
    """
    toa, aod = _toa_aod_arrays(
        scene.alice_pos, scene.scatterer_pos, scene.anchor_pos, cfg.light_speed_mps
    )
    if np.any(toa <= 0.0) or np.any(toa > cfg.max_delay_s):
        raise DelayOutOfRange(
            f"delays {toa} must lie in (0, {cfg.max_delay_s:.6g}] seconds"
        )
    return PathParams(toa=toa, aod=aod, gains=None)


def apply_dais_shift(params: PathParams, shift: SpoofShift, cfg: SystemConfig) -> PathParams:
    """Shift every delay by delta_tau and every angle sine by sin(delta_theta).

    Both shifts fold back into their physical intervals, (0, N*Ts] for
    delays and (-1, 1] for angle sines; gains are unchanged.
    """
    toa = wrap_half_open(params.toa + shift.delta_tau, 0.0, cfg.max_delay_s)
    sines = wrap_half_open(np.sin(params.aod) + np.sin(shift.delta_theta), -1.0, 1.0)
    return PathParams(toa=toa, aod=np.arcsin(sines), gains=params.gains)


def classify_wrap_case(shifted: PathParams) -> CaseLabel:
    """Decide whether the smallest shifted delay still belongs to the direct path.

    Ties resolve to the lowest path index, so a tie with the direct path
    is classified C1.
    """
    apparent = int(np.argmin(shifted.toa))
    return CaseLabel(kind="C1" if apparent == 0 else "C2", apparent_los=apparent)


def _scatterer_from_ellipse(p_bar: np.ndarray, anchor: np.ndarray, ct: float,
                            cos_t: float, sin_t: float, path_index: int) -> np.ndarray:
    """Place a scatterer so the two-leg distance is ct and the departure ray matches."""
    r = anchor - p_bar
    denom = ct - r[0] * cos_t - r[1] * sin_t
    if abs(denom) < 1e-12 * ct:
        raise SolverDegenerate(path_index)
    b = (ct * ct - r[0] * r[0] - r[1] * r[1]) / denom
    return p_bar + 0.5 * b * np.array([cos_t, sin_t])


def pseudo_true_scene(shifted: PathParams, eve_pos,
                      light_speed_mps: float = LIGHT_SPEED_MPS) -> PseudoTrueScene:
    """Solve the unshifted geometric map for the scene producing the shifted parameters.

    The path with the smallest shifted delay is taken as the direct one. In
    case C2 the true direct path is re-interpreted as a scattered path and
    its parameters place the displaced scatterer. The returned positions
    reproduce the shifted delays and angles exactly (up to the C2 path
    swap), which realizes the KL-divergence minimizer of the mismatched
    Gaussian model.
    """
    anchor = _vec2(eve_pos, "eve_pos")
    case = classify_wrap_case(shifted)
    m = case.apparent_los
    ct = light_speed_mps * shifted.toa
    cos_t = np.cos(shifted.aod)
    sin_t = np.sin(shifted.aod)

    p_bar = anchor - ct[m] * np.array([cos_t[m], sin_t[m]])

    n_paths = shifted.n_paths
    scatterers = np.zeros((n_paths - 1, 2))
    for k in range(1, n_paths):
        src = 0 if k == m else k  # C2 re-reads the old direct path as scatterer m
        scatterers[k - 1] = _scatterer_from_ellipse(
            p_bar, anchor, ct[src], cos_t[src], sin_t[src], path_index=src
        )

    toa_chk, aod_chk = _toa_aod_arrays(p_bar, scatterers, anchor, light_speed_mps)
    perm = case.path_permutation(n_paths)
    resid_toa = np.abs(toa_chk - shifted.toa[perm]) / np.maximum(np.abs(shifted.toa[perm]), 1e-300)
    aod_scale = max(np.max(np.abs(shifted.aod)), 1e-3)
    resid_aod = np.abs(aod_chk - shifted.aod[perm]) / aod_scale
    residual = float(max(resid_toa.max(), resid_aod.max()))

    return PseudoTrueScene(
        alice_pos=p_bar,
        scatterer_pos=scatterers,
        case_label=case,
        remap_residual=residual,
    )


def geometry_jacobian(alice_pos, scatterer_pos, anchor_pos, cfg: SystemConfig) -> np.ndarray:
    """Jacobian of the forward map with respect to the unknown positions.

    Rows are ordered [toa_0..toa_K, aod_0..aod_K]; columns are ordered
    [alice_x, alice_y, scat_1x, scat_1y, ..., scat_Kx, scat_Ky]. The anchor
    is known and contributes no columns. Entries are the analytic partial
    derivatives of the delay/angle map; the angle fold is locally constant
    and does not change them.
    """
    p = _vec2(alice_pos, "alice_pos")
    z = _vec2(anchor_pos, "anchor_pos")
    scat = _scatterers(scatterer_pos)
    n_paths = scat.shape[0] + 1
    c = cfg.light_speed_mps
    jac = np.zeros((2 * n_paths, 2 * n_paths))

    d0 = p - z
    r0 = np.linalg.norm(d0)
    if r0 == 0.0:
        raise DegenerateGeometry("alice_pos coincides with anchor_pos")
    jac[0, 0:2] = d0 / (c * r0)
    w0 = -d0  # direction transmitter -> anchor
    jac[n_paths, 0:2] = np.array([w0[1], -w0[0]]) / (r0 * r0)

    for k in range(1, n_paths):
        v = scat[k - 1]
        wa = v - z
        ra = np.linalg.norm(wa)
        wp = v - p
        rp = np.linalg.norm(wp)
        if ra == 0.0 or rp == 0.0:
            raise DegenerateGeometry(f"scatterer {k} coincides with an endpoint")
        col = slice(2 * k, 2 * k + 2)
        jac[k, 0:2] = -wp / (c * rp)
        jac[k, col] = (wa / ra + wp / rp) / c
        jac[n_paths + k, 0:2] = np.array([wp[1], -wp[0]]) / (rp * rp)
        jac[n_paths + k, col] = np.array([-wp[1], wp[0]]) / (rp * rp)

    return jac
