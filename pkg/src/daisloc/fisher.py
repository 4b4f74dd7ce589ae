"""Fisher information, localization bounds, and the mismatched bound.

The channel FIM is assembled from the analytic observation-mean derivatives;
the effective FIM eliminates the complex gains by Schur complement; the
localization bound chains through the geometric Jacobian. The eavesdropper's
bound combines a curvature term, evaluated at the pseudo-true scene under
the wrong geometric map, with the outer product of the location mismatch.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Callable, NamedTuple

import numpy as np

from .config import SystemConfig
from .errors import (
    ConditionWarning,
    InvalidNoise,
    SingularLocalizationFim,
    SingularMcrbFim,
    SingularNuisanceBlock,
    ValidationError,
)
from .geometry import (
    PathParams,
    PseudoTrueScene,
    Scene,
    SpoofShift,
    _toa_aod_arrays,
    geometry_jacobian,
)
from .signal import (
    PilotSet,
    Precoder,
    _mean_from_combined,
    observation_mean,
    observation_mean_jacobian,
    steering_vector,
)

_EIG_FLOOR = 1e3  # multiples of machine epsilon below which a FIM counts as singular
_COND_LIMIT = 1e12
PSEUDO_TRUE_RESIDUAL_TOL = 1e-9


@dataclass(frozen=True)
class FimStack:
    """Channel FIM, its gain-eliminated reduction, and the reduction's inverse."""

    j_xi: np.ndarray
    j_eta: np.ndarray
    sigma_eta: np.ndarray


@dataclass(frozen=True)
class BoundMatrices:
    """Estimation-error lower bounds over [alice, scatterer_1, ..., scatterer_K].

    ``crb`` is the matched observer's bound (None when only the mismatched
    side was computed); ``mcrb`` splits into the curvature part
    ``mcrb_part1`` and the mismatch outer product ``mcrb_part2``.
    """

    mcrb_part1: np.ndarray
    mcrb_part2: np.ndarray
    mcrb: np.ndarray
    a_matrix: np.ndarray
    b_matrix: np.ndarray
    crb: np.ndarray | None = None


class AugmentedFimReport(NamedTuple):
    j_chi: np.ndarray
    sv_ratio: float
    verdict: str


def _symmetrize(m: np.ndarray) -> np.ndarray:
    return 0.5 * (m + m.T)


def _sym_inverse(matrix: np.ndarray, exc: type, what: str) -> np.ndarray:
    """Invert a symmetric PSD matrix via eigendecomposition.

    The matrix is rescaled to unit diagonal first so the singularity floor
    and the condition check probe correlation structure rather than the
    unit disparity between seconds, radians, and gain entries. Raises
    ``exc`` when the smallest rescaled eigenvalue sits below the floor;
    emits a ConditionWarning above condition number 1e12 instead of
    silently returning a corrupted inverse.
    """
    sym = _symmetrize(matrix)
    diag = np.diag(sym).copy()
    if np.any(diag <= 0.0):
        raise exc(f"{what} is not positive definite (diagonal min {diag.min():.3e})")
    scale = 1.0 / np.sqrt(diag)
    normalized = sym * np.outer(scale, scale)
    vals, vecs = np.linalg.eigh(normalized)
    top = float(vals[-1])
    if top <= 0.0 or vals[0] <= _EIG_FLOOR * np.finfo(float).eps * top:
        raise exc(f"{what} is numerically singular (eigenvalues {vals[0]:.3e}..{top:.3e})")
    cond = top / float(vals[0])
    if cond > _COND_LIMIT:
        warnings.warn(
            f"{what} has condition number {cond:.3e}; inverse may be inaccurate",
            ConditionWarning,
            stacklevel=3,
        )
    inv_normalized = (vecs / vals) @ vecs.T
    return _symmetrize(inv_normalized * np.outer(scale, scale))


def channel_fim(params: PathParams, pilots: PilotSet, cfg: SystemConfig) -> np.ndarray:
    """FIM of the channel parameter vector [delays, angles, Re gains, Im gains].

    Real symmetric PSD of side 4*(K+1); the 2/sigma^2 prefactor uses the
    config's noise level.
    """
    sigma = cfg.noise_std
    if sigma <= 0.0:
        raise InvalidNoise(f"channel_fim requires noise_std > 0, got {sigma}")
    deriv = observation_mean_jacobian(params, pilots, cfg)
    flat = deriv.reshape(deriv.shape[0], -1)
    gram = np.real(np.conj(flat) @ flat.T)
    return _symmetrize((2.0 / (sigma * sigma)) * gram)


def effective_fim(j_xi: np.ndarray) -> np.ndarray:
    """Eliminate the gain block by Schur complement.

    Equals the inverse of the delay-angle block of the full inverse whenever
    both exist.
    """
    j_xi = np.asarray(j_xi, dtype=float)
    side = j_xi.shape[0]
    if j_xi.shape != (side, side) or side % 4 != 0:
        raise ValidationError(f"channel FIM must be square with side 4*(K+1), got {j_xi.shape}")
    half = side // 2
    j1 = j_xi[:half, :half]
    j2 = j_xi[:half, half:]
    j3 = j_xi[half:, :half]
    j4 = j_xi[half:, half:]
    j4_inv = _sym_inverse(j4, SingularNuisanceBlock, "gain block of the channel FIM")
    return _symmetrize(j1 - j2 @ j4_inv @ j3)


def fim_stack(params: PathParams, pilots: PilotSet, cfg: SystemConfig) -> FimStack:
    """Convenience bundle of the channel FIM, its reduction, and the inverse reduction."""
    j_xi = channel_fim(params, pilots, cfg)
    j_eta = effective_fim(j_xi)
    sigma_eta = _sym_inverse(j_eta, SingularMcrbFim, "effective channel FIM")
    return FimStack(j_xi=j_xi, j_eta=j_eta, sigma_eta=sigma_eta)


def localization_crb(j_eta_star: np.ndarray, scene: Scene, cfg: SystemConfig) -> np.ndarray:
    """Position-domain bound for the matched observer.

    Chains the effective FIM of the true channel parameters through the
    geometric Jacobian at the true scene and inverts.
    """
    pi = geometry_jacobian(scene.alice_pos, scene.scatterer_pos, scene.anchor_pos, cfg)
    j_phi = _symmetrize(pi.T @ j_eta_star @ pi)
    return _sym_inverse(j_phi, SingularLocalizationFim, "localization FIM")


def position_rmse(bound: np.ndarray) -> float:
    """RMSE of the transmitter position block of a bound matrix."""
    return float(np.sqrt(bound[0, 0] + bound[1, 1]))


def _aligned_rows(pseudo: PseudoTrueScene, n_paths: int) -> np.ndarray:
    """Row permutation aligning model-predicted parameters with physical path order."""
    perm = pseudo.case_label.path_permutation(n_paths)
    return np.concatenate([perm, n_paths + perm])


def mcrb(shifted: PathParams, pseudo: PseudoTrueScene, true_scene: Scene,
         eve_pos, pilots: PilotSet, cfg: SystemConfig) -> BoundMatrices:
    """Mismatched estimation bound for the observer without the shared shift.

    At the exact-match pseudo-true point the two generalized FIMs collapse
    to B = O^T J O and A = -B, with O the geometric Jacobian of the wrong
    map at the pseudo-true scene (rows permuted in case C2 so model
    parameters align with the physical covariance ordering). The bound adds
    the curvature term B^{-1} and the mismatch outer product.
    """
    if pseudo.remap_residual > PSEUDO_TRUE_RESIDUAL_TOL:
        raise ValidationError(
            f"pseudo-true remap residual {pseudo.remap_residual:.3e} exceeds "
            f"{PSEUDO_TRUE_RESIDUAL_TOL:.0e}; solve did not converge"
        )
    j_eta = effective_fim(channel_fim(shifted, pilots, cfg))
    pi = geometry_jacobian(pseudo.alice_pos, pseudo.scatterer_pos, eve_pos, cfg)
    o_jac = pi[_aligned_rows(pseudo, shifted.n_paths), :]
    b_matrix = _symmetrize(o_jac.T @ j_eta @ o_jac)
    part1 = _sym_inverse(b_matrix, SingularMcrbFim, "mismatched-model FIM")
    mismatch = np.concatenate([
        pseudo.alice_pos - true_scene.alice_pos,
        (pseudo.scatterer_pos - true_scene.scatterer_pos).ravel(),
    ])
    part2 = np.outer(mismatch, mismatch)
    return BoundMatrices(
        mcrb_part1=part1,
        mcrb_part2=part2,
        mcrb=part1 + part2,
        a_matrix=-b_matrix,
        b_matrix=b_matrix,
    )


def _central_jacobian(func: Callable[[np.ndarray], np.ndarray], x0: np.ndarray,
                      steps: np.ndarray) -> np.ndarray:
    cols = []
    for j, h in enumerate(steps):
        hi = x0.copy()
        lo = x0.copy()
        hi[j] += h
        lo[j] -= h
        cols.append((func(hi) - func(lo)) / (2.0 * h))
    return np.stack(cols, axis=1)


def _central_hessian(func: Callable[[np.ndarray], float], x0: np.ndarray,
                     steps: np.ndarray) -> np.ndarray:
    dim = x0.size
    hess = np.zeros((dim, dim))
    f0 = func(x0)
    for r in range(dim):
        hr = steps[r]
        for l in range(r, dim):
            hl = steps[l]
            if r == l:
                hi = x0.copy(); hi[r] += hr
                lo = x0.copy(); lo[r] -= hr
                val = (func(hi) - 2.0 * f0 + func(lo)) / (hr * hr)
            else:
                pp = x0.copy(); pp[r] += hr; pp[l] += hl
                pm = x0.copy(); pm[r] += hr; pm[l] -= hl
                mp = x0.copy(); mp[r] -= hr; mp[l] += hl
                mm = x0.copy(); mm[r] -= hr; mm[l] -= hl
                val = (func(pp) - func(pm) - func(mp) + func(mm)) / (4.0 * hr * hl)
            hess[r, l] = val
            hess[l, r] = val
    return hess


def mcrb_generalized_fims_numeric(shifted: PathParams, pseudo: PseudoTrueScene,
                                  true_scene: Scene, eve_pos, pilots: PilotSet,
                                  cfg: SystemConfig) -> tuple[np.ndarray, np.ndarray]:
    """Generalized FIMs evaluated from their defining Gaussian expectations.

    The model Jacobian is taken by central differences and the curvature
    and score-mean correction terms are kept, so this is an independent
    cross-check of the reduced forms used by :func:`mcrb`; the corrections
    vanish at the exact-match pseudo-true point and A + B collapses to
    numerical zero there.
    """
    j_eta = effective_fim(channel_fim(shifted, pilots, cfg))
    n_paths = shifted.n_paths
    rows = _aligned_rows(pseudo, n_paths)
    anchor = np.asarray(eve_pos, dtype=float)
    c = cfg.light_speed_mps

    def model_map(phi: np.ndarray) -> np.ndarray:
        alice = phi[:2]
        scat = phi[2:].reshape(-1, 2)
        toa, aod = _toa_aod_arrays(alice, scat, anchor, c)
        return np.concatenate([toa, aod])[rows]

    phi0 = np.concatenate([pseudo.alice_pos, pseudo.scatterer_pos.ravel()])
    steps = 1e-6 * np.maximum(1.0, np.abs(phi0))
    o_jac = _central_jacobian(model_map, phi0, steps)

    target = np.concatenate([shifted.toa, shifted.aod])
    resid = target - model_map(phi0)

    gram = _symmetrize(o_jac.T @ j_eta @ o_jac)
    score_mean = o_jac.T @ (j_eta @ resid)
    b_matrix = gram + np.outer(score_mean, score_mean)

    weighted = j_eta @ resid

    def curvature_scalar(phi: np.ndarray) -> float:
        return float(weighted @ model_map(phi))

    a_matrix = -gram + _central_hessian(curvature_scalar, phi0, steps)
    return a_matrix, b_matrix


def equilibrated_singular_value_ratio(matrix: np.ndarray) -> float:
    """Smallest/largest singular value after unit-diagonal rescaling.

    The channel parameters mix seconds, radians, and gain units, so the raw
    spectrum is dominated by unit disparity; rescaling by the diagonal makes
    the ratio a pure rank probe. Exact rank deficiency survives the
    rescaling unchanged.
    """
    m = _symmetrize(np.asarray(matrix, dtype=float))
    diag = np.diag(m).copy()
    if np.any(diag <= 0.0):
        return 0.0
    scale = 1.0 / np.sqrt(diag)
    normalized = m * np.outer(scale, scale)
    svals = np.linalg.svd(normalized, compute_uv=False)
    return float(svals[-1] / svals[0])


def augmented_fim_rank(true_params: PathParams, shift: SpoofShift, pilots: PilotSet,
                       cfg: SystemConfig, threshold: float = 1e-10) -> AugmentedFimReport:
    """FIM of channel parameters jointly with the two shift unknowns.

    Models an eavesdropper who knows the precoder structure and tries to
    estimate the shift pair alongside the channel. The two shift columns are
    differentiated directly from the precoded observation, not copied from
    the parameter columns, so the linear-dependence structure is observed
    rather than imposed. The verdict compares the equilibrated
    singular-value ratio against ``threshold``.
    """
    sigma = cfg.noise_std
    if sigma <= 0.0:
        raise InvalidNoise(f"augmented_fim_rank requires noise_std > 0, got {sigma}")
    precoder = Precoder.dais(shift)
    effective = pilots.with_precoder(precoder, cfg)
    deriv = observation_mean_jacobian(true_params, effective, cfg)

    mean = observation_mean(true_params, pilots, precoder, cfg)
    n = np.arange(cfg.n_subcarriers)
    d_dtau = (-2j * np.pi * n / cfg.max_delay_s)[None, :] * mean

    idx = np.arange(cfg.n_antennas)
    phase = 2.0 * np.pi * cfg.antenna_spacing_m / cfg.wavelength_m
    weight = 1j * phase * idx * np.cos(shift.delta_theta)
    d_dtheta = _mean_from_combined(true_params, weight[None, None, :] * effective.combined, cfg)

    stacked = np.concatenate([deriv, d_dtau[None], d_dtheta[None]], axis=0)
    flat = stacked.reshape(stacked.shape[0], -1)
    j_chi = _symmetrize((2.0 / (sigma * sigma)) * np.real(np.conj(flat) @ flat.T))
    ratio = equilibrated_singular_value_ratio(j_chi)
    verdict = "singular" if ratio < threshold else "nonsingular"
    return AugmentedFimReport(j_chi=j_chi, sv_ratio=ratio, verdict=verdict)
