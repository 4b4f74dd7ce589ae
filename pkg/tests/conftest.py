import math

import numpy as np
import pytest

from daisloc import (
    PathParams,
    Precoder,
    Scene,
    SpoofShift,
    SystemConfig,
    apply_dais_shift,
    generate_pilots,
    observation_mean,
    pseudo_true_scene,
    scene_channel_params,
)


@pytest.fixture(scope="session")
def paper_cfg() -> SystemConfig:
    """Two-scatterer evaluation setup: 60 GHz carrier, 30 MHz bandwidth, 16x16x16."""
    return SystemConfig(
        n_antennas=16,
        n_subcarriers=16,
        n_symbols=16,
        carrier_hz=60e9,
        bandwidth_hz=30e6,
    )


@pytest.fixture(scope="session")
def paper_scene() -> Scene:
    return Scene(
        alice_pos=[3.0, 0.0],
        anchor_pos=[10.0, 5.0],
        scatterer_pos=[[8.87, -6.05], [7.44, 8.53]],
    )


@pytest.fixture(scope="session")
def ts(paper_cfg) -> float:
    return paper_cfg.sample_period_s


@pytest.fixture(scope="session")
def paper_params(paper_scene, paper_cfg):
    return scene_channel_params(paper_scene, paper_cfg)


@pytest.fixture(scope="session")
def paper_shift(ts) -> SpoofShift:
    return SpoofShift(delta_tau=ts, delta_theta=0.25 * math.pi)


@pytest.fixture(scope="session")
def paper_shifted(paper_params, paper_shift, paper_cfg):
    return apply_dais_shift(paper_params, paper_shift, paper_cfg)


@pytest.fixture(scope="session")
def paper_pseudo(paper_shifted, paper_scene, paper_cfg):
    return pseudo_true_scene(paper_shifted, paper_scene.anchor_pos, paper_cfg.light_speed_mps)


@pytest.fixture(scope="session")
def paper_pilots(paper_cfg):
    return generate_pilots(0, paper_cfg)


@pytest.fixture(scope="session")
def paper_precoder(paper_shift) -> Precoder:
    return Precoder.dais(paper_shift)


def random_scene(rng: np.random.Generator, n_scatterers: int = 2,
                 box: float = 25.0, min_sep: float = 1.0,
                 min_cos: float = 1e-2, front_side: bool = False) -> Scene:
    """Non-degenerate random scene with angles away from the +-pi/2 fold.

    With ``front_side`` every target sits in the transmitter's right
    half-plane, so no departure angle is folded; the forward map is then
    injective and position-level identities (not just parameter-level ones)
    hold.
    """
    while True:
        pts = rng.uniform(-box, box, size=(2 + n_scatterers, 2))
        alice, anchor, scat = pts[0], pts[1], pts[2:]
        others = np.vstack([anchor[None, :], scat]) if n_scatterers else anchor[None, :]
        seps = [np.linalg.norm(alice - q) for q in others]
        seps += [np.linalg.norm(anchor - v) for v in scat]
        if min(seps) < min_sep:
            continue
        dx = [(q[0] - alice[0]) if front_side else abs(q[0] - alice[0]) for q in others]
        cosines = [d / np.linalg.norm(q - alice) for d, q in zip(dx, others)]
        if min(cosines) < min_cos:
            continue
        return Scene(alice_pos=alice, anchor_pos=anchor, scatterer_pos=scat)


def fd_mean_jacobian(params: PathParams, pilots, cfg: SystemConfig) -> np.ndarray:
    """Central-difference derivatives of the observation means, FD oracle.

    Step sizes are chosen per parameter family so truncation and roundoff
    both stay far below 1e-6 relative: the delay step keeps the phase
    perturbation near 1e-4 radians.
    """
    m = params.n_paths
    base = np.concatenate([params.toa, params.aod,
                           params.gains.real, params.gains.imag])
    omega_max = 2 * np.pi * max(cfg.n_subcarriers - 1, 1) / cfg.max_delay_s
    steps = np.concatenate([
        np.full(m, 1e-4 / omega_max),
        np.full(m, 1e-6),
        np.full(m, max(1e-6, 1e-3 * np.abs(params.gains).max())),
        np.full(m, max(1e-6, 1e-3 * np.abs(params.gains).max())),
    ])

    def mean_of(vec):
        p = PathParams(toa=vec[:m], aod=vec[m:2 * m],
                       gains=vec[2 * m:3 * m] + 1j * vec[3 * m:])
        return observation_mean(p, pilots, None, cfg)

    rows = []
    for j in range(4 * m):
        hi = base.copy(); hi[j] += steps[j]
        lo = base.copy(); lo[j] -= steps[j]
        rows.append((mean_of(hi) - mean_of(lo)) / (2 * steps[j]))
    return np.stack(rows, axis=0)
