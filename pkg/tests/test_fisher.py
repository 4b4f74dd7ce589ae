import math

import numpy as np
import pytest

from daisloc import (
    ConditionWarning,
    PathParams,
    Precoder,
    Scene,
    SingularLocalizationFim,
    SingularNuisanceBlock,
    SpoofShift,
    apply_dais_shift,
    augmented_fim_rank,
    channel_fim,
    effective_fim,
    equilibrated_singular_value_ratio,
    fim_stack,
    generate_pilots,
    geometry_jacobian,
    localization_crb,
    mcrb,
    mcrb_generalized_fims_numeric,
    observation_mean,
    observation_mean_jacobian,
    position_rmse,
    pseudo_true_scene,
    scene_channel_params,
    toa_aod_from_scene,
)
from conftest import fd_mean_jacobian, random_scene


@pytest.fixture(scope="module")
def calibrated_cfg(paper_cfg, paper_params, paper_pilots, paper_precoder):
    """Paper config at 0 dB SNR for the spoofed signal, seed 0."""
    from daisloc import calibrate_sigma_for_snr
    mean = observation_mean(paper_params, paper_pilots, paper_precoder, paper_cfg)
    return paper_cfg.with_noise_std(calibrate_sigma_for_snr(0.0, mean))


class TestObservationMeanJacobian:
    def test_matches_finite_differences_on_paper_scene(self, paper_params, paper_pilots,
                                                       paper_cfg):
        analytic = observation_mean_jacobian(paper_params, paper_pilots, paper_cfg)
        fd = fd_mean_jacobian(paper_params, paper_pilots, paper_cfg)
        for r in range(analytic.shape[0]):
            scale = np.abs(analytic[r]).max()
            assert np.abs(analytic[r] - fd[r]).max() < 1e-6 * scale

    def test_matches_finite_differences_on_random_scenes(self, paper_cfg):
        rng = np.random.default_rng(17)
        for trial in range(10):
            scene = random_scene(rng)
            params = scene_channel_params(scene, paper_cfg)
            pilots = generate_pilots(100 + trial, paper_cfg)
            analytic = observation_mean_jacobian(params, pilots, paper_cfg)
            fd = fd_mean_jacobian(params, pilots, paper_cfg)
            for r in range(analytic.shape[0]):
                scale = np.abs(analytic[r]).max()
                assert np.abs(analytic[r] - fd[r]).max() < 1e-6 * scale


class TestChannelFim:
    def test_diagonal_nonnegative(self, paper_shifted, paper_pilots, calibrated_cfg):
        j = channel_fim(paper_shifted, paper_pilots, calibrated_cfg)
        assert np.all(np.diag(j) >= 0.0)

    def test_symmetric(self, paper_shifted, paper_pilots, calibrated_cfg):
        j = channel_fim(paper_shifted, paper_pilots, calibrated_cfg)
        assert np.linalg.norm(j - j.T) < 1e-12 * np.linalg.norm(j)

    def test_doubling_sigma_quarters_fim(self, paper_shifted, paper_pilots, calibrated_cfg):
        j1 = channel_fim(paper_shifted, paper_pilots, calibrated_cfg)
        j2 = channel_fim(paper_shifted, paper_pilots,
                         calibrated_cfg.with_noise_std(2 * calibrated_cfg.noise_std))
        np.testing.assert_array_equal(j2, 0.25 * j1)

    def test_invalid_noise(self, paper_shifted, paper_pilots, paper_cfg):
        from daisloc import InvalidNoise
        with pytest.raises(InvalidNoise):
            channel_fim(paper_shifted, paper_pilots, paper_cfg.with_noise_std(0.0))


class TestEffectiveFim:
    def test_schur_equals_inverse_block(self):
        rng = np.random.default_rng(5)
        for _ in range(20):
            root = rng.standard_normal((8, 12))
            full = root @ root.T + 0.5 * np.eye(8)
            eff = effective_fim(full)
            block = np.linalg.inv(np.linalg.inv(full)[:4, :4])
            assert np.linalg.norm(eff - block) < 1e-9 * np.linalg.norm(block)

    def test_block_diagonal_returns_leading_block(self):
        rng = np.random.default_rng(8)
        j1 = rng.standard_normal((4, 6)); j1 = j1 @ j1.T + np.eye(4)
        j4 = rng.standard_normal((4, 6)); j4 = j4 @ j4.T + np.eye(4)
        full = np.block([[j1, np.zeros((4, 4))], [np.zeros((4, 4)), j4]])
        np.testing.assert_allclose(effective_fim(full), j1, atol=1e-14)

    def test_singular_gain_block_raises(self):
        full = np.zeros((8, 8))
        full[:4, :4] = np.eye(4)
        with pytest.raises(SingularNuisanceBlock):
            effective_fim(full)

    def test_ill_conditioned_gain_block_warns(self):
        # near-coherent pair: correlation, not unit disparity, drives the warning
        full = np.zeros((8, 8))
        full[:4, :4] = np.eye(4)
        full[4:, 4:] = np.eye(4)
        full[4, 5] = full[5, 4] = 1.0 - 5e-13
        with pytest.warns(ConditionWarning):
            effective_fim(full)

    def test_positive_definite_on_paper_scene(self, paper_shifted, paper_pilots,
                                              calibrated_cfg):
        j_eta = effective_fim(channel_fim(paper_shifted, paper_pilots, calibrated_cfg))
        assert np.all(np.linalg.eigvalsh(j_eta) > 0.0)

    def test_fim_stack_inverse_consistent(self, paper_shifted, paper_pilots,
                                          calibrated_cfg):
        stack = fim_stack(paper_shifted, paper_pilots, calibrated_cfg)
        ident = stack.sigma_eta @ stack.j_eta
        np.testing.assert_allclose(ident, np.eye(ident.shape[0]), atol=1e-8)


class TestLocalizationCrb:
    def test_halving_sigma_halves_rmse(self, paper_scene, paper_params, paper_pilots,
                                       calibrated_cfg):
        def rmse_at(cfg):
            j_eta = effective_fim(channel_fim(paper_params, paper_pilots, cfg))
            return position_rmse(localization_crb(j_eta, paper_scene, cfg))

        full = rmse_at(calibrated_cfg)
        half = rmse_at(calibrated_cfg.with_noise_std(0.5 * calibrated_cfg.noise_std))
        assert half == pytest.approx(0.5 * full, rel=1e-10)

    def test_trace_vanishes_with_noise(self, paper_scene, paper_params, paper_pilots,
                                       calibrated_cfg):
        def trace_at(scale):
            cfg = calibrated_cfg.with_noise_std(scale * calibrated_cfg.noise_std)
            j_eta = effective_fim(channel_fim(paper_params, paper_pilots, cfg))
            return np.trace(localization_crb(j_eta, paper_scene, cfg))

        traces = [trace_at(s) for s in (1.0, 1e-2, 1e-4)]
        assert traces[0] > traces[1] > traces[2]
        assert traces[2] == pytest.approx(1e-8 * traces[0], rel=1e-8)

    def test_singular_input_raises(self, paper_scene, paper_cfg):
        rank_one = np.outer(np.ones(6), np.ones(6))
        with pytest.raises(SingularLocalizationFim):
            localization_crb(rank_one, paper_scene, paper_cfg)


class TestMcrb:
    def test_zero_shift_reduces_to_matched_bound(self, paper_scene, paper_params,
                                                 paper_pilots, calibrated_cfg):
        shift = SpoofShift(0.0, 0.0)
        shifted = apply_dais_shift(paper_params, shift, calibrated_cfg)
        pseudo = pseudo_true_scene(shifted, paper_scene.anchor_pos)
        bounds = mcrb(shifted, pseudo, paper_scene, paper_scene.anchor_pos,
                      paper_pilots, calibrated_cfg)
        j_eta = effective_fim(channel_fim(paper_params, paper_pilots, calibrated_cfg))
        matched = localization_crb(j_eta, paper_scene, calibrated_cfg)
        assert np.trace(bounds.mcrb_part2) < 1e-20
        np.testing.assert_allclose(bounds.mcrb_part1, matched, rtol=1e-6)

    def test_parts_are_psd_and_sum(self, paper_shifted, paper_pseudo, paper_scene,
                                   paper_pilots, calibrated_cfg):
        bounds = mcrb(paper_shifted, paper_pseudo, paper_scene, paper_scene.anchor_pos,
                      paper_pilots, calibrated_cfg)
        assert np.all(np.linalg.eigvalsh(bounds.mcrb_part1) > 0.0)
        assert np.all(np.linalg.eigvalsh(bounds.mcrb_part2) > -1e-12)
        np.testing.assert_array_equal(bounds.mcrb, bounds.mcrb_part1 + bounds.mcrb_part2)
        np.testing.assert_array_equal(bounds.a_matrix, -bounds.b_matrix)

    def test_curvature_scales_with_sigma_squared(self, paper_shifted, paper_pseudo,
                                                 paper_scene, paper_pilots, calibrated_cfg):
        b1 = mcrb(paper_shifted, paper_pseudo, paper_scene, paper_scene.anchor_pos,
                  paper_pilots, calibrated_cfg)
        cfg2 = calibrated_cfg.with_noise_std(2 * calibrated_cfg.noise_std)
        b2 = mcrb(paper_shifted, paper_pseudo, paper_scene, paper_scene.anchor_pos,
                  paper_pilots, cfg2)
        np.testing.assert_allclose(b2.mcrb_part1, 4.0 * b1.mcrb_part1, rtol=1e-12)
        np.testing.assert_array_equal(b2.mcrb_part2, b1.mcrb_part2)

    def test_low_noise_limit_is_mismatch_outer_product(self, paper_shifted, paper_pseudo,
                                                       paper_scene, paper_pilots,
                                                       calibrated_cfg):
        tiny = calibrated_cfg.with_noise_std(1e-4 * calibrated_cfg.noise_std)
        bounds = mcrb(paper_shifted, paper_pseudo, paper_scene, paper_scene.anchor_pos,
                      paper_pilots, tiny)
        assert np.trace(bounds.mcrb) == pytest.approx(np.trace(bounds.mcrb_part2),
                                                      rel=1e-6)


class TestGeneralizedFimsNumeric:
    @pytest.mark.parametrize("dtau_samples", [1, 15])
    def test_numeric_cross_check(self, paper_scene, paper_params, paper_pilots,
                                 paper_cfg, ts, dtau_samples):
        from daisloc import calibrate_sigma_for_snr
        shift = SpoofShift(dtau_samples * ts, 0.25 * math.pi)
        precoder = Precoder.dais(shift)
        mean = observation_mean(paper_params, paper_pilots, precoder, paper_cfg)
        cfg = paper_cfg.with_noise_std(calibrate_sigma_for_snr(0.0, mean))
        shifted = apply_dais_shift(paper_params, shift, cfg)
        pseudo = pseudo_true_scene(shifted, paper_scene.anchor_pos)
        bounds = mcrb(shifted, pseudo, paper_scene, paper_scene.anchor_pos,
                      paper_pilots, cfg)
        a_num, b_num = mcrb_generalized_fims_numeric(
            shifted, pseudo, paper_scene, paper_scene.anchor_pos, paper_pilots, cfg)
        # the two generalized FIMs cancel at the exact-match point
        assert np.linalg.norm(a_num + b_num) < 1e-8 * np.linalg.norm(b_num)
        assert np.all(np.linalg.eigvalsh(b_num) > 0.0)
        psi1_num = np.linalg.solve(a_num, np.linalg.solve(a_num, b_num).T)
        rel = np.linalg.norm(psi1_num - bounds.mcrb_part1) / np.linalg.norm(bounds.mcrb_part1)
        assert rel < 1e-8


class TestAugmentedFim:
    def test_paper_config_is_singular(self, paper_params, paper_shift, paper_pilots,
                                      calibrated_cfg):
        report = augmented_fim_rank(paper_params, paper_shift, paper_pilots, calibrated_cfg)
        assert report.verdict == "singular"
        assert report.sv_ratio < 1e-10
        assert report.j_chi.shape == (14, 14)

    def test_without_shift_unknowns_nonsingular(self, paper_params, paper_shift,
                                                paper_pilots, calibrated_cfg):
        report = augmented_fim_rank(paper_params, paper_shift, paper_pilots, calibrated_cfg)
        ratio = equilibrated_singular_value_ratio(report.j_chi[:-2, :-2])
        assert ratio > 1e-10

    def test_delay_shift_column_is_sum_of_delay_columns(self, paper_params, paper_shift,
                                                        paper_pilots, calibrated_cfg):
        precoder = Precoder.dais(paper_shift)
        effective = paper_pilots.with_precoder(precoder, calibrated_cfg)
        deriv = observation_mean_jacobian(paper_params, effective, calibrated_cfg)
        m = paper_params.n_paths
        summed = deriv[:m].sum(axis=0)
        mean = observation_mean(paper_params, paper_pilots, precoder, calibrated_cfg)
        n = np.arange(calibrated_cfg.n_subcarriers)
        direct = (-2j * np.pi * n / calibrated_cfg.max_delay_s)[None, :] * mean
        scale = np.abs(direct).max()
        assert np.abs(summed - direct).max() < 1e-10 * scale

    def test_angle_shift_column_is_weighted_sum(self, paper_params, paper_shift,
                                                paper_pilots, calibrated_cfg):
        # chain rule through the common angle-sine argument gives constant
        # per-path weights cos(delta_theta)/cos(theta_k)
        cfg = calibrated_cfg
        precoder = Precoder.dais(paper_shift)
        effective = paper_pilots.with_precoder(precoder, cfg)
        deriv = observation_mean_jacobian(paper_params, effective, cfg)
        m = paper_params.n_paths
        weights = np.cos(paper_shift.delta_theta) / np.cos(paper_params.aod)
        weighted = np.einsum("k,kgn->gn", weights, deriv[m:2 * m])
        idx = np.arange(cfg.n_antennas)
        phase = 2.0 * np.pi * cfg.antenna_spacing_m / cfg.wavelength_m
        rho = 1j * phase * idx * np.cos(paper_shift.delta_theta)
        from daisloc.signal import _mean_from_combined
        direct = _mean_from_combined(paper_params, rho[None, None, :] * effective.combined, cfg)
        scale = np.abs(direct).max()
        assert np.abs(weighted - direct).max() < 1e-10 * scale

    def test_single_path_scene_still_singular(self, paper_cfg, ts):
        from daisloc import calibrate_sigma_for_snr
        scene = Scene(alice_pos=[3.0, 0.0], anchor_pos=[10.0, 5.0])
        params = scene_channel_params(scene, paper_cfg)
        shift = SpoofShift(ts, 0.25 * math.pi)
        pilots = generate_pilots(4, paper_cfg)
        mean = observation_mean(params, pilots, Precoder.dais(shift), paper_cfg)
        cfg = paper_cfg.with_noise_std(calibrate_sigma_for_snr(0.0, mean))
        report = augmented_fim_rank(params, shift, pilots, cfg)
        assert report.verdict == "singular"
        assert report.j_chi.shape == (6, 6)

    def test_threshold_is_configurable(self, paper_params, paper_shift, paper_pilots,
                                       calibrated_cfg):
        report = augmented_fim_rank(paper_params, paper_shift, paper_pilots,
                                    calibrated_cfg, threshold=1e-30)
        assert report.verdict == "nonsingular"


class TestCaseC2Alignment:
    def test_c2_bound_uses_permuted_rows(self, paper_scene, paper_params, paper_pilots,
                                         paper_cfg, ts):
        from daisloc import calibrate_sigma_for_snr
        shift = SpoofShift(15 * ts, 0.25 * math.pi)
        precoder = Precoder.dais(shift)
        mean = observation_mean(paper_params, paper_pilots, precoder, paper_cfg)
        cfg = paper_cfg.with_noise_std(calibrate_sigma_for_snr(0.0, mean))
        shifted = apply_dais_shift(paper_params, shift, cfg)
        pseudo = pseudo_true_scene(shifted, paper_scene.anchor_pos)
        assert pseudo.case_label.kind == "C2"
        bounds = mcrb(shifted, pseudo, paper_scene, paper_scene.anchor_pos,
                      paper_pilots, cfg)
        # misaligned rows would leave a wrong quadratic form; the numeric
        # route shares only the covariance, so agreement pins the alignment
        _, b_num = mcrb_generalized_fims_numeric(
            shifted, pseudo, paper_scene, paper_scene.anchor_pos, paper_pilots, cfg)
        rel = np.linalg.norm(b_num - bounds.b_matrix) / np.linalg.norm(bounds.b_matrix)
        assert rel < 1e-7

        # building the quadratic form without the permutation must disagree
        pi = geometry_jacobian(pseudo.alice_pos, pseudo.scatterer_pos,
                               paper_scene.anchor_pos, cfg)
        j_eta = effective_fim(channel_fim(shifted, paper_pilots, cfg))
        unpermuted = pi.T @ j_eta @ pi
        assert np.linalg.norm(unpermuted - bounds.b_matrix) > 1e-3 * np.linalg.norm(bounds.b_matrix)
