import numpy as np
import pytest

from jcsim.array import ArrayGeometry, Direction
from jcsim.channel import ChannelModelKind, ChannelStats, draw_user_channel, hbar_matrix
from jcsim.estimation import (
    Estimator,
    PilotBook,
    correlate,
    estimate_all,
    lmmse_estimate,
    lmmse_matrices,
    pm_estimate,
    training_observation,
)

GEOM = ArrayGeometry.half_wavelength(4, 4, 0.1)
DIR = Direction(azimuth=0.4, elevation=1.3)


def rayleigh_stats(beta=1.0):
    return ChannelStats(beta=beta, kind=ChannelModelKind.RAYLEIGH, angles=DIR)


class TestPilotBook:
    def test_dft_pilots_unit_norm_and_orthogonal(self):
        book = PilotBook.dft(4, 4, power=0.1)
        np.testing.assert_allclose(np.linalg.norm(book.pilots, axis=0), 1.0, atol=1e-12)
        np.testing.assert_allclose(np.abs(book.gram()), np.eye(4), atol=1e-12)

    def test_cyclic_reuse_creates_contamination(self):
        book = PilotBook.dft(4, 2, power=0.1)
        gram = np.abs(book.gram())
        # Users 0/2 and 1/3 share a sequence; the pairs are orthogonal.
        assert np.isclose(gram[0, 2], 1.0) and np.isclose(gram[1, 3], 1.0)
        assert np.isclose(gram[0, 1], 0.0, atol=1e-12)

    def test_validation(self):
        with pytest.raises(ValueError):
            PilotBook(pilots=2.0 * np.eye(2), powers=np.ones(2))
        with pytest.raises(ValueError):
            PilotBook(pilots=np.eye(2), powers=np.array([1.0, 0.0]))


class TestTrainingObservation:
    def test_noiseless_single_user_canonical_pilot(self):
        rng = np.random.default_rng(0)
        book = PilotBook(pilots=np.eye(3)[:, :1], powers=np.array([0.25]))
        h = draw_user_channel(rayleigh_stats(), GEOM, rng)
        y = training_observation([h], book, noise_var=0.0, rng=rng)
        np.testing.assert_allclose(y[:, 0], 0.5 * h.h, atol=1e-14)
        np.testing.assert_allclose(y[:, 1:], 0.0, atol=1e-14)

    def test_zero_channels_pure_noise_variance(self):
        rng = np.random.default_rng(1)
        book = PilotBook.dft(2, 2, power=1.0)
        noise_var = 0.5
        draws = [
            training_observation(
                np.zeros((2, GEOM.n_elements), dtype=complex), book, noise_var, rng
            )
            for _ in range(10_000)
        ]
        var = np.mean(np.abs(np.stack(draws)) ** 2)
        assert abs(var - noise_var) / noise_var < 0.05

    def test_mean_matches_signal_term(self):
        rng = np.random.default_rng(2)
        book = PilotBook.dft(3, 3, power=0.4)
        channels = [draw_user_channel(rayleigh_stats(), GEOM, rng) for _ in range(3)]
        signal = sum(
            np.sqrt(0.4) * np.outer(c.h, book.pilots[:, k].conj())
            for k, c in enumerate(channels)
        )
        mean = np.mean(
            [training_observation(channels, book, 0.2, rng) for _ in range(10_000)],
            axis=0,
        )
        assert np.linalg.norm(mean - signal) / np.linalg.norm(signal) < 0.02

    def test_dimension_mismatch_rejected(self):
        rng = np.random.default_rng(3)
        book = PilotBook.dft(3, 3, power=1.0)
        with pytest.raises(ValueError):
            training_observation(np.zeros((2, 4), dtype=complex), book, 0.1, rng)


class TestCorrelate:
    def test_orthonormal_noiseless_recovers_scaled_channel(self):
        rng = np.random.default_rng(4)
        book = PilotBook.dft(2, 2, power=0.09)
        channels = [draw_user_channel(rayleigh_stats(), GEOM, rng) for _ in range(2)]
        y = training_observation(channels, book, 0.0, rng)
        for k in range(2):
            np.testing.assert_allclose(
                correlate(y, book, k), 0.3 * channels[k].h, atol=1e-12
            )

    def test_identical_pilots_superpose(self):
        rng = np.random.default_rng(5)
        pilot = np.array([[1.0], [0.0]]) / 1.0
        book = PilotBook(
            pilots=np.hstack([pilot, pilot]), powers=np.array([0.25, 0.16])
        )
        channels = [draw_user_channel(rayleigh_stats(), GEOM, rng) for _ in range(2)]
        y = training_observation(channels, book, 0.0, rng)
        np.testing.assert_allclose(
            correlate(y, book, 0), 0.5 * channels[0].h + 0.4 * channels[1].h, atol=1e-12
        )

    def test_matches_triple_loop_oracle(self):
        rng = np.random.default_rng(6)
        book = PilotBook.dft(3, 3, power=1.0)
        y = rng.standard_normal((GEOM.n_elements, 3)) + 1j * rng.standard_normal(
            (GEOM.n_elements, 3)
        )
        for k in range(3):
            ref = np.zeros(GEOM.n_elements, dtype=complex)
            for a in range(GEOM.n_elements):
                for t in range(3):
                    ref[a] += y[a, t] * book.pilots[t, k]
            np.testing.assert_allclose(correlate(y, book, k), ref, atol=1e-12)

    def test_index_out_of_range(self):
        book = PilotBook.dft(2, 2, power=1.0)
        with pytest.raises(ValueError):
            correlate(np.zeros((4, 2), dtype=complex), book, 2)


class TestPmEstimate:
    def test_noiseless_orthonormal_is_exact(self):
        rng = np.random.default_rng(7)
        book = PilotBook.dft(2, 2, power=0.3)
        channels = [draw_user_channel(rayleigh_stats(), GEOM, rng) for _ in range(2)]
        y = training_observation(channels, book, 0.0, rng)
        for k in range(2):
            np.testing.assert_allclose(
                pm_estimate(correlate(y, book, k), 0.3), channels[k].h, atol=1e-12
            )

    def test_unit_power_is_identity(self):
        v = np.arange(4) + 1j
        np.testing.assert_allclose(pm_estimate(v, 1.0), v)

    def test_contaminated_estimate_algebra(self):
        rng = np.random.default_rng(8)
        pilot = np.array([[1.0], [0.0]])
        book = PilotBook(
            pilots=np.hstack([pilot, pilot]), powers=np.array([0.25, 0.09])
        )
        channels = [draw_user_channel(rayleigh_stats(), GEOM, rng) for _ in range(2)]
        y = training_observation(channels, book, 0.0, rng)
        h_hat = pm_estimate(correlate(y, book, 0), 0.25)
        ref = channels[0].h + np.sqrt(0.09 / 0.25) * channels[1].h
        np.testing.assert_allclose(h_hat, ref, atol=1e-12)

    def test_rejects_nonpositive_power(self):
        with pytest.raises(ValueError):
            pm_estimate(np.ones(2, dtype=complex), 0.0)


class TestLmmse:
    def test_orthonormal_rayleigh_scalar_shrinkage(self):
        beta, power, noise_var = 1.5, 0.2, 0.3
        book = PilotBook.dft(2, 2, power=power)
        stats = [rayleigh_stats(beta), rayleigh_stats(beta)]
        e_list, ry_list = lmmse_matrices(book, stats, GEOM, noise_var)
        shrink = np.sqrt(power) * beta / (power * beta + noise_var)
        for k in range(2):
            np.testing.assert_allclose(
                e_list[k], shrink * np.eye(GEOM.n_elements), atol=1e-12
            )
            np.testing.assert_allclose(
                ry_list[k],
                (power * beta + noise_var) * np.eye(GEOM.n_elements),
                atol=1e-12,
            )

    def test_ry_hermitian_with_noise_floor(self):
        book = PilotBook.dft(4, 2, power=0.1)
        stats = [
            ChannelStats(beta=1.0, kind=ChannelModelKind.RICE, angles=DIR, k_factor=2.0),
            rayleigh_stats(0.5),
            ChannelStats(beta=0.8, kind=ChannelModelKind.LOS, angles=DIR),
            rayleigh_stats(2.0),
        ]
        noise_var = 1e-3
        _, ry_list = lmmse_matrices(book, stats, GEOM, noise_var)
        for ry in ry_list:
            np.testing.assert_allclose(ry, ry.conj().T, atol=1e-12)
            assert np.min(np.linalg.eigvalsh(ry)) >= noise_var - 1e-9

    def test_orthogonal_pilots_ry_structure(self):
        book = PilotBook.dft(3, 3, power=0.25)
        stats = [rayleigh_stats(b) for b in (0.5, 1.0, 2.0)]
        _, ry_list = lmmse_matrices(book, stats, GEOM, 0.1)
        for k, s in enumerate(stats):
            ref = 0.25 * hbar_matrix(s, GEOM) + 0.1 * np.eye(GEOM.n_elements)
            np.testing.assert_allclose(ry_list[k], ref, atol=1e-12)

    def test_shrinkage_limit_in_noise(self):
        rng = np.random.default_rng(9)
        book = PilotBook.dft(1, 1, power=1.0)
        stats = [rayleigh_stats(1.0)]
        h = draw_user_channel(stats[0], GEOM, rng)
        y = training_observation([h], book, 0.05, rng)
        y_pk = correlate(y, book, 0)
        norms = [
            np.linalg.norm(lmmse_estimate(y_pk, 0, book, stats, GEOM, nv)[0])
            for nv in (0.1, 1.0, 10.0, 100.0, 1e4)
        ]
        assert all(a > b for a, b in zip(norms, norms[1:]))
        assert norms[-1] < 1e-2 * norms[0]

    def test_lmmse_mse_beats_pm(self):
        rng = np.random.default_rng(10)
        book = PilotBook.dft(2, 2, power=0.05)
        stats = [rayleigh_stats(1.0), rayleigh_stats(0.7)]
        noise_var = 0.2
        e_list, _ = lmmse_matrices(book, stats, GEOM, noise_var)
        mse_pm = mse_lmmse = 0.0
        n = 10_000
        for _ in range(n):
            channels = [draw_user_channel(s, GEOM, rng) for s in stats]
            y = training_observation(channels, book, noise_var, rng)
            y0 = correlate(y, book, 0)
            mse_pm += np.linalg.norm(pm_estimate(y0, 0.05) - channels[0].h) ** 2
            mse_lmmse += np.linalg.norm(e_list[0].conj().T @ y0 - channels[0].h) ** 2
        assert mse_lmmse < mse_pm

    def test_orthogonality_principle(self):
        rng = np.random.default_rng(11)
        book = PilotBook.dft(2, 2, power=0.1)
        stats = [rayleigh_stats(1.0), rayleigh_stats(0.4)]
        noise_var = 0.3
        e_list, _ = lmmse_matrices(book, stats, GEOM, noise_var)
        acc = np.zeros((GEOM.n_elements, GEOM.n_elements), dtype=complex)
        scale = 0.0
        n = 100_000
        batch = 10_000
        for _ in range(n // batch):
            h = np.stack(
                [
                    np.stack([draw_user_channel(s, GEOM, rng).h for s in stats])
                    for _ in range(batch)
                ]
            )  # (batch, K, N_A)
            noise = np.sqrt(noise_var / 2.0) * (
                rng.standard_normal((batch, GEOM.n_elements, 2))
                + 1j * rng.standard_normal((batch, GEOM.n_elements, 2))
            )
            y = np.einsum("k,bka,tk->bat", np.sqrt(book.powers), h, book.pilots.conj())
            y = y + noise
            y0 = np.einsum("bat,t->ba", y, book.pilots[:, 0])
            err = y0 @ np.conj(e_list[0]) - h[:, 0, :]
            acc += np.einsum("ba,bc->ac", err, y0.conj())
            scale += np.mean(np.abs(y0) ** 2) * batch
        assert np.linalg.norm(acc / n) < 0.03 * scale / n * GEOM.n_elements

    def test_single_user_pm_lmmse_collinear(self):
        rng = np.random.default_rng(12)
        book = PilotBook.dft(1, 1, power=0.3)
        stats = [rayleigh_stats(1.2)]
        h = draw_user_channel(stats[0], GEOM, rng)
        y = training_observation([h], book, 0.1, rng)
        y0 = correlate(y, book, 0)
        h_pm = pm_estimate(y0, 0.3)
        h_lm, _, _ = lmmse_estimate(y0, 0, book, stats, GEOM, 0.1)
        cos = abs(h_pm.conj() @ h_lm) / (np.linalg.norm(h_pm) * np.linalg.norm(h_lm))
        assert np.isclose(cos, 1.0, atol=1e-12)


class TestEstimateAll:
    def test_pm_and_lmmse_shapes_and_filters(self):
        rng = np.random.default_rng(13)
        book = PilotBook.dft(4, 2, power=0.1)
        stats = [rayleigh_stats(10.0 ** -(k + 1)) for k in range(4)]
        channels = [draw_user_channel(s, GEOM, rng) for s in stats]
        y = training_observation(channels, book, 1e-3, rng)
        out_pm = estimate_all(y, book, stats, GEOM, 1e-3, Estimator.PM)
        assert out_pm.estimates.shape == (4, GEOM.n_elements)
        assert out_pm.e_matrices is None
        out_lm = estimate_all(y, book, stats, GEOM, 1e-3, Estimator.LMMSE)
        assert out_lm.estimates.shape == (4, GEOM.n_elements)
        assert len(out_lm.e_matrices) == 4
        # Identical inputs give identical outputs.
        out_again = estimate_all(y, book, stats, GEOM, 1e-3, Estimator.LMMSE)
        np.testing.assert_array_equal(out_lm.estimates, out_again.estimates)
